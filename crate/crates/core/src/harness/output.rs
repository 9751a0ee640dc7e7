//! CSV writers. Floats use Rust's shortest round-trip formatting so output is
//! byte-stable across runs and platforms.

use std::io::{self, Write};

use super::sweep::{CompareRow, SweepRow};

pub const SWEEP_HEADER: &str = "epsilon,n,x,estimate,reference,abs_error,std_error";
pub const DENSITY_HEADER: &str = "x,estimate,std_error,reference";
pub const COMPARE_HEADER: &str = "estimator,n,epsilon,mse,bias,variance";

/// One line of the density table; `reference` is empty when unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub x: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(w: &mut impl Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.epsilon, r.n, r.x, r.estimate, r.reference, r.abs_error, r.std_error
        )?;
    }
    Ok(())
}

pub fn write_density_csv(w: &mut impl Write, rows: &[DensityRow]) -> io::Result<()> {
    writeln!(w, "{DENSITY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.x,
            r.estimate,
            r.std_error,
            opt(r.reference)
        )?;
    }
    Ok(())
}

pub fn write_compare_csv(w: &mut impl Write, rows: &[CompareRow]) -> io::Result<()> {
    writeln!(w, "{COMPARE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.estimator,
            r.n,
            opt(r.epsilon),
            r.mse,
            r.bias,
            r.variance
        )?;
    }
    Ok(())
}
