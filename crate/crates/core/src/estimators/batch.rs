use crate::calculus::{ErrorQuad, ErrorTriple};
use crate::error::{Error, Result};

/// Independent draws of an [`ErrorTriple`]; non-finite draws are dropped and
/// counted.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleBatch {
    samples: Vec<ErrorTriple>,
    invalid_count: usize,
}

impl TripleBatch {
    pub fn new(samples: Vec<ErrorTriple>, invalid_count: usize) -> Result<Self> {
        let mut valid = Vec::with_capacity(samples.len());
        let mut invalid = invalid_count;
        let mut dim = None;
        for s in samples {
            if !s.is_finite() {
                invalid += 1;
                continue;
            }
            match dim {
                None => dim = Some(s.dim()),
                Some(d) if d != s.dim() => {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: s.dim(),
                    })
                }
                _ => {}
            }
            valid.push(s);
        }
        Ok(Self {
            samples: valid,
            invalid_count: invalid,
        })
    }

    /// Collects draws, counting errors as invalid samples.
    pub fn from_results(draws: impl IntoIterator<Item = Result<ErrorTriple>>) -> Result<Self> {
        let mut samples = Vec::new();
        let mut invalid = 0;
        for d in draws {
            match d {
                Ok(t) => samples.push(t),
                Err(_) => invalid += 1,
            }
        }
        Self::new(samples, invalid)
    }

    pub fn samples(&self) -> &[ErrorTriple] {
        &self.samples
    }

    pub fn invalid_count(&self) -> usize {
        self.invalid_count
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(ErrorTriple::dim)
    }
}

/// Independent draws of a scalar [`ErrorQuad`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadBatch {
    samples: Vec<ErrorQuad>,
    invalid_count: usize,
}

impl QuadBatch {
    pub fn new(samples: Vec<ErrorQuad>, invalid_count: usize) -> Self {
        let total = samples.len();
        let samples: Vec<ErrorQuad> = samples.into_iter().filter(ErrorQuad::is_finite).collect();
        let invalid_count = invalid_count + total - samples.len();
        Self {
            samples,
            invalid_count,
        }
    }

    pub fn from_results(draws: impl IntoIterator<Item = Result<ErrorQuad>>) -> Self {
        let mut samples = Vec::new();
        let mut invalid = 0;
        for d in draws {
            match d {
                Ok(q) => samples.push(q),
                Err(_) => invalid += 1,
            }
        }
        Self::new(samples, invalid)
    }

    pub fn samples(&self) -> &[ErrorQuad] {
        &self.samples
    }

    pub fn invalid_count(&self) -> usize {
        self.invalid_count
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Every sample with `A[X]` offset by `delta`.
    pub fn with_shifted_a(&self, delta: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|q| q.with_shifted_a(delta))
                .collect(),
            invalid_count: self.invalid_count,
        }
    }

    pub fn to_triples(&self) -> TripleBatch {
        TripleBatch {
            samples: self.samples.iter().map(|q| q.triple().clone()).collect(),
            invalid_count: self.invalid_count,
        }
    }

    /// Splits into the first `⌊len/2⌋` samples and the rest.
    pub fn halves(&self) -> (&[ErrorQuad], &[ErrorQuad]) {
        self.samples.split_at(self.samples.len() / 2)
    }
}

/// A density estimate at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub x: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
    /// Valid samples in the batch (`N − invalid_count`).
    pub n_used: usize,
    /// Samples the estimator itself had to leave out (degenerate kernel,
    /// vanishing `Γ`).
    pub n_skipped: usize,
    pub epsilon: Option<f64>,
}

impl DensityEstimate {
    pub fn x1(&self) -> f64 {
        self.x[0]
    }

    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.value - reference;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}
