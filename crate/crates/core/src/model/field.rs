use crate::error::{Error, Result};

/// What a field represents, which decides its admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Cell density `n`, nonnegative.
    Density,
    /// Signal concentration `c`, confined to `[0, γ]`.
    Signal { gamma_bits: u64 },
    /// Anything else (sources, screening coefficients, test data).
    Plain,
}

impl FieldKind {
    pub fn signal(gamma: f64) -> Self {
        FieldKind::Signal {
            gamma_bits: gamma.to_bits(),
        }
    }
}

/// Cell-centered values on a grid. The grid itself is passed alongside the
/// field to every operation; `values.len()` must equal the grid's cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

/// Slack allowed when checking the sign and range invariants.
pub const RANGE_SLACK: f64 = 1e-12;

impl ScalarField {
    pub fn new(kind: FieldKind, values: Vec<f64>) -> Self {
        Self { kind, values }
    }

    pub fn density(values: Vec<f64>) -> Self {
        Self::new(FieldKind::Density, values)
    }

    pub fn signal(gamma: f64, values: Vec<f64>) -> Self {
        Self::new(FieldKind::signal(gamma), values)
    }

    pub fn plain(values: Vec<f64>) -> Self {
        Self::new(FieldKind::Plain, values)
    }

    pub fn constant(kind: FieldKind, len: usize, value: f64) -> Self {
        Self::new(kind, vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks finiteness and the range implied by `kind`.
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("cell {k} holds {}", self.values[k])));
        }
        match self.kind {
            FieldKind::Density => {
                let m = self.min();
                if m < -RANGE_SLACK {
                    return Err(Error::InvalidInput(format!("density has negative value {m:e}")));
                }
            }
            FieldKind::Signal { gamma_bits } => {
                let gamma = f64::from_bits(gamma_bits);
                let (lo, hi) = (self.min(), self.max());
                if lo < -RANGE_SLACK || hi > gamma + RANGE_SLACK {
                    return Err(Error::InvalidInput(format!(
                        "signal range [{lo:e}, {hi:e}] leaves [0, {gamma}]"
                    )));
                }
            }
            FieldKind::Plain => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_checks() {
        assert!(ScalarField::density(vec![0.0, 1.0]).validate().is_ok());
        assert!(ScalarField::density(vec![-1e-9, 1.0]).validate().is_err());
        assert!(ScalarField::density(vec![-1e-13, 1.0]).validate().is_ok());
        assert!(ScalarField::signal(2.0, vec![0.0, 2.0]).validate().is_ok());
        assert!(ScalarField::signal(2.0, vec![0.0, 2.1]).validate().is_err());
        assert!(ScalarField::plain(vec![f64::NAN]).validate().is_err());
    }
}
