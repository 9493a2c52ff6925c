//! Regularization (`ρ_k`) and step-size (`σ_k`) sequences.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type SequenceFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// `ρ_k`: must be nonincreasing with a positive limit.
#[derive(Clone)]
pub enum RhoSchedule {
    Constant(f64),
    /// Explicit prefix; the last value is held for all later `k`.
    Sequence(Vec<f64>),
    Custom(SequenceFn),
}

impl fmt::Debug for RhoSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoSchedule::Constant(r) => f.debug_tuple("Constant").field(r).finish(),
            RhoSchedule::Sequence(v) => f.debug_tuple("Sequence").field(v).finish(),
            RhoSchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl RhoSchedule {
    pub fn sequence(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSchedule("empty rho sequence".into()));
        }
        for (k, &v) in values.iter().enumerate() {
            check_positive("rho", k, v)?;
            if k > 0 && v > values[k - 1] {
                return Err(Error::InvalidSchedule(format!(
                    "rho increases from {} to {v} at k = {k}",
                    values[k - 1]
                )));
            }
        }
        Ok(RhoSchedule::Sequence(values))
    }

    fn raw(&self, k: usize) -> f64 {
        match self {
            RhoSchedule::Constant(r) => *r,
            RhoSchedule::Sequence(v) => v[k.min(v.len() - 1)],
            RhoSchedule::Custom(g) => g(k),
        }
    }

    /// `ρ_k`, checked positive and no larger than `ρ_{k−1}`.
    pub fn at(&self, k: usize) -> Result<f64> {
        let v = self.raw(k);
        check_positive("rho", k, v)?;
        if k > 0 {
            let prev = self.raw(k - 1);
            if v > prev {
                return Err(Error::InvalidSchedule(format!(
                    "rho increases from {prev} to {v} at k = {k}"
                )));
            }
        }
        Ok(v)
    }
}

/// `σ_k`: positive, with `Σσ_k = ∞` and `Σσ_k² < ∞`.
#[derive(Clone)]
pub enum SigmaSchedule {
    /// `σ_k = c / (k + 1)`.
    Harmonic(f64),
    Custom(SequenceFn),
}

impl fmt::Debug for SigmaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaSchedule::Harmonic(c) => f.debug_tuple("Harmonic").field(c).finish(),
            SigmaSchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl SigmaSchedule {
    pub fn at(&self, k: usize) -> Result<f64> {
        let v = match self {
            SigmaSchedule::Harmonic(c) => c / (k as f64 + 1.0),
            SigmaSchedule::Custom(g) => g(k),
        };
        check_positive("sigma", k, v)?;
        Ok(v)
    }
}

fn check_positive(what: &str, k: usize, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(format!("{what}_{k} = {v} is not positive")))
    }
}

pub fn sigma_at(schedule: &SigmaSchedule, k: usize) -> Result<f64> {
    schedule.at(k)
}

pub fn rho_at(schedule: &RhoSchedule, k: usize) -> Result<f64> {
    schedule.at(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        assert_eq!(sigma_at(&SigmaSchedule::Harmonic(1.0), 0).unwrap(), 1.0);
        assert_eq!(sigma_at(&SigmaSchedule::Harmonic(2.0), 3).unwrap(), 0.5);
        assert_eq!(sigma_at(&SigmaSchedule::Harmonic(1.5), 1).unwrap(), 0.75);
        assert!(sigma_at(&SigmaSchedule::Harmonic(0.0), 0).is_err());
    }

    #[test]
    fn constant_rho() {
        assert_eq!(rho_at(&RhoSchedule::Constant(1.0), 7).unwrap(), 1.0);
        assert_eq!(rho_at(&RhoSchedule::Constant(0.4), 10).unwrap(), 0.4);
    }

    #[test]
    fn rho_sequences_must_not_increase() {
        let ok = RhoSchedule::sequence(vec![1.0, 0.9, 0.9]).unwrap();
        assert_eq!(ok.at(0).unwrap(), 1.0);
        assert_eq!(ok.at(2).unwrap(), 0.9);
        assert_eq!(ok.at(50).unwrap(), 0.9);
        assert!(matches!(
            RhoSchedule::sequence(vec![0.9, 1.0]),
            Err(Error::InvalidSchedule(_))
        ));
        let custom = RhoSchedule::Custom(Arc::new(|k| if k == 3 { 2.0 } else { 1.0 }));
        assert!(custom.at(2).is_ok());
        assert!(matches!(custom.at(3), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn custom_sigma_checked_positive() {
        let s = SigmaSchedule::Custom(Arc::new(|k| 1.0 - k as f64));
        assert!(s.at(0).is_ok());
        assert!(s.at(1).is_err());
    }
}
