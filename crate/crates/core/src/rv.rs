//! Random variables over the atoms of a finite event space, and their
//! statistics by summation over atomic events.

use std::fmt;

use crate::condval::{CanonCV, CvError};
use crate::events::EventSpace;
use crate::meadow::Rational;
use crate::probability::{Valuation, WeightPF};

/// The function `⟦X⟧` from atoms to values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomVariable {
    space: EventSpace,
    values: Vec<Rational>,
}

impl RandomVariable {
    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn at(&self, atom: usize) -> &Rational {
        &self.values[atom]
    }

    fn zip(&self, other: &RandomVariable, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<RandomVariable, CvError> {
        if self.space != other.space {
            return Err(CvError::SpaceMismatch(self.space.to_string(), other.space.to_string()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Ok(RandomVariable { space: self.space.clone(), values })
    }
}

impl fmt::Display for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .space
            .atom_names()
            .iter()
            .zip(&self.values)
            .map(|(a, v)| format!("{a}->{v}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn rv_of_cv(x: &CanonCV) -> RandomVariable {
    RandomVariable { space: x.space().clone(), values: x.values().to_vec() }
}

/// `Σ*_{α∈AE} f(α)`: the plain sum over a nonempty atom set, 0 otherwise.
pub fn sum_over_atoms(f: &[Rational]) -> Rational {
    f.iter().sum()
}

/// `Σ*_{α∈AE} ⟦X⟧(α)·P(α)`
pub fn e_rv(f: &RandomVariable, p: &WeightPF) -> Result<Rational, CvError> {
    if &f.space != p.space() {
        return Err(CvError::SpaceMismatch(f.space.to_string(), p.space().to_string()));
    }
    let terms: Vec<Rational> = f.values.iter().zip(p.weights()).map(|(v, w)| v * w).collect();
    Ok(sum_over_atoms(&terms))
}

pub fn var_rv(f: &RandomVariable, p: &WeightPF) -> Result<Rational, CvError> {
    let sq = f.zip(f, |a, b| a * b)?;
    Ok(e_rv(&sq, p)? - e_rv(f, p)?.square())
}

pub fn cov_rv(f: &RandomVariable, g: &RandomVariable, p: &WeightPF) -> Result<Rational, CvError> {
    let fg = f.zip(g, |a, b| a * b)?;
    Ok(e_rv(&fg, p)? - e_rv(f, p)? * e_rv(g, p)?)
}

pub fn corr2_rv(f: &RandomVariable, g: &RandomVariable, p: &WeightPF) -> Result<Rational, CvError> {
    Ok(cov_rv(f, g, p)?.square() * (var_rv(f, p)? * var_rv(g, p)?).inv())
}
