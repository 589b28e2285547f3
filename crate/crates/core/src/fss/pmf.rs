//! Finitely supported probability mass functions as guard tables, with the
//! moments computed literally through finite support summation.

use std::fmt;

use super::poly::Poly;
use super::sum::{fss, indicator};
use super::table::{Guard, GuardTable};
use super::FssError;
use crate::meadow::Rational;

/// Why a table is not a finitely supported PMF.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotPmf {
    MassNotOne(Rational),
    NegativeValue(Vec<Rational>, Rational),
    InfiniteSupport,
    NonConstantCoefficient,
}

impl fmt::Display for NotPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotPmf::MassNotOne(m) => write!(f, "mass {m} is not 1"),
            NotPmf::NegativeValue(pt, v) => {
                let coords: Vec<String> = pt.iter().map(Rational::to_string).collect();
                write!(f, "negative value {v} at ({})", coords.join(","))
            }
            NotPmf::InfiniteSupport => write!(f, "infinite support"),
            NotPmf::NonConstantCoefficient => write!(f, "non-constant coefficient"),
        }
    }
}

/// A table whose entries pin every variable to a point, with nonnegative
/// constant values summing to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmfView {
    table: GuardTable,
}

impl PmfView {
    pub fn table(&self) -> &GuardTable {
        &self.table
    }

    pub fn vars(&self) -> &[String] {
        self.table.vars()
    }

    /// Support points with their probabilities, in canonical order.
    pub fn points(&self) -> Vec<(Vec<Rational>, Rational)> {
        self.table.point_values().expect("a PMF table only has point entries")
    }

    pub fn prob(&self, point: &[Rational]) -> Rational {
        self.table.eval_at(point)
    }

    /// Builds a PMF from `(point, weight)` pairs; equal points accumulate.
    pub fn from_points(
        vars: Vec<String>,
        points: impl IntoIterator<Item = (Vec<Rational>, Rational)>,
    ) -> Result<PmfView, NotPmf> {
        let mut t = GuardTable::new(vars.clone());
        for (pt, w) in points {
            t = t
                .add(&GuardTable::point_mass(vars.clone(), &pt, w))
                .expect("same variables");
        }
        is_pmf(&t)
    }
}

impl fmt::Display for PmfView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.table.fmt(f)
    }
}

/// Checks the finitely supported PMF conditions: nonnegative values and
/// `Σ*` over all variables equal to 1.
pub fn is_pmf(f: &GuardTable) -> Result<PmfView, NotPmf> {
    let n = f.vars().len();
    for (g, p) in f.entries() {
        if !g.is_point(n) {
            return Err(if p.as_constant().is_some() {
                NotPmf::InfiniteSupport
            } else {
                NotPmf::NonConstantCoefficient
            });
        }
    }
    let points = f.point_values().ok_or(NotPmf::NonConstantCoefficient)?;
    for (pt, v) in &points {
        if v.is_negative() {
            return Err(NotPmf::NegativeValue(pt.clone(), v.clone()));
        }
    }
    let mass = fss(f, f.vars())
        .ok()
        .and_then(|t| t.as_constant())
        .ok_or(NotPmf::InfiniteSupport)?;
    if !mass.is_one() {
        return Err(NotPmf::MassNotOne(mass));
    }
    Ok(PmfView { table: f.clone() })
}

/// Sums out every variable not listed in `kept` (strictly increasing
/// indices).
pub fn marginalise(g: &PmfView, kept: &[usize]) -> Result<PmfView, FssError> {
    let n = g.vars().len();
    let valid = !kept.is_empty() && kept.windows(2).all(|w| w[0] < w[1]) && kept.iter().all(|i| *i < n);
    if !valid {
        return Err(FssError::BadIndices(kept.to_vec()));
    }
    let dropped: Vec<String> = (0..n)
        .filter(|i| !kept.contains(i))
        .map(|i| g.vars()[i].clone())
        .collect();
    let table = fss(&g.table, &dropped)?;
    Ok(PmfView { table })
}

fn coordinates(g: &PmfView, i: usize) -> Vec<Rational> {
    let mut cs: Vec<Rational> = g.points().into_iter().map(|(p, _)| p[i].clone()).collect();
    cs.sort();
    cs.dedup();
    cs
}

/// `G(x,y) = G₁(x)·G₂(y)` on the grid of support coordinates (both sides
/// vanish elsewhere).
pub fn is_independent(g: &PmfView) -> Result<bool, FssError> {
    if g.vars().len() != 2 {
        return Err(FssError::BadIndices((0..g.vars().len()).collect()));
    }
    let g1 = marginalise(g, &[0])?;
    let g2 = marginalise(g, &[1])?;
    for x in coordinates(g, 0) {
        for y in coordinates(g, 1) {
            let joint = g.prob(&[x.clone(), y.clone()]);
            let prod = g1.prob(std::slice::from_ref(&x)) * g2.prob(std::slice::from_ref(&y));
            if joint != prod {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn sum_all(t: &GuardTable) -> Rational {
    fss(t, t.vars())
        .ok()
        .and_then(|r| r.as_constant())
        .expect("point tables are summable to a constant")
}

/// `Σ*_x x·F(x)`
pub fn e_pmf(f: &PmfView) -> Rational {
    sum_all(&f.table.mul_poly(&Poly::var(0)))
}

/// `Σ*_x x²·F(x) − E(F)²`
pub fn var_pmf(f: &PmfView) -> Rational {
    let x = Poly::var(0);
    sum_all(&f.table.mul_poly(&x.mul(&x))) - e_pmf(f).square()
}

/// `Σ*_{x,y} x·y·G(x,y) − E(G₁)·E(G₂)`
pub fn cov_pmf(g: &PmfView) -> Result<Rational, FssError> {
    let g1 = marginalise(g, &[0])?;
    let g2 = marginalise(g, &[1])?;
    let xy = Poly::var(0).mul(&Poly::var(1));
    Ok(sum_all(&g.table.mul_poly(&xy)) - e_pmf(&g1) * e_pmf(&g2))
}

/// `COV² / (VAR₁·VAR₂)` with totalized division.
pub fn corr2_pmf(g: &PmfView) -> Result<Rational, FssError> {
    let g1 = marginalise(g, &[0])?;
    let g2 = marginalise(g, &[1])?;
    let cov = cov_pmf(g)?;
    Ok(cov.square() * (var_pmf(&g1) * var_pmf(&g2)).inv())
}

/// The context `s[t] = 1_{Σ*_x 1_t} ◁ (Σ*_x(t + 0_x) − Σ*_x t) ▷ 1`, as a
/// table over the variables of `t` other than `x`.
pub fn emptiness(t: &GuardTable, x: &str) -> Result<GuardTable, FssError> {
    let xi = t.var_index(x).ok_or_else(|| FssError::NotAVariable(x.to_string()))?;
    let summed = [x.to_string()];
    let mut zero_x = GuardTable::new(t.vars().to_vec());
    zero_x.insert(Guard::point(xi, Rational::zero()), Poly::one());

    let count = indicator(&fss(&indicator(t, true)?, &summed)?, true)?;
    let gap = fss(&t.add(&zero_x)?, &summed)?.sub(&fss(t, &summed)?)?;
    let rest = count.vars().to_vec();
    let one = GuardTable::constant(rest, Rational::one());
    // x ◁ y ▷ z = 1_y·x + 0_y·z
    count.mul(&indicator(&gap, true)?)?.add(&indicator(&gap, false)?.mul(&one)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fss::gt_parse_str;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn joint(text: &str) -> PmfView {
        is_pmf(&GuardTable::from_points(vec!["x".into(), "y".into()], text).unwrap()).unwrap()
    }

    #[test]
    fn fair_die() {
        let src = (1..=6).map(|i| format!("0(x-{i})*1/6")).collect::<Vec<_>>().join(" + ");
        let f = is_pmf(&gt_parse_str(&src, &["x"]).unwrap()).unwrap();
        assert_eq!(e_pmf(&f), q("7/2"));
        assert_eq!(var_pmf(&f), q("35/12"));
    }

    #[test]
    fn rational_sensitivity_example() {
        let t = "1/4*0(x^2-2)*((1+s(x))*x + (1-s(x))*(2-x))";
        let f = gt_parse_str(t, &["x"]).unwrap();
        assert_eq!(is_pmf(&f), Err(NotPmf::MassNotOne(q("0"))));
        let g = gt_parse_str(&format!("{t} + 0x"), &["x"]).unwrap();
        let view = is_pmf(&g).unwrap();
        assert_eq!(view.points(), vec![(vec![q("0")], q("1"))]);
    }

    #[test]
    fn rejection_reasons() {
        let vars = vec!["x".to_string()];
        let neg = GuardTable::from_points(vars.clone(), "(0) -> 2; (1) -> -1").unwrap();
        assert!(matches!(is_pmf(&neg), Err(NotPmf::NegativeValue(..))));
        let inf = gt_parse_str("1", &["x"]).unwrap();
        assert_eq!(is_pmf(&inf), Err(NotPmf::InfiniteSupport));
        let poly = gt_parse_str("x", &["x"]).unwrap();
        assert_eq!(is_pmf(&poly), Err(NotPmf::NonConstantCoefficient));
    }

    #[test]
    fn diagonal_joint() {
        let g = joint("(0,0) -> 1/2; (1,1) -> 1/2");
        let g1 = marginalise(&g, &[0]).unwrap();
        assert_eq!(g1.points(), vec![(vec![q("0")], q("1/2")), (vec![q("1")], q("1/2"))]);
        assert!(!is_independent(&g).unwrap());
        assert_eq!(cov_pmf(&g).unwrap(), q("1/4"));
        assert_eq!(corr2_pmf(&g).unwrap(), q("1"));
        assert_eq!(marginalise(&g, &[0, 1]).unwrap(), g);
        assert!(marginalise(&g, &[1, 0]).is_err());
    }

    #[test]
    fn independence_cases() {
        let g = joint("(0,0) -> 1/4; (0,1) -> 1/4; (1,0) -> 1/4; (1,1) -> 1/4");
        assert!(is_independent(&g).unwrap());
        let point = joint("(3,4) -> 1");
        assert!(is_independent(&point).unwrap());
        assert_eq!(corr2_pmf(&point).unwrap(), q("0"));
    }
}
