//! Sparse multivariate polynomials and affine forms with rational
//! coefficients. Variables are indices into a table's variable list.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::meadow::Rational;

/// `Σ coeff_v · v + constant`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Affine {
    pub terms: BTreeMap<usize, Rational>,
    pub constant: Rational,
}

impl Affine {
    pub fn constant(c: Rational) -> Self {
        Affine { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(v, Rational::one());
        Affine { terms, constant: Rational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: usize) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_default()
    }

    pub fn add_scaled(&mut self, other: &Affine, k: &Rational) {
        for (v, c) in &other.terms {
            let e = self.terms.entry(*v).or_default();
            *e += &(c * k);
            if e.is_zero() {
                self.terms.remove(v);
            }
        }
        self.constant += &(&other.constant * k);
    }

    pub fn scale(&self, k: &Rational) -> Affine {
        let mut out = Affine::default();
        out.add_scaled(self, k);
        out
    }

    /// Replaces `v` by `by`.
    pub fn substitute(&self, v: usize, by: &Affine) -> Affine {
        match self.terms.get(&v) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut out = self.clone();
                out.terms.remove(&v);
                out.add_scaled(by, &c);
                out
            }
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms.iter().fold(self.constant.clone(), |acc, (v, c)| acc + c * &point[*v])
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::constant(self.constant.clone());
        for (v, c) in &self.terms {
            p = p.add(&Poly::var(*v).scale(c));
        }
        p
    }

    pub fn display(&self, names: &[String]) -> String {
        self.to_poly().display(names)
    }
}

/// A monomial: sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(usize, u32)>;

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut m: BTreeMap<usize, u32> = a.iter().copied().collect();
    for (v, e) in b {
        *m.entry(*v).or_insert(0) += e;
    }
    m.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn var(v: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(v, 1)], Rational::one());
        Poly { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        let e = self.terms.entry(m.clone()).or_default();
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(&Rational::from_int(-1))
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::one(), |acc, _| acc.mul(self))
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| *v)).collect()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|(_, e)| e).sum()).max().unwrap_or(0)
    }

    /// Replaces variable `v` by the polynomial `by`.
    pub fn substitute(&self, v: usize, by: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut rest = Vec::new();
            let mut power = 0;
            for (w, e) in m {
                if *w == v {
                    power = *e;
                } else {
                    rest.push((*w, *e));
                }
            }
            let mut term = Poly { terms: BTreeMap::from([(rest, c.clone())]) };
            if power > 0 {
                term = term.mul(&by.pow(power));
            }
            out = out.add(&term);
        }
        out
    }

    /// Substitutes every variable bound in `values`.
    pub fn substitute_values(&self, values: &BTreeMap<usize, Rational>) -> Poly {
        let mut out = self.clone();
        for (v, c) in values {
            out = out.substitute(*v, &Poly::constant(c.clone()));
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(c.clone(), |acc, (v, e)| acc * point[*v].pow(*e)))
            .sum()
    }

    /// Affine form when the degree is at most one.
    pub fn as_affine(&self) -> Option<Affine> {
        let mut a = Affine::default();
        for (m, c) in &self.terms {
            match m.as_slice() {
                [] => a.constant = c.clone(),
                [(v, 1)] => {
                    a.terms.insert(*v, c.clone());
                }
                _ => return None,
            }
        }
        Some(a)
    }

    /// Coefficients `[a₀, a₁, …]` when the polynomial mentions only `v`.
    pub fn univariate(&self, v: usize) -> Option<Vec<Rational>> {
        let mut coeffs = vec![Rational::zero(); self.degree() as usize + 1];
        for (m, c) in &self.terms {
            match m.as_slice() {
                [] => coeffs[0] = c.clone(),
                [(w, e)] if *w == v => coeffs[*e as usize] = c.clone(),
                _ => return None,
            }
        }
        Some(coeffs)
    }

    /// Splits into `Σ_m m · c_m(rest)` where `m` ranges over monomials in
    /// `vars` and each `c_m` only mentions the other variables.
    pub fn coefficients_in(&self, vars: &BTreeSet<usize>) -> BTreeMap<Monomial, Poly> {
        let mut out: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (inside, outside): (Monomial, Monomial) = m.iter().partition(|(v, _)| vars.contains(v));
            let e = out.entry(inside).or_default();
            e.add_term(outside, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn display(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        // Constant last, higher-degree monomials first.
        let mut items: Vec<(&Monomial, &Rational)> = self.terms.iter().collect();
        items.sort_by(|a, b| {
            let da: u32 = a.0.iter().map(|(_, e)| e).sum();
            let db: u32 = b.0.iter().map(|(_, e)| e).sum();
            db.cmp(&da).then_with(|| a.0.cmp(b.0))
        });
        for (i, (m, c)) in items.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .iter()
                .map(|(v, e)| if *e == 1 { names[*v].clone() } else { format!("{}^{e}", names[*v]) })
                .collect();
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else if mag.is_one() {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format!("{mag}*{}", factors.join("*")));
            }
        }
        out
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            small.push(d.clone());
            let q = &n / &d;
            if q != d {
                large.push(q);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Distinct rational roots of `Σ coeffs[i]·xⁱ`, ascending. `None` for the
/// zero polynomial (every value is a root).
pub fn rational_roots(coeffs: &[Rational]) -> Option<Vec<Rational>> {
    let mut coeffs: Vec<Rational> = coeffs.to_vec();
    while coeffs.last().is_some_and(Rational::is_zero) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        return None;
    }
    let mut roots = Vec::new();
    let low = coeffs.iter().position(|c| !c.is_zero()).expect("nonzero polynomial");
    if low > 0 {
        roots.push(Rational::zero());
        coeffs.drain(..low);
    }
    if coeffs.len() > 1 {
        let lcm = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = coeffs
            .iter()
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect();
        let lead = ints.last().expect("nonempty");
        let tail = &ints[0];
        for p in divisors(tail) {
            for q in divisors(lead) {
                for sign in [1, -1] {
                    let r = Rational::from_big(&p * sign, q.clone()).expect("q > 0");
                    let value: Rational = coeffs
                        .iter()
                        .rev()
                        .fold(Rational::zero(), |acc, c| acc * &r + c);
                    if value.is_zero() && !roots.contains(&r) {
                        roots.push(r);
                    }
                }
            }
        }
    }
    roots.sort();
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn roots_of_quadratics() {
        // x² − 2 has no rational roots
        assert_eq!(rational_roots(&[q("-2"), q("0"), q("1")]), Some(vec![]));
        // (2x − 1)(x + 3) = 2x² + 5x − 3
        assert_eq!(rational_roots(&[q("-3"), q("5"), q("2")]), Some(vec![q("-3"), q("1/2")]));
        // x³ − x
        assert_eq!(rational_roots(&[q("0"), q("-1"), q("0"), q("1")]), Some(vec![q("-1"), q("0"), q("1")]));
        assert_eq!(rational_roots(&[q("0")]), None);
        assert_eq!(rational_roots(&[q("5")]), Some(vec![]));
        // x/3 − 1/6
        assert_eq!(rational_roots(&[q("-1/6"), q("1/3")]), Some(vec![q("1/2")]));
    }

    #[test]
    fn substitution_and_evaluation() {
        let x = Poly::var(0);
        let y = Poly::var(1);
        let p = x.mul(&x).add(&y.scale(&q("3")));
        let s = p.substitute(0, &y.add(&Poly::one()));
        let pt = [q("7"), q("2")];
        // (y+1)² + 3y at y = 2
        assert_eq!(s.eval(&pt), q("15"));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn display_orders_by_degree() {
        let names = vec!["x".to_string(), "y".to_string()];
        let p = Poly::var(0).mul(&Poly::var(1)).scale(&q("2")).add(&Poly::constant(q("1/2")));
        assert_eq!(p.display(&names), "2*x*y + 1/2");
        assert_eq!(Poly::var(1).neg().display(&names), "-y");
    }
}
