//! Guards (reduced affine constraint systems) and guard tables.

use std::collections::BTreeMap;
use std::fmt;

use super::poly::{Affine, Poly};
use super::FssError;
use crate::meadow::{Env, Rational};

/// How a guard constrains one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Point(Rational),
    Link(Affine),
}

/// A conjunction of affine equations in reduced row echelon form: each key
/// (pivot) equals its right-hand side, which mentions only non-pivot
/// variables ranked after the pivot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Guard {
    rows: BTreeMap<usize, Affine>,
}

impl Guard {
    pub fn empty() -> Self {
        Guard::default()
    }

    /// Solves `eqs` (each read as `e = 0`) with pivots chosen by lowest
    /// `rank`. `None` when the system is inconsistent.
    pub fn solve(eqs: impl IntoIterator<Item = Affine>, rank: &dyn Fn(usize) -> usize) -> Option<Guard> {
        let mut rows: BTreeMap<usize, Affine> = BTreeMap::new();
        for eq in eqs {
            let mut e = eq;
            for (p, rhs) in &rows {
                e = e.substitute(*p, rhs);
            }
            let Some(pivot) = e.vars().min_by_key(|v| rank(*v)) else {
                if e.constant.is_zero() {
                    continue;
                }
                return None;
            };
            let c = e.coeff(pivot);
            let mut rest = e.clone();
            rest.terms.remove(&pivot);
            let rhs = rest.scale(&(-c.inv()));
            for r in rows.values_mut() {
                *r = r.substitute(pivot, &rhs);
            }
            rows.insert(pivot, rhs);
        }
        Some(Guard { rows })
    }

    pub fn natural(eqs: impl IntoIterator<Item = Affine>) -> Option<Guard> {
        Guard::solve(eqs, &|v| v)
    }

    pub fn point(v: usize, c: Rational) -> Guard {
        Guard { rows: BTreeMap::from([(v, Affine::constant(c))]) }
    }

    /// The equations `pivot − rhs = 0`.
    pub fn equations(&self) -> Vec<Affine> {
        self.rows
            .iter()
            .map(|(p, rhs)| {
                let mut e = rhs.scale(&Rational::from_int(-1));
                e.terms.insert(*p, Rational::one());
                e
            })
            .collect()
    }

    pub fn and(&self, other: &Guard) -> Option<Guard> {
        Guard::natural(self.equations().into_iter().chain(other.equations()))
    }

    pub fn rows(&self) -> &BTreeMap<usize, Affine> {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn binding(&self, v: usize) -> Option<Binding> {
        self.rows.get(&v).map(|rhs| {
            if rhs.is_constant() {
                Binding::Point(rhs.constant.clone())
            } else {
                Binding::Link(rhs.clone())
            }
        })
    }

    /// Point values fixed by the guard.
    pub fn points(&self) -> BTreeMap<usize, Rational> {
        self.rows
            .iter()
            .filter(|(_, rhs)| rhs.is_constant())
            .map(|(v, rhs)| (*v, rhs.constant.clone()))
            .collect()
    }

    /// True when every one of `nvars` variables is bound to a point.
    pub fn is_point(&self, nvars: usize) -> bool {
        self.rows.len() == nvars && self.rows.values().all(Affine::is_constant)
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        self.rows.iter().all(|(v, rhs)| point[*v] == rhs.eval(point))
    }

    /// Rewrites `p` over the non-pivot variables.
    pub fn reduce(&self, p: &Poly) -> Poly {
        let mut out = p.clone();
        for (v, rhs) in &self.rows {
            out = out.substitute(*v, &rhs.to_poly());
        }
        out
    }

    /// Renames variable indices; `map[i]` is the new index of variable `i`.
    pub fn remap(&self, map: &[usize]) -> Option<Guard> {
        let eqs = self.equations().into_iter().map(|e| remap_affine(&e, map));
        Guard::natural(eqs)
    }

    pub fn display(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .rows
            .iter()
            .map(|(v, rhs)| format!("{}={}", names[*v], rhs.display(names)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

pub(crate) fn remap_affine(a: &Affine, map: &[usize]) -> Affine {
    Affine {
        terms: a.terms.iter().map(|(v, c)| (map[*v], c.clone())).collect(),
        constant: a.constant.clone(),
    }
}

pub(crate) fn remap_poly(p: &Poly, map: &[usize]) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        let mut term = Poly::constant(c.clone());
        for (v, e) in m {
            term = term.mul(&Poly::var(map[*v]).pow(*e));
        }
        out = out.add(&term);
    }
    out
}

/// A finite sum of guard-indicator × polynomial entries over named
/// variables, kept canonical: guards distinct, coefficients reduced modulo
/// their guard and nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GuardTable {
    vars: Vec<String>,
    entries: BTreeMap<Guard, Poly>,
}

impl GuardTable {
    pub fn new(vars: Vec<String>) -> Self {
        GuardTable { vars, entries: BTreeMap::new() }
    }

    pub fn constant(vars: Vec<String>, c: Rational) -> Self {
        let mut t = GuardTable::new(vars);
        t.insert(Guard::empty(), Poly::constant(c));
        t
    }

    pub fn poly(vars: Vec<String>, p: Poly) -> Self {
        let mut t = GuardTable::new(vars);
        t.insert(Guard::empty(), p);
        t
    }

    /// Indicator of the point `values` (one value per variable).
    pub fn point_mass(vars: Vec<String>, values: &[Rational], weight: Rational) -> Self {
        let eqs = values.iter().enumerate().map(|(i, c)| {
            let mut a = Affine::var(i);
            a.constant = -c.clone();
            a
        });
        let guard = Guard::natural(eqs).expect("distinct variables are consistent");
        let mut t = GuardTable::new(vars);
        t.insert(guard, Poly::constant(weight));
        t
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Guard, &Poly)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `coeff · 1[guard]`, merging with an identical guard.
    pub fn insert(&mut self, guard: Guard, coeff: Poly) {
        let coeff = guard.reduce(&coeff);
        if coeff.is_zero() {
            return;
        }
        let merged = match self.entries.remove(&guard) {
            Some(old) => old.add(&coeff),
            None => coeff,
        };
        if !merged.is_zero() {
            self.entries.insert(guard, merged);
        }
    }

    /// The closed value of a table without variables, or of a table that is
    /// a single unguarded constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.entries.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (g, p) = self.entries.iter().next().expect("one entry");
                if g.is_empty() {
                    p.as_constant()
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn same_vars(&self, other: &GuardTable) -> Result<(), FssError> {
        if self.vars == other.vars {
            Ok(())
        } else {
            Err(FssError::VariableMismatch(self.vars.join(","), other.vars.join(",")))
        }
    }

    pub fn add(&self, other: &GuardTable) -> Result<GuardTable, FssError> {
        self.same_vars(other)?;
        let mut out = self.clone();
        for (g, p) in &other.entries {
            out.insert(g.clone(), p.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> GuardTable {
        let mut out = GuardTable::new(self.vars.clone());
        for (g, p) in &self.entries {
            out.insert(g.clone(), p.scale(c));
        }
        out
    }

    pub fn neg(&self) -> GuardTable {
        self.scale(&Rational::from_int(-1))
    }

    pub fn sub(&self, other: &GuardTable) -> Result<GuardTable, FssError> {
        self.add(&other.neg())
    }

    /// Indicator algebra: `1[G₁]·1[G₂] = 1[G₁ ∧ G₂]`; unsatisfiable
    /// conjunctions vanish.
    pub fn mul(&self, other: &GuardTable) -> Result<GuardTable, FssError> {
        self.same_vars(other)?;
        let mut out = GuardTable::new(self.vars.clone());
        for (g1, p1) in &self.entries {
            for (g2, p2) in &other.entries {
                if let Some(g) = g1.and(g2) {
                    out.insert(g, p1.mul(p2));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_poly(&self, p: &Poly) -> GuardTable {
        let mut out = GuardTable::new(self.vars.clone());
        for (g, c) in &self.entries {
            out.insert(g.clone(), c.mul(p));
        }
        out
    }

    pub fn eval_at(&self, point: &[Rational]) -> Rational {
        self.entries
            .iter()
            .filter(|(g, _)| g.holds(point))
            .map(|(_, p)| p.eval(point))
            .sum()
    }

    pub fn eval(&self, env: &Env) -> Result<Rational, FssError> {
        let point = self
            .vars
            .iter()
            .map(|v| env.get(v).cloned().ok_or_else(|| FssError::UnboundVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.eval_at(&point))
    }

    /// Re-expresses the table over `vars`, which must contain every current
    /// variable.
    pub fn widen(&self, vars: &[String]) -> Result<GuardTable, FssError> {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w == v)
                    .ok_or_else(|| FssError::UnboundVariable(v.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut out = GuardTable::new(vars.to_vec());
        for (g, p) in &self.entries {
            let g = g.remap(&map).expect("renaming preserves consistency");
            out.insert(g, remap_poly(p, &map));
        }
        Ok(out)
    }

    /// Every constant appearing in a point binding, per variable.
    pub fn point_constants(&self) -> Vec<Vec<Rational>> {
        let mut out = vec![Vec::new(); self.vars.len()];
        for g in self.entries.keys() {
            for (v, c) in g.points() {
                if !out[v].contains(&c) {
                    out[v].push(c);
                }
            }
        }
        for cs in &mut out {
            cs.sort();
        }
        out
    }

    /// For tables whose entries all pin every variable: the support points
    /// with their (constant) values, in guard order.
    pub fn point_values(&self) -> Option<Vec<(Vec<Rational>, Rational)>> {
        let n = self.vars.len();
        self.entries
            .iter()
            .map(|(g, p)| {
                if !g.is_point(n) {
                    return None;
                }
                let pts = g.points();
                let coords: Vec<Rational> = (0..n).map(|i| pts[&i].clone()).collect();
                Some((coords, p.as_constant()?))
            })
            .collect()
    }

    /// Parses point lines `(c₁,…,cₙ) -> value` separated by newlines or `;`.
    pub fn from_points(vars: Vec<String>, text: &str) -> Result<GuardTable, FssError> {
        let mut out = GuardTable::new(vars.clone());
        for line in text.split(['\n', ';']) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || FssError::BadLiteral(line.to_string());
            let (lhs, rhs) = line.split_once("->").ok_or_else(bad)?;
            let lhs = lhs.trim();
            let inner = lhs.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(lhs);
            let coords: Vec<Rational> = inner
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            if coords.len() != vars.len() {
                return Err(bad());
            }
            let value: Rational = rhs.trim().parse().map_err(|_| bad())?;
            let add = GuardTable::point_mass(vars.clone(), &coords, value);
            out = out.add(&add)?;
        }
        Ok(out)
    }
}

impl fmt::Display for GuardTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(g, p)| format!("{} -> {}", g.display(&self.vars), p.display(&self.vars)))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn gt_eval(f: &GuardTable, point: &Env) -> Result<Rational, FssError> {
    f.eval(point)
}

pub fn gt_add(f: &GuardTable, g: &GuardTable) -> Result<GuardTable, FssError> {
    f.add(g)
}

pub fn gt_mul(f: &GuardTable, g: &GuardTable) -> Result<GuardTable, FssError> {
    f.mul(g)
}

pub fn gt_scale(f: &GuardTable, c: &Rational) -> GuardTable {
    f.scale(c)
}
