//! Finite support summation over guard tables.
//!
//! The parameters (non-summed variables) are split into regions: each
//! parameter is either fixed to one of finitely many critical constants or
//! ranges over everything else. Within a region the set of active entries
//! and the finiteness of the support do not change, so the sum is a single
//! polynomial in the unfixed parameters. Critical constants come from point
//! guards on parameters, from parameter values where two positive-dimensional
//! entries coincide, and from values where a coefficient vanishes on its
//! guard. The regions are finally reassembled into a canonical table by
//! inclusion–exclusion over the fixed parameters.

use std::collections::{BTreeMap, BTreeSet};

use super::poly::{rational_roots, Affine, Poly};
use super::table::{Guard, GuardTable};
use super::FssError;
use crate::meadow::Rational;

struct Prepared {
    param_points: BTreeMap<usize, Rational>,
    /// Summed pivot → rhs over free summed variables and parameters.
    rows: BTreeMap<usize, Affine>,
    free: BTreeSet<usize>,
    coeff: Poly,
}

type Region = Vec<Option<Rational>>;

enum Outcome {
    Value(Poly),
    NeedMore(Vec<(usize, Rational)>),
}

fn unsupported(what: String, reason: &str) -> FssError {
    FssError::Unsupported { term: what, reason: reason.to_string() }
}

fn prepare(f: &GuardTable, summed: &BTreeSet<usize>) -> Result<Vec<Prepared>, FssError> {
    let n = f.vars().len();
    let rank = |v: usize| if summed.contains(&v) { v } else { n + v };
    let mut out = Vec::new();
    for (g, p) in f.entries() {
        let g2 = Guard::solve(g.equations(), &rank).expect("a satisfiable guard stays satisfiable");
        let mut param_points = BTreeMap::new();
        let mut rows = BTreeMap::new();
        for (pivot, rhs) in g2.rows() {
            if summed.contains(pivot) {
                rows.insert(*pivot, rhs.clone());
            } else if rhs.is_constant() {
                param_points.insert(*pivot, rhs.constant.clone());
            } else {
                return Err(unsupported(
                    format!("{}={}", f.vars()[*pivot], rhs.display(f.vars())),
                    "guard links free variables to each other",
                ));
            }
        }
        let free = summed.iter().copied().filter(|v| !rows.contains_key(v)).collect();
        out.push(Prepared { param_points, rows, free, coeff: g2.reduce(p) });
    }
    Ok(out)
}

fn split_affine(a: &Affine, free: &BTreeSet<usize>) -> (BTreeMap<usize, Rational>, Affine) {
    let mut dir = BTreeMap::new();
    let mut off = Affine::constant(a.constant.clone());
    for (v, c) in &a.terms {
        if free.contains(v) {
            dir.insert(*v, c.clone());
        } else {
            off.terms.insert(*v, c.clone());
        }
    }
    (dir, off)
}

fn fix_affine(a: &Affine, fixed: &BTreeMap<usize, Rational>) -> Affine {
    let mut out = a.clone();
    for (v, c) in fixed {
        out = out.substitute(*v, &Affine::constant(c.clone()));
    }
    out
}

type GroupKey = (Vec<usize>, Vec<BTreeMap<usize, Rational>>);

fn analyze(
    entries: &[Prepared],
    summed: &BTreeSet<usize>,
    params: &[usize],
    region: &Region,
    critical: &BTreeMap<usize, BTreeSet<Rational>>,
    names: &[String],
) -> Result<Outcome, FssError> {
    let fixed: BTreeMap<usize, Rational> = params
        .iter()
        .zip(region)
        .filter_map(|(p, v)| v.clone().map(|c| (*p, c)))
        .collect();
    let mut value = Poly::zero();
    let mut groups: BTreeMap<GroupKey, Vec<(Vec<Affine>, Poly)>> = BTreeMap::new();
    for e in entries {
        let active = e.param_points.iter().all(|(p, c)| fixed.get(p) == Some(c));
        if !active {
            continue;
        }
        let coeff = e.coeff.substitute_values(&fixed);
        if e.free.is_empty() {
            value = value.add(&coeff);
            continue;
        }
        let mut dirs = Vec::new();
        let mut offs = Vec::new();
        for rhs in e.rows.values() {
            let (d, o) = split_affine(&fix_affine(rhs, &fixed), &e.free);
            dirs.push(d);
            offs.push(o);
        }
        let key = (e.rows.keys().copied().collect(), dirs);
        let list = groups.entry(key).or_default();
        match list.iter_mut().find(|(o, _)| *o == offs) {
            Some((_, c)) => *c = c.add(&coeff),
            None => list.push((offs, coeff)),
        }
    }

    let mut need: Vec<(usize, Rational)> = Vec::new();
    let push_need = |p: usize, c: Rational, need: &mut Vec<(usize, Rational)>| {
        if !critical.get(&p).is_some_and(|s| s.contains(&c)) && !need.contains(&(p, c.clone())) {
            need.push((p, c));
        }
    };

    // Parameter values where two distinct parallel subspaces coincide.
    for list in groups.values() {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let diffs = list[i].0.iter().zip(&list[j].0).map(|(a, b)| {
                    let mut d = a.clone();
                    d.add_scaled(b, &Rational::from_int(-1));
                    d
                });
                let Some(g) = Guard::natural(diffs) else { continue };
                for (p, rhs) in g.rows() {
                    if !rhs.is_constant() {
                        return Err(unsupported(
                            format!("{}={}", names[*p], rhs.display(names)),
                            "summation regions depend on a relation between parameters",
                        ));
                    }
                    push_need(*p, rhs.constant.clone(), &mut need);
                }
            }
        }
    }
    if !need.is_empty() {
        return Ok(Outcome::NeedMore(need));
    }

    let mut infinite = false;
    for (key, list) in &groups {
        let free: BTreeSet<usize> = summed.iter().copied().filter(|v| !key.0.contains(v)).collect();
        for (_, coeff) in list {
            if coeff.is_zero() {
                continue;
            }
            let parts = coeff.coefficients_in(&free);
            if parts.values().any(|c| c.as_constant().is_some_and(|k| !k.is_zero())) {
                infinite = true;
                continue;
            }
            let vars: BTreeSet<usize> = parts.values().flat_map(Poly::vars).collect();
            if vars.len() != 1 {
                return Err(unsupported(
                    coeff.display(names),
                    "cannot decide where the coefficient vanishes",
                ));
            }
            let p = *vars.iter().next().expect("one parameter");
            let mut common: Option<Vec<Rational>> = None;
            for c in parts.values() {
                let roots = rational_roots(&c.univariate(p).expect("univariate")).unwrap_or_default();
                common = Some(match common {
                    None => roots,
                    Some(prev) => prev.into_iter().filter(|r| roots.contains(r)).collect(),
                });
            }
            for r in common.unwrap_or_default() {
                push_need(p, r, &mut need);
            }
            infinite = true;
        }
    }
    if !need.is_empty() {
        return Ok(Outcome::NeedMore(need));
    }
    Ok(Outcome::Value(if infinite { Poly::zero() } else { value }))
}

fn regions(params: &[usize], critical: &BTreeMap<usize, BTreeSet<Rational>>) -> Vec<Region> {
    let mut out: Vec<Region> = vec![Vec::new()];
    for p in params {
        let mut options: Vec<Option<Rational>> = vec![None];
        if let Some(cs) = critical.get(p) {
            options.extend(cs.iter().cloned().map(Some));
        }
        let mut next = Vec::with_capacity(out.len() * options.len());
        for r in &out {
            for o in &options {
                let mut r2 = r.clone();
                r2.push(o.clone());
                next.push(r2);
            }
        }
        out = next;
    }
    out
}

/// Region values of `f` summed over `summed` (possibly none).
fn region_values(
    f: &GuardTable,
    summed: &BTreeSet<usize>,
    extra: &BTreeMap<usize, BTreeSet<Rational>>,
) -> Result<(Vec<usize>, BTreeMap<Region, Poly>), FssError> {
    let entries = prepare(f, summed)?;
    let params: Vec<usize> = (0..f.vars().len()).filter(|v| !summed.contains(v)).collect();
    let mut critical = extra.clone();
    for e in &entries {
        for (p, c) in &e.param_points {
            critical.entry(*p).or_default().insert(c.clone());
        }
    }
    'restart: loop {
        let mut values = BTreeMap::new();
        for r in regions(&params, &critical) {
            match analyze(&entries, summed, &params, &r, &critical, f.vars())? {
                Outcome::Value(v) => {
                    values.insert(r, v);
                }
                Outcome::NeedMore(more) => {
                    for (p, c) in more {
                        critical.entry(p).or_default().insert(c);
                    }
                    continue 'restart;
                }
            }
        }
        return Ok((params, values));
    }
}

/// Rebuilds a canonical table over `params` from per-region polynomials.
fn assemble(names: &[String], params: &[usize], values: &BTreeMap<Region, Poly>) -> GuardTable {
    let new_index: BTreeMap<usize, usize> = params.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let out_vars: Vec<String> = params.iter().map(|p| names[*p].clone()).collect();
    let mut out = GuardTable::new(out_vars);
    for region in values.keys() {
        let fixed: Vec<usize> = (0..params.len()).filter(|i| region[*i].is_some()).collect();
        let mut coeff = Poly::zero();
        for mask in 0u64..(1u64 << fixed.len()) {
            // J = fixed positions whose bit is set; the rest become OTHER.
            let mut sub = region.clone();
            let mut dropped = BTreeMap::new();
            for (bit, &i) in fixed.iter().enumerate() {
                if mask >> bit & 1 == 0 {
                    sub[i] = None;
                    dropped.insert(params[i], region[i].clone().expect("fixed"));
                }
            }
            let v = values[&sub].substitute_values(&dropped);
            let sign = if dropped.len() % 2 == 0 { Rational::one() } else { Rational::from_int(-1) };
            coeff = coeff.add(&v.scale(&sign));
        }
        let eqs = fixed.iter().map(|&i| {
            let mut a = Affine::var(i);
            a.constant = -region[i].clone().expect("fixed");
            a
        });
        let guard = Guard::natural(eqs).expect("distinct variables");
        let mut renamed = Poly::zero();
        for (m, c) in coeff.terms() {
            let mut t = Poly::constant(c.clone());
            for (v, e) in m {
                t = t.mul(&Poly::var(new_index[v]).pow(*e));
            }
            renamed = renamed.add(&t);
        }
        out.insert(guard, renamed);
    }
    out
}

fn summed_indices(f: &GuardTable, summed: &[String]) -> Result<BTreeSet<usize>, FssError> {
    summed
        .iter()
        .map(|s| f.var_index(s).ok_or_else(|| FssError::NotAVariable(s.clone())))
        .collect()
}

/// `Σ*` over the variables `summed`: the sum of all instances when only
/// finitely many are nonzero, and 0 otherwise. The result ranges over the
/// remaining variables, in their original order.
pub fn fss(f: &GuardTable, summed: &[String]) -> Result<GuardTable, FssError> {
    let summed = summed_indices(f, summed)?;
    let (params, values) = region_values(f, &summed, &BTreeMap::new())?;
    Ok(assemble(f.vars(), &params, &values))
}

/// Pointwise `1_t` (`one = true`) or `0_t` of a table.
pub fn indicator(f: &GuardTable, one: bool) -> Result<GuardTable, FssError> {
    let none = BTreeSet::new();
    let mut extra: BTreeMap<usize, BTreeSet<Rational>> = BTreeMap::new();
    loop {
        let (params, values) = region_values(f, &none, &extra)?;
        // A non-constant region value must be split at its roots.
        let mut grew = false;
        for (r, v) in &values {
            if v.as_constant().is_some() {
                continue;
            }
            let vars = v.vars();
            if vars.len() != 1 {
                return Err(unsupported(v.display(f.vars()), "cannot decide where the value vanishes"));
            }
            let p = *vars.iter().next().expect("one variable");
            let i = params.iter().position(|q| *q == p).expect("parameter");
            if r[i].is_some() {
                continue;
            }
            for root in rational_roots(&v.univariate(p).expect("univariate")).unwrap_or_default() {
                grew |= extra.entry(p).or_default().insert(root);
            }
        }
        if grew {
            continue;
        }
        let mapped: BTreeMap<Region, Poly> = values
            .into_iter()
            .map(|(r, v)| {
                let nonzero = v.as_constant().is_none_or(|c| !c.is_zero());
                let bit = if nonzero == one { Rational::one() } else { Rational::zero() };
                (r, Poly::constant(bit))
            })
            .collect();
        return Ok(assemble(f.vars(), &params, &mapped));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fss::{emptiness, gt_parse_str};

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn sum_str(src: &str, vars: &[&str], summed: &[&str]) -> GuardTable {
        let t = gt_parse_str(src, vars).unwrap();
        let summed: Vec<String> = summed.iter().map(|s| s.to_string()).collect();
        fss(&t, &summed).unwrap()
    }

    fn closed(src: &str, vars: &[&str], summed: &[&str]) -> Rational {
        sum_str(src, vars, summed).as_constant().unwrap()
    }

    #[test]
    fn bivariate_separation() {
        let t = "0x*0y + 0(1-x)";
        assert_eq!(closed(t, &["x", "y"], &["x", "y"]), q("0"));
        let inner = sum_str(t, &["x", "y"], &["y"]);
        assert_eq!(inner.to_string(), "{x=0} -> 1");
        assert_eq!(fss(&inner, &["x".to_string()]).unwrap().as_constant(), Some(q("1")));
    }

    #[test]
    fn univariate_facts() {
        assert_eq!(closed("0", &["x"], &["x"]), q("0"));
        assert_eq!(closed("1", &["x"], &["x"]), q("0"));
        assert_eq!(closed("0x", &["x"], &["x"]), q("1"));
        assert_eq!(closed("1x", &["x"], &["x"]), q("0"));
    }

    #[test]
    fn point_extraction_with_parameter() {
        let r = sum_str("x*0(t-x)", &["x", "t"], &["x"]);
        assert_eq!(r.vars(), &["t".to_string()]);
        assert_eq!(r.to_string(), "{} -> t");
    }

    #[test]
    fn parameter_dependent_support() {
        // Σ*_x 0_{x−t}·t: for every t the support is the single point x = t.
        let r = sum_str("t*0(x-t)", &["x", "t"], &["x"]);
        assert_eq!(r.to_string(), "{} -> t");
        // Σ*_y (0_x + 0_y): the 0_x part is nonzero for every y when x = 0.
        let r = sum_str("0x + 0y", &["x", "y"], &["y"]);
        assert_eq!(r.to_string(), "{} -> 1; {x=0} -> -1");
        // Coefficient t vanishes at t = 0, where the support becomes empty.
        let r = sum_str("t + 0x", &["x", "t"], &["x"]);
        assert_eq!(r.to_string(), "{t=0} -> 1");
    }

    #[test]
    fn coinciding_lines_cancel() {
        // 0_{x−t} − 0_x over (x, y), summed over both: each term is a line in
        // the y direction; they cancel exactly when t = 0.
        let r = sum_str("0(x-t) - 0x", &["x", "y", "t"], &["x", "y"]);
        assert_eq!(r.to_string(), "0");
        let r = sum_str("0(x-t)*0y + 0(x-t) - 0x", &["x", "y", "t"], &["x", "y"]);
        assert_eq!(r.to_string(), "{t=0} -> 1");
    }

    #[test]
    fn indicator_tables() {
        let t = gt_parse_str("x*0(x^2-1) + 2*0(x-3)", &["x"]).unwrap();
        let one = indicator(&t, true).unwrap();
        assert_eq!(one.to_string(), "{x=-1} -> 1; {x=1} -> 1; {x=3} -> 1");
        let t = gt_parse_str("x", &["x"]).unwrap();
        assert_eq!(indicator(&t, false).unwrap().to_string(), "{x=0} -> 1");
    }

    #[test]
    fn emptiness_detector() {
        let cases = [("0", 0), ("1", 1), ("0x", 1), ("3*0(x-2) + 0(x+1)", 1), ("0(x^2-2)", 0), ("1x", 1)];
        for (src, expect) in cases {
            let t = gt_parse_str(src, &["x"]).unwrap();
            let s = emptiness(&t, "x").unwrap();
            assert_eq!(s.as_constant(), Some(Rational::from_int(expect)), "{src}");
        }
    }
}
