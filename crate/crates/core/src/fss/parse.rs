//! Translation of meadow terms into guard tables.
//!
//! A term is expanded into a sum of monomials, each a polynomial times a
//! list of zero indicators and a list of opaque factors (sign, inverse of a
//! non-constant). Indicators `0_p` are classified as
//!
//! * `p` constant: always or never,
//! * `p` affine: one equation,
//! * `p` univariate: its rational roots (a disjunction of points),
//! * `p` a sum of squares: the conjunction of the summands' indicators.
//!
//! Opaque factors are resolved once the guard pins their variables.

use std::collections::BTreeSet;

use super::poly::{rational_roots, Affine, Poly};
use super::sum::fss;
use super::table::{remap_affine, remap_poly, Guard, GuardTable};
use super::FssError;
use crate::meadow::{Env, Rational, Term};

#[derive(Debug, Clone)]
struct Mono {
    poly: Poly,
    eqs: Vec<Affine>,
    zeros: Vec<Term>,
    opaque: Vec<Term>,
}

impl Mono {
    fn constant(c: Rational) -> Self {
        Mono { poly: Poly::constant(c), eqs: Vec::new(), zeros: Vec::new(), opaque: Vec::new() }
    }

    fn times(&self, other: &Mono) -> Mono {
        let mut out = self.clone();
        out.poly = out.poly.mul(&other.poly);
        out.eqs.extend(other.eqs.iter().cloned());
        out.zeros.extend(other.zeros.iter().cloned());
        out.opaque.extend(other.opaque.iter().cloned());
        out
    }

    fn scaled(mut self, c: &Rational) -> Mono {
        self.poly = self.poly.scale(c);
        self
    }
}

fn unsupported(t: &Term, reason: &str) -> FssError {
    FssError::Unsupported { term: t.to_string(), reason: reason.to_string() }
}

fn expand(t: &Term, vars: &[String]) -> Result<Vec<Mono>, FssError> {
    if let Some(p) = t.as_zero_indicator() {
        let mut m = Mono::constant(Rational::one());
        m.zeros.push(p.clone());
        return Ok(vec![m]);
    }
    if let Some(p) = t.as_one_indicator() {
        let mut z = Mono::constant(Rational::from_int(-1));
        z.zeros.push(p.clone());
        return Ok(vec![Mono::constant(Rational::one()), z]);
    }
    Ok(match t {
        Term::Const(c) => vec![Mono::constant(c.clone())],
        Term::Var(v) => {
            let i = vars
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| FssError::UnboundVariable(v.clone()))?;
            let mut m = Mono::constant(Rational::one());
            m.poly = Poly::var(i);
            vec![m]
        }
        Term::Add(a, b) => {
            let mut out = expand(a, vars)?;
            out.extend(expand(b, vars)?);
            out
        }
        Term::Neg(a) => {
            let minus = Rational::from_int(-1);
            expand(a, vars)?.into_iter().map(|m| m.scaled(&minus)).collect()
        }
        Term::Mul(a, b) => {
            let left = expand(a, vars)?;
            let right = expand(b, vars)?;
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    out.push(l.times(r));
                }
            }
            out
        }
        Term::Inv(_) | Term::Sign(_) => {
            if t.is_closed() && !t.contains_binder() {
                vec![Mono::constant(t.eval(&Env::new())?)]
            } else {
                let mut m = Mono::constant(Rational::one());
                m.opaque.push(t.clone());
                vec![m]
            }
        }
        Term::Sum(bound, body) => {
            let inner_vars = binder_vars(bound, body);
            let inner = gt_parse(body, &inner_vars)?;
            let summed = fss(&inner, bound)?;
            table_monos(&summed, vars)?
        }
    })
}

/// Variable order for the body of a summation: the bound variables, then
/// the remaining free variables in name order.
pub(crate) fn binder_vars(bound: &[String], body: &Term) -> Vec<String> {
    let mut out: Vec<String> = bound.to_vec();
    for v in body.free_vars() {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn table_monos(t: &GuardTable, vars: &[String]) -> Result<Vec<Mono>, FssError> {
    let map: Vec<usize> = t
        .vars()
        .iter()
        .map(|v| vars.iter().position(|w| w == v).ok_or_else(|| FssError::UnboundVariable(v.clone())))
        .collect::<Result<_, _>>()?;
    Ok(t.entries()
        .map(|(g, p)| Mono {
            poly: remap_poly(p, &map),
            eqs: g.equations().iter().map(|e| remap_affine(e, &map)).collect(),
            zeros: Vec::new(),
            opaque: Vec::new(),
        })
        .collect())
}

enum ZeroClass {
    Always,
    Never,
    Eqs(Affine),
    Roots(usize, Vec<Rational>),
    Conj(Vec<Term>),
    /// Not decidable yet; may become so once more variables are pinned.
    Pending,
}

fn sum_of_squares(t: &Term) -> Option<Vec<Term>> {
    fn summands<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
        match t {
            Term::Add(a, b) if t.as_zero_indicator().is_none() => {
                summands(a, out);
                summands(b, out);
            }
            _ => out.push(t),
        }
    }
    let mut parts = Vec::new();
    summands(t, &mut parts);
    parts
        .into_iter()
        .map(|s| match s {
            Term::Mul(a, b) if a == b => Some(a.as_ref().clone()),
            _ => None,
        })
        .collect()
}

fn pure_poly(t: &Term, vars: &[String]) -> Result<Option<Poly>, FssError> {
    let monos = expand(t, vars)?;
    let mut out = Poly::zero();
    for m in monos {
        if !(m.zeros.is_empty() && m.opaque.is_empty() && m.eqs.is_empty()) {
            return Ok(None);
        }
        out = out.add(&m.poly);
    }
    Ok(Some(out))
}

fn classify_zero(t: &Term, vars: &[String]) -> Result<ZeroClass, FssError> {
    if t.is_closed() && !t.contains_binder() {
        return Ok(if t.eval(&Env::new())?.is_zero() { ZeroClass::Always } else { ZeroClass::Never });
    }
    if let Some(parts) = sum_of_squares(t) {
        return Ok(ZeroClass::Conj(parts));
    }
    let Some(p) = pure_poly(t, vars)? else {
        return Ok(ZeroClass::Pending);
    };
    if let Some(c) = p.as_constant() {
        return Ok(if c.is_zero() { ZeroClass::Always } else { ZeroClass::Never });
    }
    if let Some(a) = p.as_affine() {
        return Ok(ZeroClass::Eqs(a));
    }
    let vs = p.vars();
    if vs.len() == 1 {
        let v = *vs.iter().next().expect("one variable");
        let coeffs = p.univariate(v).expect("univariate");
        let roots = rational_roots(&coeffs).expect("nonconstant polynomial");
        return Ok(match roots.len() {
            0 => ZeroClass::Never,
            _ => ZeroClass::Roots(v, roots),
        });
    }
    Ok(ZeroClass::Pending)
}

fn point_eq(v: usize, c: &Rational) -> Affine {
    let mut a = Affine::var(v);
    a.constant = -c.clone();
    a
}

fn settle(mut m: Mono, vars: &[String], out: &mut Vec<(Guard, Poly)>) -> Result<(), FssError> {
    loop {
        let Some(guard) = Guard::natural(m.eqs.iter().cloned()) else {
            return Ok(());
        };
        let env: Env = guard.points().into_iter().map(|(v, c)| (vars[v].clone(), c)).collect();

        let mut progressed = false;
        let mut i = 0;
        while i < m.zeros.len() {
            let t = m.zeros[i].substitute(&env);
            match classify_zero(&t, vars)? {
                ZeroClass::Pending => i += 1,
                ZeroClass::Always => {
                    m.zeros.remove(i);
                    progressed = true;
                }
                ZeroClass::Never => return Ok(()),
                ZeroClass::Eqs(e) => {
                    m.zeros.remove(i);
                    m.eqs.push(e);
                    progressed = true;
                }
                ZeroClass::Conj(parts) => {
                    m.zeros.remove(i);
                    m.zeros.extend(parts);
                    progressed = true;
                }
                ZeroClass::Roots(v, roots) => {
                    m.zeros.remove(i);
                    for r in roots {
                        let mut branch = m.clone();
                        branch.eqs.push(point_eq(v, &r));
                        settle(branch, vars, out)?;
                    }
                    return Ok(());
                }
            }
        }
        if progressed {
            continue;
        }

        let mut j = 0;
        while j < m.opaque.len() {
            let t = m.opaque[j].substitute(&env);
            if t.is_closed() && !t.contains_binder() {
                let c = t.eval(&Env::new())?;
                m.poly = m.poly.scale(&c);
                m.opaque.remove(j);
                progressed = true;
            } else {
                j += 1;
            }
        }
        if progressed {
            continue;
        }

        if let Some(z) = m.zeros.first() {
            return Err(unsupported(&Term::zero_of(z.clone()), "indicator argument is not a supported pattern"));
        }
        if let Some(o) = m.opaque.first() {
            return Err(unsupported(o, "factor depends on variables not pinned by the guard"));
        }
        out.push((guard, m.poly));
        return Ok(());
    }
}

/// Canonical guard table of `term` over `vars`.
pub fn gt_parse(term: &Term, vars: &[String]) -> Result<GuardTable, FssError> {
    let distinct: BTreeSet<&String> = vars.iter().collect();
    if distinct.len() != vars.len() {
        return Err(FssError::VariableMismatch(vars.join(","), "distinct variables".into()));
    }
    let mut entries = Vec::new();
    for m in expand(term, vars)? {
        settle(m, vars, &mut entries)?;
    }
    let mut t = GuardTable::new(vars.to_vec());
    for (g, p) in entries {
        t.insert(g, p);
    }
    Ok(t)
}

/// Parses `src` as a term and builds its table over its free variables (or
/// `vars` when given).
pub fn gt_parse_str(src: &str, vars: &[&str]) -> Result<GuardTable, FssError> {
    let term = crate::meadow::parse_term(src).map_err(|e| FssError::Syntax(e.to_string()))?;
    let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
    gt_parse(&term, &vars)
}
