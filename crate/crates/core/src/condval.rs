//! Conditional values: expressions over guarded meadow values, their
//! atom-vector semantics, flat forms, expectation and derived statistics,
//! and PMF extraction.
//!
//! Grammar:
//!
//! ```text
//! cv      := prod (('+' | '-') prod)*
//! prod    := unary ('*' unary)*
//! unary   := '-' unary | postfix
//! postfix := atom ('^' '-1' | '^' '2')*
//! atom    := 'v' '(' term ')' | 'cond' '(' cv ',' event ',' cv ')'
//!          | event ':->' postfix | '(' cv ')' | IDENT
//! ```
//!
//! A bare identifier not followed by `:->` names a previously defined CV.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::events::{eval_event, event_expr, Event, EventError, EventExpr, EventSpace};
use crate::fss::{is_independent, FssError, PmfView};
use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};
use crate::meadow::{parse_term_expr, Env, MeadowError, Rational, Term};
use crate::probability::{Valuation, WeightPF};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CvError {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Meadow(#[from] MeadowError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Fss(#[from] FssError),
    #[error("value term '{0}' has free variables")]
    OpenTerm(String),
    #[error("unknown conditional value '{0}'")]
    UnknownCv(String),
    #[error("conditional values live on different spaces ({0} vs {1})")]
    SpaceMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CVExpr {
    Val(Term),
    Guard(EventExpr, Box<CVExpr>),
    Add(Box<CVExpr>, Box<CVExpr>),
    Neg(Box<CVExpr>),
    Mul(Box<CVExpr>, Box<CVExpr>),
    Inv(Box<CVExpr>),
    Square(Box<CVExpr>),
    /// `X ◁ e ▷ Y`
    Cond3(Box<CVExpr>, EventExpr, Box<CVExpr>),
    Ref(String),
}

impl CVExpr {
    pub fn val(c: Rational) -> CVExpr {
        CVExpr::Val(Term::Const(c))
    }

    pub fn guard(e: EventExpr, x: CVExpr) -> CVExpr {
        CVExpr::Guard(e, Box::new(x))
    }

    pub fn add(a: CVExpr, b: CVExpr) -> CVExpr {
        CVExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn neg(a: CVExpr) -> CVExpr {
        CVExpr::Neg(Box::new(a))
    }

    pub fn mul(a: CVExpr, b: CVExpr) -> CVExpr {
        CVExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn inv(a: CVExpr) -> CVExpr {
        CVExpr::Inv(Box::new(a))
    }

    pub fn square(a: CVExpr) -> CVExpr {
        CVExpr::Square(Box::new(a))
    }

    pub fn cond3(x: CVExpr, e: EventExpr, y: CVExpr) -> CVExpr {
        CVExpr::Cond3(Box::new(x), e, Box::new(y))
    }

    fn prec(&self) -> u8 {
        match self {
            CVExpr::Add(..) => 1,
            CVExpr::Mul(..) => 2,
            CVExpr::Neg(..) => 3,
            CVExpr::Guard(..) => 4,
            CVExpr::Inv(..) | CVExpr::Square(..) => 5,
            _ => 6,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            CVExpr::Val(t) => write!(f, "v({t})")?,
            CVExpr::Guard(e, x) => {
                let ev = match e {
                    EventExpr::Or(..) | EventExpr::And(..) => format!("({e})"),
                    _ => e.to_string(),
                };
                write!(f, "{ev} :-> ")?;
                x.fmt_prec(f, 5)?;
            }
            CVExpr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                match &**b {
                    CVExpr::Neg(inner) => {
                        f.write_str(" - ")?;
                        inner.fmt_prec(f, 2)?;
                    }
                    _ => {
                        f.write_str(" + ")?;
                        b.fmt_prec(f, 2)?;
                    }
                }
            }
            CVExpr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("*")?;
                b.fmt_prec(f, 3)?;
            }
            CVExpr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_prec(f, 3)?;
            }
            CVExpr::Inv(a) => {
                a.fmt_prec(f, 5)?;
                f.write_str("^-1")?;
            }
            CVExpr::Square(a) => {
                a.fmt_prec(f, 5)?;
                f.write_str("^2")?;
            }
            CVExpr::Cond3(x, e, y) => write!(f, "cond({x}, {e}, {y})")?,
            CVExpr::Ref(n) => f.write_str(n)?,
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for CVExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

pub fn parse_cv(input: &str) -> Result<CVExpr, SyntaxError> {
    let toks = tokenize(input)?;
    let mut cur = Cursor::new(&toks, input.chars().count() + 1);
    let x = cv_expr(&mut cur)?;
    cur.expect_end()?;
    Ok(x)
}

pub fn cv_expr(cur: &mut Cursor<'_>) -> Result<CVExpr, SyntaxError> {
    let mut acc = cv_prod(cur)?;
    loop {
        if cur.eat(&Tok::Plus) {
            acc = CVExpr::add(acc, cv_prod(cur)?);
        } else if cur.eat(&Tok::Minus) {
            acc = CVExpr::add(acc, CVExpr::neg(cv_prod(cur)?));
        } else {
            return Ok(acc);
        }
    }
}

fn cv_prod(cur: &mut Cursor<'_>) -> Result<CVExpr, SyntaxError> {
    let mut acc = cv_unary(cur)?;
    while cur.eat(&Tok::Star) {
        acc = CVExpr::mul(acc, cv_unary(cur)?);
    }
    Ok(acc)
}

fn cv_unary(cur: &mut Cursor<'_>) -> Result<CVExpr, SyntaxError> {
    if cur.eat(&Tok::Minus) {
        return Ok(CVExpr::neg(cv_unary(cur)?));
    }
    cv_postfix(cur)
}

pub(crate) fn cv_postfix(cur: &mut Cursor<'_>) -> Result<CVExpr, SyntaxError> {
    let mut x = cv_atom(cur)?;
    while cur.eat(&Tok::Caret) {
        let col = cur.col();
        if cur.eat(&Tok::Minus) {
            match cur.bump() {
                Some(Tok::Int(s)) if s == "1" => x = CVExpr::inv(x),
                _ => return Err(SyntaxError::new(col, "expected '^-1' or '^2'")),
            }
        } else {
            match cur.bump() {
                Some(Tok::Int(s)) if s == "2" => x = CVExpr::square(x),
                _ => return Err(SyntaxError::new(col, "expected '^-1' or '^2'")),
            }
        }
    }
    Ok(x)
}

fn cv_atom(cur: &mut Cursor<'_>) -> Result<CVExpr, SyntaxError> {
    if cur.is_keyword("v") && cur.peek_at(1) == Some(&Tok::LParen) {
        cur.bump();
        cur.bump();
        let t = parse_term_expr(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(CVExpr::Val(t));
    }
    if cur.is_keyword("cond") && cur.peek_at(1) == Some(&Tok::LParen) {
        cur.bump();
        cur.bump();
        let x = cv_expr(cur)?;
        cur.expect(&Tok::Comma)?;
        let e = event_expr(cur)?;
        cur.expect(&Tok::Comma)?;
        let y = cv_expr(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(CVExpr::cond3(x, e, y));
    }
    let start = cur.pos();
    if let Ok(e) = event_expr(cur) {
        if cur.eat(&Tok::Guard) {
            return Ok(CVExpr::guard(e, cv_postfix(cur)?));
        }
    }
    cur.reset(start);
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.bump();
            let x = cv_expr(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(x)
        }
        Some(Tok::Ident(n)) => {
            let n = n.clone();
            cur.bump();
            Ok(CVExpr::Ref(n))
        }
        _ => Err(cur.error("expected a conditional value")),
    }
}

/// A conditional value as its vector of values at the atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonCV {
    space: EventSpace,
    values: Vec<Rational>,
}

impl CanonCV {
    pub fn new(space: &EventSpace, values: Vec<Rational>) -> Result<CanonCV, CvError> {
        if values.len() != space.atom_count() {
            return Err(CvError::SpaceMismatch(
                space.to_string(),
                format!("{} values", values.len()),
            ));
        }
        Ok(CanonCV { space: space.clone(), values })
    }

    pub fn constant(space: &EventSpace, c: Rational) -> CanonCV {
        CanonCV { space: space.clone(), values: vec![c; space.atom_count()] }
    }

    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn at(&self, atom: usize) -> &Rational {
        &self.values[atom]
    }

    fn check(&self, other: &CanonCV) -> Result<(), CvError> {
        if self.space != other.space {
            return Err(CvError::SpaceMismatch(self.space.to_string(), other.space.to_string()));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(&Rational) -> Rational) -> CanonCV {
        CanonCV { space: self.space.clone(), values: self.values.iter().map(f).collect() }
    }

    fn zip(&self, other: &CanonCV, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<CanonCV, CvError> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Ok(CanonCV { space: self.space.clone(), values })
    }

    pub fn add(&self, other: &CanonCV) -> Result<CanonCV, CvError> {
        self.zip(other, |a, b| a + b)
    }

    pub fn neg(&self) -> CanonCV {
        self.map(|a| -a.clone())
    }

    pub fn mul(&self, other: &CanonCV) -> Result<CanonCV, CvError> {
        self.zip(other, |a, b| a * b)
    }

    pub fn inv(&self) -> CanonCV {
        self.map(Rational::inv)
    }

    pub fn square(&self) -> CanonCV {
        self.map(Rational::square)
    }

    /// `e :-> X`: keeps the values inside `e`, zero elsewhere.
    pub fn guard(&self, e: &Event) -> Result<CanonCV, CvError> {
        if e.space() != &self.space {
            return Err(CvError::SpaceMismatch(e.space().to_string(), self.space.to_string()));
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if e.contains_atom(i) { v.clone() } else { Rational::zero() })
            .collect();
        Ok(CanonCV { space: self.space.clone(), values })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Rational::is_zero)
    }
}

impl fmt::Display for CanonCV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(Rational::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Evaluates a CV expression at every atom of `space`.
pub fn cv_canon(x: &CVExpr, space: &EventSpace) -> Result<CanonCV, CvError> {
    cv_canon_with(x, space, &BTreeMap::new())
}

/// As [`cv_canon`], resolving named references through `named`.
pub fn cv_canon_with(
    x: &CVExpr,
    space: &EventSpace,
    named: &BTreeMap<String, CanonCV>,
) -> Result<CanonCV, CvError> {
    let rec = |y: &CVExpr| cv_canon_with(y, space, named);
    Ok(match x {
        CVExpr::Val(t) => {
            if !t.is_closed() {
                return Err(CvError::OpenTerm(t.to_string()));
            }
            CanonCV::constant(space, t.eval(&Env::new())?)
        }
        CVExpr::Guard(e, y) => rec(y)?.guard(&eval_event(e, space)?)?,
        CVExpr::Add(a, b) => rec(a)?.add(&rec(b)?)?,
        CVExpr::Neg(a) => rec(a)?.neg(),
        CVExpr::Mul(a, b) => rec(a)?.mul(&rec(b)?)?,
        CVExpr::Inv(a) => rec(a)?.inv(),
        CVExpr::Square(a) => rec(a)?.square(),
        CVExpr::Cond3(a, e, b) => {
            let ev = eval_event(e, space)?;
            rec(a)?.guard(&ev)?.add(&rec(b)?.guard(&ev.not())?)?
        }
        CVExpr::Ref(n) => {
            let v = named.get(n).ok_or_else(|| CvError::UnknownCv(n.clone()))?;
            v.check(&CanonCV::constant(space, Rational::zero()))?;
            v.clone()
        }
    })
}

/// Nonoverlapping flat form: one summand per distinct nonzero value (in
/// order of first appearance), guarded by the join of its atoms.
pub fn cv_flat(x: &CanonCV) -> CVExpr {
    let mut groups: Vec<(Rational, u64)> = Vec::new();
    for (i, v) in x.values.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        match groups.iter_mut().find(|(c, _)| c == v) {
            Some((_, bits)) => *bits |= 1 << i,
            None => groups.push((v.clone(), 1 << i)),
        }
    }
    groups
        .into_iter()
        .map(|(c, bits)| CVExpr::guard(x.space.event_from_bits(bits).to_expr(), CVExpr::val(c)))
        .reduce(CVExpr::add)
        .unwrap_or_else(|| CVExpr::val(Rational::zero()))
}

/// `v(c)` for a constant vector, otherwise the flat form.
pub fn cv_render(x: &CanonCV) -> CVExpr {
    match x.values.first() {
        Some(c) if x.values.iter().all(|v| v == c) => CVExpr::val(c.clone()),
        None => CVExpr::val(Rational::zero()),
        _ => cv_flat(x),
    }
}

/// `X ≠ 0` while `X·X⁻¹ ≠ 1`.
pub fn cv_is_cancellation_violation(x: &CanonCV) -> bool {
    !x.is_zero() && x.values.iter().any(Rational::is_zero)
}

fn same_space(x: &CanonCV, p: &WeightPF) -> Result<(), CvError> {
    if &x.space != p.space() {
        return Err(CvError::SpaceMismatch(x.space.to_string(), p.space().to_string()));
    }
    Ok(())
}

/// `E_P(X) = Σ_a X(a)·P(a)`
pub fn e_p(x: &CanonCV, p: &WeightPF) -> Result<Rational, CvError> {
    same_space(x, p)?;
    Ok(x.values.iter().zip(p.weights()).map(|(v, w)| v * w).sum())
}

/// `E_P(X²) − E_P(X)²`
pub fn var_p(x: &CanonCV, p: &WeightPF) -> Result<Rational, CvError> {
    Ok(e_p(&x.square(), p)? - e_p(x, p)?.square())
}

/// `E_P(X·Y) − E_P(X)·E_P(Y)`
pub fn cov_p(x: &CanonCV, y: &CanonCV, p: &WeightPF) -> Result<Rational, CvError> {
    Ok(e_p(&x.mul(y)?, p)? - e_p(x, p)? * e_p(y, p)?)
}

/// `COV² · (VAR·VAR)⁻¹`
pub fn corr2_p(x: &CanonCV, y: &CanonCV, p: &WeightPF) -> Result<Rational, CvError> {
    Ok(cov_p(x, y, p)?.square() * (var_p(x, p)? * var_p(y, p)?).inv())
}

/// `λx.P(X = x)` over the variable `x`.
pub fn pmf_of_cv(x: &CanonCV, p: &WeightPF) -> Result<PmfView, CvError> {
    same_space(x, p)?;
    let points = x.values.iter().zip(p.weights()).map(|(v, w)| (vec![v.clone()], w.clone()));
    Ok(PmfView::from_points(vec!["x".into()], points).expect("atom weights form a PMF"))
}

/// `λ(x,y).P(X = x, Y = y)` over the variables `x`, `y`.
pub fn joint_pmf(x: &CanonCV, y: &CanonCV, p: &WeightPF) -> Result<PmfView, CvError> {
    same_space(x, p)?;
    same_space(y, p)?;
    let points = x
        .values
        .iter()
        .zip(&y.values)
        .zip(p.weights())
        .map(|((a, b), w)| (vec![a.clone(), b.clone()], w.clone()));
    Ok(PmfView::from_points(vec!["x".into(), "y".into()], points).expect("atom weights form a PMF"))
}

pub fn cv_independent(x: &CanonCV, y: &CanonCV, p: &WeightPF) -> Result<bool, CvError> {
    Ok(is_independent(&joint_pmf(x, y, p)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fss::{cov_pmf, e_pmf, marginalise};

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn ab() -> EventSpace {
        EventSpace::new("S", &["a", "b"]).unwrap()
    }

    fn canon(src: &str, s: &EventSpace) -> CanonCV {
        cv_canon(&parse_cv(src).unwrap(), s).unwrap()
    }

    fn vals(xs: &[&str]) -> Vec<Rational> {
        xs.iter().map(|x| q(x)).collect()
    }

    #[test]
    fn canonical_vectors() {
        let s = ab();
        assert_eq!(canon("T :-> v(5)", &s).values(), vals(&["5", "5"]));
        assert_eq!(canon("F :-> v(5)", &s).values(), vals(&["0", "0"]));
        assert_eq!(canon("(a :-> v(1))^-1", &s).values(), vals(&["1", "0"]));
        assert_eq!(canon("cond(v(2), a, v(3))", &s).values(), vals(&["2", "3"]));
        assert_eq!(canon("a :-> v(1/2) * v(4) - v(1)", &s).values(), vals(&["1", "-1"]));
        assert!(matches!(cv_canon(&parse_cv("v(x)").unwrap(), &s), Err(CvError::OpenTerm(_))));
        assert!(matches!(cv_canon(&parse_cv("c :-> v(1)").unwrap(), &s), Err(CvError::Event(_))));
    }

    #[test]
    fn flat_forms() {
        let s = ab();
        let c = EventSpace::new("S3", &["a", "b", "c"]).unwrap();
        assert_eq!(cv_flat(&canon("v(5)", &s)).to_string(), "T :-> v(5)");
        assert_eq!(cv_flat(&canon("v(0)", &s)).to_string(), "v(0)");
        let x = CanonCV::new(&c, vals(&["3", "0", "3"])).unwrap();
        let flat = cv_flat(&x);
        assert_eq!(flat.to_string(), "(a|c) :-> v(3)");
        assert_eq!(cv_canon(&flat, &c).unwrap(), x);
        let y = CanonCV::new(&c, vals(&["1", "-2", "1/2"])).unwrap();
        assert_eq!(cv_canon(&parse_cv(&cv_flat(&y).to_string()).unwrap(), &c).unwrap(), y);
    }

    #[test]
    fn cancellation() {
        let s = ab();
        assert!(cv_is_cancellation_violation(&canon("a :-> v(1)", &s)));
        assert!(!cv_is_cancellation_violation(&canon("T :-> v(2)", &s)));
        assert!(!cv_is_cancellation_violation(&canon("v(0)", &s)));
    }

    #[test]
    fn expectations() {
        let s = EventSpace::new("S", &["a1", "a2", "a3"]).unwrap();
        let p = WeightPF::new(&s, vals(&["1/2", "1/3", "1/6"])).unwrap();
        let x = CanonCV::new(&s, vals(&["1", "2", "3"])).unwrap();
        assert_eq!(e_p(&x, &p).unwrap(), q("5/3"));
        assert_eq!(e_p(&canon("a1 :-> v(3)", &s), &p).unwrap(), q("3/2"));
        assert_eq!(e_p(&canon("T :-> v(7)", &s), &p).unwrap(), q("7"));
        assert_eq!(var_p(&canon("v(7)", &s), &p).unwrap(), q("0"));
        let u = WeightPF::uniform(&ab());
        let xa = canon("a :-> v(1)", &ab());
        assert_eq!(var_p(&xa, &u).unwrap(), q("1/4"));
        assert_eq!(corr2_p(&xa, &xa, &u).unwrap(), q("1"));
        let pm = pmf_of_cv(&x, &p).unwrap();
        assert_eq!(
            pm.points(),
            vec![(vals(&["1"]), q("1/2")), (vals(&["2"]), q("1/3")), (vals(&["3"]), q("1/6"))]
        );
        assert_eq!(e_pmf(&pm), e_p(&x, &p).unwrap());
    }

    #[test]
    fn joints_and_independence() {
        let s = ab();
        let u = WeightPF::uniform(&s);
        let x = canon("b :-> v(1)", &s);
        let g = joint_pmf(&x, &x, &u).unwrap();
        assert_eq!(g.points(), vec![(vals(&["0", "0"]), q("1/2")), (vals(&["1", "1"]), q("1/2"))]);
        assert!(!cv_independent(&x, &x, &u).unwrap());
        assert!(cv_independent(&x, &canon("v(4)", &s), &u).unwrap());
        assert_eq!(cov_pmf(&g).unwrap(), cov_p(&x, &x, &u).unwrap());
        assert_eq!(marginalise(&g, &[1]).unwrap().points(), pmf_of_cv(&x, &u).unwrap().points());

        let prod = EventSpace::new("P", &["ac", "ad", "bc", "bd"]).unwrap();
        let w = WeightPF::new(&prod, vals(&["1/6", "1/3", "1/6", "1/3"])).unwrap();
        let first = canon("ac|ad :-> v(1)", &prod);
        let second = canon("ad|bd :-> v(5) + v(1)", &prod);
        assert!(cv_independent(&first, &second, &w).unwrap());
    }

    #[test]
    fn references_and_display() {
        let s = ab();
        let mut named = BTreeMap::new();
        named.insert("X".to_string(), canon("a :-> v(2)", &s));
        let y = cv_canon_with(&parse_cv("X^2 + b :-> v(1)").unwrap(), &s, &named).unwrap();
        assert_eq!(y.values(), vals(&["4", "1"]));
        let x = parse_cv("-(a :-> v(1)) + v(2)*v(3)^-1").unwrap();
        assert_eq!(x.to_string(), "-a :-> v(1) + v(2)*v(3)^-1");
        assert_eq!(parse_cv(&x.to_string()).unwrap(), x);
        let sq = CVExpr::square(CVExpr::guard(EventExpr::name("a"), CVExpr::val(q("2"))));
        assert_eq!(sq.to_string(), "(a :-> v(2))^2");
        assert_eq!(parse_cv(&sq.to_string()).unwrap(), sq);
    }
}
