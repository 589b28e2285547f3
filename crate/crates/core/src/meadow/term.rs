use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{MeadowError, Rational};

pub type Env = BTreeMap<String, Rational>;

/// Signed-meadow term in primitive form.
///
/// Derived operators (`1_x`, `0_x`, `x²`, `x/y`, `x ◁ y ▷ z`, `|x|`, and the
/// value-level orderings) have no constructor of their own: the associated
/// functions build their defining expansion directly.
///
/// `Sum` is the finite support summation binder. It is part of the term
/// language but cannot be evaluated pointwise; `crate::fss` interprets it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Rational),
    Var(String),
    Add(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Inv(Box<Term>),
    Sign(Box<Term>),
    Sum(Vec<String>, Box<Term>),
}

impl Term {
    pub fn constant(c: Rational) -> Term {
        Term::Const(c)
    }

    pub fn int(n: i64) -> Term {
        Term::Const(Rational::from_int(n))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Term) -> Term {
        Term::Neg(Box::new(a))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::add(a, Term::neg(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn inv(a: Term) -> Term {
        Term::Inv(Box::new(a))
    }

    pub fn sign(a: Term) -> Term {
        Term::Sign(Box::new(a))
    }

    pub fn sum(vars: Vec<String>, body: Term) -> Term {
        Term::Sum(vars, Box::new(body))
    }

    /// `1_x = x · x⁻¹`
    pub fn one_of(x: Term) -> Term {
        Term::mul(x.clone(), Term::inv(x))
    }

    /// `0_x = 1 − x · x⁻¹`
    pub fn zero_of(x: Term) -> Term {
        Term::sub(Term::int(1), Term::one_of(x))
    }

    pub fn square(x: Term) -> Term {
        Term::mul(x.clone(), x)
    }

    /// `x / y = x · y⁻¹`; literal quotients fold to a constant.
    pub fn div(x: Term, y: Term) -> Term {
        match (&x, &y) {
            (Term::Const(a), Term::Const(b)) => Term::Const(a.div(b)),
            _ => Term::mul(x, Term::inv(y)),
        }
    }

    /// `x ◁ y ▷ z = 1_y · x + 0_y · z`
    pub fn cond3(x: Term, y: Term, z: Term) -> Term {
        Term::add(
            Term::mul(Term::one_of(y.clone()), x),
            Term::mul(Term::zero_of(y), z),
        )
    }

    /// `|x| = s(x) · x`
    pub fn abs(x: Term) -> Term {
        Term::mul(Term::sign(x.clone()), x)
    }

    /// Value-level `x < y`: 1 when `s(y − x) = 1`, else 0.
    pub fn lt_val(x: Term, y: Term) -> Term {
        let s = Term::sign(Term::sub(y, x));
        Term::zero_of(Term::sub(s, Term::int(1)))
    }

    /// Value-level `x ≤ y`: 1 when `s(s(y − x) + 1) = 1`, else 0.
    pub fn leq_val(x: Term, y: Term) -> Term {
        let s = Term::sign(Term::add(Term::sign(Term::sub(y, x)), Term::int(1)));
        Term::zero_of(Term::sub(s, Term::int(1)))
    }

    /// Recognizes the expansion of `0_p` and returns `p`.
    pub fn as_zero_indicator(&self) -> Option<&Term> {
        if let Term::Add(a, b) = self {
            if let (Term::Const(c), Term::Neg(inner)) = (a.as_ref(), b.as_ref()) {
                if c.is_one() {
                    return inner.as_one_indicator();
                }
            }
        }
        None
    }

    /// Recognizes the expansion of `1_p` and returns `p`.
    pub fn as_one_indicator(&self) -> Option<&Term> {
        if let Term::Mul(a, b) = self {
            if let Term::Inv(inner) = b.as_ref() {
                if inner.as_ref() == a.as_ref() {
                    return Some(a);
                }
            }
        }
        None
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::Neg(a) | Term::Inv(a) | Term::Sign(a) => a.collect_free(bound, out),
            Term::Sum(vars, body) => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn contains_binder(&self) -> bool {
        match self {
            Term::Const(_) | Term::Var(_) => false,
            Term::Add(a, b) | Term::Mul(a, b) => a.contains_binder() || b.contains_binder(),
            Term::Neg(a) | Term::Inv(a) | Term::Sign(a) => a.contains_binder(),
            Term::Sum(..) => true,
        }
    }

    /// Replaces free occurrences of the variables bound in `env` by constants.
    pub fn substitute(&self, env: &Env) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(v) => env.get(v).map_or_else(|| self.clone(), |c| Term::Const(c.clone())),
            Term::Add(a, b) => Term::add(a.substitute(env), b.substitute(env)),
            Term::Mul(a, b) => Term::mul(a.substitute(env), b.substitute(env)),
            Term::Neg(a) => Term::neg(a.substitute(env)),
            Term::Inv(a) => Term::inv(a.substitute(env)),
            Term::Sign(a) => Term::sign(a.substitute(env)),
            Term::Sum(vars, body) => {
                let mut inner = env.clone();
                for v in vars {
                    inner.remove(v);
                }
                Term::sum(vars.clone(), body.substitute(&inner))
            }
        }
    }

    /// Structural evaluation in the meadow of rationals.
    pub fn eval(&self, env: &Env) -> Result<Rational, MeadowError> {
        Ok(match self {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| MeadowError::UnboundVariable(v.clone()))?,
            Term::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Term::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Term::Neg(a) => -a.eval(env)?,
            Term::Inv(a) => a.eval(env)?.inv(),
            Term::Sign(a) => a.eval(env)?.sign(),
            Term::Sum(..) => return Err(MeadowError::BinderNotEvaluable(self.to_string())),
        })
    }

    fn precedence(&self) -> u8 {
        if self.as_zero_indicator().is_some() || self.as_one_indicator().is_some() {
            return 5;
        }
        match self {
            Term::Sum(..) => 0,
            Term::Add(..) => 1,
            Term::Mul(..) => 2,
            Term::Neg(_) => 3,
            Term::Const(c) if c.is_negative() || !c.is_integer() => 2,
            Term::Inv(_) => 4,
            Term::Const(_) | Term::Var(_) | Term::Sign(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        if let Some(x) = self.as_zero_indicator() {
            write!(f, "zero(")?;
            x.fmt_prec(f, 0)?;
            write!(f, ")")?;
        } else if let Some(x) = self.as_one_indicator() {
            write!(f, "one(")?;
            x.fmt_prec(f, 0)?;
            write!(f, ")")?;
        } else {
            match self {
                Term::Const(c) => write!(f, "{c}")?,
                Term::Var(v) => write!(f, "{v}")?,
                Term::Add(a, b) => {
                    a.fmt_prec(f, 1)?;
                    if let Term::Neg(inner) = b.as_ref() {
                        write!(f, " - ")?;
                        inner.fmt_prec(f, 2)?;
                    } else {
                        write!(f, " + ")?;
                        b.fmt_prec(f, 2)?;
                    }
                }
                Term::Mul(a, b) => {
                    a.fmt_prec(f, 2)?;
                    write!(f, "*")?;
                    b.fmt_prec(f, 3)?;
                }
                Term::Neg(a) => {
                    write!(f, "-")?;
                    a.fmt_prec(f, 3)?;
                }
                Term::Inv(a) => {
                    a.fmt_prec(f, 5)?;
                    write!(f, "^-1")?;
                }
                Term::Sign(a) => {
                    write!(f, "s(")?;
                    a.fmt_prec(f, 0)?;
                    write!(f, ")")?;
                }
                Term::Sum(vars, body) => {
                    write!(f, "sum {} of ", vars.join(","))?;
                    body.fmt_prec(f, 0)?;
                }
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Rational::from_int(*v)))
            .collect()
    }

    #[test]
    fn one_indicator_at_zero() {
        let t = Term::one_of(Term::var("x"));
        assert_eq!(t.eval(&env(&[("x", 0)])).unwrap(), Rational::zero());
        assert_eq!(t.eval(&env(&[("x", 4)])).unwrap(), Rational::one());
    }

    #[test]
    fn ternary_conditional_selects_first_branch() {
        let t = Term::cond3(Term::var("x"), Term::var("y"), Term::var("z"));
        let v = t.eval(&env(&[("x", 3), ("y", 5), ("z", 9)])).unwrap();
        assert_eq!(v, Rational::from_int(3));
        let v = t.eval(&env(&[("x", 3), ("y", 0), ("z", 9)])).unwrap();
        assert_eq!(v, Rational::from_int(9));
    }

    #[test]
    fn leq_value_is_reflexive() {
        let t = Term::leq_val(Term::var("x"), Term::var("y"));
        assert_eq!(t.eval(&env(&[("x", 2), ("y", 2)])).unwrap(), Rational::one());
        assert_eq!(t.eval(&env(&[("x", 3), ("y", 2)])).unwrap(), Rational::zero());
        let lt = Term::lt_val(Term::var("x"), Term::var("y"));
        assert_eq!(lt.eval(&env(&[("x", 2), ("y", 2)])).unwrap(), Rational::zero());
        assert_eq!(lt.eval(&env(&[("x", 1), ("y", 2)])).unwrap(), Rational::one());
    }

    #[test]
    fn unbound_variable_is_named() {
        let err = Term::var("q").eval(&Env::new()).unwrap_err();
        assert_eq!(err, MeadowError::UnboundVariable("q".into()));
    }

    #[test]
    fn indicator_patterns_are_recognized() {
        let p = Term::sub(Term::int(1), Term::var("x"));
        let z = Term::zero_of(p.clone());
        assert_eq!(z.as_zero_indicator(), Some(&p));
        assert_eq!(z.to_string(), "zero(1 - x)");
        assert_eq!(Term::one_of(Term::var("x")).to_string(), "one(x)");
    }

    #[test]
    fn binder_scopes_free_variables() {
        let t = Term::sum(
            vec!["x".into()],
            Term::mul(Term::var("x"), Term::zero_of(Term::sub(Term::var("t"), Term::var("x")))),
        );
        let fv: Vec<_> = t.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["t".to_string()]);
        assert!(matches!(t.eval(&env(&[("t", 1)])), Err(MeadowError::BinderNotEvaluable(_))));
    }
}
