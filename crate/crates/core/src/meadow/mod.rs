//! The meadow of rationals: exact numbers with totalized inverse and sign,
//! signed-meadow terms, and an equation checker over sampled environments.

mod parse;
mod rational;
mod term;

use std::fmt;

use thiserror::Error;

pub use parse::{expr as parse_term_expr, exponent as parse_exponent, parse_term};
pub use rational::{default_grid, value_grid, Rational};
pub use term::{Env, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeadowError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("invalid rational literal '{0}'")]
    BadLiteral(String),
    #[error("summation binder cannot be evaluated pointwise: {0}")]
    BinderNotEvaluable(String),
}

/// Totalized inverse.
pub fn q_inv(a: &Rational) -> Rational {
    a.inv()
}

pub fn q_sign(a: &Rational) -> Rational {
    a.sign()
}

pub fn eval_term(t: &Term, env: &Env) -> Result<Rational, MeadowError> {
    t.eval(env)
}

/// Outcome of checking `lhs = rhs` over a list of environments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Fail { env: Env, lhs: Rational, rhs: Rational },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Ok => write!(f, "OK"),
            Verdict::Fail { env, lhs, rhs } => {
                let at: Vec<String> = env.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "FAIL at {}: {lhs} vs {rhs}", at.join(", "))
            }
        }
    }
}

pub fn check_equation<'a, I>(lhs: &Term, rhs: &Term, envs: I) -> Result<Verdict, MeadowError>
where
    I: IntoIterator<Item = &'a Env>,
{
    for env in envs {
        let l = lhs.eval(env)?;
        let r = rhs.eval(env)?;
        if l != r {
            return Ok(Verdict::Fail { env: env.clone(), lhs: l, rhs: r });
        }
    }
    Ok(Verdict::Ok)
}

/// Every assignment of `grid` values to `vars`, in lexicographic order.
pub fn grid_envs(vars: &[String], grid: &[Rational]) -> Vec<Env> {
    let mut out = vec![Env::new()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * grid.len());
        for env in &out {
            for g in grid {
                let mut e = env.clone();
                e.insert(v.clone(), g.clone());
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// Checks `lhs = rhs` over the cartesian grid of the free variables of both
/// sides.
pub fn check_on_grid(lhs: &Term, rhs: &Term, grid: &[Rational]) -> Result<Verdict, MeadowError> {
    let mut vars = lhs.free_vars();
    vars.extend(rhs.free_vars());
    let vars: Vec<String> = vars.into_iter().collect();
    let envs = grid_envs(&vars, grid);
    check_equation(lhs, rhs, &envs)
}

/// One named equation of the axiom tables.
#[derive(Debug, Clone)]
pub struct Law {
    pub name: &'static str,
    pub lhs: Term,
    pub rhs: Term,
}

fn law(name: &'static str, lhs: &str, rhs: &str) -> Law {
    Law {
        name,
        lhs: parse_term(lhs).expect("law text parses"),
        rhs: parse_term(rhs).expect("law text parses"),
    }
}

/// The ten meadow axioms.
pub fn meadow_laws() -> Vec<Law> {
    vec![
        law("add-assoc", "(x+y)+z", "x+(y+z)"),
        law("add-comm", "x+y", "y+x"),
        law("add-zero", "x+0", "x"),
        law("add-neg", "x+(-x)", "0"),
        law("mul-assoc", "(x*y)*z", "x*(y*z)"),
        law("mul-comm", "x*y", "y*x"),
        law("mul-one", "1*x", "x"),
        law("distrib", "x*(y+z)", "x*y + x*z"),
        law("inv-invol", "(x^-1)^-1", "x"),
        law("restricted-inverse", "x*(x*x^-1)", "x"),
    ]
}

/// The six sign axioms.
pub fn sign_laws() -> Vec<Law> {
    vec![
        law("sign-one", "s(1x)", "1x"),
        law("sign-zero", "s(0x)", "0x"),
        law("sign-minus-one", "s(-1)", "-1"),
        law("sign-inv", "s(x^-1)", "s(x)"),
        law("sign-mul", "s(x*y)", "s(x)*s(y)"),
        law("sign-add", "0(s(x)-s(y))*(s(x+y)-s(x))", "0"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_m2_2() -> Vec<Rational> {
        (-2..=2).map(Rational::from_int).collect()
    }

    #[test]
    fn restricted_inverse_law_holds() {
        let v = check_on_grid(
            &parse_term("x*(x*x^-1)").unwrap(),
            &parse_term("x").unwrap(),
            &grid_m2_2(),
        )
        .unwrap();
        assert_eq!(v, Verdict::Ok);
    }

    #[test]
    fn inverse_law_fails_only_at_zero() {
        let v = check_on_grid(
            &parse_term("x*x^-1").unwrap(),
            &parse_term("1").unwrap(),
            &grid_m2_2(),
        )
        .unwrap();
        match v {
            Verdict::Fail { env, lhs, rhs } => {
                assert_eq!(env["x"], Rational::zero());
                assert_eq!(lhs, Rational::zero());
                assert_eq!(rhs, Rational::one());
            }
            Verdict::Ok => panic!("inverse law must fail at 0"),
        }
    }

    #[test]
    fn absolute_value_is_sign_times_value() {
        let v = check_on_grid(
            &parse_term("s(x)*x").unwrap(),
            &parse_term("abs(x)").unwrap(),
            &grid_m2_2(),
        )
        .unwrap();
        assert!(v.is_ok());
    }

    #[test]
    fn unbound_variable_in_env() {
        let envs = vec![Env::new()];
        let err = check_equation(&parse_term("x").unwrap(), &parse_term("x").unwrap(), &envs)
            .unwrap_err();
        assert_eq!(err, MeadowError::UnboundVariable("x".into()));
    }

    #[test]
    fn grid_env_count() {
        let vars = vec!["x".to_string(), "y".to_string()];
        assert_eq!(grid_envs(&vars, &default_grid()).len(), 19 * 19);
    }
}
