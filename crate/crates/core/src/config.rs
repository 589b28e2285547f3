//! Configurations: parallel objects with conditional presence and attached
//! yields, their canonical form, utility, expected utility, and the two
//! elicitation computations for subjective probabilities.
//!
//! Grammar:
//!
//! ```text
//! config := yielded ('||' yielded)*
//! yielded := unit ('~>' cv-postfix)*
//! unit   := 'eps' | event ':->' yielded | OBJ | '(' config ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::condval::{cv_canon_with, cv_postfix, cv_render, e_p, CVExpr, CanonCV, CvError};
use crate::events::{eval_event, event_expr, Event, EventError, EventExpr, EventSpace};
use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};
use crate::meadow::Rational;
use crate::probability::{Valuation, WeightPF};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("undeclared object '{0}'")]
    UnknownObject(String),
    #[error("u4 - u2 + u1 - u3 is 0, so indifference determines no probability")]
    Degenerate,
    #[error("need low < high, got low = {low}, high = {high}")]
    BadRange { high: String, low: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigExpr {
    Empty,
    Object(String),
    Par(Box<ConfigExpr>, Box<ConfigExpr>),
    Guard(EventExpr, Box<ConfigExpr>),
    Yield(Box<ConfigExpr>, CVExpr),
}

impl ConfigExpr {
    pub fn object(name: &str) -> ConfigExpr {
        ConfigExpr::Object(name.to_string())
    }

    pub fn par(a: ConfigExpr, b: ConfigExpr) -> ConfigExpr {
        ConfigExpr::Par(Box::new(a), Box::new(b))
    }

    pub fn guard(e: EventExpr, a: ConfigExpr) -> ConfigExpr {
        ConfigExpr::Guard(e, Box::new(a))
    }

    pub fn yields(a: ConfigExpr, x: CVExpr) -> ConfigExpr {
        ConfigExpr::Yield(Box::new(a), x)
    }

    fn prec(&self) -> u8 {
        match self {
            ConfigExpr::Par(..) => 1,
            ConfigExpr::Guard(..) => 2,
            ConfigExpr::Yield(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            ConfigExpr::Empty => f.write_str("eps")?,
            ConfigExpr::Object(c) => f.write_str(c)?,
            ConfigExpr::Par(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" || ")?;
                b.fmt_prec(f, 2)?;
            }
            ConfigExpr::Guard(e, a) => {
                match e {
                    EventExpr::Or(..) | EventExpr::And(..) => write!(f, "({e}) :-> ")?,
                    _ => write!(f, "{e} :-> ")?,
                }
                a.fmt_prec(f, 2)?;
            }
            ConfigExpr::Yield(a, x) => {
                a.fmt_prec(f, 3)?;
                match x {
                    CVExpr::Val(_) | CVExpr::Ref(_) | CVExpr::Cond3(..) => write!(f, " ~> {x}")?,
                    _ => write!(f, " ~> ({x})")?,
                }
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ConfigExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

pub fn parse_config(input: &str) -> Result<ConfigExpr, SyntaxError> {
    let toks = tokenize(input)?;
    let mut cur = Cursor::new(&toks, input.chars().count() + 1);
    let a = config_expr(&mut cur)?;
    cur.expect_end()?;
    Ok(a)
}

pub fn config_expr(cur: &mut Cursor<'_>) -> Result<ConfigExpr, SyntaxError> {
    let mut acc = config_yielded(cur)?;
    while cur.eat(&Tok::BarBar) {
        acc = ConfigExpr::par(acc, config_yielded(cur)?);
    }
    Ok(acc)
}

fn config_yielded(cur: &mut Cursor<'_>) -> Result<ConfigExpr, SyntaxError> {
    let mut acc = config_unit(cur)?;
    while cur.eat(&Tok::Yield) {
        acc = ConfigExpr::yields(acc, cv_postfix(cur)?);
    }
    Ok(acc)
}

fn config_unit(cur: &mut Cursor<'_>) -> Result<ConfigExpr, SyntaxError> {
    if cur.eat_keyword("eps") {
        return Ok(ConfigExpr::Empty);
    }
    let start = cur.pos();
    if let Ok(e) = event_expr(cur) {
        if cur.eat(&Tok::Guard) {
            return Ok(ConfigExpr::guard(e, config_yielded(cur)?));
        }
    }
    cur.reset(start);
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.bump();
            let a = config_expr(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(a)
        }
        Some(Tok::Ident(n)) => {
            let n = n.clone();
            cur.bump();
            Ok(ConfigExpr::Object(n))
        }
        _ => Err(cur.error("expected a configuration")),
    }
}

/// A configuration as a list of conditionally present yielded objects.
#[derive(Debug, Clone)]
pub struct CanonConfig {
    space: EventSpace,
    triples: Vec<(Event, String, CanonCV)>,
}

impl CanonConfig {
    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn triples(&self) -> &[(Event, String, CanonCV)] {
        &self.triples
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// The objects present at `atom` with their yields there, sorted.
    pub fn at_atom(&self, atom: usize) -> Vec<(String, Rational)> {
        let mut out: Vec<(String, Rational)> = self
            .triples
            .iter()
            .filter(|(e, _, _)| e.contains_atom(atom))
            .map(|(_, c, x)| (c.clone(), x.at(atom).clone()))
            .collect();
        out.sort();
        out
    }
}

/// Equal when every atom sees the same multiset of (object, yield).
impl PartialEq for CanonConfig {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space
            && (0..self.space.atom_count()).all(|i| self.at_atom(i) == other.at_atom(i))
    }
}

impl Eq for CanonConfig {}

impl fmt::Display for CanonConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.triples.is_empty() {
            return f.write_str("eps");
        }
        let parts: Vec<String> = self
            .triples
            .iter()
            .map(|(e, c, x)| {
                let body = ConfigExpr::yields(ConfigExpr::object(c), cv_render(x));
                if e.is_top() {
                    body.to_string()
                } else {
                    ConfigExpr::guard(e.to_expr(), body).to_string()
                }
            })
            .collect();
        f.write_str(&parts.join(" || "))
    }
}

/// Normalizes a configuration: guards accumulate by conjunction, the
/// outermost yield on each object wins, bare objects yield `v(0)`, and
/// `ε` and ⊥-guarded parts vanish.
pub fn cfg_canon(a: &ConfigExpr, space: &EventSpace, objects: &[String]) -> Result<CanonConfig, ConfigError> {
    cfg_canon_with(a, space, objects, &BTreeMap::new())
}

pub fn cfg_canon_with(
    a: &ConfigExpr,
    space: &EventSpace,
    objects: &[String],
    named: &BTreeMap<String, CanonCV>,
) -> Result<CanonConfig, ConfigError> {
    let mut triples = Vec::new();
    collect(a, space, objects, named, &space.top(), None, &mut triples)?;
    triples.retain(|(e, _, _)| !e.is_bot());
    triples.sort_by(|(e1, c1, x1), (e2, c2, x2)| {
        (e1.bits(), c1, x1.values()).cmp(&(e2.bits(), c2, x2.values()))
    });
    Ok(CanonConfig { space: space.clone(), triples })
}

fn collect(
    a: &ConfigExpr,
    space: &EventSpace,
    objects: &[String],
    named: &BTreeMap<String, CanonCV>,
    guard: &Event,
    outer: Option<&CanonCV>,
    out: &mut Vec<(Event, String, CanonCV)>,
) -> Result<(), ConfigError> {
    match a {
        ConfigExpr::Empty => {}
        ConfigExpr::Object(c) => {
            if !objects.contains(c) {
                return Err(ConfigError::UnknownObject(c.clone()));
            }
            let x = outer.cloned().unwrap_or_else(|| CanonCV::constant(space, Rational::zero()));
            out.push((guard.clone(), c.clone(), x));
        }
        ConfigExpr::Par(l, r) => {
            collect(l, space, objects, named, guard, outer, out)?;
            collect(r, space, objects, named, guard, outer, out)?;
        }
        ConfigExpr::Guard(e, b) => {
            let g = guard.and(&eval_event(e, space)?);
            collect(b, space, objects, named, &g, outer, out)?;
        }
        ConfigExpr::Yield(b, x) => {
            let inner = cv_canon_with(x, space, named)?;
            collect(b, space, objects, named, guard, Some(outer.unwrap_or(&inner)), out)?;
        }
    }
    Ok(())
}

/// `U(α)`: the sum of the guarded yields.
pub fn utility(a: &CanonConfig) -> CanonCV {
    let zero = CanonCV::constant(&a.space, Rational::zero());
    a.triples.iter().fold(zero, |acc, (e, _, x)| {
        acc.add(&x.guard(e).expect("same space")).expect("same space")
    })
}

/// `E^U_P(α) = E_P(U(α))`
pub fn expected_utility(a: &CanonConfig, p: &WeightPF) -> Result<Rational, ConfigError> {
    Ok(e_p(&utility(a), p)?)
}

/// `(e :-> c1 ~> v(u1)) || (!e :-> c2 ~> v(u2))`
pub fn two_branch(e: &EventExpr, c1: &str, u1: &Rational, c2: &str, u2: &Rational) -> ConfigExpr {
    let branch = |ev: EventExpr, c: &str, u: &Rational| {
        ConfigExpr::guard(ev, ConfigExpr::yields(ConfigExpr::object(c), CVExpr::val(u.clone())))
    };
    ConfigExpr::par(branch(e.clone(), c1, u1), branch(EventExpr::not(e.clone()), c2, u2))
}

/// Expected utility of a two-branch option under `P(e) = p`, computed
/// through the configuration semantics without requiring `0 ≤ p ≤ 1`.
fn two_branch_value(p: &Rational, u1: &Rational, u2: &Rational) -> Rational {
    let space = EventSpace::generated("E", &["e"]).expect("one generator");
    let objects = ["c1".to_string(), "c2".to_string()];
    let opt = two_branch(&EventExpr::name("e"), "c1", u1, "c2", u2);
    let u = utility(&cfg_canon(&opt, &space, &objects).expect("well formed"));
    let weights = [p.clone(), Rational::one() - p];
    u.values().iter().zip(&weights).map(|(v, w)| v * w).sum()
}

/// The `P(e)` at which `option₁ = e:→c₁⇝u₁ ∥ ¬e:→c₂⇝u₂` and
/// `option₃ = e:→c₃⇝u₃ ∥ ¬e:→c₄⇝u₄` have equal expected utility.
pub fn elicit_indifference(
    u1: &Rational,
    u2: &Rational,
    u3: &Rational,
    u4: &Rational,
) -> Result<Rational, ConfigError> {
    let denom = u4 - u2 + u1 - u3;
    if denom.is_zero() {
        return Err(ConfigError::Degenerate);
    }
    let p = (u4 - u2).div(&denom);
    assert_eq!(two_branch_value(&p, u1, u2), two_branch_value(&p, u3, u4));
    Ok(p)
}

/// `1 − d/(high − low)`: the agent prefers paying `d` to learn `e` exactly
/// when `P(e)` is below this bound.
pub fn ask_threshold(high: &Rational, low: &Rational, d: &Rational) -> Result<Rational, ConfigError> {
    if low >= high {
        return Err(ConfigError::BadRange { high: high.to_string(), low: low.to_string() });
    }
    Ok(Rational::one() - d.div(&(high - low)))
}

/// `π₁ ⇝ (e:→v(high) + ¬e:→v(low))`
pub fn ask_option1(e: &EventExpr, high: &Rational, low: &Rational) -> ConfigExpr {
    let x = CVExpr::add(
        CVExpr::guard(e.clone(), CVExpr::val(high.clone())),
        CVExpr::guard(EventExpr::not(e.clone()), CVExpr::val(low.clone())),
    );
    ConfigExpr::yields(ConfigExpr::object("pi1"), x)
}

/// `(e:→π₁⇝v(high−d)) ∥ (¬e:→π₂⇝v(high−d))`
pub fn ask_option2(e: &EventExpr, high: &Rational, d: &Rational) -> ConfigExpr {
    let y = CVExpr::val(high - d);
    ConfigExpr::par(
        ConfigExpr::guard(e.clone(), ConfigExpr::yields(ConfigExpr::object("pi1"), y.clone())),
        ConfigExpr::guard(EventExpr::not(e.clone()), ConfigExpr::yields(ConfigExpr::object("pi2"), y)),
    )
}

/// Whether `E^U_P(option₂(d)) > E^U_P(option₁)`.
pub fn prefers_asking(
    p: &WeightPF,
    e: &EventExpr,
    high: &Rational,
    low: &Rational,
    d: &Rational,
) -> Result<bool, ConfigError> {
    let objects = ["pi1".to_string(), "pi2".to_string()];
    let space = p.space();
    let o1 = cfg_canon(&ask_option1(e, high, low), space, &objects)?;
    let o2 = cfg_canon(&ask_option2(e, high, d), space, &objects)?;
    Ok(expected_utility(&o2, p)? > expected_utility(&o1, p)?)
}
