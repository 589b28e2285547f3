//! Probability functions on finite event spaces: atom-weight models,
//! arbitrary valuation tables, the totalized conditional probability
//! operators, and an exhaustive auditor for the axiom systems.

use std::fmt;

use thiserror::Error;

use crate::events::{Event, EventSpace};
use crate::meadow::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("expected {expected} values for space {space}, got {got}")]
    WrongLength { space: String, expected: usize, got: usize },
    #[error("negative weight {value} for atom '{atom}'")]
    NegativeWeight { atom: String, value: Rational },
    #[error("weights sum to {0}, not 1")]
    MassNotOne(Rational),
    #[error("event from space {event} used with a function on space {pf}")]
    SpaceMismatch { event: String, pf: String },
    #[error("space {0} is too large to enumerate")]
    TooLarge(String),
}

/// Anything that assigns a value to every event of a finite space.
pub trait Valuation {
    fn space(&self) -> &EventSpace;

    /// Value of the event with the given atom bitmask.
    fn value_bits(&self, bits: u64) -> Rational;

    fn prob(&self, e: &Event) -> Result<Rational, ProbError> {
        if e.space() != self.space() {
            return Err(ProbError::SpaceMismatch {
                event: e.space().to_string(),
                pf: self.space().to_string(),
            });
        }
        Ok(self.value_bits(e.bits()))
    }
}

/// A probability function given by nonnegative atom weights summing to 1;
/// an event's probability is the sum of the weights of its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightPF {
    space: EventSpace,
    weights: Vec<Rational>,
}

impl WeightPF {
    pub fn new(space: &EventSpace, weights: Vec<Rational>) -> Result<Self, ProbError> {
        if weights.len() != space.atom_count() {
            return Err(ProbError::WrongLength {
                space: space.to_string(),
                expected: space.atom_count(),
                got: weights.len(),
            });
        }
        for (w, name) in weights.iter().zip(space.atom_names()) {
            if w.is_negative() {
                return Err(ProbError::NegativeWeight { atom: name.clone(), value: w.clone() });
            }
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(ProbError::MassNotOne(total));
        }
        Ok(WeightPF { space: space.clone(), weights })
    }

    pub fn uniform(space: &EventSpace) -> Self {
        let n = space.atom_count() as i64;
        let w = Rational::new(1, n).expect("n > 0");
        WeightPF { space: space.clone(), weights: vec![w; n as usize] }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> &Rational {
        &self.weights[atom]
    }

    /// The same function viewed as a full valuation table.
    pub fn to_table(&self) -> Result<TablePF, ProbError> {
        TablePF::from_fn(&self.space, |bits| self.value_bits(bits))
    }
}

impl Valuation for WeightPF {
    fn space(&self) -> &EventSpace {
        &self.space
    }

    fn value_bits(&self, bits: u64) -> Rational {
        self.weights
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, w)| w)
            .sum()
    }
}

/// An arbitrary valuation of all events, with no normalization imposed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePF {
    space: EventSpace,
    values: Vec<Rational>,
}

/// Largest atom count for which every event gets its own table slot.
pub const MAX_TABLE_ATOMS: usize = 16;

impl TablePF {
    /// `values[b]` is the value of the event with atom bitmask `b`.
    pub fn new(space: &EventSpace, values: Vec<Rational>) -> Result<Self, ProbError> {
        if space.atom_count() > MAX_TABLE_ATOMS {
            return Err(ProbError::TooLarge(space.to_string()));
        }
        let expected = 1usize << space.atom_count();
        if values.len() != expected {
            return Err(ProbError::WrongLength { space: space.to_string(), expected, got: values.len() });
        }
        Ok(TablePF { space: space.clone(), values })
    }

    pub fn from_fn(space: &EventSpace, f: impl Fn(u64) -> Rational) -> Result<Self, ProbError> {
        if space.atom_count() > MAX_TABLE_ATOMS {
            return Err(ProbError::TooLarge(space.to_string()));
        }
        let values = (0..1u64 << space.atom_count()).map(f).collect();
        Ok(TablePF { space: space.clone(), values })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

impl fmt::Display for TablePF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .enumerate()
            .map(|(b, v)| format!("{}={v}", self.space.event_from_bits(b as u64)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl Valuation for TablePF {
    fn space(&self) -> &EventSpace {
        &self.space
    }

    fn value_bits(&self, bits: u64) -> Rational {
        self.values[bits as usize].clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondVariant {
    /// `P⁰(x|y) = P(x∧y)·P(y)⁻¹`
    P0,
    /// `P¹(x|y) = P⁰(x|y) ◁ P(y) ▷ 1`
    P1,
    /// `Pˢ(x|y) = P⁰(x|y) ◁ P(y) ▷ P(x)`
    Ps,
}

fn p0(x_and_y: &Rational, y: &Rational) -> Rational {
    x_and_y * &y.inv()
}

/// `a ◁ c ▷ b = 1_c·a + 0_c·b`
fn cond3(a: Rational, c: &Rational, b: Rational) -> Rational {
    let one_c = c * &c.inv();
    let zero_c = Rational::one() - &one_c;
    one_c * a + zero_c * b
}

pub fn cond_p<V: Valuation>(variant: CondVariant, p: &V, x: &Event, y: &Event) -> Result<Rational, ProbError> {
    let xy = p.prob(&x.try_and(y).map_err(|_| ProbError::SpaceMismatch {
        event: y.space().to_string(),
        pf: x.space().to_string(),
    })?)?;
    let py = p.prob(y)?;
    let base = p0(&xy, &py);
    Ok(match variant {
        CondVariant::P0 => base,
        CondVariant::P1 => cond3(base, &py, Rational::one()),
        CondVariant::Ps => cond3(base, &py, p.prob(x)?),
    })
}

pub fn pf_eval<V: Valuation>(p: &V, e: &Event) -> Result<Rational, ProbError> {
    p.prob(e)
}

/// One equation of the axiom systems, quantified over its event variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    /// `P(⊤) = 1`
    Top,
    /// `P(⊥) = 0`
    Bot,
    /// `P(x) = |P(x)|`
    Nonneg,
    /// `P(x∨y) = P(x) + P(y) − P(x∧y)`
    Additivity,
    /// `P(x∧y)·P(y)·P(y)⁻¹ = P(x∧y)`
    WeakCancel,
    /// `P⁰(x|y) = P⁰(y|x)·P(x)·P(y)⁻¹`
    Bayes,
    /// `P⁰(x|y) = P⁰(y|x)·P(x)·(P⁰(y|z)·P(z) + P⁰(y|¬z)·P(¬z))⁻¹`
    Bayes2,
    /// `P(y) = P(y∧z) + P(y∧¬z)`
    Split,
}

impl Axiom {
    pub fn label(self) -> &'static str {
        match self {
            Axiom::Top => "eq23",
            Axiom::Bot => "eq24",
            Axiom::Nonneg => "eq25",
            Axiom::Additivity => "eq26",
            Axiom::WeakCancel => "eq27b",
            Axiom::Bayes => "BR",
            Axiom::Bayes2 => "BR2",
            Axiom::Split => "split",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Axiom::Top | Axiom::Bot => 0,
            Axiom::Nonneg => 1,
            Axiom::Additivity | Axiom::WeakCancel | Axiom::Bayes | Axiom::Split => 2,
            Axiom::Bayes2 => 3,
        }
    }

    /// Both sides of the instance; `v` maps atom bitmasks to values and
    /// `full` is the bitmask of ⊤.
    fn sides(self, v: &dyn Fn(u64) -> Rational, full: u64, e: &[u64]) -> (Rational, Rational) {
        let not = |a: u64| !a & full;
        match self {
            Axiom::Top => (v(full), Rational::one()),
            Axiom::Bot => (v(0), Rational::zero()),
            Axiom::Nonneg => {
                let p = v(e[0]);
                (p.clone(), p.abs())
            }
            Axiom::Additivity => {
                let (x, y) = (e[0], e[1]);
                (v(x | y), v(x) + v(y) - v(x & y))
            }
            Axiom::WeakCancel => {
                let (x, y) = (e[0], e[1]);
                let py = v(y);
                (v(x & y) * &py * py.inv(), v(x & y))
            }
            Axiom::Bayes => {
                let (x, y) = (e[0], e[1]);
                let (px, py, pxy) = (v(x), v(y), v(x & y));
                (p0(&pxy, &py), p0(&pxy, &px) * px * py.inv())
            }
            Axiom::Bayes2 => {
                let (x, y, z) = (e[0], e[1], e[2]);
                let (px, py, pxy) = (v(x), v(y), v(x & y));
                let (pz, pnz) = (v(z), v(not(z)));
                let denom = p0(&v(y & z), &pz) * &pz + p0(&v(y & not(z)), &pnz) * &pnz;
                (p0(&pxy, &py), p0(&pxy, &px) * px * denom.inv())
            }
            Axiom::Split => {
                let (y, z) = (e[0], e[1]);
                (v(y), v(y & z) + v(y & not(z)))
            }
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    PF,
    WPF,
    PFPrime,
    BR,
    BR2,
}

impl System {
    pub fn axioms(self) -> &'static [Axiom] {
        match self {
            System::PF => &[Axiom::Top, Axiom::Bot, Axiom::Nonneg, Axiom::Additivity],
            System::WPF => &[Axiom::Top, Axiom::Bot, Axiom::Nonneg, Axiom::WeakCancel],
            System::PFPrime => &[Axiom::Top, Axiom::Bot, Axiom::Nonneg, Axiom::Bayes2],
            System::BR => &[Axiom::Bayes],
            System::BR2 => &[Axiom::Bayes2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            System::PF => "PF",
            System::WPF => "WPF",
            System::PFPrime => "PF'",
            System::BR => "BR",
            System::BR2 => "BR2",
        }
    }

    pub fn parse(s: &str) -> Option<System> {
        Some(match s {
            "PF" => System::PF,
            "WPF" => System::WPF,
            "PF'" | "PFprime" => System::PFPrime,
            "BR" => System::BR,
            "BR2" => System::BR2,
            _ => return None,
        })
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failing instance of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub axiom: Axiom,
    pub events: Vec<Event>,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.events.is_empty() {
            match self.axiom {
                Axiom::Top => "T".to_string(),
                _ => "F".to_string(),
            }
        } else {
            let names = ["x", "y", "z"];
            let parts: Vec<String> = self
                .events
                .iter()
                .zip(names)
                .map(|(e, n)| format!("{n}={e}"))
                .collect();
            parts.join(", ")
        };
        write!(f, "{} at {at}: {} vs {}", self.axiom, self.lhs, self.rhs)
    }
}

fn find_failure(space: &EventSpace, v: &dyn Fn(u64) -> Rational, axiom: Axiom) -> Option<Witness> {
    let n = space.atom_count();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let count = 1u64 << n;
    let arity = axiom.arity();
    let mut idx = vec![0u64; arity];
    loop {
        let (lhs, rhs) = axiom.sides(v, full, &idx);
        if lhs != rhs {
            return Some(Witness {
                axiom,
                events: idx.iter().map(|b| space.event_from_bits(*b)).collect(),
                lhs,
                rhs,
            });
        }
        // Odometer over event tuples, first variable slowest.
        let mut k = arity;
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < count {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// First failing instance of `axiom`, enumerating event tuples in bitmask
/// order.
pub fn check_axiom<V: Valuation>(p: &V, axiom: Axiom) -> Option<Witness> {
    find_failure(p.space(), &|b| p.value_bits(b), axiom)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemReport {
    pub system: System,
    pub failure: Option<Witness>,
}

impl SystemReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for SystemReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "OK {}", self.system),
            Some(w) => write!(f, "FAIL {} {w}", self.system),
        }
    }
}

pub fn check_system<V: Valuation>(p: &V, system: System) -> SystemReport {
    let failure = system.axioms().iter().find_map(|a| check_axiom(p, *a));
    SystemReport { system, failure }
}

/// Audits each system exhaustively over all event tuples of the space.
pub fn check_axioms<V: Valuation>(p: &V, systems: &[System]) -> Vec<SystemReport> {
    systems.iter().map(|s| check_system(p, *s)).collect()
}

/// Searches valuation tables over `grid` for one satisfying every axiom in
/// `satisfy` and violating at least one axiom of every group in `violate`.
/// Assignments are visited in lexicographic order (events by bitmask, values
/// in grid order); the first hit is returned.
pub fn search_axioms(
    space: &EventSpace,
    satisfy: &[Axiom],
    violate: &[&[Axiom]],
    grid: &[Rational],
) -> Result<Option<TablePF>, ProbError> {
    let n = space.atom_count();
    if n > 4 {
        return Err(ProbError::TooLarge(space.to_string()));
    }
    let events = 1usize << n;
    let full = events - 1;
    // Per-event candidate values; assignments failing a satisfied
    // single-event axiom are skipped without changing the visiting order.
    let candidates: Vec<Vec<Rational>> = (0..events)
        .map(|b| {
            grid.iter()
                .filter(|c| {
                    let top_ok = !(satisfy.contains(&Axiom::Top) && b == full) || c.is_one();
                    let bot_ok = !(satisfy.contains(&Axiom::Bot) && b == 0) || c.is_zero();
                    let pos_ok = !satisfy.contains(&Axiom::Nonneg) || !c.is_negative();
                    top_ok && bot_ok && pos_ok
                })
                .cloned()
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    let mut idx = vec![0usize; events];
    loop {
        let values: Vec<Rational> = idx.iter().enumerate().map(|(b, i)| candidates[b][*i].clone()).collect();
        let v = |b: u64| values[b as usize].clone();
        let sat = satisfy.iter().all(|a| find_failure(space, &v, *a).is_none());
        if sat {
            let viol = violate
                .iter()
                .all(|group| group.iter().any(|a| find_failure(space, &v, *a).is_some()));
            if viol {
                return Ok(Some(TablePF::new(space, values)?));
            }
        }
        let mut k = events;
        loop {
            if k == 0 {
                return Ok(None);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < candidates[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// System-level form of [`search_axioms`].
pub fn search_counterexample(
    space: &EventSpace,
    satisfy: &[System],
    violate: &[System],
    grid: &[Rational],
) -> Result<Option<TablePF>, ProbError> {
    let mut sat: Vec<Axiom> = satisfy.iter().flat_map(|s| s.axioms().iter().copied()).collect();
    sat.sort();
    sat.dedup();
    let viol: Vec<&[Axiom]> = violate.iter().map(|s| s.axioms()).collect();
    search_axioms(space, &sat, &viol, grid)
}

/// The valuation with `P(⊤) = 1` and every other event at 0.
pub fn degenerate_table(space: &EventSpace) -> TablePF {
    let full = space.top().bits();
    TablePF::from_fn(space, |b| if b == full { Rational::one() } else { Rational::zero() })
        .expect("small space")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn e_space() -> EventSpace {
        EventSpace::generated("E", &["e"]).unwrap()
    }

    #[test]
    fn weight_pf_sums_atoms() {
        let s = EventSpace::new("S", &["a1", "a2", "a3"]).unwrap();
        let p = WeightPF::new(&s, vec![q("1/2"), q("1/3"), q("1/6")]).unwrap();
        let e = s.atom(0).or(&s.atom(1));
        assert_eq!(p.prob(&e).unwrap(), q("5/6"));
        assert_eq!(p.prob(&s.top()).unwrap(), q("1"));
        assert!(matches!(
            WeightPF::new(&s, vec![q("1/2"), q("1/2"), q("1/2")]),
            Err(ProbError::MassNotOne(_))
        ));
        assert!(matches!(
            WeightPF::new(&s, vec![q("3/2"), q("-1/2"), q("0")]),
            Err(ProbError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn conditional_variants() {
        let s = EventSpace::new("S", &["a1", "a2"]).unwrap();
        let p = WeightPF::new(&s, vec![q("1"), q("0")]).unwrap();
        let x = s.atom(0);
        let y = s.atom(1);
        assert_eq!(cond_p(CondVariant::P0, &p, &x, &y).unwrap(), q("0"));
        assert_eq!(cond_p(CondVariant::P1, &p, &x, &y).unwrap(), q("1"));
        assert_eq!(cond_p(CondVariant::Ps, &p, &x, &y).unwrap(), q("1"));
        let u = WeightPF::uniform(&s);
        assert_eq!(cond_p(CondVariant::P0, &u, &x, &x).unwrap(), q("1"));
    }

    #[test]
    fn separating_model() {
        let s = e_space();
        let t = degenerate_table(&s);
        let reports = check_axioms(&t, &[System::PF, System::WPF, System::BR]);
        assert_eq!(reports[0].to_string(), "FAIL PF eq26 at x=e, y=!e: 1 vs 0");
        assert!(reports[1].holds());
        assert!(reports[2].holds());
    }

    #[test]
    fn search_finds_the_separating_model_first() {
        let s = e_space();
        let grid = [q("0"), q("1")];
        let found = search_counterexample(&s, &[System::WPF], &[System::PF], &grid).unwrap().unwrap();
        assert_eq!(found, degenerate_table(&s));
        assert_eq!(search_counterexample(&s, &[System::PF], &[System::WPF], &grid).unwrap(), None);
        assert_eq!(search_counterexample(&s, &[System::PF], &[System::BR], &grid).unwrap(), None);
    }

    #[test]
    fn uniform_models_pass_everything() {
        let s = EventSpace::new("S", &["a", "b", "c"]).unwrap();
        let p = WeightPF::uniform(&s);
        for r in check_axioms(&p, &[System::PF, System::WPF, System::PFPrime, System::BR, System::BR2]) {
            assert!(r.holds(), "{r}");
        }
    }
}
