//! Finite atomic Boolean algebras. An event is the set of atoms below it,
//! stored as a bitmask over the atom indices of its space.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};

/// Largest supported atom count (one bit per atom).
pub const MAX_ATOMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("an event space needs at least one atom")]
    EmptySpace,
    #[error("duplicate atom name '{0}'")]
    DuplicateAtom(String),
    #[error("too many atoms ({0}); at most {MAX_ATOMS} are supported")]
    TooManyAtoms(usize),
    #[error("unknown atom '{name}' in space {space}")]
    UnknownAtom { name: String, space: String },
    #[error("events from different spaces: {0} and {1}")]
    SpaceMismatch(String, String),
}

#[derive(Debug)]
struct SpaceData {
    label: String,
    atoms: Vec<String>,
    /// Named generator events (for spaces presented by generators).
    generators: Vec<(String, u64)>,
}

/// A finite power-set Boolean algebra presented by its atoms.
///
/// Equality is structural over the label and the ordered atom names.
#[derive(Clone)]
pub struct EventSpace(Arc<SpaceData>);

impl PartialEq for EventSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.label == other.0.label && self.0.atoms == other.0.atoms)
    }
}

impl Eq for EventSpace {}

impl fmt::Debug for EventSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventSpace({}: {})", self.0.label, self.0.atoms.join(" "))
    }
}

impl fmt::Display for EventSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.label)
    }
}

impl EventSpace {
    /// A space whose atoms are exactly `names`, in order.
    pub fn new(label: &str, names: &[&str]) -> Result<Self, EventError> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        Self::from_names(label, names, Vec::new())
    }

    pub fn from_names(
        label: &str,
        names: Vec<String>,
        generators: Vec<(String, u64)>,
    ) -> Result<Self, EventError> {
        if names.is_empty() {
            return Err(EventError::EmptySpace);
        }
        if names.len() > MAX_ATOMS {
            return Err(EventError::TooManyAtoms(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(EventError::DuplicateAtom(n.clone()));
            }
        }
        Ok(EventSpace(Arc::new(SpaceData { label: label.to_string(), atoms: names, generators })))
    }

    /// The free Boolean algebra on the given generator events: `2^k` atoms,
    /// one per truth assignment. With a single generator `e` the atoms are
    /// `e` and `!e`.
    pub fn generated(label: &str, gens: &[&str]) -> Result<Self, EventError> {
        if gens.is_empty() {
            return Err(EventError::EmptySpace);
        }
        if gens.len() > 6 {
            return Err(EventError::TooManyAtoms(1 << gens.len()));
        }
        for (i, g) in gens.iter().enumerate() {
            if gens[..i].contains(g) {
                return Err(EventError::DuplicateAtom(g.to_string()));
            }
        }
        let n = 1usize << gens.len();
        let mut atoms = Vec::with_capacity(n);
        for i in 0..n {
            let parts: Vec<String> = gens
                .iter()
                .enumerate()
                .map(|(j, g)| if i >> j & 1 == 0 { g.to_string() } else { format!("!{g}") })
                .collect();
            atoms.push(parts.join("&"));
        }
        let generators = gens
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let bits = (0..n).filter(|i| i >> j & 1 == 0).fold(0u64, |b, i| b | 1 << i);
                (g.to_string(), bits)
            })
            .collect();
        Self::from_names(label, atoms, generators)
    }

    /// Same atoms under a different label (isomorphic copy).
    pub fn relabel(&self, label: &str) -> Self {
        EventSpace(Arc::new(SpaceData {
            label: label.to_string(),
            atoms: self.0.atoms.clone(),
            generators: self.0.generators.clone(),
        }))
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    pub fn atom_names(&self) -> &[String] {
        &self.0.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.0.atoms.len()
    }

    pub fn event_count(&self) -> u128 {
        1u128 << self.atom_count()
    }

    pub fn same_atoms(&self, other: &EventSpace) -> bool {
        self.0.atoms == other.0.atoms
    }

    fn full_mask(&self) -> u64 {
        let n = self.atom_count();
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn top(&self) -> Event {
        Event { space: self.clone(), bits: self.full_mask() }
    }

    pub fn bot(&self) -> Event {
        Event { space: self.clone(), bits: 0 }
    }

    pub fn atom(&self, index: usize) -> Event {
        assert!(index < self.atom_count(), "atom index out of range");
        Event { space: self.clone(), bits: 1 << index }
    }

    pub fn atoms(&self) -> impl Iterator<Item = Event> + '_ {
        (0..self.atom_count()).map(move |i| self.atom(i))
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.0.atoms.iter().position(|a| a == name)
    }

    /// The event named `name`: an atom, or a generator of a generated space.
    pub fn named(&self, name: &str) -> Result<Event, EventError> {
        if let Some(i) = self.atom_index(name) {
            return Ok(self.atom(i));
        }
        if let Some((_, bits)) = self.0.generators.iter().find(|(g, _)| g == name) {
            return Ok(Event { space: self.clone(), bits: *bits });
        }
        Err(EventError::UnknownAtom { name: name.to_string(), space: self.0.label.clone() })
    }

    pub fn event_from_bits(&self, bits: u64) -> Event {
        Event { space: self.clone(), bits: bits & self.full_mask() }
    }

    /// All `2^n` events in bitmask order (⊥ first, ⊤ last).
    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        assert!(self.atom_count() < 64, "cannot enumerate 2^64 events");
        (0..(1u64 << self.atom_count())).map(move |b| self.event_from_bits(b))
    }
}

pub fn make_space(label: &str, names: &[&str]) -> Result<EventSpace, EventError> {
    EventSpace::new(label, names)
}

#[derive(Clone, PartialEq, Eq)]
pub struct Event {
    space: EventSpace,
    bits: u64,
}

impl Event {
    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    fn check(&self, other: &Event) -> Result<(), EventError> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(EventError::SpaceMismatch(self.space.to_string(), other.space.to_string()))
        }
    }

    pub fn try_and(&self, other: &Event) -> Result<Event, EventError> {
        self.check(other)?;
        Ok(Event { space: self.space.clone(), bits: self.bits & other.bits })
    }

    pub fn try_or(&self, other: &Event) -> Result<Event, EventError> {
        self.check(other)?;
        Ok(Event { space: self.space.clone(), bits: self.bits | other.bits })
    }

    /// Meet. Panics when the spaces differ; use [`Event::try_and`] for
    /// untrusted input.
    pub fn and(&self, other: &Event) -> Event {
        self.try_and(other).expect("event space mismatch")
    }

    pub fn or(&self, other: &Event) -> Event {
        self.try_or(other).expect("event space mismatch")
    }

    pub fn not(&self) -> Event {
        Event { space: self.space.clone(), bits: !self.bits & self.space.full_mask() }
    }

    pub fn is_top(&self) -> bool {
        self.bits == self.space.full_mask()
    }

    pub fn is_bot(&self) -> bool {
        self.bits == 0
    }

    /// Exactly one atom below it. ⊥ is not atomic.
    pub fn is_atomic(&self) -> bool {
        self.bits.count_ones() == 1
    }

    pub fn contains_atom(&self, index: usize) -> bool {
        index < 64 && self.bits >> index & 1 == 1
    }

    /// Indices of the atoms below this event, ascending.
    pub fn atom_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.space.atom_count()).filter(move |&i| self.contains_atom(i))
    }

    pub fn leq(&self, other: &Event) -> bool {
        self.bits & !other.bits == 0
    }

    /// The unique join-of-atoms expression for this event.
    pub fn to_expr(&self) -> EventExpr {
        if self.is_top() {
            return EventExpr::Top;
        }
        let mut parts = self.atom_indices().map(|i| atom_expr(&self.space.atom_names()[i]));
        match parts.next() {
            None => EventExpr::Bot,
            Some(first) => parts.fold(first, |acc, p| EventExpr::Or(Box::new(acc), Box::new(p))),
        }
    }
}

/// Expression for an atom name; names of generated atoms such as `!e&f`
/// are turned back into the corresponding conjunction.
fn atom_expr(name: &str) -> EventExpr {
    match parse_event(name) {
        Ok(e) => e,
        Err(_) => EventExpr::Name(name.to_string()),
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_top() {
            return f.write_str("T");
        }
        if self.is_bot() {
            return f.write_str("F");
        }
        let names: Vec<&String> = self.atom_indices().map(|i| &self.space.atom_names()[i]).collect();
        if names.len() == 1 {
            return f.write_str(names[0]);
        }
        let parts: Vec<String> = names
            .iter()
            .map(|n| if n.contains('&') { format!("({n})") } else { n.to_string() })
            .collect();
        f.write_str(&parts.join("|"))
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Event({}: {self})", self.space.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventExpr {
    Top,
    Bot,
    Name(String),
    And(Box<EventExpr>, Box<EventExpr>),
    Or(Box<EventExpr>, Box<EventExpr>),
    Not(Box<EventExpr>),
}

impl EventExpr {
    pub fn name(n: &str) -> Self {
        EventExpr::Name(n.to_string())
    }

    pub fn and(a: EventExpr, b: EventExpr) -> Self {
        EventExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: EventExpr, b: EventExpr) -> Self {
        EventExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: EventExpr) -> Self {
        EventExpr::Not(Box::new(a))
    }

    fn prec(&self) -> u8 {
        match self {
            EventExpr::Or(..) => 1,
            EventExpr::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            EventExpr::Top => f.write_str("T")?,
            EventExpr::Bot => f.write_str("F")?,
            EventExpr::Name(n) => f.write_str(n)?,
            EventExpr::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("&")?;
                b.fmt_prec(f, 3)?;
            }
            EventExpr::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str("|")?;
                b.fmt_prec(f, 2)?;
            }
            EventExpr::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 3)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Set semantics: ∧ ↦ ∩, ∨ ↦ ∪, ¬ ↦ complement.
pub fn eval_event(x: &EventExpr, space: &EventSpace) -> Result<Event, EventError> {
    Ok(match x {
        EventExpr::Top => space.top(),
        EventExpr::Bot => space.bot(),
        EventExpr::Name(n) => space.named(n)?,
        EventExpr::And(a, b) => eval_event(a, space)?.and(&eval_event(b, space)?),
        EventExpr::Or(a, b) => eval_event(a, space)?.or(&eval_event(b, space)?),
        EventExpr::Not(a) => eval_event(a, space)?.not(),
    })
}

pub fn is_atomic(e: &Event) -> bool {
    e.is_atomic()
}

pub fn parse_event(input: &str) -> Result<EventExpr, SyntaxError> {
    let toks = tokenize(input)?;
    let mut cur = Cursor::new(&toks, input.chars().count() + 1);
    let e = event_expr(&mut cur)?;
    cur.expect_end()?;
    Ok(e)
}

/// `or := and ('|' and)*`, `and := not ('&' not)*`,
/// `not := '!' not | 'T' | 'F' | IDENT | '(' or ')'`
pub fn event_expr(cur: &mut Cursor<'_>) -> Result<EventExpr, SyntaxError> {
    let mut acc = event_and(cur)?;
    while cur.eat(&Tok::Bar) {
        acc = EventExpr::or(acc, event_and(cur)?);
    }
    Ok(acc)
}

fn event_and(cur: &mut Cursor<'_>) -> Result<EventExpr, SyntaxError> {
    let mut acc = event_not(cur)?;
    while cur.eat(&Tok::Amp) {
        acc = EventExpr::and(acc, event_not(cur)?);
    }
    Ok(acc)
}

fn event_not(cur: &mut Cursor<'_>) -> Result<EventExpr, SyntaxError> {
    if cur.eat(&Tok::Bang) {
        return Ok(EventExpr::not(event_not(cur)?));
    }
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.bump();
            let e = event_expr(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        Some(Tok::Ident(n)) => {
            let n = n.clone();
            cur.bump();
            Ok(match n.as_str() {
                "T" => EventExpr::Top,
                "F" => EventExpr::Bot,
                _ => EventExpr::Name(n),
            })
        }
        _ => Err(cur.error("expected an event")),
    }
}

/// A named two-sided law over three event variables.
pub type EventLaw = (&'static str, fn(&Event, &Event, &Event) -> (Event, Event));

/// The self-dual six-equation basis for Boolean algebras.
pub fn ba_laws() -> Vec<EventLaw> {
    vec![
        ("absorb-or-and", |x, y, _| (x.or(y).and(y), y.clone())),
        ("absorb-and-or", |x, y, _| (x.and(y).or(y), y.clone())),
        ("distrib-and", |x, y, z| (x.and(&y.or(z)), y.and(x).or(&z.and(x)))),
        ("distrib-or", |x, y, z| (x.or(&y.and(z)), y.or(x).and(&z.or(x)))),
        ("complement-and", |x, _, _| (x.and(&x.not()), x.space().bot())),
        ("complement-or", |x, _, _| (x.or(&x.not()), x.space().top())),
    ]
}

/// First failing instance `(law, x, y, z)` of `laws`, quantifying over all
/// event triples of `space`.
pub fn check_event_laws(
    space: &EventSpace,
    laws: &[EventLaw],
) -> Option<(&'static str, Event, Event, Event)> {
    let events: Vec<Event> = space.events().collect();
    for (name, law) in laws {
        for x in &events {
            for y in &events {
                for z in &events {
                    let (l, r) = law(x, y, z);
                    if l != r {
                        return Some((name, x.clone(), y.clone(), z.clone()));
                    }
                }
            }
        }
    }
    None
}
