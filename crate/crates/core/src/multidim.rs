//! Probability function families over several dimensions: arity families,
//! atom tensors, multivariate statistics, reduction of two dimensions to a
//! product space, and an exact check for the existence of a joint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::condval::{corr2_p, cov_p, cv_flat, e_p, var_p, CVExpr, CanonCV, CvError};
use crate::events::{eval_event, Event, EventSpace};
use crate::meadow::Rational;
use crate::probability::WeightPF;

pub type Arity = Vec<String>;

pub fn arity_string(w: &[String]) -> String {
    format!("({})", w.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyViolation {
    UnknownDimension { arity: Arity, dim: String },
    Repetition(Arity),
    MissingSingleton(String),
    NotPermutationClosed { present: Arity, missing: Arity },
    NotSubsequenceClosed { present: Arity, missing: Arity },
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyViolation::UnknownDimension { arity, dim } => {
                write!(f, "unknown dimension '{dim}' in {}", arity_string(arity))
            }
            FamilyViolation::Repetition(w) => write!(f, "repeated dimension in {}", arity_string(w)),
            FamilyViolation::MissingSingleton(d) => write!(f, "singleton closure: ({d}) missing"),
            FamilyViolation::NotPermutationClosed { present, missing } => write!(
                f,
                "permutation closure: {} present but {} missing",
                arity_string(present),
                arity_string(missing)
            ),
            FamilyViolation::NotSubsequenceClosed { present, missing } => write!(
                f,
                "subsequence closure: {} present but {} missing",
                arity_string(present),
                arity_string(missing)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdError {
    #[error("invalid arity family: {0}")]
    BadFamily(FamilyViolation),
    #[error("arity {} is not in the family", arity_string(.0))]
    MissingArity(Arity),
    #[error("no supplied tensor covers arity {}", arity_string(.0))]
    NoTensorFor(Arity),
    #[error("tensor for {} has {got} entries, expected {expected}", arity_string(.arity))]
    TensorSize { arity: Arity, expected: usize, got: usize },
    #[error("tensor for {} has negative entry {value}", arity_string(.arity))]
    NegativeEntry { arity: Arity, value: Rational },
    #[error("tensor for {} has mass {mass}, not 1", arity_string(.arity))]
    MassNotOne { arity: Arity, mass: Rational },
    #[error("incoherent tensors: {0}")]
    Incoherent(String),
    #[error("expected {expected} events, got {got}")]
    WrongEventCount { expected: usize, got: usize },
    #[error("event or value from space {got} used in dimension {dim}")]
    SpaceMismatch { dim: String, got: String },
    #[error("{tuples} atom tuples exceed the bound of {bound}")]
    TooLarge { tuples: usize, bound: usize },
    #[error("dimensions in a multivariate value must be distinct")]
    RepeatedDimension,
    #[error(transparent)]
    Cv(#[from] CvError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArityFamily {
    dims: Vec<String>,
    arities: BTreeSet<Arity>,
}

fn permutations<T: Clone>(w: &[T]) -> Vec<Vec<T>> {
    if w.len() <= 1 {
        return vec![w.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..w.len() {
        let mut rest = w.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Nonempty subsequences obtained by dropping exactly one element.
fn drop_one(w: &[String]) -> Vec<Arity> {
    if w.len() <= 1 {
        return Vec::new();
    }
    (0..w.len())
        .map(|i| {
            let mut v = w.to_vec();
            v.remove(i);
            v
        })
        .collect()
}

impl ArityFamily {
    pub fn new(dims: &[&str], arities: &[&[&str]]) -> ArityFamily {
        ArityFamily {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            arities: arities.iter().map(|w| w.iter().map(|d| d.to_string()).collect()).collect(),
        }
    }

    pub fn from_parts(dims: Vec<String>, arities: impl IntoIterator<Item = Arity>) -> ArityFamily {
        ArityFamily { dims, arities: arities.into_iter().collect() }
    }

    /// Every repetition-free sequence over `dims` of length at most `max_len`.
    pub fn all_up_to(dims: &[&str], max_len: usize) -> ArityFamily {
        let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        let mut arities = BTreeSet::new();
        let mut frontier: Vec<Arity> = vec![Vec::new()];
        for _ in 0..max_len.min(dims.len()) {
            let mut next = Vec::new();
            for w in &frontier {
                for d in &dims {
                    if !w.contains(d) {
                        let mut v = w.clone();
                        v.push(d.clone());
                        arities.insert(v.clone());
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        ArityFamily { dims, arities }
    }

    pub fn dims(&self) -> &[String] {
        &self.dims
    }

    pub fn arities(&self) -> impl Iterator<Item = &Arity> {
        self.arities.iter()
    }

    pub fn contains(&self, w: &[String]) -> bool {
        self.arities.contains(w)
    }

    /// Checks the closure conditions, reporting the first violation.
    pub fn validate(&self) -> Result<(), FamilyViolation> {
        for w in &self.arities {
            if let Some(d) = w.iter().find(|d| !self.dims.contains(d)) {
                return Err(FamilyViolation::UnknownDimension { arity: w.clone(), dim: d.clone() });
            }
            let set: BTreeSet<&String> = w.iter().collect();
            if set.len() != w.len() || w.is_empty() {
                return Err(FamilyViolation::Repetition(w.clone()));
            }
        }
        for d in &self.dims {
            if !self.arities.contains(&vec![d.clone()]) {
                return Err(FamilyViolation::MissingSingleton(d.clone()));
            }
        }
        for w in &self.arities {
            if let Some(p) = permutations(w).into_iter().find(|p| !self.arities.contains(p)) {
                return Err(FamilyViolation::NotPermutationClosed { present: w.clone(), missing: p });
            }
        }
        for w in &self.arities {
            if let Some(s) = drop_one(w).into_iter().find(|s| !self.arities.contains(s)) {
                return Err(FamilyViolation::NotSubsequenceClosed { present: w.clone(), missing: s });
            }
        }
        Ok(())
    }
}

pub fn validate_family(w: &ArityFamily) -> Result<(), FamilyViolation> {
    w.validate()
}

fn tuples(n: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(len as u32);
    (0..total).map(move |mut k| {
        let mut t = vec![0; len];
        for slot in t.iter_mut().rev() {
            *slot = k % n;
            k /= n;
        }
        t
    })
}

fn index_of(t: &[usize], n: usize) -> usize {
    t.iter().fold(0, |acc, a| acc * n + a)
}

/// Marginal of tensor `t` (over arity `from`) onto arity `to`, whose
/// dimensions must all occur in `from`.
fn marginal(from: &[String], t: &[Rational], to: &[String], n: usize) -> Vec<Rational> {
    let pos: Vec<usize> = to.iter().map(|d| from.iter().position(|e| e == d).expect("sub-arity")).collect();
    let mut out = vec![Rational::zero(); n.pow(to.len() as u32)];
    for (k, tup) in tuples(n, from.len()).enumerate() {
        let sub: Vec<usize> = pos.iter().map(|p| tup[*p]).collect();
        out[index_of(&sub, n)] += &t[k];
    }
    out
}

/// A probability function family stored as one atom tensor per arity.
/// Every dimension carries a copy of the same base space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pff {
    family: ArityFamily,
    base: EventSpace,
    tensors: BTreeMap<Arity, Vec<Rational>>,
}

impl Pff {
    /// Builds the family from supplied tensors: each arity takes the
    /// marginal of the first supplied tensor whose dimensions cover it.
    pub fn from_tensors(
        family: ArityFamily,
        base: &EventSpace,
        given: &[(Arity, Vec<Rational>)],
    ) -> Result<Pff, MdError> {
        family.validate().map_err(MdError::BadFamily)?;
        let n = base.atom_count();
        for (w, t) in given {
            if !family.contains(w) {
                return Err(MdError::MissingArity(w.clone()));
            }
            let expected = n.pow(w.len() as u32);
            if t.len() != expected {
                return Err(MdError::TensorSize { arity: w.clone(), expected, got: t.len() });
            }
        }
        let mut tensors = BTreeMap::new();
        for w in family.arities() {
            let (g, t) = given
                .iter()
                .find(|(g, _)| w.iter().all(|d| g.contains(d)))
                .ok_or_else(|| MdError::NoTensorFor(w.clone()))?;
            tensors.insert(w.clone(), marginal(g, t, w, n));
        }
        let p = Pff { family, base: base.clone(), tensors };
        p.validate()?;
        Ok(p)
    }

    /// Checks nonnegativity, unit mass, permutation and marginal coherence.
    pub fn validate(&self) -> Result<(), MdError> {
        let n = self.base.atom_count();
        for (w, t) in &self.tensors {
            if let Some(v) = t.iter().find(|v| v.is_negative()) {
                return Err(MdError::NegativeEntry { arity: w.clone(), value: v.clone() });
            }
            let mass: Rational = t.iter().sum();
            if !mass.is_one() {
                return Err(MdError::MassNotOne { arity: w.clone(), mass });
            }
            for p in permutations(w) {
                if marginal(w, t, &p, n) != self.tensors[&p] {
                    return Err(MdError::Incoherent(format!(
                        "{} is not a permutation of {}",
                        arity_string(&p),
                        arity_string(w)
                    )));
                }
            }
            if w.len() > 1 {
                let rest = w[1..].to_vec();
                if marginal(w, t, &rest, n) != self.tensors[&rest] {
                    return Err(MdError::Incoherent(format!(
                        "summing {} over {} does not give {}",
                        arity_string(w),
                        w[0],
                        arity_string(&rest)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &ArityFamily {
        &self.family
    }

    pub fn base(&self) -> &EventSpace {
        &self.base
    }

    /// The copy of the base space for dimension `d`.
    pub fn space(&self, d: &str) -> EventSpace {
        self.base.relabel(d)
    }

    pub fn tensor(&self, w: &[String]) -> Option<&[Rational]> {
        self.tensors.get(w).map(Vec::as_slice)
    }

    fn require(&self, w: &[String]) -> Result<&[Rational], MdError> {
        self.tensor(w).ok_or_else(|| MdError::MissingArity(w.to_vec()))
    }

    /// The one-dimensional marginal as an ordinary probability function.
    pub fn marginal_pf(&self, d: &str) -> Result<WeightPF, MdError> {
        let t = self.require(&[d.to_string()])?;
        Ok(WeightPF::new(&self.space(d), t.to_vec()).expect("validated tensor"))
    }
}

fn check_event(dim: &str, base: &EventSpace, e: &Event) -> Result<(), MdError> {
    if !e.space().same_atoms(base) {
        return Err(MdError::SpaceMismatch { dim: dim.to_string(), got: e.space().to_string() });
    }
    Ok(())
}

/// `P^w(e₁, …, eₙ)`: the tensor mass on atom tuples below the events.
pub fn pff_eval(p: &Pff, w: &[String], events: &[Event]) -> Result<Rational, MdError> {
    let t = p.require(w)?;
    if events.len() != w.len() {
        return Err(MdError::WrongEventCount { expected: w.len(), got: events.len() });
    }
    for (d, e) in w.iter().zip(events) {
        check_event(d, &p.base, e)?;
    }
    Ok(eval_bits(t, p.base.atom_count(), &events.iter().map(Event::bits).collect::<Vec<_>>()))
}

fn eval_bits(t: &[Rational], n: usize, bits: &[u64]) -> Rational {
    tuples(n, bits.len())
        .enumerate()
        .filter(|(_, tup)| tup.iter().zip(bits).all(|(a, b)| b >> a & 1 == 1))
        .map(|(k, _)| t[k].clone())
        .sum()
}

/// A failing instance of a family axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PffFailure {
    pub axiom: &'static str,
    pub arity: Arity,
    pub events: Vec<Event>,
}

impl fmt::Display for PffFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let evs: Vec<String> = self.events.iter().map(Event::to_string).collect();
        write!(f, "{} at {}[{}]", self.axiom, arity_string(&self.arity), evs.join(", "))
    }
}

/// Largest number of event tuples [`check_pff`] enumerates per arity.
pub const CHECK_BOUND: usize = 1 << 16;

/// Audits the family axioms exhaustively over event tuples: symmetry under
/// simultaneous permutation of arity and arguments, `P^d(⊤) = 1`,
/// `P^d(⊥) = 0`, `P^{d,w}(⊤, …) = P^w(…)`, `P^{d,w}(⊥, …) = 0`,
/// nonnegativity, and additivity in the first slot.
pub fn check_pff(p: &Pff) -> Result<Option<PffFailure>, MdError> {
    let n = p.base.atom_count();
    let ev = 1u64 << n;
    let full = ev - 1;
    let fail = |axiom, w: &Arity, bits: &[u64]| PffFailure {
        axiom,
        arity: w.clone(),
        events: bits.iter().map(|b| p.base.event_from_bits(*b)).collect(),
    };
    for (w, t) in &p.tensors {
        let count = (ev as usize).checked_pow(w.len() as u32 + 1).unwrap_or(usize::MAX);
        if count > CHECK_BOUND {
            return Err(MdError::TooLarge { tuples: count, bound: CHECK_BOUND });
        }
        let val = |bits: &[u64]| eval_bits(t, n, bits);
        if w.len() == 1 {
            if !val(&[full]).is_one() {
                return Ok(Some(fail("eq23w", w, &[full])));
            }
            if !val(&[0]).is_zero() {
                return Ok(Some(fail("eq24w", w, &[0])));
            }
        }
        for tup in tuples(ev as usize, w.len()) {
            let bits: Vec<u64> = tup.iter().map(|b| *b as u64).collect();
            let v = val(&bits);
            if v.is_negative() {
                return Ok(Some(fail("eq25w-abs", w, &bits)));
            }
            for idx in permutations(&(0..w.len()).collect::<Vec<_>>()) {
                let pw: Arity = idx.iter().map(|i| w[*i].clone()).collect();
                let pb: Vec<u64> = idx.iter().map(|i| bits[*i]).collect();
                if eval_bits(&p.tensors[&pw], n, &pb) != v {
                    return Ok(Some(fail("wperm", w, &bits)));
                }
            }
            if w.len() > 1 {
                let rest = &w[1..];
                if bits[0] == full && v != eval_bits(&p.tensors[rest], n, &bits[1..]) {
                    return Ok(Some(fail("eq25w-top", w, &bits)));
                }
                if bits[0] == 0 && !v.is_zero() {
                    return Ok(Some(fail("eq24w", w, &bits)));
                }
            }
            for y in 0..ev {
                let x = bits[0];
                let with = |e: u64| {
                    let mut b = bits.clone();
                    b[0] = e;
                    val(&b)
                };
                if with(x | y) != v.clone() + with(y) - with(x & y) {
                    let mut b = bits.clone();
                    b.insert(1, y);
                    return Ok(Some(fail("eq26w", w, &b)));
                }
            }
        }
    }
    Ok(None)
}

/// A vector of CVs, each labelled with its own dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiCV {
    components: Vec<(String, CanonCV)>,
}

impl MultiCV {
    pub fn new(components: Vec<(String, CanonCV)>) -> Result<MultiCV, MdError> {
        let dims: BTreeSet<&String> = components.iter().map(|(d, _)| d).collect();
        if dims.len() != components.len() {
            return Err(MdError::RepeatedDimension);
        }
        Ok(MultiCV { components })
    }

    pub fn arity(&self) -> Arity {
        self.components.iter().map(|(d, _)| d.clone()).collect()
    }

    pub fn components(&self) -> &[(String, CanonCV)] {
        &self.components
    }
}

/// Flat form summands `(eᵢ, tᵢ)` of a CV, with events over the base space.
fn flat_terms(p: &Pff, d: &str, x: &CanonCV) -> Result<Vec<(Event, Rational)>, MdError> {
    if !x.space().same_atoms(&p.base) {
        return Err(MdError::SpaceMismatch { dim: d.to_string(), got: x.space().to_string() });
    }
    let mut out = Vec::new();
    let mut cur = cv_flat(x);
    loop {
        let (head, rest) = match cur {
            CVExpr::Add(a, b) => (*b, Some(*a)),
            other => (other, None),
        };
        if let CVExpr::Guard(e, v) = head {
            let c = match *v {
                CVExpr::Val(crate::meadow::Term::Const(c)) => c,
                _ => unreachable!("flat forms guard constants"),
            };
            out.push((eval_event(&e, &p.base).expect("atoms of the base space"), c));
        }
        match rest {
            Some(r) => cur = r,
            None => return Ok(out),
        }
    }
}

fn one_dim(x: &MultiCV, expected: usize) -> Result<&[(String, CanonCV)], MdError> {
    if x.components.len() != expected {
        return Err(MdError::WrongEventCount { expected, got: x.components.len() });
    }
    Ok(&x.components)
}

fn e_dim(p: &Pff, d: &str, x: &CanonCV) -> Result<Rational, MdError> {
    let w = vec![d.to_string()];
    p.require(&w)?;
    let mut acc = Rational::zero();
    for (e, t) in flat_terms(p, d, x)? {
        acc += t * pff_eval(p, &w, &[e])?;
    }
    Ok(acc)
}

/// `E_P(⟨X^a⟩) = Σᵢ tᵢ·P^a(eᵢ)`
pub fn md_e(p: &Pff, x: &MultiCV) -> Result<Rational, MdError> {
    let c = one_dim(x, 1)?;
    e_dim(p, &c[0].0, &c[0].1)
}

/// `Σᵢ tᵢ²·P^a(eᵢ) − (Σᵢ tᵢ·P^a(eᵢ))²`
pub fn md_var(p: &Pff, x: &MultiCV) -> Result<Rational, MdError> {
    let c = one_dim(x, 1)?;
    let (d, cv) = (&c[0].0, &c[0].1);
    Ok(e_dim(p, d, &cv.square())? - e_dim(p, d, cv)?.square())
}

/// `ΣᵢΣⱼ tᵢ·rⱼ·P^{a,b}(eᵢ, fⱼ) − E⟨X^a⟩·E⟨Y^b⟩`
pub fn md_cov(p: &Pff, xy: &MultiCV) -> Result<Rational, MdError> {
    let c = one_dim(xy, 2)?;
    let ((a, x), (b, y)) = (&c[0], &c[1]);
    let w = xy.arity();
    p.require(&w)?;
    let xs = flat_terms(p, a, x)?;
    let ys = flat_terms(p, b, y)?;
    let mut joint = Rational::zero();
    for (e, t) in &xs {
        for (f, r) in &ys {
            joint += t * r * pff_eval(p, &w, &[e.clone(), f.clone()])?;
        }
    }
    Ok(joint - e_dim(p, a, x)? * e_dim(p, b, y)?)
}

/// `COV² · (VAR·VAR)⁻¹`
pub fn md_corr2(p: &Pff, xy: &MultiCV) -> Result<Rational, MdError> {
    let c = one_dim(xy, 2)?;
    let ((a, x), (b, y)) = (&c[0], &c[1]);
    let var = |d: &str, v: &CanonCV| -> Result<Rational, MdError> {
        Ok(e_dim(p, d, &v.square())? - e_dim(p, d, v)?.square())
    };
    Ok(md_cov(p, xy)?.square() * (var(a, x)? * var(b, y)?).inv())
}

/// The product of two dimension spaces, with atom pair `(i, j)` at index
/// `i·n + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    space: EventSpace,
    n: usize,
}

impl Product {
    pub fn new(base: &EventSpace, a: &str, b: &str) -> Product {
        let names: Vec<String> = base
            .atom_names()
            .iter()
            .flat_map(|x| base.atom_names().iter().map(move |y| format!("<{x},{y}>")))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let space = EventSpace::new(&format!("{a}x{b}"), &refs).expect("distinct pairs");
        Product { space, n: base.atom_count() }
    }

    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    /// `⟨e, f⟩`: the rectangle of atom pairs below `e` and `f`.
    pub fn pair(&self, e: &Event, f: &Event) -> Event {
        let mut bits = 0u64;
        for i in e.atom_indices() {
            for j in f.atom_indices() {
                bits |= 1 << (i * self.n + j);
            }
        }
        self.space.event_from_bits(bits)
    }
}

/// `P^{a×b}` with `P^{a×b}(⟨e,f⟩) = P^{a,b}(e,f)`.
pub fn lift_product(p: &Pff, a: &str, b: &str) -> Result<(Product, WeightPF), MdError> {
    let t = p.require(&[a.to_string(), b.to_string()])?;
    let prod = Product::new(&p.base, a, b);
    let pf = WeightPF::new(prod.space(), t.to_vec()).expect("validated tensor");
    Ok((prod, pf))
}

/// `[X]₀` (slot 0) or `[X]₁` (slot 1): the cylinder extension of `X`.
pub fn lift_cv(x: &CanonCV, slot: usize, prod: &Product) -> Result<CanonCV, MdError> {
    if x.space().atom_count() != prod.n {
        return Err(MdError::SpaceMismatch { dim: prod.space.to_string(), got: x.space().to_string() });
    }
    let n = prod.n;
    let values = (0..n * n)
        .map(|k| if slot == 0 { x.at(k / n).clone() } else { x.at(k % n).clone() })
        .collect();
    Ok(CanonCV::new(prod.space(), values)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedStats {
    pub e_x: Rational,
    pub e_y: Rational,
    pub var_x: Rational,
    pub var_y: Rational,
    pub cov: Rational,
    pub corr2: Rational,
}

/// Statistics of `⟨X^a, Y^b⟩` computed on the product space.
pub fn reduced_stats(p: &Pff, xy: &MultiCV) -> Result<ReducedStats, MdError> {
    let c = one_dim(xy, 2)?;
    let ((a, x), (b, y)) = (&c[0], &c[1]);
    let (prod, pf) = lift_product(p, a, b)?;
    let lx = lift_cv(x, 0, &prod)?;
    let ly = lift_cv(y, 1, &prod)?;
    Ok(ReducedStats {
        e_x: e_p(&lx, &pf)?,
        e_y: e_p(&ly, &pf)?,
        var_x: var_p(&lx, &pf)?,
        var_y: var_p(&ly, &pf)?,
        cov: cov_p(&lx, &ly, &pf)?,
        corr2: corr2_p(&lx, &ly, &pf)?,
    })
}

/// Outcome of the joint existence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JointVerdict {
    /// A nonnegative tensor over the full tuple matching every marginal.
    Witness(Vec<Rational>),
    /// The marginal equations alone have no solution.
    Inconsistent,
    /// Multipliers `λₖ ≥ 0` such that `Σ λₖ·xₖ` equals `value < 0` on every
    /// solution of the marginal equations, contradicting `x ≥ 0`.
    Infeasible { multipliers: Vec<(usize, Rational)>, value: Rational },
}

/// Default bound on the number of atom tuples in [`joint_exists`].
pub const JOINT_BOUND: usize = 64;

/// An inequality `constant + Σ coeffs·free ≥ 0` together with the
/// nonnegativity multipliers it was derived from.
#[derive(Debug, Clone)]
struct Ineq {
    constant: Rational,
    coeffs: BTreeMap<usize, Rational>,
    origin: BTreeMap<usize, Rational>,
}

impl Ineq {
    fn combine(&self, a: &Rational, other: &Ineq, b: &Rational) -> Ineq {
        let mut coeffs = BTreeMap::new();
        for (k, v) in self.coeffs.iter().map(|(k, v)| (k, v * a)).chain(other.coeffs.iter().map(|(k, v)| (k, v * b))) {
            let e = coeffs.entry(*k).or_insert_with(Rational::zero);
            *e += v;
        }
        coeffs.retain(|_, v: &mut Rational| !v.is_zero());
        let mut origin = BTreeMap::new();
        for (k, v) in self.origin.iter().map(|(k, v)| (k, v * a)).chain(other.origin.iter().map(|(k, v)| (k, v * b))) {
            let e = origin.entry(*k).or_insert_with(Rational::zero);
            *e += v;
        }
        origin.retain(|_, v: &mut Rational| !v.is_zero());
        Ineq { constant: &self.constant * a + &other.constant * b, coeffs, origin }
    }
}

/// Searches for a joint tensor over `dims` whose marginals match every
/// arity of the family made of those dimensions. Exact: Gaussian
/// elimination on the marginal equations, then Fourier–Motzkin on the
/// nonnegativity constraints.
pub fn joint_exists(p: &Pff, dims: &[String], bound: usize) -> Result<JointVerdict, MdError> {
    let n = p.base.atom_count();
    let k = dims.len();
    let vars = n.checked_pow(k as u32).unwrap_or(usize::MAX);
    if vars > bound {
        return Err(MdError::TooLarge { tuples: vars, bound });
    }
    for d in dims {
        p.require(std::slice::from_ref(d))?;
    }
    if k == 1 {
        return Ok(JointVerdict::Witness(p.require(dims)?.to_vec()));
    }
    // Rows: coefficients over the joint entries, then the right-hand side.
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    rows.push(vec![Rational::one(); vars + 1]);
    for w in p.family.arities() {
        let ordered = w.windows(2).all(|x| {
            dims.iter().position(|d| *d == x[0]) < dims.iter().position(|d| *d == x[1])
        });
        if !ordered || !w.iter().all(|d| dims.contains(d)) {
            continue;
        }
        let pos: Vec<usize> = w.iter().map(|d| dims.iter().position(|e| e == d).unwrap()).collect();
        let t = &p.tensors[w];
        for (ti, sub) in tuples(n, w.len()).enumerate() {
            let mut row = vec![Rational::zero(); vars + 1];
            for (j, tup) in tuples(n, k).enumerate() {
                if pos.iter().zip(&sub).all(|(p, a)| tup[*p] == *a) {
                    row[j] = Rational::one();
                }
            }
            row[vars] = t[ti].clone();
            rows.push(row);
        }
    }
    // Reduced row echelon form.
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..vars {
        let Some(sel) = (r..rows.len()).find(|i| !rows[*i][col].is_zero()) else { continue };
        rows.swap(r, sel);
        let inv = rows[r][col].inv();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for j in 0..=vars {
                    let sub = &f * &rows[r][j];
                    rows[i][j] -= sub;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[vars].is_zero()) {
        return Ok(JointVerdict::Inconsistent);
    }
    let free: Vec<usize> = (0..vars).filter(|c| !pivots.contains(c)).collect();
    // Each variable as constant + Σ coeff·free.
    let mut exprs: Vec<Ineq> = (0..vars)
        .map(|v| {
            let mut origin = BTreeMap::new();
            origin.insert(v, Rational::one());
            let mut coeffs = BTreeMap::new();
            coeffs.insert(v, Rational::one());
            Ineq { constant: Rational::zero(), coeffs, origin }
        })
        .collect();
    for (i, col) in pivots.iter().enumerate() {
        let mut coeffs = BTreeMap::new();
        for f in &free {
            if !rows[i][*f].is_zero() {
                coeffs.insert(*f, -rows[i][*f].clone());
            }
        }
        exprs[*col].constant = rows[i][vars].clone();
        exprs[*col].coeffs = coeffs;
    }
    let mut stages: Vec<Vec<Ineq>> = vec![exprs];
    for f in &free {
        let cur = stages.last().unwrap();
        let (mut lower, mut upper, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for q in cur {
            match q.coeffs.get(f) {
                Some(c) if c.is_positive() => lower.push(q.clone()),
                Some(_) => upper.push(q.clone()),
                None => keep.push(q.clone()),
            }
        }
        for l in &lower {
            for u in &upper {
                let a = -u.coeffs[f].clone();
                let b = l.coeffs[f].clone();
                keep.push(l.combine(&a, u, &b));
            }
        }
        stages.push(keep);
    }
    if let Some(bad) = stages.last().unwrap().iter().find(|q| q.constant.is_negative()) {
        return Ok(JointVerdict::Infeasible {
            multipliers: bad.origin.iter().map(|(k, v)| (*k, v.clone())).collect(),
            value: bad.constant.clone(),
        });
    }
    // Back substitution, last eliminated first.
    let mut values: BTreeMap<usize, Rational> = BTreeMap::new();
    for (si, f) in free.iter().enumerate().rev() {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for q in &stages[si] {
            let Some(c) = q.coeffs.get(f) else { continue };
            let mut rest = q.constant.clone();
            for (g, cg) in &q.coeffs {
                if g != f {
                    rest += cg * &values[g];
                }
            }
            let bound = -rest.div(c);
            if c.is_positive() {
                lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
            } else {
                hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
            }
        }
        values.insert(*f, lo.or(hi).unwrap_or_else(Rational::zero));
    }
    let witness = stages[0]
        .iter()
        .map(|q| q.constant.clone() + q.coeffs.iter().map(|(g, c)| c * &values[g]).sum::<Rational>())
        .collect();
    Ok(JointVerdict::Witness(witness))
}

/// The PFF whose tensors are the marginals of `joint` over arity `top`.
pub fn pff_from_joint(
    family: ArityFamily,
    base: &EventSpace,
    top: &[String],
    joint: Vec<Rational>,
) -> Result<Pff, MdError> {
    Pff::from_tensors(family, base, &[(top.to_vec(), joint)])
}
