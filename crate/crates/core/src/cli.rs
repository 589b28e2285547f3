//! Line-oriented command language: one command per line, `#` starts a
//! comment. Every report line starts with `OK` or `FAIL`.
//!
//! ```text
//! space S atoms a b c            space E events e f
//! pf P on S : a=1/2 b=1/2        random pf P on S
//! table T on E : T=1 e=0
//! check PF,WPF,BR T              check pff P
//! search satisfy WPF violate PF on E grid 0 1 [as NAME]
//! cv X on S = a :-> v(3) + b :-> v(1)
//! rv R = rvof X
//! objects c1 c2                  config C on S = e :-> c1 ~> v(2) || c2
//! elicit 10 0 2 4                threshold 10 0 2
//! prefers P e 10 0 2
//! dims a b                       family W = (a) (b) (a b) (b a) | upto 2
//! pff P of W on S : (a b) { (s1,s1)=1/2 (s2,s2)=1/2 }
//! jointexists P a b c
//! fss sum x, y of 0x*0y + 0(1-x) gt F = 0(x-1)*1/2 + 0(x-2)*1/2
//! pmf F                          equation x*x^-1 = 1x
//! laws meadow | sign | ba S
//! eval E[P, X]   (see `Session::eval` for the operators)
//! ```

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::condval::{
    corr2_p, cov_p, cv_canon_with, cv_expr, cv_independent, cv_render, e_p, joint_pmf, pmf_of_cv,
    var_p, CVExpr, CanonCV, CvError,
};
use crate::config::{
    ask_threshold, cfg_canon_with, config_expr, elicit_indifference, expected_utility,
    prefers_asking, CanonConfig, ConfigError, ConfigExpr,
};
use crate::events::{
    ba_laws, check_event_laws, eval_event, event_expr, EventError, EventExpr, EventSpace,
};
use crate::fss::{
    corr2_pmf, cov_pmf, e_pmf, gt_parse, is_pmf, marginalise, var_pmf, FssError, GuardTable,
};
use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};
use crate::meadow::{
    check_on_grid, default_grid, meadow_laws, parse_term_expr, sign_laws, MeadowError, Rational,
    Term,
};
use crate::multidim::{
    arity_string, check_pff, joint_exists, md_corr2, md_cov, md_e, md_var, pff_eval,
    reduced_stats, Arity, ArityFamily, JointVerdict, MdError, MultiCV, Pff, JOINT_BOUND,
};
use crate::probability::{
    check_axioms, cond_p, search_counterexample, CondVariant, ProbError, System, TablePF,
    Valuation, WeightPF,
};
use crate::rv::{corr2_rv, cov_rv, e_rv, rv_of_cv, var_rv, RandomVariable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown command '{0}'")]
    UnknownCommand(String),
    #[error("no {kind} named '{name}'")]
    Unbound { kind: &'static str, name: String },
    #[error("{kind} '{name}' is already defined")]
    Redefined { kind: &'static str, name: String },
    #[error("'{0}' is not an atom")]
    NotAnAtom(String),
    #[error("space {space} has {atoms} atoms, more than --max-atoms {max}")]
    TooManyAtoms { space: String, atoms: usize, max: usize },
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("{op} expects {expected}")]
    BadArguments { op: String, expected: &'static str },
    #[error("unknown operator '{0}'")]
    UnknownOperator(String),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Md(#[from] MdError),
    #[error(transparent)]
    Fss(#[from] FssError),
    #[error(transparent)]
    Meadow(#[from] MeadowError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Name(String),
    Event(EventExpr),
    Dim(String, String),
    Arity(Arity),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    List(Vec<Arity>),
    UpTo(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LawSet {
    Meadow,
    Sign,
    Ba(String),
}

/// Atom tuples of one tensor with their values.
pub type TensorCells = Vec<(Vec<String>, Rational)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Space { name: String, atoms: Vec<String> },
    SpaceEvents { name: String, gens: Vec<String> },
    Pf { name: String, space: String, entries: Vec<(EventExpr, Rational)> },
    RandomPf { name: String, space: String },
    Table { name: String, space: String, entries: Vec<(EventExpr, Rational)> },
    Check { systems: Vec<System>, name: String },
    CheckPff { name: String },
    Search { satisfy: Vec<System>, violate: Vec<System>, space: String, grid: Vec<Rational>, bind: Option<String> },
    Cv { name: String, space: String, expr: CVExpr },
    Rv { name: String, cv: String },
    Objects(Vec<String>),
    Config { name: String, space: String, expr: ConfigExpr },
    Elicit([Rational; 4]),
    Threshold([Rational; 3]),
    Prefers { pf: String, event: EventExpr, high: Rational, low: Rational, d: Rational },
    Dims(Vec<String>),
    Family { name: String, spec: FamilySpec },
    Pff { name: String, family: String, space: String, tensors: Vec<(Arity, TensorCells)> },
    JointExists { name: String, dims: Vec<String> },
    Fss(Term),
    Gt { name: String, term: Term },
    Pmf { name: String },
    Equation(Term, Term),
    Laws(LawSet),
    Eval { op: String, args: Vec<Arg> },
}

fn systems(cur: &mut Cursor<'_>) -> Result<Vec<System>, CliError> {
    let mut out = Vec::new();
    loop {
        let s = cur.ident()?;
        out.push(System::parse(&s).ok_or(CliError::UnknownSystem(s))?);
        if !cur.eat(&Tok::Comma) {
            return Ok(out);
        }
    }
}

fn idents_to_end(cur: &mut Cursor<'_>) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    while !cur.at_end() {
        out.push(cur.ident()?);
    }
    Ok(out)
}

fn entries(cur: &mut Cursor<'_>) -> Result<Vec<(EventExpr, Rational)>, CliError> {
    let mut out = Vec::new();
    while !cur.at_end() {
        let e = event_expr(cur)?;
        cur.expect(&Tok::Eq)?;
        out.push((e, cur.rational()?));
    }
    Ok(out)
}

fn arity(cur: &mut Cursor<'_>) -> Result<Arity, CliError> {
    cur.expect(&Tok::LParen)?;
    let mut w = Vec::new();
    while !cur.eat(&Tok::RParen) {
        w.push(cur.ident()?);
    }
    Ok(w)
}

fn name_on(cur: &mut Cursor<'_>) -> Result<(String, String), CliError> {
    let name = cur.ident()?;
    cur.expect_keyword("on")?;
    Ok((name, cur.ident()?))
}

fn eval_arg(cur: &mut Cursor<'_>) -> Result<Arg, CliError> {
    match (cur.peek(), cur.peek_at(1)) {
        (Some(Tok::Int(n)), _) => {
            let n = n.parse().map_err(|_| cur.error("index too large"))?;
            cur.bump();
            Ok(Arg::Index(n))
        }
        (Some(Tok::Zero), _) => {
            cur.bump();
            Ok(Arg::Index(0))
        }
        (Some(Tok::One), _) => {
            cur.bump();
            Ok(Arg::Index(1))
        }
        (Some(Tok::Ident(x)), Some(Tok::At)) => {
            let x = x.clone();
            cur.bump();
            cur.bump();
            Ok(Arg::Dim(x, cur.ident()?))
        }
        (Some(Tok::LParen), Some(Tok::Ident(_))) if matches!(cur.peek_at(2), Some(Tok::Ident(_)) | Some(Tok::RParen)) => {
            Ok(Arg::Arity(arity(cur)?))
        }
        _ => Ok(match event_expr(cur)? {
            EventExpr::Name(n) => Arg::Name(n),
            e => Arg::Event(e),
        }),
    }
}

/// Parses one line; `None` for blank lines and comments.
pub fn parse_line(input: &str) -> Result<Option<Command>, CliError> {
    let text = match input.find('#') {
        Some(i) => &input[..i],
        None => input,
    };
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Ok(None);
    }
    let mut cur = Cursor::new(&toks, text.chars().count() + 1);
    let cur = &mut cur;
    let word = cur.ident()?;
    let cmd = match word.as_str() {
        "space" => {
            let name = cur.ident()?;
            if cur.eat_keyword("atoms") {
                Command::Space { name, atoms: idents_to_end(cur)? }
            } else {
                cur.expect_keyword("events")?;
                Command::SpaceEvents { name, gens: idents_to_end(cur)? }
            }
        }
        "pf" => {
            let (name, space) = name_on(cur)?;
            cur.expect(&Tok::Colon)?;
            Command::Pf { name, space, entries: entries(cur)? }
        }
        "random" => {
            cur.expect_keyword("pf")?;
            let (name, space) = name_on(cur)?;
            Command::RandomPf { name, space }
        }
        "table" => {
            let (name, space) = name_on(cur)?;
            cur.expect(&Tok::Colon)?;
            Command::Table { name, space, entries: entries(cur)? }
        }
        "check" => {
            if cur.eat_keyword("pff") {
                Command::CheckPff { name: cur.ident()? }
            } else {
                let systems = systems(cur)?;
                Command::Check { systems, name: cur.ident()? }
            }
        }
        "search" => {
            cur.expect_keyword("satisfy")?;
            let satisfy = systems(cur)?;
            cur.expect_keyword("violate")?;
            let violate = systems(cur)?;
            cur.expect_keyword("on")?;
            let space = cur.ident()?;
            cur.expect_keyword("grid")?;
            let mut grid = Vec::new();
            while !cur.at_end() && !cur.is_keyword("as") {
                grid.push(cur.rational()?);
            }
            let bind = if cur.eat_keyword("as") { Some(cur.ident()?) } else { None };
            Command::Search { satisfy, violate, space, grid, bind }
        }
        "cv" => {
            let (name, space) = name_on(cur)?;
            cur.expect(&Tok::Eq)?;
            Command::Cv { name, space, expr: cv_expr(cur)? }
        }
        "rv" => {
            let name = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            cur.expect_keyword("rvof")?;
            Command::Rv { name, cv: cur.ident()? }
        }
        "objects" => Command::Objects(idents_to_end(cur)?),
        "config" => {
            let (name, space) = name_on(cur)?;
            cur.expect(&Tok::Eq)?;
            Command::Config { name, space, expr: config_expr(cur)? }
        }
        "elicit" => Command::Elicit([cur.rational()?, cur.rational()?, cur.rational()?, cur.rational()?]),
        "threshold" => Command::Threshold([cur.rational()?, cur.rational()?, cur.rational()?]),
        "prefers" => {
            let pf = cur.ident()?;
            let event = event_expr(cur)?;
            Command::Prefers { pf, event, high: cur.rational()?, low: cur.rational()?, d: cur.rational()? }
        }
        "dims" => Command::Dims(idents_to_end(cur)?),
        "family" => {
            let name = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            if cur.eat_keyword("upto") {
                let k = cur.rational()?;
                let k = if k.is_integer() && !k.is_negative() { k.to_f64() as usize } else { 0 };
                Command::Family { name, spec: FamilySpec::UpTo(k) }
            } else {
                let mut ws = Vec::new();
                while !cur.at_end() {
                    ws.push(arity(cur)?);
                }
                Command::Family { name, spec: FamilySpec::List(ws) }
            }
        }
        "pff" => {
            let name = cur.ident()?;
            cur.expect_keyword("of")?;
            let family = cur.ident()?;
            cur.expect_keyword("on")?;
            let space = cur.ident()?;
            cur.expect(&Tok::Colon)?;
            let mut tensors = Vec::new();
            while !cur.at_end() {
                let w = arity(cur)?;
                cur.expect(&Tok::LBrace)?;
                let mut cells = Vec::new();
                while !cur.eat(&Tok::RBrace) {
                    cur.expect(&Tok::LParen)?;
                    let mut tup = vec![cur.ident()?];
                    while cur.eat(&Tok::Comma) {
                        tup.push(cur.ident()?);
                    }
                    cur.expect(&Tok::RParen)?;
                    cur.expect(&Tok::Eq)?;
                    cells.push((tup, cur.rational()?));
                }
                tensors.push((w, cells));
            }
            Command::Pff { name, family, space, tensors }
        }
        "jointexists" => {
            let name = cur.ident()?;
            Command::JointExists { name, dims: idents_to_end(cur)? }
        }
        "fss" => Command::Fss(parse_term_expr(cur)?),
        "gt" => {
            let name = cur.ident()?;
            cur.expect(&Tok::Eq)?;
            Command::Gt { name, term: parse_term_expr(cur)? }
        }
        "pmf" => Command::Pmf { name: cur.ident()? },
        "equation" => {
            let lhs = parse_term_expr(cur)?;
            cur.expect(&Tok::Eq)?;
            Command::Equation(lhs, parse_term_expr(cur)?)
        }
        "laws" => {
            let kind = cur.ident()?;
            Command::Laws(match kind.as_str() {
                "meadow" => LawSet::Meadow,
                "sign" => LawSet::Sign,
                "ba" => LawSet::Ba(cur.ident()?),
                _ => return Err(SyntaxError::new(1, format!("unknown law set '{kind}'")).into()),
            })
        }
        "eval" => {
            let op = cur.ident()?;
            cur.expect(&Tok::LBracket)?;
            let mut args = vec![eval_arg(cur)?];
            while cur.eat(&Tok::Comma) {
                args.push(eval_arg(cur)?);
            }
            cur.expect(&Tok::RBracket)?;
            Command::Eval { op, args }
        }
        _ => return Err(CliError::UnknownCommand(word)),
    };
    cur.expect_end()?;
    Ok(Some(cmd))
}

fn insert<T>(map: &mut BTreeMap<String, T>, kind: &'static str, name: &str, v: T) -> Result<(), CliError> {
    if map.contains_key(name) {
        return Err(CliError::Redefined { kind, name: name.to_string() });
    }
    map.insert(name.to_string(), v);
    Ok(())
}

fn get<'a, T>(map: &'a BTreeMap<String, T>, kind: &'static str, name: &str) -> Result<&'a T, CliError> {
    map.get(name).ok_or_else(|| CliError::Unbound { kind, name: name.to_string() })
}

/// Named bindings per kind plus the settings of a run.
pub struct Session {
    max_atoms: usize,
    rng: ChaCha8Rng,
    spaces: BTreeMap<String, EventSpace>,
    pfs: BTreeMap<String, WeightPF>,
    tables: BTreeMap<String, TablePF>,
    cvs: BTreeMap<String, CanonCV>,
    rvs: BTreeMap<String, RandomVariable>,
    objects: Vec<String>,
    configs: BTreeMap<String, CanonConfig>,
    dims: Vec<String>,
    families: BTreeMap<String, ArityFamily>,
    pffs: BTreeMap<String, Pff>,
    gts: BTreeMap<String, GuardTable>,
}

/// Output of a batch run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub lines: Vec<String>,
    pub failed: bool,
}

impl Report {
    pub fn text(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

fn join_events(args: &[Arg]) -> String {
    args.iter().map(n_or).collect::<Vec<_>>().join(", ")
}

fn n_or(a: &Arg) -> String {
    match a {
        Arg::Name(n) => n.clone(),
        Arg::Event(e) => e.to_string(),
        Arg::Dim(x, d) => format!("{x}@{d}"),
        Arg::Arity(w) => arity_string(w),
        Arg::Index(i) => i.to_string(),
    }
}

impl Session {
    pub fn new(max_atoms: usize, seed: u64) -> Session {
        Session {
            max_atoms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            spaces: BTreeMap::new(),
            pfs: BTreeMap::new(),
            tables: BTreeMap::new(),
            cvs: BTreeMap::new(),
            rvs: BTreeMap::new(),
            objects: Vec::new(),
            configs: BTreeMap::new(),
            dims: Vec::new(),
            families: BTreeMap::new(),
            pffs: BTreeMap::new(),
            gts: BTreeMap::new(),
        }
    }

    /// Runs one line; errors become a single `FAIL` line.
    pub fn run_line(&mut self, line: &str) -> Vec<String> {
        match parse_line(line).and_then(|c| match c {
            Some(cmd) => self.execute(&cmd),
            None => Ok(Vec::new()),
        }) {
            Ok(lines) => lines,
            Err(e) => vec![format!("FAIL error: {e}")],
        }
    }

    /// Runs a whole script; errors are reported with their line number.
    pub fn run_script(&mut self, text: &str) -> Report {
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let out = match parse_line(line).and_then(|c| match c {
                Some(cmd) => self.execute(&cmd),
                None => Ok(Vec::new()),
            }) {
                Ok(out) => out,
                Err(e) => vec![format!("FAIL line {}: {e}", i + 1)],
            };
            lines.extend(out);
        }
        let failed = lines.iter().any(|l| l.starts_with("FAIL"));
        Report { lines, failed }
    }

    fn space(&self, name: &str) -> Result<&EventSpace, CliError> {
        get(&self.spaces, "space", name)
    }

    fn bounded(&self, s: &EventSpace) -> Result<(), CliError> {
        if s.atom_count() > self.max_atoms {
            return Err(CliError::TooManyAtoms {
                space: s.to_string(),
                atoms: s.atom_count(),
                max: self.max_atoms,
            });
        }
        Ok(())
    }

    fn weights(&self, s: &EventSpace, entries: &[(EventExpr, Rational)]) -> Result<Vec<Rational>, CliError> {
        let mut w = vec![Rational::zero(); s.atom_count()];
        for (e, v) in entries {
            let ev = eval_event(e, s)?;
            if !ev.is_atomic() {
                return Err(CliError::NotAnAtom(e.to_string()));
            }
            let i = ev.atom_indices().next().expect("atomic");
            w[i] = v.clone();
        }
        Ok(w)
    }

    pub fn execute(&mut self, cmd: &Command) -> Result<Vec<String>, CliError> {
        let ok = |s: String| Ok(vec![format!("OK {s}")]);
        match cmd {
            Command::Space { name, atoms } => {
                let refs: Vec<&str> = atoms.iter().map(String::as_str).collect();
                let s = EventSpace::new(name, &refs)?;
                insert(&mut self.spaces, "space", name, s)?;
                ok(format!("space {name} atoms {}", atoms.join(" ")))
            }
            Command::SpaceEvents { name, gens } => {
                let refs: Vec<&str> = gens.iter().map(String::as_str).collect();
                let s = EventSpace::generated(name, &refs)?;
                let atoms = s.atom_names().join(" ");
                insert(&mut self.spaces, "space", name, s)?;
                ok(format!("space {name} atoms {atoms}"))
            }
            Command::Pf { name, space, entries } => {
                let s = self.space(space)?.clone();
                let pf = WeightPF::new(&s, self.weights(&s, entries)?)?;
                insert(&mut self.pfs, "pf", name, pf)?;
                ok(format!("pf {name} on {space}"))
            }
            Command::RandomPf { name, space } => {
                let s = self.space(space)?.clone();
                let raw: Vec<i64> = (0..s.atom_count()).map(|_| self.rng.gen_range(0..=6)).collect();
                let total: i64 = raw.iter().sum::<i64>().max(1);
                let mut w: Vec<Rational> = raw.iter().map(|r| Rational::new(*r, total).expect("total > 0")).collect();
                if raw.iter().all(|r| *r == 0) {
                    w[0] = Rational::one();
                }
                let pf = WeightPF::new(&s, w)?;
                let shown: Vec<String> = s
                    .atom_names()
                    .iter()
                    .zip(pf.weights())
                    .map(|(a, v)| format!("{a}={v}"))
                    .collect();
                insert(&mut self.pfs, "pf", name, pf)?;
                ok(format!("pf {name} on {space} : {}", shown.join(" ")))
            }
            Command::Table { name, space, entries } => {
                let s = self.space(space)?.clone();
                let mut values = vec![Rational::zero(); 1usize << s.atom_count().min(16)];
                for (e, v) in entries {
                    values[eval_event(e, &s)?.bits() as usize] = v.clone();
                }
                let t = TablePF::new(&s, values)?;
                insert(&mut self.tables, "table", name, t)?;
                ok(format!("table {name} on {space}"))
            }
            Command::Check { systems, name } => {
                let reports = if let Some(t) = self.tables.get(name) {
                    self.bounded(t.space())?;
                    check_axioms(t, systems)
                } else {
                    let p = get(&self.pfs, "pf or table", name)?;
                    self.bounded(p.space())?;
                    check_axioms(p, systems)
                };
                Ok(reports
                    .iter()
                    .map(|r| match &r.failure {
                        None => format!("OK {} {name}", r.system),
                        Some(w) => format!("FAIL {} {name} {w}", r.system),
                    })
                    .collect())
            }
            Command::CheckPff { name } => {
                let p = get(&self.pffs, "pff", name)?;
                Ok(vec![match check_pff(p)? {
                    None => format!("OK check pff {name}"),
                    Some(f) => format!("FAIL check pff {name} {f}"),
                }])
            }
            Command::Search { satisfy, violate, space, grid, bind } => {
                let s = self.space(space)?.clone();
                self.bounded(&s)?;
                let found = search_counterexample(&s, satisfy, violate, grid)?;
                let names = |v: &[System]| v.iter().map(|s| s.name()).collect::<Vec<_>>().join(",");
                let head = format!("search satisfy {} violate {} on {space}", names(satisfy), names(violate));
                match found {
                    None => ok(format!("{head}: none")),
                    Some(t) => {
                        let shown = t.to_string();
                        if let Some(b) = bind {
                            insert(&mut self.tables, "table", b, t)?;
                        }
                        ok(format!("{head}: found {shown}"))
                    }
                }
            }
            Command::Cv { name, space, expr } => {
                let s = self.space(space)?.clone();
                let x = cv_canon_with(expr, &s, &self.cvs)?;
                let shown = cv_render(&x);
                insert(&mut self.cvs, "cv", name, x)?;
                ok(format!("cv {name} = {shown}"))
            }
            Command::Rv { name, cv } => {
                let r = rv_of_cv(get(&self.cvs, "cv", cv)?);
                let shown = r.to_string();
                insert(&mut self.rvs, "rv", name, r)?;
                ok(format!("rv {name} = {shown}"))
            }
            Command::Objects(objs) => {
                for o in objs {
                    if self.objects.contains(o) {
                        return Err(CliError::Redefined { kind: "object", name: o.clone() });
                    }
                    self.objects.push(o.clone());
                }
                ok(format!("objects {}", self.objects.join(" ")))
            }
            Command::Config { name, space, expr } => {
                let s = self.space(space)?.clone();
                let c = cfg_canon_with(expr, &s, &self.objects, &self.cvs)?;
                let shown = c.to_string();
                insert(&mut self.configs, "config", name, c)?;
                ok(format!("config {name} = {shown}"))
            }
            Command::Elicit([u1, u2, u3, u4]) => {
                let p = elicit_indifference(u1, u2, u3, u4)?;
                ok(format!("elicit {u1} {u2} {u3} {u4}: p = {p}"))
            }
            Command::Threshold([high, low, d]) => {
                let t = ask_threshold(high, low, d)?;
                ok(format!("threshold {high} {low} {d} = {t}"))
            }
            Command::Prefers { pf, event, high, low, d } => {
                let p = get(&self.pfs, "pf", pf)?;
                let ask = prefers_asking(p, event, high, low, d)?;
                ok(format!("prefers {pf} {event} {high} {low} {d}: {}", if ask { "ask" } else { "do not ask" }))
            }
            Command::Dims(ds) => {
                for d in ds {
                    if self.dims.contains(d) {
                        return Err(CliError::Redefined { kind: "dimension", name: d.clone() });
                    }
                    self.dims.push(d.clone());
                }
                ok(format!("dims {}", self.dims.join(" ")))
            }
            Command::Family { name, spec } => {
                let fam = match spec {
                    FamilySpec::List(ws) => ArityFamily::from_parts(self.dims.clone(), ws.iter().cloned()),
                    FamilySpec::UpTo(k) => {
                        let refs: Vec<&str> = self.dims.iter().map(String::as_str).collect();
                        ArityFamily::all_up_to(&refs, *k)
                    }
                };
                let verdict = fam.validate();
                insert(&mut self.families, "family", name, fam)?;
                Ok(vec![match verdict {
                    Ok(()) => format!("OK family {name}"),
                    Err(v) => format!("FAIL family {name} {v}"),
                }])
            }
            Command::Pff { name, family, space, tensors } => {
                let fam = get(&self.families, "family", family)?.clone();
                let s = self.space(space)?.clone();
                let n = s.atom_count();
                let mut given = Vec::new();
                for (w, cells) in tensors {
                    let mut t = vec![Rational::zero(); n.pow(w.len() as u32)];
                    for (tup, v) in cells {
                        if tup.len() != w.len() {
                            return Err(CliError::BadArguments { op: arity_string(w), expected: "one atom per dimension" });
                        }
                        let mut idx = 0;
                        for a in tup {
                            let i = s.atom_index(a).ok_or_else(|| CliError::NotAnAtom(a.clone()))?;
                            idx = idx * n + i;
                        }
                        t[idx] = v.clone();
                    }
                    given.push((w.clone(), t));
                }
                let p = Pff::from_tensors(fam, &s, &given)?;
                insert(&mut self.pffs, "pff", name, p)?;
                ok(format!("pff {name}"))
            }
            Command::JointExists { name, dims } => {
                let p = get(&self.pffs, "pff", name)?;
                let head = format!("jointexists {name} {}", arity_string(dims));
                let n = p.base().atom_count();
                let names = p.base().atom_names();
                let tuple = |mut k: usize| {
                    let mut parts = vec![String::new(); dims.len()];
                    for slot in parts.iter_mut().rev() {
                        *slot = names[k % n].clone();
                        k /= n;
                    }
                    format!("({})", parts.join(","))
                };
                match joint_exists(p, dims, JOINT_BOUND)? {
                    JointVerdict::Witness(t) => {
                        let cells: Vec<String> = t
                            .iter()
                            .enumerate()
                            .filter(|(_, v)| !v.is_zero())
                            .map(|(k, v)| format!("{}={v}", tuple(k)))
                            .collect();
                        ok(format!("{head}: witness {}", cells.join(" ")))
                    }
                    JointVerdict::Inconsistent => ok(format!("{head}: none, marginals inconsistent")),
                    JointVerdict::Infeasible { multipliers, value } => {
                        let terms: Vec<String> =
                            multipliers.iter().map(|(k, m)| format!("{m}*{}", tuple(*k))).collect();
                        ok(format!("{head}: none, certificate {} = {value} < 0", terms.join(" + ")))
                    }
                }
            }
            Command::Fss(t) => {
                let vars: Vec<String> = t.free_vars().into_iter().collect();
                let g = gt_parse(t, &vars)?;
                match g.as_constant() {
                    Some(c) if vars.is_empty() => ok(format!("fss {t} = {c}")),
                    _ => ok(format!("fss {t} = {g}")),
                }
            }
            Command::Gt { name, term } => {
                let vars: Vec<String> = term.free_vars().into_iter().collect();
                let g = gt_parse(term, &vars)?;
                let shown = g.to_string();
                insert(&mut self.gts, "gt", name, g)?;
                ok(format!("gt {name} = {shown}"))
            }
            Command::Pmf { name } => {
                let g = get(&self.gts, "gt", name)?;
                Ok(vec![match is_pmf(g) {
                    Ok(v) => format!("OK pmf {name}: {v}"),
                    Err(why) => format!("FAIL pmf {name}: {why}"),
                }])
            }
            Command::Equation(l, r) if l.contains_binder() || r.contains_binder() => {
                // Sums are compared as canonical guard tables.
                let vars: Vec<String> = l.free_vars().union(&r.free_vars()).cloned().collect();
                let (gl, gr) = (gt_parse(l, &vars)?, gt_parse(r, &vars)?);
                Ok(vec![match gl == gr {
                    true => format!("OK equation {l} = {r}"),
                    false => format!("FAIL equation {l} = {r}: {gl} vs {gr}"),
                }])
            }
            Command::Equation(l, r) => {
                let v = check_on_grid(l, r, &default_grid())?;
                Ok(vec![match v.is_ok() {
                    true => format!("OK equation {l} = {r}"),
                    false => format!("FAIL equation {l} = {r} {}", v.to_string().trim_start_matches("FAIL ")),
                }])
            }
            Command::Laws(set) => {
                let grid = default_grid();
                match set {
                    LawSet::Meadow | LawSet::Sign => {
                        let (tag, laws) = if *set == LawSet::Meadow { ("meadow", meadow_laws()) } else { ("sign", sign_laws()) };
                        let mut out = Vec::new();
                        for law in laws {
                            let v = check_on_grid(&law.lhs, &law.rhs, &grid)?;
                            out.push(match v.is_ok() {
                                true => format!("OK {tag} {}", law.name),
                                false => format!("FAIL {tag} {} {}", law.name, v.to_string().trim_start_matches("FAIL ")),
                            });
                        }
                        Ok(out)
                    }
                    LawSet::Ba(space) => {
                        let s = self.space(space)?.clone();
                        self.bounded(&s)?;
                        let mut out = Vec::new();
                        for law in ba_laws() {
                            out.push(match check_event_laws(&s, std::slice::from_ref(&law)) {
                                None => format!("OK ba {}", law.0),
                                Some((n, x, y, z)) => format!("FAIL ba {n} at x={x}, y={y}, z={z}"),
                            });
                        }
                        Ok(out)
                    }
                }
            }
            Command::Eval { op, args } => {
                let v = self.eval(op, args)?;
                ok(format!("{op}[{}] = {v}", join_events(args)))
            }
        }
    }

    fn name_arg<'a>(&self, op: &str, a: &'a Arg, expected: &'static str) -> Result<&'a str, CliError> {
        match a {
            Arg::Name(n) => Ok(n),
            _ => Err(CliError::BadArguments { op: op.to_string(), expected }),
        }
    }

    fn event_arg(&self, a: &Arg, s: &EventSpace) -> Result<crate::events::Event, CliError> {
        let e = match a {
            Arg::Name(n) => EventExpr::Name(n.clone()),
            Arg::Event(e) => e.clone(),
            _ => return Err(CliError::BadArguments { op: "event".into(), expected: "an event" }),
        };
        Ok(eval_event(&e, s)?)
    }

    fn multi(&self, op: &str, args: &[Arg]) -> Result<MultiCV, CliError> {
        let mut comps = Vec::new();
        for a in args {
            match a {
                Arg::Dim(x, d) => comps.push((d.clone(), get(&self.cvs, "cv", x)?.clone())),
                _ => return Err(CliError::BadArguments { op: op.to_string(), expected: "X@dim arguments" }),
            }
        }
        Ok(MultiCV::new(comps)?)
    }

    /// Operators: `P[pf|table, e]`, `P0|P1|PS[pf, x, y]`, `E|VAR[pf, cv]`,
    /// `COV|CORR2|INDEP[pf, cv, cv]`, `PMF[pf, cv]`, `JOINT[pf, cv, cv]`,
    /// `EU[pf, config]`, `ERV|VARRV[pf, rv]`, `COVRV|CORR2RV[pf, rv, rv]`,
    /// `MDE|MDVAR[pff, X@a]`, `MDCOV|MDCORR2|REDCOV|REDCORR2[pff, X@a, Y@b]`,
    /// `PFF[pff, (a b), e, f]`, `EPMF|VARPMF|COVPMF|CORR2PMF[gt]`,
    /// `MARG[gt, i, …]`.
    pub fn eval(&self, op: &str, args: &[Arg]) -> Result<String, CliError> {
        let bad = |expected| CliError::BadArguments { op: op.to_string(), expected };
        let pf = |i: usize| -> Result<&WeightPF, CliError> {
            get(&self.pfs, "pf", self.name_arg(op, args.get(i).ok_or(bad("more arguments"))?, "a pf name")?)
        };
        let cv = |i: usize| -> Result<&CanonCV, CliError> {
            get(&self.cvs, "cv", self.name_arg(op, args.get(i).ok_or(bad("more arguments"))?, "a cv name")?)
        };
        let rv = |i: usize| -> Result<&RandomVariable, CliError> {
            get(&self.rvs, "rv", self.name_arg(op, args.get(i).ok_or(bad("more arguments"))?, "an rv name")?)
        };
        let gt = |i: usize| -> Result<&GuardTable, CliError> {
            get(&self.gts, "gt", self.name_arg(op, args.get(i).ok_or(bad("more arguments"))?, "a gt name")?)
        };
        let pff = |i: usize| -> Result<&Pff, CliError> {
            get(&self.pffs, "pff", self.name_arg(op, args.get(i).ok_or(bad("more arguments"))?, "a pff name")?)
        };
        let arity_n = |n: usize, what| if args.len() == n { Ok(()) } else { Err(bad(what)) };
        let pmf = |g: &GuardTable| is_pmf(g).map_err(|why| FssError::Syntax(format!("not a PMF: {why}")));
        Ok(match op {
            "P" => {
                arity_n(2, "[pf, event]")?;
                let n = self.name_arg(op, &args[0], "a pf or table name")?;
                if let Some(t) = self.tables.get(n) {
                    t.prob(&self.event_arg(&args[1], t.space())?)?.to_string()
                } else {
                    let p = pf(0)?;
                    p.prob(&self.event_arg(&args[1], p.space())?)?.to_string()
                }
            }
            "P0" | "P1" | "PS" => {
                arity_n(3, "[pf, x, y]")?;
                let p = pf(0)?;
                let variant = match op {
                    "P0" => CondVariant::P0,
                    "P1" => CondVariant::P1,
                    _ => CondVariant::Ps,
                };
                let x = self.event_arg(&args[1], p.space())?;
                let y = self.event_arg(&args[2], p.space())?;
                cond_p(variant, p, &x, &y)?.to_string()
            }
            "E" => {
                arity_n(2, "[pf, cv]")?;
                e_p(cv(1)?, pf(0)?)?.to_string()
            }
            "VAR" => {
                arity_n(2, "[pf, cv]")?;
                var_p(cv(1)?, pf(0)?)?.to_string()
            }
            "COV" => {
                arity_n(3, "[pf, cv, cv]")?;
                cov_p(cv(1)?, cv(2)?, pf(0)?)?.to_string()
            }
            "CORR2" => {
                arity_n(3, "[pf, cv, cv]")?;
                corr2_p(cv(1)?, cv(2)?, pf(0)?)?.to_string()
            }
            "INDEP" => {
                arity_n(3, "[pf, cv, cv]")?;
                cv_independent(cv(1)?, cv(2)?, pf(0)?)?.to_string()
            }
            "PMF" => {
                arity_n(2, "[pf, cv]")?;
                pmf_of_cv(cv(1)?, pf(0)?)?.to_string()
            }
            "JOINT" => {
                arity_n(3, "[pf, cv, cv]")?;
                joint_pmf(cv(1)?, cv(2)?, pf(0)?)?.to_string()
            }
            "EU" => {
                arity_n(2, "[pf, config]")?;
                let n = self.name_arg(op, &args[1], "a config name")?;
                expected_utility(get(&self.configs, "config", n)?, pf(0)?)?.to_string()
            }
            "ERV" => {
                arity_n(2, "[pf, rv]")?;
                e_rv(rv(1)?, pf(0)?)?.to_string()
            }
            "VARRV" => {
                arity_n(2, "[pf, rv]")?;
                var_rv(rv(1)?, pf(0)?)?.to_string()
            }
            "COVRV" => {
                arity_n(3, "[pf, rv, rv]")?;
                cov_rv(rv(1)?, rv(2)?, pf(0)?)?.to_string()
            }
            "CORR2RV" => {
                arity_n(3, "[pf, rv, rv]")?;
                corr2_rv(rv(1)?, rv(2)?, pf(0)?)?.to_string()
            }
            "MDE" | "MDVAR" => {
                arity_n(2, "[pff, X@a]")?;
                let x = self.multi(op, &args[1..])?;
                if op == "MDE" { md_e(pff(0)?, &x)? } else { md_var(pff(0)?, &x)? }.to_string()
            }
            "MDCOV" | "MDCORR2" | "REDCOV" | "REDCORR2" => {
                arity_n(3, "[pff, X@a, Y@b]")?;
                let p = pff(0)?;
                let xy = self.multi(op, &args[1..])?;
                match op {
                    "MDCOV" => md_cov(p, &xy)?,
                    "MDCORR2" => md_corr2(p, &xy)?,
                    "REDCOV" => reduced_stats(p, &xy)?.cov,
                    _ => reduced_stats(p, &xy)?.corr2,
                }
                .to_string()
            }
            "PFF" => {
                let p = pff(0)?;
                let w = match args.get(1) {
                    Some(Arg::Arity(w)) => w.clone(),
                    _ => return Err(bad("[pff, (dims), events…]")),
                };
                let evs = args[2..]
                    .iter()
                    .map(|a| self.event_arg(a, p.base()))
                    .collect::<Result<Vec<_>, _>>()?;
                pff_eval(p, &w, &evs)?.to_string()
            }
            "EPMF" | "VARPMF" => {
                arity_n(1, "[gt]")?;
                let v = pmf(gt(0)?)?;
                if op == "EPMF" { e_pmf(&v) } else { var_pmf(&v) }.to_string()
            }
            "COVPMF" | "CORR2PMF" => {
                arity_n(1, "[gt]")?;
                let v = pmf(gt(0)?)?;
                if op == "COVPMF" { cov_pmf(&v)? } else { corr2_pmf(&v)? }.to_string()
            }
            "MARG" => {
                let v = pmf(gt(0)?)?;
                let kept = args[1..]
                    .iter()
                    .map(|a| match a {
                        Arg::Index(i) => Ok(*i),
                        _ => Err(bad("[gt, index…]")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                marginalise(&v, &kept)?.to_string()
            }
            _ => return Err(CliError::UnknownOperator(op.to_string())),
        })
    }
}
