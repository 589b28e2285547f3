//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the verdicts are always printed.

use std::path::Path;
use std::process::{Command, ExitCode};

use meadowcalc::condval::{
    corr2_p, cov_p, cv_canon, cv_flat, cv_is_cancellation_violation, e_p, joint_pmf, pmf_of_cv,
    var_p, CVExpr, CanonCV,
};
use meadowcalc::config::{
    cfg_canon, elicit_indifference, expected_utility, ask_threshold, prefers_asking, two_branch,
    utility, ConfigExpr,
};
use meadowcalc::events::{ba_laws, check_event_laws, Event, EventExpr, EventSpace};
use meadowcalc::fss::{corr2_pmf, cov_pmf, e_pmf, fss, gt_parse_str, is_pmf, var_pmf};
use meadowcalc::meadow::{check_on_grid, default_grid, meadow_laws, sign_laws, Rational};
use meadowcalc::multidim::{
    check_pff, joint_exists, lift_cv, md_corr2, md_cov, pff_from_joint, reduced_stats, Arity,
    ArityFamily, JointVerdict, MultiCV, Pff, Product, JOINT_BOUND,
};
use meadowcalc::probability::{
    check_axiom, check_axioms, degenerate_table, search_axioms, search_counterexample, Axiom,
    System, TablePF, WeightPF,
};
use meadowcalc::rv::{corr2_rv, cov_rv, e_rv, rv_of_cv, var_rv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn int(n: i64) -> Rational {
    Rational::from_int(n)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn space(n: usize) -> EventSpace {
    let names: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    EventSpace::new("S", &refs).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    loop {
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=5)).collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.iter().map(|r| Rational::new(*r, total).unwrap()).collect();
        }
    }
}

fn random_cv(rng: &mut ChaCha8Rng, s: &EventSpace) -> CanonCV {
    let vals = (0..s.atom_count())
        .map(|_| Rational::new(rng.gen_range(-4..=4), rng.gen_range(1..=3)).unwrap())
        .collect();
    CanonCV::new(s, vals).unwrap()
}

// 1 ------------------------------------------------------------------------

fn cv_meadow_laws(xs: &[CanonCV]) -> Outcome {
    let n = xs[0].space().atom_count();
    let zero = CanonCV::constant(xs[0].space(), int(0));
    let one = CanonCV::constant(xs[0].space(), int(1));
    for x in xs {
        for y in xs {
            let checks: [(&str, CanonCV, CanonCV); 6] = [
                ("X+Y=Y+X", x.add(y).unwrap(), y.add(x).unwrap()),
                ("X·Y=Y·X", x.mul(y).unwrap(), y.mul(x).unwrap()),
                ("X+v(0)=X", x.add(&zero).unwrap(), x.clone()),
                ("X+(-X)=v(0)", x.add(&x.neg()).unwrap(), zero.clone()),
                ("v(1)·X=X", one.mul(x).unwrap(), x.clone()),
                ("(X⁻¹)⁻¹=X", x.inv().inv(), x.clone()),
            ];
            for (name, l, r) in checks {
                if l != r {
                    return Err(format!("{name} at X={x}, Y={y}"));
                }
            }
            let restricted = x.mul(&x.mul(&x.inv()).unwrap()).unwrap();
            ensure(&restricted == x, || format!("X·(X·X⁻¹)=X at {x}"))?;
            ensure(x.square() == x.mul(x).unwrap(), || format!("X²=X·X at {x}"))?;
            for z in xs {
                let l = x.add(y).unwrap().add(z).unwrap();
                let r = x.add(&y.add(z).unwrap()).unwrap();
                ensure(l == r, || format!("(X+Y)+Z at {x},{y},{z}"))?;
                let l = x.mul(y).unwrap().mul(z).unwrap();
                let r = x.mul(&y.mul(z).unwrap()).unwrap();
                ensure(l == r, || format!("(X·Y)·Z at {x},{y},{z}"))?;
                let l = x.mul(&y.add(z).unwrap()).unwrap();
                let r = x.mul(y).unwrap().add(&x.mul(z).unwrap()).unwrap();
                ensure(l == r, || format!("X·(Y+Z) at {x},{y},{z}"))?;
            }
        }
    }
    ensure(n > 0, || "empty space".into())
}

fn all_cvs(s: &EventSpace, vals: &[Rational]) -> Vec<CanonCV> {
    let n = s.atom_count();
    let mut out = Vec::new();
    for k in 0..vals.len().pow(n as u32) {
        let mut k = k;
        let mut v = Vec::new();
        for _ in 0..n {
            v.push(vals[k % vals.len()].clone());
            k /= vals.len();
        }
        out.push(CanonCV::new(s, v).unwrap());
    }
    out
}

fn canon(x: &CVExpr, s: &EventSpace) -> CanonCV {
    cv_canon(x, s).unwrap()
}

fn cond_laws(s: &EventSpace, xs: &[CanonCV]) -> Outcome {
    let events: Vec<Event> = s.events().collect();
    let g = |e: &Event, x: CVExpr| CVExpr::guard(e.to_expr(), x);
    for x in xs {
        for y in xs {
            let (ex, ey) = (cv_flat(x), cv_flat(y));
            ensure(canon(&g(&s.top(), ex.clone()), s) == *x, || "⊤:→X".into())?;
            ensure(canon(&g(&s.bot(), ex.clone()), s).is_zero(), || "⊥:→X".into())?;
            for e in &events {
                let cases = [
                    (g(e, CVExpr::add(ex.clone(), ey.clone())), CVExpr::add(g(e, ex.clone()), g(e, ey.clone()))),
                    (g(e, CVExpr::mul(ex.clone(), ey.clone())), CVExpr::mul(g(e, ex.clone()), g(e, ey.clone()))),
                    (g(e, CVExpr::neg(ex.clone())), CVExpr::neg(g(e, ex.clone()))),
                    (g(e, CVExpr::inv(ex.clone())), CVExpr::inv(g(e, ex.clone()))),
                    (
                        CVExpr::cond3(ex.clone(), e.to_expr(), ey.clone()),
                        CVExpr::add(g(e, ex.clone()), g(&e.not(), ey.clone())),
                    ),
                ];
                for (l, r) in cases {
                    ensure(canon(&l, s) == canon(&r, s), || format!("{l} = {r}"))?;
                }
                for f in &events {
                    let l = g(&e.or(f), ex.clone());
                    let r = CVExpr::add(
                        CVExpr::add(g(e, ex.clone()), g(f, ex.clone())),
                        CVExpr::neg(g(&e.and(f), ex.clone())),
                    );
                    ensure(canon(&l, s) == canon(&r, s), || format!("{l} = {r}"))?;
                    let l = g(&e.and(f), ex.clone());
                    let r = g(e, g(f, ex.clone()));
                    ensure(canon(&l, s) == canon(&r, s), || format!("{l} = {r}"))?;
                }
            }
        }
    }
    Ok(())
}

fn config_pool() -> Vec<ConfigExpr> {
    let v = |n: i64| CVExpr::val(int(n));
    let e = EventExpr::name("e");
    let f = EventExpr::name("f");
    vec![
        ConfigExpr::Empty,
        ConfigExpr::object("c1"),
        ConfigExpr::yields(ConfigExpr::object("c2"), v(3)),
        ConfigExpr::guard(e.clone(), ConfigExpr::yields(ConfigExpr::object("c1"), v(-1))),
        ConfigExpr::yields(ConfigExpr::par(ConfigExpr::object("c1"), ConfigExpr::object("c3")), v(2)),
        ConfigExpr::guard(EventExpr::not(f), ConfigExpr::object("c3")),
        ConfigExpr::yields(
            ConfigExpr::object("c2"),
            CVExpr::add(CVExpr::guard(e, v(5)), v(1)),
        ),
    ]
}

fn cs_laws() -> Outcome {
    let s = EventSpace::generated("E", &["e", "f"]).unwrap();
    let objects: Vec<String> = ["c1", "c2", "c3"].iter().map(|o| o.to_string()).collect();
    let c = |a: &ConfigExpr| cfg_canon(a, &s, &objects).unwrap();
    let pool = config_pool();
    let events: Vec<EventExpr> = s.events().map(|e| e.to_expr()).collect();
    let ys = [CVExpr::val(int(7)), CVExpr::guard(EventExpr::name("f"), CVExpr::val(int(-2)))];
    use ConfigExpr as C;
    let par = C::par;
    for a in &pool {
        let eq = |l: C, r: C| ensure(c(&l) == c(&r), || format!("{l} = {r}"));
        eq(par(a.clone(), C::Empty), a.clone())?;
        eq(C::guard(EventExpr::Top, a.clone()), a.clone())?;
        eq(C::guard(EventExpr::Bot, a.clone()), C::Empty)?;
        for y in &ys {
            eq(C::yields(C::Empty, y.clone()), C::Empty)?;
            for x in &ys {
                eq(C::yields(C::yields(a.clone(), x.clone()), y.clone()), C::yields(a.clone(), y.clone()))?;
            }
        }
        for b in &pool {
            eq(par(a.clone(), b.clone()), par(b.clone(), a.clone()))?;
            for y in &ys {
                eq(
                    C::yields(par(a.clone(), b.clone()), y.clone()),
                    par(C::yields(a.clone(), y.clone()), C::yields(b.clone(), y.clone())),
                )?;
            }
            for e in &events {
                eq(C::guard(e.clone(), par(a.clone(), b.clone())), par(C::guard(e.clone(), a.clone()), C::guard(e.clone(), b.clone())))?;
            }
            for g in &pool {
                eq(par(par(a.clone(), b.clone()), g.clone()), par(b.clone(), par(a.clone(), g.clone())))?;
            }
        }
        for e in &events {
            for f in &events {
                eq(
                    par(C::guard(e.clone(), a.clone()), C::guard(f.clone(), a.clone())),
                    par(
                        C::guard(EventExpr::or(e.clone(), f.clone()), a.clone()),
                        C::guard(EventExpr::and(e.clone(), f.clone()), a.clone()),
                    ),
                )?;
            }
        }
    }
    for o in &objects {
        let l = C::object(o);
        let r = C::yields(C::object(o), CVExpr::val(int(0)));
        ensure(c(&l) == c(&r), || format!("{o} = {o} ~> v(0)"))?;
    }
    Ok(())
}

fn uf_laws() -> Outcome {
    let s = EventSpace::generated("E", &["e", "f"]).unwrap();
    let objects: Vec<String> = ["c1", "c2", "c3"].iter().map(|o| o.to_string()).collect();
    let u = |a: &ConfigExpr| utility(&cfg_canon(a, &s, &objects).unwrap());
    ensure(u(&ConfigExpr::Empty).is_zero(), || "U(eps)".into())?;
    let pool = config_pool();
    for x in [CVExpr::val(int(4)), CVExpr::guard(EventExpr::name("e"), CVExpr::val(q("1/2")))] {
        let l = u(&ConfigExpr::yields(ConfigExpr::object("c1"), x.clone()));
        ensure(l == canon(&x, &s), || format!("U(c ~> {x})"))?;
    }
    for a in &pool {
        for b in &pool {
            let l = u(&ConfigExpr::par(a.clone(), b.clone()));
            ensure(l == u(a).add(&u(b)).unwrap(), || format!("U({a} || {b})"))?;
        }
        for e in s.events() {
            let l = u(&ConfigExpr::guard(e.to_expr(), a.clone()));
            ensure(l == u(a).guard(&e).unwrap(), || format!("U({e} :-> {a})"))?;
        }
    }
    Ok(())
}

fn pair_laws() -> Outcome {
    let base = space(2);
    let prod = Product::new(&base, "a", "b");
    let ps = prod.space();
    ensure(prod.pair(&base.top(), &base.top()) == ps.top(), || "⊤ = <⊤,⊤>".into())?;
    let events: Vec<Event> = base.events().collect();
    for e1 in &events {
        ensure(prod.pair(e1, &base.bot()).is_bot(), || format!("<{e1},⊥>"))?;
        ensure(prod.pair(&base.bot(), e1).is_bot(), || format!("<⊥,{e1}>"))?;
        for e2 in &events {
            for f1 in &events {
                ensure(
                    prod.pair(&e1.or(e2), f1) == prod.pair(e1, f1).or(&prod.pair(e2, f1)),
                    || "<e∨f,g>".into(),
                )?;
                ensure(
                    prod.pair(e1, &e2.or(f1)) == prod.pair(e1, e2).or(&prod.pair(e1, f1)),
                    || "<e,f∨g>".into(),
                )?;
                for f2 in &events {
                    ensure(
                        prod.pair(e1, e2).and(&prod.pair(f1, f2)) == prod.pair(&e1.and(f1), &e2.and(f2)),
                        || "<e1,e2>∧<f1,f2>".into(),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn lift_laws() -> Outcome {
    let base = space(2);
    let prod = Product::new(&base, "a", "b");
    let xs = all_cvs(&base, &[int(-1), int(0), q("1/2"), int(2)]);
    let top = base.top();
    for slot in 0..2 {
        let l = |x: &CanonCV| lift_cv(x, slot, &prod).unwrap();
        for x in &xs {
            ensure(l(&x.neg()) == l(x).neg(), || "[-X]".into())?;
            ensure(l(&x.inv()) == l(x).inv(), || "[X⁻¹]".into())?;
            for y in &xs {
                ensure(l(&x.add(y).unwrap()) == l(x).add(&l(y)).unwrap(), || "[X+Y]".into())?;
                ensure(l(&x.mul(y).unwrap()) == l(x).mul(&l(y)).unwrap(), || "[X·Y]".into())?;
            }
            for g in base.events() {
                let rect = if slot == 0 { prod.pair(&g, &top) } else { prod.pair(&top, &g) };
                let lhs = l(&x.guard(&g).unwrap());
                ensure(lhs == l(x).guard(&rect).unwrap(), || format!("[{g}:→X]_{slot}"))?;
            }
        }
        for c in [int(-3), int(0), q("5/2")] {
            let v = CanonCV::constant(&base, c.clone());
            ensure(l(&v) == CanonCV::constant(prod.space(), c), || "[v(x)]".into())?;
        }
    }
    Ok(())
}

fn random_joint(rng: &mut ChaCha8Rng, cells: usize) -> Vec<Rational> {
    random_weights(rng, cells)
}

fn dims(ds: &[&str]) -> Arity {
    ds.iter().map(|d| d.to_string()).collect()
}

fn crit_axiom_suites() -> Outcome {
    let grid = default_grid();
    for law in meadow_laws().iter().chain(sign_laws().iter()) {
        let v = check_on_grid(&law.lhs, &law.rhs, &grid).map_err(|e| e.to_string())?;
        ensure(v.is_ok(), || format!("{}: {v}", law.name))?;
    }
    for n in 1..=3 {
        if let Some((name, ..)) = check_event_laws(&space(n), &ba_laws()) {
            return Err(format!("BA {name} on {n} atoms"));
        }
    }
    let vals = [int(-1), int(0), q("1/2"), int(2)];
    for n in 1..=2 {
        cv_meadow_laws(&all_cvs(&space(n), &vals))?;
    }
    let s2 = space(2);
    cond_laws(&s2, &all_cvs(&s2, &vals))?;
    let s3 = space(3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<CanonCV> = (0..6).map(|_| random_cv(&mut rng, &s3)).collect();
    cv_meadow_laws(&xs)?;
    cond_laws(&s3, &xs)?;
    cs_laws()?;
    uf_laws()?;
    for t in 0..10 {
        let fam = ArityFamily::all_up_to(&["a", "b"], 2);
        let p = pff_from_joint(fam, &space(2), &dims(&["a", "b"]), random_joint(&mut rng, 4))
            .map_err(|e| e.to_string())?;
        if let Some(f) = check_pff(&p).map_err(|e| e.to_string())? {
            return Err(format!("PFF trial {t}: {f}"));
        }
        let fam = ArityFamily::all_up_to(&["a", "b", "c"], 3);
        let p = pff_from_joint(fam, &space(2), &dims(&["a", "b", "c"]), random_joint(&mut rng, 8))
            .map_err(|e| e.to_string())?;
        if let Some(f) = check_pff(&p).map_err(|e| e.to_string())? {
            return Err(format!("3-dim PFF trial {t}: {f}"));
        }
    }
    pair_laws()?;
    lift_laws()
}

// 2 ------------------------------------------------------------------------

fn sum_closed(src: &str) -> Rational {
    let t = gt_parse_str(src, &["x"]).unwrap();
    fss(&t, &["x".to_string()]).unwrap().as_constant().unwrap()
}

fn crit_fss_facts() -> Outcome {
    let eq = |src: &str, want: &str| {
        let got = sum_closed(src);
        ensure(got == q(want), || format!("Σ*_x {src} = {got}, expected {want}"))
    };
    eq("0", "0")?;
    eq("1", "0")?;
    eq("1x", "0")?;
    ensure(sum_closed("1x") != int(-1), || "Σ*_x 1_x = -1 on an infinite meadow".into())?;
    eq("0x", "1")?;
    // (term, has finite support)
    let cases = [
        ("0", true),
        ("3*0(x-2) + 0(x+1)", true),
        ("x*0(x^2-4)", true),
        ("0(x^2-2)", true),
        ("1", false),
        ("x", false),
        ("x^2 + 0(x-1)", false),
    ];
    for (t, finite) in cases {
        let with = sum_closed(&format!("{t} + 0x"));
        let without = sum_closed(t);
        let diff = &with - &without;
        ensure((diff == int(1)) == finite, || format!("point indicator gap on {t}: {diff}"))?;
        ensure((with == without) == !finite, || format!("sum unchanged by 0_x on {t}"))?;
    }
    // Scalar extraction with y free in the factor.
    for r in ["0(x-1)*2 + 0x", "x*0(x^2-1)", "1", "x"] {
        let lhs = gt_parse_str(&format!("({r})*y"), &["x", "y"]).unwrap();
        let lhs = fss(&lhs, &["x".to_string()]).unwrap();
        let inner = sum_closed(r);
        let rhs = gt_parse_str(&format!("({inner})*y"), &["y"]).unwrap();
        ensure(lhs == rhs, || format!("scalar extraction on {r}: {lhs} vs {rhs}"))?;
    }
    let t = gt_parse_str("x*0(t-x)", &["x", "t"]).unwrap();
    let r = fss(&t, &["x".to_string()]).unwrap();
    ensure(r == gt_parse_str("t", &["t"]).unwrap(), || format!("point extraction: {r}"))?;
    let finite = ["0x", "3*0(x-2) + 0(x+1)", "x*0(x^2-4)", "-1/2*0(x-2)"];
    for a in finite {
        for b in finite {
            let sum = sum_closed(&format!("({a}) + ({b})"));
            ensure(sum == sum_closed(a) + sum_closed(b), || format!("linearity on {a}, {b}"))?;
        }
    }
    let t = gt_parse_str("0x*0y + 0(1-x)", &["x", "y"]).unwrap();
    let both = fss(&t, &["x".to_string(), "y".to_string()]).unwrap();
    ensure(both.as_constant() == Some(int(0)), || format!("Σ*_(x,y) t = {both}"))?;
    let inner = fss(&t, &["y".to_string()]).unwrap();
    let outer = fss(&inner, &["x".to_string()]).unwrap();
    ensure(outer.as_constant() == Some(int(1)), || format!("Σ*_x Σ*_y t = {outer}"))
}

// 3 ------------------------------------------------------------------------

fn crit_pmf_sensitivity() -> Outcome {
    let t = "1/4*0(x^2-2)*((1+s(x))*x + (1-s(x))*(2-x))";
    let g = gt_parse_str(t, &["x"]).unwrap();
    ensure(g.is_empty(), || format!("table of t is {g}"))?;
    ensure(sum_closed(t) == int(0), || "mass of t".into())?;
    ensure(is_pmf(&g).is_err(), || "t accepted as a PMF".into())?;
    let h = gt_parse_str(&format!("{t} + 0x"), &["x"]).unwrap();
    let mass = fss(&h, &["x".to_string()]).unwrap().as_constant();
    ensure(mass == Some(int(1)), || format!("mass of t + 0_x is {mass:?}"))?;
    ensure(is_pmf(&h).is_ok(), || "t + 0_x rejected".into())
}

// 4 ------------------------------------------------------------------------

fn crit_probability_audit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let systems = [System::PF, System::WPF, System::BR, System::BR2];
    for n in 1..=3 {
        let s = space(n);
        for _ in 0..25 {
            let p = WeightPF::new(&s, random_weights(&mut rng, n)).unwrap();
            for r in check_axioms(&p, &systems) {
                ensure(r.holds(), || format!("{:?}: {r}", p.weights()))?;
            }
        }
    }
    let e = EventSpace::generated("E", &["e"]).unwrap();
    let table = TablePF::new(&e, vec![int(0), int(0), int(0), int(1)]).unwrap();
    ensure(table == degenerate_table(&e), || "table model".into())?;
    let reports = check_axioms(&table, &[System::PF, System::WPF, System::BR]);
    let pf = reports[0].to_string();
    ensure(pf == "FAIL PF eq26 at x=e, y=!e: 1 vs 0", || pf.clone())?;
    ensure(reports[1].holds() && reports[2].holds(), || "WPF or BR fails on the table model".into())?;
    let fine = [int(0), q("1/4"), q("1/3"), q("1/2"), q("2/3"), q("3/4"), int(1)];
    let hit = search_counterexample(&e, &[System::PF], &[System::BR], &fine).map_err(|e| e.to_string())?;
    ensure(hit.is_none(), || "PF without BR found on one generator".into())?;
    let coarse = [int(0), q("1/2"), int(1)];
    let hit = search_counterexample(&space(3), &[System::PF], &[System::BR], &coarse)
        .map_err(|e| e.to_string())?;
    ensure(hit.is_none(), || "PF without BR found on three atoms".into())
}

// 5 ------------------------------------------------------------------------

fn crit_br2_additivity() -> Outcome {
    let sat = [Axiom::Top, Axiom::Bot, Axiom::Nonneg, Axiom::Bayes2];
    for (s, grid) in [
        (space(2), vec![q("-1/2"), int(0), q("1/4"), q("1/3"), q("1/2"), q("2/3"), q("3/4"), int(1)]),
        (space(3), vec![int(0), q("1/2"), int(1)]),
    ] {
        let n = s.atom_count();
        let free: Vec<u64> = (1..(1u64 << n) - 1).collect();
        let mut models = 0;
        for k in 0..grid.len().pow(free.len() as u32) {
            let mut vals = vec![int(0); 1 << n];
            vals[(1 << n) - 1] = int(1);
            let mut k = k;
            for b in &free {
                vals[*b as usize] = grid[k % grid.len()].clone();
                k /= grid.len();
            }
            let t = TablePF::new(&s, vals).unwrap();
            if sat.iter().all(|a| check_axiom(&t, *a).is_none()) {
                models += 1;
                if let Some(w) = check_axiom(&t, Axiom::Split) {
                    return Err(format!("{t}: {w}"));
                }
            }
        }
        ensure(models > 0, || "no models on the grid".into())?;
        let hit = search_axioms(&s, &sat, &[&[Axiom::Split]], &grid).map_err(|e| e.to_string())?;
        ensure(hit.is_none(), || "search disagrees with enumeration".into())?;
    }
    Ok(())
}

// 6 ------------------------------------------------------------------------

fn crit_cv_meadow() -> Outcome {
    let vals = [int(-1), int(0), q("1/2"), int(2)];
    for n in 2..=4 {
        let s = space(n);
        let w = cv_canon(&CVExpr::guard(EventExpr::name("a1"), CVExpr::val(int(1))), &s).unwrap();
        ensure(cv_is_cancellation_violation(&w), || format!("a1 :-> v(1) on {n} atoms"))?;
        let mut pool = if n == 2 { all_cvs(&s, &vals) } else { vec![] };
        pool.push(w);
        pool.push(CanonCV::constant(&s, int(3)));
        cv_meadow_laws(&pool)?;
    }
    let w1 = cv_canon(&CVExpr::guard(EventExpr::name("a1"), CVExpr::val(int(1))), &space(1)).unwrap();
    ensure(!cv_is_cancellation_violation(&w1), || "one-atom space".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1000 {
        let s = space(1 + i % 4);
        let x = random_cv(&mut rng, &s);
        let back = cv_canon(&cv_flat(&x), &s).unwrap();
        ensure(back == x, || format!("round trip of {x}"))?;
    }
    Ok(())
}

// 7 ------------------------------------------------------------------------

fn equivalences(x: &CanonCV, y: &CanonCV, p: &WeightPF) -> Outcome {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let fx = pmf_of_cv(x, p).map_err(|e| err(&e))?;
    let g = joint_pmf(x, y, p).map_err(|e| err(&e))?;
    let (rx, ry) = (rv_of_cv(x), rv_of_cv(y));
    let pairs = [
        ("E", e_p(x, p).map_err(|e| err(&e))?, e_pmf(&fx), e_rv(&rx, p).map_err(|e| err(&e))?),
        ("VAR", var_p(x, p).map_err(|e| err(&e))?, var_pmf(&fx), var_rv(&rx, p).map_err(|e| err(&e))?),
        (
            "COV",
            cov_p(x, y, p).map_err(|e| err(&e))?,
            cov_pmf(&g).map_err(|e| err(&e))?,
            cov_rv(&rx, &ry, p).map_err(|e| err(&e))?,
        ),
        (
            "CORR2",
            corr2_p(x, y, p).map_err(|e| err(&e))?,
            corr2_pmf(&g).map_err(|e| err(&e))?,
            corr2_rv(&rx, &ry, p).map_err(|e| err(&e))?,
        ),
    ];
    for (name, cv, pmf, rv) in pairs {
        ensure(cv == pmf && cv == rv, || {
            format!("{name} at X={x}, Y={y}, P={:?}: {cv} / {pmf} / {rv}", p.weights())
        })?;
    }
    // Independent oracle: direct sums over atoms.
    let w = p.weights();
    let ex: Rational = (0..w.len()).map(|i| &w[i] * x.at(i)).sum();
    let ey: Rational = (0..w.len()).map(|i| &w[i] * y.at(i)).sum();
    let exy: Rational = (0..w.len()).map(|i| &w[i] * x.at(i) * y.at(i)).sum();
    ensure(e_p(x, p).unwrap() == ex, || "E oracle".into())?;
    ensure(cov_p(x, y, p).unwrap() == exy - ex * ey, || "COV oracle".into())
}

fn crit_equivalence_suites() -> Outcome {
    let s = space(2);
    let vals: Vec<Rational> = (-2..=2).map(int).collect();
    let xs = all_cvs(&s, &vals);
    let pfs: Vec<WeightPF> = [["0", "1"], ["1/3", "2/3"], ["1/2", "1/2"], ["1", "0"]]
        .iter()
        .map(|w| WeightPF::new(&s, vec![q(w[0]), q(w[1])]).unwrap())
        .collect();
    for p in &pfs {
        for x in &xs {
            for y in &xs {
                equivalences(x, y, p)?;
            }
        }
    }
    let s = space(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let p = WeightPF::new(&s, random_weights(&mut rng, 3)).unwrap();
        let (x, y) = (random_cv(&mut rng, &s), random_cv(&mut rng, &s));
        equivalences(&x, &y, &p)?;
    }
    Ok(())
}

// 8 ------------------------------------------------------------------------

fn crit_elicitation() -> Outcome {
    let p = elicit_indifference(&int(10), &int(0), &int(2), &int(4)).map_err(|e| e.to_string())?;
    ensure(p == q("1/3"), || format!("p = {p}"))?;
    let s = EventSpace::generated("E", &["e"]).unwrap();
    let objects = ["c1".to_string(), "c2".to_string()];
    let pf = WeightPF::new(&s, vec![p.clone(), int(1) - &p]).unwrap();
    let e = EventExpr::name("e");
    let eu = |u1: i64, u2: i64| {
        let a = cfg_canon(&two_branch(&e, "c1", &int(u1), "c2", &int(u2)), &s, &objects).unwrap();
        expected_utility(&a, &pf).unwrap()
    };
    ensure(eu(10, 0) == eu(2, 4), || format!("{} vs {}", eu(10, 0), eu(2, 4)))?;
    ensure(eu(10, 0) == q("10/3"), || "EU value".into())?;
    let (high, low, d) = (int(10), int(0), int(2));
    let t = ask_threshold(&high, &low, &d).map_err(|e| e.to_string())?;
    ensure(t == q("4/5"), || format!("threshold {t}"))?;
    for k in 0..=20 {
        let pe = Rational::new(k, 20).unwrap();
        let pf = WeightPF::new(&s, vec![pe.clone(), int(1) - &pe]).unwrap();
        let ask = prefers_asking(&pf, &e, &high, &low, &d).map_err(|e| e.to_string())?;
        let oracle = pe < int(1) - d.div(&(&high - &low));
        ensure(ask == oracle, || format!("P(e) = {pe}: ask {ask}"))?;
    }
    Ok(())
}

// 9 ------------------------------------------------------------------------

fn crit_md_reduction() -> Outcome {
    let base = space(2);
    let fam = ArityFamily::new(&["a", "b"], &[&["a"], &["b"], &["a", "b"], &["b", "a"]]);
    let xs = all_cvs(&base, &[int(-1), int(0), int(1), int(2)]);
    let mut tensors = Vec::new();
    for k in 1..81 {
        let raw: Vec<i64> = (0..4).map(|i| (k / 3i64.pow(i)) % 3).collect();
        let total: i64 = raw.iter().sum();
        tensors.push(raw.iter().map(|r| Rational::new(*r, total).unwrap()).collect::<Vec<_>>());
    }
    for t in tensors.iter().step_by(4) {
        let p = Pff::from_tensors(fam.clone(), &base, &[(dims(&["a", "b"]), t.clone())]).map_err(|e| e.to_string())?;
        for x in &xs {
            for y in &xs {
                let xy = MultiCV::new(vec![("a".into(), x.clone()), ("b".into(), y.clone())]).unwrap();
                let red = reduced_stats(&p, &xy).map_err(|e| e.to_string())?;
                let cov = md_cov(&p, &xy).map_err(|e| e.to_string())?;
                let corr2 = md_corr2(&p, &xy).map_err(|e| e.to_string())?;
                ensure(cov == red.cov && corr2 == red.corr2, || {
                    format!("X={x}, Y={y}, P={t:?}: {cov}/{} {corr2}/{}", red.cov, red.corr2)
                })?;
                // Brute force over the 2x2 tensor.
                let mut exy = int(0);
                let (mut ex, mut ey) = (int(0), int(0));
                for i in 0..2 {
                    for j in 0..2 {
                        let w = &t[i * 2 + j];
                        exy += w * x.at(i) * y.at(j);
                        ex += w * x.at(i);
                        ey += w * y.at(j);
                    }
                }
                ensure(cov == exy - ex * ey, || format!("oracle cov at X={x}, Y={y}"))?;
            }
        }
    }
    Ok(())
}

// 10 -----------------------------------------------------------------------

/// Marginal of a joint over `n`-atom slots onto the slot positions `keep`.
fn marginal_of(joint: &[Rational], n: usize, slots: usize, keep: &[usize]) -> Vec<Rational> {
    let mut out = vec![int(0); n.pow(keep.len() as u32)];
    for (k, v) in joint.iter().enumerate() {
        let digits: Vec<usize> = (0..slots).map(|s| (k / n.pow((slots - 1 - s) as u32)) % n).collect();
        let idx = keep.iter().fold(0, |acc, s| acc * n + digits[*s]);
        out[idx] += v;
    }
    out
}

/// Sound infeasibility oracle: zero marginal cells force the cells beneath
/// them to zero; if nothing is left to carry the mass no joint exists.
fn forced_empty(pairs: &[(Vec<usize>, Vec<Rational>)], n: usize, slots: usize) -> bool {
    (0..n.pow(slots as u32)).all(|k| {
        let digits: Vec<usize> = (0..slots).map(|s| (k / n.pow((slots - 1 - s) as u32)) % n).collect();
        pairs.iter().any(|(keep, t)| t[keep.iter().fold(0, |acc, s| acc * n + digits[*s])].is_zero())
    })
}

fn crit_joint_existence() -> Outcome {
    let base = space(2);
    let top = dims(&["a", "b", "c"]);
    let slots_of = |w: &Arity| -> Vec<usize> { w.iter().map(|d| top.iter().position(|t| t == d).unwrap()).collect() };
    let pairs = ArityFamily::all_up_to(&["a", "b", "c"], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..20 {
        let joint = random_joint(&mut rng, 8);
        let given: Vec<(Arity, Vec<Rational>)> = pairs
            .arities()
            .filter(|w| w.len() == 2)
            .map(|w| (w.clone(), marginal_of(&joint, 2, 3, &slots_of(w))))
            .collect();
        let p = Pff::from_tensors(pairs.clone(), &base, &given).map_err(|e| e.to_string())?;
        match joint_exists(&p, &top, JOINT_BOUND).map_err(|e| e.to_string())? {
            JointVerdict::Witness(w) => {
                ensure(w.iter().all(|v| !v.is_negative()), || format!("trial {trial}: negative witness"))?;
                for (g, t) in &given {
                    ensure(marginal_of(&w, 2, 3, &slots_of(g)) == *t, || format!("trial {trial}: marginal {g:?}"))?;
                }
            }
            other => return Err(format!("trial {trial}: {other:?}")),
        }
    }
    let half = q("1/2");
    let z = int(0);
    let same = vec![half.clone(), z.clone(), z.clone(), half.clone()];
    let opposite = vec![z.clone(), half.clone(), half, z];
    let given = vec![
        (dims(&["a", "b"]), same.clone()),
        (dims(&["a", "c"]), opposite.clone()),
        (dims(&["b", "c"]), same.clone()),
    ];
    let p = Pff::from_tensors(pairs, &base, &given).map_err(|e| e.to_string())?;
    let oracle: Vec<(Vec<usize>, Vec<Rational>)> =
        vec![(vec![0, 1], same.clone()), (vec![0, 2], opposite), (vec![1, 2], same)];
    ensure(forced_empty(&oracle, 2, 3), || "oracle finds room for a joint".into())?;
    match joint_exists(&p, &top, JOINT_BOUND).map_err(|e| e.to_string())? {
        JointVerdict::Infeasible { multipliers, value } => {
            ensure(value.is_negative(), || format!("certificate value {value}"))?;
            ensure(multipliers.iter().all(|(_, m)| m.is_positive()), || "multiplier sign".into())
        }
        other => Err(format!("expected infeasible, got {other:?}")),
    }
}

// 11 -----------------------------------------------------------------------

fn crit_cli_goldens() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens");
    let scripts = [
        ("fss_separation", 0),
        ("pmf_sensitivity", 1),
        ("audit", 1),
        ("elicitation", 0),
        ("asking", 0),
        ("product_reduction", 0),
        ("bell", 0),
    ];
    for (name, code) in scripts {
        let script = dir.join(format!("{name}.mc"));
        let out = Command::new(env!("CARGO_BIN_EXE_meadowcalc")).arg(&script).output().map_err(|e| e.to_string())?;
        let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
        let want = std::fs::read_to_string(dir.join(format!("{name}.out"))).map_err(|e| e.to_string())?;
        ensure(text == want, || format!("{name}: output differs"))?;
        ensure(out.status.code() == Some(code), || format!("{name}: exit {:?}", out.status.code()))?;
        let failed = text.lines().any(|l| l.starts_with("FAIL"));
        ensure(failed == (code != 0), || format!("{name}: exit code does not track FAIL lines"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("axiom suites", crit_axiom_suites),
        ("finite support summation facts", crit_fss_facts),
        ("PMF sensitivity", crit_pmf_sensitivity),
        ("probability audit", crit_probability_audit),
        ("BR2 implies additivity", crit_br2_additivity),
        ("CV meadow", crit_cv_meadow),
        ("equivalence suites", crit_equivalence_suites),
        ("elicitation", crit_elicitation),
        ("multidimensional reduction", crit_md_reduction),
        ("joint existence", crit_joint_existence),
        ("CLI goldens", crit_cli_goldens),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        match run() {
            Ok(()) => println!("PASS {:>2} {name} ({:.2?})", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
