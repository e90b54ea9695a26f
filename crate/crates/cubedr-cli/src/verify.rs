//! Property suites behind `cubedr verify`. Every suite draws its cases from
//! its own generator seeded with `--seed`, so a suite prints the same report
//! whether it runs alone or as part of `all`.

use std::fmt::Write;

use serde_json::json;

use cubedr::cohomology::{betti, chain_complex, excision_homotopy_check};
use cubedr::cube_cat::{check_relations, sample_grid, CubeMorphism, Generator};
use cubedr::cubicalset::{
    check_coverage, prism_td, sd_iterate, subdivide_sd, td_slice_mismatches, CubicalComplex, SubdivPair,
    Subordination,
};
use cubedr::hurewicz::{exactness_defect, green_check, integrate_1form, pairing_matrix, PathPlot, Segment};
use cubedr::model::{parse_plots, CellForm, Cover, Model};
use cubedr::poly::parse_with;
use cubedr::polyform::{check_naturality, homotopy_identity_defect, PolyForm, PolyMap};
use cubedr::pou::{check_pou, BaseFunction, MvSplit, PouBuilder};
use cubedr::rng::Rng;
use cubedr::{q, qi, random, shipped, Q};

use crate::commands::Config;
use crate::{Report, Suite};

type Outcome = Result<String, String>;

struct Check {
    suite: &'static str,
    name: String,
    passed: bool,
    detail: String,
}

fn e(err: cubedr::Error) -> String {
    err.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Runner {
    suite: &'static str,
    rng: Rng,
    checks: Vec<Check>,
}

impl Runner {
    fn new(suite: &'static str, seed: u64) -> Self {
        Runner { suite, rng: Rng::new(seed), checks: Vec::new() }
    }

    /// Run one property with a fresh stream forked from the suite's generator.
    fn check(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Rng) -> Outcome) {
        let mut rng = self.rng.fork();
        let (passed, detail) = match f(&mut rng) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check { suite: self.suite, name: name.into(), passed, detail });
    }
}

fn dims(rng: &mut Rng, lo: i64, hi: i64) -> usize {
    rng.range(lo, hi) as usize
}

fn forms(cfg: &Config) -> Vec<Check> {
    let cases = cfg.cases(200);
    let mut r = Runner::new("forms", cfg.seed);
    r.check("d∘d = 0", |rng| {
        for k in 0..cases {
            let n = dims(rng, 1, 4);
            let p = dims(rng, 0, n as i64);
            ensure(random::form(rng, n, p, 3).d().d().is_zero(), || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("(g∘f)* = f*∘g*", |rng| {
        for k in 0..cases {
            let (m, j, n) = (dims(rng, 1, 3), dims(rng, 1, 3), dims(rng, 1, 3));
            let p = dims(rng, 0, n as i64);
            let f = random::map(rng, m, j, 2);
            let g = random::map(rng, j, n, 2);
            let w = random::form(rng, n, p, 3);
            let lhs = g.after(&f).map_err(e)?.pullback(&w).map_err(e)?;
            let rhs = f.pullback(&g.pullback(&w).map_err(e)?).map_err(e)?;
            ensure(lhs == rhs, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("f*∘d = d∘f*", |rng| {
        for k in 0..cases {
            let (m, n) = (dims(rng, 1, 3), dims(rng, 1, 3));
            let p = dims(rng, 0, n as i64);
            let f = random::map(rng, m, n, 2);
            let w = random::form(rng, n, p, 3);
            ensure(check_naturality(&f, &w).map_err(e)?, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("f*(a∧b) = f*a∧f*b", |rng| {
        for k in 0..cases {
            let (m, n) = (dims(rng, 1, 3), dims(rng, 1, 3));
            let p = dims(rng, 0, n as i64);
            let s = dims(rng, 0, (n - p) as i64);
            let f = random::map(rng, m, n, 2);
            let (a, b) = (random::form(rng, n, p, 2), random::form(rng, n, s, 2));
            let lhs = f.pullback(&a.wedge(&b).map_err(e)?).map_err(e)?;
            let rhs = f.pullback(&a).map_err(e)?.wedge(&f.pullback(&b).map_err(e)?).map_err(e)?;
            ensure(lhs == rhs, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("a∧b = (−1)^pq b∧a", |rng| {
        for k in 0..cases {
            let n = dims(rng, 1, 4);
            let p = dims(rng, 0, n as i64);
            let s = dims(rng, 0, (n - p) as i64);
            let (a, b) = (random::form(rng, n, p, 3), random::form(rng, n, s, 3));
            let ab = a.wedge(&b).map_err(e)?;
            let ba = b.wedge(&a).map_err(e)?;
            let ba = if p * s % 2 == 1 { ba.neg() } else { ba };
            ensure(ab == ba, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("d(a∧b) = da∧b + (−1)^p a∧db", |rng| {
        for k in 0..cases {
            let n = dims(rng, 1, 4);
            let p = dims(rng, 0, n as i64);
            let s = dims(rng, 0, (n - p) as i64);
            let (a, b) = (random::form(rng, n, p, 3), random::form(rng, n, s, 3));
            let lhs = a.wedge(&b).map_err(e)?.d();
            let second = a.wedge(&b.d()).map_err(e)?;
            let second = if p % 2 == 1 { second.neg() } else { second };
            let rhs = a.d().wedge(&b).map_err(e)?.add(&second).map_err(e)?;
            ensure(lhs == rhs, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("dD + Dd = in₁* − in₀*", |rng| {
        for k in 0..cases {
            let n = dims(rng, 0, 2);
            let t = dims(rng, 1, 2);
            let p = dims(rng, 0, t as i64);
            let f = random::map(rng, n + 1, t, 2);
            let w = random::form(rng, t, p, 3);
            ensure(homotopy_identity_defect(&f, &w).map_err(e)?.is_zero(), || format!("case {k}"))?;
        }
        Ok(format!("{cases} homotopies"))
    });
    r.checks
}

/// Two large balls whose boundaries cross the cube near `x1 = split`.
fn slab_cover(model: &Model, n: usize, split: Q, overlap: Q) -> Result<Cover, cubedr::Error> {
    let rest = ", 1/2".repeat(n - 1);
    let rad = qi(4);
    let text = format!(
        "cover A = ball(({}{rest}), {})\ncover B = ball(({}{rest}), {})\n",
        &split - &rad,
        &rad + &overlap / qi(2),
        &split + &rad,
        &rad + &overlap / qi(2),
    );
    Cover::parse(&text, model)
}

fn cubes(cfg: &Config) -> Vec<Check> {
    let cases = cfg.cases(12);
    let grid = cfg.grid(16);
    let tol = cfg.tol(1e-9);
    let mut r = Runner::new("cubes", cfg.seed);
    let pairs = match shipped::pairs() {
        Ok(p) => p,
        Err(err) => {
            r.check("shipped pairs load", |_| Err(e(err)));
            return r.checks;
        }
    };
    let mut ratios = Vec::new();
    for sp in &pairs {
        let mut ratio = None;
        r.check(format!("Sd on {}", sp.name), |_| {
            let sub = Subordination::new(&sp.model, &sp.cover, &sp.pair.plot).map_err(e)?;
            let one = subdivide_sd(&sp.pair, &sub);
            ensure(one.complex.audit(grid).is_valid_cube(), || "one step breaks the audit".into())?;
            let run = sd_iterate(&sp.pair, &sub, 6, grid).map_err(e)?;
            ensure(run.pair.complex.audit(grid).is_valid_cube(), || "the final complex fails the audit".into())?;
            let again = subdivide_sd(&run.pair, &sub);
            ensure(again.complex.keys() == run.pair.complex.keys(), || "Sd moves a subordinate pair".into())?;
            let td = prism_td(&sp.pair, &sub);
            let (m0, m1) = td_slice_mismatches(&sp.pair, &td, &one);
            ensure(m0 + m1 == 0, || format!("Td slices differ by {m0} and {m1} cells"))?;
            ratio = Some((sp.pair.n(), run.worst_ratio()));
            Ok(format!("r={}, {} cells", run.iterations, run.pair.complex.len()))
        });
        if let Some(x) = ratio {
            ratios.push((sp.name, x));
        }
    }
    r.check("d(Sd K) ≤ n/(n+1)·d(K)", |_| {
        let mut over = Vec::new();
        let mut all = Vec::new();
        for (name, (n, ratio)) in &ratios {
            let bound = *n as f64 / (*n as f64 + 1.0);
            let v = ratio.unwrap_or(0.0);
            all.push(format!("{name} {v:.4}"));
            if v > bound + tol {
                over.push(format!("{name} {v:.4} > {bound:.4}"));
            }
        }
        ensure(ratios.len() == pairs.len(), || "some pairs did not subdivide".into())?;
        ensure(over.is_empty(), || over.join(", "))?;
        Ok(all.join(", "))
    });
    r.check("Sd on random slab covers", |rng| {
        let mut used = 0;
        for k in 0..cases {
            let n = dims(rng, 1, 2);
            let split = q(rng.range(3, 5), 8);
            let overlap = q(rng.range(3, 4), 8);
            let model = Model::parse(&vec!["[0,1]"; n].join("x")).map_err(e)?;
            let cover = slab_cover(&model, n, split, overlap).map_err(e)?;
            let pair = SubdivPair::new(CubicalComplex::unit(n), PolyMap::identity(n)).map_err(e)?;
            let sub = Subordination::new(&model, &cover, &pair.plot).map_err(e)?;
            if check_coverage(n, &sub, grid).is_err() {
                continue;
            }
            used += 1;
            let sd = subdivide_sd(&pair, &sub);
            ensure(sd.complex.audit(grid).is_valid_cube(), || format!("case {k}: audit"))?;
            let b = betti(&sd.complex.chain_complex().map_err(e)?);
            ensure(b[0] == 1 && b[1..].iter().all(|&x| x == 0), || format!("case {k}: Betti {b:?}"))?;
            let run = sd_iterate(&pair, &sub, 6, grid).map_err(e)?;
            let again = subdivide_sd(&run.pair, &sub);
            ensure(again.complex.keys() == run.pair.complex.keys(), || format!("case {k}: no fixed point"))?;
        }
        Ok(format!("{used} covers"))
    });
    r.checks
}

/// A valid random word starting from dimension `n`, staying at most `top`.
fn random_word(rng: &mut Rng, n: usize, top: usize) -> Vec<Generator> {
    let mut dim = n;
    let mut w = Vec::new();
    for _ in 0..rng.range(0, 6) {
        if rng.coin() && dim > 0 {
            w.push(Generator::Degeneracy { i: rng.index(dim) + 1 });
            dim -= 1;
        } else if dim < top {
            w.push(Generator::Boundary { i: rng.index(dim + 1) + 1, eps: rng.coin() as u8 });
            dim += 1;
        }
    }
    w
}

fn relations(cfg: &Config) -> Vec<Check> {
    let cases = cfg.cases(200);
    let mut r = Runner::new("relations", cfg.seed);
    r.check("cube relations through dimension 5", |_| {
        let rep = check_relations(5).map_err(e)?;
        ensure(rep.violations.is_empty(), || format!("{} violations", rep.violations.len()))?;
        Ok(format!("{} instances, {} points", rep.total_instances(), rep.points_checked))
    });
    r.check("normal forms are the same maps", |rng| {
        for k in 0..cases {
            let n = dims(rng, 0, 3);
            let f = CubeMorphism::from_word(n, random_word(rng, n, 5)).map_err(e)?;
            let g = f.normal_form();
            ensure(f.equivalent(&g) && g.normal_form() == g, || format!("case {k}: {f:?}"))?;
            for t in sample_grid(n, 3, 64) {
                ensure(f.apply_q(&t).map_err(e)? == g.apply_q(&t).map_err(e)?, || format!("case {k}: {f:?}"))?;
            }
        }
        Ok(format!("{cases} words"))
    });
    r.check("composition matches polynomial maps", |rng| {
        for k in 0..cases {
            let n = dims(rng, 0, 2);
            let f = CubeMorphism::from_word(n, random_word(rng, n, 4)).map_err(e)?;
            let m = f.target_dim();
            let g = CubeMorphism::from_word(m, random_word(rng, m, 4)).map_err(e)?;
            let gf = g.after(&f).map_err(e)?;
            let poly = PolyMap::from_cube_morphism(&g).after(&PolyMap::from_cube_morphism(&f)).map_err(e)?;
            ensure(PolyMap::from_cube_morphism(&gf) == poly, || format!("case {k}"))?;
        }
        Ok(format!("{cases} pairs"))
    });
    r.checks
}

fn pou(cfg: &Config) -> (Vec<Check>, f64) {
    let cases = cfg.cases(50);
    let grid = cfg.grid(64);
    let tol = cfg.tol(1e-12);
    let split_tol = cfg.tol(1e-10);
    let mut worst: f64 = 0.0;
    let mut r = Runner::new("pou", cfg.seed);
    for name in ["interval", "circle", "torus"] {
        r.check(format!("shipped plots on {name}"), |_| {
            let s = shipped::load(name).map_err(e)?;
            let cover = s.cover.as_ref().ok_or("no cover")?;
            let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, grid).map_err(e)?;
            let rep = check_pou(&b, &s.plots, grid).map_err(e)?;
            worst = worst.max(rep.max_sum_error);
            ensure(rep.passes(tol), || format!("{rep:?}"))?;
            Ok(format!("{} plots, max sum deviation {:.1e}", rep.plots, rep.max_sum_error))
        });
    }
    r.check("random plots into the circle", |rng| {
        let s = shipped::load("circle").map_err(e)?;
        let cover = s.cover.as_ref().ok_or("no cover")?;
        let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, grid).map_err(e)?;
        let mut text = String::new();
        for _ in 0..cases {
            let (u, v) = (rng.range(0, 8), rng.range(0, 8));
            writeln!(text, "plot 1 : ({u}/4 + {}/4*x1)", v - u).unwrap();
        }
        let plots = parse_plots(&text, 1).map_err(e)?;
        let rep = check_pou(&b, &plots, grid).map_err(e)?;
        worst = worst.max(rep.max_sum_error);
        ensure(rep.passes(tol), || format!("{rep:?}"))?;
        Ok(format!("{} plots, max sum deviation {:.1e}", rep.plots, rep.max_sum_error))
    });
    for name in ["circle", "torus"] {
        r.check(format!("Mayer-Vietoris split on {name}"), |rng| {
            let s = shipped::load(name).map_err(e)?;
            let cover = s.cover.as_ref().ok_or("no cover")?;
            let b = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, grid).map_err(e)?;
            let mut err: f64 = 0.0;
            for kappa in &s.forms {
                let rep = MvSplit::new(&b, kappa).check(256, rng).map_err(e)?;
                ensure(rep.support_violations == 0, || format!("{}: {} support violations", kappa.name, rep.support_violations))?;
                err = err.max(rep.reconstruction_error);
            }
            ensure(err < split_tol, || format!("reconstruction error {err:.3e}"))?;
            Ok(format!("{} forms, reconstruction error {err:.1e}", s.forms.len()))
        });
    }
    (r.checks, worst)
}

fn ramp(u: &Q, v: &Q) -> String {
    format!("{u} + ({})*t", v - u)
}

fn straight(model: &Model, cell: &str, a: &[Q], b: &[Q]) -> Result<PathPlot, cubedr::Error> {
    let comps = a.iter().zip(b).map(|(u, v)| parse_with(&ramp(u, v), &["t"])).collect::<Result<_, _>>().map_err(cubedr::Error::Form)?;
    let seg = Segment { cell: model.resolve(cell)?, map: PolyMap::new(1, comps)? };
    PathPlot::new(model, "p", vec![seg])
}

fn hurewicz(cfg: &Config) -> Vec<Check> {
    let cases = cfg.cases(50);
    let mut r = Runner::new("hurewicz", cfg.seed);
    r.check("exact forms vanish on loops", |_| {
        let mut count = 0;
        for name in ["interval", "circle", "torus", "wedge"] {
            let s = shipped::load(name).map_err(e)?;
            let ex = s.form("exact").ok_or("no exact form")?;
            for l in &s.loops {
                let v = integrate_1form(&s.model, ex, l).map_err(e)?;
                ensure(v == qi(0), || format!("{name}/{}: {v}", l.name))?;
                count += 1;
            }
            let rep = exactness_defect(&s.model, ex, &s.loops).map_err(e)?;
            ensure(rep.primitive.is_some(), || format!("{name}: no primitive"))?;
        }
        Ok(format!("{count} loops"))
    });
    r.check("circle generator pairs to 1", |_| {
        let s = shipped::load("circle").map_err(e)?;
        let g = s.form("g").ok_or("no generator")?;
        let v = integrate_1form(&s.model, g, &s.loops[0]).map_err(e)?;
        let w = integrate_1form(&s.model, g, &s.loops[0].reversed()).map_err(e)?;
        ensure(v == qi(1) && w == qi(-1), || format!("{v} and {w} reversed"))?;
        Ok("1, reversed −1".into())
    });
    r.check("∫ dF = F(end) − F(start)", |rng| {
        let m = Model::parse("[0,1]x[0,1]").map_err(e)?;
        let top = m.resolve("[0,1]x[0,1]").map_err(e)?;
        for k in 0..cases {
            let f = random::polynomial(rng, 2, 3, 4);
            let mut w = CellForm::zero("dF", 1);
            w.cells.insert(top, PolyForm::function(f.clone()).d());
            let (a, b) = (random::grid_point(rng, 2, 8), random::grid_point(rng, 2, 8));
            let p = straight(&m, "[0,1]x[0,1]", &a, &b).map_err(e)?;
            let v = integrate_1form(&m, &w, &p).map_err(e)?;
            ensure(v == f.eval(&b).map_err(e)? - f.eval(&a).map_err(e)?, || format!("case {k}"))?;
        }
        Ok(format!("{cases} cases"))
    });
    r.check("additive under concatenation, odd under reversal", |rng| {
        let s = shipped::load("torus").map_err(e)?;
        for k in 0..cases {
            let pts: Vec<Vec<Q>> = (0..3).map(|_| random::grid_point(rng, 2, 8)).collect();
            let p1 = straight(&s.model, "[0,1]x[0,1]", &pts[0], &pts[1]).map_err(e)?;
            let p2 = straight(&s.model, "[0,1]x[0,1]", &pts[1], &pts[2]).map_err(e)?;
            let p12 = p1.concat(&s.model, &p2).map_err(e)?;
            for w in &s.forms {
                let i1 = integrate_1form(&s.model, w, &p1).map_err(e)?;
                let i2 = integrate_1form(&s.model, w, &p2).map_err(e)?;
                ensure(integrate_1form(&s.model, w, &p12).map_err(e)? == &i1 + &i2, || format!("case {k}"))?;
                ensure(integrate_1form(&s.model, w, &p1.reversed()).map_err(e)? == -i1, || format!("case {k}"))?;
            }
        }
        Ok(format!("{cases} cases"))
    });
    r.check("Green's formula", |rng| {
        for k in 0..cases {
            let n = dims(rng, 1, 3);
            let h = random::map(rng, 2, n, 2);
            let closed = random::closed_one_form(rng, n, 3);
            let g = green_check(&closed, &h).map_err(e)?;
            ensure(g.boundary == qi(0) && g.interior == qi(0), || format!("closed case {k}"))?;
            let any = random::form(rng, n, 1, 2);
            let g = green_check(&any, &h).map_err(e)?;
            ensure(g.stokes_defect() == qi(0), || format!("case {k}: Stokes defect {}", g.stokes_defect()))?;
        }
        Ok(format!("{cases} closed forms, {cases} arbitrary forms"))
    });
    r.check("pairing rank equals b1", |_| {
        let mut out = Vec::new();
        for name in ["circle", "torus", "wedge"] {
            let s = shipped::load(name).map_err(e)?;
            let b1 = betti(&chain_complex(&s.model).map_err(e)?)[1];
            let (_, rank) = pairing_matrix(&s.model, &s.generators(), &s.loops).map_err(e)?;
            ensure(rank == b1, || format!("{name}: rank {rank}, b1 {b1}"))?;
            out.push(format!("{name} {rank}"));
        }
        Ok(out.join(", "))
    });
    r.checks
}

fn excision(cfg: &Config) -> Vec<Check> {
    let cases = cfg.cases(20);
    let tol = cfg.tol(1e-8);
    let mut r = Runner::new("excision", cfg.seed);
    r.check("dD + Dd = λ*ω − ω", |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..cases {
            let n = dims(rng, 1, 2);
            let p = dims(rng, 0, n as i64);
            let w = random::form(rng, n, p, 3);
            let pts: Vec<Vec<f64>> = (0..8).map(|_| (0..n).map(|_| rng.unit()).collect()).collect();
            worst = worst.max(excision_homotopy_check(&w, &pts, 64).identity_residual);
        }
        ensure(worst < tol, || format!("residual {worst:.3e}"))?;
        Ok(format!("{cases} forms, residual {worst:.1e}"))
    });
    r.checks
}

pub fn run(suite: Suite, cfg: &Config) -> Report {
    let mut checks = Vec::new();
    let mut deviation = None;
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Forms) {
        checks.extend(forms(cfg));
    }
    if want(Suite::Cubes) {
        checks.extend(cubes(cfg));
    }
    if want(Suite::Relations) {
        checks.extend(relations(cfg));
    }
    if want(Suite::Pou) {
        let (c, worst) = pou(cfg);
        checks.extend(c);
        deviation = Some(worst);
    }
    if want(Suite::Hurewicz) {
        checks.extend(hurewicz(cfg));
    }
    if want(Suite::Excision) {
        checks.extend(excision(cfg));
    }

    let failed = checks.iter().filter(|c| !c.passed).count();
    let ws = checks.iter().map(|c| c.suite.len()).max().unwrap_or(0);
    let wn = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    let mut text = String::new();
    for c in &checks {
        let pad = wn - c.name.chars().count();
        writeln!(
            text,
            "{}  {:<ws$}  {}{}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            " ".repeat(pad),
            c.detail
        )
        .unwrap();
    }
    if let Some(d) = deviation {
        writeln!(text, "max sum deviation: {d:.3e}").unwrap();
    }
    writeln!(text, "seed {}: {} passed, {failed} failed", cfg.seed, checks.len() - failed).unwrap();
    let json = json!({
        "seed": cfg.seed,
        "checks": checks.iter().map(|c| json!({
            "suite": c.suite, "name": c.name, "passed": c.passed, "detail": c.detail,
        })).collect::<Vec<_>>(),
        "max_sum_deviation": deviation,
        "passed": checks.len() - failed,
        "failed": failed,
    });
    Report { text, json, ok: failed == 0 }
}
