//! The ten acceptance criteria, one line each. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cubedr::cohomology::{betti, chain_complex, excision_homotopy_check, mayer_vietoris};
use cubedr::cube_cat::check_relations;
use cubedr::cubicalset::{prism_td, sd_iterate, subdivide_sd, td_slice_mismatches, Subordination};
use cubedr::hurewicz::{green_check, integrate_1form, pairing_matrix};
use cubedr::polyform::{check_naturality, homotopy_identity_defect};
use cubedr::pou::{check_pou, BaseFunction, MvSplit, PouBuilder};
use cubedr::rng::Rng;
use cubedr::{qi, random, shipped};

const SEED: u64 = 20240601;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: cubedr::Error) -> String {
    err.to_string()
}

fn operator_identities() -> Outcome {
    let mut rng = Rng::new(SEED);
    let cases = 200;
    for k in 0..cases {
        let n = rng.range(1, 4) as usize;
        let p = rng.range(0, n as i64) as usize;
        let w = random::form(&mut rng, n, p, 3);
        ensure(w.d().d().is_zero(), || format!("d∘d ≠ 0 on case {k}"))?;
    }
    for k in 0..cases {
        let (m, j, n) = (rng.range(1, 4) as usize, rng.range(1, 4) as usize, rng.range(1, 4) as usize);
        let p = rng.range(0, n as i64) as usize;
        let f = random::map(&mut rng, m, j, 2);
        let g = random::map(&mut rng, j, n, 2);
        let w = random::form(&mut rng, n, p, 3);
        let lhs = g.after(&f).map_err(e)?.pullback(&w).map_err(e)?;
        let rhs = f.pullback(&g.pullback(&w).map_err(e)?).map_err(e)?;
        ensure(lhs == rhs, || format!("(g∘f)* ≠ f*g* on case {k}"))?;
    }
    for k in 0..cases {
        let (m, n) = (rng.range(1, 4) as usize, rng.range(1, 4) as usize);
        let p = rng.range(0, n as i64) as usize;
        let f = random::map(&mut rng, m, n, 2);
        let w = random::form(&mut rng, n, p, 3);
        ensure(check_naturality(&f, &w).map_err(e)?, || format!("f*d ≠ d f* on case {k}"))?;
    }
    for k in 0..cases {
        let n = rng.range(1, 4) as usize;
        let p = rng.range(0, n as i64) as usize;
        let r = rng.range(0, (n - p) as i64) as usize;
        let a = random::form(&mut rng, n, p, 3);
        let b = random::form(&mut rng, n, r, 3);
        let ab = a.wedge(&b).map_err(e)?;
        let mut ba = b.wedge(&a).map_err(e)?;
        if p * r % 2 == 1 {
            ba = ba.neg();
        }
        ensure(ab == ba, || format!("graded commutativity fails on case {k}"))?;
    }
    Ok(format!("{cases} cases for each of 4 identities"))
}

fn homotopy_invariance() -> Outcome {
    let mut rng = Rng::new(SEED ^ 2);
    let cases = 100;
    for k in 0..cases {
        let n = rng.range(0, 3) as usize;
        let t = rng.range(1, 3) as usize;
        let p = rng.range(0, t as i64) as usize;
        let f = random::map(&mut rng, n + 1, t, 2);
        let w = random::form(&mut rng, t, p, 3);
        let defect = homotopy_identity_defect(&f, &w).map_err(e)?;
        ensure(defect.is_zero(), || format!("dD + Dd ≠ in1* − in0* on case {k}"))?;
    }
    Ok(format!("{cases} homotopies, zero residual"))
}

fn cube_relations() -> Outcome {
    let r = check_relations(5).map_err(e)?;
    ensure(r.violations.is_empty(), || format!("{} violations", r.violations.len()))?;
    Ok(format!("{} instances, {} point checks, 0 violations", r.total_instances(), r.points_checked))
}

fn betti_numbers() -> Outcome {
    let want: &[(&str, &[usize])] = &[
        ("point", &[1]),
        ("circle", &[1, 1]),
        ("sphere", &[1, 0, 1]),
        ("torus", &[1, 2, 1]),
        ("rp2", &[1, 0, 0]),
        ("wedge", &[1, 2]),
    ];
    let mut got = Vec::new();
    for (name, b) in want {
        let s = shipped::load(name).map_err(e)?;
        let have = betti(&chain_complex(&s.model).map_err(e)?);
        ensure(have == *b, || format!("{name}: {have:?}, expected {b:?}"))?;
        got.push(format!("{name} {have:?}"));
    }
    Ok(got.join(", "))
}

fn mayer_vietoris_exactness() -> Outcome {
    let mut got = Vec::new();
    for name in ["circle", "sphere", "torus"] {
        let s = shipped::load(name).map_err(e)?;
        let t = mayer_vietoris(&s.model, s.cover.as_ref().expect("shipped cover")).map_err(e)?;
        ensure(t.is_exact(), || format!("{name}: not exact at {:?}", t.failures))?;
        ensure(t.agrees(), || format!("{name}: assembled {:?} vs direct {:?}", t.assembled, t.direct))?;
        got.push(format!("{name} {:?}", t.assembled));
    }
    Ok(got.join(", "))
}

fn subdivision() -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for sp in shipped::pairs().map_err(e)? {
        let sub = Subordination::new(&sp.model, &sp.cover, &sp.pair.plot).map_err(e)?;
        let n = sp.pair.n();
        let run = match sd_iterate(&sp.pair, &sub, 6, 16) {
            Ok(run) => run,
            Err(err) => {
                failures.push(format!("{}: {err}", sp.name));
                continue;
            }
        };
        let again = subdivide_sd(&run.pair, &sub);
        if again.complex.keys() != run.pair.complex.keys() {
            failures.push(format!("{}: Sd moved a subordinate pair", sp.name));
        }
        let bound = n as f64 / (n as f64 + 1.0);
        let ratio = run.worst_ratio().unwrap_or(0.0);
        if ratio > bound + 1e-9 {
            failures.push(format!("{}: diameter ratio {ratio:.6} > {bound:.6}", sp.name));
        }
        let sd = subdivide_sd(&sp.pair, &sub);
        let td = prism_td(&sp.pair, &sub);
        let (m0, m1) = td_slice_mismatches(&sp.pair, &td, &sd);
        if m0 + m1 > 0 {
            failures.push(format!("{}: Td slices differ by {m0} and {m1} cells", sp.name));
        }
        lines.push(format!("{} r={} ratio={ratio:.4}", sp.name, run.iterations));
    }
    if failures.is_empty() {
        Ok(lines.join(", "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), lines.join(", ")))
    }
}

fn partition_of_unity() -> Outcome {
    let tol = 1e-12;
    let mut worst: f64 = 0.0;
    let mut plots = 0;
    for name in ["interval", "circle", "torus"] {
        let s = shipped::load(name).map_err(e)?;
        let cover = s.cover.as_ref().expect("shipped cover");
        let builder = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, 64).map_err(e)?;
        let r = check_pou(&builder, &s.plots, 64).map_err(e)?;
        ensure(r.passes(tol), || format!("{name}: {r:?}"))?;
        worst = worst
            .max(r.max_sum_error)
            .max(r.face_residual)
            .max(r.degeneracy_residual)
            .max(r.collar_residual);
        plots += r.plots;
    }
    Ok(format!("{plots} plots, worst residual {worst:.1e}, 0 support violations"))
}

fn hurewicz_pairing() -> Outcome {
    for name in ["circle", "torus", "wedge", "interval"] {
        let s = shipped::load(name).map_err(e)?;
        let ex = s.form("exact").expect("shipped exact form");
        for l in &s.loops {
            let v = integrate_1form(&s.model, ex, l).map_err(e)?;
            ensure(v == qi(0), || format!("{name}: exact form integrates to {v} over {}", l.name))?;
        }
    }
    let c = shipped::load("circle").map_err(e)?;
    let g = integrate_1form(&c.model, c.form("g").expect("generator"), &c.loops[0]).map_err(e)?;
    ensure(g == qi(1), || format!("circle generator pairs to {g}"))?;

    let mut rng = Rng::new(SEED ^ 8);
    for k in 0..50 {
        let n = rng.range(1, 4) as usize;
        let w = random::closed_one_form(&mut rng, n, 3);
        let h = random::map(&mut rng, 2, n, 2);
        let r = green_check(&w, &h).map_err(e)?;
        ensure(r.boundary == qi(0) && r.interior == qi(0), || format!("green_check nonzero on case {k}"))?;
    }

    let mut ranks = Vec::new();
    for name in ["circle", "torus", "wedge"] {
        let s = shipped::load(name).map_err(e)?;
        let b1 = betti(&chain_complex(&s.model).map_err(e)?)[1];
        let (_, r) = pairing_matrix(&s.model, &s.generators(), &s.loops).map_err(e)?;
        ensure(r == b1, || format!("{name}: pairing rank {r}, b1 = {b1}"))?;
        ranks.push(format!("{name} {r}"));
    }
    Ok(format!("generator pairing 1, 50 Green checks 0, ranks {}", ranks.join(", ")))
}

fn excision() -> Outcome {
    let mut rng = Rng::new(SEED ^ 9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.range(1, 3) as usize;
        let p = rng.range(0, n as i64) as usize;
        let w = random::form(&mut rng, n, p, 3);
        let pts: Vec<Vec<f64>> = (0..8).map(|_| (0..n).map(|_| rng.unit()).collect()).collect();
        let r = excision_homotopy_check(&w, &pts, 64);
        worst = worst.max(r.identity_residual);
    }
    ensure(worst < 1e-8, || format!("residual {worst:.3e}"))?;
    Ok(format!("20 forms, max residual {worst:.1e}"))
}

fn mv_split() -> Outcome {
    let s = shipped::load("circle").map_err(e)?;
    let cover = s.cover.as_ref().expect("shipped cover");
    let builder = PouBuilder::new(&s.model, cover, BaseFunction::Urysohn, 64).map_err(e)?;
    let kappa = s.form("g").expect("generator");
    let split = MvSplit::new(&builder, kappa);
    let r = split.check(256, &mut Rng::new(SEED ^ 10)).map_err(e)?;
    ensure(r.reconstruction_error < 1e-10, || format!("reconstruction error {:.3e}", r.reconstruction_error))?;
    ensure(r.support_violations == 0, || format!("{} support violations", r.support_violations))?;
    Ok(format!("{} points, error {:.1e}", r.points, r.reconstruction_error))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("operator identities", 30, operator_identities),
        ("homotopy invariance", 30, homotopy_invariance),
        ("cube relations", 10, cube_relations),
        ("betti numbers", 10, betti_numbers),
        ("mayer-vietoris", 10, mayer_vietoris_exactness),
        ("subdivision", 60, subdivision),
        ("partition of unity", 60, partition_of_unity),
        ("hurewicz pairing", 30, hurewicz_pairing),
        ("excision homotopy", 60, excision),
        ("mv split", 10, mv_split),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let (ok, detail) = match out {
            Ok(d) if took <= Duration::from_secs(*limit) => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit}s budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<20} {}  {:>7.2}s  {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
