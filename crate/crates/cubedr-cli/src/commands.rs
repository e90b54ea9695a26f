use std::fmt::Write;
use std::fs;

use serde_json::json;

use cubedr::cohomology::{betti, chain_complex, mayer_vietoris};
use cubedr::cubicalset::{sd_iterate, CubicalComplex, MeshMetrics, SubdivPair, Subordination};
use cubedr::hurewicz::{integrate_1form, PathPlot};
use cubedr::model::{parse_forms, parse_plots, Cover, Model};
use cubedr::pou::{check_pou, BaseFunction, PouBuilder};
use cubedr::Error;

use crate::input::{read, Failure, Kind};
use crate::{Base, Report};

pub struct Config {
    pub seed: u64,
    pub cases: Option<usize>,
    pub grid: Option<u32>,
    pub tolerance: Option<f64>,
}

impl Config {
    pub fn cases(&self, default: usize) -> usize {
        self.cases.unwrap_or(default)
    }

    pub fn grid(&self, default: u32) -> u32 {
        self.grid.unwrap_or(default)
    }

    pub fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
}

fn load_model(source: &str) -> Result<Model, Failure> {
    Ok(Model::parse(&read(source, Kind::Model)?)?)
}

pub fn cohomology(model: &str) -> Result<Report, Failure> {
    let m = load_model(model)?;
    let b = betti(&chain_complex(&m)?);
    Ok(Report { text: format!("b: {}\n", join(&b)), json: json!({ "model": model, "betti": b }), ok: true })
}

pub fn mv(model: &str, cover: &str) -> Result<Report, Failure> {
    let m = load_model(model)?;
    let c = Cover::parse(&read(cover, Kind::Cover)?, &m)?;
    let t = mayer_vietoris(&m, &c)?;
    let mut text = String::new();
    let head = ["q", "H(X)", "H(A)", "H(B)", "H(AB)", "rk psi", "rk phi", "rk delta"];
    let mut rows: Vec<Vec<String>> = vec![head.iter().map(|s| s.to_string()).collect()];
    for r in &t.rows {
        rows.push(
            [r.q, r.h_x, r.h_a, r.h_b, r.h_ab, r.rank_psi, r.rank_phi, r.rank_delta]
                .iter()
                .map(|v| v.to_string())
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..head.len()).map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    for r in &rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        writeln!(text, "{}", cells.join("  ")).unwrap();
    }
    let failures: Vec<String> = t.failures.iter().map(|(q, at)| format!("{at} in degree {q}")).collect();
    if failures.is_empty() {
        writeln!(text, "exact: yes").unwrap();
    } else {
        writeln!(text, "exact: no ({})", failures.join(", ")).unwrap();
    }
    writeln!(text, "assembled: {}", join(&t.assembled)).unwrap();
    writeln!(text, "direct: {}", join(&t.direct)).unwrap();
    let ok = t.is_exact() && t.agrees();
    if !t.agrees() {
        writeln!(text, "assembled and direct Betti numbers differ").unwrap();
    }
    let json = json!({
        "rows": t.rows.iter().map(|r| json!({
            "q": r.q, "h_x": r.h_x, "h_a": r.h_a, "h_b": r.h_b, "h_ab": r.h_ab,
            "rank_psi": r.rank_psi, "rank_phi": r.rank_phi, "rank_delta": r.rank_delta,
        })).collect::<Vec<_>>(),
        "exact": t.is_exact(),
        "failures": failures,
        "assembled": t.assembled,
        "direct": t.direct,
    });
    Ok(Report { text, json, ok })
}

fn pair_kind(source: &str, plain: Kind, pair: Kind) -> Kind {
    if source.starts_with('@') {
        pair
    } else {
        plain
    }
}

fn fmt_eps(e: Option<f64>) -> String {
    e.map_or("none".into(), |v| format!("{v:.6}"))
}

pub fn subdivide(
    cfg: &Config,
    model: &str,
    plot: &str,
    cover: &str,
    iters: usize,
    complex: Option<&str>,
    output: Option<&str>,
) -> Result<Report, Failure> {
    let m = Model::parse(&read(model, pair_kind(model, Kind::Model, Kind::PairModel))?)?;
    let c = Cover::parse(&read(cover, pair_kind(cover, Kind::Cover, Kind::PairCover))?, &m)?;
    let plots = parse_plots(&read(plot, pair_kind(plot, Kind::Plots, Kind::PairPlot))?, m.ambient())?;
    let [p] = <[_; 1]>::try_from(plots).map_err(|v: Vec<_>| {
        Error::Model(format!("the plot file must hold exactly one plot, found {}", v.len()))
    })?;
    let n = p.source_dim();
    let k = match complex {
        Some(path) => CubicalComplex::parse(&read(path, Kind::Model)?, n)?,
        None => CubicalComplex::unit(n),
    };
    let pair = SubdivPair::new(k, p)?;
    let sub = Subordination::new(&m, &c, &pair.plot)?;
    let run = sd_iterate(&pair, &sub, iters, cfg.grid(16))?;
    let serial = run.pair.complex.serialize()?;

    let bound = if n == 0 { 0.0 } else { n as f64 / (n as f64 + 1.0) };
    let ratio = run.worst_ratio();
    let within = ratio.is_none_or(|r| r <= bound + cfg.tol(1e-9));
    let first: &MeshMetrics = &run.trail[0];
    let last: &MeshMetrics = run.trail.last().expect("trail");
    let mut text = String::new();
    match output {
        Some(path) => fs::write(path, &serial).map_err(|err| Failure::Io { path: path.to_string(), err })?,
        None => text.push_str(&serial),
    }
    writeln!(text, "# iterations: {}", run.iterations).unwrap();
    writeln!(text, "# epsilon: {} -> {}", fmt_eps(first.epsilon), fmt_eps(last.epsilon)).unwrap();
    let ds: Vec<String> = run.trail.iter().map(|t| format!("{:.6}", t.diameter)).collect();
    writeln!(text, "# diameter: {}", ds.join(" -> ")).unwrap();
    match ratio {
        Some(r) => writeln!(
            text,
            "# ratio: {r:.6} against n/(n+1) = {bound:.6}{}",
            if within { "" } else { ", exceeded" }
        )
        .unwrap(),
        None => writeln!(text, "# ratio: none (no step had positive diameter)").unwrap(),
    }
    let json = json!({
        "complex": serial,
        "iterations": run.iterations,
        "trail": run.trail.iter().map(|t| json!({ "epsilon": t.epsilon, "diameter": t.diameter })).collect::<Vec<_>>(),
        "worst_ratio": ratio,
        "bound": bound,
        "within_bound": within,
    });
    Ok(Report { text, json, ok: true })
}

pub fn integrate(
    model: &str,
    forms: &str,
    paths: &str,
    form: Option<&str>,
    path: Option<&str>,
    reverse: bool,
) -> Result<Report, Failure> {
    let m = load_model(model)?;
    let all_forms = parse_forms(&read(forms, Kind::Forms)?, &m)?;
    let all_paths = PathPlot::parse_all(&read(paths, Kind::Loops)?, &m)?;
    let forms: Vec<_> = match form {
        Some(name) => {
            let f = all_forms.into_iter().find(|f| f.name == name);
            vec![f.ok_or_else(|| Error::Form(format!("no form named '{name}'")))?]
        }
        None => all_forms.into_iter().filter(|f| f.degree == 1).collect(),
    };
    let mut paths: Vec<_> = match path {
        Some(name) => {
            let p = all_paths.into_iter().find(|p| p.name == name);
            vec![p.ok_or_else(|| Error::Form(format!("no path named '{name}'")))?]
        }
        None => all_paths,
    };
    if forms.is_empty() {
        return Err(Error::Form("no 1-forms to integrate".into()).into());
    }
    if paths.is_empty() {
        return Err(Error::Form("no paths to integrate along".into()).into());
    }
    if reverse {
        paths = paths.iter().map(|p| p.reversed()).collect();
    }
    let mut values = Vec::new();
    for f in &forms {
        for p in &paths {
            values.push((f.name.clone(), p.name.clone(), integrate_1form(&m, f, p)?));
        }
    }
    let text = if let [(_, _, v)] = values.as_slice() {
        format!("{v}\n")
    } else {
        let wf = values.iter().map(|v| v.0.len()).max().unwrap_or(0);
        let wp = values.iter().map(|v| v.1.len()).max().unwrap_or(0);
        values.iter().map(|(f, p, v)| format!("{f:<wf$}  {p:<wp$}  {v}\n")).collect()
    };
    let json = json!(values
        .iter()
        .map(|(f, p, v)| json!({ "form": f, "path": p, "reversed": reverse, "value": v.to_string() }))
        .collect::<Vec<_>>());
    Ok(Report { text, json, ok: true })
}

pub fn pou(cfg: &Config, model: &str, cover: &str, plots: &str, base: Base) -> Result<Report, Failure> {
    let m = load_model(model)?;
    let c = Cover::parse(&read(cover, Kind::Cover)?, &m)?;
    let plots = parse_plots(&read(plots, Kind::Plots)?, m.ambient())?;
    let base = match base {
        Base::Urysohn => BaseFunction::Urysohn,
        Base::ThreeValued => BaseFunction::ThreeValued,
    };
    let grid = cfg.grid(64);
    let tol = cfg.tol(1e-12);
    let builder = PouBuilder::new(&m, &c, base, grid)?;
    let r = check_pou(&builder, &plots, grid)?;
    let ok = r.passes(tol);
    let text = format!(
        "plots checked: {}\ngrid points: {}\nmax sum deviation: {:.3e}\nsupport violations: {}\n\
         face residual: {:.3e}\ndegeneracy residual: {:.3e}\ncollar residual: {:.3e}\n{} at tolerance {tol:e}\n",
        r.plots,
        r.points,
        r.max_sum_error,
        r.support_violations,
        r.face_residual,
        r.degeneracy_residual,
        r.collar_residual,
        if ok { "pass" } else { "FAIL" },
    );
    let json = json!({
        "plots": r.plots,
        "points": r.points,
        "max_sum_error": r.max_sum_error,
        "support_violations": r.support_violations,
        "face_residual": r.face_residual,
        "degeneracy_residual": r.degeneracy_residual,
        "collar_residual": r.collar_residual,
        "tolerance": tol,
        "pass": ok,
    });
    Ok(Report { text, json, ok })
}
