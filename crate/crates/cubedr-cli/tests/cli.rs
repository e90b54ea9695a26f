use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cubedr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubedr")).args(args).output().expect("run cubedr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn betti_tables() {
    let o = cubedr(&["cohomology", "@point"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "b: 1\n"));
    let o = cubedr(&["cohomology", "@torus"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "b: 1 2 1\n"));
    let o = cubedr(&["cohomology", "@sphere", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["betti"], serde_json::json!([1, 0, 1]));
}

#[test]
fn bad_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = cubedr(&["cohomology", &write(dir.path(), "a.model", "[0,2]\n")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let bent = "[0,1]x[0,1]\nidentify [0,0]x[0,1] -> [1,1]x[0,1] via [[1,0],[0,2]]; (1,0)\n";
    assert_eq!(code(&cubedr(&["cohomology", &write(dir.path(), "b.model", bent)])), 3);
    assert_eq!(code(&cubedr(&["cohomology", "no/such/file.model"])), 2);
    assert_eq!(code(&cubedr(&["cohomology", "@klein"])), 2);
}

#[test]
fn mayer_vietoris() {
    let o = cubedr(&["mv", "@sphere", "@sphere"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("assembled: 1 0 1\n"));
    assert!(stdout(&o).contains("exact: yes"));

    let dir = tempfile::tempdir().unwrap();
    let whole = write(dir.path(), "w.cover", "cover A = cells([0,1], [1,2])\ncover B = cells([1,2])\n");
    let o = cubedr(&["mv", "@circle", &whole]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("assembled: 1 1\n"));
    let part = write(dir.path(), "p.cover", "cover A = cells([0,1])\ncover B = cells([0,1])\n");
    assert_eq!(code(&cubedr(&["mv", "@circle", &part])), 4);
    assert_eq!(code(&cubedr(&["mv", "@interval", "@interval"])), 4);

    let o = cubedr(&["mv", "@torus", "@torus", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["assembled"], v["direct"]);
    assert_eq!(v["exact"], true);
}

#[test]
fn verify_suites_pass() {
    for args in [
        vec!["verify", "relations", "--seed", "1"],
        vec!["verify", "forms", "--seed", "7", "--cases", "200"],
        vec!["verify", "hurewicz", "--cases", "10"],
        vec!["verify", "excision", "--cases", "5"],
    ] {
        let o = cubedr(&args);
        assert_eq!(code(&o), 0, "{args:?}\n{}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
    let o = cubedr(&["verify", "pou", "--cases", "10"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("max sum deviation: "));
}

#[test]
fn verify_reports_mesh_deviations() {
    let o = cubedr(&["verify", "cubes", "--cases", "4"]);
    let out = stdout(&o);
    assert_eq!(code(&o), 1);
    let failing: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1, "{out}");
    assert!(failing[0].contains("square-offset 0.7071 > 0.6667"));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "forms", "--seed", "3", "--cases", "15", "--json"];
    let (a, b) = (cubedr(&args), cubedr(&args));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&cubedr(&["verify", "everything"])), 2);
}

#[test]
fn subdivision() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "i.model", "[0,1]\n");
    let plot = write(dir.path(), "i.plot", "plot 1 : (x1)\n");
    let cover = write(dir.path(), "i.cover", "cover A = ball((-1), 8/5)\ncover B = ball((2), 8/5)\n");
    let o = cubedr(&["subdivide", &model, &plot, &cover]);
    let out = stdout(&o);
    assert_eq!(code(&o), 0);
    assert!(out.contains("# iterations: 1\n"));
    assert!(out.contains("against n/(n+1) = 0.500000\n"), "{out}");

    // the result is subordinate, so a second run leaves it alone
    let first = write(dir.path(), "first.cx", &out);
    let o = cubedr(&["subdivide", &model, &plot, &cover, "--complex", &first]);
    let again = stdout(&o);
    assert!(again.contains("# iterations: 0\n"));
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&again), body(&out));

    assert_eq!(code(&cubedr(&["subdivide", &model, &plot, &cover, "--iters", "0"])), 5);
    let one = write(dir.path(), "one.cover", "cover A = ball((0), 1/4)\n");
    assert_eq!(code(&cubedr(&["subdivide", &model, &plot, &one])), 4);

    let o = cubedr(&["subdivide", "@interval-offset", "@interval-offset", "@interval-offset"]);
    assert!(stdout(&o).contains("# ratio: 0.500000 against n/(n+1) = 0.500000\n"));
}

#[test]
fn integration() {
    let one = |args: &[&str]| {
        let o = cubedr(args);
        (code(&o), stdout(&o))
    };
    let base = ["integrate", "@circle", "@circle", "--model", "@circle"];
    let with = |extra: &[&'static str]| base.iter().copied().chain(extra.iter().copied()).collect::<Vec<_>>();
    assert_eq!(one(&with(&["--form", "g"])), (0, "1\n".into()));
    assert_eq!(one(&with(&["--form", "exact"])), (0, "0\n".into()));
    assert_eq!(one(&with(&["--form", "g", "--reverse"])), (0, "-1\n".into()));
    assert_eq!(one(&with(&["--form", "missing"])).0, 3);
    assert_eq!(one(&["integrate", "@sphere", "@circle", "--model", "@circle"]).0, 3);
    let (c, out) = one(&["integrate", "@torus", "@torus", "--model", "@torus"]);
    assert_eq!(c, 0);
    assert!(out.contains("alpha  a  1\n") && out.contains("beta   a  0\n"), "{out}");
}

#[test]
fn partition_of_unity() {
    let o = cubedr(&["pou", "@circle", "@circle", "@circle"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("support violations: 0\n"));
    // an impossible tolerance turns every residual into a failure
    assert_eq!(code(&cubedr(&["pou", "@circle", "@circle", "@circle", "--tolerance=-1"])), 1);
    assert_eq!(code(&cubedr(&["pou", "@point", "@circle", "@circle"])), 3);
    assert_eq!(code(&cubedr(&["pou", "@point", "@point", "@point"])), 2);
}
