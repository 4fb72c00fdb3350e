mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{BREAKDOWN_DENSITY, BREAKDOWN_VELOCITY};

fn viscoflow(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viscoflow"));
    cmd.current_dir(dir).args(args).env_remove("VISCOFLOW_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn with_config(text: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), text).unwrap();
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"));
    line[key.len()..].trim().parse().unwrap()
}

fn breakdown_overrides(n_cells: usize) -> Vec<String> {
    vec![
        format!("profile.density={BREAKDOWN_DENSITY:?}"),
        format!("profile.velocity={BREAKDOWN_VELOCITY:?}"),
        "grid.x_max=2".into(),
        format!("grid.n_cells={n_cells}"),
        "tolerances.grad_factor=10".into(),
        "run.t_end=0.05".into(),
    ]
}

fn with_overrides<'a>(base: &[&'a str], overrides: &'a [String]) -> Vec<&'a str> {
    let mut args = base.to_vec();
    for o in overrides {
        args.push("--override");
        args.push(o);
    }
    args
}

#[test]
fn speeds_on_unit_equilibrium() {
    let dir = with_config("system = bulk\nA = 0.5\n");
    let out = viscoflow(dir.path(), &["speeds", "--config", "run.cfg"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("FOSH"));
    let rows: Vec<(f64, usize)> = text
        .lines()
        .skip_while(|l| !l.contains("multiplicity"))
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    let expected = [(-2f64.sqrt(), 1), (0.0, 3), (2f64.sqrt(), 1)];
    assert_eq!(rows.len(), 3);
    for ((s, m), (es, em)) in rows.iter().zip(expected) {
        assert!((s - es).abs() < 1e-12);
        assert_eq!(*m, em);
    }
}

#[test]
fn config_errors_exit_2() {
    let cases = [
        ("system = bulk\nfoo = 3\n", vec![], "foo"),
        ("system = bulk\ngamma = 1.0\n", vec![], "gamma"),
        ("system = shear\ngeometry = spherical\n", vec![], "geometry"),
        ("system = bulk\n", vec!["--override", "material.zeta=abc"], "zeta"),
        ("system = bulk\n", vec!["--override", "nokeyvalue"], "nokeyvalue"),
        ("system = bulk\n", vec!["--sweep", "3:1:10"], "sweep"),
        ("system = bulk\n", vec!["--override", "grid.x_max=1.5"], "grid.x_max"),
    ];
    for (text, extra, needle) in cases {
        let dir = with_config(text);
        let mut args = vec!["simulate", "--config", "run.cfg"];
        args.extend(extra.iter().copied());
        let out = viscoflow(dir.path(), &args, &[]);
        assert_eq!(code(&out), 2, "{text:?} {extra:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{needle} missing from {}", stderr(&out));
    }
    let dir = with_config("");
    assert_eq!(
        code(&viscoflow(dir.path(), &["speeds", "--config", "missing.cfg"], &[])),
        2
    );
    assert_eq!(
        code(&viscoflow(
            dir.path(),
            &["speeds", "--config", "run.cfg"],
            &[("VISCOFLOW_THREADS", "0")]
        )),
        2
    );
    assert_eq!(
        code(&viscoflow(dir.path(), &["frobnicate", "--config", "run.cfg"], &[])),
        2
    );
}

#[test]
fn certificate_for_breakdown_data() {
    let dir = with_config("system = bulk\n");
    let overrides = breakdown_overrides(256);
    let out = viscoflow(
        dir.path(),
        &with_overrides(&["blowup-cert", "--config", "run.cfg"], &overrides),
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!((field(&text, "c_v") - 3f64.sqrt()).abs() < 1e-15);
    let max_rho0 = field(&text, "max rho0");
    assert!((max_rho0 - 2.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-3);
    let threshold = field(&text, "threshold");
    let expected = 16.0 * std::f64::consts::PI / 3.0 * 3f64.sqrt() * max_rho0;
    assert!((threshold - expected).abs() < 1e-12 * expected);
    assert!(field(&text, "F0") > threshold);
    assert!(text.lines().any(|l| l.starts_with("satisfied") && l.ends_with("true")));
}

#[test]
fn breakdown_run_exits_3() {
    let dir = with_config("system = bulk\n");
    let overrides = breakdown_overrides(512);
    let args = with_overrides(&["simulate", "--config", "run.cfg", "--out", "out"], &overrides);
    let out = viscoflow(dir.path(), &args, &[]);
    assert_eq!(code(&out), 3, "{}\n{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    let tb = field(&text, "breakdown time");
    assert!(tb > 0.0 && tb < 0.05, "breakdown at {tb}");
    let record = std::fs::read_to_string(dir.path().join("out/run_record.txt")).unwrap();
    assert!(record.contains("# exit code: 3"));
}

#[test]
fn equilibrium_series_is_flat() {
    let dir = with_config("system = bulk\n[grid]\nn_cells = 128\n[run]\nt_end = 0.5\n");
    let out = viscoflow(dir.path(), &["simulate", "--config", "run.cfg", "--out", "out"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let t_col = header.iter().position(|h| *h == "t").unwrap();
    let mut rows = 0;
    for line in lines {
        for (i, cell) in line.split(',').enumerate() {
            let Ok(x) = cell.parse::<f64>() else { continue };
            if ["F", "dM", "G"].contains(&header[i]) {
                assert_eq!(x, 0.0, "{} = {x} at row {rows}", header[i]);
            }
            if i == t_col {
                assert!(x <= 0.5);
            }
        }
        rows += 1;
    }
    assert!(rows > 2);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = with_config(
        "system = bulk\ngeometry = planar\n[profile]\ndensity = 0.05\nvelocity = 0.05\nstress = 0.1\n\
         [grid]\nx_min = -4\nx_max = 4\nn_cells = 256\nlimiter = mc\n[run]\nt_end = 0.5\n",
    );
    let mut series = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = format!("out{threads}");
        let sim = viscoflow(
            dir.path(),
            &["simulate", "--config", "run.cfg", "--out", &out_dir],
            &[("VISCOFLOW_THREADS", threads)],
        );
        assert_eq!(code(&sim), 0, "{}", stderr(&sim));
        series.push(std::fs::read(dir.path().join(&out_dir).join("series.csv")).unwrap());
        let sweep = viscoflow(
            dir.path(),
            &["dispersion", "--config", "run.cfg", "--sweep", "0:5:200"],
            &[("VISCOFLOW_THREADS", threads)],
        );
        assert_eq!(code(&sweep), 0);
        series.push(sweep.stdout);
    }
    assert_eq!(series[0], series[2]);
    assert_eq!(series[1], series[3]);
}

#[test]
fn run_record_reproduces_the_run() {
    let dir = with_config(
        "system = shear\ngeometry = planar\n[profile]\ndensity = 0.05\ntransverse = 0.05\n\
         [grid]\nx_min = -4\nx_max = 4\nn_cells = 200\nlimiter = mc\n[run]\nt_end = 0.4\nsnapshot_times = 0.2\n",
    );
    let first = viscoflow(dir.path(), &["simulate", "--config", "run.cfg", "--out", "a"], &[]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let second = viscoflow(
        dir.path(),
        &["simulate", "--config", "a/run_record.txt", "--out", "b"],
        &[],
    );
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    for name in ["series.csv", "snapshot_000.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}
