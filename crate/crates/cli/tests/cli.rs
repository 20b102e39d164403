use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mems_cli::output::to_json;
use mems_cli::{ModeResult, ScenarioConfig, Summary};
use mems_core::evolution::{EvolutionTrace, StepControls, TerminalStatus};
use mems_core::{Field, GridDomain, Shape};

fn mems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mems"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> (String, Summary) {
    let text = fs::read_to_string(dir.join("summary.json")).unwrap();
    let parsed: Summary = serde_json::from_str(&text).unwrap();
    (text, parsed)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bounds_summary_has_closed_form_energy_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mems(&["bounds", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, s) = summary(tmp.path());
    let ModeResult::Bounds(b) = s.result else {
        panic!("wrong mode")
    };
    let upper = b.bounds.upper_energy.value.unwrap();
    assert!((upper - std::f64::consts::PI.powi(2) / 3.0).abs() < 2e-3);
    assert_eq!(s.config.domain.nodes, 400);
}

#[test]
fn pullin_bracket_respects_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    fs::write(
        &cfg,
        "mode = pullin\ntol.bisection = 1e-3\ndomain.N = 200\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = mems(&["--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, s) = summary(&out);
    let ModeResult::Pullin(p) = s.result else {
        panic!("wrong mode")
    };
    assert!(p.estimate.lambda_hi - p.estimate.lambda_lo <= 1e-3 * p.estimate.lambda_hi);
    assert!((p.midpoint - 1.4).abs() < 0.01);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + p.estimate.trials.len());
}

#[test]
fn stationary_writes_one_row_per_node() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mems(&[
        "stationary",
        "--lambda",
        "1",
        "--grid-n",
        "123",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let field = fs::read_to_string(tmp.path().join("fields/v_lambda.csv")).unwrap();
    let mut lines = field.lines();
    assert_eq!(lines.next(), Some("coordinate,value"));
    assert_eq!(lines.count(), 123);
    let (_, s) = summary(tmp.path());
    let ModeResult::Stationary(r) = s.result else {
        panic!("wrong mode")
    };
    assert!(r.converged && r.max_v < 0.39);
    assert!(r.stability_eigenvalue.unwrap() > 0.0);
}

#[test]
fn summaries_round_trip_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["bounds"],
        vec!["stationary", "--lambda", "0.8"],
        vec!["evolve", "--lambda", "6"],
        vec!["picard", "--lambda", "1", "--grid-n", "100"],
    ] {
        let dir = tmp.path().join(args[0]);
        let mut full = args.clone();
        let d = out_arg(&dir);
        full.extend(["--out", d.as_str()]);
        let o = mems(&full);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let (text, parsed) = summary(&dir);
        assert_eq!(to_json(&parsed).unwrap(), text, "{args:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    fs::write(
        &cfg,
        "mode = evolve\nlambda = 6\noutput.dir = same\nu0.kind = eigenmode\nu0.value = 0.1\n",
    )
    .unwrap();
    let mut seen = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let o = mems(&["--config", cfg.to_str().unwrap(), "--out", &out_arg(&dir)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["trace.csv", "fields/u_final.csv"]
            .iter()
            .map(|f| fs::read(dir.join(f)).unwrap())
            .collect();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mems(&["bounds", "--grid-n", "50", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    let (text, _) = summary(tmp.path());
    assert!(text.contains("\"size\": 1.0000000000000000e0"));
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    fs::write(&cfg, "mode = stationary\nlambda = 0.3\ndomain.N = 50\n").unwrap();
    let o = mems(&[
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "0.6",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, s) = summary(tmp.path());
    assert_eq!(s.config.lambda, Some(0.6));
    assert_eq!(s.config.domain.nodes, 50);
}

#[test]
fn config_errors_name_the_key_and_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("mode = pullin\ndomain.shape = square\n", "domain.shape"),
        ("mode = pullin\ndomain.N = 2\n", "domain.N"),
        ("mode = pullin\nnonlinearity.p = -1\n", "nonlinearity.p"),
        ("mode = pullin\nforcing.widht = 1\n", "forcing.widht"),
        ("mode = stationary\n", "lambda"),
        ("mode = pullin\ndomain.size = abc\n", "domain.size"),
        ("mode = pullin\ndomain.N = 10\ndomain.N = 20\n", "domain.N"),
        ("mode = pullin\njust words\n", "line 2"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = tmp.path().join(format!("bad{i}.cfg"));
        fs::write(&cfg, text).unwrap();
        let out = tmp.path().join(format!("out{i}"));
        let o = mems(&["--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(key), "{key}: {}", stderr(&o));
        assert!(!out.join("summary.json").exists());
    }
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(mems(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mems(&["pullin", "--grid-n", "many"]).status.code(), Some(1));
    assert_eq!(mems(&[]).status.code(), Some(1));
    assert_eq!(mems(&["--help"]).status.code(), Some(0));
    assert_eq!(mems(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_config_file_is_reported() {
    let o = mems(&["--config", "/nonexistent/mems.cfg", "pullin"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/mems.cfg"));
}

#[test]
fn config_text_parses_every_key() {
    let cfg = ScenarioConfig::from_text(
        "mode = evolve\n\
         domain.shape = ball # comment\n\
         domain.size = 2\n\
         domain.n = 3\n\
         domain.N = 64\n\
         nonlinearity.kind = exp-gap\n\
         nonlinearity.p = 1\n\
         forcing.kind = polynomial\n\
         forcing.coeffs = 1, 0.5\n\
         forcing.center = 0\n\
         forcing.value = 1\n\
         forcing.amplitude = 1\n\
         forcing.width = 0.3\n\
         lambda = 0.2\n\
         u0.kind = constant\n\
         u0.value = 0.1\n\
         tol.iteration = 1e-9\n\
         tol.max_iter = 500\n\
         tol.bisection = 1e-3\n\
         evolve.t_end = 0.5\n\
         evolve.dt_max = 1e-3\n\
         evolve.sample_interval = 0\n\
         evolve.reference = minimal\n\
         picard.sweeps = 4\n\
         output.dir = \"x\"\n",
    )
    .unwrap();
    assert_eq!(cfg.forcing.coeffs, vec![1.0, 0.5]);
    assert_eq!(cfg.output.to_str(), Some("x"));
    cfg.validate().unwrap();
    let p = cfg.problem().unwrap();
    assert_eq!(p.grid().len(), 64);
}

#[test]
fn verify_all_failure_maps_to_exit_two() {
    let fine = mems_cli::scenario::VerifySummary {
        criteria: Vec::new(),
        all_passed: false,
    };
    let s = Summary {
        mode: mems_cli::Mode::VerifyAll,
        config: ScenarioConfig::default(),
        seedless: true,
        hypotheses: None,
        result: ModeResult::VerifyAll(fine),
    };
    assert!(s.failed_assertion());
}

#[test]
fn empty_trace_is_header_only() {
    let grid = GridDomain::build(Shape::Interval { length: 1.0 }, 10).unwrap();
    let trace = EvolutionTrace {
        samples: Vec::new(),
        status: TerminalStatus::Completed,
        final_field: Field::zeros(&grid),
        steps: 0,
        floor_steps: 0,
        controls: StepControls::for_grid(&grid),
    };
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "t,max_u,E,dist_to_ref,dt\n"
    );
}
