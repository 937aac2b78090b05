use std::path::Path;
use std::process::{Command, Output};

use becvortex_cli::Artifact;
use becvortex_core::gp::Snapshot;
use becvortex_core::output::{from_json, parse_positions_csv, to_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_becvortex"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn becvortex")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_line(o: &Output) -> String {
    let e = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(e.trim_end().lines().count(), 1, "diagnostic must be one line: {e:?}");
    e
}

fn assert_round_trip(text: &str) -> Artifact {
    let a: Artifact = from_json(text).unwrap();
    assert_eq!(to_json(&a).unwrap(), text);
    a
}

#[test]
fn ladder_json_round_trips() {
    let o = run(&["ladder", "--s", "2", "--lambda", "1", "--epsilon", "0.01", "--n-max", "5"]);
    assert_eq!(o.status.code(), Some(0));
    match assert_round_trip(&stdout(&o)) {
        Artifact::Ladder(r) => {
            assert_eq!(r.ladder.omega_n.len(), 5);
            assert!((r.ladder.c1 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn every_light_command_round_trips() {
    let cases: &[&[&str]] = &[
        &["tf", "--s", "flat", "--lambda", "0.5", "--resolution", "64"],
        &["chi", "--s", "4", "--lambda", "0.8", "--x", "0.3", "--y", "-0.2", "--omega", "3", "--resolution", "128"],
        &["predict", "--epsilon", "0.05", "--omega", "7"],
        &["pattern", "--n", "4", "--omega", "40", "--lambda", "0.8", "--multistarts", "6", "--epsilon", "0.05"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert_round_trip(&stdout(&o));
    }
}

#[test]
fn pattern_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("p.json");
    let csv = dir.path().join("p.csv");
    let o = run(&[
        "pattern", "--n", "3", "--omega", "50", "--s", "2", "--lambda", "1",
        "--output", json.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let pts = parse_positions_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(pts.len(), 3);
    let Artifact::Pattern(p) = assert_round_trip(&std::fs::read_to_string(&json).unwrap()) else { panic!() };
    assert_eq!(p.result.points(), pts);
    assert!(p.result.converged);
}

#[test]
fn determinism_is_bytewise() {
    let args: &[&str] = &["pattern", "--n", "5", "--omega", "60", "--seed", "11", "--multistarts", "8"];
    let a = run(args);
    let b = run(args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let csv_args: &[&str] = &["pattern", "--n", "5", "--omega", "60", "--seed", "11", "--multistarts", "8", "--format", "csv"];
    assert_eq!(run(csv_args).stdout, run(csv_args).stdout);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# shared\nepsilon = 0.02\nn_max = 3\nlambda = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let Artifact::Ladder(from_file) = assert_round_trip(&stdout(&run(&["ladder", "--config", c]))) else { panic!() };
    assert_eq!(from_file.ladder.epsilon, 0.02);
    assert_eq!(from_file.ladder.omega_n.len(), 3);
    assert_eq!(from_file.lambda, 0.5);
    assert_eq!(from_file.ladder.delta, 0.1);
    let Artifact::Ladder(flagged) =
        assert_round_trip(&stdout(&run(&["ladder", "--config", c, "--n-max", "4", "--lambda", "1"])))
    else {
        panic!()
    };
    assert_eq!(flagged.ladder.omega_n.len(), 4);
    assert_eq!(flagged.lambda, 1.0);
    assert_eq!(flagged.ladder.epsilon, 0.02);

    std::fs::write(&cfg, "wobble = 3\n").unwrap();
    let o = run(&["ladder", "--config", c, "--epsilon", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_line(&o).contains("wobble"));
}

#[test]
fn errors_exit_one_with_single_line() {
    let cases: &[(&[&str], &str)] = &[
        (&["fly"], "fly"),
        (&["ladder", "--epsilon", "0.5"], "epsilon"),
        (&["ladder"], "--epsilon"),
        (&["tf", "--lambda", "1.5"], "lambda"),
        (&["tf", "--s", "banana"], "slope"),
        (&["pattern", "--n", "0", "--omega", "10"], "vortex count"),
        (&["pattern", "--n", "2", "--omega", "-1"], "omega"),
        (&["predict", "--epsilon", "0.05", "--omega", "1", "--format", "csv"], "csv"),
        (&["report"], "at least one input"),
        (&["gp-solve", "--epsilon", "0.1", "--omega", "1", "--nx", "16"], "coarse"),
    ];
    for (args, needle) in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let line = stderr_line(&o);
        assert!(line.contains(needle), "{args:?}: {line}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn unwritable_output_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing/sub/out.json");
    let o = run(&["ladder", "--epsilon", "0.01", "--output", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    stderr_line(&o);
    assert!(!target.exists());
}

#[test]
fn non_convergence_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = run(&[
        "pattern", "--n", "4", "--omega", "30", "--grad-tol", "1e-300", "--multistarts", "2",
        "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let Artifact::Pattern(p) = assert_round_trip(&std::fs::read_to_string(&out).unwrap()) else { panic!() };
    assert!(!p.result.converged);
}

fn write(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.push("--output");
    full.push(&p);
    let o = run(&full);
    assert!(o.status.code() == Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn gp_solve_report_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("field.bin");
    let common = ["--epsilon", "0.1", "--s", "2", "--lambda", "1", "--nx", "64"];
    let mut args = vec!["gp-solve", "--omega", "6", "--vortices", "0.3,0;-0.3,0"];
    args.extend(common);
    let s = snap.to_str().unwrap().to_string();
    args.extend(["--snapshot", s.as_str()]);
    let gp = write(dir.path(), "gp.json", &args);
    let Artifact::GpSolve(rec) = assert_round_trip(&std::fs::read_to_string(&gp).unwrap()) else { panic!() };
    let field = Snapshot::read(&snap).unwrap();
    assert_eq!((field.nx, field.ny), (rec.report.nx, rec.report.ny));
    assert_eq!(field.omega, 6.0);

    let pattern = write(dir.path(), "pat.json", &["pattern", "--n", "2", "--omega", "6", "--epsilon", "0.1"]);
    let ladder = write(dir.path(), "lad.json", &["ladder", "--epsilon", "0.1"]);
    let o = run(&["report", &gp, &pattern, &ladder]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::Report(table) = assert_round_trip(&stdout(&o)) else { panic!() };
    assert_eq!(table.counts.len(), 1);
    assert_eq!(table.counts[0].measured, rec.report.vortices.len());
    assert_eq!(table.positions.len(), 1);
    assert_eq!(table.positions[0].n_predicted, 2);
    assert_eq!(table.positions[0].mismatch.len(), 2);

    let other = write(dir.path(), "lad2.json", &["ladder", "--epsilon", "0.05"]);
    let o = run(&["report", &gp, &other]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_line(&o).contains("incompatible"));
}

#[test]
fn sweep_scan_joins_with_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write(
        dir.path(),
        "sweep.json",
        &["sweep", "--epsilon", "0.1", "--nx", "64", "--omega-min", "0", "--omega-max", "2", "--steps", "2"],
    );
    let Artifact::Sweep(rec) = assert_round_trip(&std::fs::read_to_string(&sweep).unwrap()) else { panic!() };
    assert_eq!(rec.points.len(), 2);
    assert!(rec.points.iter().all(|p| p.vortex_count == 0));
    let ladder = write(dir.path(), "lad.json", &["ladder", "--epsilon", "0.1"]);
    let o = run(&["report", &sweep, &ladder]);
    assert_eq!(o.status.code(), Some(0));
    let Artifact::Report(t) = assert_round_trip(&stdout(&o)) else { panic!() };
    assert_eq!(t.counts.len(), 2);
    assert!(t.counts.iter().all(|r| r.consistent));
}

#[test]
fn threads_variable_is_validated() {
    let o = bin().env("BECVORTEX_THREADS", "zero").args(["ladder", "--epsilon", "0.01"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_line(&o).contains("BECVORTEX_THREADS"));
    let o = bin().env("BECVORTEX_THREADS", "2").args(["ladder", "--epsilon", "0.01"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
