use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::Command;

use ngtorus::geometry::Graph;
use ngtorus_cli::config::{Engine, ExperimentConfig, InitSpec, Kind};
use ngtorus_cli::experiments::Report;
use ngtorus_cli::{replay, run_experiment, MANIFEST_NAME, OUTPUT_ROOT_ENV, PRESETS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ngtorus"))
}

fn small(kind: Kind, out: &Path) -> ExperimentConfig {
    let base = ExperimentConfig { kind, out: out.to_path_buf(), seed: 11, ..ExperimentConfig::default() };
    match kind {
        Kind::GenerateGraph => ExperimentConfig { n: 300, radius: 0.1, replicas: 2, ..base },
        Kind::RunMicro => ExperimentConfig { n: 1000, radius: 0.06, t_max: 4.0, snapshots: vec![2.0], replicas: 2, ..base },
        Kind::RunMeanfield => ExperimentConfig {
            grid: 32,
            radius: 0.2,
            t_max: 2.0,
            sample_every: 0.5,
            snapshots: vec![1.0],
            ..base
        },
        Kind::Correlation => ExperimentConfig {
            n: 2000,
            radius: 0.05,
            t_max: 6.0,
            snapshots: vec![2.0, 4.0, 6.0],
            n_samples: 20_000,
            replicas: 2,
            ..base
        },
        Kind::Boundary => ExperimentConfig {
            grid: 64,
            radius: 0.1,
            initializer: InitSpec::Disk { cx: 0.5, cy: 0.5, radius: 0.3 },
            t_max: 20.0,
            sample_every: 5.0,
            snapshots: vec![5.0, 10.0, 15.0, 20.0],
            ..base
        },
        Kind::Shrink => ExperimentConfig {
            grid: 64,
            radius: 0.1,
            dt: 0.1,
            initializer: InitSpec::Disk { cx: 0.5, cy: 0.5, radius: 0.25 },
            t_max: 120.0,
            degrees: vec![20.0],
            replicas: 2,
            ..base
        },
        Kind::CommittedSweep => ExperimentConfig {
            degrees: vec![15.0],
            sizes: vec![300, 600],
            q_values: vec![0.08, 0.12],
            replicas: 3,
            t_max: 2000.0,
            ..base
        },
        Kind::TerminalCensus => ExperimentConfig {
            engine: Engine::Meanfield,
            grid: 32,
            radius: 0.2,
            dt: 0.1,
            t_max: 40.0,
            sample_every: 5.0,
            replicas: 3,
            ..base
        },
    }
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn every_kind_runs_and_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let expected: [(Kind, &[&str]); 8] = [
        (Kind::GenerateGraph, &["graphs.csv", "graph_r1.txt"]),
        (Kind::RunMicro, &["r0/observables.csv", "r1/quasi_equilibrium.csv", "r1/spins_t2.txt"]),
        (Kind::RunMeanfield, &["r0/series.csv", "r0/snap_t1.pgm", "r0/field_t1.csv", "r0/final.csv"]),
        (Kind::Correlation, &["correlation.csv", "correlation_r1.csv", "collapse.csv"]),
        (Kind::Boundary, &["boundary.csv", "fit.csv", "domain_size.csv", "summary.csv"]),
        (Kind::Shrink, &["domain_size_meanfield.csv", "domain_size_k20.csv", "domain_size_k20_r1.csv", "shrink_fit.csv"]),
        (Kind::CommittedSweep, &["tc_N300_k15.csv", "tc_N600_k15.csv", "fit.csv", "welch.csv"]),
        (Kind::TerminalCensus, &["census.csv", "census_summary.csv"]),
    ];
    for (kind, files) in expected {
        let out = tmp.path().join(kind.name());
        let cfg = small(kind, &out);
        let outcome = run_experiment(&cfg).unwrap_or_else(|e| panic!("{}: {e:#}", kind.name()));
        for f in files {
            assert!(out.join(f).is_file(), "{}: missing {f}", kind.name());
        }
        let manifest = read(out.join(MANIFEST_NAME));
        let mut parsed = ExperimentConfig::parse(&manifest).unwrap();
        parsed.out = cfg.out.clone();
        assert_eq!(parsed, cfg, "{}: manifest does not parse back to the config", kind.name());
        assert_eq!(manifest.matches("# sha256 ").count(), outcome.artifacts.len());
        assert!(manifest.contains("(purpose << 48) | replica"));
    }
}

#[test]
fn csv_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = tmp.path().join("sweep");
    run_experiment(&small(Kind::CommittedSweep, &sweep)).unwrap();
    assert!(read(sweep.join("tc_N300_k15.csv")).starts_with("q,replica,t_c\n"));
    assert!(read(sweep.join("fit.csv")).starts_with("name,gamma,intercept,residual\n"));
    let shrink = tmp.path().join("shrink");
    run_experiment(&small(Kind::Shrink, &shrink)).unwrap();
    assert!(read(shrink.join("domain_size_meanfield.csv")).starts_with("t,S\n"));
    let corr = tmp.path().join("corr");
    run_experiment(&small(Kind::Correlation, &corr)).unwrap();
    assert!(read(corr.join("correlation.csv")).starts_with("t,L,C,count\n"));
    let boundary = tmp.path().join("boundary");
    run_experiment(&small(Kind::Boundary, &boundary)).unwrap();
    let text = read(boundary.join("boundary.csv"));
    assert!(text.starts_with("t,point_index,x,y,R,v\n"));
    assert!(text.lines().count() > 10);
}

#[test]
fn shrinking_disk_decays_linearly() {
    let tmp = tempfile::tempdir().unwrap();
    let Report::Shrink(rep) = run_experiment(&small(Kind::Shrink, &tmp.path().join("s"))).unwrap().report else {
        panic!("wrong report");
    };
    assert!(rep.meanfield_fit.fit.slope < 0.0);
    assert!(rep.meanfield_fit.fit.r_squared > 0.99, "{:?}", rep.meanfield_fit);
}

#[test]
fn replay_reproduces_every_byte() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in [Kind::RunMicro, Kind::RunMeanfield, Kind::CommittedSweep, Kind::Correlation] {
        let first = run_experiment(&small(kind, &tmp.path().join(kind.name()))).unwrap();
        let again = replay(&first.dir.join(MANIFEST_NAME), Some(tmp.path().join(format!("{}-again", kind.name()))))
            .unwrap_or_else(|e| panic!("{}: {e:#}", kind.name()));
        assert_eq!(first.artifacts, again.artifacts);
    }
}

#[test]
fn replay_detects_changed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run_experiment(&small(Kind::GenerateGraph, &tmp.path().join("g"))).unwrap();
    let manifest = first.dir.join(MANIFEST_NAME);
    let (name, sum) = &first.artifacts[0];
    let tampered = read(&manifest).replace(&format!("{sum} {name}"), &format!("{} {name}", "0".repeat(64)));
    let fake = tmp.path().join("tampered.txt");
    fs::write(&fake, tampered).unwrap();
    let err = replay(&fake, Some(tmp.path().join("g2"))).unwrap_err();
    assert!(format!("{err:#}").contains("checksum differs"), "{err:#}");
}

#[test]
fn replicas_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let few = ExperimentConfig { replicas: 2, ..small(Kind::RunMicro, &tmp.path().join("few")) };
    let many = ExperimentConfig { replicas: 4, ..small(Kind::RunMicro, &tmp.path().join("many")) };
    run_experiment(&few).unwrap();
    run_experiment(&many).unwrap();
    for k in 0..2 {
        let f = format!("r{k}/observables.csv");
        assert_eq!(read(few.out.join(&f)), read(many.out.join(&f)));
    }

    let few = small(Kind::CommittedSweep, &tmp.path().join("sweep-few"));
    let many = ExperimentConfig { replicas: 6, ..small(Kind::CommittedSweep, &tmp.path().join("sweep-many")) };
    let (Report::Sweep(a), Report::Sweep(b)) = (run_experiment(&few).unwrap().report, run_experiment(&many).unwrap().report) else {
        panic!("wrong report");
    };
    for row in &a.rows {
        assert!(b.rows.contains(row), "{row:?} changed when replicas were added");
    }
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("broken");
    let cfg = ExperimentConfig {
        restart: Some(tmp.path().join("missing.csv")),
        ..small(Kind::RunMeanfield, &out)
    };
    let err = run_experiment(&cfg).unwrap_err();
    assert!(format!("{err:#}").contains("missing.csv"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0, "staging directory left behind");
}

#[test]
fn occupied_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("taken");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    assert!(run_experiment(&small(Kind::GenerateGraph, &out)).is_err());
    assert_eq!(read(out.join("keep.txt")), "x");
}

#[test]
fn restart_continues_from_a_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run_experiment(&small(Kind::RunMeanfield, &tmp.path().join("a"))).unwrap();
    let cfg = ExperimentConfig {
        restart: Some(first.dir.join("r0/final.csv")),
        ..small(Kind::RunMeanfield, &tmp.path().join("b"))
    };
    let Report::Meanfield(runs) = run_experiment(&cfg).unwrap().report else {
        panic!("wrong report");
    };
    assert!((runs[0].t - 4.0).abs() < 1e-9, "t = {}", runs[0].t);
}

#[test]
fn binary_rejects_resolution_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mf");
    let res = bin()
        .args(["run-meanfield", "--grid", "100", "--radius", "0.01", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("`grid`") && err.contains("h <= r/5"), "{err}");
    assert!(!out.exists());
}

#[test]
fn binary_lists_presets_on_unknown_name() {
    let res = bin().args(["preset", "fig4"]).output().unwrap();
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    for p in PRESETS {
        assert!(err.contains(p), "{err}");
    }
    let res = bin().args(["preset", "fig8-shrink"]).output().unwrap();
    assert!(res.status.success());
    let cfg = ExperimentConfig::parse(&String::from_utf8_lossy(&res.stdout)).unwrap();
    assert_eq!(cfg.kind, Kind::Shrink);
    assert_eq!(cfg.degrees, [78.5, 157.0]);
}

#[test]
fn binary_flags_and_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let res = bin()
        .env(OUTPUT_ROOT_ENV, tmp.path())
        .args(["generate-graph", "--n", "250", "--radius", "0.1", "--replicas", "2", "--seed", "4", "--out", "graphs"])
        .args(["--set", "pair_selection=edge"])
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = tmp.path().join("graphs");
    let g = Graph::read_text(BufReader::new(fs::File::open(dir.join("graph_r1.txt")).unwrap())).unwrap();
    assert_eq!((g.n(), g.radius()), (250, 0.1));
    let cfg = ExperimentConfig::parse(&read(dir.join(MANIFEST_NAME))).unwrap();
    assert_eq!((cfg.seed, cfg.replicas), (4, 2));

    let res = bin().arg("replay").arg(dir.join(MANIFEST_NAME)).arg("--out").arg(tmp.path().join("again")).output().unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn binary_runs_config_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(Kind::TerminalCensus, &tmp.path().join("census"));
    let path = tmp.path().join("census.cfg");
    fs::write(&path, format!("# census smoke test\n{}", cfg.to_text())).unwrap();
    let res = bin().arg("run").arg(&path).args(["--replicas", "2"]).output().unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(read(tmp.path().join("census/census.csv")).lines().count(), 3);
    let res = bin().args(["run-micro", "--set", "bogus=1"]).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("bogus"));
}
