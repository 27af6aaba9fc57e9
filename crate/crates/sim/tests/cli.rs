use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vxsim::vxf::read_vxf;

const SMALL: &str = "grid.nx = 32\ngrid.ny = 32\nrun.n_steps = 20\n";

fn sim(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("sim.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), "grid.nx = 100\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1") && stderr(&o).contains("grid.nx"), "{}", stderr(&o));
    let o = sim(dir.path(), "run.mode = quantum\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown mode"));
    let o = sim(dir.path(), "bogus.key = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sim")).arg("--config").arg(dir.path().join("none.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn large_dt_is_refused_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    // 32 points over 32: dx = 1, advisory 1/pi
    let cfg = format!("{SMALL}run.mode = full\nrun.dt = 0.5\n");
    let o = sim(dir.path(), &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("run.dt") && err.contains("advisory") && err.contains("0.318310"), "{err}");
    let o = sim(dir.path(), &cfg, &["--override-dt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn mode_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), &format!("{SMALL}run.mode = compare\n"), &["--mode", "outcouple"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("mode = outcouple"));
    let o = sim(dir.path(), SMALL, &["--mode", "quantum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // the squared trap frequency overflows, so the first local step is not finite
    let o = sim(dir.path(), &format!("{SMALL}run.mode = full\nphysics.trap_omega = 1e160\n"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("full_evolution:"));
}

#[test]
fn norm_violation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), &format!("{SMALL}run.mode = full\nrun.strict_paper = true\n"), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("norm drift"));
    // the artifacts are still written
    assert!(dir.path().join("out/report.txt").exists());
}

#[test]
fn full_mode_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), &format!("{SMALL}run.mode = full\nrun.snapshot_every = 8\n"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for step in [8, 16, 20] {
        for alpha in 1..=5 {
            let f = read_vxf(fs::File::open(out.join(format!("phi{alpha}_{step}.vxf"))).unwrap()).unwrap();
            assert_eq!((f.grid().nx(), f.grid().ny()), (32, 32));
        }
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<_> = summary.lines().collect();
    assert_eq!(lines[0], "step,t,p1,p2,p3,p4,p5,norm");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,") && lines[4].starts_with("20,"));

    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let hash = report.lines().find_map(|l| l.strip_prefix("params_hash = ")).unwrap();
    let mut listed = Vec::new();
    for line in manifest.lines().skip(1) {
        let cols: Vec<_> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[3], hash);
        let bytes = fs::read(out.join(cols[0])).unwrap();
        assert_eq!(cols[1].parse::<usize>().unwrap(), bytes.len());
        listed.push(cols[0].to_string());
    }
    let mut on_disk: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.csv")
        .collect();
    on_disk.sort();
    listed.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn identical_seed_gives_identical_dumps() {
    let cfg = format!("{SMALL}run.mode = full\nphysics.noise = 0.2\nrun.seed = 11\n");
    let read = |dir: &Path, name: &str| fs::read(dir.join("out").join(name)).unwrap();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(sim(a.path(), &cfg, &[]).status.code(), Some(0));
    assert_eq!(sim(b.path(), &cfg, &[]).status.code(), Some(0));
    assert_eq!(sim(c.path(), &cfg.replace("run.seed = 11", "run.seed = 12"), &[]).status.code(), Some(0));
    for alpha in 1..=5 {
        let name = format!("phi{alpha}_20.vxf");
        assert_eq!(read(a.path(), &name), read(b.path(), &name));
    }
    assert_ne!(read(a.path(), "phi1_20.vxf"), read(c.path(), "phi1_20.vxf"));
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = format!("{SMALL}run.mode = compare\n");
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.cfg");
        fs::write(&path, &cfg).unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_sim"))
            .args(["--config", path.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()])
            .env("VXSIM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            fs::read(dir.path().join("out/phi2_20.vxf")).unwrap(),
            fs::read(dir.path().join("out/flavor3_effective.vxf")).unwrap(),
        )
    };
    assert_eq!(run("1"), run("4"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.cfg");
    fs::write(&path, &cfg).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(["--config", path.to_str().unwrap()])
        .env("VXSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outcouple_mode_writes_delay_tables_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), "grid.nx = 64\ngrid.ny = 64\nrun.mode = outcouple\noutcouple.frames = 5\noutcouple.rows = 10\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for flavor in [2, 3] {
        let table = fs::read_to_string(out.join(format!("delay_flavor{flavor}.csv"))).unwrap();
        let rows: Vec<Vec<f64>> =
            table.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0], vec![0.0, rows[0][1], 0.0]);
        assert!(rows.windows(2).all(|w| w[1][2] > w[0][2] && w[1][1] <= w[0][1]));
        for k in 0..5 {
            assert!(out.join(format!("output{flavor}_{k}.vxf")).exists());
        }
    }
    let text = stdout(&o);
    assert!(text.contains("outcouple.flavor2.winding = 1"));
    assert!(text.contains("outcouple.flavor3.winding = -1"));
    assert!(text.contains("outcouple.flavor2.delay_bounds_ok = true"));
}

#[test]
fn default_compare_reports_opposite_windings() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(dir.path(), "", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for (flavor, w) in [(2, 1), (3, -1)] {
        for source in ["full", "effective", "analytic"] {
            let line = format!("compare.flavor{flavor}.{source}.winding = {w}\n");
            assert!(text.contains(&line), "missing {line}");
        }
    }
    let csv = fs::read_to_string(dir.path().join("out/windings.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("flavor,source,winding,residual,circulation"));
    assert_eq!(csv.lines().count(), 5);
    for axis in ["x", "y"] {
        let a2 = read_vxf(fs::File::open(dir.path().join(format!("out/gauge_a2_{axis}.vxf"))).unwrap()).unwrap();
        assert_eq!(a2.grid().nx(), 128);
    }
}
