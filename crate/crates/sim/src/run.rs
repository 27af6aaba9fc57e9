//! Run orchestration for the four modes and the artifacts they leave behind.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use vxsim_core::beams::lg_peak;
use vxsim_core::diagnostics::{circulation, winding, Comparison, LoopSpec, Winding};
use vxsim_core::full::{MatterState, COMPONENTS};
use vxsim_core::outcoupling::{delay, delay_table, output_map_with_delay, EnvelopeHistory, OutputPhase};
use vxsim_core::scenario::{FlavorRun, FullRun, Setup};
use vxsim_core::{Complex64, ComplexField, Error};

use crate::config::{ConfigError, Mode, SimConfig};
use crate::report::Report;
use crate::vxf::write_vxf;

/// Relative norm drift allowed per thousand steps.
pub const NORM_DRIFT_PER_1000: f64 = 1e-8;
/// Relative mismatch allowed between the input and output particle flux.
pub const FLUX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Upper bound on worker threads; 1 runs everything on the caller.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// The configuration could not be turned into a valid setup.
    Setup(Error),
    /// A module failed while running.
    Module { module: &'static str, error: Error },
    Io { path: PathBuf, error: io::Error },
}

impl RunError {
    /// 2 for setup problems, 3 for numerical divergence, 4 for other
    /// module failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Setup(_) => 2,
            RunError::Module { error, .. } => match error {
                Error::Divergence { .. } | Error::Krylov { .. } | Error::CoreSingularity { .. } => 3,
                _ => 4,
            },
            RunError::Io { .. } => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config: {e}"),
            RunError::Setup(e) => write!(f, "setup: {e}"),
            RunError::Module { module, error } => write!(f, "{module}: {error}"),
            RunError::Io { path, error } => write!(f, "{}: {error}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

fn module(name: &'static str) -> impl Fn(Error) -> RunError {
    move |error| RunError::Module { module: name, error }
}

/// Result of a completed run. A run with failed invariants still completes
/// and writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub failures: Vec<String>,
    pub artifacts: Vec<String>,
    pub params_hash: String,
}

impl RunOutcome {
    /// 0 when every hard invariant held, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            4
        }
    }
}

/// SHA-256 of the serialized configuration with the output directory left out.
pub fn params_hash(config: &SimConfig) -> String {
    let mut c = config.clone();
    c.run.output_dir = PathBuf::new();
    hex::encode(Sha256::digest(c.to_text().as_bytes()))
}

struct Output {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|error| RunError::Io { path: dir.to_path_buf(), error })?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|error| RunError::Io { path, error })?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn field(&mut self, name: &str, field: &ComplexField) -> Result<(), RunError> {
        let mut buf = Vec::new();
        write_vxf(&mut buf, field).expect("writing to memory");
        self.write(name, &buf)
    }

    fn manifest(&mut self, params_hash: &str) -> Result<(), RunError> {
        let mut text = String::from("artifact,bytes,sha256,params_hash\n");
        for name in &self.artifacts {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|error| RunError::Io { path, error })?;
            text.push_str(&format!("{name},{},{},{params_hash}\n", bytes.len(), hex::encode(Sha256::digest(&bytes))));
        }
        let path = self.dir.join("manifest.csv");
        fs::write(&path, text).map_err(|error| RunError::Io { path, error })
    }
}

/// Writes `phi{alpha}_{step}.vxf` files and per-snapshot population rows from
/// inside the stepping loop, holding on to the first I/O error.
struct Snapshots {
    dir: PathBuf,
    every: u64,
    names: Vec<String>,
    rows: Vec<String>,
    error: Option<(PathBuf, io::Error)>,
}

impl Snapshots {
    fn new(dir: &Path, every: u64) -> Self {
        Self { dir: dir.to_path_buf(), every, names: Vec::new(), rows: Vec::new(), error: None }
    }

    fn row(&mut self, state: &MatterState) {
        let p = state.populations();
        self.rows.push(format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            state.steps,
            state.t,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            state.total_norm()
        ));
    }

    fn dump(&mut self, state: &MatterState) {
        for alpha in 0..COMPONENTS {
            let name = format!("phi{}_{}.vxf", alpha + 1, state.steps);
            let path = self.dir.join(&name);
            let mut buf = Vec::new();
            write_vxf(&mut buf, &state.phi[alpha]).expect("writing to memory");
            if let Err(e) = fs::write(&path, buf) {
                self.error.get_or_insert((path, e));
                return;
            }
            self.names.push(name);
        }
        self.row(state);
    }

    fn observe(&mut self, state: &MatterState) {
        if self.every > 0 && state.steps.is_multiple_of(self.every) {
            self.dump(state);
        }
    }

    fn finish(mut self, state: &MatterState, out: &mut Output) -> Result<(), RunError> {
        if self.every == 0 || !state.steps.is_multiple_of(self.every) {
            self.dump(state);
        }
        if let Some((path, error)) = self.error {
            return Err(RunError::Io { path, error });
        }
        out.artifacts.append(&mut self.names);
        let mut csv = String::from("step,t,p1,p2,p3,p4,p5,norm\n");
        for r in &self.rows {
            csv.push_str(r);
            csv.push('\n');
        }
        out.write("summary.csv", csv.as_bytes())
    }
}

fn join<A: Send, B: Send>(
    parallel: bool,
    fa: impl FnOnce() -> A + Send,
    fb: impl FnOnce() -> B + Send,
) -> (A, B) {
    if !parallel {
        return (fa(), fb());
    }
    thread::scope(|s| {
        let hb = s.spawn(fb);
        let a = fa();
        (a, hb.join().expect("worker thread panicked"))
    })
}

fn initial_state(setup: &Setup, config: &SimConfig) -> Result<MatterState, RunError> {
    let mut state = setup.initial_state().map_err(RunError::Setup)?;
    let noise = config.physics.noise;
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
        for v in state.phi[0].values_mut() {
            let d = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            *v *= Complex64::new(1.0, 0.0) + d * noise;
        }
    }
    Ok(state)
}

fn drift_limit(steps: u64) -> f64 {
    NORM_DRIFT_PER_1000 * (steps as f64 / 1000.0).max(1.0)
}

fn run_effective(setup: &Setup, parallel: bool) -> Result<FlavorRun, RunError> {
    let (a, b) = join(parallel, || setup.run_flavor(0), || setup.run_flavor(1));
    let ((pa, da), (pb, db)) = (a.map_err(module("effective"))?, b.map_err(module("effective"))?);
    Ok(FlavorRun { phi: [pa, pb], norm_drift: [da, db] })
}

fn dump_gauge(setup: &Setup, out: &mut Output) -> Result<(), RunError> {
    for (alpha, a) in setup.gauge.a.iter().enumerate() {
        out.field(&format!("gauge_a{}_x.vxf", alpha + 1), &a.x)?;
        out.field(&format!("gauge_a{}_y.vxf", alpha + 1), &a.y)?;
    }
    Ok(())
}

fn loop_observables(f: &ComplexField, lp: &LoopSpec) -> Result<(Winding, f64), RunError> {
    let w = winding(f, lp).map_err(module("diagnostics"))?;
    let c = circulation(f, lp).map_err(module("diagnostics"))?;
    Ok((w, c))
}

fn report_loop(report: &mut Report, prefix: &str, (w, c): (Winding, f64)) {
    report.push(format!("{prefix}.winding"), w.winding);
    report.push(format!("{prefix}.winding_residual"), w.residual);
    report.push(format!("{prefix}.circulation"), c);
}

fn report_comparison(report: &mut Report, prefix: &str, c: &Comparison) {
    report.push(format!("{prefix}.l2_relative"), c.l2_relative);
    report.push(format!("{prefix}.max_phase_difference"), c.max_phase_difference);
    report.push(format!("{prefix}.global_phase"), c.global_phase);
    report.push(format!("{prefix}.windings_agree"), c.windings_agree());
}

fn report_full(report: &mut Report, failures: &mut Vec<String>, full: &FullRun, steps: u64) {
    let r = &full.report;
    let pops = full.state.populations();
    report.push("full.t", full.state.t);
    report.push("full.steps", full.state.steps);
    for (alpha, p) in pops.iter().enumerate() {
        report.push(format!("full.population{}", alpha + 1), *p);
    }
    report.push("full.norm_drift", r.norm_drift);
    report.push("full.dark_state_error2", r.dark_state_error[0]);
    report.push("full.dark_state_error3", r.dark_state_error[1]);
    report.push("full.fidelity", r.fidelity);
    report.push("full.excited_fraction4", r.excited_fraction[0]);
    report.push("full.excited_fraction5", r.excited_fraction[1]);
    report.push("full.adiabaticity_warning", r.adiabaticity_warning);
    if r.adiabaticity_warning {
        log::warn!("loading fidelity {} is below the adiabaticity floor", r.fidelity);
    }
    let limit = drift_limit(steps);
    if !(r.norm_drift <= limit) {
        failures.push(format!("full evolution norm drift {:e} exceeds {limit:e}", r.norm_drift));
    }
}

fn report_effective(report: &mut Report, failures: &mut Vec<String>, eff: &FlavorRun, steps: u64) {
    let limit = drift_limit(steps);
    for (j, d) in eff.norm_drift.iter().enumerate() {
        report.push(format!("effective.flavor{}.norm_drift", j + 2), *d);
        if !(*d <= limit) {
            failures.push(format!("effective flavor {} norm drift {d:e} exceeds {limit:e}", j + 2));
        }
    }
}

fn windings_csv(rows: &[(usize, &str, Winding, f64)]) -> String {
    let mut csv = String::from("flavor,source,winding,residual,circulation\n");
    for (flavor, source, w, c) in rows {
        csv.push_str(&format!("{flavor},{source},{},{:?},{:?}\n", w.winding, w.residual, c));
    }
    csv
}

/// Runs `config.run.mode`, writing every artifact under `config.run.output_dir`.
pub fn run(config: &SimConfig, options: RunOptions) -> Result<RunOutcome, RunError> {
    config.validate().map_err(RunError::Config)?;
    let hash = params_hash(config);
    let mut out = Output::create(&config.run.output_dir)?;
    out.write("config.txt", config.to_text().as_bytes())?;
    let setup = config.scenario().build().map_err(RunError::Setup)?;
    let mut report = Report::new();
    let mut failures = Vec::new();
    report.push("mode", config.run.mode);
    report.push("params_hash", &hash);
    report.push("grid.nx", setup.grid.nx());
    report.push("grid.ny", setup.grid.ny());
    report.push("beams.max_ratio", setup.beams.max_ratio());
    report.push("beams.weak_probe_warning", setup.beams.weak_probe_warning());
    report.push("gauge.l", setup.l);
    report.push("loop.radius", setup.loop_spec.radius);
    report.push("loop.samples", setup.loop_spec.n_samples);
    let steps = config.steps();
    let parallel = options.threads > 1;
    log::info!("mode {} on {}x{}, {steps} steps", config.run.mode, setup.grid.nx(), setup.grid.ny());

    match config.run.mode {
        Mode::Full => {
            let state = initial_state(&setup, config)?;
            let mut snaps = Snapshots::new(&out.dir, config.run.snapshot_every);
            snaps.row(&state);
            let full = setup.run_full_from(state, |s| snaps.observe(s)).map_err(module("full_evolution"))?;
            snaps.finish(&full.state, &mut out)?;
            report_full(&mut report, &mut failures, &full, steps);
            let lp = setup.loop_spec;
            let rows = [(2, loop_observables(&full.state.phi[1], &lp)?), (3, loop_observables(&full.state.phi[2], &lp)?)];
            for (flavor, obs) in rows {
                report_loop(&mut report, &format!("full.flavor{flavor}"), obs);
            }
            let table: Vec<_> = rows.iter().map(|(f, (w, c))| (*f, "full", *w, *c)).collect();
            out.write("windings.csv", windings_csv(&table).as_bytes())?;
        }
        Mode::Effective => {
            let eff = run_effective(&setup, parallel)?;
            report.push("effective.t", config.duration());
            report_effective(&mut report, &mut failures, &eff, steps);
            let lp = setup.loop_spec;
            let mut table = Vec::new();
            for j in 0..2 {
                let obs = loop_observables(&eff.phi[j], &lp)?;
                report_loop(&mut report, &format!("effective.flavor{}", j + 2), obs);
                table.push((j + 2, "effective", obs.0, obs.1));
                out.field(&format!("flavor{}.vxf", j + 2), &eff.phi[j])?;
            }
            out.write("windings.csv", windings_csv(&table).as_bytes())?;
            dump_gauge(&setup, &mut out)?;
        }
        Mode::Compare => {
            let state = initial_state(&setup, config)?;
            let mut snaps = Snapshots::new(&out.dir, config.run.snapshot_every);
            snaps.row(&state);
            let (full, eff) = join(
                parallel,
                || setup.run_full_from(state, |s| snaps.observe(s)).map_err(module("full_evolution")),
                || run_effective(&setup, options.threads > 2),
            );
            let (full, eff) = (full?, eff?);
            snaps.finish(&full.state, &mut out)?;
            report_full(&mut report, &mut failures, &full, steps);
            report_effective(&mut report, &mut failures, &eff, steps);
            let cmp = setup.compare(&full, &eff).map_err(module("diagnostics"))?;
            report.push("compare.t", cmp.time);
            let mut table = Vec::new();
            for (j, f) in cmp.flavors.iter().enumerate() {
                let p = format!("compare.flavor{}", j + 2);
                report.push(format!("{p}.expected_winding"), f.expected_winding);
                report_loop(&mut report, &format!("{p}.full"), (f.full_winding, f.full_circulation));
                report_loop(&mut report, &format!("{p}.effective"), (f.effective_winding, f.effective_circulation));
                report.push(format!("{p}.analytic.winding"), f.analytic_winding.winding);
                report.push(format!("{p}.windings_ok"), f.windings_ok());
                report.push(format!("{p}.circulation_error"), f.circulation_error());
                report_comparison(&mut report, &format!("{p}.full_vs_analytic"), &f.full_vs_analytic);
                report_comparison(&mut report, &format!("{p}.effective_vs_analytic"), &f.effective_vs_analytic);
                report_comparison(&mut report, &format!("{p}.full_vs_effective"), &f.full_vs_effective);
                table.push((j + 2, "full", f.full_winding, f.full_circulation));
                table.push((j + 2, "effective", f.effective_winding, f.effective_circulation));
                out.field(&format!("flavor{}_effective.vxf", j + 2), &eff.phi[j])?;
            }
            out.write("windings.csv", windings_csv(&table).as_bytes())?;
            dump_gauge(&setup, &mut out)?;
        }
        Mode::Outcouple => outcouple(config, &setup, &mut report, &mut failures, &mut out)?,
    }

    report.push("failures", failures.len());
    for (k, f) in failures.iter().enumerate() {
        log::error!("{f}");
        report.push(format!("failure{}", k + 1), f);
    }
    out.write("report.txt", report.to_text().as_bytes())?;
    out.manifest(&hash)?;
    let mut artifacts = out.artifacts;
    artifacts.push("manifest.csv".to_string());
    Ok(RunOutcome { report, failures, artifacts, params_hash: hash })
}

fn outcouple(
    config: &SimConfig,
    setup: &Setup,
    report: &mut Report,
    failures: &mut Vec<String>,
    out: &mut Output,
) -> Result<(), RunError> {
    let params = config.outcoupling_params();
    let o = &config.outcouple;
    let grid = setup.grid.clone();
    let span = 6.0 * o.pulse_width;
    let frame_dt = span / (o.frames - 1) as f64;
    let pulse = |t: f64| (-0.5 * ((t - 0.5 * span) / o.pulse_width).powi(2)).exp();
    for j in 0..2 {
        let flavor = j + 2;
        let rows = delay_table(&params, j, o.rows).map_err(module("outcoupling"))?;
        let mut csv = String::from("z,group_velocity,tau\n");
        for r in &rows {
            csv.push_str(&format!("{:?},{:?},{:?}\n", r.z, r.group_velocity, r.tau));
        }
        out.write(&format!("delay_flavor{flavor}.csv"), csv.as_bytes())?;
        let tau = delay(&params, j).map_err(module("outcoupling"))?;
        report.push(format!("outcouple.flavor{flavor}.delay"), tau);
        let (lower, upper) = (params.length / params.c, params.length / params.v0);
        report.push(format!("outcouple.flavor{flavor}.delay_bounds_ok"), lower <= tau && tau <= upper);

        let profile = setup.beams.probe_amplitude(j).to_complex();
        let frames: Vec<ComplexField> = (0..o.frames).map(|k| profile.map(|v| v * pulse(k as f64 * frame_dt))).collect();
        let history = EnvelopeHistory::new(0.0, frame_dt, frames).map_err(module("outcoupling"))?;
        let phase = OutputPhase::from_analytic(&setup.analytic_phase(j));
        let times: Vec<f64> = (0..o.frames).map(|k| tau + k as f64 * frame_dt).collect();
        let output = output_map_with_delay(&history, &params, tau, &phase, &times).map_err(module("outcoupling"))?;

        let flux_in: f64 = history.frames.iter().map(|f| f.norm()).sum::<f64>() * params.c;
        let flux_out: f64 = output.iter().map(|f| f.norm()).sum::<f64>() * params.v0;
        let flux_error = if flux_in > 0.0 { (flux_out - flux_in).abs() / flux_in } else { 0.0 };
        report.push(format!("outcouple.flavor{flavor}.flux_relative_error"), flux_error);
        if !(flux_error <= FLUX_TOLERANCE) {
            failures.push(format!("out-coupled flux of flavor {flavor} off by {flux_error:e}"));
        }

        let probe = config.beams.probe[j];
        let (r_peak, _) = lg_peak(probe.l, probe.waist, 1.0);
        let radius = r_peak.max(4.0 * grid.dx().max(grid.dy()));
        let lp = LoopSpec::new(&grid, [0.0, 0.0], radius, config.run.loop_samples).map_err(module("diagnostics"))?;
        let peak_slice = &output[o.frames / 2];
        let w = winding(peak_slice, &lp).map_err(module("diagnostics"))?;
        report.push(format!("outcouple.flavor{flavor}.expected_winding"), phase.winding);
        report.push(format!("outcouple.flavor{flavor}.winding"), w.winding);
        for (k, f) in output.iter().enumerate() {
            out.field(&format!("output{flavor}_{k}.vxf"), f)?;
        }
    }
    Ok(())
}
