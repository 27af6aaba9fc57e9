//! Flat `key = value` run configuration.
//!
//! Keys carry a dotted section prefix (`grid.nx = 128`). Blank lines and
//! anything after `#` are ignored. Every key is optional; unknown keys,
//! repeated keys and malformed values are errors reported with their line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use vxsim_core::beams::{BeamProfile, Detunings};
use vxsim_core::outcoupling::OutcouplingParams;
use vxsim_core::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Effective,
    Compare,
    Outcouple,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Full, Mode::Effective, Mode::Compare, Mode::Outcouple];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Effective => "effective",
            Mode::Compare => "compare",
            Mode::Outcouple => "outcouple",
        }
    }

    /// Whether the mode time-steps fields on the grid.
    pub fn evolves(self) -> bool {
        !matches!(self, Mode::Outcouple)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`; expected one of full, effective, compare, outcouple"))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub peak: f64,
    pub waist: f64,
    pub l: i32,
    pub kx: f64,
    pub ky: f64,
}

impl BeamConfig {
    fn profile(&self) -> BeamProfile {
        BeamProfile { peak: self.peak, waist: self.waist, l: self.l, k: [self.kx, self.ky] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamsConfig {
    pub probe: [BeamConfig; 2],
    pub control: [BeamConfig; 2],
    /// Rescale the probe peaks so that `max |xi_j|` equals this; `None` keeps them.
    pub xi_max: Option<f64>,
    pub eps12: f64,
    pub eps13: f64,
    pub eps14: f64,
    pub eps15: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    pub u: f64,
    pub rho0: f64,
    pub tf_radius: f64,
    pub rim_width: f64,
    /// Harmonic trap frequency on level 1; `None` balances the mean field.
    pub trap_omega: Option<f64>,
    /// Relative amplitude of the seeded perturbation of the initial state.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub dt: f64,
    /// `None` runs for `ramp_time / dt` steps.
    pub n_steps: Option<u64>,
    pub ramp_time: f64,
    /// Snapshot cadence in steps; 0 writes only the final state.
    pub snapshot_every: u64,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub override_dt: bool,
    pub strict_paper: bool,
    /// `None` places the loop at the probe-ratio maximum.
    pub loop_radius: Option<f64>,
    pub loop_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcoupleConfig {
    pub g1: f64,
    pub g2: f64,
    pub omega0_1: f64,
    pub omega0_2: f64,
    pub n: f64,
    pub v0: f64,
    pub c: f64,
    pub length: f64,
    /// Temporal width of the Gaussian probe pulse entering at `z = 0`.
    pub pulse_width: f64,
    /// Recorded envelope frames and emitted output slices.
    pub frames: usize,
    /// Intervals of each delay table; the table has `rows + 1` lines.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub beams: BeamsConfig,
    pub physics: PhysicsConfig,
    pub run: RunConfig,
    pub outcouple: OutcoupleConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        let s = Scenario::standard(1);
        let beam = |p: BeamProfile| BeamConfig { peak: p.peak, waist: p.waist, l: p.l, kx: p.k[0], ky: p.k[1] };
        Self {
            grid: GridConfig { nx: s.nx, ny: s.ny, lx: s.lx, ly: s.ly },
            beams: BeamsConfig {
                probe: [beam(s.probes[0]), beam(s.probes[1])],
                control: [beam(s.controls[0]), beam(s.controls[1])],
                xi_max: s.xi_max,
                eps12: s.detunings.eps12,
                eps13: s.detunings.eps13,
                eps14: s.detunings.eps14,
                eps15: s.detunings.eps15,
            },
            physics: PhysicsConfig {
                u: s.u,
                rho0: s.rho0,
                tf_radius: s.tf_radius,
                rim_width: s.rim_width,
                trap_omega: s.trap_omega,
                noise: 0.0,
            },
            run: RunConfig {
                mode: Mode::Compare,
                dt: s.dt,
                n_steps: s.n_steps,
                ramp_time: s.ramp_time,
                snapshot_every: 0,
                output_dir: PathBuf::from("out"),
                seed: 0,
                override_dt: false,
                strict_paper: s.strict_paper,
                loop_radius: s.loop_radius,
                loop_samples: s.loop_samples,
            },
            outcouple: OutcoupleConfig {
                g1: 1.0,
                g2: 1.0,
                omega0_1: 1.0,
                omega0_2: 1.0,
                n: 100.0,
                v0: 0.01,
                c: 1.0,
                length: 1.0,
                pulse_width: 2.0,
                frames: 8,
                rows: 33,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax(String),
    UnknownKey(String),
    DuplicateKey { key: String, first: usize },
    TypeMismatch { key: String, expected: &'static str, value: String },
    Invalid { key: String, reason: String },
}

/// A configuration problem, with the 1-based line of the offending key when
/// the key came from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        match &self.kind {
            ConfigErrorKind::Syntax(msg) => write!(f, "{msg}"),
            ConfigErrorKind::UnknownKey(key) => write!(f, "unknown key `{key}`"),
            ConfigErrorKind::DuplicateKey { key, first } => write!(f, "`{key}` already set on line {first}"),
            ConfigErrorKind::TypeMismatch { key, expected, value } => {
                write!(f, "`{key}` expects {expected}, got `{value}`")
            }
            ConfigErrorKind::Invalid { key, reason } => write!(f, "`{key}` {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "beams.probe1.peak",
    "beams.probe1.waist",
    "beams.probe1.l",
    "beams.probe1.kx",
    "beams.probe1.ky",
    "beams.probe2.peak",
    "beams.probe2.waist",
    "beams.probe2.l",
    "beams.probe2.kx",
    "beams.probe2.ky",
    "beams.control1.peak",
    "beams.control1.waist",
    "beams.control1.l",
    "beams.control1.kx",
    "beams.control1.ky",
    "beams.control2.peak",
    "beams.control2.waist",
    "beams.control2.l",
    "beams.control2.kx",
    "beams.control2.ky",
    "beams.xi_max",
    "beams.eps12",
    "beams.eps13",
    "beams.eps14",
    "beams.eps15",
    "physics.u",
    "physics.rho0",
    "physics.tf_radius",
    "physics.rim_width",
    "physics.trap_omega",
    "physics.noise",
    "run.mode",
    "run.dt",
    "run.n_steps",
    "run.ramp_time",
    "run.snapshot_every",
    "run.output_dir",
    "run.seed",
    "run.override_dt",
    "run.strict_paper",
    "run.loop_radius",
    "run.loop_samples",
    "outcouple.g1",
    "outcouple.g2",
    "outcouple.omega0_1",
    "outcouple.omega0_2",
    "outcouple.n",
    "outcouple.v0",
    "outcouple.c",
    "outcouple.length",
    "outcouple.pulse_width",
    "outcouple.frames",
    "outcouple.rows",
];

const AUTO: &str = "auto";

fn mismatch(key: &str, expected: &'static str, value: &str) -> ConfigErrorKind {
    ConfigErrorKind::TypeMismatch { key: key.to_string(), expected, value: value.to_string() }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigErrorKind> {
    v.parse::<f64>().map_err(|_| mismatch(key, "a number", v))
}

fn parse_opt_f64(key: &str, v: &str) -> Result<Option<f64>, ConfigErrorKind> {
    if v == AUTO {
        return Ok(None);
    }
    v.parse::<f64>().map(Some).map_err(|_| mismatch(key, "a number or `auto`", v))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigErrorKind> {
    v.parse::<usize>().map_err(|_| mismatch(key, "a nonnegative integer", v))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigErrorKind> {
    v.parse::<u64>().map_err(|_| mismatch(key, "a nonnegative integer", v))
}

fn parse_opt_u64(key: &str, v: &str) -> Result<Option<u64>, ConfigErrorKind> {
    if v == AUTO {
        return Ok(None);
    }
    v.parse::<u64>().map(Some).map_err(|_| mismatch(key, "a nonnegative integer or `auto`", v))
}

fn parse_i32(key: &str, v: &str) -> Result<i32, ConfigErrorKind> {
    v.parse::<i32>().map_err(|_| mismatch(key, "an integer", v))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigErrorKind> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(mismatch(key, "`true` or `false`", v)),
    }
}

fn fmt_f64(v: f64) -> String {
    // Debug output is the shortest string that parses back to the same value
    format!("{v:?}")
}

fn fmt_opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| AUTO.to_string(), f)
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

impl SimConfig {
    fn beam_mut(&mut self, section: &str) -> Option<&mut BeamConfig> {
        match section {
            "probe1" => Some(&mut self.beams.probe[0]),
            "probe2" => Some(&mut self.beams.probe[1]),
            "control1" => Some(&mut self.beams.control[0]),
            "control2" => Some(&mut self.beams.control[1]),
            _ => None,
        }
    }

    fn beam(&self, section: &str) -> Option<&BeamConfig> {
        match section {
            "probe1" => Some(&self.beams.probe[0]),
            "probe2" => Some(&self.beams.probe[1]),
            "control1" => Some(&self.beams.control[0]),
            "control2" => Some(&self.beams.control[1]),
            _ => None,
        }
    }

    /// Assigns one key from its textual value without validating invariants.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrorKind> {
        let v = value;
        if let Some(rest) = key.strip_prefix("beams.") {
            if let Some((section, field)) = rest.split_once('.') {
                let beam = self.beam_mut(section).ok_or_else(|| ConfigErrorKind::UnknownKey(key.to_string()))?;
                match field {
                    "peak" => beam.peak = parse_f64(key, v)?,
                    "waist" => beam.waist = parse_f64(key, v)?,
                    "l" => beam.l = parse_i32(key, v)?,
                    "kx" => beam.kx = parse_f64(key, v)?,
                    "ky" => beam.ky = parse_f64(key, v)?,
                    _ => return Err(ConfigErrorKind::UnknownKey(key.to_string())),
                }
                return Ok(());
            }
        }
        match key {
            "grid.nx" => self.grid.nx = parse_usize(key, v)?,
            "grid.ny" => self.grid.ny = parse_usize(key, v)?,
            "grid.lx" => self.grid.lx = parse_f64(key, v)?,
            "grid.ly" => self.grid.ly = parse_f64(key, v)?,
            "beams.xi_max" => self.beams.xi_max = parse_opt_f64(key, v)?,
            "beams.eps12" => self.beams.eps12 = parse_f64(key, v)?,
            "beams.eps13" => self.beams.eps13 = parse_f64(key, v)?,
            "beams.eps14" => self.beams.eps14 = parse_f64(key, v)?,
            "beams.eps15" => self.beams.eps15 = parse_f64(key, v)?,
            "physics.u" => self.physics.u = parse_f64(key, v)?,
            "physics.rho0" => self.physics.rho0 = parse_f64(key, v)?,
            "physics.tf_radius" => self.physics.tf_radius = parse_f64(key, v)?,
            "physics.rim_width" => self.physics.rim_width = parse_f64(key, v)?,
            "physics.trap_omega" => self.physics.trap_omega = parse_opt_f64(key, v)?,
            "physics.noise" => self.physics.noise = parse_f64(key, v)?,
            "run.mode" => {
                self.run.mode =
                    v.parse().map_err(|reason| ConfigErrorKind::Invalid { key: key.to_string(), reason })?
            }
            "run.dt" => self.run.dt = parse_f64(key, v)?,
            "run.n_steps" => self.run.n_steps = parse_opt_u64(key, v)?,
            "run.ramp_time" => self.run.ramp_time = parse_f64(key, v)?,
            "run.snapshot_every" => self.run.snapshot_every = parse_u64(key, v)?,
            "run.output_dir" => self.run.output_dir = PathBuf::from(unquote(v)),
            "run.seed" => self.run.seed = parse_u64(key, v)?,
            "run.override_dt" => self.run.override_dt = parse_bool(key, v)?,
            "run.strict_paper" => self.run.strict_paper = parse_bool(key, v)?,
            "run.loop_radius" => self.run.loop_radius = parse_opt_f64(key, v)?,
            "run.loop_samples" => self.run.loop_samples = parse_usize(key, v)?,
            "outcouple.g1" => self.outcouple.g1 = parse_f64(key, v)?,
            "outcouple.g2" => self.outcouple.g2 = parse_f64(key, v)?,
            "outcouple.omega0_1" => self.outcouple.omega0_1 = parse_f64(key, v)?,
            "outcouple.omega0_2" => self.outcouple.omega0_2 = parse_f64(key, v)?,
            "outcouple.n" => self.outcouple.n = parse_f64(key, v)?,
            "outcouple.v0" => self.outcouple.v0 = parse_f64(key, v)?,
            "outcouple.c" => self.outcouple.c = parse_f64(key, v)?,
            "outcouple.length" => self.outcouple.length = parse_f64(key, v)?,
            "outcouple.pulse_width" => self.outcouple.pulse_width = parse_f64(key, v)?,
            "outcouple.frames" => self.outcouple.frames = parse_usize(key, v)?,
            "outcouple.rows" => self.outcouple.rows = parse_usize(key, v)?,
            _ => return Err(ConfigErrorKind::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// The textual value of `key`, in the form [`SimConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        if let Some(rest) = key.strip_prefix("beams.") {
            if let Some((section, field)) = rest.split_once('.') {
                let b = self.beam(section)?;
                return match field {
                    "peak" => Some(fmt_f64(b.peak)),
                    "waist" => Some(fmt_f64(b.waist)),
                    "l" => Some(b.l.to_string()),
                    "kx" => Some(fmt_f64(b.kx)),
                    "ky" => Some(fmt_f64(b.ky)),
                    _ => None,
                };
            }
        }
        Some(match key {
            "grid.nx" => self.grid.nx.to_string(),
            "grid.ny" => self.grid.ny.to_string(),
            "grid.lx" => fmt_f64(self.grid.lx),
            "grid.ly" => fmt_f64(self.grid.ly),
            "beams.xi_max" => fmt_opt(self.beams.xi_max, fmt_f64),
            "beams.eps12" => fmt_f64(self.beams.eps12),
            "beams.eps13" => fmt_f64(self.beams.eps13),
            "beams.eps14" => fmt_f64(self.beams.eps14),
            "beams.eps15" => fmt_f64(self.beams.eps15),
            "physics.u" => fmt_f64(self.physics.u),
            "physics.rho0" => fmt_f64(self.physics.rho0),
            "physics.tf_radius" => fmt_f64(self.physics.tf_radius),
            "physics.rim_width" => fmt_f64(self.physics.rim_width),
            "physics.trap_omega" => fmt_opt(self.physics.trap_omega, fmt_f64),
            "physics.noise" => fmt_f64(self.physics.noise),
            "run.mode" => self.run.mode.to_string(),
            "run.dt" => fmt_f64(self.run.dt),
            "run.n_steps" => fmt_opt(self.run.n_steps, |n| n.to_string()),
            "run.ramp_time" => fmt_f64(self.run.ramp_time),
            "run.snapshot_every" => self.run.snapshot_every.to_string(),
            "run.output_dir" => format!("\"{}\"", self.run.output_dir.display()),
            "run.seed" => self.run.seed.to_string(),
            "run.override_dt" => self.run.override_dt.to_string(),
            "run.strict_paper" => self.run.strict_paper.to_string(),
            "run.loop_radius" => fmt_opt(self.run.loop_radius, fmt_f64),
            "run.loop_samples" => self.run.loop_samples.to_string(),
            "outcouple.g1" => fmt_f64(self.outcouple.g1),
            "outcouple.g2" => fmt_f64(self.outcouple.g2),
            "outcouple.omega0_1" => fmt_f64(self.outcouple.omega0_1),
            "outcouple.omega0_2" => fmt_f64(self.outcouple.omega0_2),
            "outcouple.n" => fmt_f64(self.outcouple.n),
            "outcouple.v0" => fmt_f64(self.outcouple.v0),
            "outcouple.c" => fmt_f64(self.outcouple.c),
            "outcouple.length" => fmt_f64(self.outcouple.length),
            "outcouple.pulse_width" => fmt_f64(self.outcouple.pulse_width),
            "outcouple.frames" => self.outcouple.frames.to_string(),
            "outcouple.rows" => self.outcouple.rows.to_string(),
            _ => return None,
        })
    }

    /// Every key with its value, one `key = value` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("listed keys are readable");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    /// Checks every invariant. `lines` maps keys to the line that set them.
    pub fn validate_with_lines(&self, lines: &BTreeMap<String, usize>) -> Result<(), ConfigError> {
        let fail = |key: &str, reason: String| ConfigError {
            line: lines.get(key).copied(),
            kind: ConfigErrorKind::Invalid { key: key.to_string(), reason },
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(fail(key, format!("must be positive and finite, got {v}")))
            }
        };
        let nonnegative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(fail(key, format!("must be nonnegative and finite, got {v}")))
            }
        };
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(fail(key, format!("must be finite, got {v}")))
            }
        };
        for (key, n) in [("grid.nx", self.grid.nx), ("grid.ny", self.grid.ny)] {
            if !(n >= 4 && n.is_power_of_two()) {
                return Err(fail(key, format!("must be a power of two and at least 4, got {n}")));
            }
        }
        positive("grid.lx", self.grid.lx)?;
        positive("grid.ly", self.grid.ly)?;
        for (name, beams, peak_check) in
            [("probe", &self.beams.probe, false), ("control", &self.beams.control, true)]
        {
            for (j, b) in beams.iter().enumerate() {
                let prefix = format!("beams.{name}{}", j + 1);
                if peak_check {
                    positive(&format!("{prefix}.peak"), b.peak)?;
                } else {
                    nonnegative(&format!("{prefix}.peak"), b.peak)?;
                }
                positive(&format!("{prefix}.waist"), b.waist)?;
                finite(&format!("{prefix}.kx"), b.kx)?;
                finite(&format!("{prefix}.ky"), b.ky)?;
            }
        }
        if let Some(x) = self.beams.xi_max {
            positive("beams.xi_max", x)?;
        }
        for (key, v) in [
            ("beams.eps12", self.beams.eps12),
            ("beams.eps13", self.beams.eps13),
            ("beams.eps14", self.beams.eps14),
            ("beams.eps15", self.beams.eps15),
            ("physics.u", self.physics.u),
        ] {
            finite(key, v)?;
        }
        nonnegative("physics.rho0", self.physics.rho0)?;
        positive("physics.tf_radius", self.physics.tf_radius)?;
        positive("physics.rim_width", self.physics.rim_width)?;
        if let Some(w) = self.physics.trap_omega {
            nonnegative("physics.trap_omega", w)?;
        }
        nonnegative("physics.noise", self.physics.noise)?;
        positive("run.dt", self.run.dt)?;
        positive("run.ramp_time", self.run.ramp_time)?;
        if self.run.n_steps == Some(0) {
            return Err(fail("run.n_steps", "must be at least 1".to_string()));
        }
        if self.run.output_dir.as_os_str().is_empty() {
            return Err(fail("run.output_dir", "must not be empty".to_string()));
        }
        if let Some(r) = self.run.loop_radius {
            positive("run.loop_radius", r)?;
        }
        if self.run.loop_samples < vxsim_core::diagnostics::MIN_LOOP_SAMPLES {
            return Err(fail(
                "run.loop_samples",
                format!("must be at least {}", vxsim_core::diagnostics::MIN_LOOP_SAMPLES),
            ));
        }
        let o = &self.outcouple;
        for (key, v) in [
            ("outcouple.omega0_1", o.omega0_1),
            ("outcouple.omega0_2", o.omega0_2),
            ("outcouple.v0", o.v0),
            ("outcouple.c", o.c),
            ("outcouple.length", o.length),
            ("outcouple.pulse_width", o.pulse_width),
        ] {
            positive(key, v)?;
        }
        for (key, v) in [("outcouple.g1", o.g1), ("outcouple.g2", o.g2), ("outcouple.n", o.n)] {
            nonnegative(key, v)?;
        }
        if !(o.v0 < o.c) {
            return Err(fail("outcouple.v0", format!("must be below outcouple.c = {}", o.c)));
        }
        if o.frames < 2 {
            return Err(fail("outcouple.frames", "must be at least 2".to_string()));
        }
        if o.rows < 2 {
            return Err(fail("outcouple.rows", "must be at least 2".to_string()));
        }
        if self.run.mode.evolves() && !self.run.override_dt {
            let bound = self.dt_advisory();
            if self.run.dt > bound {
                let steps = (self.duration() / bound).ceil();
                return Err(fail(
                    "run.dt",
                    format!(
                        "= {} exceeds the stability advisory min(dx, dy)^2 / pi = {bound:.6} for this grid; \
                         use run.dt <= {bound:.6} (about {steps} steps for this run) or pass --override-dt",
                        self.run.dt
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with_lines(&BTreeMap::new())
    }

    /// `min(dx, dy)^2 / pi`.
    pub fn dt_advisory(&self) -> f64 {
        let dx = self.grid.lx / self.grid.nx as f64;
        let dy = self.grid.ly / self.grid.ny as f64;
        dx.min(dy).powi(2) / std::f64::consts::PI
    }

    pub fn steps(&self) -> u64 {
        self.run.n_steps.unwrap_or_else(|| (self.run.ramp_time / self.run.dt).round().max(1.0) as u64)
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.run.dt
    }

    pub fn scenario(&self) -> Scenario {
        let mut s = Scenario::standard(self.beams.probe[0].l);
        s.nx = self.grid.nx;
        s.ny = self.grid.ny;
        s.lx = self.grid.lx;
        s.ly = self.grid.ly;
        s.probes = [self.beams.probe[0].profile(), self.beams.probe[1].profile()];
        s.controls = [self.beams.control[0].profile(), self.beams.control[1].profile()];
        s.detunings = Detunings {
            eps12: self.beams.eps12,
            eps13: self.beams.eps13,
            eps14: self.beams.eps14,
            eps15: self.beams.eps15,
        };
        s.xi_max = self.beams.xi_max;
        s.u = self.physics.u;
        s.rho0 = self.physics.rho0;
        s.tf_radius = self.physics.tf_radius;
        s.rim_width = self.physics.rim_width;
        s.trap_omega = self.physics.trap_omega;
        s.dt = self.run.dt;
        s.ramp_time = self.run.ramp_time;
        s.n_steps = Some(self.steps());
        s.strict_paper = self.run.strict_paper;
        s.loop_radius = self.run.loop_radius;
        s.loop_samples = self.run.loop_samples;
        s
    }

    pub fn outcoupling_params(&self) -> OutcouplingParams {
        let o = &self.outcouple;
        OutcouplingParams {
            g: [o.g1, o.g2],
            omega0: [o.omega0_1, o.omega0_2],
            n: o.n,
            v0: o.v0,
            c: o.c,
            length: o.length,
        }
    }
}

/// A parsed but not yet validated configuration, with the line of every key.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: SimConfig,
    pub lines: BTreeMap<String, usize>,
}

impl ParsedConfig {
    pub fn validate(self) -> Result<SimConfig, ConfigError> {
        self.config.validate_with_lines(&self.lines)?;
        Ok(self.config)
    }
}

/// Reads `key = value` lines over the defaults without checking invariants.
pub fn parse_unvalidated(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut config = SimConfig::default();
    let mut lines = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                kind: ConfigErrorKind::Syntax(format!("expected `key = value`, got `{content}`")),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError {
                line: Some(line),
                kind: ConfigErrorKind::Syntax(format!("expected `key = value`, got `{content}`")),
            });
        }
        if let Some(&first) = lines.get(key) {
            return Err(ConfigError {
                line: Some(line),
                kind: ConfigErrorKind::DuplicateKey { key: key.to_string(), first },
            });
        }
        config.set(key, value).map_err(|kind| ConfigError { line: Some(line), kind })?;
        lines.insert(key.to_string(), line);
    }
    Ok(ParsedConfig { config, lines })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    parse_unvalidated(text)?.validate()
}
