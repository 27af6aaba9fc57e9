//! Classical out-coupling of the stored probe into a moving matter wave:
//! group velocity, delay, and the envelope-to-matter-wave output map.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::diagnostics::AnalyticPhase;
use crate::error::{Error, Result};
use crate::grid::{cis, ComplexField, SpectralGrid};

/// Control amplitudes are clipped at this fraction of their entrance value.
pub const OMEGA_FLOOR: f64 = 1e-6;
pub const MAX_INTERVALS: usize = 10_000;
const QUADRATURE_TOLERANCE: f64 = 1e-13;

/// `V_g = c (1 + x v0/c) / (1 + x)` with `x = g^2 n / Omega_0^2`.
pub fn group_velocity(g: f64, n: f64, omega0: f64, v0: f64, c: f64) -> Result<f64> {
    if !(omega0 > 0.0) {
        return Err(Error::InvalidParameter { name: "omega0", reason: "must be positive" });
    }
    let x = g * g * n / (omega0 * omega0);
    if x.is_infinite() {
        return Ok(v0);
    }
    Ok(c * (1.0 + x * v0 / c) / (1.0 + x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcouplingParams {
    pub g: [f64; 2],
    /// Entrance control amplitudes `Omega_0j(0)`.
    pub omega0: [f64; 2],
    /// Total linear density.
    pub n: f64,
    pub v0: f64,
    pub c: f64,
    pub length: f64,
}

impl OutcouplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v0 < self.c && self.c.is_finite()) {
            return Err(Error::InvalidParameter { name: "v0", reason: "must satisfy 0 < v0 < c" });
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter { name: "length", reason: "must be positive" });
        }
        if !(self.n >= 0.0) {
            return Err(Error::InvalidParameter { name: "n", reason: "must be nonnegative" });
        }
        if self.omega0.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter { name: "omega0", reason: "must be positive" });
        }
        Ok(())
    }

    /// `Omega_0j(z) = Omega_0j(0) cos^2(pi z / 2L)`, floored at
    /// [`OMEGA_FLOOR`] of the entrance value.
    pub fn omega0_profile(&self, j: usize, z: f64) -> f64 {
        let c = libm::cos(0.5 * PI * z / self.length);
        (self.omega0[j] * c * c).max(OMEGA_FLOOR * self.omega0[j])
    }

    pub fn group_velocity_at(&self, j: usize, z: f64) -> Result<f64> {
        group_velocity(self.g[j], self.n, self.omega0_profile(j, z), self.v0, self.c)
    }
}

/// Gauss-Kronrod 7/15 nodes on [-1, 1] (nonnegative half) and weights.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((k * h, (k - g).abs() * h))
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let (whole, _) = kronrod(&mut f, a, b)?;
    let tol = QUADRATURE_TOLERANCE * whole.abs().max(f64::MIN_POSITIVE);
    let mut stack = alloc::vec![(a, b)];
    let mut total = 0.0;
    let mut intervals = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        intervals += 1;
        if intervals > MAX_INTERVALS {
            return Err(Error::Quadrature { intervals });
        }
        let (value, err) = kronrod(&mut f, lo, hi)?;
        let share = tol * (hi - lo) / (b - a);
        let mid = 0.5 * (lo + hi);
        if err <= share || mid <= lo || mid >= hi {
            total += value;
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(total)
}

/// `int_0^L dz / V_g(z)` for an arbitrary control profile `omega0(z)`.
pub fn delay_profile(g: f64, n: f64, v0: f64, c: f64, length: f64, omega0: impl Fn(f64) -> f64) -> Result<f64> {
    integrate(|z| Ok(1.0 / group_velocity(g, n, omega0(z), v0, c)?), 0.0, length)
}

/// Delay `tau_j(L)` of flavor channel `j` under the default profile.
pub fn delay(params: &OutcouplingParams, j: usize) -> Result<f64> {
    params.validate()?;
    delay_profile(params.g[j], params.n, params.v0, params.c, params.length, |z| params.omega0_profile(j, z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRow {
    pub z: f64,
    pub group_velocity: f64,
    /// Cumulative delay `int_0^z dz' / V_g`.
    pub tau: f64,
}

/// `rows + 1` equally spaced samples of `V_g` and the cumulative delay.
pub fn delay_table(params: &OutcouplingParams, j: usize, rows: usize) -> Result<Vec<DelayRow>> {
    params.validate()?;
    let rows = rows.max(1);
    let h = params.length / rows as f64;
    let mut tau = 0.0;
    let mut out = Vec::with_capacity(rows + 1);
    for m in 0..=rows {
        let z = m as f64 * h;
        if m > 0 {
            tau += integrate(|s| Ok(1.0 / params.group_velocity_at(j, s)?), z - h, z)?;
        }
        out.push(DelayRow { z, group_velocity: params.group_velocity_at(j, z)?, tau });
    }
    Ok(out)
}

/// Probe envelope at the entrance sampled at `t0 + k dt`.
#[derive(Debug, Clone)]
pub struct EnvelopeHistory {
    pub t0: f64,
    pub dt: f64,
    pub frames: Vec<ComplexField>,
}

impl EnvelopeHistory {
    pub fn new(t0: f64, dt: f64, frames: Vec<ComplexField>) -> Result<Self> {
        if !(dt > 0.0) || frames.is_empty() {
            return Err(Error::InvalidParameter { name: "history", reason: "needs dt > 0 and at least one frame" });
        }
        let grid = frames[0].grid().clone();
        for f in &frames {
            f.ensure_same_grid(&grid)?;
        }
        Ok(Self { t0, dt, frames })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.frames[0].grid()
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.dt * (self.frames.len() - 1) as f64
    }

    /// Linear interpolation in time; held constant after the last frame.
    pub fn at(&self, t: f64) -> Result<ComplexField> {
        if t < self.t0 {
            return Err(Error::HistoryRange { time: t, start: self.t0 });
        }
        let s = (t - self.t0) / self.dt;
        let k = libm::floor(s) as usize;
        if k + 1 >= self.frames.len() {
            return Ok(self.frames[self.frames.len() - 1].clone());
        }
        let w = s - k as f64;
        let (a, b) = (&self.frames[k], &self.frames[k + 1]);
        let values = a.values().iter().zip(b.values()).map(|(x, y)| x * (1.0 - w) + y * w).collect();
        ComplexField::from_values(a.grid(), values)
    }
}

/// Phase `S_j = w phi + kz L - E t` attached to the output of one flavor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputPhase {
    pub winding: i32,
    pub kz: f64,
    pub energy: f64,
}

impl OutputPhase {
    /// Winding `q l` of the analytic phase model, no recoil, no energy.
    pub fn from_analytic(spec: &AnalyticPhase) -> Self {
        Self { winding: spec.charge * spec.l, kz: 0.0, energy: 0.0 }
    }
}

/// `Phi_j(r, t) = -sqrt(c/v0) E(r, t - tau_j) exp(i S_j(r, t))` at the exit.
pub fn output_map(
    history: &EnvelopeHistory,
    params: &OutcouplingParams,
    j: usize,
    phase: &OutputPhase,
    times: &[f64],
) -> Result<Vec<ComplexField>> {
    let tau = delay(params, j)?;
    output_map_with_delay(history, params, tau, phase, times)
}

/// [`output_map`] with a precomputed delay.
pub fn output_map_with_delay(
    history: &EnvelopeHistory,
    params: &OutcouplingParams,
    tau: f64,
    phase: &OutputPhase,
    times: &[f64],
) -> Result<Vec<ComplexField>> {
    params.validate()?;
    let grid = history.grid().clone();
    let gain = -libm::sqrt(params.c / params.v0);
    times
        .iter()
        .map(|&t| {
            let e = history.at(t - tau)?;
            let base = phase.kz * params.length - phase.energy * t;
            let values: Vec<Complex64> = e
                .values()
                .iter()
                .zip(grid.phi_map())
                .map(|(v, p)| v * gain * cis(phase.winding as f64 * p + base))
                .collect();
            ComplexField::from_values(&grid, values)
        })
        .collect()
}
