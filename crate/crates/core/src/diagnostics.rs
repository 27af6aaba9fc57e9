//! Observables: loop windings and circulations, analytic vortex states, and
//! state comparisons.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::beams::BeamSet;
use crate::error::{Error, Result};
use crate::full::{MatterState, COMPONENTS};
use crate::grid::{cis, ComplexField, Mask, RealField, SpectralGrid, SpectralInterpolator, VectorField};

/// Loop samples must exceed this fraction of the field peak.
pub const PHASE_FLOOR: f64 = 1e-8;
pub const MIN_LOOP_SAMPLES: usize = 64;

/// A circle on which windings and circulations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub n_samples: usize,
}

impl LoopSpec {
    /// Validates `radius > 3 max(dx, dy)`, `n_samples >= 64`, and that the
    /// circle stays inside the box.
    pub fn new(grid: &SpectralGrid, center: [f64; 2], radius: f64, n_samples: usize) -> Result<Self> {
        if n_samples < MIN_LOOP_SAMPLES {
            return Err(Error::InvalidLoop { reason: "fewer than 64 samples" });
        }
        if !(radius > 3.0 * grid.dx().max(grid.dy())) {
            return Err(Error::InvalidLoop { reason: "radius must exceed three grid spacings" });
        }
        let hx = 0.5 * grid.lx() - grid.dx();
        let hy = 0.5 * grid.ly() - grid.dy();
        if center[0] - radius < -hx || center[0] + radius > hx || center[1] - radius < -hy || center[1] + radius > hy {
            return Err(Error::InvalidLoop { reason: "loop leaves the box" });
        }
        Ok(Self { center, radius, n_samples })
    }

    /// Counter-clockwise sample points.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_samples).map(move |k| {
            let th = 2.0 * PI * k as f64 / self.n_samples as f64;
            (self.center[0] + self.radius * libm::cos(th), self.center[1] + self.radius * libm::sin(th))
        })
    }
}

/// Periodic bilinear interpolation of a complex field.
pub fn bilinear(f: &ComplexField, x: f64, y: f64) -> Complex64 {
    let g = f.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let fx = (x + 0.5 * g.lx()) / g.dx();
    let fy = (y + 0.5 * g.ly()) / g.dy();
    let (i0, j0) = (libm::floor(fx), libm::floor(fy));
    let (tx, ty) = (fx - i0, fy - j0);
    let at = |i: isize, j: isize| {
        let (i, j) = (i.rem_euclid(nx) as usize, j.rem_euclid(ny) as usize);
        f.values()[g.index(i, j)]
    };
    let (i0, j0) = (i0 as isize, j0 as isize);
    at(i0, j0) * ((1.0 - tx) * (1.0 - ty))
        + at(i0 + 1, j0) * (tx * (1.0 - ty))
        + at(i0, j0 + 1) * ((1.0 - tx) * ty)
        + at(i0 + 1, j0 + 1) * (tx * ty)
}

fn bilinear_real(f: &RealField, x: f64, y: f64) -> f64 {
    let g = f.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let fx = (x + 0.5 * g.lx()) / g.dx();
    let fy = (y + 0.5 * g.ly()) / g.dy();
    let (i0, j0) = (libm::floor(fx), libm::floor(fy));
    let (tx, ty) = (fx - i0, fy - j0);
    let at = |i: isize, j: isize| {
        let (i, j) = (i.rem_euclid(nx) as usize, j.rem_euclid(ny) as usize);
        f.values()[g.index(i, j)]
    };
    let (i0, j0) = (i0 as isize, j0 as isize);
    at(i0, j0) * (1.0 - tx) * (1.0 - ty)
        + at(i0 + 1, j0) * tx * (1.0 - ty)
        + at(i0, j0 + 1) * (1.0 - tx) * ty
        + at(i0 + 1, j0 + 1) * tx * ty
}

fn wrap(d: f64) -> f64 {
    let mut d = libm::fmod(d, 2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub winding: i64,
    /// Total wrapped phase over `2 pi` minus `winding`.
    pub residual: f64,
}

/// Winding number from wrapped phase differences of bilinearly interpolated samples.
pub fn winding(f: &ComplexField, lp: &LoopSpec) -> Result<Winding> {
    let floor = PHASE_FLOOR * f.max_abs();
    let samples: Vec<Complex64> = lp.points().map(|(x, y)| bilinear(f, x, y)).collect();
    for (k, s) in samples.iter().enumerate() {
        if !(s.norm() > floor) {
            return Err(Error::UndefinedPhase { sample: k });
        }
    }
    let total: f64 = (0..samples.len())
        .map(|k| {
            let a = samples[k];
            let b = samples[(k + 1) % samples.len()];
            wrap(b.arg() - a.arg())
        })
        .sum();
    let turns = total / (2.0 * PI);
    let winding = libm::round(turns) as i64;
    Ok(Winding { winding, residual: turns - winding as f64 })
}

/// `oint v . dr` with `v = Im(f* grad f) / |f|^2`, evaluated from the
/// band-limited interpolant of `f` by the periodic trapezoid rule.
pub fn circulation(f: &ComplexField, lp: &LoopSpec) -> Result<f64> {
    let interp = SpectralInterpolator::new(f);
    circulation_with(&interp, f.max_abs(), lp)
}

/// As [`circulation`], reusing a prepared interpolator.
pub fn circulation_with(interp: &SpectralInterpolator, peak: f64, lp: &LoopSpec) -> Result<f64> {
    let floor = PHASE_FLOOR * peak;
    let n = lp.n_samples;
    let dth = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for (k, (x, y)) in lp.points().enumerate() {
        let (v, vx, vy) = interp.eval(x, y);
        if !(v.norm() > floor) {
            return Err(Error::UndefinedPhase { sample: k });
        }
        let th = dth * k as f64;
        let (tx, ty) = (-lp.radius * libm::sin(th), lp.radius * libm::cos(th));
        let ux = (v.conj() * vx).im / v.norm_sqr();
        let uy = (v.conj() * vy).im / v.norm_sqr();
        sum += ux * tx + uy * ty;
    }
    Ok(sum * dth)
}

/// `oint A . dr` of a real vector field by bilinear sampling.
pub fn vector_circulation(a: &VectorField, lp: &LoopSpec) -> f64 {
    let dth = 2.0 * PI / lp.n_samples as f64;
    lp.points()
        .enumerate()
        .map(|(k, (x, y))| {
            let th = dth * k as f64;
            let ax = bilinear_real(&a.x, x, y);
            let ay = bilinear_real(&a.y, x, y);
            -ax * lp.radius * libm::sin(th) + ay * lp.radius * libm::cos(th)
        })
        .sum::<f64>()
        * dth
}

/// `arg f` pointwise.
pub fn phase_map(f: &ComplexField) -> RealField {
    RealField::from_values(f.grid(), f.values().iter().map(|v| v.arg()).collect()).expect("length matches grid")
}

/// Phase model of an out-coupled flavor in the common gauge field `l grad phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPhase {
    /// `+1` for flavor 2, `-1` for flavor 3.
    pub charge: i32,
    pub l: i32,
    /// Recoil wavevector `k_p - k_c` of the pair feeding this flavor.
    pub recoil: [f64; 2],
    pub include_potential: bool,
    pub include_mean_field: bool,
}

impl AnalyticPhase {
    pub fn new(charge: i32, l: i32) -> Self {
        Self { charge, l, recoil: [0.0; 2], include_potential: true, include_mean_field: true }
    }
}

const CHARACTERISTIC_INTERVALS: usize = 64;

/// `-(Omega_p/Omega_c) sqrt(rho) exp(i S)` for the pair `j` feeding the flavor,
/// with `S = q l phi + k.r - int_0^t (V_eff + U rho)(r + K (t' - t)) dt'`.
///
/// With a nonzero recoil the time integral runs along the straight
/// characteristic; characteristics leaving the box from a point that carries
/// amplitude above [`PHASE_FLOOR`] of the peak are an error.
#[allow(clippy::too_many_arguments)]
pub fn analytic_state(
    spec: &AnalyticPhase,
    beams: &BeamSet,
    j: usize,
    rho: &RealField,
    veff: Option<&RealField>,
    u: f64,
    t: f64,
) -> Result<ComplexField> {
    let grid: Arc<SpectralGrid> = beams.grid().clone();
    rho.ensure_same_grid(&grid)?;
    if let Some(v) = veff {
        v.ensure_same_grid(&grid)?;
    }
    if rho.values().iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::AnalyticDomain { reason: "negative density" });
    }
    let ratio = beams.ratio_amplitude(j);
    let k = spec.recoil;
    let tilted = k != [0.0, 0.0] && t != 0.0;
    let local = |idx: usize| {
        let mut w = 0.0;
        if spec.include_potential {
            if let Some(v) = veff {
                w += v.values()[idx];
            }
        }
        if spec.include_mean_field {
            w += u * rho.values()[idx];
        }
        w
    };
    let along = |x: f64, y: f64| {
        let mut w = 0.0;
        if spec.include_potential {
            if let Some(v) = veff {
                w += bilinear_real(v, x, y);
            }
        }
        if spec.include_mean_field {
            w += u * bilinear_real(rho, x, y);
        }
        w
    };
    let (hx, hy) = (0.5 * grid.lx(), 0.5 * grid.ly());
    let amplitude: Vec<f64> = (0..grid.len()).map(|idx| ratio.values()[idx] * libm::sqrt(rho.values()[idx])).collect();
    let floor = PHASE_FLOOR * amplitude.iter().fold(0.0, |m: f64, a| m.max(*a));
    let mut values = Vec::with_capacity(grid.len());
    for (idx, &amp) in amplitude.iter().enumerate() {
        let (x, y) = grid.position(idx);
        let integral = if !tilted || amp <= floor {
            local(idx) * t
        } else {
            // Simpson along r + K (t' - t), t' in [0, t]
            let (x0, y0) = (x - k[0] * t, y - k[1] * t);
            if x0.abs() > hx || y0.abs() > hy {
                return Err(Error::AnalyticDomain { reason: "characteristic leaves the box" });
            }
            let n = CHARACTERISTIC_INTERVALS;
            let h = t / n as f64;
            let mut acc = 0.0;
            for m in 0..=n {
                let tp = m as f64 * h;
                let w = if m == 0 || m == n { 1.0 } else if m % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * along(x + k[0] * (tp - t), y + k[1] * (tp - t));
            }
            acc * h / 3.0
        };
        let s = (spec.charge * spec.l) as f64 * grid.phi_map()[idx] + k[0] * x + k[1] * y - integral;
        values.push(-amp * cis(s));
    }
    ComplexField::from_values(&grid, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopAgreement {
    pub loop_spec: LoopSpec,
    pub a: Option<Winding>,
    pub b: Option<Winding>,
}

impl LoopAgreement {
    pub fn agrees(&self) -> bool {
        matches!((self.a, self.b), (Some(a), Some(b)) if a.winding == b.winding)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `||b - e^{i theta} a|| / max(||a||, ||b||)` over the mask.
    pub l2_relative: f64,
    /// Largest `|arg(b conj(e^{i theta} a))|` where both amplitudes exceed
    /// [`PHASE_FLOOR`] of their peaks.
    pub max_phase_difference: f64,
    /// Optimal global phase `theta = arg(sum a* b)`.
    pub global_phase: f64,
    pub loops: Vec<LoopAgreement>,
}

impl Comparison {
    pub fn windings_agree(&self) -> bool {
        self.loops.iter().all(LoopAgreement::agrees)
    }
}

/// Compares two states on `mask` after removing the best global phase.
pub fn compare_states(a: &ComplexField, b: &ComplexField, mask: &Mask, loops: &[LoopSpec]) -> Result<Comparison> {
    b.ensure_same_grid(a.grid())?;
    let mut overlap = Complex64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for idx in 0..a.values().len() {
        if mask.contains(idx) {
            let (x, y) = (a.values()[idx], b.values()[idx]);
            overlap += x.conj() * y;
            na += x.norm_sqr();
            nb += y.norm_sqr();
        }
    }
    let theta = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    let rot = cis(theta);
    let (fa, fb) = (PHASE_FLOOR * a.max_abs(), PHASE_FLOOR * b.max_abs());
    let mut diff = 0.0;
    let mut max_phase = 0.0f64;
    for idx in 0..a.values().len() {
        if !mask.contains(idx) {
            continue;
        }
        let (x, y) = (a.values()[idx] * rot, b.values()[idx]);
        diff += (y - x).norm_sqr();
        if x.norm() > fa && y.norm() > fb {
            max_phase = max_phase.max((y * x.conj()).arg().abs());
        }
    }
    let denom = libm::sqrt(na.max(nb));
    let l2_relative = if denom > 0.0 { libm::sqrt(diff) / denom } else { 0.0 };
    let loops = loops
        .iter()
        .map(|lp| LoopAgreement { loop_spec: *lp, a: winding(a, lp).ok(), b: winding(b, lp).ok() })
        .collect();
    Ok(Comparison { l2_relative, max_phase_difference: max_phase, global_phase: theta, loops })
}

/// `P_a = int |phi_a|^2 dx dy` for the five components.
pub fn populations(state: &MatterState) -> [f64; COMPONENTS] {
    state.populations()
}
