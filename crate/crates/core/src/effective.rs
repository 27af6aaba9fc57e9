//! Dark-state reduction: gauge potentials, effective potentials, and the
//! two-flavor minimally coupled evolution.
//!
//! Writing `s_j = |xi_j|^2` and `D = 1 + s_1 + s_2`, the weights are
//! `Xi_1 = D`, `Xi_2 = D / s_2`, `Xi_3 = D / s_1`. Every formula below is
//! multiplied through by `s_j` so that nothing divides by `xi` unless the
//! full non-Hermitian potentials are requested.
//!
//! The Hermitian potentials are the imaginary parts of the full ones:
//!
//! ```text
//! A_1 = (s_1 grad R_1 + s_2 grad R_2) / D
//! A_2 = (s_1 grad R_1 - (1 + s_1) grad R_2) / D
//! A_3 = (s_2 grad R_2 - (1 + s_2) grad R_1) / D
//! ```
//!
//! With `s_1 = s_2` and `R_1 = -R_2 = l phi` these collapse to `A_1 = 0` and
//! `A_2 = -A_3 = l grad phi`, the field that leaves `phi_2 ~ exp(i l phi)`
//! stationary in `(1/2)(i grad + q A)^2` with `q = +1`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::beams::{xi_ratios, BeamSet, XI_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{cis, gradient, ComplexField, ComplexVectorField, Mask, RealField, SpectralGrid, VectorField};
use crate::linalg::tridiagonal_eigen;

/// Default bound on `|q A|` away from which fields must vanish.
pub const A_MAX: f64 = 1e3;
/// Fields at points with `|q A| > A_MAX` must stay below this fraction of their peak.
pub const CORE_AMPLITUDE_FLOOR: f64 = 1e-10;
/// Relative tolerance of the trap compatibility check in [`solve_traps`].
pub const TRAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaugeMode {
    /// Phase-gradient potentials only.
    #[default]
    Hermitian,
    /// The complete complex potentials including amplitude gradients.
    Full,
}

/// `grad R = k + dl grad phi`, zero outside `mask`.
pub fn phase_gradient(grid: &Arc<SpectralGrid>, k: [f64; 2], dl: i32, mask: &Mask) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        if !mask.contains(idx) {
            continue;
        }
        let (x, y) = grid.position(idx);
        let r2 = x * x + y * y;
        let (gx, gy) = if dl == 0 { (0.0, 0.0) } else { (-(dl as f64) * y / r2, dl as f64 * x / r2) };
        out.x.values_mut()[idx] = k[0] + gx;
        out.y.values_mut()[idx] = k[1] + gy;
    }
    out
}

/// `A = l grad phi = l (-y, x) / r^2`, zero inside the disc of `core_radius`.
pub fn common_gauge_field(grid: &Arc<SpectralGrid>, l: i32, core_radius: f64) -> VectorField {
    phase_gradient(grid, [0.0, 0.0], l, &Mask::outside_core(grid, core_radius))
}

/// `(Xi_1, Xi_2, Xi_3)`; `Xi_2`, `Xi_3` are infinite where the dividing ratio vanishes.
pub fn xi_weights(xi1: &ComplexField, xi2: &ComplexField) -> [RealField; 3] {
    let grid = xi1.grid();
    let (mut w1, mut w2, mut w3) = (Vec::new(), Vec::new(), Vec::new());
    for (a, b) in xi1.values().iter().zip(xi2.values()) {
        let (s1, s2) = (a.norm_sqr(), b.norm_sqr());
        let d = 1.0 + s1 + s2;
        w1.push(d);
        w2.push(if s2 > 0.0 { d / s2 } else { f64::INFINITY });
        w3.push(if s1 > 0.0 { d / s1 } else { f64::INFINITY });
    }
    [
        RealField::from_values(grid, w1).expect("length matches grid"),
        RealField::from_values(grid, w2).expect("length matches grid"),
        RealField::from_values(grid, w3).expect("length matches grid"),
    ]
}

/// Hermitian potentials from the ratio magnitudes and the phase gradients.
pub fn hermitian_potentials(
    xi1: &ComplexField,
    xi2: &ComplexField,
    grad_r1: &VectorField,
    grad_r2: &VectorField,
) -> [VectorField; 3] {
    let grid = xi1.grid();
    let mut a: [VectorField; 3] = core::array::from_fn(|_| VectorField::zeros(grid));
    for idx in 0..grid.len() {
        let s1 = xi1.values()[idx].norm_sqr();
        let s2 = xi2.values()[idx].norm_sqr();
        let d = 1.0 + s1 + s2;
        let g1 = [grad_r1.x.values()[idx], grad_r1.y.values()[idx]];
        let g2 = [grad_r2.x.values()[idx], grad_r2.y.values()[idx]];
        let comps = |c: usize| {
            [
                (s1 * g1[c] + s2 * g2[c]) / d,
                (s1 * g1[c] - (1.0 + s1) * g2[c]) / d,
                (s2 * g2[c] - (1.0 + s2) * g1[c]) / d,
            ]
        };
        let (cx, cy) = (comps(0), comps(1));
        for alpha in 0..3 {
            a[alpha].x.values_mut()[idx] = cx[alpha];
            a[alpha].y.values_mut()[idx] = cy[alpha];
        }
    }
    a
}

fn check_floor(xi: &ComplexField, mask: &Mask) -> Result<()> {
    let floor = XI_FLOOR * xi.max_abs();
    let grid = xi.grid();
    for (idx, v) in xi.values().iter().enumerate() {
        if mask.contains(idx) && !(v.norm() >= floor && v.norm() > 0.0) {
            let (i, j) = grid.coords(idx);
            return Err(Error::MaskViolation { i, j });
        }
    }
    Ok(())
}

/// Gauge potentials from the ratio fields alone, using spectral gradients.
///
/// Points outside `mask` are set to zero. Every masked point must carry
/// `|xi_j|` above [`XI_FLOOR`] of its peak.
pub fn gauge_potentials(
    xi1: &ComplexField,
    xi2: &ComplexField,
    mode: GaugeMode,
    mask: &Mask,
) -> Result<[ComplexVectorField; 3]> {
    let grid = xi1.grid().clone();
    xi2.ensure_same_grid(&grid)?;
    check_floor(xi1, mask)?;
    check_floor(xi2, mask)?;
    let (d1x, d1y) = gradient(xi1);
    let (d2x, d2y) = gradient(xi2);
    let mut a: [ComplexVectorField; 3] = core::array::from_fn(|_| ComplexVectorField::zeros(&grid));
    let zero = Complex64::new(0.0, 0.0);
    for idx in 0..grid.len() {
        if !mask.contains(idx) {
            continue;
        }
        let z1 = xi1.values()[idx];
        let z2 = xi2.values()[idx];
        let (s1, s2) = (z1.norm_sqr(), z2.norm_sqr());
        let d = 1.0 + s1 + s2;
        let g1 = [d1x.values()[idx], d1y.values()[idx]];
        let g2 = [d2x.values()[idx], d2y.values()[idx]];
        for c in 0..2 {
            // xi* grad xi and grad xi / xi
            let p1 = z1.conj() * g1[c];
            let p2 = z2.conj() * g2[c];
            let q1 = g1[c] / z1;
            let q2 = g2[c] / z2;
            let full = [(p1 + p2) / d, (p1 - (1.0 + s1) * q2) / d, (p2 - (1.0 + s2) * q1) / d];
            for alpha in 0..3 {
                let v = match mode {
                    GaugeMode::Full => full[alpha],
                    GaugeMode::Hermitian => Complex64::new(full[alpha].im, 0.0),
                };
                let target = if c == 0 { &mut a[alpha].x } else { &mut a[alpha].y };
                target.values_mut()[idx] = if v.re.is_finite() && v.im.is_finite() { v } else { zero };
            }
        }
    }
    Ok(a)
}

/// The dark-state reduction for one beam configuration.
#[derive(Debug, Clone)]
pub struct EffectiveGauge {
    pub mode: GaugeMode,
    pub xi1: ComplexField,
    pub xi2: ComplexField,
    pub xi_weights: [RealField; 3],
    /// `A_1, A_2, A_3`; in Hermitian mode the imaginary parts are zero.
    pub a: [ComplexVectorField; 3],
    pub mask: Mask,
}

impl EffectiveGauge {
    /// Hermitian mode uses the analytic phase gradients of the beams on the
    /// default core mask; full mode additionally masks points where either
    /// ratio falls below [`XI_FLOOR`] of its peak.
    pub fn from_beams(beams: &BeamSet, mode: GaugeMode) -> Result<Self> {
        let grid = beams.grid().clone();
        let (xi1, xi2) = xi_ratios(beams);
        let core = Mask::outside_core(&grid, Mask::default_core_radius(&grid));
        match mode {
            GaugeMode::Hermitian => {
                let dl = |j: usize| beams.probe_l(j) - beams.control_l(j);
                let g1 = phase_gradient(&grid, beams.recoil(0), dl(0), &core);
                let g2 = phase_gradient(&grid, beams.recoil(1), dl(1), &core);
                let real = hermitian_potentials(&xi1, &xi2, &g1, &g2);
                let a = real.map(|v| ComplexVectorField { x: v.x.to_complex(), y: v.y.to_complex() });
                let xi_weights = xi_weights(&xi1, &xi2);
                Ok(Self { mode, xi1, xi2, xi_weights, a, mask: core })
            }
            GaugeMode::Full => {
                let f1 = XI_FLOOR * xi1.max_abs();
                let f2 = XI_FLOOR * xi2.max_abs();
                let mask = core.intersect(&Mask::from_fn(&grid, |idx| {
                    let (a, b) = (xi1.values()[idx].norm(), xi2.values()[idx].norm());
                    a >= f1 && b >= f2 && a > 0.0 && b > 0.0
                }));
                Self::from_xi(xi1, xi2, mode, mask)
            }
        }
    }

    /// Spectral evaluation from given ratio fields on an explicit mask.
    pub fn from_xi(xi1: ComplexField, xi2: ComplexField, mode: GaugeMode, mask: Mask) -> Result<Self> {
        let a = gauge_potentials(&xi1, &xi2, mode, &mask)?;
        let xi_weights = xi_weights(&xi1, &xi2);
        Ok(Self { mode, xi1, xi2, xi_weights, a, mask })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.xi1.grid()
    }

    /// The real vector field entering the dynamics: the real part in
    /// Hermitian mode, the imaginary (phase-gradient) part in full mode.
    pub fn hermitian_part(&self, alpha: usize) -> VectorField {
        match self.mode {
            GaugeMode::Hermitian => self.a[alpha].real_part(),
            GaugeMode::Full => self.a[alpha].imag_part(),
        }
    }

    fn s(&self, idx: usize) -> (f64, f64) {
        (self.xi1.values()[idx].norm_sqr(), self.xi2.values()[idx].norm_sqr())
    }
}

/// `(V_1eff, V_2eff, V_3eff)` for traps `V_1..V_3` and two-photon detunings
/// `eps21`, `eps31`.
pub fn effective_potentials(gauge: &EffectiveGauge, traps: [&RealField; 3], eps21: f64, eps31: f64) -> Result<[RealField; 3]> {
    let grid = gauge.grid().clone();
    for v in traps {
        v.ensure_same_grid(&grid)?;
    }
    let mut out: [Vec<f64>; 3] = core::array::from_fn(|_| Vec::with_capacity(grid.len()));
    for idx in 0..grid.len() {
        let (s1, s2) = gauge.s(idx);
        let d = 1.0 + s1 + s2;
        let [v1, v2, v3] = traps.map(|v| v.values()[idx]);
        let a2: [f64; 3] = core::array::from_fn(|a| gauge.a[a].norm_sqr(idx));
        out[0].push((v1 + s1 * v2 + s2 * v3 + a2[0] / (2.0 * d)) / d);
        out[1].push((s2 * v2 + eps21 + v1 - s1 * v3) / d + s2 * s2 * a2[1] / (2.0 * d * d));
        out[2].push((s1 * v3 + eps31 + v1 - s2 * v2) / d + s1 * s1 * a2[2] / (2.0 * d * d));
    }
    let [o1, o2, o3] = out;
    Ok([
        RealField::from_values(&grid, o1)?,
        RealField::from_values(&grid, o2)?,
        RealField::from_values(&grid, o3)?,
    ])
}

/// Per-point data of the trap system `V_2eff = V_3eff = 0`.
///
/// Scaled by `D`, the two equations read `s_2 V_2 - s_1 V_3 = c_2` and
/// `s_1 V_3 - s_2 V_2 = c_3`. The rows are negatives of each other, so the
/// system has solutions only where `c_2 + c_3 = 0`.
fn trap_system(gauge: &EffectiveGauge, v1: f64, eps21: f64, eps31: f64, idx: usize) -> ([f64; 2], f64, f64, f64) {
    let (s1, s2) = gauge.s(idx);
    let d = 1.0 + s1 + s2;
    let c2 = -(eps21 + v1) - s2 * s2 * gauge.a[1].norm_sqr(idx) / (2.0 * d);
    let c3 = -(eps31 + v1) - s1 * s1 * gauge.a[2].norm_sqr(idx) / (2.0 * d);
    ([s2, -s1], c2, c3, d)
}

/// Exact minimum-norm `(V_2, V_3)` with `V_2eff = V_3eff = 0`.
///
/// The pointwise system has rank one, so a solution exists only where
/// `2 V_1 = -(eps21 + eps31) - (s_2^2 |A_2|^2 + s_1^2 |A_3|^2) / (2D)`;
/// elsewhere the first failing point is reported. Points outside the gauge
/// mask carry no potentials and get `V_2 = V_3 = 0`.
pub fn solve_traps(v1: &RealField, gauge: &EffectiveGauge, eps21: f64, eps31: f64) -> Result<(RealField, RealField)> {
    let grid = gauge.grid().clone();
    v1.ensure_same_grid(&grid)?;
    let mut v2 = RealField::zeros(&grid);
    let mut v3 = RealField::zeros(&grid);
    for idx in (0..grid.len()).filter(|&idx| gauge.mask.contains(idx)) {
        let (row, c2, c3, _) = trap_system(gauge, v1.values()[idx], eps21, eps31, idx);
        let residual = c2 + c3;
        let scale = c2.abs().max(c3.abs()).max(eps21.abs()).max(eps31.abs()).max(f64::MIN_POSITIVE);
        let n2 = row[0] * row[0] + row[1] * row[1];
        if residual.abs() > TRAP_TOLERANCE * scale || (n2 == 0.0 && c2 != 0.0) {
            let (i, j) = grid.coords(idx);
            return Err(Error::IncompatibleTraps { i, j, residual });
        }
        if n2 > 0.0 {
            v2.values_mut()[idx] = row[0] * c2 / n2;
            v3.values_mut()[idx] = row[1] * c2 / n2;
        }
    }
    Ok((v2, v3))
}

/// Minimum-norm least-squares traps and the effective potentials they leave.
#[derive(Debug, Clone)]
pub struct TrapSolution {
    pub v2: RealField,
    pub v3: RealField,
    /// Remaining `(V_2eff, V_3eff)`; the two are equal pointwise.
    pub residual: [RealField; 2],
}

/// Minimizes `V_2eff^2 + V_3eff^2` pointwise; coincides with [`solve_traps`]
/// wherever that succeeds.
pub fn solve_traps_least_squares(v1: &RealField, gauge: &EffectiveGauge, eps21: f64, eps31: f64) -> Result<TrapSolution> {
    let grid = gauge.grid().clone();
    v1.ensure_same_grid(&grid)?;
    let mut v2 = RealField::zeros(&grid);
    let mut v3 = RealField::zeros(&grid);
    let mut r2 = RealField::zeros(&grid);
    let mut r3 = RealField::zeros(&grid);
    for idx in 0..grid.len() {
        let (row, c2, c3, d) = trap_system(gauge, v1.values()[idx], eps21, eps31, idx);
        let n2 = row[0] * row[0] + row[1] * row[1];
        let (u, a, b) = if n2 > 0.0 {
            let u = 0.5 * (c2 - c3);
            (u, row[0] * u / n2, row[1] * u / n2)
        } else {
            (0.0, 0.0, 0.0)
        };
        v2.values_mut()[idx] = a;
        v3.values_mut()[idx] = b;
        r2.values_mut()[idx] = (u - c2) / d;
        r3.values_mut()[idx] = (-u - c3) / d;
    }
    Ok(TrapSolution { v2, v3, residual: [r2, r3] })
}

/// Split-step propagator for one flavor of charge `q`:
/// `i d_t phi = (1/2)(i grad + q A)^2 phi + (V + U rho) phi`.
///
/// The kinetic part is applied spectrally in two half steps around
/// `exp(-i dt W)` with `W = -q (A.P + P.A)/2 + q^2 |A|^2 / 2 + V + U rho`,
/// `P = -i grad`, which is exponentiated by a Lanczos iteration.
#[derive(Debug, Clone)]
pub struct FlavorPropagator {
    grid: Arc<SpectralGrid>,
    dt: f64,
    charge: f64,
    ax: Vec<f64>,
    ay: Vec<f64>,
    diagonal: Vec<f64>,
    half_kinetic: Vec<Complex64>,
    flagged: Vec<usize>,
    tolerance: f64,
    max_krylov: usize,
}

impl FlavorPropagator {
    pub fn new(
        a: &VectorField,
        charge: f64,
        potential: &RealField,
        rho: &RealField,
        u: f64,
        dt: f64,
    ) -> Result<Self> {
        let grid = a.grid().clone();
        potential.ensure_same_grid(&grid)?;
        rho.ensure_same_grid(&grid)?;
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be nonzero and finite" });
        }
        if rho.values().iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidParameter { name: "rho", reason: "must be nonnegative" });
        }
        let ax: Vec<f64> = a.x.values().iter().map(|v| charge * v).collect();
        let ay: Vec<f64> = a.y.values().iter().map(|v| charge * v).collect();
        let diagonal = (0..grid.len())
            .map(|i| 0.5 * (ax[i] * ax[i] + ay[i] * ay[i]) + potential.values()[i] + u * rho.values()[i])
            .collect();
        let half_kinetic = (0..grid.len()).map(|idx| cis(-grid.k_squared(idx) * dt / 4.0)).collect();
        let flagged = (0..grid.len()).filter(|&i| libm::hypot(ax[i], ay[i]) > A_MAX).collect();
        Ok(Self { grid, dt, charge, ax, ay, diagonal, half_kinetic, flagged, tolerance: 1e-13, max_krylov: 40 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// Points with `|q A| > A_MAX` must hold negligible amplitude.
    pub fn check_core(&self, phi: &ComplexField, rho: &RealField) -> Result<()> {
        let peak = phi.max_abs();
        let rho_peak = rho.max_abs();
        for &idx in &self.flagged {
            let amp = phi.values()[idx].norm();
            if amp > CORE_AMPLITUDE_FLOOR * peak || rho.values()[idx] > CORE_AMPLITUDE_FLOOR * rho_peak {
                let (i, j) = self.grid.coords(idx);
                return Err(Error::CoreSingularity { i, j, magnitude: libm::hypot(self.ax[idx], self.ay[idx]) });
            }
        }
        Ok(())
    }

    /// `W psi` into `out`; `scratch` holds two work arrays of grid length.
    fn apply_w(&self, psi: &[Complex64], out: &mut [Complex64], scratch: &mut [Vec<Complex64>; 2]) {
        let g = &*self.grid;
        let [s0, s1] = scratch;
        // x: A_x d_x psi + d_x (A_x psi)
        s0.copy_from_slice(psi);
        g.derivative_x_in_place(s0);
        for i in 0..psi.len() {
            s1[i] = psi[i] * self.ax[i];
        }
        g.derivative_x_in_place(s1);
        for i in 0..psi.len() {
            out[i] = self.ax[i] * s0[i] + s1[i];
        }
        s0.copy_from_slice(psi);
        g.derivative_y_in_place(s0);
        for i in 0..psi.len() {
            s1[i] = psi[i] * self.ay[i];
        }
        g.derivative_y_in_place(s1);
        for i in 0..psi.len() {
            let sym = out[i] + self.ay[i] * s0[i] + s1[i];
            // -q (A.P + P.A)/2 = (i q / 2)(A.grad + grad.A), charge folded into A
            out[i] = Complex64::new(0.0, 0.5) * sym + self.diagonal[i] * psi[i];
        }
    }

    fn kinetic_half(&self, psi: &mut [Complex64]) {
        self.grid.fft2(psi);
        for (v, p) in psi.iter_mut().zip(&self.half_kinetic) {
            *v *= p;
        }
        self.grid.ifft2(psi);
    }

    /// `exp(-i dt W) psi` by Lanczos with full reorthogonalization.
    fn exp_w(&self, psi: &mut [Complex64]) -> Result<()> {
        let n = psi.len();
        let beta0 = libm::sqrt(psi.iter().map(|v| v.norm_sqr()).sum::<f64>());
        if beta0 == 0.0 {
            return Ok(());
        }
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(self.max_krylov + 1);
        basis.push(psi.iter().map(|v| v / beta0).collect());
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut scratch = [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]];
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut coeffs: Vec<Complex64>;
        loop {
            let m = basis.len();
            self.apply_w(&basis[m - 1], &mut w, &mut scratch);
            let a: f64 = basis[m - 1].iter().zip(&w).map(|(v, x)| (v.conj() * x).re).sum();
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let proj: Complex64 = v.iter().zip(&w).map(|(p, x)| p.conj() * x).sum();
                    for (x, p) in w.iter_mut().zip(v) {
                        *x -= proj * p;
                    }
                }
            }
            let b = libm::sqrt(w.iter().map(|v| v.norm_sqr()).sum::<f64>());
            coeffs = tridiagonal_exp(&alpha, &beta, self.dt).ok_or(Error::Krylov { iterations: m })?;
            let estimate = b * coeffs[m - 1].norm();
            if estimate <= self.tolerance || b <= 1e-300 {
                break;
            }
            if m >= self.max_krylov {
                return Err(Error::Krylov { iterations: m });
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        for (i, out) in psi.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (v, c) in basis.iter().zip(&coeffs) {
                acc += v[i] * c;
            }
            *out = acc * beta0;
        }
        Ok(())
    }

    pub fn step(&self, phi: &mut ComplexField) -> Result<()> {
        phi.ensure_same_grid(&self.grid)?;
        let data = phi.values_mut();
        self.kinetic_half(data);
        self.exp_w(data)?;
        self.kinetic_half(data);
        Ok(())
    }
}

/// First column of `exp(-i dt T)` for the real symmetric tridiagonal `T`.
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], dt: f64) -> Option<Vec<Complex64>> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(&beta[..m - 1]);
    let mut z = vec![0.0; m * m];
    for k in 0..m {
        z[k * m + k] = 1.0;
    }
    if !tridiagonal_eigen(&mut d, &mut e, &mut z) {
        return None;
    }
    Some(
        (0..m)
            .map(|i| (0..m).map(|k| z[i * m + k] * z[k] * cis(-d[k] * dt)).sum())
            .collect(),
    )
}

/// Propagates one flavor of charge `q` in the vector potential `a` for `n_steps`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_flavor(
    phi: &ComplexField,
    charge: f64,
    a: &VectorField,
    veff: &RealField,
    rho: &RealField,
    u: f64,
    dt: f64,
    n_steps: u64,
) -> Result<ComplexField> {
    let prop = FlavorPropagator::new(a, charge, veff, rho, u, dt)?;
    prop.check_core(phi, rho)?;
    let mut out = phi.clone();
    for step in 0..n_steps {
        prop.step(&mut out).map_err(|e| match e {
            Error::Krylov { .. } => Error::Divergence { step },
            other => other,
        })?;
        if !out.all_finite() {
            return Err(Error::Divergence { step });
        }
    }
    prop.check_core(&out, rho)?;
    Ok(out)
}

/// Propagates `(phi_2, phi_3)` with charges `+1` and `-1` in the common gauge field `a`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_two_flavor(
    phi2: &ComplexField,
    phi3: &ComplexField,
    a: &VectorField,
    veff2: &RealField,
    veff3: &RealField,
    rho: &RealField,
    u: f64,
    dt: f64,
    n_steps: u64,
) -> Result<(ComplexField, ComplexField)> {
    Ok((
        evolve_flavor(phi2, 1.0, a, veff2, rho, u, dt, n_steps)?,
        evolve_flavor(phi3, -1.0, a, veff3, rho, u, dt, n_steps)?,
    ))
}
