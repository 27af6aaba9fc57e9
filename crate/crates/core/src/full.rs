//! Full five-component dynamics by symmetric split-step integration.
//!
//! Components are indexed 0..5 for the levels 1..5. Level 1 is the trapped
//! ground state, 2 and 3 the out-coupled ground states, 4 and 5 the excited
//! states. The linear coupling is exponentiated exactly at every point: the
//! couplings form the chain 2 - 4 - 1 - 5 - 3, so the 5x5 Hermitian matrix is
//! tridiagonal in that order and a diagonal phase transform makes it real.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::beams::{xi_ratios, BeamSet};
use crate::error::{Error, Result};
use crate::grid::{cis, ComplexField, RealField, SpectralGrid};
use crate::linalg::tridiagonal_eigen;

pub const COMPONENTS: usize = 5;

/// Loading runs with a dark-state fidelity below this raise a warning.
pub const FIDELITY_FLOOR: f64 = 0.99;

/// Component order along the coupling chain 2 - 4 - 1 - 5 - 3.
const CHAIN: [usize; COMPONENTS] = [1, 3, 0, 4, 2];

#[derive(Debug, Clone)]
pub struct MatterState {
    pub phi: [ComplexField; COMPONENTS],
    /// Common contact strength `4 pi a_0` (hbar = m = 1).
    pub u: f64,
    pub traps: [RealField; COMPONENTS],
    pub t: f64,
    pub steps: u64,
}

impl MatterState {
    pub fn new(phi: [ComplexField; COMPONENTS], u: f64, traps: [RealField; COMPONENTS]) -> Result<Self> {
        let grid = phi[0].grid().clone();
        for f in &phi {
            f.ensure_same_grid(&grid)?;
        }
        for v in &traps {
            v.ensure_same_grid(&grid)?;
        }
        Ok(Self { phi, u, traps, t: 0.0, steps: 0 })
    }

    /// All population in level 1.
    pub fn ground(phi1: ComplexField, u: f64, traps: [RealField; COMPONENTS]) -> Result<Self> {
        let grid = phi1.grid().clone();
        let zero = ComplexField::zeros(&grid);
        Self::new([phi1, zero.clone(), zero.clone(), zero.clone(), zero], u, traps)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.phi[0].grid()
    }

    /// `P_a = int |phi_a|^2 dx dy`.
    pub fn populations(&self) -> [f64; COMPONENTS] {
        core::array::from_fn(|a| self.phi[a].norm())
    }

    pub fn total_norm(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// Ground-manifold density `|phi_1|^2 + |phi_2|^2 + |phi_3|^2`.
    pub fn density(&self) -> RealField {
        let values = (0..self.grid().len())
            .map(|i| (0..3).map(|a| self.phi[a].values()[i].norm_sqr()).sum())
            .collect();
        RealField::from_values(self.grid(), values).expect("length matches grid")
    }
}

/// The pointwise 5x5 coupling Hamiltonian; row `a` is the equation of level `a + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix(pub [[Complex64; COMPONENTS]; COMPONENTS]);

impl CouplingMatrix {
    /// Coupling at a flat grid index with the probes scaled by `probe_scale`.
    pub fn at(beams: &BeamSet, idx: usize, probe_scale: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut h = [[zero; COMPONENTS]; COMPONENTS];
        let d = beams.detunings();
        h[1][1] = Complex64::new(d.eps12, 0.0);
        h[2][2] = Complex64::new(d.eps13, 0.0);
        h[3][3] = Complex64::new(d.eps14, 0.0);
        h[4][4] = Complex64::new(d.eps15, 0.0);
        let p1 = beams.probe(0).values()[idx] * probe_scale;
        let p2 = beams.probe(1).values()[idx] * probe_scale;
        let c1 = beams.control(0).values()[idx];
        let c2 = beams.control(1).values()[idx];
        h[3][0] = p1;
        h[0][3] = p1.conj();
        h[4][0] = p2;
        h[0][4] = p2.conj();
        h[3][1] = c1;
        h[1][3] = c1.conj();
        h[4][2] = c2;
        h[2][4] = c2.conj();
        Self(h)
    }

    pub fn is_hermitian(&self) -> bool {
        (0..COMPONENTS).all(|a| (0..COMPONENTS).all(|b| self.0[a][b] == self.0[b][a].conj()))
    }

    pub fn apply(&self, v: &[Complex64; COMPONENTS]) -> [Complex64; COMPONENTS] {
        core::array::from_fn(|a| (0..COMPONENTS).map(|b| self.0[a][b] * v[b]).sum())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepOptions {
    /// Reproduce the literal level-2/3 mean-field terms `U n phi_1` instead of
    /// `U n phi_2`, `U n phi_3`. Not norm conserving.
    pub strict_paper: bool,
}

/// `exp(-i dt H)` for a Hermitian tridiagonal `H` given by its real diagonal
/// and complex super-diagonal (`off[k] = H[k][k+1]`), applied to `v` in place.
fn chain_exponential(v: &mut [Complex64; COMPONENTS], diag: [f64; COMPONENTS], off: [Complex64; 4], dt: f64) -> bool {
    // H = P T P^dagger with P = diag(u) unitary and T real symmetric
    let mut u = [Complex64::new(1.0, 0.0); COMPONENTS];
    let mut e = [0.0; COMPONENTS];
    for k in 0..4 {
        let a = off[k].norm();
        e[k] = a;
        u[k + 1] = if a > 0.0 { u[k] * off[k].conj() / a } else { u[k] };
    }
    let mut d = diag;
    let mut z = [0.0; COMPONENTS * COMPONENTS];
    for k in 0..COMPONENTS {
        z[k * COMPONENTS + k] = 1.0;
    }
    if !tridiagonal_eigen(&mut d, &mut e, &mut z) {
        return false;
    }
    let w: [Complex64; COMPONENTS] = core::array::from_fn(|k| u[k].conj() * v[k]);
    let mut y = [Complex64::new(0.0, 0.0); COMPONENTS];
    for (m, ym) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..COMPONENTS {
            acc += w[k] * z[k * COMPONENTS + m];
        }
        *ym = acc * cis(-d[m] * dt);
    }
    for k in 0..COMPONENTS {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, ym) in y.iter().enumerate() {
            acc += *ym * z[k * COMPONENTS + m];
        }
        v[k] = u[k] * acc;
    }
    true
}

/// Pointwise coupling, trap, detuning and mean-field step with the probes at
/// full strength.
pub fn local_step(state: &mut MatterState, beams: &BeamSet, dt: f64) -> Result<()> {
    local_step_with(state, beams, dt, 1.0, StepOptions::default())
}

/// Applies `exp(-i dt (H + D))` at every point, `D` being traps plus the mean
/// field frozen at the pre-step density.
pub fn local_step_with(
    state: &mut MatterState,
    beams: &BeamSet,
    dt: f64,
    probe_scale: f64,
    options: StepOptions,
) -> Result<()> {
    let grid = state.grid().clone();
    beams.probe(0).ensure_same_grid(&grid)?;
    let det = beams.detunings();
    let u = state.u;
    let [p1, p2] = [beams.probe(0).values(), beams.probe(1).values()];
    let [c1, c2] = [beams.control(0).values(), beams.control(1).values()];
    let mut finite = true;
    for idx in 0..grid.len() {
        let mut comp: [Complex64; COMPONENTS] = core::array::from_fn(|a| state.phi[a].values()[idx]);
        let n = comp[0].norm_sqr() + comp[1].norm_sqr() + comp[2].norm_sqr();
        let trap = |a: usize| state.traps[a].values()[idx];
        let mean = u * n;
        let (m2, m3) = if options.strict_paper { (0.0, 0.0) } else { (mean, mean) };
        let level_diag = [trap(0) + mean, det.eps12 + trap(1) + m2, det.eps13 + trap(2) + m3, det.eps14 + trap(3), det.eps15 + trap(4)];
        if options.strict_paper {
            // literal U n phi_1 source in the level-2/3 equations; nilpotent, so
            // its exponential is exactly I - i dt M
            let kick = Complex64::new(0.0, -dt * mean) * comp[0];
            comp[1] += kick;
            comp[2] += kick;
        }
        let off = [c1[idx].conj(), p1[idx] * probe_scale, (p2[idx] * probe_scale).conj(), c2[idx]];
        let mut chain: [Complex64; COMPONENTS] = core::array::from_fn(|k| comp[CHAIN[k]]);
        let diag: [f64; COMPONENTS] = core::array::from_fn(|k| level_diag[CHAIN[k]]);
        finite &= chain_exponential(&mut chain, diag, off, dt);
        for k in 0..COMPONENTS {
            let v = chain[k];
            finite &= v.re.is_finite() && v.im.is_finite();
            state.phi[CHAIN[k]].values_mut()[idx] = v;
        }
    }
    if !finite {
        return Err(Error::Divergence { step: state.steps });
    }
    Ok(())
}

/// Strang integrator: half kinetic, local step, half kinetic.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Arc<SpectralGrid>,
    dt: f64,
    half_kinetic: Vec<Complex64>,
    options: StepOptions,
}

impl Propagator {
    pub fn new(grid: &Arc<SpectralGrid>, dt: f64, options: StepOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be positive" });
        }
        // exp(-i (k^2/2) dt/2)
        let half_kinetic = (0..grid.len()).map(|idx| cis(-grid.k_squared(idx) * dt / 4.0)).collect();
        Ok(Self { grid: grid.clone(), dt, half_kinetic, options })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn half_kinetic(&self, state: &mut MatterState) {
        for f in state.phi.iter_mut() {
            let data = f.values_mut();
            self.grid.fft2(data);
            for (v, p) in data.iter_mut().zip(&self.half_kinetic) {
                *v *= p;
            }
            self.grid.ifft2(data);
        }
    }

    pub fn step(&self, state: &mut MatterState, beams: &BeamSet, probe_scale: f64) -> Result<()> {
        state.phi[0].ensure_same_grid(&self.grid)?;
        self.half_kinetic(state);
        local_step_with(state, beams, self.dt, probe_scale, self.options)?;
        self.half_kinetic(state);
        state.t += self.dt;
        state.steps += 1;
        Ok(())
    }
}

/// One Strang step with the probes at full strength.
pub fn step(state: &mut MatterState, beams: &BeamSet, dt: f64) -> Result<()> {
    Propagator::new(state.grid(), dt, StepOptions::default())?.step(state, beams, 1.0)
}

/// Probe switch-on envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ramp {
    /// `sin^2(pi t / 2T)` for `t < T`, then 1.
    SinSquared { duration: f64 },
    /// Probes at full strength from the first step.
    Instant,
}

impl Ramp {
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            Ramp::Instant => 1.0,
            Ramp::SinSquared { duration } => {
                if t >= duration {
                    1.0
                } else if t <= 0.0 {
                    0.0
                } else {
                    let s = libm::sin(core::f64::consts::FRAC_PI_2 * t / duration);
                    s * s
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingReport {
    /// L2 relative error of `(phi_2, phi_3)` against `(-xi_1 phi_1, -xi_2 phi_1)`.
    pub dark_state_error: [f64; 2],
    /// `1 - max(dark_state_error)`.
    pub fidelity: f64,
    /// `P_4 / N`, `P_5 / N` at the end of the run.
    pub excited_fraction: [f64; 2],
    /// `|N_end - N_start| / N_start`.
    pub norm_drift: f64,
    pub adiabaticity_warning: bool,
}

/// L2 relative error of `phi_2`, `phi_3` against the dark-state prediction.
pub fn dark_state_error(state: &MatterState, beams: &BeamSet) -> [f64; 2] {
    let (xi1, xi2) = xi_ratios(beams);
    let phi1 = state.phi[0].values();
    let err = |target: &ComplexField, xi: &ComplexField| {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((t, x), p) in target.values().iter().zip(xi.values()).zip(phi1) {
            let predicted = -x * p;
            num += (t - predicted).norm_sqr();
            den += predicted.norm_sqr();
        }
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            libm::sqrt(num / den)
        }
    };
    [err(&state.phi[1], &xi1), err(&state.phi[2], &xi2)]
}

/// Switches the probes on along `ramp` over `n_steps` steps of `dt`.
pub fn run_adiabatic_loading(
    state: &mut MatterState,
    beams: &BeamSet,
    ramp: Ramp,
    dt: f64,
    n_steps: u64,
    options: StepOptions,
) -> Result<LoadingReport> {
    run_adiabatic_loading_with(state, beams, ramp, dt, n_steps, options, FIDELITY_FLOOR, |_| {})
}

/// As [`run_adiabatic_loading`], calling `observer` after every step.
#[allow(clippy::too_many_arguments)]
pub fn run_adiabatic_loading_with(
    state: &mut MatterState,
    beams: &BeamSet,
    ramp: Ramp,
    dt: f64,
    n_steps: u64,
    options: StepOptions,
    fidelity_floor: f64,
    mut observer: impl FnMut(&MatterState),
) -> Result<LoadingReport> {
    let prop = Propagator::new(state.grid(), dt, options)?;
    let start_norm = state.total_norm();
    let t0 = state.t;
    for _ in 0..n_steps {
        // ramp sampled at the step midpoint keeps the splitting second order
        let scale = ramp.factor(state.t - t0 + 0.5 * dt);
        prop.step(state, beams, scale)?;
        observer(state);
    }
    let end_norm = state.total_norm();
    let dark_state_error = dark_state_error(state, beams);
    let fidelity = 1.0 - dark_state_error[0].max(dark_state_error[1]);
    let pops = state.populations();
    Ok(LoadingReport {
        dark_state_error,
        fidelity,
        excited_fraction: [pops[3] / end_norm, pops[4] / end_norm],
        norm_drift: (end_norm - start_norm).abs() / start_norm,
        adiabaticity_warning: !(fidelity >= fidelity_floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::Detunings;
    use core::f64::consts::PI;

    fn grid() -> Arc<SpectralGrid> {
        SpectralGrid::new(16, 16, 8.0, 8.0).unwrap()
    }

    fn constant_beams(g: &Arc<SpectralGrid>, p: [f64; 2], c: [f64; 2], det: Detunings) -> BeamSet {
        BeamSet::new(
            [RealField::constant(g, p[0]), RealField::constant(g, p[1])],
            [RealField::constant(g, c[0]), RealField::constant(g, c[1])],
            [0, 0],
            [0, 0],
            [[0.0; 2]; 2],
            [[0.0; 2]; 2],
            det,
            1.0,
        )
        .unwrap()
    }

    fn traps(g: &Arc<SpectralGrid>) -> [RealField; 5] {
        core::array::from_fn(|_| RealField::zeros(g))
    }

    fn random_state(g: &Arc<SpectralGrid>) -> MatterState {
        let phi = core::array::from_fn(|a| {
            ComplexField::from_fn(g, |x, y| {
                Complex64::new(libm::sin(x + a as f64), libm::cos(0.5 * y - a as f64)) * libm::exp(-(x * x + y * y) / 8.0)
            })
        });
        MatterState::new(phi, 0.0, traps(g)).unwrap()
    }

    #[test]
    fn coupling_matrix_is_hermitian_with_chain_sparsity() {
        let g = grid();
        let beams = constant_beams(&g, [0.3, 0.2], [2.0, 1.5], Detunings { eps12: 0.1, eps13: -0.2, eps14: 1.0, eps15: 2.0 });
        let h = CouplingMatrix::at(&beams, 5, 1.0);
        assert!(h.is_hermitian());
        let allowed = [(0, 3), (0, 4), (1, 3), (2, 4)];
        for a in 0..5 {
            for b in 0..5 {
                let listed = a == b || allowed.contains(&(a, b)) || allowed.contains(&(b, a));
                if !listed {
                    assert_eq!(h.0[a][b], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(h.0[0][0], Complex64::new(0.0, 0.0));
        assert_eq!(h.0[3][3].re, 1.0);
    }

    #[test]
    fn chain_exponential_matches_taylor_series() {
        // dense exp(-i dt H) by scaling and squaring of a Taylor series
        let diag = [0.3, -1.0, 0.5, 2.0, -0.7];
        let off = [Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.8), Complex64::new(0.0, -1.1), Complex64::new(0.9, 0.0)];
        let dt = 0.37;
        let mut h = [[Complex64::new(0.0, 0.0); 5]; 5];
        for k in 0..5 {
            h[k][k] = Complex64::new(diag[k], 0.0);
        }
        for k in 0..4 {
            h[k][k + 1] = off[k];
            h[k + 1][k] = off[k].conj();
        }
        let v0 = [
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.3, -0.7),
            Complex64::new(0.0, 0.4),
            Complex64::new(0.9, 0.1),
        ];
        let mut reference = v0;
        let sub = 1024;
        for _ in 0..sub {
            let mut term = reference;
            let mut acc = reference;
            for n in 1..12 {
                let next: [Complex64; 5] = core::array::from_fn(|a| {
                    (0..5).map(|b| h[a][b] * term[b]).sum::<Complex64>() * Complex64::new(0.0, -dt / sub as f64 / n as f64)
                });
                term = next;
                for a in 0..5 {
                    acc[a] += term[a];
                }
            }
            reference = acc;
        }
        let mut v = v0;
        assert!(chain_exponential(&mut v, diag, off, dt));
        for a in 0..5 {
            assert!((v[a] - reference[a]).norm() < 1e-12, "{a}: {} vs {}", v[a], reference[a]);
        }
    }

    #[test]
    fn local_step_without_couplings_is_identity() {
        let g = grid();
        let beams = constant_beams(&g, [0.0, 0.0], [1e-20, 1e-20], Detunings::default());
        let mut state = random_state(&g);
        let before = state.clone();
        local_step(&mut state, &beams, 0.3).unwrap();
        for a in 0..5 {
            for (x, y) in state.phi[a].values().iter().zip(before.phi[a].values()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn control_rabi_flop_moves_level2_into_level4() {
        let g = grid();
        let omega = 1.7;
        let beams = constant_beams(&g, [0.0, 0.0], [omega, 1.0], Detunings::default());
        let zero = ComplexField::zeros(&g);
        let phi2 = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0, 0.0));
        let mut state =
            MatterState::new([zero.clone(), phi2, zero.clone(), zero.clone(), zero], 0.0, traps(&g)).unwrap();
        let n0 = state.total_norm();
        // quarter period of the two-level oscillation P_4 = sin^2(Omega t)
        local_step(&mut state, &beams, PI / (2.0 * omega)).unwrap();
        let p = state.populations();
        assert!((p[3] / n0 - 1.0).abs() < 1e-12);
        assert!(p[1] / n0 < 1e-12);
        // and at an intermediate time
        let mut s2 = state.clone();
        s2.phi[3] = ComplexField::zeros(&g);
        s2.phi[1] = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0, 0.0));
        let t = 0.3;
        local_step(&mut s2, &beams, t).unwrap();
        let p = s2.populations();
        assert!((p[3] / n0 - libm::sin(omega * t).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn dark_state_is_stationary() {
        let g = grid();
        let beams = constant_beams(&g, [0.2, 0.15], [2.0, 1.0], Detunings::default());
        let (xi1, xi2) = xi_ratios(&beams);
        let sqrt_rho = ComplexField::from_fn(&g, |x, y| Complex64::new(libm::exp(-(x * x + y * y) / 6.0), 0.0));
        let phi2 = ComplexField::from_values(&g, xi1.values().iter().zip(sqrt_rho.values()).map(|(x, r)| -x * r).collect()).unwrap();
        let phi3 = ComplexField::from_values(&g, xi2.values().iter().zip(sqrt_rho.values()).map(|(x, r)| -x * r).collect()).unwrap();
        let zero = ComplexField::zeros(&g);
        let mut state = MatterState::new([sqrt_rho, phi2, phi3, zero.clone(), zero], 0.0, traps(&g)).unwrap();
        let before = state.clone();
        local_step(&mut state, &beams, 1.3).unwrap();
        for a in 0..5 {
            for (x, y) in state.phi[a].values().iter().zip(before.phi[a].values()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_plane_wave_phase() {
        let g = grid();
        let beams = constant_beams(&g, [0.0, 0.0], [1e-20, 1e-20], Detunings::default());
        let k0 = g.kx()[2];
        let phi1 = ComplexField::from_fn(&g, |x, _| cis(k0 * x));
        let mut state = MatterState::ground(phi1.clone(), 0.0, traps(&g)).unwrap();
        let dt = 0.01;
        for _ in 0..50 {
            step(&mut state, &beams, dt).unwrap();
        }
        let phase = cis(-k0 * k0 * state.t / 2.0);
        for (v, f) in state.phi[0].values().iter().zip(phi1.values()) {
            assert!((v - f * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn free_gaussian_spreading() {
        let g = SpectralGrid::new(128, 128, 40.0, 40.0).unwrap();
        let beams = constant_beams(&g, [0.0, 0.0], [1e-20, 1e-20], Detunings::default());
        let sigma = 1.5f64;
        let phi1 = ComplexField::from_fn(&g, |x, y| Complex64::new(libm::exp(-(x * x + y * y) / (2.0 * sigma * sigma)), 0.0));
        let mut state = MatterState::ground(phi1, 0.0, traps(&g)).unwrap();
        let prop = Propagator::new(&g, 0.01, StepOptions::default()).unwrap();
        for _ in 0..200 {
            prop.step(&mut state, &beams, 1.0).unwrap();
        }
        // <x^2> = sigma(t)^2 / 2 with sigma(t)^2 = sigma^2 (1 + t^2 / sigma^4)
        let n = state.phi[0].norm();
        let x2 = state.phi[0]
            .values()
            .iter()
            .enumerate()
            .map(|(idx, v)| g.position(idx).0.powi(2) * v.norm_sqr())
            .sum::<f64>()
            * g.cell_area()
            / n;
        let t = state.t;
        let expected = sigma * sigma * (1.0 + t * t / sigma.powi(4));
        assert!(((2.0 * x2) / expected - 1.0).abs() < 1e-6, "{} vs {}", 2.0 * x2, expected);
    }

    #[test]
    fn norm_is_conserved_with_nonlinearity() {
        let g = grid();
        let beams = constant_beams(&g, [0.3, 0.2], [2.0, 1.5], Detunings { eps12: 0.1, eps13: 0.0, eps14: 0.5, eps15: -0.3 });
        let mut state = random_state(&g);
        state.u = 2.0;
        let n0 = state.total_norm();
        let prop = Propagator::new(&g, 0.01, StepOptions::default()).unwrap();
        for _ in 0..1000 {
            prop.step(&mut state, &beams, 1.0).unwrap();
        }
        assert!((state.total_norm() - n0).abs() / n0 < 1e-8);
    }

    #[test]
    fn strict_mode_differs_and_divergence_is_reported() {
        let g = grid();
        let beams = constant_beams(&g, [0.3, 0.2], [2.0, 1.5], Detunings::default());
        let mut a = random_state(&g);
        a.u = 1.0;
        let mut b = a.clone();
        local_step_with(&mut a, &beams, 0.1, 1.0, StepOptions::default()).unwrap();
        local_step_with(&mut b, &beams, 0.1, 1.0, StepOptions { strict_paper: true }).unwrap();
        assert!((a.phi[1].values()[40] - b.phi[1].values()[40]).norm() > 1e-6);

        let mut bad = random_state(&g);
        bad.phi[0].values_mut()[3] = Complex64::new(f64::NAN, 0.0);
        bad.steps = 7;
        assert_eq!(local_step(&mut bad, &beams, 0.1), Err(Error::Divergence { step: 7 }));
    }

    #[test]
    fn ramp_shape() {
        let r = Ramp::SinSquared { duration: 2.0 };
        assert_eq!(r.factor(0.0), 0.0);
        assert!((r.factor(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(r.factor(2.0), 1.0);
        assert_eq!(r.factor(5.0), 1.0);
        assert_eq!(Ramp::Instant.factor(0.0), 1.0);
    }
}
