//! The standard vortex out-coupling scenario shared by the run modes and
//! the acceptance suite: a Thomas-Fermi background, LG probes with opposite
//! charge over Gaussian controls, and the three ways of obtaining the
//! out-coupled flavors (full loading, effective evolution, analytic form).

use alloc::sync::Arc;

use crate::beams::{BeamProfile, BeamSet, Detunings, RATIO_MAX};
use crate::diagnostics::{analytic_state, circulation, compare_states, winding, AnalyticPhase, Comparison, LoopSpec, Winding};
use crate::effective::{
    common_gauge_field, effective_potentials, evolve_flavor, solve_traps_least_squares, EffectiveGauge, GaugeMode,
    TrapSolution,
};
use crate::error::{Error, Result};
use crate::full::{run_adiabatic_loading_with, LoadingReport, MatterState, Ramp, StepOptions, FIDELITY_FLOOR};
use crate::grid::{ComplexField, Mask, RealField, SpectralGrid, VectorField};

/// `rho0 (2 w / R) softplus((R^2 - r^2) / (2 R w))`: an inverted parabola
/// `rho0 (1 - r^2/R^2)` in the bulk with a rim of width `w`.
pub fn thomas_fermi_density(grid: &Arc<SpectralGrid>, rho0: f64, radius: f64, rim: f64) -> Result<RealField> {
    if !(rho0 >= 0.0 && radius > 0.0 && rim > 0.0) {
        return Err(Error::InvalidParameter { name: "density", reason: "needs rho0 >= 0, radius > 0, rim > 0" });
    }
    Ok(RealField::from_fn(grid, |x, y| {
        let s = (radius * radius - x * x - y * y) / (2.0 * radius * rim);
        let softplus = if s > 0.0 { s + libm::log1p(libm::exp(-s)) } else { libm::log1p(libm::exp(s)) };
        rho0 * 2.0 * rim / radius * softplus
    }))
}

/// `omega^2 r^2 / 2`.
pub fn harmonic_trap(grid: &Arc<SpectralGrid>, omega: f64) -> RealField {
    RealField::from_fn(grid, |x, y| 0.5 * omega * omega * (x * x + y * y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub probes: [BeamProfile; 2],
    pub controls: [BeamProfile; 2],
    pub detunings: Detunings,
    /// When set, probe peaks are rescaled so that `max |xi_j|` on the grid equals this.
    pub xi_max: Option<f64>,
    pub ratio_limit: f64,
    pub u: f64,
    pub rho0: f64,
    pub tf_radius: f64,
    pub rim_width: f64,
    /// Defaults to `sqrt(2 U rho0) / R`, which balances `V_1 + U rho` in the bulk.
    pub trap_omega: Option<f64>,
    pub dt: f64,
    pub ramp_time: f64,
    /// Defaults to `round(ramp_time / dt)`.
    pub n_steps: Option<u64>,
    pub strict_paper: bool,
    /// Defaults to the radius of the probe-ratio maximum.
    pub loop_radius: Option<f64>,
    pub loop_samples: usize,
}

impl Scenario {
    /// The standard configuration with probe charges `(l, -l)`.
    pub fn standard(l: i32) -> Self {
        Self {
            nx: 128,
            ny: 128,
            lx: 32.0,
            ly: 32.0,
            probes: [BeamProfile::new(1.0, 4.0, l), BeamProfile::new(1.0, 4.0, -l)],
            controls: [BeamProfile::new(40.0, 12.0, 0), BeamProfile::new(40.0, 12.0, 0)],
            detunings: Detunings::default(),
            xi_max: Some(0.05),
            ratio_limit: RATIO_MAX,
            u: 1.0,
            rho0: 1.0,
            tf_radius: 8.0,
            rim_width: 0.4,
            trap_omega: None,
            dt: 0.01,
            ramp_time: 2.0,
            n_steps: None,
            strict_paper: false,
            loop_radius: None,
            loop_samples: 256,
        }
    }

    pub fn steps(&self) -> u64 {
        self.n_steps.unwrap_or_else(|| libm::round(self.ramp_time / self.dt) as u64)
    }

    pub fn trap_frequency(&self) -> f64 {
        self.trap_omega.unwrap_or_else(|| libm::sqrt(2.0 * self.u * self.rho0) / self.tf_radius)
    }

    pub fn build(&self) -> Result<Setup> {
        let grid = SpectralGrid::new(self.nx, self.ny, self.lx, self.ly)?;
        let mut probes = self.probes;
        if let Some(target) = self.xi_max {
            if !(target >= 0.0) {
                return Err(Error::InvalidParameter { name: "xi_max", reason: "must be nonnegative" });
            }
            let unit = BeamSet::from_profiles_with_limit(
                &grid,
                [BeamProfile { peak: 1.0, ..probes[0] }, BeamProfile { peak: 1.0, ..probes[1] }],
                self.controls,
                self.detunings,
                f64::INFINITY,
            )?;
            for (j, p) in probes.iter_mut().enumerate() {
                let m = unit.ratio_amplitude(j).max_abs();
                if !(m > 0.0) {
                    return Err(Error::InvalidParameter { name: "xi_max", reason: "probe profile vanishes on the grid" });
                }
                p.peak = target / m;
            }
        }
        // the scaled peaks reach the target to rounding
        let limit = self.ratio_limit * (1.0 + 1e-12);
        let beams = BeamSet::from_profiles_with_limit(&grid, probes, self.controls, self.detunings, limit)?;
        let rho = thomas_fermi_density(&grid, self.rho0, self.tf_radius, self.rim_width)?;
        let v1 = harmonic_trap(&grid, self.trap_frequency());
        let gauge = EffectiveGauge::from_beams(&beams, GaugeMode::Hermitian)?;
        let (eps21, eps31) = (self.detunings.eps12, self.detunings.eps13);
        let trap_solution = solve_traps_least_squares(&v1, &gauge, eps21, eps31)?;
        let veff = effective_potentials(&gauge, [&v1, &trap_solution.v2, &trap_solution.v3], eps21, eps31)?;
        let zero = RealField::zeros(&grid);
        let traps = [v1, trap_solution.v2.clone(), trap_solution.v3.clone(), zero.clone(), zero];
        let l = probes[0].l - self.controls[0].l;
        let common_a = common_gauge_field(&grid, l, Mask::default_core_radius(&grid));
        let radius = match self.loop_radius {
            Some(r) => r,
            None => {
                let ratio = beams.ratio_amplitude(0);
                let (idx, _) = ratio
                    .values()
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
                let r = grid.r_map()[idx];
                if r > 3.0 * grid.dx().max(grid.dy()) {
                    r
                } else {
                    0.5 * self.tf_radius
                }
            }
        };
        let loop_spec = LoopSpec::new(&grid, [0.0, 0.0], radius, self.loop_samples)?;
        Ok(Setup { scenario: self.clone(), grid, beams, rho, traps, gauge, trap_solution, veff, common_a, l, loop_spec })
    }
}

/// Everything derived from a [`Scenario`] before time stepping.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub grid: Arc<SpectralGrid>,
    pub beams: BeamSet,
    pub rho: RealField,
    pub traps: [RealField; 5],
    pub gauge: EffectiveGauge,
    pub trap_solution: TrapSolution,
    pub veff: [RealField; 3],
    /// `l grad phi` for the probe-1 charge `l`.
    pub common_a: VectorField,
    pub l: i32,
    pub loop_spec: LoopSpec,
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub state: MatterState,
    pub report: LoadingReport,
}

#[derive(Debug, Clone)]
pub struct FlavorRun {
    pub phi: [ComplexField; 2],
    pub norm_drift: [f64; 2],
}

impl Setup {
    pub fn duration(&self) -> f64 {
        self.scenario.steps() as f64 * self.scenario.dt
    }

    /// All atoms in level 1 with amplitude `sqrt(rho)`.
    pub fn initial_state(&self) -> Result<MatterState> {
        let phi1 = self.rho.to_complex().map(|v| v.sqrt());
        MatterState::ground(phi1, self.scenario.u, self.traps.clone())
    }

    pub fn run_full(&self, observer: impl FnMut(&MatterState)) -> Result<FullRun> {
        self.run_full_from(self.initial_state()?, observer)
    }

    /// Loads the probes into `state`, which must live on the setup grid.
    pub fn run_full_from(&self, mut state: MatterState, observer: impl FnMut(&MatterState)) -> Result<FullRun> {
        state.phi[0].ensure_same_grid(&self.grid)?;
        let s = &self.scenario;
        let report = run_adiabatic_loading_with(
            &mut state,
            &self.beams,
            Ramp::SinSquared { duration: s.ramp_time },
            s.dt,
            s.steps(),
            StepOptions { strict_paper: s.strict_paper },
            FIDELITY_FLOOR,
            observer,
        )?;
        Ok(FullRun { state, report })
    }

    pub fn analytic_phase(&self, flavor: usize) -> AnalyticPhase {
        let charge = if flavor == 0 { 1 } else { -1 };
        AnalyticPhase { recoil: self.beams.recoil(flavor), ..AnalyticPhase::new(charge, self.l) }
    }

    /// The analytic flavors at time `t`, including the residual effective potentials.
    pub fn analytic(&self, t: f64) -> Result<[ComplexField; 2]> {
        let make = |j: usize| {
            analytic_state(&self.analytic_phase(j), &self.beams, j, &self.rho, Some(&self.veff[j + 1]), self.scenario.u, t)
        };
        Ok([make(0)?, make(1)?])
    }

    /// Evolves one flavor (0 for charge +1, 1 for charge -1) from its analytic
    /// initial state over the run duration.
    pub fn run_flavor(&self, flavor: usize) -> Result<(ComplexField, f64)> {
        let s = &self.scenario;
        let start = self.analytic(0.0)?;
        let charge = if flavor == 0 { 1.0 } else { -1.0 };
        let phi0 = &start[flavor];
        let out = evolve_flavor(phi0, charge, &self.common_a, &self.veff[flavor + 1], &self.rho, s.u, s.dt, s.steps())?;
        let n0 = phi0.norm();
        let drift = if n0 > 0.0 { (out.norm() - n0).abs() / n0 } else { 0.0 };
        Ok((out, drift))
    }

    pub fn run_effective(&self) -> Result<FlavorRun> {
        let (a, da) = self.run_flavor(0)?;
        let (b, db) = self.run_flavor(1)?;
        Ok(FlavorRun { phi: [a, b], norm_drift: [da, db] })
    }

    pub fn comparison_mask(&self) -> Mask {
        self.gauge.mask.clone()
    }

    /// Assembles the comparison report from completed runs.
    pub fn compare(&self, full: &FullRun, effective: &FlavorRun) -> Result<CompareReport> {
        let t = full.state.t;
        let analytic = self.analytic(t)?;
        let mask = self.comparison_mask();
        let lp = self.loop_spec;
        let loops = [lp];
        let full_phi = [&full.state.phi[1], &full.state.phi[2]];
        let flavor = |j: usize| -> Result<FlavorComparison> {
            Ok(FlavorComparison {
                expected_winding: if j == 0 { self.l as i64 } else { -(self.l as i64) },
                full_winding: winding(full_phi[j], &lp)?,
                full_circulation: circulation(full_phi[j], &lp)?,
                effective_winding: winding(&effective.phi[j], &lp)?,
                effective_circulation: circulation(&effective.phi[j], &lp)?,
                analytic_winding: winding(&analytic[j], &lp)?,
                full_vs_analytic: compare_states(&analytic[j], full_phi[j], &mask, &loops)?,
                effective_vs_analytic: compare_states(&analytic[j], &effective.phi[j], &mask, &loops)?,
                full_vs_effective: compare_states(&effective.phi[j], full_phi[j], &mask, &loops)?,
            })
        };
        let (f2, f3) = (flavor(0)?, flavor(1)?);
        Ok(CompareReport {
            time: t,
            loop_spec: lp,
            loading: full.report.clone(),
            effective_norm_drift: effective.norm_drift,
            flavors: [f2, f3],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlavorComparison {
    pub expected_winding: i64,
    pub full_winding: Winding,
    pub full_circulation: f64,
    pub effective_winding: Winding,
    pub effective_circulation: f64,
    pub analytic_winding: Winding,
    pub full_vs_analytic: Comparison,
    pub effective_vs_analytic: Comparison,
    pub full_vs_effective: Comparison,
}

impl FlavorComparison {
    pub fn windings_ok(&self) -> bool {
        self.full_winding.winding == self.expected_winding
            && self.effective_winding.winding == self.expected_winding
            && self.analytic_winding.winding == self.expected_winding
    }

    /// Largest deviation of the full and effective circulations from `2 pi w`.
    pub fn circulation_error(&self) -> f64 {
        let target = 2.0 * core::f64::consts::PI * self.expected_winding as f64;
        (self.full_circulation - target).abs().max((self.effective_circulation - target).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub time: f64,
    pub loop_spec: LoopSpec,
    pub loading: LoadingReport,
    pub effective_norm_drift: [f64; 2],
    /// Flavor 2 (charge +1), flavor 3 (charge -1).
    pub flavors: [FlavorComparison; 2],
}

/// Runs the full loading and the effective evolution and compares both with
/// the analytic vortex states.
pub fn run_compare(scenario: &Scenario) -> Result<CompareReport> {
    let setup = scenario.build()?;
    let full = setup.run_full(|_| {})?;
    let effective = setup.run_effective()?;
    setup.compare(&full, &effective)
}
