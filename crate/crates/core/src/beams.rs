//! The four laser fields and the dark-state ratio functions built from them.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cis, gradient, ComplexField, RealField, SpectralGrid};

/// Default upper bound on the probe/control amplitude ratio.
pub const RATIO_MAX: f64 = 0.3;
/// Ratios above this are accepted but flagged.
pub const RATIO_WARN: f64 = 0.1;
/// Smallest control amplitude allowed under a division.
pub const CONTROL_FLOOR: f64 = 1e-30;
/// Points with `|xi|` below this fraction of the peak are masked in [`validity_metric`].
pub const XI_FLOOR: f64 = 1e-12;

/// Phase gradients below this fraction of the box fundamental wavenumber count as zero.
pub const PHASE_GRADIENT_FLOOR: f64 = 1e-10;

/// Transverse profile of one beam: `peak (r/waist)^|l| exp(-r^2/waist^2)`
/// carrying the phase `exp(i(l phi + k.r))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProfile {
    pub peak: f64,
    pub waist: f64,
    pub l: i32,
    pub k: [f64; 2],
}

impl BeamProfile {
    pub fn new(peak: f64, waist: f64, l: i32) -> Self {
        Self { peak, waist, l, k: [0.0; 2] }
    }
}

/// Detuning energies in units of hbar.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Detunings {
    /// two-photon, level 2
    pub eps12: f64,
    /// two-photon, level 3
    pub eps13: f64,
    /// single-photon, level 4
    pub eps14: f64,
    /// single-photon, level 5
    pub eps15: f64,
}

/// Lowest radial Laguerre-Gaussian amplitude `peak (r/w)^|l| exp(-r^2/w^2)`.
pub fn lg_amplitude(grid: &Arc<SpectralGrid>, l: i32, waist: f64, peak: f64) -> Result<RealField> {
    if !(waist > 0.0) {
        return Err(Error::InvalidParameter { name: "waist", reason: "must be positive" });
    }
    let order = l.unsigned_abs() as i32;
    let values = grid
        .r_map()
        .iter()
        .map(|&r| {
            let s = r / waist;
            peak * libm::pow(s, order as f64) * libm::exp(-s * s)
        })
        .collect();
    RealField::from_values(grid, values)
}

/// Position of the maximum of the LG amplitude and its value: `r^2 = |l| w^2 / 2`.
pub fn lg_peak(l: i32, waist: f64, peak: f64) -> (f64, f64) {
    let order = l.unsigned_abs() as f64;
    let r = waist * libm::sqrt(order / 2.0);
    let s = r / waist;
    (r, peak * libm::pow(s, order) * libm::exp(-s * s))
}

/// `amp exp(i(l phi + k.r))` pointwise.
pub fn rabi_field(amp: &RealField, l: i32, k: [f64; 2]) -> ComplexField {
    let grid = amp.grid().clone();
    let values = amp
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let (x, y) = grid.position(idx);
            a * cis(l as f64 * grid.phi_map()[idx] + k[0] * x + k[1] * y)
        })
        .collect();
    ComplexField::from_values(&grid, values).expect("length matches grid")
}

/// Two probes (indices 0, 1 for the p1, p2 beams) and two controls.
#[derive(Debug, Clone)]
pub struct BeamSet {
    probe_amp: [RealField; 2],
    control_amp: [RealField; 2],
    probe_l: [i32; 2],
    control_l: [i32; 2],
    kp: [[f64; 2]; 2],
    kc: [[f64; 2]; 2],
    detunings: Detunings,
    probe: [ComplexField; 2],
    control: [ComplexField; 2],
    max_ratio: f64,
}

impl BeamSet {
    /// Builds the beam set from amplitude profiles, checking that controls
    /// stay above [`CONTROL_FLOOR`] and that the probe/control ratio stays
    /// below `ratio_max` everywhere.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        probe_amp: [RealField; 2],
        control_amp: [RealField; 2],
        probe_l: [i32; 2],
        control_l: [i32; 2],
        kp: [[f64; 2]; 2],
        kc: [[f64; 2]; 2],
        detunings: Detunings,
        ratio_max: f64,
    ) -> Result<Self> {
        let grid = probe_amp[0].grid().clone();
        for f in probe_amp.iter().chain(control_amp.iter()) {
            f.ensure_same_grid(&grid)?;
        }
        if probe_amp.iter().any(|f| f.values().iter().any(|v| !(*v >= 0.0))) {
            return Err(Error::InvalidParameter { name: "probe amplitude", reason: "must be nonnegative" });
        }
        let mut max_ratio = 0.0f64;
        for j in 0..2 {
            for (idx, (&p, &c)) in probe_amp[j].values().iter().zip(control_amp[j].values()).enumerate() {
                let (i, jj) = grid.coords(idx);
                if !(c >= CONTROL_FLOOR) {
                    return Err(Error::ControlVanishes { i, j: jj, value: c });
                }
                let ratio = p / c;
                if ratio > ratio_max {
                    return Err(Error::WeakProbeViolation { i, j: jj, ratio, limit: ratio_max });
                }
                max_ratio = max_ratio.max(ratio);
            }
        }
        let probe = [
            rabi_field(&probe_amp[0], probe_l[0], kp[0]),
            rabi_field(&probe_amp[1], probe_l[1], kp[1]),
        ];
        let control = [
            rabi_field(&control_amp[0], control_l[0], kc[0]),
            rabi_field(&control_amp[1], control_l[1], kc[1]),
        ];
        Ok(Self { probe_amp, control_amp, probe_l, control_l, kp, kc, detunings, probe, control, max_ratio })
    }

    /// LG probes and controls built from [`BeamProfile`]s with the default ratio limit.
    pub fn from_profiles(
        grid: &Arc<SpectralGrid>,
        probes: [BeamProfile; 2],
        controls: [BeamProfile; 2],
        detunings: Detunings,
    ) -> Result<Self> {
        Self::from_profiles_with_limit(grid, probes, controls, detunings, RATIO_MAX)
    }

    pub fn from_profiles_with_limit(
        grid: &Arc<SpectralGrid>,
        probes: [BeamProfile; 2],
        controls: [BeamProfile; 2],
        detunings: Detunings,
        ratio_max: f64,
    ) -> Result<Self> {
        let amp = |b: &BeamProfile| lg_amplitude(grid, b.l, b.waist, b.peak);
        Self::new(
            [amp(&probes[0])?, amp(&probes[1])?],
            [amp(&controls[0])?, amp(&controls[1])?],
            [probes[0].l, probes[1].l],
            [controls[0].l, controls[1].l],
            [probes[0].k, probes[1].k],
            [controls[0].k, controls[1].k],
            detunings,
            ratio_max,
        )
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.probe_amp[0].grid()
    }

    /// Complex probe Rabi frequency for pair `j` (0 or 1).
    pub fn probe(&self, j: usize) -> &ComplexField {
        &self.probe[j]
    }

    pub fn control(&self, j: usize) -> &ComplexField {
        &self.control[j]
    }

    pub fn probe_amplitude(&self, j: usize) -> &RealField {
        &self.probe_amp[j]
    }

    pub fn control_amplitude(&self, j: usize) -> &RealField {
        &self.control_amp[j]
    }

    pub fn probe_l(&self, j: usize) -> i32 {
        self.probe_l[j]
    }

    pub fn control_l(&self, j: usize) -> i32 {
        self.control_l[j]
    }

    pub fn probe_k(&self, j: usize) -> [f64; 2] {
        self.kp[j]
    }

    pub fn control_k(&self, j: usize) -> [f64; 2] {
        self.kc[j]
    }

    /// In-plane recoil wavevector `k_p - k_c` of pair `j`.
    pub fn recoil(&self, j: usize) -> [f64; 2] {
        [self.kp[j][0] - self.kc[j][0], self.kp[j][1] - self.kc[j][1]]
    }

    pub fn detunings(&self) -> Detunings {
        self.detunings
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    /// True when the probes are above [`RATIO_WARN`] of the controls somewhere.
    pub fn weak_probe_warning(&self) -> bool {
        self.max_ratio > RATIO_WARN
    }

    /// `Omega_p^(0) / Omega_c^(0)` for pair `j`.
    pub fn ratio_amplitude(&self, j: usize) -> RealField {
        let values = self.probe_amp[j].values().iter().zip(self.control_amp[j].values()).map(|(p, c)| p / c).collect();
        RealField::from_values(self.grid(), values).expect("length matches grid")
    }

    /// The phase `R_j = (k_p - k_c).r + (l_p - l_c) phi`.
    pub fn ratio_phase(&self, j: usize) -> RealField {
        let grid = self.grid();
        let k = self.recoil(j);
        let dl = (self.probe_l[j] - self.control_l[j]) as f64;
        RealField::from_fn(grid, |x, y| k[0] * x + k[1] * y + dl * libm::atan2(y, x))
    }
}

/// Dark-state ratios `xi_j = (Omega_p^(0)/Omega_c^(0)) exp(i R_j)`; the dark
/// state is `(phi_1, phi_2, phi_3) ~ (1, -xi_1, -xi_2)`.
pub fn xi_ratios(beams: &BeamSet) -> (ComplexField, ComplexField) {
    let grid = beams.grid();
    let make = |j: usize| {
        let k = beams.recoil(j);
        let dl = (beams.probe_l[j] - beams.control_l[j]) as f64;
        let values: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                let ratio = beams.probe_amp[j].values()[idx] / beams.control_amp[j].values()[idx];
                ratio * cis(k[0] * x + k[1] * y + dl * grid.phi_map()[idx])
            })
            .collect();
        ComplexField::from_values(grid, values).expect("length matches grid")
    };
    (make(0), make(1))
}

/// Pointwise `|grad |xi|^2| / (|xi|^2 |grad R|)`; small values license the
/// Hermitian (phase-only) gauge potentials.
///
/// Points with `|xi|` below [`XI_FLOOR`] of the peak are NaN; points whose
/// phase gradient is below [`PHASE_GRADIENT_FLOOR`] are `+inf`.
pub fn validity_metric(xi: &ComplexField) -> RealField {
    let grid = xi.grid();
    let (gx, gy) = gradient(xi);
    let floor = XI_FLOOR * xi.max_abs();
    let k_min = 2.0 * core::f64::consts::PI / grid.lx().max(grid.ly());
    let values = (0..grid.len())
        .map(|idx| {
            let z = xi.values()[idx];
            if z.norm() < floor || z.norm() == 0.0 {
                return f64::NAN;
            }
            // xi* grad xi = (1/2) grad|xi|^2 + i |xi|^2 grad R
            let px = z.conj() * gx.values()[idx];
            let py = z.conj() * gy.values()[idx];
            let num = 2.0 * libm::hypot(px.re, py.re);
            let den = libm::hypot(px.im, py.im);
            if den <= PHASE_GRADIENT_FLOOR * k_min * z.norm_sqr() {
                f64::INFINITY
            } else {
                num / den
            }
        })
        .collect();
    RealField::from_values(grid, values).expect("length matches grid")
}
