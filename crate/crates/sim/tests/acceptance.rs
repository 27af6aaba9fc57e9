//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rustfft::FftPlanner;

use vxsim::config::{Mode, SimConfig};
use vxsim::run::{run, RunOptions};
use vxsim_core::beams::{lg_peak, BeamProfile, BeamSet, Detunings};
use vxsim_core::diagnostics::{winding, LoopSpec};
use vxsim_core::effective::{
    effective_potentials, evolve_flavor, gauge_potentials, solve_traps, EffectiveGauge, GaugeMode,
};
use vxsim_core::outcoupling::{delay, group_velocity, output_map, EnvelopeHistory, OutcouplingParams, OutputPhase};
use vxsim_core::scenario::Scenario;
use vxsim_core::{Complex64, ComplexField, ComplexVectorField, Error, Mask, RealField, SpectralGrid, VectorField};

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn number(report: &vxsim::report::Report, key: &str) -> f64 {
    report.get(key).unwrap_or_else(|| panic!("report lacks {key}")).parse().unwrap()
}

fn flag(report: &vxsim::report::Report, key: &str) -> bool {
    report.get(key).unwrap_or_else(|| panic!("report lacks {key}")) == "true"
}

/// Compare-mode runs for l = 1 and l = 2, shared by the circulation and
/// agreement criteria.
fn compare_runs() -> Vec<(i32, vxsim::run::RunOutcome, Duration)> {
    [1, 2]
        .into_iter()
        .map(|l| {
            let dir = tempfile::tempdir().unwrap();
            let mut c = SimConfig::default();
            c.run.mode = Mode::Compare;
            c.beams.probe[0].l = l;
            c.beams.probe[1].l = -l;
            c.run.output_dir = dir.path().join("out");
            let start = Instant::now();
            let outcome = run(&c, RunOptions { threads: threads() }).unwrap();
            (l, outcome, start.elapsed())
        })
        .collect()
}

fn circulation_quantization(runs: &[(i32, vxsim::run::RunOutcome, Duration)]) -> Outcome {
    let mut o = Outcome::new();
    for (l, outcome, elapsed) in runs {
        let r = &outcome.report;
        o.check(outcome.failures.is_empty(), format!("l = {l}: run invariants hold {:?}", outcome.failures));
        for (flavor, sign) in [(2, 1), (3, -1)] {
            let expected = sign * l;
            for source in ["full", "effective"] {
                let key = format!("compare.flavor{flavor}.{source}");
                let w = number(r, &format!("{key}.winding")) as i32;
                let c = number(r, &format!("{key}.circulation"));
                let target = 2.0 * PI * expected as f64;
                o.check(w == expected, format!("l = {l}: {source} flavor {flavor} winding {w} (want {expected})"));
                o.check(
                    (c - target).abs() <= 1e-3,
                    format!("l = {l}: {source} flavor {flavor} circulation {c:.9} vs {target:.9}, error {:.2e} <= 1e-3", (c - target).abs()),
                );
            }
        }
        o.check(elapsed.as_secs_f64() <= 120.0, format!("l = {l}: runtime {:.1} s <= 120 s at 128^2", elapsed.as_secs_f64()));
    }
    o
}

fn max_norm(f: &ComplexVectorField, mask: &Mask) -> f64 {
    (0..f.x.values().len())
        .filter(|&i| mask.contains(i))
        .map(|i| (f.x.values()[i].norm_sqr() + f.y.values()[i].norm_sqr()).sqrt())
        .fold(0.0, f64::max)
}

fn max_sum(a: &ComplexVectorField, b: &ComplexVectorField, mask: &Mask) -> f64 {
    (0..a.x.values().len())
        .filter(|&i| mask.contains(i))
        .map(|i| ((a.x.values()[i] + b.x.values()[i]).norm_sqr() + (a.y.values()[i] + b.y.values()[i]).norm_sqr()).sqrt())
        .fold(0.0, f64::max)
}

fn gauge_degeneracy() -> Outcome {
    let mut o = Outcome::new();
    let mut s = Scenario::standard(1);
    s.nx = 256;
    s.ny = 256;
    let setup = s.build().unwrap();
    let (r1, r2) = (setup.beams.ratio_amplitude(0), setup.beams.ratio_amplitude(1));
    let equal = r1.values().iter().zip(r2.values()).all(|(a, b)| a == b);
    o.check(equal, "ratio magnitudes equal pointwise, l1 = -l2 = 1, zero tilts".into());

    let analytic = &setup.gauge;
    let full = EffectiveGauge::from_beams(&setup.beams, GaugeMode::Full).unwrap();
    let spectral = gauge_potentials(&full.xi1, &full.xi2, GaugeMode::Hermitian, &full.mask).unwrap();
    // spectral cross-check where the condensate lives; far tails hold |xi| ~ 1e-11
    // of its peak, where FFT rounding divided by xi dominates
    let reach = s.tf_radius + 4.0 * s.rim_width;
    let cloud = full.mask.intersect(&Mask::from_fn(&setup.grid, |i| setup.grid.r_map()[i] <= reach));
    for (name, a, mask) in [("phase-gradient", &analytic.a, &analytic.mask), ("spectral, on the cloud", &spectral, &cloud)] {
        let a2 = max_norm(&a[1], mask);
        let a1 = max_norm(&a[0], mask);
        let sum = max_sum(&a[1], &a[2], mask);
        o.check(a2 > 0.0, format!("{name}: max|A2| = {a2:.6}"));
        o.check(a1 <= 1e-10 * a2, format!("{name}: max|A1| / max|A2| = {:.2e} <= 1e-10", a1 / a2));
        o.check(sum <= 1e-10 * a2, format!("{name}: max|A2 + A3| / max|A2| = {:.2e} <= 1e-10", sum / a2));
    }
    o
}

fn dark_state_fidelity() -> Outcome {
    let mut o = Outcome::new();
    let mut s = Scenario::standard(1);
    s.xi_max = Some(0.1);
    s.ramp_time = 2.5;
    let setup = s.build().unwrap();
    // weakest control anywhere the condensate has density
    let reach = s.tf_radius + 4.0 * s.rim_width;
    let omega_min = (0..setup.grid.len())
        .filter(|&i| setup.grid.r_map()[i] <= reach)
        .map(|i| setup.beams.control_amplitude(0).values()[i].min(setup.beams.control_amplitude(1).values()[i]))
        .fold(f64::INFINITY, f64::min);
    o.check(setup.beams.max_ratio() <= 0.1 + 1e-12, format!("max |xi| = {:.4} <= 0.1", setup.beams.max_ratio()));
    o.check(
        s.ramp_time * omega_min >= 50.0,
        format!("ramp {} x min Omega_c {omega_min:.2} on the cloud = {:.1} >= 50", s.ramp_time, s.ramp_time * omega_min),
    );
    let full = setup.run_full(|_| {}).unwrap();
    let r = &full.report;
    let err = r.dark_state_error[0].max(r.dark_state_error[1]);
    let excited = r.excited_fraction[0] + r.excited_fraction[1];
    o.check(err < 1e-2, format!("L2 error of phi2, phi3 vs -xi phi1: {:.3e}, {:.3e} < 1e-2", r.dark_state_error[0], r.dark_state_error[1]));
    o.check(excited < 1e-4, format!("(P4 + P5) / N = {excited:.3e} < 1e-4"));
    o
}

fn full_vs_effective(runs: &[(i32, vxsim::run::RunOutcome, Duration)]) -> Outcome {
    let mut o = Outcome::new();
    let (_, outcome, _) = &runs[0];
    let r = &outcome.report;
    o.check(number(r, "beams.max_ratio") <= 0.05 + 1e-12, format!("max |xi| = {}", number(r, "beams.max_ratio")));
    for flavor in [2, 3] {
        let key = format!("compare.flavor{flavor}.full_vs_analytic");
        let l2 = number(r, &format!("{key}.l2_relative"));
        o.check(l2 < 5e-2, format!("l = 1 flavor {flavor}: full vs analytic L2 {l2:.4e} < 5e-2"));
        o.check(flag(r, &format!("{key}.windings_agree")), format!("l = 1 flavor {flavor}: full and analytic windings agree"));
        o.check(
            flag(r, &format!("compare.flavor{flavor}.windings_ok")),
            format!("l = 1 flavor {flavor}: full, effective, analytic windings all equal the expected charge"),
        );
    }
    o
}

fn l2_distance(a: &[ComplexField], b: &[ComplexField]) -> f64 {
    let (mut d, mut n) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.values().iter().zip(y.values()) {
            d += (p - q).norm_sqr();
            n += q.norm_sqr();
        }
    }
    (d / n).sqrt()
}

/// Free evolution by an independent FFT: `exp(-i k^2 t / 2)` in Fourier space.
fn free_reference(f: &ComplexField, t: f64) -> ComplexField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut planner = FftPlanner::new();
    let (fx, fy) = (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny));
    let (ix, iy) = (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny));
    let mut data = f.values().to_vec();
    let transform = |data: &mut Vec<Complex64>, along_x: &dyn rustfft::Fft<f64>, along_y: &dyn rustfft::Fft<f64>| {
        for row in data.chunks_exact_mut(nx) {
            along_x.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            along_y.process(&mut col);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    };
    transform(&mut data, fx.as_ref(), fy.as_ref());
    let wave = |m: usize, n: usize, l: f64| 2.0 * PI / l * if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
    for j in 0..ny {
        for i in 0..nx {
            let k2 = wave(i, nx, g.lx()).powi(2) + wave(j, ny, g.ly()).powi(2);
            data[j * nx + i] *= Complex64::from_polar(1.0, -0.5 * k2 * t);
        }
    }
    transform(&mut data, ix.as_ref(), iy.as_ref());
    let scale = 1.0 / (nx * ny) as f64;
    ComplexField::from_values(g, data.into_iter().map(|v| v * scale).collect()).unwrap()
}

fn numerical_integrity() -> Outcome {
    let mut o = Outcome::new();
    let limit = 1e-8;

    let mut s = Scenario::standard(1);
    s.n_steps = Some(1000);
    let setup = s.build().unwrap();
    let full = setup.run_full(|_| {}).unwrap();
    o.check(full.report.norm_drift < limit, format!("full: norm drift over 1000 steps {:.2e} < 1e-8", full.report.norm_drift));
    let (_, drift) = setup.run_flavor(0).unwrap();
    o.check(drift < limit, format!("effective flavor 2: norm drift over 1000 steps {drift:.2e} < 1e-8"));

    let final_state = |dt: f64| {
        let mut s = Scenario::standard(1);
        s.dt = dt;
        let setup = s.build().unwrap();
        setup.run_full(|_| {}).unwrap().state.phi.to_vec()
    };
    let dt = Scenario::standard(1).dt;
    let reference = final_state(dt / 8.0);
    let e1 = l2_distance(&final_state(dt), &reference);
    let e2 = l2_distance(&final_state(dt / 2.0), &reference);
    let factor = e1 / e2;
    o.check(
        (3.5..=4.5).contains(&factor),
        format!("Strang: error(dt) / error(dt/2) = {e1:.3e} / {e2:.3e} = {factor:.3} in [3.5, 4.5] (reference dt/8)"),
    );

    let g = SpectralGrid::new(64, 64, 24.0, 24.0).unwrap();
    let a0 = 2.0 * PI * 3.0 / 24.0;
    let phi = ComplexField::from_fn(&g, |x, y| cis(0.4 * x) * (-((x + 2.0).powi(2) + y * y) / 4.0).exp());
    let zero = RealField::zeros(&g);
    let mut a = VectorField::zeros(&g);
    a.x = RealField::constant(&g, a0);
    let (step, n) = (0.05, 40);
    let mut worst: f64 = 0.0;
    for q in [1.0, -1.0] {
        let out = evolve_flavor(&phi, q, &a, &zero, &zero, 0.0, step, n).unwrap();
        let shifted = ComplexField::from_fn(&g, |x, _| cis(-q * a0 * x)).values().iter().zip(phi.values()).map(|(p, v)| p * v).collect();
        let free = free_reference(&ComplexField::from_values(&g, shifted).unwrap(), step * n as f64);
        for (idx, (v, f)) in out.values().iter().zip(free.values()).enumerate() {
            let x = g.position(idx).0;
            worst = worst.max((v - f * cis(q * a0 * x)).norm());
        }
    }
    o.check(worst < 1e-8, format!("constant-A gauge oracle: max deviation {worst:.2e} < 1e-8"));
    o
}

fn outcoupling() -> Outcome {
    let mut o = Outcome::new();
    let c = 1.0;
    let cases = [
        (group_velocity(0.0, 5.0, 1.0, 0.1, c).unwrap(), c, "g = 0 gives c"),
        (group_velocity(f64::INFINITY, 1.0, 1.0, 0.1, c).unwrap(), 0.1, "infinite coupling gives v0"),
        (group_velocity(1.0, 1.0, 1.0, 0.5, c).unwrap(), 0.75, "x = 1, v0 = c/2 gives 3c/4"),
        (group_velocity(2.0, 0.25, 1.0, 1.0, 2.0).unwrap(), 1.5, "x = 1, c = 2, v0 = 1 gives 3/2"),
    ];
    for (got, want, what) in cases {
        o.check(got == want, format!("V_g {what}: {got} == {want}"));
    }

    let params = SimConfig::default().outcoupling_params();
    for j in 0..2 {
        let tau = delay(&params, j).unwrap();
        let (lo, hi) = (params.length / params.c, params.length / params.v0);
        o.check(lo <= tau && tau <= hi, format!("flavor {}: {lo} <= tau = {tau:.6} <= {hi}", j + 2));
    }

    for l in [1, 2] {
        let mut s = Scenario::standard(l);
        s.nx = 64;
        s.ny = 64;
        let setup = s.build().unwrap();
        let params = OutcouplingParams { g: [0.7, 1.3], omega0: [1.0, 1.5], n: 50.0, v0: 0.02, c: 1.0, length: 2.0 };
        for j in 0..2 {
            let profile = setup.beams.probe_amplitude(j).to_complex();
            let width = 1.5;
            let frame_dt = 0.25;
            let frames: Vec<ComplexField> =
                (0..41).map(|k| profile.map(|v| v * (-0.5 * ((k as f64 * frame_dt - 5.0) / width).powi(2)).exp())).collect();
            let history = EnvelopeHistory::new(0.0, frame_dt, frames).unwrap();
            let tau = delay(&params, j).unwrap();
            let times: Vec<f64> = (0..41).map(|k| tau + k as f64 * frame_dt).collect();
            let phase = OutputPhase::from_analytic(&setup.analytic_phase(j));
            let out = output_map(&history, &params, j, &phase, &times).unwrap();
            let flux_in: f64 = history.frames.iter().map(|f| f.norm()).sum::<f64>() * params.c;
            let flux_out: f64 = out.iter().map(|f| f.norm()).sum::<f64>() * params.v0;
            let rel = (flux_out - flux_in).abs() / flux_in;
            o.check(rel < 1e-8, format!("l = {l} flavor {}: flux mismatch {rel:.2e} < 1e-8", j + 2));
            let probe = s.probes[j];
            let (r, _) = lg_peak(probe.l, probe.waist, 1.0);
            let lp = LoopSpec::new(&setup.grid, [0.0, 0.0], r, 256).unwrap();
            let w = winding(&out[20], &lp).unwrap().winding;
            let expected = if j == 0 { l as i64 } else { -(l as i64) };
            o.check(w == expected, format!("l = {l} flavor {}: output winding {w} == probe OAM {expected}", j + 2));
        }
    }
    o
}

fn constant_beams(g: &std::sync::Arc<SpectralGrid>, p: [f64; 2], c: [f64; 2]) -> BeamSet {
    BeamSet::new(
        [RealField::constant(g, p[0]), RealField::constant(g, p[1])],
        [RealField::constant(g, c[0]), RealField::constant(g, c[1])],
        [0, 0],
        [0, 0],
        [[0.0; 2]; 2],
        [[0.0; 2]; 2],
        Detunings::default(),
        1.0,
    )
    .unwrap()
}

fn potential_algebra() -> Outcome {
    let mut o = Outcome::new();
    let g = SpectralGrid::new(64, 64, 24.0, 24.0).unwrap();
    let beams = BeamSet::from_profiles(
        &g,
        [BeamProfile::new(1.0, 4.0, 1), BeamProfile::new(0.6, 5.0, -2)],
        [BeamProfile::new(20.0, 12.0, 0), BeamProfile::new(25.0, 15.0, 0)],
        Detunings { eps12: 0.3, eps13: -0.2, ..Detunings::default() },
    )
    .unwrap();
    let (eps21, eps31) = (0.3, -0.2);
    let gauge = EffectiveGauge::from_beams(&beams, GaugeMode::Hermitian).unwrap();
    // V1 chosen so that the pair of conditions is consistent
    let v1 = RealField::from_values(
        &g,
        (0..g.len())
            .map(|i| {
                let s1 = gauge.xi1.values()[i].norm_sqr();
                let s2 = gauge.xi2.values()[i].norm_sqr();
                let d = 1.0 + s1 + s2;
                let sq = |alpha: usize| gauge.a[alpha].x.values()[i].norm_sqr() + gauge.a[alpha].y.values()[i].norm_sqr();
                -0.5 * (eps21 + eps31 + (s2 * s2 * sq(1) + s1 * s1 * sq(2)) / (2.0 * d))
            })
            .collect(),
    )
    .unwrap();
    let (v2, v3) = solve_traps(&v1, &gauge, eps21, eps31).unwrap();
    let veff = effective_potentials(&gauge, [&v1, &v2, &v3], eps21, eps31).unwrap();
    let worst = (0..g.len())
        .filter(|&i| gauge.mask.contains(i))
        .map(|i| veff[1].values()[i].abs().max(veff[2].values()[i].abs()))
        .fold(0.0, f64::max);
    o.check(worst <= 1e-12, format!("solve_traps then effective_potentials: max |V2eff|, |V3eff| on the mask = {worst:.2e} <= 1e-12"));

    let harmonic = RealField::from_fn(&g, |x, y| 0.05 * (x * x + y * y));
    let refused = matches!(solve_traps(&harmonic, &gauge, eps21, eps31), Err(Error::IncompatibleTraps { .. }));
    o.check(refused, "inconsistent trap conditions are reported".into());

    let mut worst_ulps: f64 = 0.0;
    for (p, c, v0) in [([0.3, 0.2], [2.0, 1.5], 0.7), ([1.0, 0.01], [3.0, 0.5], -2.5), ([0.05, 0.05], [1.0, 1.0], 1e3)] {
        let b = constant_beams(&g, p, c);
        let gauge = EffectiveGauge::from_beams(&b, GaugeMode::Hermitian).unwrap();
        let v = RealField::constant(&g, v0);
        let veff = effective_potentials(&gauge, [&v, &v, &v], 0.0, 0.0).unwrap();
        for (i, e) in veff[0].values().iter().enumerate() {
            if gauge.mask.contains(i) {
                worst_ulps = worst_ulps.max((e - v0).abs() / (f64::EPSILON * v0.abs()));
            }
        }
    }
    o.check(worst_ulps <= 4.0, format!("constant potential: V1eff = V0 within {worst_ulps} ulp (<= 4)"));
    o
}

fn main() {
    let start = Instant::now();
    let runs = compare_runs();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 circulation quantization", Box::new(|| circulation_quantization(&runs))),
        ("2 gauge degeneracy", Box::new(gauge_degeneracy)),
        ("3 dark-state fidelity", Box::new(dark_state_fidelity)),
        ("4 full vs effective agreement", Box::new(|| full_vs_effective(&runs))),
        ("5 numerical integrity", Box::new(numerical_integrity)),
        ("6 out-coupling", Box::new(outcoupling)),
        ("7 effective-potential algebra", Box::new(potential_algebra)),
    ];
    let mut failed = 0;
    for (name, criterion) in &criteria {
        let outcome = criterion();
        for line in &outcome.lines {
            println!("    {line}");
        }
        println!("{} criterion {name}", if outcome.pass { "PASS" } else { "FAIL" });
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
