//! Cross-checks of the numerics: rotating-wave validity for a short pulse,
//! integrator convergence, and the seeded invariant suite behind `selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    dense_free_propagator, evolve_driven, evolve_driven_sampled, evolve_free, lab_to_rotating, rabi_ground_state,
    Coupling, IntegratorConfig,
};
use crate::entanglement::{concurrence, concurrence_eig, QubitDensityMatrix};
use crate::error::Result;
use crate::hilbert::{
    kron2, partial_trace_cavity, qubits, single_qubit_rotation, unitarity_defect, PureState, SystemSpec,
};
use crate::magnus::AnalyticPropagator;
use crate::pulses::{Envelope, PulseSpec};

/// Short-pulse scenario for the rotating-wave comparison: `τ_d = T_ω/45`,
/// `Ω = 0.225ω`, envelope `exp(−(t/τ_d)²)` without carrier, `ω = 1`.
pub fn rwa_scenario_pulse() -> Result<PulseSpec> {
    let omega_tau = 2.0 * PI / 45.0;
    Ok(PulseSpec::new(omega_tau, 0.225 * omega_tau, 0.0, Envelope::Gaussian)?.without_carrier())
}

/// Coupled RWA and Rabi-coupling trajectories sampled on a common grid.
#[derive(Clone, Debug)]
pub struct RwaComparison {
    pub g_over_omega: f64,
    pub times: Vec<f64>,
    pub excitations_rwa: Vec<f64>,
    pub excitations_full: Vec<f64>,
    pub naive_rwa: Vec<f64>,
    pub naive_full: Vec<f64>,
    /// Naive concurrence of the Rabi ground state.
    pub ground_concurrence: f64,
    /// Largest `|x − ⟨x⟩_T|` of the full-coupling qubit excitation after the
    /// pulse, with `⟨·⟩_T` the moving average over one carrier period.
    pub residual_amplitude: f64,
    /// Largest `|⟨x_full⟩_T − ⟨x_rwa⟩_T|` after the pulse.
    pub envelope_deviation: f64,
    /// Peak-to-peak range of the RWA qubit excitation.
    pub slow_range: f64,
}

const SAMPLES_PER_PERIOD: usize = 32;

fn moving_average(x: &[f64], width: usize) -> Vec<Option<f64>> {
    let half = width / 2;
    (0..x.len())
        .map(|i| {
            (i >= half && i + half < x.len()).then(|| {
                // window of width+1 points with half weights at the ends spans one period exactly
                let inner: f64 = x[i + 1 - half..i + half].iter().sum();
                (inner + 0.5 * (x[i - half] + x[i + half])) / width as f64
            })
        })
        .collect()
}

/// Runs both couplings from their respective ground states through the pulse
/// and on to `g t = span`.
pub fn rwa_comparison(g_over_omega: f64, n_max: usize, span: f64, cfg: &IntegratorConfig) -> Result<RwaComparison> {
    let spec = SystemSpec::new(1.0, g_over_omega, n_max)?;
    let p = rwa_scenario_pulse()?;
    let tau = p.omega_tau_d;
    let t0 = -p.window * tau;
    let dt = 2.0 * PI / SAMPLES_PER_PERIOD as f64;
    let steps = ((span / spec.g) / dt).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| t0 + i as f64 * dt).collect();

    let rwa0 = PureState::basis(&spec, qubits::GG, 0);
    let (_, lab) = rabi_ground_state(&spec)?;
    let ground_concurrence = concurrence(&partial_trace_cavity(&lab))?.naive;
    let full0 = lab_to_rotating(&lab, spec.omega, t0);

    let rwa = evolve_driven_sampled(&rwa0, &p, &spec, &times, cfg, Coupling::Rwa)?;
    let full = evolve_driven_sampled(&full0, &p, &spec, &times, cfg, Coupling::Full)?;
    let naive = |s: &PureState| concurrence(&partial_trace_cavity(s)).map(|c| c.naive);
    let excitations_rwa: Vec<f64> = rwa.iter().map(PureState::qubit_excitations).collect();
    let excitations_full: Vec<f64> = full.iter().map(PureState::qubit_excitations).collect();
    let naive_rwa = rwa.iter().map(naive).collect::<Result<Vec<_>>>()?;
    let naive_full = full.iter().map(naive).collect::<Result<Vec<_>>>()?;

    let ma_full = moving_average(&excitations_full, SAMPLES_PER_PERIOD);
    let ma_rwa = moving_average(&excitations_rwa, SAMPLES_PER_PERIOD);
    let after = |i: usize| times[i] > -t0 + PI;
    let mut residual_amplitude: f64 = 0.0;
    let mut envelope_deviation: f64 = 0.0;
    for i in 0..times.len() {
        if let (true, Some(f), Some(r)) = (after(i), ma_full[i], ma_rwa[i]) {
            residual_amplitude = residual_amplitude.max((excitations_full[i] - f).abs());
            envelope_deviation = envelope_deviation.max((f - r).abs());
        }
    }
    let (lo, hi) = excitations_rwa.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    Ok(RwaComparison {
        g_over_omega,
        times,
        excitations_rwa,
        excitations_full,
        naive_rwa,
        naive_full,
        ground_concurrence,
        residual_amplitude,
        envelope_deviation,
        slow_range: hi - lo,
    })
}

/// Final-state fidelity defects `1 − |⟨ψ_ref|ψ_tol⟩|²` for each tolerance,
/// against a reference at `reference_tol`.
pub fn integrator_convergence(
    p: &PulseSpec,
    spec: &SystemSpec,
    tolerances: &[f64],
    reference_tol: f64,
) -> Result<Vec<f64>> {
    let psi0 = PureState::basis(spec, qubits::GG, 0);
    let t = p.window * p.omega_tau_d / spec.omega;
    let run = |tol: f64| {
        let cfg = IntegratorConfig { exact_free_segments: false, ..IntegratorConfig::with_tolerance(tol) };
        evolve_driven(&psi0, p, spec, -t, t, &cfg, Coupling::Rwa)
    };
    let reference = run(reference_tol)?;
    tolerances.iter().map(|&tol| Ok(1.0 - reference.fidelity(&run(tol)?))).collect()
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn random_state(rng: &mut ChaCha8Rng, n_max: usize) -> PureState {
    let d = 4 * (n_max + 1);
    let v = DVector::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut s = PureState::from_amplitudes(n_max, v.normalize()).expect("normalized by construction");
    s.normalize();
    s
}

fn random_su2(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
    let axis = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
    let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6);
    let axis = [axis[0] / n, axis[1] / n, axis[2] / n];
    single_qubit_rotation(rng.gen_range(0.0..2.0 * PI), axis).expect("unit axis")
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Unitarity, trace and positivity, local-unitary invariance of concurrence,
/// block/dense equivalence and integrator convergence, all from one seed.
pub fn run_selftest(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(timed("unitarity", || {
        let spec = SystemSpec::new(1.0, 0.05, 12)?;
        let mut worst = unitarity_defect(&dense_free_propagator(&spec, 7.3)?);
        let p = PulseSpec::new(PI, 4.1, 0.3, Envelope::hg(1))?;
        worst = worst.max(AnalyticPropagator::build(&p, &spec, 3, p.window)?.unitarity_defect(spec.n_max)?);
        Ok((worst < 1e-10, format!("max |U†U − I| = {worst:.2e}")))
    }));

    out.push(timed("trace-positivity", || {
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let rho = partial_trace_cavity(&random_state(&mut rng, 6));
            worst = worst.max((rho.trace() - 1.0).norm()).max(-rho.eigenvalues()[0]).max(rho.purity() - 1.0);
        }
        Ok((worst < 1e-12, format!("max violation = {worst:.2e}")))
    }));

    out.push(timed("local-unitary-invariance", || {
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let rho = partial_trace_cavity(&random_state(&mut rng, 3));
            let u: Matrix4<C64> = kron2(&random_su2(&mut rng), &random_su2(&mut rng));
            let a = concurrence(&rho)?;
            let b = concurrence(&rho.conjugate_by(&u))?;
            let c = concurrence_eig(&rho)?;
            worst = worst.max((a.naive - b.naive).abs()).max((a.concurrence - c.concurrence).abs());
        }
        Ok((worst < 1e-9, format!("max concurrence change = {worst:.2e}")))
    }));

    out.push(timed("block-dense-equivalence", || {
        let mut worst: f64 = 0.0;
        for n_max in [2, 5, 12] {
            let spec = SystemSpec::new(1.0, 0.07, n_max)?;
            let psi = random_state(&mut rng, n_max);
            let t = rng.gen_range(0.0..200.0);
            let dense: DMatrix<C64> = dense_free_propagator(&spec, t)?;
            let diff = (dense * psi.amplitudes() - evolve_free(&psi, spec.g, t).amplitudes()).norm();
            worst = worst.max(diff);
        }
        Ok((worst < 1e-9, format!("max state difference = {worst:.2e}")))
    }));

    out.push(timed("excitation-conservation", || {
        let spec = SystemSpec::new(1.0, 0.05, 10)?;
        let psi = random_state(&mut rng, 10);
        let n0 = psi.excitation_number();
        let worst = (1..20).map(|k| (evolve_free(&psi, spec.g, 3.7 * k as f64).excitation_number() - n0).abs()).fold(0.0, f64::max);
        Ok((worst < 1e-10, format!("max drift = {worst:.2e}")))
    }));

    out.push(timed("integrator-convergence", || {
        let spec = SystemSpec::new(1.0, 0.05, 20)?;
        let p = PulseSpec::new(PI, 2.05, 0.0, Envelope::hg(1))?;
        let d = integrator_convergence(&p, &spec, &[1e-5, 5e-6], 1e-12)?;
        Ok((d[0] >= 2.0 * d[1] && d[1] > 0.0, format!("defects {:.2e} → {:.2e}", d[0], d[1])))
    }));

    out.push(timed("density-validation", || {
        let bad = Matrix4::from_diagonal(&nalgebra::Vector4::new(C64::new(1.2, 0.0), C64::new(-0.2, 0.0), 0.0.into(), 0.0.into()));
        Ok((QubitDensityMatrix::new(bad).is_err(), "non-positive matrix rejected".into()))
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_removes_one_period() {
        let x: Vec<f64> = (0..200).map(|i| 2.0 + (2.0 * PI * i as f64 / 32.0).sin()).collect();
        let ma = moving_average(&x, 32);
        assert!(ma[..16].iter().all(Option::is_none));
        for v in ma.iter().flatten() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn selftest_passes() {
        for c in run_selftest(7) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn selftest_is_deterministic() {
        let a: Vec<String> = run_selftest(3).into_iter().map(|c| c.detail).collect();
        let b: Vec<String> = run_selftest(3).into_iter().map(|c| c.detail).collect();
        assert_eq!(a, b);
    }
}
