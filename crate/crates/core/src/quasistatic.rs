//! Quasistatic driving: the rotated-qubit ⊗ squeezed-vacuum ground state of
//! `H_g + (Ω/2)(a + a†)` and the entanglement dynamics after a sudden quench
//! of the drive.
//!
//! The squeezing `r` parametrizes the drive through `cos θ_r = e^{−2r}` and
//! `Ω = 2g sin θ_r`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dynamics::evolve_free;
use crate::entanglement::concurrence;
use crate::error::{Error, Result};
use crate::hilbert::{
    partial_trace_cavity, qubits, squeezed_tail, squeezed_vacuum, two_qubit_rotation, PureState, SystemSpec,
    DEFAULT_LEAKAGE_TOLERANCE,
};

/// Analytic excitation content of a quasistatic ground state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasistaticPoint {
    pub r: f64,
    /// Qubit rotation angle; zero for the unrotated variant.
    pub theta_r: f64,
    /// `Ω/g = 2 sin θ_r` of the drive that produces the squeezing `r`.
    pub omega_drive_over_g: f64,
    pub n_gamma: f64,
    pub n_q: f64,
    pub n_total: f64,
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("squeezing r must be finite and nonnegative, got {r}")));
    }
    Ok(())
}

/// `θ_r = arccos e^{−2r}`, increasing from 0 towards π/2.
pub fn theta_r(r: f64) -> f64 {
    (-2.0 * r).exp().acos()
}

pub fn excitation_numbers(r: f64, with_rotation: bool) -> Result<QuasistaticPoint> {
    check_r(r)?;
    let drive = theta_r(r);
    let theta = if with_rotation { drive } else { 0.0 };
    let n_gamma = r.sinh().powi(2);
    let n_q = 2.0 * (0.5 * theta).sin().powi(2);
    Ok(QuasistaticPoint {
        r,
        theta_r: theta,
        omega_drive_over_g: 2.0 * drive.sin(),
        n_gamma,
        n_q,
        n_total: n_gamma + n_q,
    })
}

/// Smallest cutoff whose squeezed-vacuum tail stays below `tolerance / 100`,
/// with two levels of headroom.
pub fn recommended_cutoff(r: f64, tolerance: f64) -> usize {
    let target = 0.01 * tolerance;
    let mut n = 2;
    while squeezed_tail(r, n) > target {
        n += 2;
    }
    n + 2
}

fn ground_state_unchecked(r: f64, n_max: usize, with_rotation: bool) -> Result<PureState> {
    let fock = squeezed_vacuum(r, n_max);
    let theta = if with_rotation { theta_r(r) } else { 0.0 };
    let rot = two_qubit_rotation(theta, [0.0, 1.0, 0.0])?;
    let q = rot.column(qubits::GG);
    Ok(PureState::product(&[q[0], q[1], q[2], q[3]], &fock))
}

/// `R[θ_r; e_y]|00⟩ ⊗ S(r)|0⟩`, or `|00⟩ ⊗ S(r)|0⟩` without rotation.
pub fn ground_state(r: f64, spec: &SystemSpec, with_rotation: bool) -> Result<PureState> {
    check_r(r)?;
    let leakage = squeezed_tail(r, spec.n_max);
    if leakage > DEFAULT_LEAKAGE_TOLERANCE {
        return Err(Error::CutoffOverflow { leakage, tolerance: DEFAULT_LEAKAGE_TOLERANCE });
    }
    ground_state_unchecked(r, spec.n_max, with_rotation)
}

/// `‖(H_g + (Ω/2)(a + a†)) |E₀; r⟩‖ / g` with `Ω = 2g sin θ_r`, for the
/// state truncated at `n_max` and `H` acting without truncation, so the
/// residual measures the cutoff.
pub fn verify_ground_state(r: f64, spec: &SystemSpec) -> Result<f64> {
    check_r(r)?;
    let psi = ground_state_unchecked(r, spec.n_max, true)?;
    let half_drive = theta_r(r).sin();
    let nf = spec.fock_dim();
    let x = psi.amplitudes();
    // one extra Fock level per qubit block receives a†|n_max⟩
    let wide = nf + 1;
    let mut out = vec![C64::new(0.0, 0.0); 4 * wide];
    // collective σ⁺ transitions (from, to)
    const RAISE: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 3), (2, 3)];
    for &(lo, hi) in &RAISE {
        for n in 1..nf {
            let s = (n as f64).sqrt();
            // σ⁺a: |lo; n⟩ → √n |hi; n−1⟩, σ⁻a†: |hi; n−1⟩ → √n |lo; n⟩
            out[hi * wide + n - 1] += x[lo * nf + n] * s;
        }
        for n in 0..nf {
            out[lo * wide + n + 1] += x[hi * nf + n] * ((n + 1) as f64).sqrt();
        }
    }
    for q in 0..4 {
        for n in 0..nf {
            let s = half_drive * ((n + 1) as f64).sqrt();
            if n + 1 < nf {
                out[q * wide + n] += x[q * nf + n + 1] * s;
            }
            out[q * wide + n + 1] += x[q * nf + n] * s;
        }
    }
    Ok(out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
}

/// `t ∈ [0, 20/g]` on 2000 points.
pub fn default_time_grid(g: f64) -> Vec<f64> {
    uniform_grid(20.0 / g, 2000)
}

/// `n` equally spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_end * i as f64 / (n - 1).max(1) as f64).collect()
}

/// Naive concurrence of the quenched ground state along `t_grid`.
pub fn quench_concurrence(r: f64, with_rotation: bool, t_grid: &[f64], spec: &SystemSpec) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be sorted".into()));
    }
    let psi0 = ground_state(r, spec, with_rotation)?;
    t_grid
        .par_iter()
        .map(|&t| Ok(concurrence(&partial_trace_cavity(&evolve_free(&psi0, spec.g, t)))?.naive))
        .collect()
}

/// Time-maximized naive concurrence for one squeezing value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchSummary {
    pub point: QuasistaticPoint,
    pub n_max: usize,
    pub max_naive: f64,
    pub t_at_max: f64,
    /// Fraction of grid points with positive naive concurrence.
    pub positive_fraction: f64,
}

pub fn summarize_quench(r: f64, with_rotation: bool, t_grid: &[f64], spec: &SystemSpec) -> Result<QuenchSummary> {
    let series = quench_concurrence(r, with_rotation, t_grid, spec)?;
    let (i_max, max_naive) = series
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    let positive = series.iter().filter(|&&c| c > 0.0).count();
    Ok(QuenchSummary {
        point: excitation_numbers(r, with_rotation)?,
        n_max: spec.n_max,
        max_naive,
        t_at_max: t_grid.get(i_max).copied().unwrap_or(0.0),
        positive_fraction: positive as f64 / series.len().max(1) as f64,
    })
}

/// Quench summaries over `rs`, each with the cutoff from
/// [`recommended_cutoff`]; results follow the order of `rs`.
pub fn quench_scan(rs: &[f64], with_rotation: bool, t_grid: &[f64], omega: f64, g: f64) -> Result<Vec<QuenchSummary>> {
    rs.par_iter()
        .map(|&r| {
            check_r(r)?;
            let spec = SystemSpec::new(omega, g, recommended_cutoff(r, DEFAULT_LEAKAGE_TOLERANCE))?;
            summarize_quench(r, with_rotation, t_grid, &spec)
        })
        .collect()
}

/// A local maximum of the power spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPeak {
    /// Angular frequency.
    pub frequency: f64,
    pub power: f64,
}

/// Local maxima of the Hann-windowed power spectrum of a uniformly sampled
/// series (mean removed), strongest first.
pub fn spectral_peaks(series: &[f64], dt: f64) -> Vec<SpectralPeak> {
    let n = series.len();
    if n < 4 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C64> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            C64::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
    let mut peaks: Vec<SpectralPeak> = (1..power.len() - 1)
        .filter(|&k| power[k] > power[k - 1] && power[k] >= power[k + 1])
        .map(|k| SpectralPeak { frequency: 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt), power: power[k] })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    peaks
}

/// Number of peaks with power at least `fraction` of the strongest one.
pub fn comparable_peaks(peaks: &[SpectralPeak], fraction: f64) -> usize {
    match peaks.first() {
        Some(top) => peaks.iter().filter(|p| p.power >= fraction * top.power).count(),
        None => 0,
    }
}
