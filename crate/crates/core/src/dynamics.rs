//! Time evolution in the frame rotating at the cavity frequency.
//!
//! The Hamiltonian is
//!
//! ```text
//! H(t) = g(σ⁺a + σ⁻a†) + Ω f(t/τ_d)(a e^{−iωt} + a† e^{iωt})
//!        [+ g(σ⁺a† e^{2iωt} + σ⁻a e^{−2iωt})   with Coupling::Full]
//! ```
//!
//! with `τ_d = ωτ_d/ω` and `Ω = Ωτ_d/τ_d`. The drive vanishes outside the
//! pulse window `|t| ≤ T_u τ_d`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::entanglement::concurrence;
use crate::error::{Error, Result};
use crate::hilbert::{
    collective_sigma_qubits, fock_annihilation, kron_qubit_fock, partial_trace_cavity, qubits, OperatorKind,
    OperatorMatrix, PureState, SigmaKind, SystemSpec, DEFAULT_LEAKAGE_TOLERANCE,
};
use crate::integrator::{Dop853, StepControl, StepStats};
use crate::pulses::PulseSpec;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Sector frequency `g_n = √(4n − 2) g`.
pub fn sector_frequency(n: usize, g: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (4.0 * n as f64 - 2.0).sqrt() * g
    }
}

/// One bright block `{|00;k⟩, |Ψ⁺;k−1⟩, |11;k−2⟩}` of the truncated `H_g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrightBlock {
    pub excitations: usize,
    pub has_gg: bool,
    pub has_psi: bool,
    pub has_ee: bool,
    /// `⟨Ψ⁺;k−1|H_g|00;k⟩`.
    pub upper: f64,
    /// `⟨11;k−2|H_g|Ψ⁺;k−1⟩`.
    pub lower: f64,
}

impl BrightBlock {
    /// Nonzero eigenvalue magnitude; the spectrum is `{0, ±ν}`.
    pub fn frequency(&self) -> f64 {
        self.upper.hypot(self.lower)
    }

    /// `exp(−iHt)` of the 3×3 block, from `H³ = ν²H`.
    pub fn propagator(&self, t: f64) -> [[C64; 3]; 3] {
        let (b1, b2) = (self.upper, self.lower);
        let nu = self.frequency();
        let mut u = [[ZERO; 3]; 3];
        for (i, row) in u.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        if nu == 0.0 {
            return u;
        }
        let s = C64::new(0.0, -(nu * t).sin() / nu);
        let c = ((nu * t).cos() - 1.0) / (nu * nu);
        let h = [[0.0, b1, 0.0], [b1, 0.0, b2], [0.0, b2, 0.0]];
        let h2 = [[b1 * b1, 0.0, b1 * b2], [0.0, b1 * b1 + b2 * b2, 0.0], [b1 * b2, 0.0, b2 * b2]];
        for i in 0..3 {
            for j in 0..3 {
                u[i][j] += s * h[i][j] + c * h2[i][j];
            }
        }
        u
    }
}

/// Excitation-number block structure of `H_g` on a truncated space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockDecomposition {
    pub n_max: usize,
    pub g: f64,
}

impl BlockDecomposition {
    pub fn new(spec: &SystemSpec) -> Self {
        Self { n_max: spec.n_max, g: spec.g }
    }

    /// Largest excitation number present in the truncated space.
    pub fn max_excitations(&self) -> usize {
        self.n_max + 2
    }

    pub fn block(&self, k: usize) -> BrightBlock {
        let has_gg = k <= self.n_max;
        let has_psi = k >= 1 && k - 1 <= self.n_max;
        let has_ee = k >= 2 && k - 2 <= self.n_max;
        let s2g = std::f64::consts::SQRT_2 * self.g;
        let upper = if has_gg && has_psi { s2g * (k as f64).sqrt() } else { 0.0 };
        let lower = if has_psi && has_ee { s2g * ((k - 1) as f64).sqrt() } else { 0.0 };
        BrightBlock { excitations: k, has_gg, has_psi, has_ee, upper, lower }
    }

    /// Eigenvalues of the bright block, ascending.
    pub fn eigenvalues(&self, k: usize) -> Vec<f64> {
        let b = self.block(k);
        let dim = b.has_gg as usize + b.has_psi as usize + b.has_ee as usize;
        let nu = b.frequency();
        match dim {
            1 => vec![0.0],
            2 => vec![-nu, nu],
            _ => vec![-nu, 0.0, nu],
        }
    }

    /// Applies `exp(−iH_g t)` to raw amplitudes in place.
    pub fn apply(&self, amps: &mut [C64], t: f64) {
        let nf = self.n_max + 1;
        let idx = |q: usize, n: usize| q * nf + n;
        for k in 0..=self.max_excitations() {
            let b = self.block(k);
            let (lo, hi) = (b.upper, b.lower);
            if lo == 0.0 && hi == 0.0 {
                continue;
            }
            let u = b.propagator(t);
            let gg = if b.has_gg { amps[idx(qubits::GG, k)] } else { ZERO };
            let (c01, c10) = if b.has_psi { (amps[idx(qubits::GE, k - 1)], amps[idx(qubits::EG, k - 1)]) } else { (ZERO, ZERO) };
            let plus = (c01 + c10) * FRAC_1_SQRT_2;
            let minus = (c01 - c10) * FRAC_1_SQRT_2;
            let ee = if b.has_ee { amps[idx(qubits::EE, k - 2)] } else { ZERO };
            let v = [gg, plus, ee];
            let w: Vec<C64> = (0..3).map(|i| u[i][0] * v[0] + u[i][1] * v[1] + u[i][2] * v[2]).collect();
            if b.has_gg {
                amps[idx(qubits::GG, k)] = w[0];
            }
            if b.has_psi {
                amps[idx(qubits::GE, k - 1)] = (w[1] + minus) * FRAC_1_SQRT_2;
                amps[idx(qubits::EG, k - 1)] = (w[1] - minus) * FRAC_1_SQRT_2;
            }
            if b.has_ee {
                amps[idx(qubits::EE, k - 2)] = w[2];
            }
        }
    }
}

/// Exact evolution under `H_g` for a time `dt` (negative allowed).
pub fn evolve_free(state: &PureState, g: f64, dt: f64) -> PureState {
    let mut out = state.clone();
    BlockDecomposition { n_max: state.n_max(), g }.apply(out.amplitudes_mut().as_mut_slice(), dt);
    out
}

/// Dense `H_g = g(σ⁺a + σ⁻a†)`.
pub fn free_hamiltonian(spec: &SystemSpec) -> Result<OperatorMatrix> {
    spec.ensure_dense()?;
    let a = fock_annihilation(spec.n_max);
    let sp = kron_qubit_fock(&collective_sigma_qubits(SigmaKind::Plus), &a);
    let h = (&sp + sp.adjoint()) * C64::new(spec.g, 0.0);
    OperatorMatrix::new(h, OperatorKind::Hermitian)
}

/// `(ρ⁰⁰, ρ^{Ψ⁺}, ρ¹¹)` of the `n`-quanta sector started in `|00; n⟩`.
pub fn closed_form_populations(n: usize, t: f64, g: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let nf = n as f64;
    let p = (nf - 1.0) / (2.0 * nf - 1.0);
    let q = nf / (2.0 * nf - 1.0);
    let c = (sector_frequency(n, g) * t).cos();
    ((p + q * c).powi(2), q * (1.0 - c * c), p * q * (1.0 - c).powi(2))
}

/// Cavity–qubit coupling model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// `g(σ⁺a + σ⁻a†)`.
    Rwa,
    /// Rabi coupling `g(σ⁺ + σ⁻)(a e^{−iωt} + a† e^{iωt})` in the rotating frame.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratorMethod {
    Dop853,
}

/// Integrator tolerances and guards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub rtol: f64,
    pub atol: f64,
    /// Largest step as a fraction of `min(τ_d, 2π/ω)`.
    pub max_step_fraction: f64,
    pub leakage_tolerance: f64,
    pub max_steps: usize,
    /// Propagate drive-free RWA segments exactly instead of integrating them.
    pub exact_free_segments: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: IntegratorMethod::Dop853,
            rtol: 1e-10,
            atol: 1e-12,
            max_step_fraction: 0.25,
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
            max_steps: 5_000_000,
            exact_free_segments: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step_fraction > 0.0 && self.leakage_tolerance > 0.0) {
            return Err(Error::InvalidParameter("integrator tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Physical drive parameters derived from a pulse and a system.
#[derive(Clone, Debug)]
pub struct Drive {
    pub pulse: PulseSpec,
    pub tau: f64,
    pub strength: f64,
}

impl Drive {
    pub fn new(pulse: &PulseSpec, spec: &SystemSpec) -> Self {
        let tau = pulse.omega_tau_d / spec.omega;
        Self { pulse: pulse.clone(), tau, strength: pulse.area / tau }
    }

    /// Half-width of the pulse window in physical time.
    pub fn half_window(&self) -> f64 {
        self.pulse.window * self.tau
    }

    /// `Ω f(t/τ_d)`, zero outside the window.
    pub fn amplitude(&self, t: f64) -> f64 {
        let u = t / self.tau;
        if u.abs() > self.pulse.window || self.strength == 0.0 {
            0.0
        } else {
            self.strength * self.pulse.value(u)
        }
    }
}

/// Matrix-free `H(t)ψ` in the rotating frame.
struct HamiltonianAction {
    nf: usize,
    omega: f64,
    g: f64,
    coupling: Coupling,
    drive: Drive,
    sqrt_n: Vec<f64>,
    lowered: Vec<C64>,
    raised: Vec<C64>,
}

impl HamiltonianAction {
    fn new(spec: &SystemSpec, drive: Drive, coupling: Coupling) -> Self {
        let nf = spec.fock_dim();
        Self {
            nf,
            omega: spec.omega,
            g: spec.g,
            coupling,
            drive,
            sqrt_n: (0..=nf).map(|n| (n as f64).sqrt()).collect(),
            lowered: vec![ZERO; 4 * nf],
            raised: vec![ZERO; 4 * nf],
        }
    }

    /// `dy = −i H(t) y`.
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        let nf = self.nf;
        for q in 0..4 {
            let b = q * nf;
            for n in 0..nf {
                self.lowered[b + n] = if n + 1 < nf { y[b + n + 1] * self.sqrt_n[n + 1] } else { ZERO };
                self.raised[b + n] = if n > 0 { y[b + n - 1] * self.sqrt_n[n] } else { ZERO };
            }
        }
        let (a, ad) = (&self.lowered, &self.raised);
        let g = self.g;
        let drive = self.drive.amplitude(t);
        let e1 = C64::from_polar(drive, -self.omega * t);
        let (cr_plus, cr_minus) = match self.coupling {
            Coupling::Rwa => (ZERO, ZERO),
            Coupling::Full => (C64::from_polar(g, 2.0 * self.omega * t), C64::from_polar(g, -2.0 * self.omega * t)),
        };
        let full = self.coupling == Coupling::Full;
        for n in 0..nf {
            let (i0, i1, i2, i3) = (n, nf + n, 2 * nf + n, 3 * nf + n);
            // g σ⁺ a and g σ⁻ a†
            let mut h0 = (ad[i1] + ad[i2]) * g;
            let mut h1 = a[i0] * g + ad[i3] * g;
            let mut h2 = a[i0] * g + ad[i3] * g;
            let mut h3 = (a[i1] + a[i2]) * g;
            if full {
                // g e^{2iωt} σ⁺ a† and g e^{−2iωt} σ⁻ a
                h0 += (a[i1] + a[i2]) * cr_minus;
                h1 += ad[i0] * cr_plus + a[i3] * cr_minus;
                h2 += ad[i0] * cr_plus + a[i3] * cr_minus;
                h3 += (ad[i1] + ad[i2]) * cr_plus;
            }
            if drive != 0.0 {
                h0 += a[i0] * e1 + ad[i0] * e1.conj();
                h1 += a[i1] * e1 + ad[i1] * e1.conj();
                h2 += a[i2] * e1 + ad[i2] * e1.conj();
                h3 += a[i3] * e1 + ad[i3] * e1.conj();
            }
            // −i h
            dy[i0] = C64::new(h0.im, -h0.re);
            dy[i1] = C64::new(h1.im, -h1.re);
            dy[i2] = C64::new(h2.im, -h2.re);
            dy[i3] = C64::new(h3.im, -h3.re);
        }
    }
}

/// Driven evolution of one state along a sequence of sample times.
pub struct DrivenEvolution {
    spec: SystemSpec,
    cfg: IntegratorConfig,
    coupling: Coupling,
    drive: Drive,
    /// Step statistics accumulated over all integrated segments.
    pub stats: StepStats,
}

impl DrivenEvolution {
    pub fn new(spec: &SystemSpec, pulse: &PulseSpec, cfg: &IntegratorConfig, coupling: Coupling) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { spec: *spec, cfg: *cfg, coupling, drive: Drive::new(pulse, spec), stats: StepStats::default() })
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    fn step_control(&self) -> StepControl {
        let period = 2.0 * std::f64::consts::PI / self.spec.omega;
        StepControl {
            rtol: self.cfg.rtol,
            atol: self.cfg.atol,
            max_step: self.cfg.max_step_fraction * self.drive.tau.min(period),
            max_steps: self.cfg.max_steps,
        }
    }

    fn integrate(&mut self, y: &mut [C64], t0: f64, t1: f64, h: &mut f64) -> Result<()> {
        let mut action = HamiltonianAction::new(&self.spec, self.drive.clone(), self.coupling);
        let mut solver = Dop853::new(y.len(), |t, y: &[C64], dy: &mut [C64]| action.rhs(t, y, dy));
        let ctl = self.step_control();
        let tol = self.cfg.leakage_tolerance;
        let nf = self.spec.fock_dim();
        let result = solver.integrate(t0, t1, y, h, &ctl, |t, y| {
            let norm = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::StepControlFailure { t, reason: format!("norm drifted to {norm}") });
            }
            for c in y.iter_mut() {
                *c /= norm;
            }
            let leakage = top_leakage(y, nf);
            if leakage > tol {
                return Err(Error::CutoffOverflow { leakage, tolerance: tol });
            }
            Ok(())
        });
        let s = solver.stats;
        self.stats.accepted += s.accepted;
        self.stats.rejected += s.rejected;
        self.stats.evaluations += s.evaluations;
        result
    }

    /// Segment boundaries between `t0` and `t1` at the pulse-window edges.
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let w = self.drive.half_window();
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let mut pts = vec![t0];
        let mut inner: Vec<f64> = [-w, w].into_iter().filter(|&x| x > lo && x < hi).collect();
        if t1 < t0 {
            inner.reverse();
        }
        pts.extend(inner);
        pts.push(t1);
        pts
    }

    fn drive_free(&self, a: f64, b: f64) -> bool {
        let w = self.drive.half_window();
        let (lo, hi) = (a.min(b), a.max(b));
        self.drive.strength == 0.0 || hi <= -w || lo >= w
    }

    /// Evolves `state` from `t0` to `t1` (either direction).
    pub fn evolve(&mut self, state: &PureState, t0: f64, t1: f64) -> Result<PureState> {
        let mut h = 0.0;
        let mut out = state.clone();
        self.evolve_in_place(&mut out, t0, t1, &mut h)?;
        Ok(out)
    }

    fn evolve_in_place(&mut self, state: &mut PureState, t0: f64, t1: f64, h: &mut f64) -> Result<()> {
        if state.n_max() != self.spec.n_max {
            return Err(Error::DimensionMismatch { expected: self.spec.dim(), found: state.dim() });
        }
        state.check_leakage(self.cfg.leakage_tolerance)?;
        let pts = self.breakpoints(t0, t1);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            if self.cfg.exact_free_segments && self.coupling == Coupling::Rwa && self.drive_free(a, b) {
                BlockDecomposition::new(&self.spec).apply(state.amplitudes_mut().as_mut_slice(), b - a);
                state.check_leakage(self.cfg.leakage_tolerance)?;
            } else {
                self.integrate(state.amplitudes_mut().as_mut_slice(), a, b, h)?;
            }
        }
        Ok(())
    }

    /// States at each of `times`, starting from `state` at `times[0]`.
    pub fn trajectory(&mut self, state: &PureState, times: &[f64]) -> Result<Vec<PureState>> {
        let mut out = Vec::with_capacity(times.len());
        let Some(&first) = times.first() else {
            return Ok(out);
        };
        let mut current = state.clone();
        let mut h = 0.0;
        let mut t = first;
        out.push(current.clone());
        for &next in &times[1..] {
            self.evolve_in_place(&mut current, t, next, &mut h)?;
            out.push(current.clone());
            t = next;
        }
        Ok(out)
    }
}

/// Final state of the driven evolution from `t0` to `t1`.
pub fn evolve_driven(
    state: &PureState,
    pulse: &PulseSpec,
    spec: &SystemSpec,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    coupling: Coupling,
) -> Result<PureState> {
    DrivenEvolution::new(spec, pulse, cfg, coupling)?.evolve(state, t0, t1)
}

/// Driven trajectory sampled at `times`.
pub fn evolve_driven_sampled(
    state: &PureState,
    pulse: &PulseSpec,
    spec: &SystemSpec,
    times: &[f64],
    cfg: &IntegratorConfig,
    coupling: Coupling,
) -> Result<Vec<PureState>> {
    DrivenEvolution::new(spec, pulse, cfg, coupling)?.trajectory(state, times)
}

fn top_leakage(y: &[C64], nf: usize) -> f64 {
    (0..4).map(|q| y[q * nf + nf - 1].norm_sqr() + y[q * nf + nf - 2].norm_sqr()).sum()
}

/// Lowest eigenpair of the lab-frame Rabi Hamiltonian
/// `ω a†a + (ω/2)σᶻ + g(σ⁺ + σ⁻)(a + a†)`.
pub fn rabi_ground_state(spec: &SystemSpec) -> Result<(f64, PureState)> {
    spec.ensure_dense()?;
    let nf = spec.fock_dim();
    let a = fock_annihilation(spec.n_max);
    let sx = collective_sigma_qubits(SigmaKind::X);
    let x = &a + a.adjoint();
    let mut h = kron_qubit_fock(&sx, &x) * C64::new(spec.g, 0.0);
    for q in 0..4 {
        for n in 0..nf {
            let i = q * nf + n;
            h[(i, i)] += C64::new(spec.omega * (n as f64 + 0.5 * qubits::SIGMA_Z[q]), 0.0);
        }
    }
    let eig = SymmetricEigen::try_new(h, 1e-15, 100_000)
        .ok_or_else(|| Error::EigenFailure("Rabi Hamiltonian diagonalization did not converge".into()))?;
    let (k, e0) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty spectrum");
    let v: DVector<C64> = eig.eigenvectors.column(k).into_owned();
    let mut state = PureState::from_amplitudes(spec.n_max, v)?;
    state.normalize();
    Ok((e0, state))
}

/// Maps a lab-frame state at time `t` into the rotating frame,
/// `e^{iω(a†a + σᶻ/2)t}|ψ⟩`.
pub fn lab_to_rotating(state: &PureState, omega: f64, t: f64) -> PureState {
    let nf = state.fock_dim();
    let mut out = state.clone();
    for (i, c) in out.amplitudes_mut().iter_mut().enumerate() {
        let (q, n) = (i / nf, i % nf);
        *c *= C64::from_polar(1.0, omega * t * (n as f64 + 0.5 * qubits::SIGMA_Z[q]));
    }
    out
}

/// Dense `exp(−iH_g t)`, for cross-checking the block propagator.
pub fn dense_free_propagator(spec: &SystemSpec, t: f64) -> Result<DMatrix<C64>> {
    let h = free_hamiltonian(spec)?;
    Ok(crate::hilbert::expm_hermitian(h.matrix(), t))
}

/// One row of an exported trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub amplitudes: Vec<C64>,
    pub populations: [f64; 4],
    pub photon_number: f64,
    pub naive_concurrence: f64,
    pub leakage: f64,
}

impl TrajectoryRecord {
    /// Observables of `state`, keeping the amplitudes of `selected` `(q, n)` labels.
    pub fn from_state(t: f64, state: &PureState, selected: &[(usize, usize)]) -> Result<Self> {
        let rho = partial_trace_cavity(state);
        Ok(Self {
            t,
            amplitudes: selected.iter().map(|&(q, n)| state.amplitude(q, n)).collect(),
            populations: state.qubit_populations(),
            photon_number: state.photon_number(),
            naive_concurrence: concurrence(&rho)?.naive,
            leakage: state.leakage(),
        })
    }
}

const QUBIT_LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// Writes trajectory rows as CSV with one header line.
pub fn write_trajectory_csv<W: Write>(w: W, selected: &[(usize, usize)], rows: &[TrajectoryRecord]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    for &(q, n) in selected {
        header.push(format!("re_{}_{n}", QUBIT_LABELS[q]));
        header.push(format!("im_{}_{n}", QUBIT_LABELS[q]));
    }
    header.extend(QUBIT_LABELS.iter().map(|l| format!("p_{l}")));
    header.extend(["photon_number", "naive_concurrence", "leakage"].map(String::from));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![fmt(r.t)];
        for a in &r.amplitudes {
            rec.push(fmt(a.re));
            rec.push(fmt(a.im));
        }
        rec.extend(r.populations.iter().map(|&p| fmt(p)));
        rec.extend([fmt(r.photon_number), fmt(r.naive_concurrence), fmt(r.leakage)]);
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest round-trip float formatting.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}
