//! Truncated Fock space tensored with two qubits.
//!
//! Basis ordering is qubits-major: the amplitude of `|q_A q_B; n⟩` lives at
//! `(2 q_A + q_B) (n_max + 1) + n`. Qubit state `1` is the excited level, so
//! `σ⁺ = |1⟩⟨0|`, `σʸ = −i(σ⁺ − σ⁻)` and `σᶻ = |1⟩⟨1| − |0⟩⟨0|`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::entanglement::QubitDensityMatrix;
use crate::error::{Error, Result};

/// Population allowed in the two highest Fock levels before a state is
/// considered to have overflowed the cutoff.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-8;

/// Largest cutoff accepted by dense (matrix) code paths.
pub const MAX_DENSE_NMAX: usize = 4096;

/// Coupling ratio above which the rotating-wave coupling is questionable.
pub const RWA_WARNING_RATIO: f64 = 0.2;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Two-qubit basis labels `|q_A q_B⟩` as indices `2 q_A + q_B`.
pub mod qubits {
    pub const GG: usize = 0;
    pub const GE: usize = 1;
    pub const EG: usize = 2;
    pub const EE: usize = 3;

    /// Eigenvalue of the collective `σᶻ = σ_Aᶻ + σ_Bᶻ` on each basis label.
    pub const SIGMA_Z: [f64; 4] = [-2.0, 0.0, 0.0, 2.0];

    /// Number of excited qubits for each basis label.
    pub const EXCITATIONS: [usize; 4] = [0, 1, 1, 2];
}

/// Cavity frequency, cavity–qubit coupling and photon cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega: f64,
    pub g: f64,
    pub n_max: usize,
}

impl SystemSpec {
    pub fn new(omega: f64, g: f64, n_max: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
        }
        if g / omega >= RWA_WARNING_RATIO {
            log::warn!("g/omega = {:.3} is outside the rotating-wave regime", g / omega);
        }
        Ok(Self { omega, g, n_max })
    }

    /// Same physics with a different photon cutoff.
    pub fn with_cutoff(&self, n_max: usize) -> Result<Self> {
        Self::new(self.omega, self.g, n_max)
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        4 * self.fock_dim()
    }

    pub fn index(&self, qubits: usize, n: usize) -> usize {
        debug_assert!(qubits < 4 && n <= self.n_max);
        qubits * self.fock_dim() + n
    }

    pub(crate) fn ensure_dense(&self) -> Result<()> {
        if self.n_max > MAX_DENSE_NMAX {
            return Err(Error::DimensionTooLarge { n_max: self.n_max, cap: MAX_DENSE_NMAX });
        }
        Ok(())
    }
}

/// A normalized state vector over the qubit ⊗ Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_max: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps raw amplitudes; they are not renormalized.
    pub fn from_amplitudes(n_max: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let expected = 4 * (n_max + 1);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: amplitudes.len() });
        }
        Ok(Self { n_max, amplitudes })
    }

    /// The basis ket `|q; n⟩`.
    pub fn basis(spec: &SystemSpec, qubits: usize, n: usize) -> Self {
        let mut amplitudes = DVector::zeros(spec.dim());
        amplitudes[spec.index(qubits, n)] = ONE;
        Self { n_max: spec.n_max, amplitudes }
    }

    /// `|ψ_q⟩ ⊗ |φ⟩` for a two-qubit state and a Fock-space vector.
    pub fn product(qubit_state: &[C64; 4], fock: &DVector<C64>) -> Self {
        let nf = fock.len();
        let mut amplitudes = DVector::zeros(4 * nf);
        for (q, cq) in qubit_state.iter().enumerate() {
            for n in 0..nf {
                amplitudes[q * nf + n] = cq * fock[n];
            }
        }
        Self { n_max: nf - 1, amplitudes }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, qubits: usize, n: usize) -> C64 {
        self.amplitudes[qubits * self.fock_dim() + n]
    }

    /// Fock-space slice belonging to one qubit basis label.
    pub fn block(&self, qubits: usize) -> &[C64] {
        let nf = self.fock_dim();
        &self.amplitudes.as_slice()[qubits * nf..(qubits + 1) * nf]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.unscale_mut(n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Population in the two highest Fock levels.
    pub fn leakage(&self) -> f64 {
        let nf = self.fock_dim();
        (0..4)
            .flat_map(|q| [q * nf + nf - 1, q * nf + nf - 2])
            .map(|i| self.amplitudes[i].norm_sqr())
            .sum()
    }

    pub fn check_leakage(&self, tolerance: f64) -> Result<()> {
        let leakage = self.leakage();
        if leakage > tolerance {
            return Err(Error::CutoffOverflow { leakage, tolerance });
        }
        Ok(())
    }

    /// `⟨a†a⟩`.
    pub fn photon_number(&self) -> f64 {
        let nf = self.fock_dim();
        self.amplitudes.iter().enumerate().map(|(i, c)| (i % nf) as f64 * c.norm_sqr()).sum()
    }

    /// `Σ_j ⟨σ_j⁺σ_j⁻⟩`.
    pub fn qubit_excitations(&self) -> f64 {
        let nf = self.fock_dim();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| qubits::EXCITATIONS[i / nf] as f64 * c.norm_sqr())
            .sum()
    }

    /// Total excitation number `⟨a†a + σ_A⁺σ_A⁻ + σ_B⁺σ_B⁻⟩`.
    pub fn excitation_number(&self) -> f64 {
        self.photon_number() + self.qubit_excitations()
    }

    /// Populations of `|00⟩, |01⟩, |10⟩, |11⟩` after tracing out the cavity.
    pub fn qubit_populations(&self) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (q, pq) in p.iter_mut().enumerate() {
            *pq = self.block(q).iter().map(|c| c.norm_sqr()).sum();
        }
        p
    }
}

/// Flag describing the algebraic class of an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// Dense operator over the qubit ⊗ Fock basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    matrix: DMatrix<C64>,
    kind: OperatorKind,
}

impl OperatorMatrix {
    /// Wraps a matrix, checking that it really belongs to the claimed class.
    pub fn new(matrix: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter("operator matrix must be square".into()));
        }
        match kind {
            OperatorKind::Hermitian => {
                let dev = hermiticity_defect(&matrix);
                if dev >= 1e-12 {
                    return Err(Error::InvalidParameter(format!("matrix is not Hermitian (defect {dev:.2e})")));
                }
            }
            OperatorKind::Unitary => {
                let dev = unitarity_defect(&matrix);
                if dev >= 1e-10 {
                    return Err(Error::InvalidParameter(format!("matrix is not unitary (defect {dev:.2e})")));
                }
            }
            OperatorKind::General => {}
        }
        Ok(Self { matrix, kind })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        Self { matrix: self.matrix.adjoint(), kind: self.kind }
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.dim() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: self.matrix.ncols(), found: state.dim() });
        }
        Ok(PureState { n_max: state.n_max, amplitudes: &self.matrix * &state.amplitudes })
    }

    /// `⟨ψ|M|ψ⟩`.
    pub fn expectation(&self, state: &PureState) -> C64 {
        state.amplitudes.dotc(&(&self.matrix * &state.amplitudes))
    }
}

/// `max |M − M†|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `max |M†M − I|`.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let mut p = m.adjoint() * m;
    for i in 0..p.nrows() {
        p[(i, i)] -= ONE;
    }
    p.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Kronecker product with the qubit factor outermost.
pub fn kron_qubit_fock(q: &Matrix4<C64>, f: &DMatrix<C64>) -> DMatrix<C64> {
    let nf = f.nrows();
    let mut out = DMatrix::zeros(4 * nf, 4 * nf);
    for i in 0..4 {
        for j in 0..4 {
            let c = q[(i, j)];
            if c == ZERO {
                continue;
            }
            out.view_mut((i * nf, j * nf), (nf, nf)).copy_from(&(f * c));
        }
    }
    out
}

/// Fock-space annihilation operator, `⟨n−1|a|n⟩ = √n`.
pub fn fock_annihilation(n_max: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn fock_number(n_max: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_fn(n_max + 1, |n, _| C64::new(n as f64, 0.0)))
}

pub fn annihilation(spec: &SystemSpec) -> Result<OperatorMatrix> {
    spec.ensure_dense()?;
    OperatorMatrix::new(kron_qubit_fock(&Matrix4::identity(), &fock_annihilation(spec.n_max)), OperatorKind::General)
}

pub fn creation(spec: &SystemSpec) -> Result<OperatorMatrix> {
    Ok(annihilation(spec)?.adjoint())
}

/// Collective two-qubit operators `σ^k = σ_A^k + σ_B^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaKind {
    Plus,
    Minus,
    X,
    Y,
    Z,
}

/// Single-qubit Pauli-type matrix in the `{|0⟩, |1⟩}` basis.
pub fn single_qubit(kind: SigmaKind) -> Matrix2<C64> {
    let plus = Matrix2::new(ZERO, ZERO, ONE, ZERO);
    match kind {
        SigmaKind::Plus => plus,
        SigmaKind::Minus => plus.adjoint(),
        SigmaKind::X => plus + plus.adjoint(),
        SigmaKind::Y => (plus - plus.adjoint()) * (-I),
        SigmaKind::Z => Matrix2::new(-ONE, ZERO, ZERO, ONE),
    }
}

pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

/// `σ_A^k ⊗ 1 + 1 ⊗ σ_B^k` on the two-qubit space.
pub fn collective_sigma_qubits(kind: SigmaKind) -> Matrix4<C64> {
    let s = single_qubit(kind);
    let id = Matrix2::identity();
    kron2(&s, &id) + kron2(&id, &s)
}

pub fn collective_sigma(spec: &SystemSpec, kind: SigmaKind) -> Result<OperatorMatrix> {
    spec.ensure_dense()?;
    let m = kron_qubit_fock(&collective_sigma_qubits(kind), &DMatrix::identity(spec.fock_dim(), spec.fock_dim()));
    let flag = match kind {
        SigmaKind::Plus | SigmaKind::Minus => OperatorKind::General,
        _ => OperatorKind::Hermitian,
    };
    OperatorMatrix::new(m, flag)
}

/// `exp(−i H t)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Cached spectral data of `a† − a` on a truncated Fock space, from which any
/// displacement `D[z] = exp(z a† − z* a)` follows by a diagonal phase rotation.
///
/// The result is the exponential of the truncated generator, so it is exactly
/// unitary on the truncated space and agrees with the untruncated operator
/// for states that stay clear of the cutoff.
#[derive(Clone, Debug)]
pub struct DisplacementGenerator {
    n_max: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl DisplacementGenerator {
    pub fn new(n_max: usize) -> Self {
        let a = fock_annihilation(n_max);
        // i(a† − a) is Hermitian
        let h = (a.adjoint() - &a) * I;
        let eig = SymmetricEigen::new(h);
        Self { n_max, eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Fock-space matrix of `D[z]`.
    pub fn matrix(&self, z: C64) -> DMatrix<C64> {
        let nf = self.n_max + 1;
        let r = z.norm();
        if r == 0.0 {
            return DMatrix::identity(nf, nf);
        }
        let alpha = z.arg();
        // exp(r (a† − a)) = W diag(exp(−i λ r)) W†
        let mut left = self.eigenvectors.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -self.eigenvalues[j] * r);
        }
        let mut m = left * self.eigenvectors.adjoint();
        // conjugate with exp(iα n̂)
        for i in 0..nf {
            for j in 0..nf {
                m[(i, j)] *= C64::from_polar(1.0, alpha * (i as f64 - j as f64));
            }
        }
        m
    }

    /// `D[z]|0⟩`.
    pub fn coherent(&self, z: C64) -> DVector<C64> {
        self.matrix(z).column(0).into_owned()
    }
}

/// Coherent state amplitudes `e^{−|z|²/2} zⁿ/√n!`, truncated and renormalized.
pub fn coherent_state(z: C64, n_max: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n_max + 1);
    let mut c = C64::from_polar((-0.5 * z.norm_sqr()).exp(), 0.0);
    v[0] = c;
    for n in 1..=n_max {
        c *= z / (n as f64).sqrt();
        v[n] = c;
    }
    let norm = v.norm();
    v.unscale(norm)
}

/// Squeezed vacuum `S(r)|0⟩` for `S(r) = exp[(r/2)(a†)² − (r/2)a²]`,
/// built from its closed-form amplitudes and renormalized after truncation.
pub fn squeezed_vacuum(r: f64, n_max: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n_max + 1);
    let t = r.tanh();
    let mut c = 1.0 / r.cosh().sqrt();
    v[0] = C64::new(c, 0.0);
    let mut k = 1;
    while 2 * k <= n_max {
        // c_{2k} = c_{2k−2} · tanh r · √((2k−1)(2k)) / (2k)
        let kk = k as f64;
        c *= t * ((2.0 * kk - 1.0) * 2.0 * kk).sqrt() / (2.0 * kk);
        v[2 * k] = C64::new(c, 0.0);
        k += 1;
    }
    let norm = v.norm();
    v.unscale(norm)
}

/// Population of `S(r)|0⟩` in photon numbers strictly above `n`.
pub fn squeezed_tail(r: f64, n: usize) -> f64 {
    let t2 = r.tanh().powi(2);
    // p_{2k} = p_{2k−2} · tanh²r · (2k−1)/(2k), p_0 = 1/cosh r
    let mut p = 1.0 / r.cosh();
    let mut below = p;
    let mut k = 1usize;
    while 2 * k <= n {
        let kk = k as f64;
        p *= t2 * (2.0 * kk - 1.0) / (2.0 * kk);
        below += p;
        k += 1;
    }
    (1.0 - below).max(0.0)
}

fn fock_top_leakage(v: &DVector<C64>) -> f64 {
    let n = v.len();
    v[n - 1].norm_sqr() + v[n - 2].norm_sqr()
}

/// `1_qubits ⊗ D[z]`.
pub fn displacement_op(spec: &SystemSpec, z: C64) -> Result<OperatorMatrix> {
    spec.ensure_dense()?;
    let gen = DisplacementGenerator::new(spec.n_max);
    let d = gen.matrix(z);
    let leakage = fock_top_leakage(&d.column(0).into_owned());
    if leakage > DEFAULT_LEAKAGE_TOLERANCE {
        return Err(Error::CutoffOverflow { leakage, tolerance: DEFAULT_LEAKAGE_TOLERANCE });
    }
    OperatorMatrix::new(kron_qubit_fock(&Matrix4::identity(), &d), OperatorKind::Unitary)
}

/// Fock-space matrix of `S(r)`, exponentiating the truncated generator.
pub fn fock_squeeze(r: f64, n_max: usize) -> DMatrix<C64> {
    let a = fock_annihilation(n_max);
    let ad = a.adjoint();
    // i · (r/2)(a†² − a²) is Hermitian; S = exp(−i H) with H = i (r/2)(a†² − a²)
    let h = (&ad * &ad - &a * &a) * C64::new(0.0, 0.5 * r);
    expm_hermitian(&h, 1.0)
}

/// `1_qubits ⊗ S(r)`.
pub fn squeeze_op(spec: &SystemSpec, r: f64) -> Result<OperatorMatrix> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("squeezing parameter must be non-negative, got {r}")));
    }
    spec.ensure_dense()?;
    let s = fock_squeeze(r, spec.n_max);
    let leakage = fock_top_leakage(&s.column(0).into_owned());
    if leakage > DEFAULT_LEAKAGE_TOLERANCE {
        return Err(Error::CutoffOverflow { leakage, tolerance: DEFAULT_LEAKAGE_TOLERANCE });
    }
    OperatorMatrix::new(kron_qubit_fock(&Matrix4::identity(), &s), OperatorKind::Unitary)
}

fn check_axis(axis: [f64; 3]) -> Result<()> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::BadAxis { norm });
    }
    Ok(())
}

/// `exp(−i θ n·σ/2)` on one qubit.
pub fn single_qubit_rotation(theta: f64, axis: [f64; 3]) -> Result<Matrix2<C64>> {
    check_axis(axis)?;
    let (s, c) = (0.5 * theta).sin_cos();
    let gen = single_qubit(SigmaKind::X) * C64::from(axis[0])
        + single_qubit(SigmaKind::Y) * C64::from(axis[1])
        + single_qubit(SigmaKind::Z) * C64::from(axis[2]);
    Ok(Matrix2::identity() * C64::from(c) - gen * C64::new(0.0, s))
}

/// The same rotation applied to both qubits, `R[θ; n] = exp(−i θ n·σ/2)` with
/// collective `σ`.
pub fn two_qubit_rotation(theta: f64, axis: [f64; 3]) -> Result<Matrix4<C64>> {
    let r = single_qubit_rotation(theta, axis)?;
    Ok(kron2(&r, &r))
}

pub fn qubit_rotation(spec: &SystemSpec, theta: f64, axis: [f64; 3]) -> Result<OperatorMatrix> {
    spec.ensure_dense()?;
    let r = two_qubit_rotation(theta, axis)?;
    OperatorMatrix::new(
        kron_qubit_fock(&r, &DMatrix::identity(spec.fock_dim(), spec.fock_dim())),
        OperatorKind::Unitary,
    )
}

/// Applies a two-qubit matrix to the qubit factor, leaving the cavity untouched.
pub fn apply_qubit_op(op: &Matrix4<C64>, state: &PureState) -> PureState {
    let nf = state.fock_dim();
    let src = state.amplitudes.as_slice();
    let mut out = DVector::zeros(state.dim());
    for i in 0..4 {
        for j in 0..4 {
            let c = op[(i, j)];
            if c == ZERO {
                continue;
            }
            for n in 0..nf {
                out[i * nf + n] += c * src[j * nf + n];
            }
        }
    }
    PureState { n_max: state.n_max, amplitudes: out }
}

/// Applies one Fock-space matrix per qubit basis label (block-diagonal
/// operator, e.g. a conditional displacement).
pub fn apply_fock_blocks(blocks: [&DMatrix<C64>; 4], state: &PureState) -> PureState {
    let nf = state.fock_dim();
    let mut out = DVector::zeros(state.dim());
    for (q, m) in blocks.iter().enumerate() {
        let v = DVector::from_column_slice(state.block(q));
        out.rows_mut(q * nf, nf).copy_from(&(*m * v));
    }
    PureState { n_max: state.n_max, amplitudes: out }
}

pub fn apply_fock_op(op: &DMatrix<C64>, state: &PureState) -> PureState {
    apply_fock_blocks([op, op, op, op], state)
}

/// `ρ = tr_γ |ψ⟩⟨ψ|` in the `{|00⟩, |01⟩, |10⟩, |11⟩}` basis.
pub fn partial_trace_cavity(state: &PureState) -> QubitDensityMatrix {
    let mut rho = Matrix4::zeros();
    for i in 0..4 {
        let bi = state.block(i);
        for j in i..4 {
            let bj = state.block(j);
            let v: C64 = bi.iter().zip(bj).map(|(x, y)| x * y.conj()).sum();
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }
    QubitDensityMatrix::from_matrix_unchecked(rho)
}
