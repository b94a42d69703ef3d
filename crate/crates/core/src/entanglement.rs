//! Two-qubit concurrence.

use nalgebra::{Matrix4, Schur, SymmetricEigen, Vector4};
use num_complex::Complex64 as C64;

use crate::dynamics::closed_form_populations;
use crate::error::{Error, Result};
use crate::hilbert::{kron2, single_qubit, SigmaKind};

/// Reduced two-qubit state in the `{|00⟩, |01⟩, |10⟩, |11⟩}` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitDensityMatrix(Matrix4<C64>);

impl QubitDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian (defect {herm:.2e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr} != 1")));
        }
        let rho = Self(m);
        let min = rho.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidParameter(format!("density matrix has eigenvalue {min:.2e}")));
        }
        Ok(rho)
    }

    pub fn from_matrix_unchecked(m: Matrix4<C64>) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a normalized two-qubit vector.
    pub fn pure(psi: &Vector4<C64>) -> Self {
        Self(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut e: Vec<f64> = SymmetricEigen::new(self.hermitian_part()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        [e[0], e[1], e[2], e[3]]
    }

    /// Diagonal in the computational basis.
    pub fn populations(&self) -> [f64; 4] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re, self.0[(3, 3)].re]
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &Matrix4<C64>) -> C64 {
        (self.0 * op).trace()
    }

    pub fn conjugate_by(&self, u: &Matrix4<C64>) -> Self {
        Self(u * self.0 * u.adjoint())
    }

    fn hermitian_part(&self) -> Matrix4<C64> {
        (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// `σ_A^y ⊗ σ_B^y`, which is real and symmetric.
pub fn sigma_yy() -> Matrix4<C64> {
    let y = single_qubit(SigmaKind::Y);
    kron2(&y, &y)
}

/// `ρ̃ = (σ^y ⊗ σ^y) ρ* (σ^y ⊗ σ^y)`.
pub fn spin_flip(rho: &QubitDensityMatrix) -> Matrix4<C64> {
    let yy = sigma_yy();
    yy * rho.0.conjugate() * yy
}

/// Wootters eigenvalues and the (signed) naive concurrence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrenceResult {
    /// Square roots of the eigenvalues of `ρρ̃`, descending.
    pub lambdas: [f64; 4],
    /// `λ₁ − λ₂ − λ₃ − λ₄`.
    pub naive: f64,
    /// `max(0, naive)`.
    pub concurrence: f64,
}

impl ConcurrenceResult {
    fn from_lambdas(mut l: [f64; 4]) -> Self {
        l.sort_by(|a, b| b.total_cmp(a));
        let naive = l[0] - l[1] - l[2] - l[3];
        Self { lambdas: l, naive, concurrence: naive.max(0.0) }
    }
}

/// Concurrence from the singular values of `Wᵀ (σ^y⊗σ^y) W`, where
/// `ρ = W W†`. These singular values are exactly the `λ_i`, and the
/// factorized form keeps full absolute precision near zero.
pub fn concurrence(rho: &QubitDensityMatrix) -> Result<ConcurrenceResult> {
    let eig = SymmetricEigen::try_new(rho.hermitian_part(), 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("Hermitian eigendecomposition of rho did not converge".into()))?;
    let mut w = eig.eigenvectors;
    for (k, mut col) in w.column_iter_mut().enumerate() {
        col *= C64::new(eig.eigenvalues[k].max(0.0).sqrt(), 0.0);
    }
    let tau = w.transpose() * sigma_yy() * w;
    let sv = tau
        .try_svd(false, false, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("SVD of the Wootters matrix did not converge".into()))?
        .singular_values;
    Ok(ConcurrenceResult::from_lambdas([sv[0], sv[1], sv[2], sv[3]]))
}

/// Eigenvalues of the non-Hermitian product `ρρ̃`.
pub fn product_eigenvalues(rho: &QubitDensityMatrix) -> Result<[C64; 4]> {
    let m = rho.0 * spin_flip(rho);
    let schur = Schur::try_new(m, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur decomposition of rho*rho_tilde did not converge".into()))?;
    let e = schur
        .eigenvalues()
        .ok_or_else(|| Error::EigenFailure("complex Schur form not triangular".into()))?;
    Ok([e[0], e[1], e[2], e[3]])
}

/// Concurrence by the textbook route: square roots of the clamped eigenvalues
/// of `ρρ̃`. Falls back to the Hermitian `√ρ ρ̃ √ρ` when clamping would
/// discard more than `1e−10`.
pub fn concurrence_eig(rho: &QubitDensityMatrix) -> Result<ConcurrenceResult> {
    let ev = product_eigenvalues(rho)?;
    let worst = ev.iter().map(|e| e.im.abs().max((-e.re).max(0.0))).fold(0.0, f64::max);
    if worst <= 1e-10 {
        let l = ev.map(|e| e.re.max(0.0).sqrt());
        return Ok(ConcurrenceResult::from_lambdas(l));
    }
    let eig = SymmetricEigen::new(rho.hermitian_part());
    let mut sqrt_rho = Matrix4::zeros();
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        sqrt_rho += v * v.adjoint() * C64::new(eig.eigenvalues[k].max(0.0).sqrt(), 0.0);
    }
    let r = sqrt_rho * spin_flip(rho) * sqrt_rho;
    let e = SymmetricEigen::new((r + r.adjoint()) * C64::new(0.5, 0.0)).eigenvalues;
    Ok(ConcurrenceResult::from_lambdas([0, 1, 2, 3].map(|k| e[k].max(0.0).sqrt())))
}

/// `|⟨ψ|σ^y⊗σ^y|ψ*⟩|` for a pure two-qubit state.
pub fn pure_state_concurrence(psi: &Vector4<C64>) -> f64 {
    psi.dotc(&(sigma_yy() * psi.conjugate())).norm()
}

/// Closed-form concurrence `C_n(t)` of the `n`-quanta sector started in
/// `|00; n⟩`.
pub fn sector_concurrence(n: usize, t: f64, g: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (r00, rp, r11) = closed_form_populations(n, t, g);
    (rp - 2.0 * (r00 * r11).sqrt()).max(0.0)
}

/// `max_t C_n(t)`, which is `1/n` for `n ≥ 1`.
pub fn max_sector_concurrence(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 / n as f64
    }
}

/// Numerical maximum of `C_n(t)` over one period `2π/g_n`, by a grid scan
/// refined with golden-section search.
pub fn maximize_sector_concurrence(n: usize, g: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let gn = (4.0 * n as f64 - 2.0).sqrt() * g;
    let period = 2.0 * std::f64::consts::PI / gn;
    let samples = 4000;
    let h = period / samples as f64;
    let f = |t: f64| sector_concurrence(n, t, g);
    let best = (0..=samples).map(|i| i as f64 * h).max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap_or(0.0);
    let (mut a, mut b) = (best - h, best + h);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    while (b - a).abs() > 1e-13 * period {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::single_qubit_rotation;
    use nalgebra::Matrix2;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn ket(v: [f64; 4]) -> Vector4<C64> {
        Vector4::from_iterator(v.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn random_rho(seed: &[f64]) -> QubitDensityMatrix {
        // A = X X† / tr for a 4×4 complex X drawn from the seed values.
        let x = Matrix4::from_fn(|i, j| C64::new(seed[(4 * i + j) % seed.len()], seed[(4 * j + i + 5) % seed.len()]));
        let a = x * x.adjoint();
        QubitDensityMatrix::from_matrix_unchecked(a / a.trace())
    }

    #[test]
    fn spin_flip_examples() {
        let gg = QubitDensityMatrix::pure(&ket([1.0, 0.0, 0.0, 0.0]));
        let ee = ket([0.0, 0.0, 0.0, 1.0]);
        assert!((spin_flip(&gg) - ee * ee.adjoint()).norm() < 1e-15);
        let psi_plus = ket([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]);
        let bell = QubitDensityMatrix::pure(&psi_plus);
        assert!((spin_flip(&bell) - bell.matrix()).norm() < 1e-15);
        let r = random_rho(&[0.3, -1.2, 0.5, 0.9, 2.0, -0.4, 0.1, 0.7, -0.6]);
        let twice = spin_flip(&QubitDensityMatrix::from_matrix_unchecked(spin_flip(&r)));
        assert!((twice - r.matrix()).norm() < 1e-13);
    }

    #[test]
    fn concurrence_examples() {
        let gg = QubitDensityMatrix::pure(&ket([1.0, 0.0, 0.0, 0.0]));
        assert!(concurrence(&gg).unwrap().concurrence.abs() < 1e-15);
        let bell = QubitDensityMatrix::pure(&ket([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]));
        assert!((concurrence(&bell).unwrap().concurrence - 1.0).abs() < 1e-14);
        let mixed = QubitDensityMatrix::new(Matrix4::identity() * C64::new(0.25, 0.0)).unwrap();
        let c = concurrence(&mixed).unwrap();
        for l in c.lambdas {
            assert!((l - 0.25).abs() < 1e-14);
        }
        assert!((c.naive + 0.5).abs() < 1e-14);
        assert_eq!(c.concurrence, 0.0);
    }

    #[test]
    fn svd_and_eigen_routes_agree() {
        let r = random_rho(&[0.3, -1.2, 0.5, 0.9, 2.0, -0.4, 0.1, 0.7, -0.6, 1.1, -0.2]);
        let a = concurrence(&r).unwrap();
        let b = concurrence_eig(&r).unwrap();
        for k in 0..4 {
            assert!((a.lambdas[k] - b.lambdas[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn product_eigenvalues_are_real() {
        let r = random_rho(&[0.8, 0.1, -0.3, 0.4, 1.5, -0.9, 0.2, 0.6, -1.1, 0.05]);
        for e in product_eigenvalues(&r).unwrap() {
            assert!(e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_invalid_density_matrices() {
        let mut m = Matrix4::identity() * C64::new(0.25, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(QubitDensityMatrix::new(m).is_err());
        assert!(QubitDensityMatrix::new(Matrix4::identity() * C64::new(0.5, 0.0)).is_err());
        let neg = Matrix4::from_diagonal(&Vector4::new(1.2, -0.2, 0.0, 0.0).map(|x| C64::new(x, 0.0)));
        assert!(QubitDensityMatrix::new(neg).is_err());
    }

    #[test]
    fn sector_concurrence_examples() {
        let g = 1.0;
        let g1 = 2f64.sqrt();
        for &t in &[0.0, 0.3, 1.1, 2.5] {
            assert!((sector_concurrence(1, t, g) - (g1 * t).sin().powi(2)).abs() < 1e-14);
            assert_eq!(sector_concurrence(0, t, g), 0.0);
        }
        let g2 = 6f64.sqrt();
        let t = (2.0 * PI / 3.0) / g2;
        assert!((sector_concurrence(2, t, g) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sector_maxima() {
        assert_eq!(max_sector_concurrence(0), 0.0);
        assert_eq!(max_sector_concurrence(1), 1.0);
        assert!((max_sector_concurrence(3) - 1.0 / 3.0).abs() < 1e-15);
        for n in 1..=6 {
            let (_, c) = maximize_sector_concurrence(n, 0.37);
            assert!((c - 1.0 / n as f64).abs() < 1e-6, "n = {n}: {c}");
        }
    }

    fn random_unitary2(a: f64, b: f64, c: f64) -> Matrix2<C64> {
        let axis = [b.sin() * c.cos(), b.sin() * c.sin(), b.cos()];
        single_qubit_rotation(a, axis).unwrap() * C64::from_polar(1.0, a * c)
    }

    proptest! {
        #[test]
        fn concurrence_is_local_unitary_invariant(
            seed in proptest::collection::vec(-2.0f64..2.0, 16),
            angles in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let rho = random_rho(&seed);
            let u = kron2(&random_unitary2(angles[0], angles[1], angles[2]), &random_unitary2(angles[3], angles[4], angles[5]));
            let c0 = concurrence(&rho).unwrap();
            let c1 = concurrence(&rho.conjugate_by(&u)).unwrap();
            prop_assert!((c0.concurrence - c1.concurrence).abs() < 1e-9);
            prop_assert!((c0.naive - c1.naive).abs() < 1e-9);
        }

        #[test]
        fn pure_state_formula_matches(re in proptest::collection::vec(-1.0f64..1.0, 4), im in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let mut psi = Vector4::from_fn(|i, _| C64::new(re[i], im[i]));
            let n = psi.norm();
            prop_assume!(n > 1e-3);
            psi /= C64::new(n, 0.0);
            let c = concurrence(&QubitDensityMatrix::pure(&psi)).unwrap();
            prop_assert!((c.concurrence - pure_state_concurrence(&psi)).abs() < 1e-10);
        }

        #[test]
        fn lambdas_are_nonnegative_and_sorted(seed in proptest::collection::vec(-2.0f64..2.0, 16)) {
            let c = concurrence(&random_rho(&seed)).unwrap();
            prop_assert!(c.lambdas.iter().all(|&l| l >= -1e-10));
            prop_assert!(c.lambdas.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c.concurrence));
        }
    }
}
