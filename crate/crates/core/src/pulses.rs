//! Pulse shapes and the pulse functionals.
//!
//! All times are scaled, `u = t/τ_d`. A pulse is `f(u) = f₀(u) cos(κu + φ)`
//! with `κ = ωτ_d` and an envelope `f₀` expanded in normalized
//! Hermite–Gaussian functions. The functionals are running integrals from
//! `−T_u` to `u` weighted by `e^{−iκu}`:
//!
//! ```text
//! s₁     = ∫ f e^{−iκv}
//! s₁₁    = ∫ v f e^{−iκv}
//! s₁₂    = ∫ (v²/2) f e^{−iκv}
//! s₂₂,₁  = ∫ (v²/2) f (−i) s₁*(v) e^{−iκv}
//! s₂₂,₂  = ∫ v f (−i) s₁₁*(v) e^{−iκv}
//! ```

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_adaptive, AdaptiveConfig};

/// Highest Hermite–Gaussian order accepted in an envelope.
pub const MAX_HG_ORDER: usize = 12;

/// Default half-window `T_u`.
pub const DEFAULT_WINDOW: f64 = 5.0;

const GL_ORDER: usize = 12;

/// Values `ψ_0(u), …, ψ_m(u)` of the normalized Hermite–Gaussian functions
/// `ψ_m(u) = (2^m m! √π)^{−1/2} H_m(u) e^{−u²/2}`.
pub fn hg_values(m: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * u * u).exp();
    out.push(psi0);
    if m == 0 {
        return out;
    }
    out.push(2f64.sqrt() * u * psi0);
    for k in 1..m {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Normalized Hermite–Gaussian function of order `m`.
pub fn hg_envelope(m: usize, u: f64) -> f64 {
    hg_values(m, u)[m]
}

/// Slowly varying pulse envelope `f₀(u)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    /// `Σ c_m ψ_m(u)` with real coefficients.
    HermiteGauss(Vec<(usize, f64)>),
    /// `exp(−u²)`.
    Gaussian,
}

impl Envelope {
    pub fn hermite_gauss(terms: Vec<(usize, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("envelope needs at least one term".into()));
        }
        for &(m, c) in &terms {
            if m > MAX_HG_ORDER {
                return Err(Error::InvalidParameter(format!("HG order {m} exceeds {MAX_HG_ORDER}")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("HG coefficient for m = {m} is not finite")));
            }
        }
        Ok(Self::HermiteGauss(terms))
    }

    pub fn hg(m: usize) -> Self {
        Self::HermiteGauss(vec![(m, 1.0)])
    }

    /// `(ψ_0 + ψ_1)/√2`.
    pub fn mixed_parity() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Self::HermiteGauss(vec![(0, c), (1, c)])
    }

    fn max_order(&self) -> usize {
        match self {
            Self::HermiteGauss(t) => t.iter().map(|x| x.0).max().unwrap_or(0),
            Self::Gaussian => 0,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            Self::HermiteGauss(terms) => {
                let psi = hg_values(self.max_order(), u);
                terms.iter().map(|&(m, c)| c * psi[m]).sum()
            }
            Self::Gaussian => (-u * u).exp(),
        }
    }

    /// `d^d/dk^d ∫ f₀(u) e^{−iku} du` for `d ∈ {0, 1, 2}`.
    pub fn fourier(&self, k: f64, derivative: u8) -> C64 {
        assert!(derivative <= 2, "only derivatives up to second order are supported");
        match self {
            Self::HermiteGauss(terms) => {
                // ∫ ψ_m e^{−iku} = √(2π) (−i)^m ψ_m(k)
                let top = self.max_order() + derivative as usize;
                let psi = hg_values(top, k);
                let deriv = |m: usize| -> f64 {
                    // ψ_m' = √(m/2) ψ_{m−1} − √((m+1)/2) ψ_{m+1}
                    let lower = if m > 0 { (m as f64 / 2.0).sqrt() * psi[m - 1] } else { 0.0 };
                    lower - ((m as f64 + 1.0) / 2.0).sqrt() * psi[m + 1]
                };
                let second = |m: usize| -> f64 {
                    // ψ_m'' = (u² − 2m − 1) ψ_m
                    (k * k - 2.0 * m as f64 - 1.0) * psi[m]
                };
                terms
                    .iter()
                    .map(|&(m, c)| {
                        let value = match derivative {
                            0 => psi[m],
                            1 => deriv(m),
                            _ => second(m),
                        };
                        (2.0 * PI).sqrt() * c * value * (-I_UNIT).powu(m as u32)
                    })
                    .sum()
            }
            Self::Gaussian => {
                let f = PI.sqrt() * (-0.25 * k * k).exp();
                let value = match derivative {
                    0 => f,
                    1 => -0.5 * k * f,
                    _ => (0.25 * k * k - 0.5) * f,
                };
                C64::new(value, 0.0)
            }
        }
    }
}

const I_UNIT: C64 = C64 { re: 0.0, im: 1.0 };

/// Drive pulse in scaled time.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec {
    /// `ωτ_d`.
    pub omega_tau_d: f64,
    /// `Ωτ_d`.
    pub area: f64,
    /// Carrier-envelope phase.
    pub phi: f64,
    pub envelope: Envelope,
    /// Half-window `T_u = T/τ_d`.
    pub window: f64,
    /// When false the pulse is the bare envelope, `f(u) = f₀(u)`.
    pub carrier: bool,
}

impl PulseSpec {
    pub fn new(omega_tau_d: f64, area: f64, phi: f64, envelope: Envelope) -> Result<Self> {
        Self { omega_tau_d, area, phi, envelope, window: DEFAULT_WINDOW, carrier: true }.validated()
    }

    pub fn with_window(mut self, window: f64) -> Result<Self> {
        self.window = window;
        self.validated()
    }

    pub fn without_carrier(mut self) -> Self {
        self.carrier = false;
        self
    }

    pub fn with_area(&self, area: f64) -> Self {
        Self { area, ..self.clone() }
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.omega_tau_d > 0.0 && self.omega_tau_d.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_tau_d must be positive, got {}", self.omega_tau_d)));
        }
        if !self.area.is_finite() || self.area < 0.0 {
            return Err(Error::InvalidParameter(format!("pulse area must be non-negative, got {}", self.area)));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidParameter("carrier-envelope phase must be finite".into()));
        }
        if !(self.window >= 4.0 && self.window.is_finite()) {
            return Err(Error::InvalidParameter(format!("window T_u must be at least 4, got {}", self.window)));
        }
        if let Envelope::HermiteGauss(t) = &self.envelope {
            Envelope::hermite_gauss(t.clone())?;
        }
        if self.carrier && self.omega_tau_d < 3.0 {
            log::warn!("omega_tau_d = {:.3} leaves the carrier poorly defined", self.omega_tau_d);
        }
        Ok(self)
    }

    pub fn kappa(&self) -> f64 {
        self.omega_tau_d
    }

    /// `f(u)`.
    pub fn value(&self, u: f64) -> f64 {
        let f0 = self.envelope.value(u);
        if self.carrier {
            f0 * (self.omega_tau_d * u + self.phi).cos()
        } else {
            f0
        }
    }

    /// `d^d/dk^d f̂(k)` for the full pulse.
    pub fn fourier(&self, k: f64, derivative: u8) -> C64 {
        if !self.carrier {
            return self.envelope.fourier(k, derivative);
        }
        let kappa = self.omega_tau_d;
        let e = C64::from_polar(0.5, self.phi);
        e * self.envelope.fourier(k - kappa, derivative) + e.conj() * self.envelope.fourier(k + kappa, derivative)
    }

    /// Infinite-window limits of `(s₁, s₁₁, s₁₂)`.
    pub fn asymptotic_functionals(&self) -> (C64, C64, C64) {
        let k = self.omega_tau_d;
        (self.fourier(k, 0), I_UNIT * self.fourier(k, 1), -0.5 * self.fourier(k, 2))
    }

    /// Panel width resolving both the envelope and the carrier.
    pub(crate) fn panel_width(&self) -> f64 {
        let carrier = 2.0 * PI / (8.0 * self.omega_tau_d);
        let envelope = 0.25 / (1.0 + self.envelope.max_order() as f64 / 4.0).sqrt();
        carrier.min(envelope)
    }
}

/// `f(u)` of the pulse.
pub fn pulse_value(p: &PulseSpec, u: f64) -> f64 {
    p.value(u)
}

/// `d^d/dk^d f̂₀(k)` of the envelope alone.
pub fn envelope_fourier(p: &PulseSpec, k: f64, derivative: u8) -> C64 {
    p.envelope.fourier(k, derivative)
}

fn phase(p: &PulseSpec, v: f64) -> C64 {
    C64::from_polar(1.0, -p.omega_tau_d * v)
}

fn running_integral<F: Fn(f64) -> C64>(p: &PulseSpec, u: f64, weight: F) -> Result<C64> {
    let a = -p.window;
    let b = u.min(p.window);
    if b <= a {
        return Ok(C64::new(0.0, 0.0));
    }
    let pieces = ((b - a) / p.panel_width()).ceil() as usize;
    let cfg = AdaptiveConfig { abs_tol: 1e-13, rel_tol: 1e-13, ..AdaptiveConfig::default() };
    integrate_adaptive(|v| weight(v) * p.value(v) * phase(p, v), a, b, pieces, &cfg)
}

/// `s₁(u)` by adaptive quadrature.
pub fn functional_s1(p: &PulseSpec, u: f64) -> Result<C64> {
    running_integral(p, u, |_| C64::new(1.0, 0.0))
}

/// `s₁₁(u)` by adaptive quadrature.
pub fn functional_s11(p: &PulseSpec, u: f64) -> Result<C64> {
    running_integral(p, u, |v| C64::new(v, 0.0))
}

/// `s₁₂(u)` by adaptive quadrature.
pub fn functional_s12(p: &PulseSpec, u: f64) -> Result<C64> {
    running_integral(p, u, |v| C64::new(0.5 * v * v, 0.0))
}

/// `s₂₂(u) = s₂₂,₁(u) + s₂₂,₂(u)`.
pub fn functional_s22(p: &PulseSpec, u: f64) -> Result<C64> {
    let f = FunctionalTable::new(p).at(u);
    Ok(f.s221 + f.s222)
}

/// Functional values at one query time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalSet {
    pub u: f64,
    pub s1: C64,
    pub s11: C64,
    pub s12: C64,
    pub s221: C64,
    pub s222: C64,
    /// `∫ f (−i) s₁*(v) e^{−iκv}`, which sets the scalar phase of the
    /// second interaction picture.
    pub gauge: C64,
}

impl FunctionalSet {
    pub fn s22(&self) -> C64 {
        self.s221 + self.s222
    }

    pub fn is_finite(&self) -> bool {
        [self.s1, self.s11, self.s12, self.s221, self.s222, self.gauge].iter().all(|c| c.is_finite())
    }
}

/// Cumulative functionals on a panel grid over `[−T_u, T_u]`.
///
/// Values at panel edges are stored; a query integrates the remaining
/// partial panel with the same Gauss–Legendre rule. Inner functionals in the
/// nested integrands are evaluated the same way, so the table is exact to the
/// accuracy of the composite rule.
#[derive(Clone, Debug)]
pub struct FunctionalTable {
    pulse: PulseSpec,
    edges: Vec<f64>,
    // per edge: s1, s11, s12, s221, s222, gauge
    cumulative: Vec<[C64; 6]>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FunctionalTable {
    pub fn new(p: &PulseSpec) -> Self {
        Self::with_refinement(p, 1)
    }

    /// Builds the table with panels `refinement` times narrower than default.
    pub fn with_refinement(p: &PulseSpec, refinement: usize) -> Self {
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        let span = 2.0 * p.window;
        let panels = ((span / p.panel_width()).ceil() as usize).max(1) * refinement.max(1);
        let h = span / panels as f64;
        let edges: Vec<f64> = (0..=panels).map(|i| -p.window + i as f64 * h).collect();
        let mut table = Self { pulse: p.clone(), edges, cumulative: Vec::with_capacity(panels + 1), nodes, weights };
        let zero = C64::new(0.0, 0.0);
        table.cumulative.push([zero; 6]);
        for i in 0..panels {
            let (s1, s11, s12) = table.first_order_partial(i, table.edges[i + 1]);
            let (s221, s222, gauge) = table.second_order_partial(i, table.edges[i + 1]);
            let prev = table.cumulative[i];
            table.cumulative.push([
                prev[0] + s1,
                prev[1] + s11,
                prev[2] + s12,
                prev[3] + s221,
                prev[4] + s222,
                prev[5] + gauge,
            ]);
        }
        table
    }

    pub fn pulse(&self) -> &PulseSpec {
        &self.pulse
    }

    fn panel_of(&self, u: f64) -> usize {
        let h = self.edges[1] - self.edges[0];
        let i = ((u - self.edges[0]) / h).floor();
        (i.max(0.0) as usize).min(self.edges.len() - 2)
    }

    fn map_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (a + half * (x + 1.0), half * w))
    }

    fn first_order_partial(&self, panel: usize, b: f64) -> (C64, C64, C64) {
        let a = self.edges[panel];
        let mut acc = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        if b <= a {
            return acc;
        }
        for (v, w) in self.map_nodes(a, b) {
            let base = phase(&self.pulse, v) * (self.pulse.value(v) * w);
            acc.0 += base;
            acc.1 += base * v;
            acc.2 += base * (0.5 * v * v);
        }
        acc
    }

    fn first_order_at(&self, u: f64) -> (C64, C64, C64) {
        let p = self.panel_of(u);
        let c = self.cumulative[p];
        let (a, b, d) = self.first_order_partial(p, u);
        (c[0] + a, c[1] + b, c[2] + d)
    }

    fn second_order_partial(&self, panel: usize, b: f64) -> (C64, C64, C64) {
        let a = self.edges[panel];
        let zero = C64::new(0.0, 0.0);
        let mut acc = (zero, zero, zero);
        if b <= a {
            return acc;
        }
        for (v, w) in self.map_nodes(a, b) {
            let (s1, s11, _) = self.first_order_at(v);
            let base = phase(&self.pulse, v) * (self.pulse.value(v) * w);
            let m1 = -I_UNIT * s1.conj();
            let m11 = -I_UNIT * s11.conj();
            acc.0 += base * m1 * (0.5 * v * v);
            acc.1 += base * m11 * v;
            acc.2 += base * m1;
        }
        acc
    }

    /// All functionals at `u`; queries outside the window are clamped.
    pub fn at(&self, u: f64) -> FunctionalSet {
        let u = u.clamp(self.edges[0], *self.edges.last().expect("non-empty grid"));
        let p = self.panel_of(u);
        let c = self.cumulative[p];
        let (s1, s11, s12) = self.first_order_partial(p, u);
        let (s221, s222, gauge) = self.second_order_partial(p, u);
        FunctionalSet {
            u,
            s1: c[0] + s1,
            s11: c[1] + s11,
            s12: c[2] + s12,
            s221: c[3] + s221,
            s222: c[4] + s222,
            gauge: c[5] + gauge,
        }
    }

    /// Functionals at the end of the window.
    pub fn final_values(&self) -> FunctionalSet {
        self.at(self.pulse.window)
    }

    /// `∫|f|` over the window, an upper bound on `|s₁|`.
    pub fn abs_integral(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.edges.len() - 1 {
            for (v, w) in self.map_nodes(self.edges[i], self.edges[i + 1]) {
                total += w * self.pulse.value(v).abs();
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::CompositeRule;
    use proptest::prelude::*;

    fn hg0(kappa: f64, area: f64, phi: f64) -> PulseSpec {
        PulseSpec::new(kappa, area, phi, Envelope::hg(0)).unwrap()
    }

    #[test]
    fn hg_reference_values() {
        assert!((hg_envelope(0, 0.0) - 0.751126).abs() < 1e-6);
        assert_eq!(hg_envelope(1, 0.0), 0.0);
    }

    #[test]
    fn hg_functions_are_orthonormal() {
        let rule = CompositeRule::new(-12.0, 12.0, 96, 12);
        for m in 0..=MAX_HG_ORDER {
            for n in 0..=m {
                let v = rule.integrate(|u| C64::new(hg_envelope(m, u) * hg_envelope(n, u), 0.0)).re;
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "<{m}|{n}> = {v}");
            }
        }
    }

    #[test]
    fn hg_matches_explicit_hermite_polynomials() {
        let u: f64 = 0.7;
        let norm = |m: u32| ((1u64 << m) as f64 * (1..=m as u64).product::<u64>() as f64 * PI.sqrt()).sqrt();
        let g = (-0.5 * u * u).exp();
        let h3 = 8.0 * u.powi(3) - 12.0 * u;
        let h4 = 16.0 * u.powi(4) - 48.0 * u * u + 12.0;
        assert!((hg_envelope(3, u) - h3 * g / norm(3)).abs() < 1e-14);
        assert!((hg_envelope(4, u) - h4 * g / norm(4)).abs() < 1e-14);
    }

    #[test]
    fn pulse_value_reference_points() {
        assert!((hg0(PI, 1.0, 0.0).value(0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert!(hg0(PI, 1.0, PI / 2.0).value(0.0).abs() < 1e-15);
        let odd = PulseSpec::new(PI, 1.0, 0.3, Envelope::hg(1)).unwrap();
        assert_eq!(odd.value(0.0), 0.0);
    }

    #[test]
    fn envelope_fourier_reference_values() {
        let p = hg0(PI, 1.0, 0.0);
        let f0 = envelope_fourier(&p, 0.0, 0);
        assert!((f0.re - 2f64.sqrt() * PI.powf(0.25)).abs() < 1e-12 && f0.im.abs() < 1e-15);
        assert!((f0.re - 1.88279).abs() < 1e-5);
        assert!(envelope_fourier(&p, 2.0 * PI, 0).norm() < 1e-4);
        let odd = PulseSpec::new(PI, 1.0, 0.0, Envelope::hg(1)).unwrap();
        assert!(envelope_fourier(&odd, 0.0, 0).norm() < 1e-15);
        let d1 = envelope_fourier(&odd, 0.0, 1);
        assert!((d1 - C64::new(0.0, -2.0 * PI.powf(0.25))).norm() < 1e-12);
    }

    #[test]
    fn envelope_fourier_matches_quadrature() {
        let env = Envelope::HermiteGauss(vec![(0, 0.3), (1, -0.5), (2, 0.8), (5, 0.2)]);
        let rule = CompositeRule::new(-14.0, 14.0, 160, 12);
        for &k in &[0.0, 0.4, 1.3, 2.7] {
            for d in 0..=2u8 {
                let q = rule.integrate(|u| {
                    let w = (C64::new(0.0, -u)).powu(d as u32);
                    w * env.value(u) * C64::from_polar(1.0, -k * u)
                });
                assert!((q - env.fourier(k, d)).norm() < 1e-12, "k={k} d={d}");
            }
        }
        let g = Envelope::Gaussian;
        for d in 0..=2u8 {
            let q = rule.integrate(|u| (C64::new(0.0, -u)).powu(d as u32) * g.value(u) * C64::from_polar(1.0, -1.1 * u));
            assert!((q - g.fourier(1.1, d)).norm() < 1e-12);
        }
    }

    #[test]
    fn s1_asymptote_for_hg0() {
        let p = hg0(PI, 1.0, 0.0);
        let s1 = functional_s1(&p, p.window).unwrap();
        let half = 0.5 * 2f64.sqrt() * PI.powf(0.25);
        assert!((half - 0.94139).abs() < 1e-5);
        let bound = 0.5 * envelope_fourier(&p, 2.0 * PI, 0).norm() + 1e-6;
        assert!((s1 - half).norm() <= bound);
        let wide = p.clone().with_window(10.0).unwrap();
        assert!((functional_s1(&wide, wide.window).unwrap() - wide.asymptotic_functionals().0).norm() < 1e-10);
    }

    #[test]
    fn odd_envelope_suppresses_s1() {
        let p = PulseSpec::new(PI, 1.0, 0.0, Envelope::hg(1)).unwrap();
        assert!(functional_s1(&p, p.window).unwrap().norm() < 1e-3);
        let s11 = functional_s11(&p, p.window).unwrap();
        assert!((s11.norm() - PI.powf(0.25)).abs() < 1e-3);
        assert!((s11.norm() - 1.33133).abs() < 1e-3);
    }

    #[test]
    fn even_envelope_suppresses_s11() {
        let p = hg0(PI, 1.0, 0.4);
        assert!(functional_s11(&p, p.window).unwrap().norm() < 1e-3);
    }

    #[test]
    fn s12_matches_second_moment_identity() {
        let p = hg0(PI, 1.0, 0.0);
        let s12 = functional_s12(&p, p.window).unwrap();
        let oracle = 0.5 * -0.5 * envelope_fourier(&p, 0.0, 2);
        assert!(s12.norm() > 0.4);
        assert!((s12 - oracle).norm() < 1e-3);
        let wide = p.clone().with_window(10.0).unwrap();
        assert!((functional_s12(&wide, wide.window).unwrap() - wide.asymptotic_functionals().2).norm() < 1e-10);
    }

    #[test]
    fn functionals_vanish_at_window_start() {
        let p = PulseSpec::new(PI, 1.0, 0.2, Envelope::mixed_parity()).unwrap();
        let t = FunctionalTable::new(&p);
        let f = t.at(-p.window);
        for c in [f.s1, f.s11, f.s12, f.s221, f.s222, f.gauge] {
            assert_eq!(c, C64::new(0.0, 0.0));
        }
        assert_eq!(functional_s1(&p, -p.window).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn table_agrees_with_adaptive_functionals() {
        let p = PulseSpec::new(2.0 * PI, 1.0, 0.7, Envelope::mixed_parity()).unwrap();
        let t = FunctionalTable::new(&p);
        for &u in &[-1.3, 0.0, 0.37, 2.1, p.window] {
            let f = t.at(u);
            assert!((f.s1 - functional_s1(&p, u).unwrap()).norm() < 1e-11);
            assert!((f.s11 - functional_s11(&p, u).unwrap()).norm() < 1e-11);
            assert!((f.s12 - functional_s12(&p, u).unwrap()).norm() < 1e-11);
        }
    }

    #[test]
    fn table_refinement_is_converged() {
        let p = PulseSpec::new(PI, 1.0, 0.0, Envelope::hg(1)).unwrap();
        let a = FunctionalTable::new(&p).final_values();
        let b = FunctionalTable::with_refinement(&p, 2).final_values();
        for (x, y) in [(a.s1, b.s1), (a.s11, b.s11), (a.s12, b.s12), (a.s221, b.s221), (a.s222, b.s222)] {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn s22_matches_trapezoid_oracle() {
        let p = PulseSpec::new(PI, 4.1, 0.0, Envelope::hg(1)).unwrap();
        let n = 400_000;
        let h = 2.0 * p.window / n as f64;
        let integrand = |v: f64| p.value(v) * C64::from_polar(1.0, -p.kappa() * v);
        let zero = C64::new(0.0, 0.0);
        let (mut s1, mut s11, mut s221, mut s222) = (zero, zero, zero, zero);
        let mut prev: Option<(f64, C64, C64, C64)> = None;
        for i in 0..=n {
            let v = -p.window + i as f64 * h;
            let e = integrand(v);
            if let Some((pv, pe, ps1, ps11)) = prev {
                s1 += 0.5 * h * (pe + e);
                s11 += 0.5 * h * (pv * pe + v * e);
                let outer =
                    |u: f64, f: C64, a: C64, b: C64| (0.5 * u * u * f * (-I_UNIT * a.conj()), u * f * (-I_UNIT * b.conj()));
                let (x0, y0) = outer(pv, pe, ps1, ps11);
                let (x1, y1) = outer(v, e, s1, s11);
                s221 += 0.5 * h * (x0 + x1);
                s222 += 0.5 * h * (y0 + y1);
            }
            prev = Some((v, e, s1, s11));
        }
        let table = FunctionalTable::new(&p).final_values();
        assert!((table.s221 + table.s222 - s221 - s222).norm() < 1e-8);
        assert!((functional_s22(&p, p.window).unwrap() - table.s221 - table.s222).norm() < 1e-14);
    }

    #[test]
    fn s1_bounded_by_abs_integral() {
        let p = PulseSpec::new(PI, 1.0, 1.0, Envelope::mixed_parity()).unwrap();
        let t = FunctionalTable::new(&p);
        assert!(t.final_values().s1.norm() <= t.abs_integral());
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(PulseSpec::new(0.0, 1.0, 0.0, Envelope::hg(0)).is_err());
        assert!(PulseSpec::new(PI, 1.0, 0.0, Envelope::hg(0)).unwrap().with_window(3.0).is_err());
        assert!(Envelope::hermite_gauss(vec![(13, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn functionals_are_linear_in_the_envelope(c in 0.1f64..3.0, phi in -3.0f64..3.0) {
            let base = PulseSpec::new(PI, 1.0, phi, Envelope::HermiteGauss(vec![(0, 0.6), (1, 0.8)])).unwrap();
            let scaled = PulseSpec::new(PI, 1.0, phi, Envelope::HermiteGauss(vec![(0, 0.6 * c), (1, 0.8 * c)])).unwrap();
            let a = FunctionalTable::new(&base).final_values();
            let b = FunctionalTable::new(&scaled).final_values();
            prop_assert!((b.s1 - a.s1 * c).norm() < 1e-12 * c.max(1.0));
            prop_assert!((b.s11 - a.s11 * c).norm() < 1e-12 * c.max(1.0));
            prop_assert!((b.s12 - a.s12 * c).norm() < 1e-12 * c.max(1.0));
        }

        #[test]
        fn s1_asymptote_holds_above_two_pi(kappa in 6.3f64..20.0, phi in -3.0f64..3.0) {
            let p = hg0(kappa, 1.0, phi);
            let s1 = FunctionalTable::new(&p).final_values().s1;
            let target = C64::from_polar(0.5, phi) * envelope_fourier(&p, 0.0, 0);
            let bound = 0.5 * envelope_fourier(&p, 2.0 * kappa, 0).norm() + 1e-6;
            prop_assert!((s1 - target).norm() <= bound);
        }
    }
}
