//! Adaptive Dormand–Prince 8(5,3) stepping for complex linear ODE systems.
//!
//! The error estimate and step-size control follow the classic DOP853
//! scheme: a fifth- and a third-order embedded estimate combined into one
//! norm, step factor `0.9·err^(−1/8)` clamped to `[0.2, 10]`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

const C: [f64; 12] = [0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0];
const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0],
];
const B: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const E3: [f64; 13] = [-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0];
const E5: [f64; 13] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0];

/// Step control parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed `|h|`.
    pub max_step: f64,
    /// Budget of attempted steps for one `integrate` call.
    pub max_steps: usize,
}

/// Counters collected while integrating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Reusable DOP853 workspace for a right-hand side `rhs(t, y, dy)`.
pub struct Dop853<F> {
    rhs: F,
    k: Vec<Vec<C64>>,
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    pub stats: StepStats,
}

impl<F: FnMut(f64, &[C64], &mut [C64])> Dop853<F> {
    pub fn new(dim: usize, rhs: F) -> Self {
        Self {
            rhs,
            k: vec![vec![C64::new(0.0, 0.0); dim]; STAGES + 1],
            y_stage: vec![C64::new(0.0, 0.0); dim],
            y_new: vec![C64::new(0.0, 0.0); dim],
            stats: StepStats::default(),
        }
    }

    fn eval(&mut self, stage: usize, t: f64, from_stage: bool) {
        let src: &[C64] = if from_stage { &self.y_stage } else { &self.y_new };
        (self.rhs)(t, src, &mut self.k[stage]);
        self.stats.evaluations += 1;
    }

    fn initial_step(&mut self, t: f64, y: &[C64], direction: f64, ctl: &StepControl) -> f64 {
        // k[0] holds f(t, y)
        let n = y.len() as f64;
        let scale = |v: &C64| ctl.atol + v.norm() * ctl.rtol;
        let d0 = (y.iter().map(|v| (v.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.k[0].iter().zip(y).map(|(f, v)| (f.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for (ys, (yi, fi)) in self.y_stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *ys = yi + fi * (direction * h0);
        }
        self.eval(1, t + direction * h0, true);
        let d2 = (self.k[1]
            .iter()
            .zip(&self.k[0])
            .zip(y)
            .map(|((f1, f0), v)| ((f1 - f0).norm() / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(ctl.max_step)
    }

    /// Integrates `y` from `t0` to `t1` in place. `h` carries the step size
    /// between calls (pass `0.0` to choose one automatically). After every
    /// accepted step `on_accept(t, y)` may adjust the state or abort.
    pub fn integrate<G>(&mut self, t0: f64, t1: f64, y: &mut [C64], h: &mut f64, ctl: &StepControl, mut on_accept: G) -> Result<()>
    where
        G: FnMut(f64, &mut [C64]) -> Result<()>,
    {
        if t1 == t0 {
            return Ok(());
        }
        let direction = (t1 - t0).signum();
        let n = y.len();
        let mut t = t0;
        self.y_new.copy_from_slice(y);
        self.eval(0, t, false);
        let mut h_abs = if *h > 0.0 { h.min(ctl.max_step) } else { self.initial_step(t, y, direction, ctl) };
        let mut attempts = 0usize;
        while direction * (t1 - t) > 0.0 {
            let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
            let mut rejected = false;
            loop {
                attempts += 1;
                if attempts > ctl.max_steps {
                    return Err(Error::StepControlFailure { t, reason: format!("exceeded {} steps", ctl.max_steps) });
                }
                if h_abs < min_step {
                    return Err(Error::StepControlFailure { t, reason: format!("step size {h_abs:.3e} underflow") });
                }
                let mut t_new = t + h_abs * direction;
                let clipped = direction * (t_new - t1) > 0.0;
                if clipped {
                    t_new = t1;
                }
                let hs = t_new - t;
                let step = hs.abs();
                for s in 1..STAGES {
                    for i in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for j in 0..s {
                            let a = A[s][j];
                            if a != 0.0 {
                                acc += self.k[j][i] * a;
                            }
                        }
                        self.y_stage[i] = y[i] + acc * hs;
                    }
                    self.eval(s, t + C[s] * hs, true);
                }
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..STAGES {
                        let b = B[j];
                        if b != 0.0 {
                            acc += self.k[j][i] * b;
                        }
                    }
                    self.y_new[i] = y[i] + acc * hs;
                }
                self.eval(STAGES, t_new, false);
                let mut e5 = 0.0;
                let mut e3 = 0.0;
                for i in 0..n {
                    let scale = ctl.atol + y[i].norm().max(self.y_new[i].norm()) * ctl.rtol;
                    let mut a5 = C64::new(0.0, 0.0);
                    let mut a3 = C64::new(0.0, 0.0);
                    for j in 0..=STAGES {
                        a5 += self.k[j][i] * E5[j];
                        a3 += self.k[j][i] * E3[j];
                    }
                    e5 += (a5.norm() / scale).powi(2);
                    e3 += (a3.norm() / scale).powi(2);
                }
                let error = if e5 == 0.0 && e3 == 0.0 {
                    0.0
                } else {
                    step * e5 / ((e5 + 0.01 * e3) * n as f64).sqrt()
                };
                if error < 1.0 {
                    let mut factor = if error == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * error.powf(ERROR_EXPONENT)) };
                    if rejected {
                        factor = factor.min(1.0);
                    }
                    // a step shortened to land on t1 says nothing about the next one
                    let proposal = if clipped { h_abs.max(step * factor) } else { step * factor };
                    h_abs = proposal.min(ctl.max_step);
                    t = t_new;
                    y.copy_from_slice(&self.y_new);
                    self.stats.accepted += 1;
                    on_accept(t, y)?;
                    self.y_new.copy_from_slice(y);
                    self.eval(0, t, false);
                    break;
                }
                h_abs = step * MIN_FACTOR.max(SAFETY * error.powf(ERROR_EXPONENT));
                rejected = true;
                self.stats.rejected += 1;
            }
        }
        *h = h_abs.min(ctl.max_step);
        Ok(())
    }
}
