//! Dispatch from a validated config to library calls.

use num_complex::Complex64 as C64;
use qcavity::dynamics::{evolve_driven_sampled, evolve_free, Coupling, IntegratorConfig};
use qcavity::entanglement::{concurrence, maximize_sector_concurrence, max_sector_concurrence, sector_concurrence};
use qcavity::hilbert::{partial_trace_cavity, qubits};
use qcavity::magnus::{analytic_evolve, displacement_amplitude, fidelity_sweep, log_grid, rotation_params, FidelitySetup};
use qcavity::quasistatic::{
    comparable_peaks, quench_concurrence, recommended_cutoff, spectral_peaks, summarize_quench, uniform_grid,
};
use qcavity::validation::rwa_comparison;
use qcavity::hilbert::DEFAULT_LEAKAGE_TOLERANCE;
use qcavity::{Envelope, PulseSpec, PureState, SystemSpec};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{qubit_index, ConfigError, ScenarioConfig, ScenarioKind};
use crate::output::{Report, Table};

/// Share of the strongest spectral peak that counts as comparable.
pub const COMPARABLE_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] qcavity::Error),
}

type Result<T> = std::result::Result<T, RunError>;

const QUBIT_LABELS: [&str; 4] = ["00", "01", "10", "11"];

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn naive(state: &PureState) -> qcavity::Result<f64> {
    Ok(concurrence(&partial_trace_cavity(state))?.naive)
}

/// Runs a scenario; the config must already be validated.
pub fn run(cfg: &ScenarioConfig) -> Result<Report> {
    let mut report = match cfg.kind {
        ScenarioKind::Evolve => run_evolve(cfg),
        ScenarioKind::ConcurrenceSectors => run_sectors(cfg),
        ScenarioKind::Subcycle => run_subcycle(cfg),
        ScenarioKind::FidelitySweep => run_fidelity(cfg),
        ScenarioKind::Quasistatic => run_quasistatic(cfg),
        ScenarioKind::RwaCheck => run_rwa(cfg),
    }?;
    let mut resolved = Vec::new();
    if let Some(p) = cfg.pulse_spec()? {
        resolved.extend([
            ("pulse.omega_tau_d".to_string(), p.omega_tau_d.to_string()),
            ("pulse.area".to_string(), p.area.to_string()),
            ("pulse.phi".to_string(), p.phi.to_string()),
        ]);
    }
    if cfg.system.is_some() && cfg.kind != ScenarioKind::Quasistatic {
        let spec = cfg.system_spec()?;
        resolved.extend([("system.g_over_omega".to_string(), spec.g.to_string()), ("system.n_max".to_string(), spec.n_max.to_string())]);
    }
    resolved.append(&mut report.resolved);
    report.resolved = resolved;
    Ok(report)
}

fn pulse_or_idle(cfg: &ScenarioConfig) -> Result<PulseSpec> {
    match cfg.pulse_spec()? {
        Some(p) => Ok(p),
        None => Ok(PulseSpec::new(std::f64::consts::PI, 0.0, 0.0, Envelope::hg(0))?),
    }
}

fn run_evolve(cfg: &ScenarioConfig) -> Result<Report> {
    let spec = cfg.system_spec()?;
    let section = cfg.evolve_section();
    let icfg = cfg.integrator_config()?;
    let (t0, t1) = cfg.evolve_window()?;
    let times = linspace(t0, t1, section.points);
    let q0 = qubit_index(&section.initial_qubits).expect("validated label");
    let psi0 = PureState::basis(&spec, q0, section.initial_photons);
    let coupling: Coupling = section.coupling.into();
    let states = if cfg.pulse.is_none() && coupling == Coupling::Rwa {
        times.iter().map(|&t| evolve_free(&psi0, spec.g, t - t0)).collect()
    } else {
        evolve_driven_sampled(&psi0, &pulse_or_idle(cfg)?, &spec, &times, &icfg, coupling)?
    };
    let selected: Vec<(usize, usize)> =
        section.amplitudes.iter().map(|(l, n)| (qubit_index(l).expect("validated label"), *n)).collect();
    let mut columns = vec!["t".to_string()];
    for &(q, n) in &selected {
        columns.push(format!("re_{}_{n}", QUBIT_LABELS[q]));
        columns.push(format!("im_{}_{n}", QUBIT_LABELS[q]));
    }
    columns.extend(QUBIT_LABELS.iter().map(|l| format!("p_{l}")));
    columns.extend(["photon_number", "naive_concurrence", "leakage"].map(String::from));
    let mut table = Table::new(columns);
    let mut max_leakage: f64 = 0.0;
    for (t, s) in times.iter().zip(&states) {
        let mut row = vec![*t];
        for &(q, n) in &selected {
            let a = s.amplitude(q, n);
            row.extend([a.re, a.im]);
        }
        row.extend(s.qubit_populations());
        max_leakage = max_leakage.max(s.leakage());
        row.extend([s.photon_number(), naive(s)?, s.leakage()]);
        table.push(row);
    }
    let mut report = Report::new(table);
    report.resolve("t_start", t0);
    report.resolve("t_end", t1);
    report.summarize("max_leakage", max_leakage);
    Ok(report)
}

fn run_sectors(cfg: &ScenarioConfig) -> Result<Report> {
    let s = cfg.sectors_section();
    let grid = linspace(0.0, s.gt_end, s.points);
    let mut columns = vec!["g_t".to_string()];
    columns.extend(s.sectors.iter().map(|n| format!("C_{n}")));
    let mut table = Table::new(columns);
    for &gt in &grid {
        let mut row = vec![gt];
        row.extend(s.sectors.iter().map(|&n| sector_concurrence(n, gt, 1.0)));
        table.push(row);
    }
    let mut report = Report::new(table);
    for &n in &s.sectors {
        let (t, c) = maximize_sector_concurrence(n, 1.0);
        report.summarize(format!("max_C_{n}"), c);
        report.summarize(format!("g_t_at_max_C_{n}"), t);
        report.summarize(format!("expected_max_C_{n}"), max_sector_concurrence(n));
    }
    Ok(report)
}

fn run_subcycle(cfg: &ScenarioConfig) -> Result<Report> {
    let spec = cfg.system_spec()?;
    let p = cfg.pulse_spec()?.expect("validated pulse");
    let icfg = cfg.integrator_config()?;
    let order = cfg.subcycle_section().order;
    let (t0, t1) = cfg.subcycle_window()?;
    let times = linspace(t0, t1, cfg.subcycle_section().points);
    let psi0 = PureState::basis(&spec, qubits::GG, 0);
    let numeric = evolve_driven_sampled(&psi0, &p, &spec, &times, &icfg, Coupling::Rwa)?;
    let analytic: Vec<PureState> =
        times.par_iter().map(|&t| analytic_evolve(&psi0, &p, &spec, order, t)).collect::<qcavity::Result<_>>()?;
    let mut table =
        Table::new(["t", "naive_concurrence_numeric", "naive_concurrence_analytic"].map(String::from).to_vec());
    for ((t, n), a) in times.iter().zip(&numeric).zip(&analytic) {
        table.push(vec![*t, naive(n)?, naive(a)?]);
    }
    let mut report = Report::new(table);
    report.resolve("t_start", t0);
    report.resolve("t_end", t1);
    report.resolve("g_tau_d", spec.g * p.omega_tau_d / spec.omega);
    report.summarize("z_T_squared", displacement_amplitude(&p, p.window)?.norm_sqr());
    if order >= 2 {
        match rotation_params(&p, &spec, p.window) {
            Ok((theta, _)) => report.summarize("theta_T", theta),
            Err(e) => report.summarize("theta_T", format!("undefined ({e})")),
        }
    }
    let (last_n, last_a) = (numeric.last().expect("points ≥ 2"), analytic.last().expect("points ≥ 2"));
    report.summarize("final_photon_number", last_n.photon_number());
    report.summarize("final_overlap", last_n.fidelity(last_a));
    Ok(report)
}

fn run_fidelity(cfg: &ScenarioConfig) -> Result<Report> {
    let f = cfg.fidelity.as_ref().expect("validated fidelity section");
    let z0 = C64::new(f.z0[0], f.z0[1]);
    let grid = log_grid(f.g_tau_min, f.g_tau_max, f.points);
    let single = f.envelopes.len() == 1;
    let suffix = |name: &str| if single { String::new() } else { format!("_{name}") };
    let mut columns = vec!["g_tau_d".to_string()];
    let mut sweeps = Vec::new();
    for env in &f.envelopes {
        let mut setup = FidelitySetup::new(z0, Envelope::hermite_gauss(env.hg.clone())?);
        setup.omega_tau_d = f.omega_tau_d;
        if cfg.integrator.is_some() {
            setup.integrator = cfg.integrator_config()?;
        }
        sweeps.push((env.name.clone(), setup.n_max, fidelity_sweep(&setup, &grid)?));
        columns.push(format!("fidelity{}", suffix(&env.name)));
        columns.push(format!("one_minus_F{}", suffix(&env.name)));
    }
    let mut table = Table::new(columns);
    for (i, &g) in grid.iter().enumerate() {
        let mut row = vec![g];
        for (_, _, s) in &sweeps {
            row.extend([s.fidelity[i], 1.0 - s.fidelity[i]]);
        }
        table.push(row);
    }
    let mut report = Report::new(table);
    for (name, n_max, s) in &sweeps {
        report.resolve(format!("n_max{}", suffix(name)), n_max);
        report.summarize(format!("slope{}", suffix(name)), s.slope);
        report.summarize(format!("intercept{}", suffix(name)), s.intercept);
    }
    Ok(report)
}

fn run_quasistatic(cfg: &ScenarioConfig) -> Result<Report> {
    let q = cfg.quasistatic.as_ref().expect("validated quasistatic section");
    let g = cfg.system_spec()?.g;
    let explicit_cutoff = cfg.system.as_ref().and_then(|s| s.n_max);
    let grid = uniform_grid(q.gt_end / g, q.points);
    let dt = grid[1] - grid[0];
    let jobs: Vec<(f64, bool)> = q.rotation.iter().flat_map(|&rot| q.r.iter().map(move |&r| (r, rot))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(r, rot)| {
            let n_max = explicit_cutoff.unwrap_or_else(|| recommended_cutoff(r, DEFAULT_LEAKAGE_TOLERANCE));
            let spec = SystemSpec::new(1.0, g, n_max)?;
            let series = quench_concurrence(r, rot, &grid, &spec)?;
            let summary = summarize_quench(r, rot, &grid, &spec)?;
            let peaks = comparable_peaks(&spectral_peaks(&series, dt), COMPARABLE_FRACTION);
            Ok((series, summary, peaks))
        })
        .collect::<qcavity::Result<_>>()?;

    let summary_columns = [
        "r",
        "rotation",
        "theta_r",
        "omega_drive_over_g",
        "n_gamma",
        "n_q",
        "n_total",
        "n_max",
        "max_naive_concurrence",
        "t_at_max",
        "positive_fraction",
        "comparable_peaks",
    ];
    let mut summary = Table::new(summary_columns.map(String::from).to_vec());
    for ((_, rot), (_, s, peaks)) in jobs.iter().zip(&results) {
        let p = s.point;
        summary.push(vec![
            p.r,
            if *rot { 1.0 } else { 0.0 },
            p.theta_r,
            p.omega_drive_over_g,
            p.n_gamma,
            p.n_q,
            p.n_total,
            s.n_max as f64,
            s.max_naive,
            s.t_at_max,
            s.positive_fraction,
            *peaks as f64,
        ]);
    }
    let mut report = if q.summary_only {
        Report::new(summary)
    } else {
        let single = jobs.len() == 1;
        let mut columns = vec!["t".to_string()];
        for &(r, rot) in &jobs {
            columns.push(if single {
                "naive_concurrence".to_string()
            } else {
                format!("naive_concurrence_r{r}_{}", if rot { "rot" } else { "norot" })
            });
        }
        let mut series = Table::new(columns);
        for (i, &t) in grid.iter().enumerate() {
            let mut row = vec![t];
            row.extend(results.iter().map(|(s, _, _)| s[i]));
            series.push(row);
        }
        let mut report = Report::new(series);
        report.add_table("summary", summary);
        report
    };
    report.resolve("system.g_over_omega", g);
    if let Some((_, best, _)) = results.iter().max_by(|a, b| a.1.max_naive.total_cmp(&b.1.max_naive)) {
        report.summarize("r_at_max_naive_concurrence", best.point.r);
        report.summarize("max_naive_concurrence", best.max_naive);
    }
    Ok(report)
}

fn run_rwa(cfg: &ScenarioConfig) -> Result<Report> {
    let spec = cfg.system_spec()?;
    let icfg: IntegratorConfig = cfg.integrator_config()?;
    let section = cfg.rwa_section();
    let cmp = rwa_comparison(spec.g, spec.n_max, section.gt_span, &icfg)?;
    let columns = ["t", "excitations_rwa", "excitations_full", "naive_concurrence_rwa", "naive_concurrence_full"];
    let mut table = Table::new(columns.map(String::from).to_vec());
    for i in 0..cmp.times.len() {
        table.push(vec![cmp.times[i], cmp.excitations_rwa[i], cmp.excitations_full[i], cmp.naive_rwa[i], cmp.naive_full[i]]);
    }
    let mut report = Report::new(table);
    report.summarize("ground_state_naive_concurrence", cmp.ground_concurrence);
    report.summarize("residual_amplitude", cmp.residual_amplitude);
    report.summarize("envelope_deviation", cmp.envelope_deviation);
    report.summarize("slow_range", cmp.slow_range);
    if section.compare_halved {
        let half = rwa_comparison(0.5 * spec.g, spec.n_max, section.gt_span, &icfg)?;
        report.summarize("residual_amplitude_half_g", half.residual_amplitude);
        report.summarize("residual_ratio", cmp.residual_amplitude / half.residual_amplitude);
    }
    Ok(report)
}
