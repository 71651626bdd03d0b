//! Monte-Carlo sweeps.
//!
//! Every trial draws its channels from `base_seed.derive(&[sweep_index, trial_index])`,
//! trials run in parallel and the reduction walks them in index order, so a
//! result does not depend on the number of threads.

mod config;
mod output;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{Application, Experiment, ExperimentConfig, Params};
pub use output::{format_number, write_csv, write_svg, CSV_HEADER};

use crate::channels::RngSeed;
use crate::d2d::{self, D2DOptions, D2DScenario};
use crate::error::Result;
use crate::pls::{self, PlsDesign, PlsInstance, PlsOptions, PlsScenario};
use crate::radarcomm::{self, LinkStrengths};
use crate::reflection::ReflectionMode;
use crate::solvers::SolverOptions;

/// Fraction of failed trials above which a sweep point is flagged.
pub const FAILURE_WARNING_FRACTION: f64 = 0.1;

/// What one trial reports for one surface type.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub metric: f64,
    pub mean_modulus: f64,
    /// Largest off-diagonal over smallest diagonal modulus of the D2D channel.
    pub off_diagonal_ratio: Option<f64>,
    /// Decreases of the Dinkelbach parameter.
    pub lambda_violations: usize,
    /// Solver bound minus achieved objective (d2d and pls only).
    pub bound_gap: Option<f64>,
}

/// Aggregates for one sweep point and one surface type.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub mode: ReflectionMode,
    pub metric_mean: f64,
    pub metric_std: f64,
    pub mean_modulus: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    /// Seconds spent on the sweep point, shared by its modes.
    pub wall_time: f64,
    pub max_off_diagonal_ratio: Option<f64>,
    pub lambda_violations: usize,
    pub min_bound_gap: Option<f64>,
    /// Per-trial metrics in trial order, `NaN` for failures.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn empty(experiment: Experiment) -> Self {
        Self { experiment, rows: Vec::new(), warnings: Vec::new() }
    }

    pub fn row(&self, sweep_value: f64, mode: ReflectionMode) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.mode == mode)
    }

    /// Rows of one mode in sweep order.
    pub fn series(&self, mode: ReflectionMode) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.mode == mode).collect()
    }
}

fn options_seed(trial_seed: RngSeed) -> u64 {
    trial_seed.derive(&[u64::MAX]).0
}

fn lambda_violations(trace: &[f64]) -> usize {
    trace.windows(2).filter(|w| w[1] < w[0]).count()
}

fn radar_comm_trial(cfg: &ExperimentConfig, p: &Params, seed: RngSeed) -> Result<Vec<TrialOutcome>> {
    let strengths = LinkStrengths { direct_db: p.direct_db, to_ris_db: p.to_ris_db, from_ris_db: p.from_ris_db };
    let inst = match cfg.experiment {
        Experiment::RadarCommClusters => {
            radarcomm::mmwave_instance::<f64>(p.rx_antennas, p.tx_antennas, p.elements, p.clusters, p.subpaths, strengths, seed)?
        }
        _ => radarcomm::rayleigh_instance::<f64>(p.rx_antennas, p.tx_antennas, p.elements, strengths, seed)?,
    };
    let opts = SolverOptions::least_squares();
    cfg.modes
        .iter()
        .map(|&mode| {
            let d = radarcomm::design(&inst, mode, &opts)?;
            Ok(TrialOutcome {
                metric: d.residual,
                mean_modulus: radarcomm::mean_modulus(&d.phi),
                off_diagonal_ratio: None,
                lambda_violations: 0,
                bound_gap: None,
            })
        })
        .collect()
}

fn d2d_trial(cfg: &ExperimentConfig, p: &Params, seed: RngSeed) -> Result<Vec<TrialOutcome>> {
    let sc = D2DScenario {
        links: p.links,
        elements: p.elements,
        direct_db: p.direct_db,
        to_ris_db: p.to_ris_db,
        from_ris_db: p.from_ris_db,
        power: p.power,
        noise_var: p.noise_var,
    };
    let inst = d2d::rayleigh_instance(&sc, seed)?;
    let opts = D2DOptions { randomization_trials: p.randomization_trials, seed: options_seed(seed), ..D2DOptions::default() };
    let (absorptive, conventional) = if cfg.modes.len() > 1 {
        let (a, c) = d2d::maxmin_design_pair(&inst, &opts)?;
        (Some(a), Some(c))
    } else if cfg.modes[0] == ReflectionMode::Absorptive {
        (Some(d2d::maxmin_design(&inst, ReflectionMode::Absorptive, &opts)?), None)
    } else {
        (None, Some(d2d::maxmin_design(&inst, ReflectionMode::Conventional, &opts)?))
    };
    cfg.modes
        .iter()
        .map(|&mode| {
            let d = match mode {
                ReflectionMode::Absorptive => absorptive.as_ref(),
                ReflectionMode::Conventional => conventional.as_ref(),
            }
            .expect("design computed for every requested mode");
            let (off, diag) = d2d::diagonal_dominance(&inst, &d.phi)?;
            Ok(TrialOutcome {
                metric: 10.0 * d.worst_sinr.log10(),
                mean_modulus: radarcomm::mean_modulus(&d.phi),
                off_diagonal_ratio: Some(off / diag),
                lambda_violations: lambda_violations(&d.lambda_trace),
                bound_gap: Some(d.sdr_bound - d.worst_sinr),
            })
        })
        .collect()
}

fn pls_scenario(p: &Params) -> PlsScenario {
    PlsScenario {
        elements: p.elements,
        db_db: p.db_db,
        g_db: p.g_db,
        hb_db: p.hb_db,
        de_db: p.de_db,
        he_db: p.he_db,
        dj_db: p.dj_db,
        gj_db: p.gj_db,
        jb_db: p.jb_db,
        noise_b: p.noise_var,
        noise_e: p.noise_var,
        jammer: p.jammer,
    }
}

/// Designs in the order of `modes`; with both surface types the phase-only
/// design is shared.
fn pls_designs(inst: &PlsInstance, modes: &[ReflectionMode], opts: &PlsOptions) -> Result<Vec<PlsDesign>> {
    if modes.len() > 1 {
        let (a, c) = pls::maximize_secrecy_pair(inst, opts)?;
        return Ok(modes
            .iter()
            .map(|m| match m {
                ReflectionMode::Absorptive => a.clone(),
                ReflectionMode::Conventional => c.clone(),
            })
            .collect());
    }
    modes.iter().map(|&m| pls::maximize_secrecy(inst, m, opts)).collect()
}

fn pls_trial(cfg: &ExperimentConfig, p: &Params, seed: RngSeed) -> Result<Vec<TrialOutcome>> {
    let inst = pls::rayleigh_instance(&pls_scenario(p), seed)?;
    let opts = PlsOptions { randomization_trials: p.randomization_trials, seed: options_seed(seed), ..PlsOptions::default() };
    pls_designs(&inst, &cfg.modes, &opts)?
        .into_iter()
        .map(|d| {
            Ok(TrialOutcome {
                metric: d.rate,
                mean_modulus: radarcomm::mean_modulus(&d.phi),
                off_diagonal_ratio: None,
                lambda_violations: lambda_violations(&d.lambda_trace),
                bound_gap: Some(d.sdr_rate - d.rate),
            })
        })
        .collect()
}

fn run_trial(cfg: &ExperimentConfig, p: &Params, seed: RngSeed) -> Result<Vec<TrialOutcome>> {
    match cfg.experiment.application() {
        Application::RadarComm => radar_comm_trial(cfg, p, seed),
        Application::D2D => d2d_trial(cfg, p, seed),
        Application::Pls => pls_trial(cfg, p, seed),
    }
}

fn aggregate(
    cfg: &ExperimentConfig,
    sweep_value: f64,
    wall_time: f64,
    outcomes: &[Option<Vec<TrialOutcome>>],
    rows: &mut Vec<SweepRow>,
    warnings: &mut Vec<String>,
) {
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    if failed as f64 > FAILURE_WARNING_FRACTION * outcomes.len() as f64 {
        warnings.push(format!(
            "{}: {failed} of {} trials failed at {} = {sweep_value}",
            cfg.experiment,
            outcomes.len(),
            cfg.experiment.sweep_param()
        ));
    }
    for (m, &mode) in cfg.modes.iter().enumerate() {
        let ok: Vec<&TrialOutcome> = outcomes.iter().flatten().map(|o| &o[m]).collect();
        let n = ok.len() as f64;
        let mean = |f: &dyn Fn(&TrialOutcome) -> f64| ok.iter().map(|o| f(o)).sum::<f64>() / n;
        let (metric_mean, mean_modulus) = if ok.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (mean(&|o| o.metric), mean(&|o| o.mean_modulus))
        };
        let metric_std = if ok.len() < 2 {
            0.0
        } else {
            (ok.iter().map(|o| (o.metric - metric_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let max_opt = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        let min_opt = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
        rows.push(SweepRow {
            sweep_value,
            mode,
            metric_mean,
            metric_std,
            mean_modulus,
            trials_ok: ok.len(),
            trials_failed: failed,
            wall_time,
            max_off_diagonal_ratio: max_opt(&mut ok.iter().filter_map(|o| o.off_diagonal_ratio)),
            lambda_violations: ok.iter().map(|o| o.lambda_violations).sum(),
            min_bound_gap: min_opt(&mut ok.iter().filter_map(|o| o.bound_gap)),
            samples: outcomes.iter().map(|o| o.as_ref().map_or(f64::NAN, |o| o[m].metric)).collect(),
        });
    }
}

/// Runs every trial of every sweep point. Failed trials are counted, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let base = RngSeed(cfg.base_seed);
    let mut rows = Vec::with_capacity(cfg.sweep.len() * cfg.modes.len());
    let mut warnings = Vec::new();

    if cfg.experiment == Experiment::PlsConvergence {
        // One run per trial serves every iteration index.
        let start = Instant::now();
        let traces: Vec<Option<Vec<(Vec<f64>, TrialOutcome)>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| convergence_trial(cfg, base.derive(&[0, t as u64])).ok())
            .collect();
        let wall = start.elapsed().as_secs_f64();
        for &v in &cfg.sweep {
            let i = v as usize;
            let outcomes: Vec<Option<Vec<TrialOutcome>>> = traces
                .iter()
                .map(|o| {
                    o.as_ref().map(|per_mode| {
                        per_mode
                            .iter()
                            .map(|(trace, out)| TrialOutcome { metric: trace[i.min(trace.len() - 1)], ..out.clone() })
                            .collect()
                    })
                })
                .collect();
            aggregate(cfg, v, wall, &outcomes, &mut rows, &mut warnings);
        }
        return Ok(SweepResult { experiment: cfg.experiment, rows, warnings });
    }

    for (s, &v) in cfg.sweep.iter().enumerate() {
        let p = cfg.point_params(v)?;
        let start = Instant::now();
        let outcomes: Vec<Option<Vec<TrialOutcome>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &p, base.derive(&[s as u64, t as u64])).ok())
            .collect();
        aggregate(cfg, v, start.elapsed().as_secs_f64(), &outcomes, &mut rows, &mut warnings);
    }
    Ok(SweepResult { experiment: cfg.experiment, rows, warnings })
}

fn convergence_trial(cfg: &ExperimentConfig, seed: RngSeed) -> Result<Vec<(Vec<f64>, TrialOutcome)>> {
    let p = &cfg.params;
    let inst = pls::rayleigh_instance(&pls_scenario(p), seed)?;
    let opts = PlsOptions { randomization_trials: p.randomization_trials, seed: options_seed(seed), ..PlsOptions::default() };
    pls_designs(&inst, &cfg.modes, &opts)?
        .into_iter()
        .map(|d| {
            let out = TrialOutcome {
                metric: d.rate,
                mean_modulus: radarcomm::mean_modulus(&d.phi),
                off_diagonal_ratio: None,
                lambda_violations: lambda_violations(&d.lambda_trace),
                bound_gap: Some(d.sdr_rate - d.rate),
            };
            Ok((d.cost_trace(inst.noise_b()), out))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(experiment);
        cfg.trials = 2;
        cfg.sweep.truncate(2);
        cfg.params.elements = 4;
        cfg.params.links = 2;
        cfg.params.tx_antennas = 2;
        cfg.params.rx_antennas = 2;
        cfg.params.randomization_trials = 20;
        cfg
    }

    #[test]
    fn row_count_and_accounting() {
        for e in [Experiment::RadarCommSigmaD, Experiment::D2DSigmaD, Experiment::PlsSigmaDe, Experiment::PlsConvergence] {
            let cfg = small(e);
            let res = run_experiment(&cfg).unwrap();
            assert_eq!(res.rows.len(), cfg.sweep.len() * cfg.modes.len());
            for r in &res.rows {
                assert_eq!(r.trials_ok + r.trials_failed, cfg.trials);
                assert_eq!(r.samples.len(), cfg.trials);
            }
        }
    }

    #[test]
    fn single_trial_row_equals_the_trial() {
        let mut cfg = small(Experiment::RadarCommSigmaD);
        cfg.trials = 1;
        cfg.sweep = vec![0.0];
        let res = run_experiment(&cfg).unwrap();
        let p = cfg.point_params(0.0).unwrap();
        let direct = run_trial(&cfg, &p, RngSeed(cfg.base_seed).derive(&[0, 0])).unwrap();
        for (row, out) in res.rows.iter().zip(&direct) {
            assert_eq!(row.metric_mean, out.metric);
            assert_eq!(row.mean_modulus, out.mean_modulus);
            assert_eq!(row.metric_std, 0.0);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cfg = small(Experiment::RadarCommK);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let strip = |mut r: SweepResult| {
            r.rows.iter_mut().for_each(|row| row.wall_time = 0.0);
            r
        };
        let a = strip(one.install(|| run_experiment(&cfg)).unwrap());
        let b = strip(three.install(|| run_experiment(&cfg)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn failed_trials_are_counted_and_flagged() {
        let cfg = small(Experiment::RadarCommSigmaD);
        let outcomes = vec![
            None,
            Some(vec![
                TrialOutcome { metric: 2.0, mean_modulus: 0.5, off_diagonal_ratio: None, lambda_violations: 0, bound_gap: None };
                2
            ]),
        ];
        let (mut rows, mut warnings) = (Vec::new(), Vec::new());
        aggregate(&cfg, 0.0, 0.0, &outcomes, &mut rows, &mut warnings);
        assert_eq!(warnings.len(), 1);
        assert_eq!(rows[0].trials_ok, 1);
        assert_eq!(rows[0].trials_failed, 1);
        assert_eq!(rows[0].metric_mean, 2.0);
        assert!(rows[0].samples[0].is_nan());
    }

    #[test]
    fn lambda_violation_count() {
        assert_eq!(lambda_violations(&[1.0, 2.0, 2.0, 1.5, 3.0]), 1);
        assert_eq!(lambda_violations(&[1.0]), 0);
    }
}
