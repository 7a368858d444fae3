//! Replicated Monte Carlo studies over a single generating design.
//!
//! One study draws `replications` independent samples, fits every
//! estimator on each, and aggregates empirical bias, interval coverage,
//! and width statistics. Replication r always uses stream r of the study
//! seed, so results are reproducible regardless of thread count.

use rayon::prelude::*;

use crate::bias::confounding_bias;
use crate::error::{Error, Result};
use crate::estimators::{fit_models, Estimand, EstimatorKind};
use crate::ui::{confidence_interval, uncertainty_interval, RhoPair};
use crate::variance::effect_estimate;

use super::{
    generate, l1_imbalance, model_bias_or, oracle_confounding_bias, RngSeed, SimulationDesign,
};

/// The four estimator combinations, in reporting order.
pub const ESTIMATOR_COMBOS: [(Estimand, EstimatorKind); 4] = [
    (Estimand::Att, EstimatorKind::OutcomeRegression),
    (Estimand::Ate, EstimatorKind::OutcomeRegression),
    (Estimand::Att, EstimatorKind::DoublyRobust),
    (Estimand::Ate, EstimatorKind::DoublyRobust),
];

/// An uncertainty-interval request evaluated on every replication.
pub type UiSpec = RhoPair;

/// A complete study specification.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub design: SimulationDesign,
    pub replications: usize,
    pub alpha: f64,
    pub grid: usize,
    /// Rho bounds for the uncertainty intervals computed per replication.
    pub ui: Vec<UiSpec>,
    pub seed: u64,
}

impl StudySpec {
    pub fn new(design: SimulationDesign, replications: usize, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::invalid_argument("a study needs at least one replication"));
        }
        Ok(StudySpec {
            design,
            replications,
            alpha: 0.05,
            grid: crate::ui::DEFAULT_GRID,
            ui: Vec::new(),
            seed,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_ui(mut self, ui: Vec<UiSpec>) -> Self {
        self.ui = ui;
        self
    }
}

/// Per-replication results for one estimator combination.
#[derive(Debug, Clone)]
pub struct EstimateRecord {
    pub estimand: Estimand,
    pub estimator: EstimatorKind,
    pub value: f64,
    pub std_error: f64,
    /// Plug-in confounding bias at the generating correlations, using the
    /// fitted treatment model and corrected residual scale, exactly as an
    /// analyst would compute it.
    pub bias_confounding: f64,
    /// Confounding bias at the generating correlations evaluated with the
    /// true treatment index and unit error scales.
    pub bias_confounding_oracle: f64,
    /// Misspecification bias from the true structural functions; only the
    /// outcome-regression estimators have one.
    pub bias_misspecification: Option<f64>,
    pub ci: (f64, f64),
    /// Uncertainty intervals, one per requested rho bound.
    pub ui: Vec<(f64, f64)>,
}

/// Results of one successful replication.
#[derive(Debug, Clone)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub l1: f64,
    pub clamped: usize,
    pub estimates: Vec<EstimateRecord>,
}

/// A replication that could not be completed, with the reason. Kept out of
/// all aggregates.
#[derive(Debug, Clone)]
pub struct Failure {
    pub replication: usize,
    pub reason: String,
}

/// Coverage and width aggregates for one uncertainty-interval request.
#[derive(Debug, Clone)]
pub struct UiSummary {
    pub rho: RhoPair,
    /// Fraction of completed replications whose interval covers the truth.
    pub coverage: f64,
    pub mean_width: f64,
    pub median_width: f64,
    /// Median over replications of width(UI) / width(CI).
    pub median_width_ratio: f64,
}

/// Aggregates for one estimator combination over the completed replications.
#[derive(Debug, Clone)]
pub struct EstimatorSummary {
    pub estimand: Estimand,
    pub estimator: EstimatorKind,
    pub mean_estimate: f64,
    /// Mean estimate minus the true estimand value.
    pub empirical_bias: f64,
    /// Monte Carlo standard error of the mean estimate; needs at least two
    /// replications.
    pub mc_std_error: Option<f64>,
    pub mean_std_error: f64,
    pub mean_bias_confounding: f64,
    pub mean_bias_confounding_oracle: f64,
    pub mean_bias_misspecification: Option<f64>,
    /// Oracle confounding bias plus misspecification bias where the latter
    /// exists; the comparison point for `empirical_bias`.
    pub mean_bias_total_oracle: f64,
    pub ci_coverage: f64,
    pub mean_ci_width: f64,
    pub ui: Vec<UiSummary>,
}

/// A finished study: the spec it ran, per-replication records, and
/// aggregates.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub spec: StudySpec,
    pub truth_ate: f64,
    pub truth_att: f64,
    pub completed: usize,
    pub failures: Vec<Failure>,
    pub mean_l1: f64,
    pub total_clamped: usize,
    pub records: Vec<ReplicationRecord>,
    /// One summary per entry of [`ESTIMATOR_COMBOS`], in order.
    pub summaries: Vec<EstimatorSummary>,
}

/// Runs the study. Parallel over replications; the `CONFOUND_UI_THREADS`
/// environment variable caps the worker count.
pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    if spec.replications == 0 {
        return Err(Error::invalid_argument("a study needs at least one replication"));
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::invalid_argument(format!(
            "alpha {} is outside (0, 1)",
            spec.alpha
        )));
    }

    let outcomes = with_thread_pool(|| {
        (0..spec.replications)
            .into_par_iter()
            .map(|r| run_replication(spec, r).map_err(|e| Failure {
                replication: r,
                reason: e.to_string(),
            }))
            .collect::<Vec<_>>()
    })?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(failure) => failures.push(failure),
        }
    }
    if records.is_empty() {
        return Err(Error::input(format!(
            "all {} replications failed; first failure: {}",
            spec.replications,
            failures[0].reason
        )));
    }

    let truth = spec.design.truth();
    let truth_att = truth.att(spec.design.rho0, spec.design.rho1);
    let completed = records.len();
    let mean_l1 = records.iter().map(|r| r.l1).sum::<f64>() / completed as f64;
    let total_clamped = records.iter().map(|r| r.clamped).sum();

    let summaries = ESTIMATOR_COMBOS
        .iter()
        .enumerate()
        .map(|(k, &(estimand, estimator))| {
            let target = match estimand {
                Estimand::Att => truth_att,
                Estimand::Ate => truth.ate,
            };
            summarize(&records, k, estimand, estimator, target, spec)
        })
        .collect();

    Ok(StudyResult {
        spec: spec.clone(),
        truth_ate: truth.ate,
        truth_att,
        completed,
        failures,
        mean_l1,
        total_clamped,
        records,
        summaries,
    })
}

fn run_replication(spec: &StudySpec, r: usize) -> Result<ReplicationRecord> {
    let generated = generate(&spec.design, RngSeed::new(spec.seed, r as u64))?;
    let models = fit_models(&generated.data, None)?;

    let (scores_treated, scores_control) = generated.propensity_by_arm();
    let l1 = l1_imbalance(&scores_treated, &scores_control)?;
    let model_bias = model_bias_or(&generated, &models)?;

    let mut estimates = Vec::with_capacity(ESTIMATOR_COMBOS.len());
    for (estimand, estimator) in ESTIMATOR_COMBOS {
        let estimate = effect_estimate(&generated.data, &models, estimand, estimator, false)?;
        let ci = confidence_interval(&estimate, spec.alpha)?;
        let bias_confounding = confounding_bias(
            &generated.data,
            &models,
            estimand,
            estimator,
            spec.design.rho0,
            spec.design.rho1,
        )?;
        let bias_confounding_oracle = oracle_confounding_bias(
            &generated,
            &models,
            estimand,
            estimator,
            spec.design.rho0,
            spec.design.rho1,
        );
        let bias_misspecification = match estimator {
            EstimatorKind::OutcomeRegression => Some(match estimand {
                Estimand::Att => model_bias.att,
                Estimand::Ate => model_bias.ate,
            }),
            EstimatorKind::DoublyRobust => None,
        };
        let mut ui = Vec::with_capacity(spec.ui.len());
        for rho in &spec.ui {
            let interval =
                uncertainty_interval(&generated.data, &models, &estimate, rho, spec.alpha, spec.grid)?;
            ui.push((interval.lower, interval.upper));
        }
        estimates.push(EstimateRecord {
            estimand,
            estimator,
            value: estimate.value,
            std_error: estimate.std_error,
            bias_confounding,
            bias_confounding_oracle,
            bias_misspecification,
            ci,
            ui,
        });
    }

    Ok(ReplicationRecord { replication: r, l1, clamped: generated.clamped, estimates })
}

fn summarize(
    records: &[ReplicationRecord],
    index: usize,
    estimand: Estimand,
    estimator: EstimatorKind,
    target: f64,
    spec: &StudySpec,
) -> EstimatorSummary {
    let m = records.len() as f64;
    let values: Vec<f64> = records.iter().map(|r| r.estimates[index].value).collect();
    let mean_estimate = values.iter().sum::<f64>() / m;
    let mc_std_error = if records.len() >= 2 {
        let ss: f64 = values.iter().map(|v| (v - mean_estimate).powi(2)).sum();
        Some((ss / (m - 1.0)).sqrt() / m.sqrt())
    } else {
        None
    };

    let mean_std_error =
        records.iter().map(|r| r.estimates[index].std_error).sum::<f64>() / m;
    let mean_bias_confounding =
        records.iter().map(|r| r.estimates[index].bias_confounding).sum::<f64>() / m;
    let mean_bias_confounding_oracle =
        records.iter().map(|r| r.estimates[index].bias_confounding_oracle).sum::<f64>() / m;
    let mean_bias_misspecification = match estimator {
        EstimatorKind::OutcomeRegression => Some(
            records
                .iter()
                .map(|r| r.estimates[index].bias_misspecification.unwrap_or(0.0))
                .sum::<f64>()
                / m,
        ),
        EstimatorKind::DoublyRobust => None,
    };
    let mean_bias_total_oracle =
        mean_bias_confounding_oracle + mean_bias_misspecification.unwrap_or(0.0);

    let covered = records
        .iter()
        .filter(|r| {
            let (lo, hi) = r.estimates[index].ci;
            lo <= target && target <= hi
        })
        .count();
    let ci_widths: Vec<f64> =
        records.iter().map(|r| r.estimates[index].ci.1 - r.estimates[index].ci.0).collect();
    let mean_ci_width = ci_widths.iter().sum::<f64>() / m;

    let ui = spec
        .ui
        .iter()
        .enumerate()
        .map(|(u, rho)| {
            let mut widths = Vec::with_capacity(records.len());
            let mut ratios = Vec::with_capacity(records.len());
            let mut ui_covered = 0usize;
            for (r, record) in records.iter().enumerate() {
                let (lo, hi) = record.estimates[index].ui[u];
                if lo <= target && target <= hi {
                    ui_covered += 1;
                }
                widths.push(hi - lo);
                ratios.push((hi - lo) / ci_widths[r]);
            }
            UiSummary {
                rho: *rho,
                coverage: ui_covered as f64 / m,
                mean_width: widths.iter().sum::<f64>() / m,
                median_width: median(&mut widths),
                median_width_ratio: median(&mut ratios),
            }
        })
        .collect();

    EstimatorSummary {
        estimand,
        estimator,
        mean_estimate,
        empirical_bias: mean_estimate - target,
        mc_std_error,
        mean_std_error,
        mean_bias_confounding,
        mean_bias_confounding_oracle,
        mean_bias_misspecification,
        mean_bias_total_oracle,
        ci_coverage: covered as f64 / m,
        mean_ci_width,
        ui,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("interval widths are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs `f` on a pool sized by `CONFOUND_UI_THREADS` when the variable is
/// set, otherwise on the global pool.
fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var("CONFOUND_UI_THREADS") {
        Ok(raw) => {
            let threads: usize = raw.trim().parse().map_err(|_| {
                Error::invalid_argument(format!(
                    "CONFOUND_UI_THREADS must be a nonnegative integer, got {raw:?}"
                ))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::invalid_argument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Design, Overlap};

    fn small_spec() -> StudySpec {
        let design = SimulationDesign::new(Design::A, Overlap::Low, 120, 0.3, 0.3).unwrap();
        StudySpec::new(design, 20, 42)
            .unwrap()
            .with_ui(vec![RhoPair::zero(), RhoPair::nonnegative(0.4).unwrap()])
    }

    #[test]
    fn study_is_deterministic() {
        let spec = small_spec();
        let a = run_study(&spec).unwrap();
        let b = run_study(&spec).unwrap();
        assert_eq!(a.completed, b.completed);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.l1, rb.l1);
            for (ea, eb) in ra.estimates.iter().zip(&rb.estimates) {
                assert_eq!(ea.value, eb.value);
                assert_eq!(ea.std_error, eb.std_error);
                assert_eq!(ea.ui, eb.ui);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = small_spec();
        let many = run_study(&spec).unwrap();
        std::env::set_var("CONFOUND_UI_THREADS", "1");
        let one = run_study(&spec);
        std::env::remove_var("CONFOUND_UI_THREADS");
        let one = one.unwrap();
        for (ra, rb) in many.records.iter().zip(&one.records) {
            for (ea, eb) in ra.estimates.iter().zip(&rb.estimates) {
                assert_eq!(ea.value, eb.value);
            }
        }
    }

    #[test]
    fn degenerate_ui_matches_ci_in_the_study_records() {
        let result = run_study(&small_spec()).unwrap();
        for record in &result.records {
            for estimate in &record.estimates {
                let (lo, hi) = estimate.ui[0];
                assert_eq!((lo, hi), estimate.ci);
            }
        }
    }

    #[test]
    fn summaries_follow_the_combo_order() {
        let result = run_study(&small_spec()).unwrap();
        assert_eq!(result.summaries.len(), 4);
        for (summary, &(estimand, estimator)) in result.summaries.iter().zip(&ESTIMATOR_COMBOS) {
            assert_eq!(summary.estimand, estimand);
            assert_eq!(summary.estimator, estimator);
            assert_eq!(summary.ui.len(), 2);
            assert!(summary.mc_std_error.unwrap() > 0.0);
        }
    }

    #[test]
    fn single_replication_leaves_mc_error_undefined() {
        let design = SimulationDesign::new(Design::A, Overlap::Low, 120, 0.0, 0.0).unwrap();
        let spec = StudySpec::new(design, 1, 7).unwrap();
        let result = run_study(&spec).unwrap();
        assert_eq!(result.completed, 1);
        assert!(result.summaries[0].mc_std_error.is_none());
    }

    #[test]
    fn dr_summaries_have_no_misspecification_bias() {
        let result = run_study(&small_spec()).unwrap();
        assert!(result.summaries[0].mean_bias_misspecification.is_some());
        assert!(result.summaries[2].mean_bias_misspecification.is_none());
        assert_eq!(
            result.summaries[2].mean_bias_total_oracle,
            result.summaries[2].mean_bias_confounding_oracle
        );
    }

    #[test]
    fn median_of_even_and_odd_lengths() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
