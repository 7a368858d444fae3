//! The four subcommands. Each reads its inputs, runs the library, and
//! renders one of the three output formats; simulate also writes the
//! replication CSV and summary JSON artifacts.

use std::path::Path;

use serde_json::{json, Value};

use confound_ui::sim::{
    l1_imbalance, run_study, EstimatorSummary, SimulationDesign, StudyResult, StudySpec,
    ESTIMATOR_COMBOS,
};
use confound_ui::{
    confidence_interval, effect_estimate, fit_models, identification_interval, normal_cdf,
    normal_quantile, sensitivity_threshold, uncertainty_interval, Dataset, Error, Estimand,
    EstimatorKind, FittedModels, Result, RhoInterval, RhoPair, DEFAULT_GRID,
};

use crate::ingest::{ingest_csv, IngestSpec};
use crate::report::{human, human_interval, human_opt, machine, machine_opt, SCHEMA_VERSION};
use crate::{combos, DataArgs, EstimateArgs, Interval, SensitivityArgs, SimulateArgs, UiArgs};
use crate::{EstimandArg, EstimatorArg, FormatArg};

fn input(reason: String) -> Error {
    Error::Input { reason }
}

fn invalid(reason: String) -> Error {
    Error::InvalidArgument { reason }
}

fn estimand_label(e: Estimand) -> &'static str {
    match e {
        Estimand::Att => "att",
        Estimand::Ate => "ate",
    }
}

fn estimator_label(k: EstimatorKind) -> &'static str {
    match k {
        EstimatorKind::OutcomeRegression => "or",
        EstimatorKind::DoublyRobust => "dr",
    }
}

fn estimand_human(e: Estimand) -> &'static str {
    match e {
        Estimand::Att => "ATT",
        Estimand::Ate => "ATE",
    }
}

fn estimator_human(k: EstimatorKind) -> &'static str {
    match k {
        EstimatorKind::OutcomeRegression => "OR",
        EstimatorKind::DoublyRobust => "DR",
    }
}

/// Fitted-model diagnostics reported by the data commands.
struct Diagnostics {
    l1: Option<f64>,
    propensity_min: f64,
    propensity_max: f64,
    converged: bool,
    separation: bool,
    iterations: usize,
    warnings: Vec<String>,
}

struct Analysis {
    data: Dataset,
    models: FittedModels,
    diagnostics: Diagnostics,
}

fn prepare(args: &DataArgs) -> Result<Analysis> {
    let spec = IngestSpec {
        outcome: &args.outcome,
        treatment: &args.treatment,
        covariates: &args.covariates,
        treatment_covariates: args.treatment_covariates.as_deref(),
    };
    let ingested = ingest_csv(&args.input, &spec)?;
    let mut models = fit_models(&ingested.data, ingested.treatment_design.as_ref())?;
    if let Some(eps) = args.clip_propensity {
        clip_propensities(&mut models, eps)?;
    }
    let diagnostics = diagnose(&ingested.data, &models);
    Ok(Analysis { data: ingested.data, models, diagnostics })
}

/// Clipping acts on the linear index so the propensity and its tail stay
/// consistent wherever the estimators evaluate them.
fn clip_propensities(models: &mut FittedModels, eps: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eps) {
        return Err(invalid(format!("--clip-propensity {eps} must lie in [0, 0.5)")));
    }
    if eps == 0.0 {
        return Ok(());
    }
    let low = normal_quantile(eps)?;
    let high = normal_quantile(1.0 - eps)?;
    if let Some(probit) = models.probit.as_mut() {
        for i in 0..probit.linear_index.len() {
            probit.linear_index[i] = probit.linear_index[i].clamp(low, high);
            probit.propensity[i] = normal_cdf(probit.linear_index[i]);
        }
    }
    Ok(())
}

fn diagnose(data: &Dataset, models: &FittedModels) -> Diagnostics {
    let probit = models.probit.as_ref().expect("fit_models always fits the treatment model");
    let mut warnings = Vec::new();
    if probit.separation {
        warnings.push(
            "the treatment model shows quasi-complete separation; propensity-based \
             quantities are unreliable"
                .to_string(),
        );
    } else if !probit.converged {
        warnings
            .push("the treatment model did not converge within the iteration limit".to_string());
    }
    let propensity_min = probit.propensity.min();
    let propensity_max = probit.propensity.max();
    if propensity_min < 1e-6 || propensity_max > 1.0 - 1e-6 {
        warnings.push(
            "fitted propensities within 1e-6 of the boundary; inverse weights may be unstable"
                .to_string(),
        );
    }
    let mut treated = Vec::new();
    let mut control = Vec::new();
    for (i, &zi) in data.z().iter().enumerate() {
        if zi {
            treated.push(probit.propensity[i]);
        } else {
            control.push(probit.propensity[i]);
        }
    }
    let l1 = match l1_imbalance(&treated, &control) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("propensity imbalance unavailable: {e}"));
            None
        }
    };
    Diagnostics {
        l1,
        propensity_min,
        propensity_max,
        converged: probit.converged,
        separation: probit.separation,
        iterations: probit.iterations,
        warnings,
    }
}

fn resolve_rho(rho0: Option<Interval>, rho1: Option<Interval>) -> Result<Option<RhoPair>> {
    let to_interval = |iv: Interval| RhoInterval::new(iv.low, iv.high);
    Ok(match (rho0, rho1) {
        (None, None) => None,
        (Some(a), None) => {
            let i = to_interval(a)?;
            Some(RhoPair::new(i, i))
        }
        (None, Some(b)) => {
            let i = to_interval(b)?;
            Some(RhoPair::new(i, i))
        }
        (Some(a), Some(b)) => Some(RhoPair::new(to_interval(a)?, to_interval(b)?)),
    })
}

fn data_config(args: &DataArgs) -> Value {
    json!({
        "input": args.input.display().to_string(),
        "outcome": args.outcome,
        "treatment": args.treatment,
        "covariates": args.covariates,
        "treatment_covariates": args.treatment_covariates,
        "clip_propensity": args.clip_propensity,
        "large_sample_var": args.large_sample_var,
        "estimand": args.estimand.map(|e| match e {
            EstimandArg::Att => "att",
            EstimandArg::Ate => "ate",
        }),
        "estimator": args.estimator.map(|e| match e {
            EstimatorArg::Or => "or",
            EstimatorArg::Dr => "dr",
        }),
        "alpha": args.alpha,
        "format": args.format.label(),
    })
}

fn rho_axis_json(interval: Option<RhoInterval>) -> Value {
    match interval {
        Some(iv) => json!([iv.low(), iv.high()]),
        None => Value::Null,
    }
}

fn data_json(analysis: &Analysis) -> Value {
    json!({
        "n": analysis.data.n(),
        "n_treated": analysis.data.n_treated(),
        "n_control": analysis.data.n_control(),
    })
}

fn diagnostics_json(d: &Diagnostics) -> Value {
    json!({
        "l1_propensity_imbalance": d.l1,
        "propensity_min": d.propensity_min,
        "propensity_max": d.propensity_max,
        "treatment_model_converged": d.converged,
        "treatment_model_separation": d.separation,
        "treatment_model_iterations": d.iterations,
        "warnings": d.warnings,
    })
}

fn print_json(report: &Value) {
    println!("{}", serde_json::to_string_pretty(report).expect("report serialization"));
}

fn print_data_header(analysis: &Analysis, alpha: f64, rho: Option<&RhoPair>) {
    let d = &analysis.diagnostics;
    println!(
        "n {} (treated {}, control {}), alpha {}",
        analysis.data.n(),
        analysis.data.n_treated(),
        analysis.data.n_control(),
        human(alpha)
    );
    println!(
        "fitted propensities in [{}, {}], L1 imbalance {}",
        human(d.propensity_min),
        human(d.propensity_max),
        human_opt(d.l1)
    );
    if let Some(pair) = rho {
        println!(
            "rho0 in [{}, {}], rho1 in [{}, {}]",
            human(pair.rho0.low()),
            human(pair.rho0.high()),
            human(pair.rho1.low()),
            human(pair.rho1.high())
        );
    }
    for w in &d.warnings {
        println!("warning: {w}");
    }
    println!();
}

struct EstimateRow {
    estimand: Estimand,
    estimator: EstimatorKind,
    value: f64,
    std_error: f64,
    ci: (f64, f64),
    /// Identification and uncertainty intervals, present when rho bounds
    /// were supplied.
    bounds: Option<((f64, f64), (f64, f64))>,
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let analysis = prepare(&args.data)?;
    let rho = resolve_rho(args.rho0, args.rho1)?;

    let mut rows = Vec::new();
    for (estimand, estimator) in combos(args.data.estimand, args.data.estimator) {
        let est = effect_estimate(
            &analysis.data,
            &analysis.models,
            estimand,
            estimator,
            args.data.large_sample_var,
        )?;
        let ci = confidence_interval(&est, args.data.alpha)?;
        let bounds = match &rho {
            Some(pair) => {
                let ii = identification_interval(
                    &analysis.data,
                    &analysis.models,
                    &est,
                    pair,
                    args.grid,
                )?;
                let ui = uncertainty_interval(
                    &analysis.data,
                    &analysis.models,
                    &est,
                    pair,
                    args.data.alpha,
                    args.grid,
                )?;
                Some((ii, (ui.lower, ui.upper)))
            }
            None => None,
        };
        rows.push(EstimateRow {
            estimand,
            estimator,
            value: est.value,
            std_error: est.std_error,
            ci,
            bounds,
        });
    }

    let mut config = data_config(&args.data);
    config["grid"] = json!(args.grid);
    config["rho0"] = rho_axis_json(rho.as_ref().map(|p| p.rho0));
    config["rho1"] = rho_axis_json(rho.as_ref().map(|p| p.rho1));

    match args.data.format {
        FormatArg::Json => {
            let estimates: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = json!({
                        "estimand": estimand_label(r.estimand),
                        "estimator": estimator_label(r.estimator),
                        "value": r.value,
                        "std_error": r.std_error,
                        "ci_lower": r.ci.0,
                        "ci_upper": r.ci.1,
                    });
                    if let Some((ii, ui)) = r.bounds {
                        v["identification_lower"] = json!(ii.0);
                        v["identification_upper"] = json!(ii.1);
                        v["ui_lower"] = json!(ui.0);
                        v["ui_upper"] = json!(ui.1);
                    }
                    v
                })
                .collect();
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "estimate",
                "config": config,
                "data": data_json(&analysis),
                "diagnostics": diagnostics_json(&analysis.diagnostics),
                "estimates": estimates,
            }));
        }
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record([
                "schema_version",
                "command",
                "estimand",
                "estimator",
                "value",
                "std_error",
                "ci_lower",
                "ci_upper",
                "identification_lower",
                "identification_upper",
                "ui_lower",
                "ui_upper",
                "config",
            ])?;
            let cfg = config.to_string();
            for r in &rows {
                let (ii, ui) = match r.bounds {
                    Some((ii, ui)) => (Some(ii), Some(ui)),
                    None => (None, None),
                };
                w.write_record([
                    SCHEMA_VERSION.to_string(),
                    "estimate".to_string(),
                    estimand_label(r.estimand).to_string(),
                    estimator_label(r.estimator).to_string(),
                    machine(r.value),
                    machine(r.std_error),
                    machine(r.ci.0),
                    machine(r.ci.1),
                    machine_opt(ii.map(|x| x.0)),
                    machine_opt(ii.map(|x| x.1)),
                    machine_opt(ui.map(|x| x.0)),
                    machine_opt(ui.map(|x| x.1)),
                    cfg.clone(),
                ])?;
            }
            w.flush()?;
        }
        FormatArg::Human => {
            print_data_header(&analysis, args.data.alpha, rho.as_ref());
            let with_bounds = rows.iter().any(|r| r.bounds.is_some());
            if with_bounds {
                println!(
                    "{:<9} {:<10} {:>10} {:>10} {:>20} {:>20} {:>20}",
                    "estimand", "estimator", "estimate", "std.error", "CI", "II", "UI"
                );
            } else {
                println!(
                    "{:<9} {:<10} {:>10} {:>10} {:>20}",
                    "estimand", "estimator", "estimate", "std.error", "CI"
                );
            }
            for r in &rows {
                if let Some((ii, ui)) = r.bounds {
                    println!(
                        "{:<9} {:<10} {:>10} {:>10} {:>20} {:>20} {:>20}",
                        estimand_human(r.estimand),
                        estimator_human(r.estimator),
                        human(r.value),
                        human(r.std_error),
                        human_interval(r.ci),
                        human_interval(ii),
                        human_interval(ui)
                    );
                } else {
                    println!(
                        "{:<9} {:<10} {:>10} {:>10} {:>20}",
                        estimand_human(r.estimand),
                        estimator_human(r.estimator),
                        human(r.value),
                        human(r.std_error),
                        human_interval(r.ci)
                    );
                }
            }
        }
    }
    Ok(())
}

struct UiRowOk {
    value: f64,
    std_error: f64,
    ci: (f64, f64),
    ii: (f64, f64),
    ui: (f64, f64),
}

type UiRow = (Estimand, EstimatorKind, std::result::Result<UiRowOk, String>);

fn compute_ui_row(
    analysis: &Analysis,
    estimand: Estimand,
    estimator: EstimatorKind,
    rho: &RhoPair,
    alpha: f64,
    grid: usize,
    large_sample: bool,
) -> Result<UiRowOk> {
    let est = effect_estimate(&analysis.data, &analysis.models, estimand, estimator, large_sample)?;
    let ci = confidence_interval(&est, alpha)?;
    let ii = identification_interval(&analysis.data, &analysis.models, &est, rho, grid)?;
    let ui = uncertainty_interval(&analysis.data, &analysis.models, &est, rho, alpha, grid)?;
    Ok(UiRowOk {
        value: est.value,
        std_error: est.std_error,
        ci,
        ii,
        ui: (ui.lower, ui.upper),
    })
}

pub fn ui(args: &UiArgs) -> Result<()> {
    let analysis = prepare(&args.data)?;
    let rho = resolve_rho(args.rho0, args.rho1)?
        .expect("the argument parser requires at least one rho bound");

    // Infeasible rho bounds differ by arm, so one estimator's failure is
    // reported in its row while the others still produce intervals.
    let rows: Vec<UiRow> = combos(args.data.estimand, args.data.estimator)
        .into_iter()
        .map(|(estimand, estimator)| {
            let outcome = compute_ui_row(
                &analysis,
                estimand,
                estimator,
                &rho,
                args.data.alpha,
                args.grid,
                args.data.large_sample_var,
            )
            .map_err(|e| e.to_string());
            (estimand, estimator, outcome)
        })
        .collect();

    let mut config = data_config(&args.data);
    config["grid"] = json!(args.grid);
    config["rho0"] = rho_axis_json(Some(rho.rho0));
    config["rho1"] = rho_axis_json(Some(rho.rho1));

    match args.data.format {
        FormatArg::Json => {
            let results: Vec<Value> = rows
                .iter()
                .map(|(estimand, estimator, outcome)| match outcome {
                    Ok(r) => json!({
                        "estimand": estimand_label(*estimand),
                        "estimator": estimator_label(*estimator),
                        "value": r.value,
                        "std_error": r.std_error,
                        "ci_lower": r.ci.0,
                        "ci_upper": r.ci.1,
                        "identification_lower": r.ii.0,
                        "identification_upper": r.ii.1,
                        "ui_lower": r.ui.0,
                        "ui_upper": r.ui.1,
                    }),
                    Err(message) => json!({
                        "estimand": estimand_label(*estimand),
                        "estimator": estimator_label(*estimator),
                        "error": message,
                    }),
                })
                .collect();
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "ui",
                "config": config,
                "data": data_json(&analysis),
                "diagnostics": diagnostics_json(&analysis.diagnostics),
                "results": results,
            }));
        }
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record([
                "schema_version",
                "command",
                "estimand",
                "estimator",
                "value",
                "std_error",
                "ci_lower",
                "ci_upper",
                "identification_lower",
                "identification_upper",
                "ui_lower",
                "ui_upper",
                "error",
                "config",
            ])?;
            let cfg = config.to_string();
            for (estimand, estimator, outcome) in &rows {
                let mut record = vec![
                    SCHEMA_VERSION.to_string(),
                    "ui".to_string(),
                    estimand_label(*estimand).to_string(),
                    estimator_label(*estimator).to_string(),
                ];
                match outcome {
                    Ok(r) => {
                        record.extend([
                            machine(r.value),
                            machine(r.std_error),
                            machine(r.ci.0),
                            machine(r.ci.1),
                            machine(r.ii.0),
                            machine(r.ii.1),
                            machine(r.ui.0),
                            machine(r.ui.1),
                            String::new(),
                        ]);
                    }
                    Err(message) => {
                        record.extend(std::iter::repeat_n(String::new(), 8));
                        record.push(message.clone());
                    }
                }
                record.push(cfg.clone());
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        FormatArg::Human => {
            print_data_header(&analysis, args.data.alpha, Some(&rho));
            println!(
                "{:<9} {:<10} {:>10} {:>10} {:>20} {:>20} {:>20}",
                "estimand", "estimator", "estimate", "std.error", "CI", "II", "UI"
            );
            for (estimand, estimator, outcome) in &rows {
                match outcome {
                    Ok(r) => println!(
                        "{:<9} {:<10} {:>10} {:>10} {:>20} {:>20} {:>20}",
                        estimand_human(*estimand),
                        estimator_human(*estimator),
                        human(r.value),
                        human(r.std_error),
                        human_interval(r.ci),
                        human_interval(r.ii),
                        human_interval(r.ui)
                    ),
                    Err(message) => println!(
                        "{:<9} {:<10} {}",
                        estimand_human(*estimand),
                        estimator_human(*estimator),
                        message
                    ),
                }
            }
        }
    }
    Ok(())
}

struct SensitivityRow {
    estimand: Estimand,
    estimator: EstimatorKind,
    value: f64,
    std_error: f64,
    threshold: f64,
    ci_covers_zero: bool,
    at_boundary: bool,
    ui: (f64, f64),
    sensitive: bool,
}

pub fn sensitivity(args: &SensitivityArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.plausible_rho) {
        return Err(invalid(format!(
            "--plausible-rho {} must lie in [0, 1]",
            args.plausible_rho
        )));
    }
    let analysis = prepare(&args.data)?;

    let mut rows = Vec::new();
    for (estimand, estimator) in combos(args.data.estimand, args.data.estimator) {
        let est = effect_estimate(
            &analysis.data,
            &analysis.models,
            estimand,
            estimator,
            args.data.large_sample_var,
        )?;
        let th = sensitivity_threshold(
            &analysis.data,
            &analysis.models,
            &est,
            args.data.alpha,
            !args.one_sided,
            args.tol,
        )?;
        let pair = if args.one_sided {
            RhoPair::nonnegative(th.threshold)?
        } else {
            RhoPair::symmetric(th.threshold)?
        };
        let ui = uncertainty_interval(
            &analysis.data,
            &analysis.models,
            &est,
            &pair,
            args.data.alpha,
            DEFAULT_GRID,
        )?;
        rows.push(SensitivityRow {
            estimand,
            estimator,
            value: est.value,
            std_error: est.std_error,
            threshold: th.threshold,
            ci_covers_zero: th.ci_covers_zero,
            at_boundary: th.at_boundary,
            ui: (ui.lower, ui.upper),
            sensitive: th.threshold <= args.plausible_rho,
        });
    }

    let mut config = data_config(&args.data);
    config["plausible_rho"] = json!(args.plausible_rho);
    config["one_sided"] = json!(args.one_sided);
    config["tol"] = json!(args.tol);

    match args.data.format {
        FormatArg::Json => {
            let results: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "estimand": estimand_label(r.estimand),
                        "estimator": estimator_label(r.estimator),
                        "value": r.value,
                        "std_error": r.std_error,
                        "threshold": r.threshold,
                        "ci_covers_zero": r.ci_covers_zero,
                        "at_boundary": r.at_boundary,
                        "ui_lower": r.ui.0,
                        "ui_upper": r.ui.1,
                        "verdict": if r.sensitive { "SENSITIVE" } else { "PASS" },
                    })
                })
                .collect();
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "sensitivity",
                "config": config,
                "data": data_json(&analysis),
                "diagnostics": diagnostics_json(&analysis.diagnostics),
                "results": results,
            }));
        }
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record([
                "schema_version",
                "command",
                "estimand",
                "estimator",
                "value",
                "std_error",
                "threshold",
                "ci_covers_zero",
                "at_boundary",
                "ui_lower",
                "ui_upper",
                "verdict",
                "config",
            ])?;
            let cfg = config.to_string();
            for r in &rows {
                w.write_record([
                    SCHEMA_VERSION.to_string(),
                    "sensitivity".to_string(),
                    estimand_label(r.estimand).to_string(),
                    estimator_label(r.estimator).to_string(),
                    machine(r.value),
                    machine(r.std_error),
                    machine(r.threshold),
                    r.ci_covers_zero.to_string(),
                    r.at_boundary.to_string(),
                    machine(r.ui.0),
                    machine(r.ui.1),
                    if r.sensitive { "SENSITIVE" } else { "PASS" }.to_string(),
                    cfg.clone(),
                ])?;
            }
            w.flush()?;
        }
        FormatArg::Human => {
            print_data_header(&analysis, args.data.alpha, None);
            println!(
                "threshold: smallest r with rho in {} covering zero; plausibility bound {}",
                if args.one_sided { "[0, r]" } else { "[-r, r]" },
                human(args.plausible_rho)
            );
            println!(
                "{:<9} {:<10} {:>10} {:>10} {:>22} {:>10}",
                "estimand", "estimator", "estimate", "threshold", "UI at threshold", "verdict"
            );
            let mut any_boundary = false;
            for r in &rows {
                let marker = if r.at_boundary {
                    any_boundary = true;
                    "*"
                } else {
                    ""
                };
                println!(
                    "{:<9} {:<10} {:>10} {:>10} {:>22} {:>10}",
                    estimand_human(r.estimand),
                    estimator_human(r.estimator),
                    human(r.value),
                    format!("{}{marker}", human(r.threshold)),
                    human_interval(r.ui),
                    if r.sensitive { "SENSITIVE" } else { "PASS" }
                );
            }
            if any_boundary {
                println!("* search stopped at the feasibility boundary; no admissible rho overturns the result");
            }
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let rho1 = args.rho1.unwrap_or(args.rho0);
    let design = SimulationDesign::new(args.design, args.overlap, args.n, args.rho0, rho1)?;
    let ui_specs = args
        .ui
        .iter()
        .map(|iv| RhoInterval::new(iv.low, iv.high).map(|i| RhoPair::new(i, i)))
        .collect::<Result<Vec<_>>>()?;
    let spec = StudySpec::new(design, args.reps, args.seed)?
        .with_alpha(args.alpha)
        .with_grid(args.grid)
        .with_ui(ui_specs);
    let result = run_study(&spec)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| input(format!("could not create {}: {e}", args.out_dir.display())))?;
    let csv_name = format!("{}_replications.csv", args.prefix);
    let json_name = format!("{}_summary.json", args.prefix);
    let csv_path = args.out_dir.join(&csv_name);
    let json_path = args.out_dir.join(&json_name);

    write_replications(&csv_path, &result)?;
    let summary = summary_json(args, &csv_name, &result);
    let text = serde_json::to_string_pretty(&summary).expect("summary serialization");
    std::fs::write(&json_path, text + "\n")
        .map_err(|e| input(format!("could not write {}: {e}", json_path.display())))?;

    print_study_human(&result);
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn write_replications(path: &Path, result: &StudyResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| input(format!("could not write {}: {e}", path.display())))?;
    let ui_count = result.spec.ui.len();
    let mut header = vec!["replication".to_string(), "l1".to_string(), "clamped".to_string()];
    for &(estimand, estimator) in &ESTIMATOR_COMBOS {
        let prefix = format!("{}_{}", estimator_label(estimator), estimand_label(estimand));
        for column in
            ["value", "std_error", "bias_c_plugin", "bias_c", "bias_m", "bias_t", "ci_lower", "ci_upper"]
        {
            header.push(format!("{prefix}_{column}"));
        }
        for k in 0..ui_count {
            header.push(format!("{prefix}_ui{k}_lower"));
            header.push(format!("{prefix}_ui{k}_upper"));
        }
    }
    w.write_record(&header)?;

    for record in &result.records {
        let mut row =
            vec![record.replication.to_string(), machine(record.l1), record.clamped.to_string()];
        for est in &record.estimates {
            let bias_t = est.bias_confounding_oracle + est.bias_misspecification.unwrap_or(0.0);
            row.push(machine(est.value));
            row.push(machine(est.std_error));
            row.push(machine(est.bias_confounding));
            row.push(machine(est.bias_confounding_oracle));
            row.push(machine_opt(est.bias_misspecification));
            row.push(machine(bias_t));
            row.push(machine(est.ci.0));
            row.push(machine(est.ci.1));
            for &(low, high) in &est.ui {
                row.push(machine(low));
                row.push(machine(high));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn summary_json(args: &SimulateArgs, csv_name: &str, result: &StudyResult) -> Value {
    let spec = &result.spec;
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": {
            "design": spec.design.design.to_string(),
            "overlap": spec.design.overlap.to_string(),
            "n": spec.design.n,
            "replications": spec.replications,
            "rho0": spec.design.rho0,
            "rho1": spec.design.rho1,
            "alpha": spec.alpha,
            "grid": spec.grid,
            "seed": spec.seed,
            "ui": spec.ui.iter().map(|p| json!({
                "rho0": [p.rho0.low(), p.rho0.high()],
                "rho1": [p.rho1.low(), p.rho1.high()],
            })).collect::<Vec<_>>(),
            "out_dir": args.out_dir.display().to_string(),
            "prefix": args.prefix,
        },
        "truth": {"ate": result.truth_ate, "att": result.truth_att},
        "completed": result.completed,
        "failures": result.failures.iter().map(|f| json!({
            "replication": f.replication,
            "reason": f.reason,
        })).collect::<Vec<_>>(),
        "mean_l1": result.mean_l1,
        "total_clamped": result.total_clamped,
        "replications_file": csv_name,
        "estimators": result.summaries.iter().map(estimator_summary_json).collect::<Vec<_>>(),
    })
}

fn estimator_summary_json(s: &EstimatorSummary) -> Value {
    json!({
        "estimand": estimand_label(s.estimand),
        "estimator": estimator_label(s.estimator),
        "mean_estimate": s.mean_estimate,
        "empirical_bias": s.empirical_bias,
        "mc_std_error": s.mc_std_error,
        "mean_std_error": s.mean_std_error,
        "mean_bias_c_plugin": s.mean_bias_confounding,
        "mean_bias_c": s.mean_bias_confounding_oracle,
        "mean_bias_m": s.mean_bias_misspecification,
        "mean_bias_t": s.mean_bias_total_oracle,
        "ci_coverage": s.ci_coverage,
        "mean_ci_width": s.mean_ci_width,
        "ui": s.ui.iter().map(|u| json!({
            "rho0": [u.rho.rho0.low(), u.rho.rho0.high()],
            "rho1": [u.rho.rho1.low(), u.rho.rho1.high()],
            "coverage": u.coverage,
            "mean_width": u.mean_width,
            "median_width": u.median_width,
            "median_width_ratio": u.median_width_ratio,
        })).collect::<Vec<_>>(),
    })
}

fn print_study_human(result: &StudyResult) {
    let spec = &result.spec;
    let d = &spec.design;
    println!(
        "design {} ({} overlap), n = {}, replications = {}, seed = {}",
        d.design, d.overlap, d.n, spec.replications, spec.seed
    );
    println!(
        "generating rho0 = {}, rho1 = {}; truth: ATE {}, ATT {}",
        human(d.rho0),
        human(d.rho1),
        human(result.truth_ate),
        human(result.truth_att)
    );
    println!(
        "completed {}, failed {}, mean L1 {}, clamped draws {}",
        result.completed,
        result.failures.len(),
        human(result.mean_l1),
        result.total_clamped
    );
    println!();
    println!(
        "{:<9} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "estimand", "estimator", "mean", "emp.bias", "bias_c", "bias_m", "bias_t", "mc.se", "ci.cover"
    );
    for s in &result.summaries {
        println!(
            "{:<9} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            estimand_human(s.estimand),
            estimator_human(s.estimator),
            human(s.mean_estimate),
            human(s.empirical_bias),
            human(s.mean_bias_confounding_oracle),
            human_opt(s.mean_bias_misspecification),
            human(s.mean_bias_total_oracle),
            human_opt(s.mc_std_error),
            human(s.ci_coverage)
        );
    }
    for (k, pair) in spec.ui.iter().enumerate() {
        println!();
        println!(
            "uncertainty intervals with rho0 in [{}, {}], rho1 in [{}, {}]:",
            human(pair.rho0.low()),
            human(pair.rho0.high()),
            human(pair.rho1.low()),
            human(pair.rho1.high())
        );
        println!(
            "{:<9} {:<10} {:>9} {:>11} {:>13} {:>9}",
            "estimand", "estimator", "coverage", "mean.width", "median.width", "width/ci"
        );
        for s in &result.summaries {
            let u = &s.ui[k];
            println!(
                "{:<9} {:<10} {:>9} {:>11} {:>13} {:>9}",
                estimand_human(s.estimand),
                estimator_human(s.estimator),
                human(u.coverage),
                human(u.mean_width),
                human(u.median_width),
                human(u.median_width_ratio)
            );
        }
    }
    if !result.failures.is_empty() {
        println!();
        println!("failed replications:");
        for f in result.failures.iter().take(10) {
            println!("  {}: {}", f.replication, f.reason);
        }
        if result.failures.len() > 10 {
            println!("  ... and {} more", result.failures.len() - 10);
        }
    }
}
