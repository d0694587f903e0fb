//! The six run modes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use gtseq_core::estimators::{scan_properness, EstimatorId, EstimatorSpec, Evaluation, SeriesEstimator};
use gtseq_core::model::{identifiable, indep_misclass, theta_one, MisclassModel, TestAccuracy, TwoDiseaseModel};
use gtseq_core::plans::{
    replicate_rng, simulate_with, truncated_expectation, ExpectationOptions, SamplingPlan, SimulateOptions,
};
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode, PlanChoice, TwoTraitErrors};
use crate::error::{CliError, CliResult};
use crate::records::{number, EstimateRecord, ParamPoint};

/// Rows to write, plus the run events that make the exit status nonzero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<EstimateRecord>,
    pub failures: Vec<String>,
}

/// One parameter point of the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum GridPoint {
    One {
        p: f64,
        k: u32,
        c: u32,
        accuracy: TestAccuracy,
    },
    Two {
        p: [f64; 3],
        k: u32,
        c: u32,
        errors: TwoTraitErrors,
    },
}

impl GridPoint {
    pub fn k(&self) -> u32 {
        match self {
            GridPoint::One { k, .. } | GridPoint::Two { k, .. } => *k,
        }
    }

    pub fn c(&self) -> u32 {
        match self {
            GridPoint::One { c, .. } | GridPoint::Two { c, .. } => *c,
        }
    }

    pub fn is_perfect(&self) -> bool {
        match self {
            GridPoint::One { accuracy, .. } => accuracy.is_perfect(),
            GridPoint::Two { errors, .. } => *errors == TwoTraitErrors::Perfect,
        }
    }

    fn misclass(&self) -> Option<MisclassModel> {
        match self {
            GridPoint::Two {
                errors: TwoTraitErrors::Indep(e),
                ..
            } => Some(indep_misclass(e)),
            _ => None,
        }
    }

    fn two_model(&self) -> CliResult<TwoDiseaseModel> {
        match self {
            GridPoint::Two { p, k, c, .. } => Ok(TwoDiseaseModel::new(*p, *k, *c, self.misclass())?),
            GridPoint::One { .. } => unreachable!("one-trait point"),
        }
    }

    pub fn params(&self) -> ParamPoint {
        match self {
            GridPoint::One { p, k, c, accuracy } => ParamPoint {
                p: vec![*p],
                k: Some(*k),
                c: Some(*c),
                pi0: vec![accuracy.pi0()],
                pi1: vec![accuracy.pi1()],
            },
            GridPoint::Two { p, k, c, errors } => {
                let (pi0, pi1) = two_trait_accuracy(errors);
                ParamPoint {
                    p: p.to_vec(),
                    k: Some(*k),
                    c: Some(*c),
                    pi0,
                    pi1,
                }
            }
        }
    }

    /// Per-step walk probabilities, reference class first.
    pub fn step_probs(&self) -> CliResult<Vec<f64>> {
        match self {
            GridPoint::One { p, k, accuracy, .. } => {
                let theta = theta_one(*p, *k, accuracy);
                Ok(vec![1.0 - theta, theta])
            }
            GridPoint::Two { .. } => Ok(self.two_model()?.eta()?.into_array().to_vec()),
        }
    }

    /// The estimand, in estimator component order.
    pub fn truth(&self) -> CliResult<Vec<f64>> {
        match self {
            GridPoint::One { p, .. } => Ok(vec![*p]),
            GridPoint::Two { .. } => Ok(self.two_model()?.p().into_array().to_vec()),
        }
    }

    /// Estimators that target this point's model.
    pub fn applicable(&self) -> Vec<EstimatorId> {
        use EstimatorId::*;
        match (self, self.is_perfect()) {
            (GridPoint::One { .. }, true) => vec![UbOnePerfect, MleOne],
            (GridPoint::One { .. }, false) => vec![UbOneMisclass, MleOne],
            (GridPoint::Two { .. }, true) => vec![UbTwoPerfect, MleTwo],
            (GridPoint::Two { .. }, false) => vec![UbTwoMisclassSeries, MleTwo],
        }
    }

    /// What the estimator depends on (everything but the prevalence).
    fn design_key(&self) -> String {
        match self {
            GridPoint::One { k, c, accuracy, .. } => format!("1:{k}:{c}:{accuracy:?}"),
            GridPoint::Two { k, c, errors, .. } => format!("2:{k}:{c}:{errors:?}"),
        }
    }
}

fn two_trait_accuracy(errors: &TwoTraitErrors) -> (Vec<f64>, Vec<f64>) {
    match errors {
        TwoTraitErrors::Perfect => (vec![1.0, 1.0], vec![1.0, 1.0]),
        TwoTraitErrors::Indep(e) => (vec![e.pi0_1, e.pi0_2], vec![e.pi1_1, e.pi1_2]),
    }
}

/// Grid points in row-major order: `p` x `k` x `c` x `misclass`, then
/// `p2` x `k` x `c` x `misclass2`.
pub fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &p in &cfg.p {
        for &k in &cfg.k {
            for &c in &cfg.c {
                for &accuracy in &cfg.misclass {
                    out.push(GridPoint::One { p, k, c, accuracy });
                }
            }
        }
    }
    for &p in &cfg.p2 {
        for &k in &cfg.k {
            for &c in &cfg.c {
                for &errors in &cfg.misclass2 {
                    out.push(GridPoint::Two { p, k, c, errors });
                }
            }
        }
    }
    out
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    match cfg.mode {
        Mode::Estimate => run_estimate(cfg),
        Mode::VerifyUnbiased => run_verify(cfg),
        Mode::ScanProperness => run_scan(cfg),
        Mode::Identify => run_identify(cfg),
        Mode::Simulate => run_simulate(cfg),
        Mode::Bench => run_bench(cfg),
    }
}

/// Builds the estimators to run at each grid point, sharing series
/// expansions between points with the same design.
struct Estimators<'a> {
    cfg: &'a ExperimentConfig,
    series: HashMap<String, Arc<SeriesEstimator<f64>>>,
}

impl<'a> Estimators<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Estimators {
            cfg,
            series: HashMap::new(),
        }
    }

    fn ids(&self, point: &GridPoint, unbiased_only: bool) -> Vec<EstimatorId> {
        point
            .applicable()
            .into_iter()
            .filter(|id| !unbiased_only || id.is_unbiased())
            .filter(|id| self.cfg.estimators.as_ref().is_none_or(|list| list.contains(id)))
            .collect()
    }

    fn build(&mut self, point: &GridPoint, id: EstimatorId) -> CliResult<EstimatorSpec> {
        let (k, c) = (point.k(), point.c());
        Ok(match (id, point) {
            (EstimatorId::UbOnePerfect, _) => EstimatorSpec::UbOnePerfect { c, k },
            (EstimatorId::UbOneMisclass, GridPoint::One { accuracy, .. }) => EstimatorSpec::UbOneMisclass {
                c,
                k,
                accuracy: *accuracy,
            },
            (EstimatorId::MleOne, GridPoint::One { accuracy, .. }) => EstimatorSpec::MleOne {
                c,
                k,
                accuracy: *accuracy,
            },
            (EstimatorId::UbTwoPerfect, _) => EstimatorSpec::UbTwoPerfect { c, k },
            (EstimatorId::MleTwo, _) => EstimatorSpec::MleTwo {
                c,
                k,
                misclass: point.misclass(),
            },
            (EstimatorId::UbTwoMisclassSeries, _) => {
                let key = point.design_key();
                let series = match self.series.get(&key) {
                    Some(s) => s.clone(),
                    None => {
                        let misclass = point.misclass().unwrap_or_else(MisclassModel::identity);
                        let s = Arc::new(SeriesEstimator::two_disease(k, c, Some(&misclass), self.cfg.order)?);
                        self.series.insert(key, s.clone());
                        s
                    }
                };
                EstimatorSpec::UbTwoMisclassSeries(series)
            }
            _ => unreachable!("estimator {id} does not apply to {point:?}"),
        })
    }
}

fn sample_of(point: &GridPoint) -> usize {
    match point {
        GridPoint::One { .. } => 1,
        GridPoint::Two { .. } => 3,
    }
}

fn improper(values: &[f64]) -> Vec<bool> {
    let mut out: Vec<bool> = values.iter().map(|v| !(0.0..=1.0).contains(v)).collect();
    if values.len() == 4 && values[0] + values[1] + values[2] > 1.0 {
        out[3] = true;
    }
    out
}

fn run_estimate(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    let mut builder = Estimators::new(cfg);
    for (gi, point) in grid(cfg).iter().enumerate() {
        let samples: Vec<Vec<u32>> = match sample_of(point) {
            1 => cfg.y.iter().map(|&y| vec![y]).collect(),
            _ => cfg.z.iter().map(|z| z.to_vec()).collect(),
        };
        for id in builder.ids(point, false) {
            let spec = builder.build(point, id)?;
            let names = spec.component_names();
            for x in &samples {
                let row = |component: &str, estimate: f64, flags: Vec<String>| EstimateRecord {
                    estimator: id.to_string(),
                    grid_index: gi,
                    params: point.params(),
                    sample: Some(x.clone()),
                    component: component.to_string(),
                    estimate,
                    bias: None,
                    mse: None,
                    se: None,
                    n: None,
                    flags,
                };
                match spec.evaluate(x) {
                    Ok(eval) => {
                        let bad = improper(&eval.values);
                        for ((name, v), bad) in names.iter().zip(&eval.values).zip(bad) {
                            let mut flags = Vec::new();
                            if eval.clamped {
                                flags.push("clamped".into());
                            }
                            if bad {
                                flags.push("improper".into());
                            }
                            out.records.push(row(name, *v, flags));
                        }
                    }
                    Err(e) => {
                        out.failures.push(format!("{id} at grid point {gi}, sample {x:?}: {e}"));
                        for name in &names {
                            out.records.push(row(name, f64::NAN, vec![format!("error={e}")]));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_verify(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    if let Some(list) = &cfg.estimators {
        if let Some(id) = list.iter().find(|id| !id.is_unbiased()) {
            return Err(CliError::Validation(format!(
                "verify-unbiased checks unbiased estimators only; {id} is a biased baseline"
            )));
        }
    }
    let mut out = RunOutput::default();
    let mut builder = Estimators::new(cfg);
    for (gi, point) in grid(cfg).iter().enumerate() {
        let probs = point.step_probs()?;
        let truth = point.truth()?;
        for id in builder.ids(point, true) {
            let spec = builder.build(point, id)?;
            let certified = spec.sup_bound().is_some();
            let options = if certified {
                ExpectationOptions {
                    tol: cfg.tol * 1e-3,
                    max_total: cfg.max_total,
                }
            } else {
                let cap = match spec {
                    EstimatorSpec::UbTwoMisclassSeries(_) => cfg.max_total.min(cfg.order as u32),
                    _ => cfg.max_total,
                };
                ExpectationOptions {
                    tol: cfg.tol_uncertified * 1e-7,
                    max_total: cap,
                }
            };
            let report = truncated_expectation(&spec, &probs[1..], options)?;
            let slack = if certified {
                cfg.tol + report.tail_bound.unwrap_or(f64::INFINITY)
            } else {
                cfg.tol_uncertified + report.tail_estimate.unwrap_or(f64::INFINITY)
            };
            for ((name, value), target) in spec.component_names().iter().zip(&report.values).zip(&truth) {
                let bias = value - target;
                let pass = bias.abs() <= slack && (certified || report.converged);
                let mut flags = vec![
                    if certified { "certified" } else { "uncertified-tail" }.to_string(),
                    format!("slack={}", number(slack)),
                    format!("tail_mass={}", number(report.tail_mass)),
                    format!("last_total={}", report.last_total),
                ];
                if let Some(r) = report.decay_ratio {
                    flags.push(format!("decay_ratio={}", number(r)));
                }
                flags.push(if pass { "pass" } else { "fail" }.into());
                if !pass {
                    out.failures.push(format!(
                        "{id} at grid point {gi}, {name}: expectation {value} vs {target} (slack {slack})"
                    ));
                }
                out.records.push(EstimateRecord {
                    estimator: id.to_string(),
                    grid_index: gi,
                    params: point.params(),
                    sample: None,
                    component: name.to_string(),
                    estimate: *value,
                    bias: Some(bias),
                    mse: None,
                    se: None,
                    n: None,
                    flags,
                });
            }
        }
    }
    Ok(out)
}

fn run_scan(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    let mut builder = Estimators::new(cfg);
    let mut seen = std::collections::HashSet::new();
    for (gi, point) in grid(cfg).iter().enumerate() {
        // The estimators do not depend on the prevalence.
        if !seen.insert(point.design_key()) {
            continue;
        }
        let mut params = point.params();
        params.p.clear();
        for id in builder.ids(point, false) {
            let spec = builder.build(point, id)?;
            let bound = match sample_of(point) {
                1 => cfg.bound,
                _ => cfg.bound2,
            };
            if matches!(spec, EstimatorSpec::UbTwoMisclassSeries(_)) && bound as usize > cfg.order {
                return Err(CliError::Validation(format!(
                    "bound2 = {bound} exceeds the series order {}",
                    cfg.order
                )));
            }
            let found = scan_properness(&spec, bound)?;
            out.records.push(EstimateRecord {
                estimator: id.to_string(),
                grid_index: gi,
                params: params.clone(),
                sample: None,
                component: "violations".into(),
                estimate: found.len() as f64,
                bias: None,
                mse: None,
                se: None,
                n: None,
                flags: vec![format!("bound={bound}")],
            });
            for v in found {
                out.records.push(EstimateRecord {
                    estimator: id.to_string(),
                    grid_index: gi,
                    params: params.clone(),
                    sample: Some(v.point),
                    component: v.component,
                    estimate: v.value,
                    bias: None,
                    mse: None,
                    se: None,
                    n: None,
                    flags: vec![v.bound.as_str().replace(' ', "-")],
                });
            }
        }
    }
    Ok(out)
}

fn run_identify(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    let row = |gi: usize, pi0: Vec<f64>, pi1: Vec<f64>, det: f64, expected: f64, ok: bool| EstimateRecord {
        estimator: "IDENTIFY".into(),
        grid_index: gi,
        params: ParamPoint {
            pi0,
            pi1,
            ..ParamPoint::default()
        },
        sample: None,
        component: "det".into(),
        estimate: det,
        bias: Some(det - expected),
        mse: None,
        se: None,
        n: None,
        flags: vec![if ok { "identifiable" } else { "not-identifiable" }.into()],
    };
    let mut gi = 0;
    for acc in &cfg.misclass {
        // For one trait the determinant is nu itself.
        let nu = acc.nu();
        out.records.push(row(gi, vec![acc.pi0()], vec![acc.pi1()], nu, nu, nu != 0.0));
        gi += 1;
    }
    if !cfg.p2.is_empty() {
        for errors in &cfg.misclass2 {
            let (pi0, pi1) = two_trait_accuracy(errors);
            let (model, expected) = match errors {
                TwoTraitErrors::Perfect => (MisclassModel::identity(), 1.0),
                TwoTraitErrors::Indep(e) => (indep_misclass(e), (e.nu1() * e.nu2()).powi(2)),
            };
            let id = identifiable(&model);
            out.records.push(row(gi, pi0, pi1, id.det, expected, id.identifiable));
            gi += 1;
        }
    }
    Ok(out)
}

fn plan_for(cfg: &ExperimentConfig, point: &GridPoint) -> CliResult<SamplingPlan> {
    let t = sample_of(point);
    match &cfg.plan {
        PlanChoice::Inverse => Ok(SamplingPlan::inverse(t, point.c())?),
        PlanChoice::Fixed(n) => Ok(SamplingPlan::fixed(t + 1, *n)?),
        PlanChoice::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading plan file {}: {e}", path.display())))?;
            let plan = SamplingPlan::from_plan_file(&text)?;
            if plan.dim() != t + 1 {
                return Err(CliError::Validation(format!(
                    "plan file has dim {}, grid point needs {}",
                    plan.dim(),
                    t + 1
                )));
            }
            Ok(plan)
        }
    }
}

/// Seed for the walks of one grid point, so points draw independent streams.
pub fn grid_seed(seed: u64, grid_index: usize) -> u64 {
    replicate_rng(seed, grid_index as u64).next_u64()
}

fn walks(cfg: &ExperimentConfig, plan: &SamplingPlan, probs: &[f64], gi: usize) -> Vec<Result<Vec<u32>, String>> {
    let seed = grid_seed(cfg.seed, gi);
    let options = SimulateOptions {
        step_cap: cfg.step_cap,
        record_path: false,
    };
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            simulate_with(plan, probs, seed, r, options)
                .map(|w| w.terminal)
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Expected count below which a terminal point is flagged `sparse`.
pub const SPARSE_COUNT: f64 = 10.0;

fn run_simulate(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    for (gi, point) in grid(cfg).iter().enumerate() {
        let plan = plan_for(cfg, point)?;
        let probs = point.step_probs()?;
        let results = walks(cfg, &plan, &probs, gi);
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        let mut errors = 0u64;
        for r in &results {
            match r {
                Ok(x) => *counts.entry(x.clone()).or_default() += 1,
                Err(_) => errors += 1,
            }
        }
        if errors > 0 {
            out.failures
                .push(format!("grid point {gi}: {errors} walks hit the step cap of {}", cfg.step_cap));
        }
        let n = cfg.replicates;
        for (x, count) in counts {
            let prob = plan.hitting_probability(&x, &probs)?;
            let freq = count as f64 / n as f64;
            let se = (prob * (1.0 - prob) / n as f64).sqrt();
            // Too few expected hits for the normal approximation.
            let flag = if (n as f64) * prob < SPARSE_COUNT {
                "sparse"
            } else if (freq - prob).abs() <= 4.0 * se {
                "within-4se"
            } else {
                "outside-4se"
            };
            let mut flags = vec![flag.to_string()];
            if errors > 0 {
                flags.push(format!("step-cap-errors={errors}"));
            }
            out.records.push(EstimateRecord {
                estimator: "SIMULATE".into(),
                grid_index: gi,
                params: point.params(),
                sample: Some(x),
                component: "pmf".into(),
                estimate: freq,
                bias: Some(freq - prob),
                mse: None,
                se: Some(se),
                n: Some(n),
                flags,
            });
        }
    }
    Ok(out)
}

/// Monte Carlo bias, MSE and standard error of every applicable estimator
/// at every grid point. All estimators at a point see the same walks.
///
/// Walks run in parallel but are reduced in replicate order, so output does
/// not depend on the number of threads.
pub fn run_bench(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    if cfg.replicates == 0 {
        return Ok(out);
    }
    let mut builder = Estimators::new(cfg);
    for (gi, point) in grid(cfg).iter().enumerate() {
        let plan = SamplingPlan::inverse(sample_of(point), point.c())?;
        let probs = point.step_probs()?;
        let truth = point.truth()?;
        let specs: Vec<(EstimatorId, EstimatorSpec)> = builder
            .ids(point, false)
            .into_iter()
            .map(|id| builder.build(point, id).map(|s| (id, s)))
            .collect::<CliResult<_>>()?;
        let results = walks(cfg, &plan, &probs, gi);

        let walk_error = results.iter().find_map(|r| r.as_ref().err()).cloned();
        let samples: Vec<Vec<u32>> = results
            .into_iter()
            .filter_map(Result::ok)
            .map(|x| x[1..].to_vec())
            .collect();
        let distinct: Vec<Vec<u32>> = {
            let mut d = samples.clone();
            d.sort();
            d.dedup();
            d
        };
        for (id, spec) in &specs {
            let evaluated: Vec<Result<Evaluation, String>> = distinct
                .par_iter()
                .map(|x| spec.evaluate(x).map_err(|e| e.to_string()))
                .collect();
            let table: BTreeMap<&[u32], &Result<Evaluation, String>> =
                distinct.iter().map(Vec::as_slice).zip(evaluated.iter()).collect();
            let error = walk_error
                .clone()
                .or_else(|| evaluated.iter().find_map(|r| r.as_ref().err()).cloned());
            let rows = summarize(&samples, &table, &truth, error.as_deref());
            for (component, row) in spec.component_names().iter().zip(rows) {
                if let Some(e) = &error {
                    out.failures.push(format!("{id} at grid point {gi}: {e}"));
                }
                out.records.push(EstimateRecord {
                    estimator: id.to_string(),
                    grid_index: gi,
                    params: point.params(),
                    sample: None,
                    component: component.to_string(),
                    estimate: row.mean,
                    bias: Some(row.mean - row.truth),
                    mse: Some(row.mse),
                    se: Some(row.se),
                    n: Some(cfg.replicates),
                    flags: row.flags,
                });
            }
        }
    }
    Ok(out)
}

struct Summary {
    mean: f64,
    truth: f64,
    mse: f64,
    se: f64,
    flags: Vec<String>,
}

fn summarize(
    samples: &[Vec<u32>],
    table: &BTreeMap<&[u32], &Result<Evaluation, String>>,
    truth: &[f64],
    error: Option<&str>,
) -> Vec<Summary> {
    let comps = truth.len();
    if let Some(e) = error {
        return truth
            .iter()
            .map(|&t| Summary {
                mean: f64::NAN,
                truth: t,
                mse: f64::NAN,
                se: f64::NAN,
                flags: vec![format!("error={e}")],
            })
            .collect();
    }
    let n = samples.len() as f64;
    let values = |x: &Vec<u32>| match table[x.as_slice()] {
        Ok(e) => e,
        Err(_) => unreachable!("errors handled above"),
    };
    let mut sums = vec![0.0; comps];
    let mut clamped = 0u64;
    let mut improper_counts = vec![0u64; comps];
    for x in samples {
        let e = values(x);
        for (s, v) in sums.iter_mut().zip(&e.values) {
            *s += v;
        }
        if e.clamped {
            clamped += 1;
        }
        for (count, bad) in improper_counts.iter_mut().zip(improper(&e.values)) {
            *count += bad as u64;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let mut sq_dev = vec![0.0; comps];
    let mut sq_err = vec![0.0; comps];
    for x in samples {
        for (j, v) in values(x).values.iter().enumerate() {
            sq_dev[j] += (v - means[j]).powi(2);
            sq_err[j] += (v - truth[j]).powi(2);
        }
    }
    (0..comps)
        .map(|j| Summary {
            mean: means[j],
            truth: truth[j],
            mse: sq_err[j] / n,
            se: if n > 1.0 { (sq_dev[j] / (n - 1.0) / n).sqrt() } else { f64::NAN },
            flags: vec![format!("clamped={clamped}"), format!("improper={}", improper_counts[j])],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn grid_is_row_major() {
        let cfg = parse_config("mode = estimate\nseed = 1\np = 0.01, 0.05, 0.1\nk = 5, 10\nc = 1\n").unwrap();
        let points = grid(&cfg);
        assert_eq!(points.len(), 6);
        let order: Vec<(f64, u32)> = points
            .iter()
            .map(|g| match g {
                GridPoint::One { p, k, .. } => (*p, *k),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            order,
            vec![(0.01, 5), (0.01, 10), (0.05, 5), (0.05, 10), (0.1, 5), (0.1, 10)]
        );
    }

    #[test]
    fn zero_replicates_give_no_rows() {
        let mut cfg = ExperimentConfig::default_grid(Mode::Bench, 1);
        cfg.replicates = 0;
        assert!(run_bench(&cfg).unwrap().records.is_empty());
    }

    #[test]
    fn estimate_rows_flag_improper_values() {
        let cfg = parse_config(
            "mode = estimate\nseed = 1\np2 = 0.1/0.1/0.05\nk = 2\nc = 1\n[estimators]\nuse = UB_TWO_PERFECT\n[estimate]\nz = 1/1/0\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        let values: Vec<f64> = out.records.iter().map(|r| r.estimate).collect();
        assert_eq!(values, vec![0.375, 0.375, 0.375, -0.125]);
        assert!(out.records[3].flags.contains(&"improper".to_string()));
    }

    #[test]
    fn bench_is_unbiased_for_a_small_grid() {
        let mut cfg = parse_config("mode = bench\nseed = 11\np = 0.05\nk = 10\nc = 5\nreplicates = 20000\n").unwrap();
        cfg.estimators = None;
        let out = run_bench(&cfg).unwrap();
        let ub = out.records.iter().find(|r| r.estimator == "UB_ONE_PERFECT").unwrap();
        assert!(ub.bias.unwrap().abs() <= 3.0 * ub.se.unwrap(), "{ub:?}");
        assert!(out.records.iter().any(|r| r.estimator == "MLE_ONE"));
    }

    #[test]
    fn identify_reports_squared_nu_product() {
        let cfg = parse_config(
            "mode = identify\nseed = 1\np2 = 0.1/0.1/0.05\nk = 2\nc = 1\nmisclass2 = indep:0.9/0.8/0.95/0.85, indep:0.5/0.5/0.9/0.9\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        let two: Vec<&EstimateRecord> = out.records.iter().skip(1).collect();
        assert!((two[0].estimate - 0.3136).abs() < 1e-12);
        assert!(two[0].bias.unwrap().abs() < 1e-12);
        assert_eq!(two[1].flags, vec!["not-identifiable".to_string()]);
    }
}
