//! Sampling plans as stopping sets on the lattice, and everything that walks
//! over them.
//!
//! A walk starts at the origin of `N^(t+1)` and at each step increments one
//! coordinate: coordinate `0` (the reference class, all-negative pools) with
//! probability `mu0`, coordinate `i` with probability `mu_i`. It stops on the
//! first boundary point it reaches.
//!
//! For binomial plans (`t = 1`) a point is `[negatives, positives]`; the
//! "y-axis" of the usual `(x, y) = (positives, negatives)` picture is the
//! set of points with no positives.

use std::collections::{BTreeSet, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;
use statrs::function::factorial::ln_factorial;

use crate::estimators::{EstimatorSpec, UbTwoPerfectTable};
use crate::exact::{self, Rational};
use crate::model::TestAccuracy;
use crate::{lattice, Error, Result};

/// Default cap on the number of steps in one simulated walk.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Stop as soon as coordinate `coord` reaches `count`.
    CoordinateReaches { coord: usize, count: u32 },
    /// Stop after `n` steps.
    FixedTotal { n: u32 },
    /// An explicit finite set of stopping points.
    Explicit(BTreeSet<Vec<u32>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Finiteness {
    /// Every walk stops within a bounded number of steps.
    Finite,
    /// Walks can be arbitrarily long (or, for explicit sets that do not
    /// close, never stop).
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    dim: usize,
    boundary: Boundary,
    finiteness: Finiteness,
}

impl SamplingPlan {
    /// Inverse multinomial sampling `IMN_t(c)`: sample until `c` reference
    /// outcomes, over `t + 1` coordinates.
    pub fn inverse(t: usize, c: u32) -> Result<Self> {
        Self::stop_when(t + 1, 0, c)
    }

    /// Sample until coordinate `coord` reaches `count`.
    pub fn stop_when(dim: usize, coord: usize, count: u32) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", dim, "at least 2 coordinates"));
        }
        if coord >= dim {
            return Err(Error::invalid("coord", coord, "a coordinate index below dim"));
        }
        if count == 0 {
            return Err(Error::invalid("count", count, "an integer >= 1"));
        }
        Ok(SamplingPlan {
            dim,
            boundary: Boundary::CoordinateReaches { coord, count },
            finiteness: Finiteness::Unbounded,
        })
    }

    /// Fixed sample size `n`.
    pub fn fixed(dim: usize, n: u32) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", dim, "at least 2 coordinates"));
        }
        Ok(SamplingPlan {
            dim,
            boundary: Boundary::FixedTotal { n },
            finiteness: Finiteness::Finite,
        })
    }

    /// An explicit set of boundary points. Every point must be reachable
    /// from the origin without passing through another boundary point.
    pub fn explicit(dim: usize, points: impl IntoIterator<Item = Vec<u32>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", dim, "at least 2 coordinates"));
        }
        let points: BTreeSet<Vec<u32>> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::Plan("plan has no boundary points".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        let mut plan = SamplingPlan {
            dim,
            boundary: Boundary::Explicit(points),
            finiteness: Finiteness::Finite,
        };
        let Boundary::Explicit(points) = &plan.boundary else {
            unreachable!()
        };
        for p in points {
            if plan.path_count(p)?.is_zero() {
                return Err(Error::Plan(format!(
                    "boundary point {p:?} can only be reached through another boundary point"
                )));
            }
        }
        plan.finiteness = plan.explicit_closure();
        Ok(plan)
    }

    /// Reads the plan file format: a `dim <t+1>` header line, then one
    /// boundary point per line as space-separated nonnegative integers.
    pub fn from_plan_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::PlanFormat {
            line: 1,
            message: "missing `dim <n>` header".into(),
        })?;
        let dim = header
            .trim()
            .strip_prefix("dim")
            .and_then(|rest| rest.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::PlanFormat {
                line: 1,
                message: format!("expected `dim <n>`, found `{}`", header.trim()),
            })?;
        let mut points = Vec::new();
        for (idx, line) in lines {
            let point: Vec<u32> = line
                .split_whitespace()
                .map(|tok| tok.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::PlanFormat {
                    line: idx + 1,
                    message: format!("bad coordinate: {e}"),
                })?;
            if point.len() != dim {
                return Err(Error::PlanFormat {
                    line: idx + 1,
                    message: format!("expected {dim} coordinates, found {}", point.len()),
                });
            }
            points.push(point);
        }
        Self::explicit(dim, points)
    }

    /// Writes a finite plan in the plan file format.
    pub fn to_plan_file(&self) -> Result<String> {
        let points = self.boundary_points()?;
        let mut out = format!("dim {}\n", self.dim);
        for p in points {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn finiteness(&self) -> Finiteness {
        self.finiteness
    }

    pub fn is_boundary(&self, x: &[u32]) -> bool {
        match &self.boundary {
            Boundary::CoordinateReaches { coord, count } => x[*coord] == *count,
            Boundary::FixedTotal { n } => x.iter().sum::<u32>() == *n,
            Boundary::Explicit(points) => points.contains(x),
        }
    }

    /// The boundary points of a plan with finitely many of them.
    pub fn boundary_points(&self) -> Result<Vec<Vec<u32>>> {
        match &self.boundary {
            Boundary::CoordinateReaches { .. } => Err(Error::Plan(
                "a stop-when-count-reached plan has infinitely many boundary points".into(),
            )),
            Boundary::FixedTotal { n } => Ok(lattice::points_up_to(self.dim, *n)
                .into_iter()
                .filter(|p| p.iter().sum::<u32>() == *n)
                .collect()),
            Boundary::Explicit(points) => Ok(points.iter().cloned().collect()),
        }
    }

    /// Breadth-first search over interior points reachable from the origin.
    /// The plan closes if each of them lies below some boundary point.
    fn explicit_closure(&self) -> Finiteness {
        let Boundary::Explicit(points) = &self.boundary else {
            return self.finiteness;
        };
        let dominated = |x: &[u32]| points.iter().any(|b| b.iter().zip(x).all(|(bi, xi)| bi >= xi));
        let origin = vec![0u32; self.dim];
        if points.contains(&origin) {
            return Finiteness::Finite;
        }
        let mut seen = HashSet::from([origin.clone()]);
        let mut queue = VecDeque::from([origin]);
        while let Some(x) = queue.pop_front() {
            if !dominated(&x) {
                return Finiteness::Unbounded;
            }
            for i in 0..self.dim {
                let mut next = x.clone();
                next[i] += 1;
                if !points.contains(&next) && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Finiteness::Finite
    }

    /// Number of lattice paths from the origin to boundary point `point` that
    /// touch no other boundary point on the way.
    pub fn path_count(&self, point: &[u32]) -> Result<BigUint> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        if !self.is_boundary(point) {
            return Err(Error::NotOnBoundary(point.to_vec()));
        }
        // Dense table over the box [0, point], indexed in mixed radix.
        let extents: Vec<usize> = point.iter().map(|&v| v as usize + 1).collect();
        let size: usize = extents.iter().product();
        let mut strides = vec![1usize; self.dim];
        for i in (0..self.dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * extents[i + 1];
        }
        let mut counts = vec![BigUint::zero(); size];
        let mut x = vec![0u32; self.dim];
        for idx in 0..size {
            if idx > 0 {
                // advance the mixed-radix counter
                let mut pos = self.dim - 1;
                loop {
                    x[pos] += 1;
                    if x[pos] as usize == extents[pos] {
                        x[pos] = 0;
                        pos -= 1;
                    } else {
                        break;
                    }
                }
            }
            let value = if idx == 0 {
                BigUint::one()
            } else {
                let mut acc = BigUint::zero();
                for i in 0..self.dim {
                    if x[i] == 0 {
                        continue;
                    }
                    let prev = idx - strides[i];
                    x[i] -= 1;
                    let stopped = self.is_boundary(&x);
                    x[i] += 1;
                    if !stopped {
                        acc += &counts[prev];
                    }
                }
                acc
            };
            counts[idx] = value;
        }
        Ok(counts.pop().unwrap_or_default())
    }

    /// Probability that a walk with per-step probabilities `step_probs`
    /// stops at `point`: `K(point) * prod step_probs_i^point_i`.
    pub fn hitting_probability(&self, point: &[u32], step_probs: &[f64]) -> Result<f64> {
        cumulative_probs(self.dim, step_probs)?;
        let mut ln = ln_biguint(&self.path_count(point)?);
        for (&x, &q) in point.iter().zip(step_probs) {
            if x > 0 {
                ln += x as f64 * q.ln();
            }
        }
        Ok(ln.exp())
    }
}

fn ln_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Probability of `X = x` for `X ~ IMN_t(c, mu)`, evaluated in log space:
/// `(c + |x| - 1)! / ((c-1)! prod x_i!) * mu0^c * prod mu_i^x_i`.
pub fn pmf_imn(x: &[u32], c: u32, mu: &[f64]) -> Result<f64> {
    let mu0 = check_mu(x, c, mu)?;
    let total: u64 = x.iter().map(|&v| v as u64).sum();
    let mut ln = ln_factorial(c as u64 + total - 1) - ln_factorial(c as u64 - 1) + c as f64 * mu0.ln();
    for (&xi, &mi) in x.iter().zip(mu) {
        if xi > 0 {
            if mi == 0.0 {
                return Ok(0.0);
            }
            ln += xi as f64 * mi.ln() - ln_factorial(xi as u64);
        }
    }
    Ok(ln.exp())
}

fn check_mu(x: &[u32], c: u32, mu: &[f64]) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: x.len(),
        });
    }
    if c == 0 {
        return Err(Error::invalid("c", c, "an integer >= 1"));
    }
    let mu0 = 1.0 - mu.iter().sum::<f64>();
    if mu.iter().any(|m| !(*m >= 0.0)) || !(mu0 > 0.0) {
        return Err(Error::Domain(format!(
            "mu = {mu:?} must be nonnegative with sum below 1"
        )));
    }
    Ok(mu0)
}

/// Exact pmf for rational `mu`.
pub fn pmf_imn_exact(x: &[u32], c: u32, mu: &[Rational]) -> Result<Rational> {
    if x.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: x.len(),
        });
    }
    let mu0 = exact::int(1) - mu.iter().sum::<Rational>();
    if mu.iter().any(|m| *m < Rational::zero()) || mu0 <= Rational::zero() {
        return Err(Error::Domain("mu must be nonnegative with sum below 1".into()));
    }
    let mut coeff = Rational::one();
    let mut n = c as i64 - 1;
    for &xi in x {
        for j in 1..=xi as i64 {
            n += 1;
            coeff = coeff * exact::int(n) / exact::int(j);
        }
    }
    // coeff is now (c-1+|x|)! / ((c-1)! prod x_i!)
    let mut p = coeff * exact::powi(&mu0, c as i64);
    for (&xi, mi) in x.iter().zip(mu) {
        p *= exact::powi(mi, xi as i64);
    }
    Ok(p)
}

/// Terminal point of one simulated walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkOutcome {
    pub terminal: Vec<u32>,
    pub steps: u64,
    /// Coordinate incremented at each step, when recorded.
    pub path: Option<Vec<u8>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SimulateOptions {
    pub step_cap: u64,
    pub record_path: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            step_cap: DEFAULT_STEP_CAP,
            record_path: false,
        }
    }
}

/// Random number stream for one replicate: ChaCha8 keyed by `seed`, with the
/// replicate index as the stream number. Independent of scheduling.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Simulates one walk. `step_probs[i]` is the probability of incrementing
/// coordinate `i`; coordinate 0 is the reference class.
pub fn simulate(plan: &SamplingPlan, step_probs: &[f64], seed: u64, replicate: u64) -> Result<WalkOutcome> {
    simulate_with(plan, step_probs, seed, replicate, SimulateOptions::default())
}

pub fn simulate_with(
    plan: &SamplingPlan,
    step_probs: &[f64],
    seed: u64,
    replicate: u64,
    options: SimulateOptions,
) -> Result<WalkOutcome> {
    let cumulative = cumulative_probs(plan.dim(), step_probs)?;
    let mut rng = replicate_rng(seed, replicate);
    walk(plan, &cumulative, &mut rng, options)
}

pub(crate) fn cumulative_probs(dim: usize, step_probs: &[f64]) -> Result<Vec<f64>> {
    if step_probs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: step_probs.len(),
        });
    }
    let total: f64 = step_probs.iter().sum();
    if step_probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "step probabilities {step_probs:?} must be nonnegative and sum to 1"
        )));
    }
    let mut acc = 0.0;
    Ok(step_probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect())
}

fn walk(plan: &SamplingPlan, cumulative: &[f64], rng: &mut ChaCha8Rng, options: SimulateOptions) -> Result<WalkOutcome> {
    let dim = plan.dim();
    let mut x = vec![0u32; dim];
    let mut steps = 0u64;
    let mut path = options.record_path.then(Vec::new);
    let last = cumulative[dim - 1];
    while !plan.is_boundary(&x) {
        if steps >= options.step_cap {
            return Err(Error::StepCapExceeded { cap: options.step_cap });
        }
        let u: f64 = rng.random::<f64>() * last;
        // Zero-probability coordinates are never chosen: `u < cumulative[i]`
        // fails when cumulative[i] == cumulative[i-1].
        let i = cumulative.iter().position(|&c| u < c).unwrap_or(dim - 1);
        x[i] += 1;
        steps += 1;
        if let Some(p) = path.as_mut() {
            p.push(i as u8);
        }
    }
    Ok(WalkOutcome {
        terminal: x,
        steps,
        path,
    })
}

/// Options for [`truncated_expectation`].
#[derive(Clone, Copy, Debug)]
pub struct ExpectationOptions {
    /// Stop once the certified tail bound (or, without one, the trailing
    /// shell contributions) falls below this.
    pub tol: f64,
    /// Largest total count enumerated.
    pub max_total: u32,
}

impl Default for ExpectationOptions {
    fn default() -> Self {
        ExpectationOptions {
            tol: 1e-10,
            max_total: 2000,
        }
    }
}

/// Partial expectation of an estimator under `IMN_t(c, mu)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationReport {
    /// `sum f(x) pmf(x)` over `|x| <= last_total`, per component.
    pub values: Vec<f64>,
    pub last_total: u32,
    /// `P(|X| > last_total)`.
    pub tail_mass: f64,
    /// `sup|f| * tail_mass` when a bound on `|f|` is known.
    pub tail_bound: Option<f64>,
    /// Geometric-mean ratio of successive shell contributions over the last
    /// few shells, for estimators without a certified bound.
    pub decay_ratio: Option<f64>,
    /// Extrapolated remainder `|S_n| r / (1 - r)` from the decay ratio.
    pub tail_estimate: Option<f64>,
    /// The stopping tolerance was met within `max_total`.
    pub converged: bool,
}

impl ExpectationReport {
    pub fn certified(&self) -> bool {
        self.tail_bound.is_some()
    }
}

/// `E f(X)` for `X ~ IMN_t(c, mu)` with the estimator's own `c`.
pub fn truncated_expectation(
    estimator: &EstimatorSpec,
    mu: &[f64],
    options: ExpectationOptions,
) -> Result<ExpectationReport> {
    let comps = estimator.component_names().len();
    let table = match estimator {
        EstimatorSpec::UbTwoPerfect { c, k } => Some(UbTwoPerfectTable::new(*c, *k, options.max_total)),
        _ => None,
    };
    truncated_expectation_with(
        |x, out| {
            match table.as_ref().and_then(|t| t.eval([x[0], x[1], x[2]])) {
                Some(cells) => out.copy_from_slice(&cells.into_array()),
                None => out.copy_from_slice(&estimator.evaluate(x)?.values),
            }
            Ok(())
        },
        comps,
        estimator.c(),
        mu,
        estimator.sup_bound(),
        options,
    )
}

/// Shells of the decay diagnostic.
const DECAY_WINDOW: usize = 5;

/// Generic form: `f` writes `components` values per sample point; `sup_bound`
/// bounds `|f|` everywhere when known.
///
/// Each shell `|x| = n` is split by its first coordinate across threads and
/// merged in order, so the result does not depend on the thread count.
pub fn truncated_expectation_with<F>(
    f: F,
    components: usize,
    c: u32,
    mu: &[f64],
    sup_bound: Option<f64>,
    options: ExpectationOptions,
) -> Result<ExpectationReport>
where
    F: Fn(&[u32], &mut [f64]) -> Result<()> + Sync,
{
    let t = mu.len();
    let mu0 = check_mu(&vec![0; t], c, mu)?;
    let ln_fact: Vec<f64> = (0..=(c + options.max_total) as u64).map(ln_factorial).collect();
    let ln_mu: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let base = c as f64 * mu0.ln() - ln_fact[c as usize - 1];
    let weight = |x: &[u32], n: u32| -> f64 {
        let mut ln = base + ln_fact[(c + n) as usize - 1];
        for (&xi, lm) in x.iter().zip(&ln_mu) {
            if xi > 0 {
                ln += xi as f64 * lm - ln_fact[xi as usize];
            }
        }
        ln.exp()
    };

    let mut values = vec![0.0; components];
    let mut comp = vec![0.0; components];
    let mut shells: Vec<f64> = Vec::new();
    let mut report = ExpectationReport {
        values: Vec::new(),
        last_total: 0,
        tail_mass: 1.0,
        tail_bound: None,
        decay_ratio: None,
        tail_estimate: None,
        converged: false,
    };
    for n in 0..=options.max_total {
        let heads = if t == 0 { 0 } else { n };
        let parts: Vec<Vec<f64>> = (0..=heads)
            .into_par_iter()
            .map(|head| {
                let mut part = vec![0.0; components];
                let mut fx = vec![0.0; components];
                let mut err = None;
                lattice::for_each_with_head(t, n, head, |x| {
                    if err.is_some() {
                        return;
                    }
                    let w = weight(x, n);
                    if w == 0.0 {
                        return;
                    }
                    if let Err(e) = f(x, &mut fx) {
                        err = Some(e);
                        return;
                    }
                    for (s, v) in part.iter_mut().zip(&fx) {
                        *s += v * w;
                    }
                });
                err.map_or(Ok(part), Err)
            })
            .collect::<Result<_>>()?;
        let mut shell = vec![0.0; components];
        for part in parts {
            for (s, v) in shell.iter_mut().zip(part) {
                *s += v;
            }
        }
        // Kahan accumulation across shells
        for j in 0..components {
            let y = shell[j] - comp[j];
            let tot = values[j] + y;
            comp[j] = (tot - values[j]) - y;
            values[j] = tot;
        }
        shells.push(shell.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        report.last_total = n;
        report.tail_mass = negative_binomial_tail(n, c, mu0);

        match sup_bound {
            Some(sup) => {
                let bound = sup * report.tail_mass;
                report.tail_bound = Some(bound);
                if bound <= options.tol {
                    report.converged = true;
                    break;
                }
            }
            None => {
                if let Some((ratio, estimate)) = decay(&shells) {
                    report.decay_ratio = Some(ratio);
                    report.tail_estimate = Some(estimate);
                    let recent = &shells[shells.len() - DECAY_WINDOW..];
                    if ratio < 1.0 && estimate <= options.tol && recent.iter().all(|s| *s <= options.tol) {
                        report.converged = true;
                        break;
                    }
                }
            }
        }
    }
    report.values = values;
    Ok(report)
}

fn decay(shells: &[f64]) -> Option<(f64, f64)> {
    if shells.len() <= DECAY_WINDOW {
        return None;
    }
    let window = &shells[shells.len() - DECAY_WINDOW - 1..];
    let last = *window.last()?;
    if window.iter().all(|s| *s == 0.0) {
        return Some((0.0, 0.0));
    }
    let first = window[0];
    if first == 0.0 || last == 0.0 {
        return Some((0.0, last));
    }
    let ratio = (last / first).powf(1.0 / DECAY_WINDOW as f64);
    let estimate = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
    Some((ratio, estimate))
}

/// `P(N > n)` for the number `N` of non-reference outcomes before the `c`-th
/// reference outcome.
pub fn negative_binomial_tail(n: u32, c: u32, mu0: f64) -> f64 {
    if mu0 >= 1.0 {
        return 0.0;
    }
    beta_reg(n as f64 + 1.0, c as f64, 1.0 - mu0)
}

/// Result of [`axis_boundary_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisCheck {
    pub count_on_axis: usize,
    pub passes: bool,
}

/// Counts the reachable boundary points with no non-reference outcomes
/// (the y-axis for binomial plans). Unbiased estimation of `p` needs
/// exactly one.
pub fn axis_boundary_check(plan: &SamplingPlan) -> AxisCheck {
    let count_on_axis = match plan.boundary() {
        Boundary::CoordinateReaches { coord, .. } => usize::from(*coord == 0),
        Boundary::FixedTotal { .. } => 1,
        Boundary::Explicit(points) => points.iter().filter(|p| p[1..].iter().all(|&v| v == 0)).count(),
    };
    AxisCheck {
        count_on_axis,
        passes: count_on_axis == 1,
    }
}

/// Target function `h(theta)` for [`poly_representability`].
#[derive(Clone, Debug)]
pub enum HTarget {
    /// `q = ((pi1 - theta) / nu)^(1/k)`.
    OneDisease { k: u32, accuracy: TestAccuracy },
}

impl HTarget {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            HTarget::OneDisease { k, accuracy } => {
                ((accuracy.pi1() - theta) / accuracy.nu()).powf(1.0 / *k as f64)
            }
        }
    }

    /// `[1 - pi0 + delta, pi1 - delta]`.
    pub fn default_domain(&self, delta: f64) -> (f64, f64) {
        match self {
            HTarget::OneDisease { accuracy, .. } => (1.0 - accuracy.pi0() + delta, accuracy.pi1() - delta),
        }
    }
}

/// Best approximation of a target by `sum_b f(b) K(b) theta^x1 (1-theta)^x0`
/// over the boundary points `b = [x0, x1]` of a finite binomial plan.
#[derive(Clone, Debug)]
pub struct PolyFit {
    /// Smallest maximum absolute residual found on the grid.
    pub min_max_residual: f64,
    /// Fitted estimator values per boundary point.
    pub coefficients: Vec<(Vec<u32>, f64)>,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Offset of the default `theta` domain from the edges of `(1 - pi0, pi1)`.
pub const DOMAIN_MARGIN: f64 = 0.05;

/// Fits the plan's attainable expectations to `target` on a Chebyshev grid:
/// least squares first, then Lawson reweighting towards the minimax fit.
/// A residual bounded away from zero means no estimator on this plan has
/// expectation `h(theta)` for every `theta`.
pub fn poly_representability(
    plan: &SamplingPlan,
    target: &HTarget,
    grid_size: usize,
    domain: Option<(f64, f64)>,
) -> Result<PolyFit> {
    if plan.dim() != 2 {
        return Err(Error::invalid("dim", plan.dim(), "a binomial plan (2 coordinates)"));
    }
    if plan.finiteness() != Finiteness::Finite {
        return Err(Error::Plan("representability needs a finite plan".into()));
    }
    let points = plan.boundary_points()?;
    let (lo, hi) = domain.unwrap_or_else(|| target.default_domain(DOMAIN_MARGIN));
    if !(lo < hi) || grid_size < points.len() {
        return Err(Error::invalid(
            "grid",
            format!("[{lo}, {hi}] with {grid_size} nodes"),
            "a nonempty interval and at least one node per boundary point",
        ));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| {
            let angle = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * grid_size) as f64;
            0.5 * (lo + hi) + 0.5 * (hi - lo) * angle.cos()
        })
        .collect();
    let counts: Vec<f64> = points
        .iter()
        .map(|p| plan.path_count(p).map(|k| big_to_f64(&k)))
        .collect::<Result<_>>()?;
    let design = DMatrix::from_fn(grid_size, points.len(), |i, j| {
        let th = grid[i];
        counts[j] * th.powi(points[j][1] as i32) * (1.0 - th).powi(points[j][0] as i32)
    });
    let rhs = DVector::from_iterator(grid_size, grid.iter().map(|&th| target.eval(th)));

    let svd = design.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * grid_size as f64;
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();

    let solve = |weights: &DVector<f64>| -> Result<DVector<f64>> {
        let mut a = design.clone();
        let mut b = rhs.clone();
        for i in 0..grid_size {
            let w = weights[i].sqrt();
            a.row_mut(i).scale_mut(w);
            b[i] *= w;
        }
        a.svd(true, true)
            .solve(&b, eps)
            .map_err(|e| Error::Domain(format!("least squares failed: {e}")))
    };

    let mut weights = DVector::from_element(grid_size, 1.0 / grid_size as f64);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..200 {
        let coef = solve(&weights)?;
        let resid = &rhs - &design * &coef;
        let max = resid.amax();
        if best.as_ref().is_none_or(|(m, _)| max < *m) {
            best = Some((max, coef));
        }
        if max == 0.0 {
            break;
        }
        // Lawson update
        for i in 0..grid_size {
            weights[i] *= resid[i].abs();
        }
        let total = weights.sum();
        if !(total > 0.0) {
            break;
        }
        weights /= total;
    }
    let (min_max_residual, coef) = best.expect("at least one iteration");
    Ok(PolyFit {
        min_max_residual,
        coefficients: points.into_iter().zip(coef.iter().copied()).collect(),
        rank,
        rank_deficient: rank < counts.len(),
    })
}

fn big_to_f64(v: &BigUint) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::INFINITY)
}
