//! Closed-form unbiased estimators, plug-in MLE baselines, and a scanner for
//! estimates that fall outside the parameter space.
//!
//! Sample points are counts of non-reference outcomes observed before the
//! `c`-th reference (all-negative) pool: a scalar `y` for one trait and
//! `z = (z10, z01, z11)` for two.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::exact::{self, int, Rational, Surd};
use crate::model::{h_one, inverse3, Cells, MisclassModel, TestAccuracy, TwoDiseaseModel, CELL_NAMES};
use crate::series::{build_g_two, Coefficient, ExpandedTarget};
use crate::{lattice, Error, Result};

/// Estimator tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    UbOnePerfect,
    UbOneMisclass,
    UbTwoPerfect,
    UbTwoMisclassSeries,
    MleOne,
    MleTwo,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 6] = [
        EstimatorId::UbOnePerfect,
        EstimatorId::UbOneMisclass,
        EstimatorId::UbTwoPerfect,
        EstimatorId::UbTwoMisclassSeries,
        EstimatorId::MleOne,
        EstimatorId::MleTwo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::UbOnePerfect => "UB_ONE_PERFECT",
            EstimatorId::UbOneMisclass => "UB_ONE_MISCLASS",
            EstimatorId::UbTwoPerfect => "UB_TWO_PERFECT",
            EstimatorId::UbTwoMisclassSeries => "UB_TWO_MISCLASS_SERIES",
            EstimatorId::MleOne => "MLE_ONE",
            EstimatorId::MleTwo => "MLE_TWO",
        }
    }

    pub fn is_two_disease(&self) -> bool {
        matches!(
            self,
            EstimatorId::UbTwoPerfect | EstimatorId::UbTwoMisclassSeries | EstimatorId::MleTwo
        )
    }

    pub fn is_unbiased(&self) -> bool {
        !matches!(self, EstimatorId::MleOne | EstimatorId::MleTwo)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == wanted)
            .ok_or_else(|| Error::invalid("estimator", s, "one of the estimator tags"))
    }
}

/// Unbiased estimator of `p` for one trait and a perfect test:
/// `1 - prod_{i<y} (1 - 1/(k(c+i)))`.
///
/// The displayed closed form multiplies `y + 1` factors and divides by the
/// last one; the two cancel, which keeps `y = 0` exactly at zero.
pub fn ub_one_perfect(y: u32, c: u32, k: u32) -> f64 {
    let kf = k as f64;
    let q: f64 = (0..y).map(|i| 1.0 - 1.0 / (kf * (c + i) as f64)).product();
    1.0 - q
}

/// Exact form, evaluated literally as prefactor times product.
pub fn ub_one_perfect_exact(y: u32, c: u32, k: u32) -> Rational {
    let factor = |i: u32| int(1) - exact::ratio(1, k as i64 * (c + i) as i64);
    let last = factor(y);
    if last.is_zero() {
        // k = c = 1, y = 0: the displayed form reads 0/0; its limit is the
        // product without the cancelled factor.
        let head: Rational = (0..y).map(factor).fold(Rational::one(), |a, b| a * b);
        return int(1) - head;
    }
    let prod: Rational = (0..=y).map(factor).fold(Rational::one(), |a, b| a * b);
    int(1) - prod / last
}

/// Unbiased estimate of `q = 1 - p` for one trait with a misclassified
/// test, split as `scale * sum` with `scale = (pi1 / nu)^(1/k)` and
///
/// ```text
/// sum = sum_{i=0}^{y} C(y,i) pi1^-(y-i) (c+i-1)!/(c+y-1)! prod_{l=0}^{y-i-1} (l - 1/k)
/// ```
pub fn ub_one_misclass_q_exact(y: u32, c: u32, k: u32, pi0: &Rational, pi1: &Rational) -> Result<(Surd, Rational)> {
    let nu = pi0 + pi1 - int(1);
    if nu <= Rational::zero() {
        return Err(Error::NotIdentifiable(format!("pi0 + pi1 - 1 = {nu} must be positive")));
    }
    let xi = exact::ratio(1, k as i64);
    let scale = Surd::power(pi1 / &nu, xi.clone())?;
    let mut sum = Rational::zero();
    for i in 0..=y {
        let m = y - i;
        let mut term = exact::binom(y as u64, i as u64) * exact::powi(pi1, -(m as i64));
        for j in (c + i)..(c + y) {
            term /= int(j as i64);
        }
        for l in 0..m {
            term *= int(l as i64) - &xi;
        }
        sum += term;
    }
    Ok((scale, sum))
}

/// Unbiased estimator of `p` for one trait when the test has specificity
/// `pi0` and sensitivity `pi1` (requires `pi0 + pi1 > 1`).
///
/// Terms are combined in log space with a shared scale so large `y` neither
/// overflows early nor produces `inf - inf`; the result is `+-inf` only when
/// the estimate itself exceeds the `f64` range.
pub fn ub_one_misclass(y: u32, c: u32, k: u32, accuracy: &TestAccuracy) -> Result<f64> {
    let nu = accuracy.nu();
    if nu <= 0.0 {
        return Err(Error::NotIdentifiable(format!("pi0 + pi1 - 1 = {nu} must be positive")));
    }
    let pi1 = accuracy.pi1();
    let xi = 1.0 / k as f64;
    let ln_pi1 = pi1.ln();

    // Walk i downward from y so every running quantity grows by one factor:
    // ln C(y,i), ln[(c+y-1)!/(c+i-1)!], ln|prod_{l<m}(l - xi)| and the sign.
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(y as usize + 1);
    let (mut ln_binom, mut ln_fact, mut ln_prod) = (0.0f64, 0.0f64, 0.0f64);
    let mut sign = 1.0f64;
    let mut vanished = false;
    for m in 0..=y {
        let i = y - m;
        if m > 0 {
            ln_binom += ((i + 1) as f64).ln() - (m as f64).ln();
            ln_fact += ((c + i) as f64).ln();
            let f = (m - 1) as f64 - xi;
            if f == 0.0 {
                vanished = true;
            } else {
                ln_prod += f.abs().ln();
                if f < 0.0 {
                    sign = -sign;
                }
            }
        }
        if !vanished {
            let ln = ln_binom - m as f64 * ln_pi1 - ln_fact + ln_prod;
            terms.push((ln, sign));
        }
    }
    // ascending i
    terms.reverse();
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let sum = neumaier(terms.iter().map(|(ln, s)| s * (ln - top).exp()));
    let ln_scale = xi * (pi1 / nu).ln();
    let q = if sum == 0.0 {
        0.0
    } else {
        sum.signum() * (sum.abs().ln() + top + ln_scale).exp()
    };
    Ok(1.0 - q)
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn running_product(from: u32, to: u32, c: u32, xi: f64) -> f64 {
    (from..to).map(|j| 1.0 - xi / (c + j) as f64).product()
}

/// Unbiased estimator of `(p00, p10, p01, p11)` for two traits and perfect
/// tests. Always sums to one; `p11` can be negative.
pub fn ub_two_perfect(z: [u32; 3], c: u32, k: u32) -> Cells<f64> {
    let [z10, z01, z11] = z;
    let total = z10 + z01 + z11;
    let xi = 1.0 / k as f64;
    // The prefactor cancels the last factor of each displayed product.
    let p00 = running_product(0, total, c, xi);
    let a = running_product(z10, total, c, xi);
    let b = running_product(z01, total, c, xi);
    Cells {
        c00: p00,
        c10: a - p00,
        c01: b - p00,
        c11: 1.0 - a - b + p00,
    }
}

/// [`ub_two_perfect`] with the running products read off a table of log
/// prefix sums, so each point costs O(1) instead of O(total).
#[derive(Clone, Debug)]
pub struct UbTwoPerfectTable {
    first: f64,
    // log_prefix[m] = sum_{1 <= i < m} ln(1 - 1/(k(c+i)))
    log_prefix: Vec<f64>,
}

impl UbTwoPerfectTable {
    pub fn new(c: u32, k: u32, max_total: u32) -> Self {
        let xi = 1.0 / k as f64;
        let mut log_prefix = Vec::with_capacity(max_total as usize + 1);
        let mut acc = 0.0;
        log_prefix.push(0.0);
        for m in 1..=max_total {
            log_prefix.push(acc);
            acc += (-xi / (c + m) as f64).ln_1p();
        }
        UbTwoPerfectTable {
            first: 1.0 - xi / c as f64,
            log_prefix,
        }
    }

    pub fn max_total(&self) -> u32 {
        self.log_prefix.len() as u32 - 1
    }

    fn product(&self, from: u32, to: u32) -> f64 {
        if from >= to {
            return 1.0;
        }
        let lo = from.max(1);
        let mut v = if lo < to {
            (self.log_prefix[to as usize] - self.log_prefix[lo as usize]).exp()
        } else {
            1.0
        };
        if from == 0 {
            v *= self.first;
        }
        v
    }

    /// `None` past the table's total.
    pub fn eval(&self, z: [u32; 3]) -> Option<Cells<f64>> {
        let total = z[0] + z[1] + z[2];
        if total > self.max_total() {
            return None;
        }
        let p00 = self.product(0, total);
        let a = self.product(z[0], total);
        let b = self.product(z[1], total);
        Some(Cells {
            c00: p00,
            c10: a - p00,
            c01: b - p00,
            c11: 1.0 - a - b + p00,
        })
    }
}

/// Exact form, evaluated literally with the prefactor.
pub fn ub_two_perfect_exact(z: [u32; 3], c: u32, k: u32) -> Cells<Rational> {
    let [z10, z01, z11] = z;
    let total = z10 + z01 + z11;
    let factor = |n: u32| int(1) - exact::ratio(1, k as i64 * n as i64);
    if factor(c + total).is_zero() {
        // k = c = 1 at z = 0, where the displayed form reads 0/0.
        return Cells::from_array([int(1), int(0), int(0), int(0)]);
    }
    let prefactor = factor(c + total).recip();
    let prod = |offset: u32, upto: u32| (0..=upto).fold(Rational::one(), |acc, j| acc * factor(c + offset + j));
    let p00 = &prefactor * prod(0, total);
    let p10 = &prefactor * prod(z10, z01 + z11) - &p00;
    let p01 = &prefactor * prod(z01, z10 + z11) - &p00;
    Cells {
        c11: int(1) - &p00 - &p10 - &p01,
        c00: p00,
        c10: p10,
        c01: p01,
    }
}

/// Unbiased estimator for two traits built from Taylor coefficients of
/// `p_a / eta00^c` in the observed cell probabilities.
///
/// Holds the four expanded series for a fixed `(k, c, misclassification)`
/// so that many sample points can be evaluated against one expansion.
#[derive(Clone, Debug)]
pub struct SeriesEstimator<T = f64> {
    k: u32,
    c: u32,
    targets: [ExpandedTarget<T>; 4],
}

impl<T: Coefficient> SeriesEstimator<T> {
    /// Expands through total count `order`. `misclass = None` means perfect
    /// tests.
    pub fn two_disease(k: u32, c: u32, misclass: Option<&MisclassModel>, order: usize) -> Result<Self> {
        if let Some(m) = misclass {
            let id = crate::model::identifiable(m);
            if !id.identifiable {
                return Err(Error::NotIdentifiable(format!("det Phi = {}", id.det)));
            }
        }
        let [g00, g10, g01, g11] = build_g_two(k, c, misclass)?;
        Ok(SeriesEstimator {
            k,
            c,
            targets: [g00.expand(order)?, g10.expand(order)?, g01.expand(order)?, g11.expand(order)?],
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn order(&self) -> usize {
        self.targets[0].order()
    }

    pub fn estimate(&self, z: [u32; 3]) -> Result<Cells<f64>> {
        let mut out = [0.0; 4];
        for (slot, target) in out.iter_mut().zip(&self.targets) {
            *slot = target.estimate(self.c, &z)?;
        }
        Ok(Cells::from_array(out))
    }

    /// Parts of each component as `(radical, rational coefficient)` pairs.
    pub fn estimate_parts(&self, z: [u32; 3]) -> Result<[Vec<(Surd, T)>; 4]> {
        let [a, b, c, d] = &self.targets;
        Ok([
            a.estimate_parts(self.c, &z)?,
            b.estimate_parts(self.c, &z)?,
            c.estimate_parts(self.c, &z)?,
            d.estimate_parts(self.c, &z)?,
        ])
    }
}

impl SeriesEstimator<Rational> {
    /// Exact estimate when no irrational scalar is involved (perfect tests).
    pub fn estimate_exact(&self, z: [u32; 3]) -> Result<Option<Cells<Rational>>> {
        let parts = self.estimate_parts(z)?;
        let mut out: [Rational; 4] = Default::default();
        for (slot, comp) in out.iter_mut().zip(parts) {
            for (radical, v) in comp {
                match radical.as_rational() {
                    Some(r) => *slot += r * v,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(Cells::from_array(out)))
    }
}

/// Two-trait unbiased estimate under misclassification, expanding through
/// `order` (which must cover the total count of `z`).
pub fn ub_two_misclass(z: [u32; 3], model: &TwoDiseaseModel, order: usize) -> Result<Cells<f64>> {
    let total = (z[0] + z[1] + z[2]) as usize;
    if total > order {
        return Err(Error::InsufficientOrder {
            required: total,
            available: order,
        });
    }
    let misclass = model
        .misclass()
        .ok_or_else(|| Error::invalid("misclass", "none", "a misclassification model"))?;
    SeriesEstimator::<f64>::two_disease(model.k(), model.c(), Some(misclass), order)?.estimate(z)
}

/// An estimate and whether clamping to the parameter space changed it.
#[derive(Clone, Debug, PartialEq)]
pub struct Clamped<T> {
    pub value: T,
    pub clamped: bool,
}

/// Plug-in MLE for one trait: `theta-hat = y / (c + y)`, then the inverse
/// map, clamped to `[0, 1]`.
pub fn mle_one(y: u32, c: u32, k: u32, accuracy: &TestAccuracy) -> Clamped<f64> {
    let theta = y as f64 / (c + y) as f64;
    match h_one(theta, k, accuracy) {
        Err(_) => Clamped {
            value: 1.0,
            clamped: true,
        },
        Ok(q) if q > 1.0 => Clamped {
            value: 0.0,
            clamped: true,
        },
        Ok(q) => Clamped {
            value: 1.0 - q,
            clamped: false,
        },
    }
}

/// Plug-in MLE for two traits with perfect tests.
pub fn mle_two(z: [u32; 3], c: u32, k: u32) -> Clamped<Cells<f64>> {
    mle_two_with(z, c, k, None).expect("no misclassification model to invert")
}

/// Plug-in MLE for two traits; under misclassification the observed cell
/// frequencies are first mapped back through `theta = Phi^-1 (eta - pi00)`.
///
/// Nonpositive radicands are clamped to zero, cells to `[0, 1]`, and the
/// first three cells are rescaled when they sum past one; `p11` is the
/// complement.
pub fn mle_two_with(z: [u32; 3], c: u32, k: u32, misclass: Option<&MisclassModel>) -> Result<Clamped<Cells<f64>>> {
    let n = (c + z[0] + z[1] + z[2]) as f64;
    let eta = z.map(|v| v as f64 / n);
    let theta = match misclass {
        None => eta,
        Some(m) => {
            let inv = inverse3(&m.phi()).ok_or_else(|| Error::NotIdentifiable("Phi is singular".into()))?;
            let inv = inv.map(|row| row.map(|v| exact::to_f64(&v)));
            let pi00 = m.pi00_f64();
            std::array::from_fn(|i| (0..3).map(|j| inv[i][j] * (eta[j] - pi00[j])).sum())
        }
    };
    let mut clamped = false;
    let xi = 1.0 / k as f64;
    let root = |r: f64, clamped: &mut bool| {
        if r <= 0.0 {
            *clamped = true;
            0.0
        } else {
            r.powf(xi)
        }
    };
    let [r00, r10, r01] = crate::model::radicands_two(theta);
    let p00 = root(r00, &mut clamped);
    let mut cells = [p00, root(r10, &mut clamped) - p00, root(r01, &mut clamped) - p00];
    for v in cells.iter_mut() {
        let bounded = v.clamp(0.0, 1.0);
        if bounded != *v {
            clamped = true;
            *v = bounded;
        }
    }
    let head: f64 = cells.iter().sum();
    if head > 1.0 {
        clamped = true;
        for v in cells.iter_mut() {
            *v /= head;
        }
    }
    let [p00, p10, p01] = cells;
    let p11 = (1.0 - p00 - p10 - p01).max(0.0);
    Ok(Clamped {
        value: Cells {
            c00: p00,
            c10: p10,
            c01: p01,
            c11: p11,
        },
        clamped,
    })
}

/// An estimator with all of its parameters fixed, ready to evaluate at
/// sample points.
#[derive(Clone, Debug)]
pub enum EstimatorSpec {
    UbOnePerfect { c: u32, k: u32 },
    UbOneMisclass { c: u32, k: u32, accuracy: TestAccuracy },
    UbTwoPerfect { c: u32, k: u32 },
    UbTwoMisclassSeries(Arc<SeriesEstimator<f64>>),
    MleOne { c: u32, k: u32, accuracy: TestAccuracy },
    MleTwo { c: u32, k: u32, misclass: Option<MisclassModel> },
}

/// One evaluation at a sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub clamped: bool,
}

impl EstimatorSpec {
    pub fn id(&self) -> EstimatorId {
        match self {
            EstimatorSpec::UbOnePerfect { .. } => EstimatorId::UbOnePerfect,
            EstimatorSpec::UbOneMisclass { .. } => EstimatorId::UbOneMisclass,
            EstimatorSpec::UbTwoPerfect { .. } => EstimatorId::UbTwoPerfect,
            EstimatorSpec::UbTwoMisclassSeries(_) => EstimatorId::UbTwoMisclassSeries,
            EstimatorSpec::MleOne { .. } => EstimatorId::MleOne,
            EstimatorSpec::MleTwo { .. } => EstimatorId::MleTwo,
        }
    }

    pub fn c(&self) -> u32 {
        match self {
            EstimatorSpec::UbOnePerfect { c, .. }
            | EstimatorSpec::UbOneMisclass { c, .. }
            | EstimatorSpec::UbTwoPerfect { c, .. }
            | EstimatorSpec::MleOne { c, .. }
            | EstimatorSpec::MleTwo { c, .. } => *c,
            EstimatorSpec::UbTwoMisclassSeries(s) => s.c(),
        }
    }

    /// Length of a sample point: 1 for one trait, 3 for two.
    pub fn sample_dim(&self) -> usize {
        if self.id().is_two_disease() {
            3
        } else {
            1
        }
    }

    pub fn component_names(&self) -> Vec<&'static str> {
        if self.id().is_two_disease() {
            vec!["p00", "p10", "p01", "p11"]
        } else {
            vec!["p"]
        }
    }

    /// A proven bound on `|estimate|` over every sample point, when one
    /// exists: 1 for proper estimators, 2 for the two-trait perfect-test
    /// estimator (each cell is a signed sum of products of factors in
    /// `[0, 1]`).
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            EstimatorSpec::UbOnePerfect { .. } | EstimatorSpec::MleOne { .. } | EstimatorSpec::MleTwo { .. } => {
                Some(1.0)
            }
            EstimatorSpec::UbTwoPerfect { .. } => Some(2.0),
            EstimatorSpec::UbOneMisclass { accuracy, .. } if accuracy.is_perfect() => Some(1.0),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: &[u32]) -> Result<Evaluation> {
        if x.len() != self.sample_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sample_dim(),
                found: x.len(),
            });
        }
        let plain = |values: Vec<f64>| Evaluation { values, clamped: false };
        let z = || [x[0], x[1], x[2]];
        Ok(match self {
            EstimatorSpec::UbOnePerfect { c, k } => plain(vec![ub_one_perfect(x[0], *c, *k)]),
            EstimatorSpec::UbOneMisclass { c, k, accuracy } => plain(vec![ub_one_misclass(x[0], *c, *k, accuracy)?]),
            EstimatorSpec::UbTwoPerfect { c, k } => plain(ub_two_perfect(z(), *c, *k).into_array().to_vec()),
            EstimatorSpec::UbTwoMisclassSeries(s) => plain(s.estimate(z())?.into_array().to_vec()),
            EstimatorSpec::MleOne { c, k, accuracy } => {
                let m = mle_one(x[0], *c, *k, accuracy);
                Evaluation {
                    values: vec![m.value],
                    clamped: m.clamped,
                }
            }
            EstimatorSpec::MleTwo { c, k, misclass } => {
                let m = mle_two_with(z(), *c, *k, misclass.as_ref())?;
                Evaluation {
                    values: m.value.into_array().to_vec(),
                    clamped: m.clamped,
                }
            }
        })
    }
}

/// Which edge of the parameter space a value crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolatedBound {
    BelowZero,
    AboveOne,
    SimplexSumAboveOne,
}

impl ViolatedBound {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolatedBound::BelowZero => "below 0",
            ViolatedBound::AboveOne => "above 1",
            ViolatedBound::SimplexSumAboveOne => "simplex sum > 1",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropernessViolation {
    pub point: Vec<u32>,
    pub component: String,
    pub value: f64,
    pub bound: ViolatedBound,
}

fn check_value(point: &[u32], component: &str, value: f64, out: &mut Vec<PropernessViolation>) {
    let bound = if value < 0.0 {
        ViolatedBound::BelowZero
    } else if value > 1.0 || value.is_nan() {
        ViolatedBound::AboveOne
    } else {
        return;
    };
    out.push(PropernessViolation {
        point: point.to_vec(),
        component: component.to_string(),
        value,
        bound,
    });
}

fn scan_point(spec: &EstimatorSpec, point: &[u32]) -> Result<Vec<PropernessViolation>> {
    let mut out = Vec::new();
    if let EstimatorSpec::UbTwoPerfect { c, k } = spec {
        // Exact arithmetic so that sums equal to one are not flagged by rounding.
        let e = ub_two_perfect_exact([point[0], point[1], point[2]], *c, *k);
        let [p00, p10, p01, p11] = e.into_array();
        for (name, v) in ["p00", "p10", "p01", "p11"].iter().zip([&p00, &p10, &p01, &p11]) {
            if *v < Rational::zero() || *v > int(1) {
                check_value(point, name, exact::to_f64(v), &mut out);
            }
        }
        let head = p00 + p10 + p01;
        if head > int(1) {
            out.push(PropernessViolation {
                point: point.to_vec(),
                component: "p00+p10+p01".into(),
                value: exact::to_f64(&head),
                bound: ViolatedBound::SimplexSumAboveOne,
            });
        }
        return Ok(out);
    }
    let eval = spec.evaluate(point)?;
    for (name, v) in spec.component_names().iter().zip(&eval.values) {
        check_value(point, name, *v, &mut out);
    }
    if eval.values.len() == 4 {
        let head = eval.values[0] + eval.values[1] + eval.values[2];
        if head > 1.0 {
            out.push(PropernessViolation {
                point: point.to_vec(),
                component: "p00+p10+p01".into(),
                value: head,
                bound: ViolatedBound::SimplexSumAboveOne,
            });
        }
    }
    Ok(out)
}

/// Every sample point with total count at most `bound`, evaluated and
/// checked against `[0, 1]` (and, for two traits, `p00 + p10 + p01 <= 1`).
/// Output is ordered lexicographically by sample point.
pub fn scan_properness(spec: &EstimatorSpec, bound: u32) -> Result<Vec<PropernessViolation>> {
    let points = lattice::points_up_to(spec.sample_dim(), bound);
    let found: Vec<Vec<PropernessViolation>> = points
        .par_iter()
        .map(|p| scan_point(spec, p))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// First violation in increasing total count, stopping there.
pub fn first_violation(spec: &EstimatorSpec, bound: u32) -> Result<Option<PropernessViolation>> {
    for n in 0..=bound {
        for p in lattice::compositions(spec.sample_dim(), n) {
            if let Some(v) = scan_point(spec, &p)?.into_iter().next() {
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

/// Cell names in estimator output order.
pub fn cell_component_names() -> [String; 4] {
    CELL_NAMES.map(|c| format!("p{c}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn table_matches_running_products() {
        for (c, k) in [(1, 1), (1, 2), (3, 5), (20, 10)] {
            let table = UbTwoPerfectTable::new(c, k, 60);
            for z in lattice::points_up_to(3, 60).into_iter().step_by(7) {
                let z = [z[0], z[1], z[2]];
                let a = table.eval(z).unwrap().into_array();
                let b = ub_two_perfect(z, c, k).into_array();
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() < 1e-13, "c={c} k={k} z={z:?}: {x} vs {y}");
                }
            }
            assert!(table.eval([61, 0, 0]).is_none());
        }
    }

    #[test]
    fn perfect_one_examples() {
        for c in 1..5 {
            for k in 1..5 {
                assert_eq!(ub_one_perfect(0, c, k), 0.0);
                assert_eq!(ub_one_perfect_exact(0, c, k), int(0));
            }
        }
        assert_eq!(ub_one_perfect(1, 1, 2), 0.5);
        assert_eq!(ub_one_perfect(1, 2, 2), 0.25);
        assert_eq!(ub_one_perfect_exact(1, 2, 2), ratio(1, 4));
    }

    #[test]
    fn misclass_y0_is_negative() {
        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        let v = ub_one_misclass(0, 1, 2, &acc).unwrap();
        let expected = 1.0 - (0.95f64 / 0.85).sqrt();
        assert!((v - expected).abs() < 1e-15);
        assert!((v + 0.05719).abs() < 1e-5);
    }

    #[test]
    fn misclass_reduces_to_perfect() {
        for c in 1..4 {
            for k in 1..5 {
                for y in 0..40 {
                    let a = ub_one_misclass(y, c, k, &TestAccuracy::PERFECT).unwrap();
                    let b = ub_one_perfect(y, c, k);
                    assert!((a - b).abs() < 1e-12, "y={y} c={c} k={k}: {a} vs {b}");
                    let (s, q) = ub_one_misclass_q_exact(y, c, k, &int(1), &int(1)).unwrap();
                    assert_eq!(s.as_rational(), Some(&int(1)));
                    assert_eq!(int(1) - q, ub_one_perfect_exact(y, c, k));
                }
            }
        }
    }

    #[test]
    fn misclass_float_matches_exact() {
        let (pi0, pi1) = (ratio(98, 100), ratio(95, 100));
        let acc = TestAccuracy::new(0.98, 0.95).unwrap();
        for y in 0..30 {
            let (s, q) = ub_one_misclass_q_exact(y, 3, 4, &pi0, &pi1).unwrap();
            let exact = 1.0 - s.to_f64() * exact::to_f64(&q);
            let float = ub_one_misclass(y, 3, 4, &acc).unwrap();
            assert!((exact - float).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn misclass_rejects_nu_nonpositive() {
        let acc = TestAccuracy::new(0.3, 0.6).unwrap();
        assert!(ub_one_misclass(1, 1, 2, &acc).is_err());
        assert!(ub_one_misclass_q_exact(1, 1, 2, &ratio(3, 10), &ratio(6, 10)).is_err());
    }

    #[test]
    fn two_perfect_counterexample() {
        let e = ub_two_perfect_exact([1, 1, 0], 1, 2);
        assert_eq!(e, Cells::from_array([ratio(3, 8), ratio(3, 8), ratio(3, 8), ratio(-1, 8)]));
        let f = ub_two_perfect([1, 1, 0], 1, 2);
        assert!((f.c11 + 0.125).abs() < 1e-15);
        assert_eq!(ub_two_perfect([0, 0, 0], 3, 4), Cells::from_array([1.0, 0.0, 0.0, 0.0]));
        assert_eq!(
            ub_two_perfect_exact([0, 0, 0], 3, 4),
            Cells::from_array([int(1), int(0), int(0), int(0)])
        );
    }

    #[test]
    fn two_perfect_k1() {
        let e = ub_two_perfect_exact([1, 0, 0], 1, 1);
        // classical inverse multinomial: p00-hat = 0 once any non-reference cell is seen at c = 1
        assert_eq!(e.c00, int(0));
        assert!(&e.c00 + &e.c10 + &e.c01 <= int(1));
    }

    #[test]
    fn series_estimator_reduces_to_closed_form() {
        let s = SeriesEstimator::<Rational>::two_disease(2, 2, Some(&MisclassModel::identity()), 5).unwrap();
        for z in lattice::points_up_to(3, 5) {
            let z = [z[0], z[1], z[2]];
            assert_eq!(s.estimate_exact(z).unwrap().unwrap(), ub_two_perfect_exact(z, 2, 2));
        }
    }

    #[test]
    fn mle_examples() {
        assert_eq!(mle_one(0, 3, 2, &TestAccuracy::PERFECT).value, 0.0);
        let m = mle_one(1, 1, 2, &TestAccuracy::PERFECT);
        assert!((m.value - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!(!m.clamped);
        let acc = TestAccuracy::new(0.9, 0.8).unwrap();
        let m = mle_one(100, 1, 2, &acc);
        assert_eq!(m.value, 1.0);
        assert!(m.clamped);
        let m = mle_one(0, 1, 2, &acc);
        assert_eq!(m.value, 0.0);
        assert!(m.clamped);

        assert_eq!(mle_two([0, 0, 0], 1, 2).value, Cells::from_array([1.0, 0.0, 0.0, 0.0]));
        assert_eq!(mle_two([1, 0, 0], 1, 1).value, Cells::from_array([0.5, 0.5, 0.0, 0.0]));
        let m = mle_two([1, 1, 0], 1, 2);
        assert!(m.value.as_array().iter().all(|v| (0.0..=1.0).contains(*v)));
        assert!((m.value.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scanner_examples() {
        let v = scan_properness(&EstimatorSpec::UbOnePerfect { c: 1, k: 2 }, 1000).unwrap();
        assert!(v.is_empty());

        let acc = TestAccuracy::new(0.9, 0.95).unwrap();
        let spec = EstimatorSpec::UbOneMisclass { c: 1, k: 2, accuracy: acc };
        let v = scan_properness(&spec, 5).unwrap();
        assert_eq!(v[0].point, vec![0]);
        assert_eq!(v[0].bound, ViolatedBound::BelowZero);
        assert!((v[0].value + 0.05719).abs() < 1e-5);

        let v = scan_properness(&EstimatorSpec::UbTwoPerfect { c: 1, k: 2 }, 2).unwrap();
        let sum = v
            .iter()
            .find(|v| v.point == [1, 1, 0] && v.bound == ViolatedBound::SimplexSumAboveOne)
            .unwrap();
        assert_eq!(sum.value, 1.125);
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.point.cmp(&b.point));
        assert_eq!(
            sorted.iter().map(|v| &v.point).collect::<Vec<_>>(),
            v.iter().map(|v| &v.point).collect::<Vec<_>>()
        );
    }

    #[test]
    fn estimator_tags_round_trip() {
        for id in EstimatorId::ALL {
            assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
        }
        assert!("nope".parse::<EstimatorId>().is_err());
        assert_eq!("ub-one-perfect".parse::<EstimatorId>().unwrap(), EstimatorId::UbOnePerfect);
    }
}
