//! Truncated multivariate power series and the Taylor-coefficient
//! construction of unbiased estimators under inverse multinomial sampling.
//!
//! If `X ~ IMN_t(c, mu)` (sampling until `c` reference-class outcomes) and
//! `h` is analytic at `mu = 0`, the unique unbiased estimator of `h(mu)` is
//!
//! ```text
//! f(x) = a_x * prod(x_i!) * (c - 1)! / (c + |x| - 1)!
//! ```
//!
//! where `a_x` is the coefficient of `mu^x` in the Taylor series of
//! `g(mu) = h(mu) / mu_0^c`, `mu_0 = 1 - sum(mu)`.
//!
//! Every `g` needed here is a signed sum of products of powers of affine
//! forms, `(a0 + a . mu)^xi`. Such a power is expanded as
//! `a0^xi * (1 + (a / a0) . mu)^xi`: the series part has rational
//! coefficients whenever `a0`, `a` and `xi` are rational, and the possibly
//! irrational scalar `a0^xi` is carried as a [`Surd`].

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::exact::{self, int, Rational, Surd};
use crate::model::{inverse3, MisclassModel};
use crate::{lattice, Error, Result};

/// Coefficient ring for [`TruncatedSeries`].
pub trait Coefficient:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// `self * num / den` for small positive integers.
    fn mul_ratio(&self, num: u64, den: u64) -> Self;
}

impl Coefficient for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        exact::to_f64(self)
    }

    fn mul_ratio(&self, num: u64, den: u64) -> Self {
        self * exact::ratio(num as i64, den as i64)
    }
}

impl Coefficient for f64 {
    fn from_rational(q: &Rational) -> Self {
        exact::to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn mul_ratio(&self, num: u64, den: u64) -> Self {
        self * (num as f64 / den as f64)
    }
}

type Key = (u32, Vec<u32>);

/// Largest packed index space for which products use a dense accumulator.
const DENSE_LIMIT: usize = 1 << 24;

fn key(x: &[u32]) -> Key {
    (x.iter().sum(), x.to_vec())
}

/// A power series in `dim` variables truncated at total degree `order`.
///
/// Terms are kept sparse, keyed by total degree first so that truncated
/// products can stop early. Absent terms are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<T> {
    dim: usize,
    order: usize,
    terms: BTreeMap<Key, T>,
}

impl<T: Coefficient> TruncatedSeries<T> {
    pub fn zero(dim: usize, order: usize) -> Self {
        TruncatedSeries {
            dim,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, order: usize, value: T) -> Self {
        let mut s = Self::zero(dim, order);
        s.insert(&vec![0; dim], value);
        s
    }

    /// Builds a series from explicit `(exponent, coefficient)` pairs; terms
    /// above `order` are dropped.
    pub fn from_terms<I>(dim: usize, order: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, T)>,
    {
        let mut s = Self::zero(dim, order);
        for (x, v) in terms {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            if (x.iter().sum::<u32>() as usize) <= order {
                let k = key(&x);
                let slot = s.terms.entry(k).or_insert_with(T::zero);
                *slot += v;
            }
        }
        s.prune();
        Ok(s)
    }

    fn insert(&mut self, x: &[u32], value: T) {
        if value.is_zero() || (x.iter().sum::<u32>() as usize) > self.order {
            return;
        }
        self.terms.insert(key(x), value);
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `mu^x`; zero when absent. Fails when `|x|` exceeds the
    /// truncation order, where the coefficient is unknown.
    pub fn coeff(&self, x: &[u32]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let degree = x.iter().sum::<u32>() as usize;
        if degree > self.order {
            return Err(Error::InsufficientOrder {
                required: degree,
                available: self.order,
            });
        }
        Ok(self.terms.get(&key(x)).cloned().unwrap_or_else(T::zero))
    }

    /// Terms in graded order (total degree, then lexicographic).
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], &T)> {
        self.terms.iter().map(|((_, x), v)| (x.as_slice(), v))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    /// Sum, truncated to the smaller of the two orders.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.truncate(self.order.min(other.order));
        for ((d, x), v) in &other.terms {
            if (*d as usize) <= out.order {
                let slot = out.terms.entry((*d, x.clone())).or_insert_with(T::zero);
                *slot += v.clone();
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.clone() * factor.clone();
        }
        out.prune();
        out
    }

    /// Drops every term above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        TruncatedSeries {
            dim: self.dim,
            order,
            terms: self
                .terms
                .range(..((order + 1) as u32, Vec::new()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Cauchy product truncated at `min(order_a, order_b)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let order = self.order.min(other.order);
        let base = order + 1;
        let cells = (0..self.dim).try_fold(1usize, |n, _| n.checked_mul(base));
        let terms = match cells {
            Some(cells) if cells <= DENSE_LIMIT => self.mul_dense(other, order, cells),
            _ => self.mul_sparse(other, order),
        };
        let mut out = TruncatedSeries {
            dim: self.dim,
            order,
            terms,
        };
        out.prune();
        Ok(out)
    }

    fn mul_sparse(&self, other: &Self, order: usize) -> BTreeMap<Key, T> {
        let mut terms: BTreeMap<Key, T> = BTreeMap::new();
        for ((da, xa), va) in &self.terms {
            if *da as usize > order {
                break;
            }
            let room = order as u32 - da;
            for ((db, xb), vb) in other.terms.range(..(room + 1, Vec::new())) {
                let x: Vec<u32> = xa.iter().zip(xb).map(|(a, b)| a + b).collect();
                let slot = terms.entry((da + db, x)).or_insert_with(T::zero);
                *slot += va.clone() * vb.clone();
            }
        }
        terms
    }

    // Exponents up to `order` packed in base `order + 1`; sums of two
    // in-range exponents never carry, so packed indices simply add.
    fn mul_dense(&self, other: &Self, order: usize, cells: usize) -> BTreeMap<Key, T> {
        let base = order + 1;
        let pack = |s: &Self| -> Vec<(u32, usize, T)> {
            s.terms
                .range(..((order + 1) as u32, Vec::new()))
                .map(|((d, x), v)| (*d, x.iter().rev().fold(0, |acc, &e| acc * base + e as usize), v.clone()))
                .collect()
        };
        let a = pack(self);
        let b = pack(other);
        let mut acc = vec![T::zero(); cells];
        let mut touched = vec![false; cells];
        for (da, ia, va) in &a {
            let room = order as u32 - da;
            for (_, ib, vb) in b.iter().take_while(|t| t.0 <= room) {
                acc[ia + ib] += va.clone() * vb.clone();
                touched[ia + ib] = true;
            }
        }
        let mut terms = BTreeMap::new();
        for (i, v) in acc.into_iter().enumerate() {
            if !touched[i] {
                continue;
            }
            let mut rest = i;
            let x: Vec<u32> = (0..self.dim)
                .map(|_| {
                    let e = rest % base;
                    rest /= base;
                    e as u32
                })
                .collect();
            terms.insert(key(&x), v);
        }
        terms
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> TruncatedSeries<U> {
        let mut out = TruncatedSeries {
            dim: self.dim,
            order: self.order,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        };
        out.prune();
        out
    }

    pub fn to_f64(&self) -> TruncatedSeries<f64> {
        self.map(|v| v.to_f64())
    }
}

/// `series_mul` under its contract name.
pub fn series_mul<T: Coefficient>(a: &TruncatedSeries<T>, b: &TruncatedSeries<T>) -> Result<TruncatedSeries<T>> {
    a.mul(b)
}

/// `prod(x_i!) * (c - 1)! / (c + |x| - 1)!`, accumulated as a product of
/// `|x|` ratios each at most one.
fn taylor_to_estimator<T: Coefficient>(value: T, c: u32, x: &[u32]) -> T {
    let numerators = x.iter().flat_map(|&xi| 1..=xi as u64);
    let denominators = (0..).map(|j| c as u64 + j);
    numerators
        .zip(denominators)
        .fold(value, |acc, (num, den)| acc.mul_ratio(num, den))
}

/// The unbiased estimate at sample point `x` for the target whose
/// `g = h / mu_0^c` has Taylor series `g`.
pub fn taylor_estimator<T: Coefficient>(g: &TruncatedSeries<T>, c: u32, x: &[u32]) -> Result<T> {
    if c == 0 {
        return Err(Error::invalid("c", c, "an integer >= 1"));
    }
    Ok(taylor_to_estimator(g.coeff(x)?, c, x))
}

/// `(intercept + linear . mu)^exponent`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePower {
    pub intercept: Rational,
    pub linear: Vec<Rational>,
    pub exponent: Rational,
}

impl AffinePower {
    pub fn new(intercept: Rational, linear: Vec<Rational>, exponent: Rational) -> Result<Self> {
        if !intercept.is_positive() {
            return Err(Error::Domain(format!(
                "affine power with intercept {intercept} is not analytic at the origin"
            )));
        }
        Ok(AffinePower {
            intercept,
            linear,
            exponent,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    fn same_base(&self, other: &Self) -> bool {
        self.intercept == other.intercept && self.linear == other.linear
    }
}

/// A series with a symbolic scalar in front: `scale * series`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledSeries<T> {
    pub scale: Surd,
    pub series: TruncatedSeries<T>,
}

/// Generalised binomial expansion of `(a0 + a . mu)^xi` through total degree
/// `order`, returned as `a0^xi * (1 + (a/a0) . mu)^xi` with the second factor
/// expanded exactly.
pub fn expand_affine_power(power: &AffinePower, order: usize) -> Result<ScaledSeries<Rational>> {
    expand_affine_power_as(power, order)
}

/// [`expand_affine_power`] with coefficients accumulated in `T`. Each
/// coefficient is a product of exactly computed rational factors, so the
/// `f64` backend rounds once per factor rather than through long rational
/// chains.
pub fn expand_affine_power_as<T: Coefficient>(power: &AffinePower, order: usize) -> Result<ScaledSeries<T>> {
    if !power.intercept.is_positive() {
        return Err(Error::Domain(format!(
            "affine power with intercept {} is not analytic at the origin",
            power.intercept
        )));
    }
    let dim = power.dim();
    let scale = Surd::power(power.intercept.clone(), power.exponent.clone())?;
    let w: Vec<Rational> = power.linear.iter().map(|a| a / &power.intercept).collect();
    let active: Vec<usize> = (0..dim).filter(|&i| !w[i].is_zero()).collect();

    let mut series = TruncatedSeries::zero(dim, order);
    // powers[i][e] = w_i^e
    let powers: Vec<Vec<T>> = w
        .iter()
        .map(|wi| {
            let mut p = Vec::with_capacity(order + 1);
            let mut acc = Rational::one();
            for _ in 0..=order {
                p.push(T::from_rational(&acc));
                acc *= wi;
            }
            p
        })
        .collect();
    let mut binom = Rational::one();
    for n in 0..=order {
        if n > 0 {
            binom *= (&power.exponent - int(n as i64 - 1)) / int(n as i64);
        }
        if binom.is_zero() {
            break;
        }
        let binom_t = T::from_rational(&binom);
        for sub in lattice::compositions(active.len(), n as u32) {
            let mut coeff = multinomial(&sub, binom_t.clone());
            let mut x = vec![0u32; dim];
            for (slot, &e) in active.iter().zip(&sub) {
                x[*slot] = e;
                coeff = coeff * powers[*slot][e as usize].clone();
            }
            series.insert(&x, coeff);
        }
        if active.is_empty() {
            break;
        }
    }
    Ok(ScaledSeries { scale, series })
}

/// `start * n! / prod(parts_i!)` with `n = sum(parts)`.
fn multinomial<T: Coefficient>(parts: &[u32], start: T) -> T {
    let mut acc = start;
    let mut running = 0u64;
    for &p in parts {
        for j in 1..=p as u64 {
            running += 1;
            acc = acc.mul_ratio(running, j);
        }
    }
    acc
}

/// `scale * prod(factors)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProduct {
    pub scale: Surd,
    pub factors: Vec<AffinePower>,
}

impl PowerProduct {
    /// Combines factors with identical affine bases by adding exponents.
    pub fn new(scale: Surd, factors: Vec<AffinePower>) -> Self {
        let mut merged: Vec<AffinePower> = Vec::with_capacity(factors.len());
        for f in factors {
            match merged.iter_mut().find(|m| m.same_base(&f)) {
                Some(m) => m.exponent += f.exponent,
                None => merged.push(f),
            }
        }
        merged.retain(|f| !f.exponent.is_zero());
        PowerProduct { scale, factors: merged }
    }
}

/// A function of `dim` variables written as a sum of [`PowerProduct`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTarget {
    pub dim: usize,
    pub terms: Vec<PowerProduct>,
}

impl SeriesTarget {
    /// Expands every term through total degree `order`. Terms sharing the
    /// same irrational scalar are added together.
    pub fn expand<T: Coefficient>(&self, order: usize) -> Result<ExpandedTarget<T>> {
        let mut parts: Vec<(Surd, TruncatedSeries<T>)> = Vec::new();
        for term in &self.terms {
            let mut scale = term.scale.clone();
            let mut series = TruncatedSeries::constant(self.dim, order, T::one());
            for factor in &term.factors {
                if factor.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: factor.dim(),
                    });
                }
                let e = expand_affine_power_as::<T>(factor, order)?;
                scale = scale.mul(&e.scale);
                series = series.mul(&e.series)?;
            }
            let radical = scale.radical_part();
            let series = series.scale(&T::from_rational(scale.coeff()));
            match parts.iter_mut().find(|(r, _)| *r == radical) {
                Some((_, s)) => *s = s.add(&series)?,
                None => parts.push((radical, series)),
            }
        }
        Ok(ExpandedTarget {
            dim: self.dim,
            order,
            parts,
        })
    }
}

/// `sum_i radical_i * series_i`, with each radical a product of irrational
/// powers (unit coefficient).
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedTarget<T> {
    dim: usize,
    order: usize,
    parts: Vec<(Surd, TruncatedSeries<T>)>,
}

impl<T: Coefficient> ExpandedTarget<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn parts(&self) -> &[(Surd, TruncatedSeries<T>)] {
        &self.parts
    }

    /// The single series when no irrational scalar is involved.
    pub fn as_series(&self) -> Option<TruncatedSeries<T>> {
        match self.parts.as_slice() {
            [] => Some(TruncatedSeries::zero(self.dim, self.order)),
            [(r, s)] if r.as_rational().is_some() => Some(s.clone()),
            _ => None,
        }
    }

    /// Unbiased estimate at `x`, per radical: `sum_i radical_i * f_i(x)`.
    pub fn estimate_parts(&self, c: u32, x: &[u32]) -> Result<Vec<(Surd, T)>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        self.parts
            .iter()
            .map(|(r, s)| Ok((r.clone(), taylor_estimator(s, c, x)?)))
            .collect()
    }

    pub fn estimate(&self, c: u32, x: &[u32]) -> Result<f64> {
        Ok(self
            .estimate_parts(c, x)?
            .iter()
            .map(|(r, v)| r.to_f64() * v.to_f64())
            .sum())
    }
}

/// `g = q / (1 - theta)^c` for one trait, `q = ((pi1 - theta) / nu)^(1/k)`.
pub fn build_g_one(k: u32, c: u32, pi0: &Rational, pi1: &Rational) -> Result<SeriesTarget> {
    let nu = pi0 + pi1 - int(1);
    if nu.is_zero() {
        return Err(Error::NotIdentifiable("pi0 + pi1 - 1 = 0".into()));
    }
    if nu.is_negative() {
        return Err(Error::Domain(format!(
            "pi0 + pi1 - 1 = {nu} < 0: the positive-rate map is decreasing and its inverse is not analytic at 0"
        )));
    }
    let xi = exact::ratio(1, k as i64);
    let root = AffinePower::new(pi1.clone(), vec![int(-1)], xi.clone())?;
    let denom = AffinePower::new(int(1), vec![int(-1)], int(-(c as i64)))?;
    let scale = Surd::power(nu, -xi)?;
    Ok(SeriesTarget {
        dim: 1,
        terms: vec![PowerProduct::new(scale, vec![root, denom])],
    })
}

/// `g_a = p_a / mu_0^c` for each cell `a` in `00, 10, 01, 11`, as functions of
/// the observed cell probabilities (`eta`, or `theta` without
/// misclassification).
///
/// The prevalences are `p00 = R00^(1/k)`, `p10 = R10^(1/k) - p00`,
/// `p01 = R01^(1/k) - p00`, `p11 = 1 - p00 - p10 - p01` with radicands
/// `R00 = 1 - t10 - t01 - t11`, `R10 = 1 - t01 - t11`, `R01 = 1 - t10 - t11`.
/// Under misclassification `theta = Phi^-1 (eta - pi00)`, which keeps every
/// radicand affine in `eta`.
pub fn build_g_two(k: u32, c: u32, misclass: Option<&MisclassModel>) -> Result<[SeriesTarget; 4]> {
    // theta = A eta + b
    let (a, b): ([[Rational; 3]; 3], [Rational; 3]) = match misclass {
        None => (
            std::array::from_fn(|i| std::array::from_fn(|j| if i == j { int(1) } else { int(0) })),
            std::array::from_fn(|_| int(0)),
        ),
        Some(m) => {
            let inv = inverse3(&m.phi()).ok_or_else(|| Error::NotIdentifiable("Phi is singular".into()))?;
            let pi00 = m.pi00();
            let b = std::array::from_fn(|i| -(0..3).map(|j| &inv[i][j] * &pi00[j]).sum::<Rational>());
            (inv, b)
        }
    };
    // 1 - w . theta = (1 - w . b) - (w A) . eta
    let radicand = |w: [i64; 3]| -> (Rational, Vec<Rational>) {
        let intercept = int(1) - (0..3).map(|i| int(w[i]) * &b[i]).sum::<Rational>();
        let linear = (0..3)
            .map(|j| -(0..3).map(|i| int(w[i]) * &a[i][j]).sum::<Rational>())
            .collect();
        (intercept, linear)
    };
    let xi = exact::ratio(1, k as i64);
    let denom = AffinePower::new(int(1), vec![int(-1); 3], int(-(c as i64)))?;
    let root = |w: [i64; 3]| -> Result<AffinePower> {
        let (intercept, linear) = radicand(w);
        AffinePower::new(intercept, linear, xi.clone())
    };
    let r00 = root([1, 1, 1])?;
    let r10 = root([0, 1, 1])?;
    let r01 = root([1, 0, 1])?;

    let term = |sign: i64, factor: Option<&AffinePower>| {
        let mut factors = vec![denom.clone()];
        factors.extend(factor.cloned());
        PowerProduct::new(Surd::rational(int(sign)), factors)
    };
    let target = |terms| SeriesTarget { dim: 3, terms };
    Ok([
        target(vec![term(1, Some(&r00))]),
        target(vec![term(1, Some(&r10)), term(-1, Some(&r00))]),
        target(vec![term(1, Some(&r01)), term(-1, Some(&r00))]),
        target(vec![
            term(1, None),
            term(-1, Some(&r10)),
            term(-1, Some(&r01)),
            term(1, Some(&r00)),
        ]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn affine(a0: Rational, a: Vec<Rational>, xi: Rational) -> AffinePower {
        AffinePower::new(a0, a, xi).unwrap()
    }

    #[test]
    fn geometric_series() {
        let e = expand_affine_power(&affine(int(1), vec![int(-1)], int(-1)), 5).unwrap();
        assert_eq!(e.scale.as_rational(), Some(&int(1)));
        for j in 0..=5 {
            assert_eq!(e.series.coeff(&[j]).unwrap(), int(1));
        }
        assert!(e.series.coeff(&[6]).is_err());
    }

    #[test]
    fn inverse_square_root() {
        // d/dt (1 - t)^(-1/2) at 0 = 1/2
        let e = expand_affine_power(&affine(int(1), vec![int(-1)], ratio(-1, 2)), 2).unwrap();
        assert_eq!(e.series.coeff(&[1]).unwrap(), ratio(1, 2));
        // second derivative = 3/4, Taylor coefficient 3/8
        assert_eq!(e.series.coeff(&[2]).unwrap(), ratio(3, 8));
    }

    #[test]
    fn polynomial_expansion() {
        let e = expand_affine_power(&affine(int(1), vec![int(-1), int(-1)], int(2)), 2).unwrap();
        assert_eq!(e.series.coeff(&[1, 1]).unwrap(), int(2));
        assert_eq!(e.series.coeff(&[2, 0]).unwrap(), int(1));
        assert_eq!(e.series.coeff(&[1, 0]).unwrap(), int(-2));
        assert_eq!(e.series.len(), 6);
    }

    #[test]
    fn intercept_scale_is_symbolic() {
        let e = expand_affine_power(&affine(ratio(1, 2), vec![int(1)], ratio(1, 2)), 3).unwrap();
        assert!(e.scale.as_rational().is_none());
        assert!((e.scale.to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
        // (1 + 2t)^(1/2): coefficient of t is 1
        assert_eq!(e.series.coeff(&[1]).unwrap(), int(1));
        assert!(AffinePower::new(int(0), vec![int(1)], int(2)).is_err());
    }

    #[test]
    fn product_of_half_powers() {
        let half = expand_affine_power(&affine(int(1), vec![int(-1)], ratio(-1, 2)), 8).unwrap();
        let sq = series_mul(&half.series, &half.series).unwrap();
        for j in 0..=8 {
            assert_eq!(sq.coeff(&[j]).unwrap(), int(1));
        }
        let one = TruncatedSeries::constant(1, 8, int(1));
        assert_eq!(series_mul(&half.series, &one).unwrap(), half.series);
    }

    #[test]
    fn mul_checks_dimension_and_truncates() {
        let a = TruncatedSeries::constant(2, 4, int(1));
        let b = TruncatedSeries::constant(3, 4, int(1));
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
        let c = TruncatedSeries::constant(2, 2, int(1));
        assert_eq!(a.mul(&c).unwrap().order(), 2);
    }

    #[test]
    fn taylor_estimator_small_cases() {
        // perfect test, c = 1, k = 2: g = (1 - t)^(-1/2)
        let g = build_g_one(2, 1, &int(1), &int(1)).unwrap().expand::<Rational>(4).unwrap();
        let s = g.as_series().unwrap();
        assert_eq!(taylor_estimator(&s, 1, &[1]).unwrap(), ratio(1, 2));
        assert_eq!(taylor_estimator(&s, 1, &[0]).unwrap(), int(1));
        // c = 2: g = (1 - t)^(-3/2), q-hat(1) = 3/4
        let g = build_g_one(2, 2, &int(1), &int(1)).unwrap().expand::<Rational>(4).unwrap();
        let s = g.as_series().unwrap();
        assert_eq!(taylor_estimator(&s, 2, &[1]).unwrap(), ratio(3, 4));
        assert!(matches!(
            taylor_estimator(&s, 2, &[5]),
            Err(Error::InsufficientOrder { required: 5, available: 4 })
        ));
    }

    #[test]
    fn perfect_one_disease_collapses_to_single_power() {
        let t = build_g_one(3, 2, &int(1), &int(1)).unwrap();
        assert_eq!(t.terms.len(), 1);
        assert_eq!(t.terms[0].factors.len(), 1);
        assert_eq!(t.terms[0].factors[0].exponent, ratio(1, 3) - int(2));
    }

    #[test]
    fn misclassified_zeroth_coefficient_is_h_at_zero() {
        let (pi0, pi1) = (ratio(9, 10), ratio(95, 100));
        let g = build_g_one(2, 1, &pi0, &pi1).unwrap().expand::<Rational>(3).unwrap();
        let q0 = g.estimate(1, &[0]).unwrap();
        assert!((q0 - (0.95f64 / 0.85).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn non_identifiable_or_decreasing_maps_are_rejected() {
        assert!(matches!(
            build_g_one(2, 1, &ratio(1, 2), &ratio(1, 2)),
            Err(Error::NotIdentifiable(_))
        ));
        assert!(build_g_one(2, 1, &ratio(1, 5), &ratio(1, 5)).is_err());
    }

    #[test]
    fn two_disease_p00_is_single_power() {
        let [g00, ..] = build_g_two(2, 3, None).unwrap();
        assert_eq!(g00.terms.len(), 1);
        assert_eq!(g00.terms[0].factors[0].exponent, ratio(1, 2) - int(3));
    }

    #[test]
    fn truncation_is_stable() {
        let t = build_g_one(4, 2, &ratio(98, 100), &ratio(95, 100)).unwrap();
        let lo = t.expand::<Rational>(6).unwrap();
        let hi = t.expand::<Rational>(10).unwrap();
        for ((ra, sa), (rb, sb)) in lo.parts().iter().zip(hi.parts()) {
            assert_eq!(ra, rb);
            assert_eq!(*sa, sb.truncate(6));
        }
    }
}
