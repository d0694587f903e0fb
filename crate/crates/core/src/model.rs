//! Prevalence models and the maps between prevalence space and the
//! probabilities that pooled tests observe.
//!
//! For one trait with pool size `k`, a pool is truly positive with
//! probability `1 - q^k` (`q = 1 - p`); with specificity `pi0` and
//! sensitivity `pi1` it tests positive with probability
//! `theta = pi1 - nu * q^k`, `nu = pi0 + pi1 - 1`.
//!
//! For two traits the joint cell probabilities `(p00, p10, p01, p11)` map to
//! pooled cell probabilities `theta`, and a 4x4 misclassification matrix maps
//! those to observed cell probabilities `eta = pi00 + Phi * theta`.
//!
//! Every map has an `f64` form and an exact form over [`Rational`].

use log::warn;
use num_traits::{Num, One, Signed, Zero};

use crate::exact::{self, int, Rational, Surd};
use crate::{Error, Result};

/// Cell order used for every 4-vector: `00, 10, 01, 11`, where the first
/// digit is trait 1 and the second is trait 2.
pub const CELL_NAMES: [&str; 4] = ["00", "10", "01", "11"];

/// Values attached to the four joint cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Cells<T> {
    pub c00: T,
    pub c10: T,
    pub c01: T,
    pub c11: T,
}

impl<T> Cells<T> {
    pub fn from_array([c00, c10, c01, c11]: [T; 4]) -> Self {
        Cells { c00, c10, c01, c11 }
    }

    pub fn into_array(self) -> [T; 4] {
        [self.c00, self.c10, self.c01, self.c11]
    }

    pub fn as_array(&self) -> [&T; 4] {
        [&self.c00, &self.c10, &self.c01, &self.c11]
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> Cells<U> {
        Cells {
            c00: f(self.c00),
            c10: f(self.c10),
            c01: f(self.c01),
            c11: f(self.c11),
        }
    }
}

impl<T: Clone> Cells<T> {
    /// The three non-reference cells `(10, 01, 11)`.
    pub fn observed(&self) -> [T; 3] {
        [self.c10.clone(), self.c01.clone(), self.c11.clone()]
    }
}

impl Cells<f64> {
    pub fn sum(&self) -> f64 {
        self.c00 + self.c10 + self.c01 + self.c11
    }
}

fn check_unit_open(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, x, "a value in (0, 1)"))
    }
}

fn check_unit_half_open(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, x, "a value in (0, 1]"))
    }
}

fn check_positive(name: &'static str, x: u32) -> Result<()> {
    if x >= 1 {
        Ok(())
    } else {
        Err(Error::invalid(name, x, "an integer >= 1"))
    }
}

/// Specificity `pi0` and sensitivity `pi1` of a pooled test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestAccuracy {
    pi0: f64,
    pi1: f64,
}

impl TestAccuracy {
    pub const PERFECT: TestAccuracy = TestAccuracy { pi0: 1.0, pi1: 1.0 };

    /// Rejects `nu = pi0 + pi1 - 1 = 0`; warns when either value is at most
    /// one half, where the test is no better than guessing.
    pub fn new(pi0: f64, pi1: f64) -> Result<Self> {
        check_unit_half_open("pi0", pi0)?;
        check_unit_half_open("pi1", pi1)?;
        if pi0 + pi1 - 1.0 == 0.0 {
            return Err(Error::NotIdentifiable(format!(
                "pi0 + pi1 - 1 = 0 for pi0 = {pi0}, pi1 = {pi1}"
            )));
        }
        if pi0 <= 0.5 || pi1 <= 0.5 {
            warn!("test accuracy pi0 = {pi0}, pi1 = {pi1} is not better than random guessing");
        }
        Ok(TestAccuracy { pi0, pi1 })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn nu(&self) -> f64 {
        self.pi0 + self.pi1 - 1.0
    }

    pub fn is_perfect(&self) -> bool {
        self.pi0 == 1.0 && self.pi1 == 1.0
    }

    /// `(pi0, pi1)` as the rationals their decimal forms denote.
    pub fn exact(&self) -> (Rational, Rational) {
        (
            exact::from_f64(self.pi0).expect("finite"),
            exact::from_f64(self.pi1).expect("finite"),
        )
    }
}

/// One trait: prevalence `p`, pool size `k`, stop count `c` and test accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneDiseaseModel {
    p: f64,
    k: u32,
    c: u32,
    accuracy: TestAccuracy,
}

impl OneDiseaseModel {
    pub fn new(p: f64, k: u32, c: u32, accuracy: TestAccuracy) -> Result<Self> {
        check_unit_open("p", p)?;
        check_positive("k", k)?;
        check_positive("c", c)?;
        Ok(OneDiseaseModel { p, k, c, accuracy })
    }

    pub fn perfect(p: f64, k: u32, c: u32) -> Result<Self> {
        Self::new(p, k, c, TestAccuracy::PERFECT)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn accuracy(&self) -> TestAccuracy {
        self.accuracy
    }

    /// Probability that a pool tests positive.
    pub fn theta(&self) -> f64 {
        theta_one(self.p, self.k, &self.accuracy)
    }
}

/// `theta = pi1 - nu * (1 - p)^k`.
pub fn theta_one(p: f64, k: u32, accuracy: &TestAccuracy) -> f64 {
    accuracy.pi1 - accuracy.nu() * (1.0 - p).powi(k as i32)
}

pub fn theta_one_exact(p: &Rational, k: u32, pi0: &Rational, pi1: &Rational) -> Rational {
    let nu = pi0 + pi1 - int(1);
    pi1 - nu * exact::powi(&(int(1) - p), k as i64)
}

/// Inverse of [`theta_one`]: `q = ((pi1 - theta) / nu)^(1/k)`.
pub fn h_one(theta: f64, k: u32, accuracy: &TestAccuracy) -> Result<f64> {
    let radicand = (accuracy.pi1 - theta) / accuracy.nu();
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "theta = {theta} is outside the range reachable for pi0 = {}, pi1 = {}",
            accuracy.pi0, accuracy.pi1
        )));
    }
    Ok(radicand.powf(1.0 / k as f64))
}

/// Exact inverse, kept symbolic as `((pi1 - theta) / nu)^(1/k)`.
pub fn h_one_exact(theta: &Rational, k: u32, pi0: &Rational, pi1: &Rational) -> Result<Surd> {
    let nu = pi0 + pi1 - int(1);
    if nu.is_zero() {
        return Err(Error::NotIdentifiable("pi0 + pi1 - 1 = 0".into()));
    }
    let radicand = (pi1 - theta) / nu;
    if !radicand.is_positive() {
        return Err(Error::Domain(format!(
            "theta = {theta} is outside the range reachable for pi0 = {pi0}, pi1 = {pi1}"
        )));
    }
    Surd::power(radicand, exact::ratio(1, k as i64))
}

/// Two traits: joint cell prevalences, pool size, stop count and an optional
/// misclassification model.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoDiseaseModel {
    p10: f64,
    p01: f64,
    p11: f64,
    k: u32,
    c: u32,
    misclass: Option<MisclassModel>,
}

impl TwoDiseaseModel {
    pub fn new(p: [f64; 3], k: u32, c: u32, misclass: Option<MisclassModel>) -> Result<Self> {
        let [p10, p01, p11] = p;
        check_unit_open("p10", p10)?;
        check_unit_open("p01", p01)?;
        check_unit_open("p11", p11)?;
        check_unit_open("p00", 1.0 - p10 - p01 - p11)?;
        check_positive("k", k)?;
        check_positive("c", c)?;
        Ok(TwoDiseaseModel {
            p10,
            p01,
            p11,
            k,
            c,
            misclass,
        })
    }

    pub fn p(&self) -> Cells<f64> {
        Cells {
            c00: 1.0 - self.p10 - self.p01 - self.p11,
            c10: self.p10,
            c01: self.p01,
            c11: self.p11,
        }
    }

    /// Marginal prevalences `(p10 + p11, p01 + p11)`.
    pub fn marginals(&self) -> (f64, f64) {
        (self.p10 + self.p11, self.p01 + self.p11)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn misclass(&self) -> Option<&MisclassModel> {
        self.misclass.as_ref()
    }

    pub fn theta(&self) -> Cells<f64> {
        theta_two([self.p10, self.p01, self.p11], self.k)
    }

    /// Observed cell probabilities; the pooled `theta` when no
    /// misclassification model is attached.
    pub fn eta(&self) -> Result<Cells<f64>> {
        match &self.misclass {
            Some(m) => eta_two(m, &self.theta()),
            None => Ok(self.theta()),
        }
    }

    pub fn p_exact(&self) -> [Rational; 3] {
        [self.p10, self.p01, self.p11].map(|x| exact::from_f64(x).expect("finite"))
    }
}

/// Pooled cell probabilities:
/// `theta10 = (p00 + p10)^k - p00^k`, `theta01 = (p00 + p01)^k - p00^k`,
/// `theta00 = p00^k`, `theta11` the complement.
pub fn theta_two(p: [f64; 3], k: u32) -> Cells<f64> {
    let [p10, p01, p11] = p;
    let p00 = 1.0 - p10 - p01 - p11;
    let k = k as i32;
    let t00 = p00.powi(k);
    let a = (p00 + p10).powi(k);
    let b = (p00 + p01).powi(k);
    Cells {
        c00: t00,
        c10: a - t00,
        c01: b - t00,
        c11: 1.0 - a - b + t00,
    }
}

pub fn theta_two_exact(p: &[Rational; 3], k: u32) -> Cells<Rational> {
    let [p10, p01, p11] = p;
    let p00 = int(1) - p10 - p01 - p11;
    let k = k as i64;
    let t00 = exact::powi(&p00, k);
    let a = exact::powi(&(&p00 + p10), k);
    let b = exact::powi(&(&p00 + p01), k);
    Cells {
        c10: &a - &t00,
        c01: &b - &t00,
        c11: int(1) - &a - &b + &t00,
        c00: t00,
    }
}

/// Inverse of [`theta_two`]. `p11` is returned as the complement of the
/// other three cells.
pub fn h_two(theta: [f64; 3], k: u32) -> Result<Cells<f64>> {
    let [r00, r10, r01] = radicands_two(theta);
    for (name, r) in [("1 - t10 - t01 - t11", r00), ("1 - t01 - t11", r10), ("1 - t10 - t11", r01)] {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radicand {name} = {r} is not positive")));
        }
    }
    let xi = 1.0 / k as f64;
    let p00 = r00.powf(xi);
    let p10 = r10.powf(xi) - p00;
    let p01 = r01.powf(xi) - p00;
    Ok(Cells {
        c00: p00,
        c10: p10,
        c01: p01,
        c11: 1.0 - p00 - p10 - p01,
    })
}

/// Exact inverse when every root is rational; `Ok(None)` otherwise.
pub fn h_two_exact(theta: &[Rational; 3], k: u32) -> Result<Option<Cells<Rational>>> {
    let [t10, t01, t11] = theta;
    let r00 = int(1) - t10 - t01 - t11;
    let r10 = int(1) - t01 - t11;
    let r01 = int(1) - t10 - t11;
    if !(r00.is_positive() && r10.is_positive() && r01.is_positive()) {
        return Err(Error::Domain("nonpositive radicand".into()));
    }
    let roots = [r00, r10, r01].map(|r| exact::nth_root_exact(&r, k));
    let [Some(p00), Some(a), Some(b)] = roots else {
        return Ok(None);
    };
    let p10 = a - &p00;
    let p01 = b - &p00;
    Ok(Some(Cells {
        c11: int(1) - &p00 - &p10 - &p01,
        c00: p00,
        c10: p10,
        c01: p01,
    }))
}

pub(crate) fn radicands_two(theta: [f64; 3]) -> [f64; 3] {
    let [t10, t01, t11] = theta;
    [1.0 - t10 - t01 - t11, 1.0 - t01 - t11, 1.0 - t10 - t11]
}

/// Marginal error rates for two traits tested jointly with independent errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndepErrorParams {
    pub pi0_1: f64,
    pub pi1_1: f64,
    pub pi0_2: f64,
    pub pi1_2: f64,
}

impl IndepErrorParams {
    pub fn new(pi0_1: f64, pi1_1: f64, pi0_2: f64, pi1_2: f64) -> Result<Self> {
        check_unit_half_open("pi0_1", pi0_1)?;
        check_unit_half_open("pi1_1", pi1_1)?;
        check_unit_half_open("pi0_2", pi0_2)?;
        check_unit_half_open("pi1_2", pi1_2)?;
        Ok(IndepErrorParams {
            pi0_1,
            pi1_1,
            pi0_2,
            pi1_2,
        })
    }

    pub fn nu1(&self) -> f64 {
        self.pi0_1 + self.pi1_1 - 1.0
    }

    pub fn nu2(&self) -> f64 {
        self.pi0_2 + self.pi1_2 - 1.0
    }
}

/// Conditional probabilities `cond[a][b] = P(observe a | true b)` over the
/// cells `00, 10, 01, 11`. Columns (fixed `b`) sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MisclassModel {
    cond: [[Rational; 4]; 4],
    cond_f64: [[f64; 4]; 4],
}

impl MisclassModel {
    /// Builds from decimal `f64` entries, each read as the rational its
    /// shortest decimal form denotes.
    pub fn new(cond: [[f64; 4]; 4]) -> Result<Self> {
        let mut exact_cond: [[Rational; 4]; 4] = Default::default();
        for a in 0..4 {
            for b in 0..4 {
                exact_cond[a][b] = exact::from_f64(cond[a][b])?;
            }
        }
        Self::from_exact(exact_cond)
    }

    pub fn from_exact(cond: [[Rational; 4]; 4]) -> Result<Self> {
        let tol = exact::ratio(1, 1_000_000_000_000);
        for b in 0..4 {
            let mut total = Rational::zero();
            for row in &cond {
                let v = &row[b];
                if v.is_negative() || *v > int(1) {
                    return Err(Error::invalid("misclassification entry", v, "a probability in [0, 1]"));
                }
                total += v;
            }
            if (total.clone() - int(1)).abs() > tol {
                return Err(Error::invalid(
                    "misclassification column sum",
                    total,
                    "columns summing to 1 within 1e-12",
                ));
            }
        }
        let cond_f64 = cond.clone().map(|row| row.map(|v| exact::to_f64(&v)));
        Ok(MisclassModel { cond, cond_f64 })
    }

    pub fn identity() -> Self {
        let mut cond: [[Rational; 4]; 4] = Default::default();
        for (a, row) in cond.iter_mut().enumerate() {
            row[a] = Rational::one();
        }
        Self::from_exact(cond).expect("identity is stochastic")
    }

    pub fn cond(&self) -> &[[Rational; 4]; 4] {
        &self.cond
    }

    pub fn cond_f64(&self) -> &[[f64; 4]; 4] {
        &self.cond_f64
    }

    /// `(pi_{10|00}, pi_{01|00}, pi_{11|00})`.
    pub fn pi00(&self) -> [Rational; 3] {
        [1, 2, 3].map(|a| self.cond[a][0].clone())
    }

    /// `Phi[a][b] = pi_{a|b} - pi_{a|00}` for `a, b` in `10, 01, 11`.
    pub fn phi(&self) -> [[Rational; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| &self.cond[i + 1][j + 1] - &self.cond[i + 1][0]))
    }

    pub fn pi00_f64(&self) -> [f64; 3] {
        [1, 2, 3].map(|a| self.cond_f64[a][0])
    }

    pub fn phi_f64(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.cond_f64[i + 1][j + 1] - self.cond_f64[i + 1][0]))
    }
}

/// Joint misclassification built from marginal error rates assuming the two
/// traits are misread independently.
pub fn indep_misclass(params: &IndepErrorParams) -> MisclassModel {
    let q = |x: f64| exact::from_f64(x).expect("finite");
    // marginal[trait][observed][true]
    let marginal = |spec: f64, sens: f64| {
        let (spec, sens) = (q(spec), q(sens));
        [[spec.clone(), int(1) - &sens], [int(1) - spec, sens]]
    };
    let m1 = marginal(params.pi0_1, params.pi1_1);
    let m2 = marginal(params.pi0_2, params.pi1_2);
    // cell index -> (trait 1 status, trait 2 status)
    let bits = |cell: usize| ((cell == 1 || cell == 3) as usize, (cell == 2 || cell == 3) as usize);
    let cond = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let (a1, a2) = bits(a);
            let (b1, b2) = bits(b);
            &m1[a1][b1] * &m2[a2][b2]
        })
    });
    MisclassModel::from_exact(cond).expect("products of stochastic columns are stochastic")
}

/// `eta_a = sum_b pi_{a|b} theta_b` over all four cells.
pub fn eta_mixture<T: Num + Clone>(cond: &[[T; 4]; 4], theta: &Cells<T>) -> Cells<T> {
    let th = [&theta.c00, &theta.c10, &theta.c01, &theta.c11];
    Cells::from_array(std::array::from_fn(|a| {
        (0..4).fold(T::zero(), |acc, b| acc + cond[a][b].clone() * th[b].clone())
    }))
}

/// `eta = pi00 + Phi * theta` on the three non-reference cells, with `eta00`
/// as the complement.
pub fn eta_affine<T: Num + Clone>(pi00: &[T; 3], phi: &[[T; 3]; 3], theta: &[T; 3]) -> Cells<T> {
    let eta: [T; 3] = std::array::from_fn(|i| {
        (0..3).fold(pi00[i].clone(), |acc, j| acc + phi[i][j].clone() * theta[j].clone())
    });
    let e00 = T::one() - eta[0].clone() - eta[1].clone() - eta[2].clone();
    let [e10, e01, e11] = eta;
    Cells {
        c00: e00,
        c10: e10,
        c01: e01,
        c11: e11,
    }
}

/// Observed cell probabilities under misclassification, computed as the
/// four-term mixture and cross-checked against the affine form.
pub fn eta_two(misclass: &MisclassModel, theta: &Cells<f64>) -> Result<Cells<f64>> {
    let mixture = eta_mixture(misclass.cond_f64(), theta);
    let affine = eta_affine(&misclass.pi00_f64(), &misclass.phi_f64(), &theta.observed());
    let gap = mixture
        .as_array()
        .iter()
        .zip(affine.as_array())
        .map(|(a, b)| (**a - *b).abs())
        .fold(0.0, f64::max);
    if gap > 1e-12 {
        return Err(Error::Domain(format!(
            "mixture and affine forms of eta disagree by {gap:e}"
        )));
    }
    Ok(mixture)
}

pub fn det3<T: Num + Clone>(m: &[[T; 3]; 3]) -> T {
    let e = |i: usize, j: usize| m[i][j].clone();
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

/// Exact inverse by the adjugate; `None` when singular.
pub fn inverse3(m: &[[Rational; 3]; 3]) -> Option<[[Rational; 3]; 3]> {
    let det = det3(m);
    if det.is_zero() {
        return None;
    }
    let e = |i: usize, j: usize| &m[i % 3][j % 3];
    Some(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            // cofactor of (j, i), using cyclic indexing for the signs
            let cof = e(j + 1, i + 1) * e(j + 2, i + 2) - e(j + 1, i + 2) * e(j + 2, i + 1);
            cof / &det
        })
    }))
}

/// Result of [`identifiable`].
#[derive(Clone, Debug, PartialEq)]
pub struct Identifiability {
    pub identifiable: bool,
    pub det: f64,
    pub det_exact: Rational,
}

/// Relative threshold below which a float determinant of `Phi` counts as zero.
pub const DET_TOLERANCE: f64 = 1e-10;

/// `|Phi| != 0`. The exact determinant decides; a determinant that is exactly
/// nonzero but below `1e-10 * scale^3` in floating point (scale = largest
/// `|Phi|` entry) is also reported as not identifiable.
pub fn identifiable(misclass: &MisclassModel) -> Identifiability {
    let det_exact = det3(&misclass.phi());
    let det = exact::to_f64(&det_exact);
    let scale = misclass
        .phi_f64()
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let identifiable = !det_exact.is_zero() && det.abs() >= DET_TOLERANCE * scale.powi(3);
    Identifiability {
        identifiable,
        det,
        det_exact,
    }
}
