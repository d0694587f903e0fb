//! Exact rational helpers.
//!
//! Every closed form in this crate has a rational part and, at most, a single
//! irrational factor of the form `r^(1/k)`. [`Surd`] keeps such factors
//! symbolic so the rational part can be compared exactly.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Converts a finite `f64` to the rational written by its shortest
/// round-trip decimal form, so `0.98` becomes `49/50` rather than the binary
/// fraction actually stored.
pub fn from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("{x} has no rational form")));
    }
    parse_decimal(&format!("{x}"))
}

/// Parses a plain decimal literal (`-12.034`, `5`, `.5`) exactly.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let bad = || Error::Domain(format!("`{text}` is not a decimal number"));
    let s = text.trim();
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let q = Rational::new(numer, denom);
    Ok(if neg { -q } else { q })
}

/// Exact `k`-th root of a nonnegative rational, when one exists.
pub fn nth_root_exact(q: &Rational, k: u32) -> Option<Rational> {
    if k == 0 || q.is_negative() {
        return None;
    }
    if k == 1 {
        return Some(q.clone());
    }
    let root = |n: &BigInt| {
        let r = n.nth_root(k);
        (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
    };
    Some(Rational::new(root(q.numer())?, root(q.denom())?))
}

/// Generalised binomial coefficient `C(alpha, n) = alpha (alpha-1) ... (alpha-n+1) / n!`.
pub fn binom_general(alpha: &Rational, n: usize) -> Rational {
    let mut acc = Rational::one();
    for j in 0..n {
        acc *= (alpha - int(j as i64)) / int(j as i64 + 1);
    }
    acc
}

pub fn binom(n: u64, r: u64) -> Rational {
    if r > n {
        return Rational::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for j in 0..r {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    Rational::from_integer(acc)
}

/// Integer power with a possibly negative exponent.
pub fn powi(q: &Rational, e: i64) -> Rational {
    let p = num_traits::pow(q.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// A product `coeff * prod(base_i ^ exp_i)` with positive rational bases and
/// rational exponents, kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    coeff: Rational,
    radicals: Vec<(Rational, Rational)>,
}

impl Surd {
    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn rational(coeff: Rational) -> Self {
        Surd {
            coeff,
            radicals: Vec::new(),
        }
    }

    /// `base ^ exponent`; folds into the rational coefficient when exact.
    pub fn power(base: Rational, exponent: Rational) -> Result<Self> {
        if !base.is_positive() {
            return Err(Error::Domain(format!(
                "base {base} of a fractional power must be positive"
            )));
        }
        let mut out = Surd::one();
        out.push(base, exponent);
        Ok(out)
    }

    fn push(&mut self, base: Rational, exponent: Rational) {
        if exponent.is_zero() || base.is_one() {
            return;
        }
        if let Some(slot) = self.radicals.iter_mut().find(|(b, _)| *b == base) {
            slot.1 += exponent;
        } else {
            self.radicals.push((base, exponent));
        }
        self.reduce();
    }

    fn reduce(&mut self) {
        let mut kept = Vec::with_capacity(self.radicals.len());
        for (base, exp) in self.radicals.drain(..) {
            if exp.is_zero() {
                continue;
            }
            let root = exp
                .denom()
                .to_u32()
                .and_then(|d| nth_root_exact(&base, d));
            match (root, exp.numer().to_i64()) {
                (Some(r), Some(n)) => self.coeff *= powi(&r, n),
                _ => kept.push((base, exp)),
            }
        }
        kept.sort();
        self.radicals = kept;
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    /// The exact value when no irrational factor remains.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.radicals.is_empty().then_some(&self.coeff)
    }

    /// Irrational part only, with unit coefficient.
    pub fn radical_part(&self) -> Surd {
        Surd {
            coeff: Rational::one(),
            radicals: self.radicals.clone(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Surd {
        Surd {
            coeff: &self.coeff * q,
            radicals: self.radicals.clone(),
        }
    }

    pub fn mul(&self, other: &Surd) -> Surd {
        let mut out = Surd::rational(&self.coeff * &other.coeff);
        out.radicals = self.radicals.clone();
        for (b, e) in &other.radicals {
            out.push(b.clone(), e.clone());
        }
        out
    }

    /// Integer power; `s.powi(k)` is rational whenever every exponent has a
    /// denominator dividing `k`.
    pub fn powi(&self, n: i64) -> Surd {
        let mut out = Surd::rational(powi(&self.coeff, n));
        for (b, e) in &self.radicals {
            out.push(b.clone(), e * int(n));
        }
        out
    }

    pub fn to_f64(&self) -> f64 {
        let log: f64 = self
            .radicals
            .iter()
            .map(|(b, e)| to_f64(e) * to_f64(b).ln())
            .sum();
        to_f64(&self.coeff) * log.exp()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (b, e) in &self.radicals {
            write!(f, " * ({b})^({e})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_conversion_is_exact() {
        assert_eq!(from_f64(0.98).unwrap(), ratio(49, 50));
        assert_eq!(from_f64(-0.125).unwrap(), ratio(-1, 8));
        assert_eq!(from_f64(3.0).unwrap(), int(3));
        assert_eq!(from_f64(1e-7).unwrap(), ratio(1, 10_000_000));
        assert!(from_f64(f64::NAN).is_err());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("abc").is_err());
        assert_eq!(parse_decimal(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn roots() {
        assert_eq!(nth_root_exact(&ratio(81, 100), 2), Some(ratio(9, 10)));
        assert_eq!(nth_root_exact(&ratio(1, 2), 2), None);
        assert_eq!(nth_root_exact(&ratio(-1, 8), 3), None);
        assert_eq!(nth_root_exact(&ratio(8, 27), 3), Some(ratio(2, 3)));
    }

    #[test]
    fn generalized_binomial() {
        // (1 - x)^(-1/2): coefficient of x is -1/2 * -1 = 1/2.
        assert_eq!(binom_general(&ratio(-1, 2), 1), ratio(-1, 2));
        assert_eq!(binom_general(&ratio(-1, 2), 2), ratio(3, 8));
        assert_eq!(binom_general(&int(5), 6), int(0));
        assert_eq!(binom(6, 2), int(15));
    }

    #[test]
    fn surd_folds_perfect_powers() {
        let s = Surd::power(ratio(9, 4), ratio(1, 2)).unwrap();
        assert_eq!(s.as_rational(), Some(&ratio(3, 2)));
        let t = Surd::power(int(2), ratio(1, 2)).unwrap();
        assert!(t.as_rational().is_none());
        let sq = t.mul(&t);
        assert_eq!(sq.as_rational(), Some(&int(2)));
        let cube = Surd::power(ratio(3, 5), ratio(1, 3)).unwrap().scale(&int(2));
        assert_eq!(cube.powi(3).as_rational(), Some(&ratio(24, 5)));
        assert_eq!(cube.powi(-3).as_rational(), Some(&ratio(5, 24)));
        assert!((t.to_f64() - 2f64.sqrt()).abs() < 1e-15);
        assert!(Surd::power(int(0), ratio(1, 2)).is_err());
    }
}
