//! Digamma function and the helpers the closed-form averages are built from.
//!
//! `digamma` shifts its argument upward with `psi(x) = psi(x + 1) - 1/x` until
//! it reaches [`ASYMPTOTIC_THRESHOLD`], then sums the Bernoulli-number
//! asymptotic series through `B_10`. At `x >= 16` the first omitted term is
//! below `1e-16`.
//!
//! The exact harmonic-sum forms at integer and half-integer arguments are
//! exposed separately (`digamma_int`, `digamma_half`) and serve as oracles.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Arguments below this are shifted up by the recurrence before the
/// asymptotic series is applied.
pub const ASYMPTOTIC_THRESHOLD: f64 = 16.0;

/// Number of Bernoulli terms used in the asymptotic series (`B_2 .. B_10`).
pub const ASYMPTOTIC_TERMS: usize = 5;

/// `B_2, B_4, ..., B_20` as (numerator, denominator).
const BERNOULLI_EVEN: [(i128, i128); 10] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
];

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

/// Even-index Bernoulli numbers `B_2, B_4, ..., B_2K` held as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliTable {
    values: Vec<Ratio<i128>>,
}

impl BernoulliTable {
    /// The built-in table through `B_20`.
    pub fn standard() -> Self {
        Self {
            values: BERNOULLI_EVEN.iter().map(|&(n, d)| Ratio::new(n, d)).collect(),
        }
    }

    /// Wraps arbitrary values; `values[k - 1]` is taken to be `B_2k`.
    /// Nothing is checked here, see [`BernoulliTable::validate`].
    pub fn from_values(values: Vec<Ratio<i128>>) -> Self {
        Self { values }
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `B_2k` for `1 <= k <= K`.
    pub fn get(&self, k: usize) -> Result<Ratio<i128>> {
        if k == 0 || k > self.values.len() {
            return Err(Error::Range {
                index: k,
                available: self.values.len(),
            });
        }
        Ok(self.values[k - 1])
    }

    /// Recomputes every entry from `sum_{j=0}^{n} C(n+1, j) B_j = 0` in exact
    /// arithmetic and reports the first entry that disagrees.
    pub fn validate(&self) -> Result<()> {
        let top = 2 * self.values.len();
        let mut seq: Vec<Ratio<i128>> = Vec::with_capacity(top + 1);
        seq.push(Ratio::one());
        for n in 1..=top {
            let mut acc = Ratio::<i128>::zero();
            let mut binom: i128 = 1; // C(n+1, 0)
            for (j, b) in seq.iter().enumerate() {
                acc += *b * binom;
                binom = binom * (n as i128 + 1 - j as i128) / (j as i128 + 1);
            }
            seq.push(-acc / Ratio::from_integer(n as i128 + 1));
        }
        for (k, found) in self.values.iter().enumerate() {
            let index = 2 * (k + 1);
            let expected = seq[index];
            if *found != expected {
                return Err(Error::BernoulliRecurrence {
                    index,
                    expected: expected.to_string(),
                    found: found.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// `B_2k` from the built-in table.
pub fn bernoulli_even(k: usize) -> Result<Ratio<i128>> {
    if k == 0 || k > BERNOULLI_EVEN.len() {
        return Err(Error::Range {
            index: k,
            available: BERNOULLI_EVEN.len(),
        });
    }
    let (n, d) = BERNOULLI_EVEN[k - 1];
    Ok(Ratio::new(n, d))
}

fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let r = r.abs();
    sign * r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn digamma_asymptotic(x: f64, bernoulli: impl Fn(usize) -> Ratio<i128>) -> f64 {
    let w = 1.0 / (x * x);
    // Horner in 1/x^2 from the highest retained term down.
    let mut series = 0.0;
    for k in (1..=ASYMPTOTIC_TERMS).rev() {
        let coeff = ratio_to_f64(bernoulli(k)) / (2 * k) as f64;
        series = (series + coeff) * w;
    }
    x.ln() - 0.5 / x - series
}

fn digamma_impl(x: f64, bernoulli: impl Fn(usize) -> Ratio<i128>) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain("digamma", x, "requires x > 0"));
    }
    if x.is_infinite() {
        return Err(Error::domain("digamma", x, "requires finite x"));
    }
    let mut shift = CompensatedSum::new();
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        shift.add(1.0 / z);
        z += 1.0;
    }
    Ok(digamma_asymptotic(z, bernoulli) - shift.value())
}

/// Digamma function `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    digamma_impl(x, |k| {
        let (n, d) = BERNOULLI_EVEN[k - 1];
        Ratio::new(n, d)
    })
}

/// [`digamma`] with the series coefficients taken from `table`, which must
/// hold at least [`ASYMPTOTIC_TERMS`] entries.
pub fn digamma_with_table(x: f64, table: &BernoulliTable) -> Result<f64> {
    if table.order() < ASYMPTOTIC_TERMS {
        return Err(Error::Range {
            index: ASYMPTOTIC_TERMS,
            available: table.order(),
        });
    }
    digamma_impl(x, |k| table.values[k - 1])
}

/// `psi(l) = -gamma + sum_{k=1}^{l-1} 1/k`.
pub fn digamma_int(l: u64) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("digamma_int", 0.0, "pole at 0"));
    }
    let mut s: CompensatedSum = (1..l).map(|k| 1.0 / k as f64).collect();
    s.add(-EULER_GAMMA);
    Ok(s.value())
}

/// `psi(l + 1/2) = -gamma - 2 ln 2 + 2 sum_{k=0}^{l-1} 1/(2k + 1)`.
pub fn digamma_half(l: u64) -> f64 {
    let mut s: CompensatedSum = (0..l).map(|k| 2.0 / (2 * k + 1) as f64).collect();
    s.add(-EULER_GAMMA);
    s.add(-2.0 * std::f64::consts::LN_2);
    s.value()
}

/// `alpha * psi(alpha)`, extended to `alpha = 0` by its limit `-1`.
pub fn weighted_digamma(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::domain("weighted_digamma", alpha, "requires alpha >= 0"));
    }
    if alpha == 0.0 {
        return Ok(-1.0);
    }
    Ok(alpha * digamma(alpha)?)
}

/// `alpha * (psi(alpha) + 2 psi(alpha + 1/2))`, extended to `alpha = 0` by
/// its limit `-1`.
pub fn weighted_digamma_triple(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::domain("weighted_digamma_triple", alpha, "requires alpha >= 0"));
    }
    if alpha == 0.0 {
        return Ok(-1.0);
    }
    Ok(alpha * (digamma(alpha)? + 2.0 * digamma(alpha + 0.5)?))
}

/// `prefactor * ln(arg)`, taken as 0 whenever the prefactor vanishes.
///
/// All `(c - 1) ln(...)` style terms of the large-dimension limits route
/// through here so the `c = 1` endpoint is handled in one place.
pub fn scaled_log(prefactor: f64, arg: f64) -> f64 {
    if prefactor == 0.0 {
        0.0
    } else {
        prefactor * arg.ln()
    }
}
