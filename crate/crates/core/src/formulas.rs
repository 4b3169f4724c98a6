//! Exact averages of entanglement entropy, log-determinant and relative
//! entropy for Hilbert–Schmidt (HS) and Bures–Hall (BH) states, plus the
//! published large-dimension limits.
//!
//! Every closed form is also reachable through the composition
//! `E[D(rho || sigma)] = -E[S(rho)] - E[ln det sigma] / m`, which holds
//! because the Haar average of `tr(rho ln sigma)` factorizes to
//! `tr(ln sigma) / m`. [`composed_relative_entropy`] evaluates that route so
//! the two can be checked against each other.
//!
//! Dimensions `n1`, `n2` are real: the averages are valid for any real
//! `alpha = n - m >= 0`, even though only integer `n` can be simulated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::EnsembleKind;
use crate::error::{Error, Result};
use crate::specfun::{digamma as psi, scaled_log, weighted_digamma, weighted_digamma_triple};

/// Ordered pair `(rho ensemble, sigma ensemble)`, written `rho-sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pair {
    pub rho: EnsembleKind,
    pub sigma: EnsembleKind,
}

impl Pair {
    pub const HS_HS: Pair = Pair::new(EnsembleKind::HilbertSchmidt, EnsembleKind::HilbertSchmidt);
    pub const BH_BH: Pair = Pair::new(EnsembleKind::BuresHall, EnsembleKind::BuresHall);
    pub const BH_HS: Pair = Pair::new(EnsembleKind::BuresHall, EnsembleKind::HilbertSchmidt);
    pub const HS_BH: Pair = Pair::new(EnsembleKind::HilbertSchmidt, EnsembleKind::BuresHall);
    pub const ALL: [Pair; 4] = [Pair::HS_HS, Pair::BH_BH, Pair::BH_HS, Pair::HS_BH];

    pub const fn new(rho: EnsembleKind, sigma: EnsembleKind) -> Self {
        Self { rho, sigma }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.rho, self.sigma)
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rho, sigma) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidConfig(format!("pair '{s}' must look like hs-hs, bh-bh, bh-hs or hs-bh")))?;
        Ok(Pair::new(rho.parse()?, sigma.parse()?))
    }
}

impl TryFrom<String> for Pair {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Pair> for String {
    fn from(p: Pair) -> String {
        p.to_string()
    }
}

/// Arguments of an exact average: dimension `m` and real `n1, n2 >= m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairQuery {
    pub pair: Pair,
    pub m: usize,
    pub n1: f64,
    pub n2: f64,
}

impl PairQuery {
    pub fn new(pair: Pair, m: usize, n1: f64, n2: f64) -> Result<Self> {
        check_dims("PairQuery", m, n1)?;
        check_dims("PairQuery", m, n2)?;
        Ok(Self { pair, m, n1, n2 })
    }

    pub fn alpha1(&self) -> f64 {
        self.n1 - self.m as f64
    }

    pub fn alpha2(&self) -> f64 {
        self.n2 - self.m as f64
    }
}

/// Arguments of a large-dimension limit, `c_i = n_i / m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitQuery {
    pub pair: Pair,
    pub c1: f64,
    pub c2: f64,
}

impl LimitQuery {
    pub fn new(pair: Pair, c1: f64, c2: f64) -> Result<Self> {
        for c in [c1, c2] {
            if !(c >= 1.0) || !c.is_finite() {
                return Err(Error::domain("LimitQuery", c, "requires c >= 1"));
            }
        }
        Ok(Self { pair, c1, c2 })
    }
}

fn check_dims(func: &'static str, m: usize, n: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::domain(func, 0.0, "requires m >= 1"));
    }
    if !(n >= m as f64) || !n.is_finite() {
        return Err(Error::domain(func, n, "requires n >= m"));
    }
    Ok(())
}

/// `E[-tr rho ln rho]` over HS states: `psi(mn + 1) - psi(n) - (m + 1)/(2n)`.
pub fn mean_entropy_hs(m: usize, n: f64) -> Result<f64> {
    check_dims("mean_entropy_hs", m, n)?;
    let mf = m as f64;
    Ok(psi(mf * n + 1.0)? - psi(n)? - (mf + 1.0) / (2.0 * n))
}

/// `E[-tr rho ln rho]` over BH states: `psi(mn - m^2/2 + 1) - psi(n + 1/2)`.
pub fn mean_entropy_bh(m: usize, n: f64) -> Result<f64> {
    check_dims("mean_entropy_bh", m, n)?;
    let mf = m as f64;
    Ok(psi(mf * n - mf * mf / 2.0 + 1.0)? - psi(n + 0.5)?)
}

/// `E[ln det sigma]` over HS states:
/// `-m psi(mn) + n psi(n) - alpha psi(alpha) - m`.
pub fn mean_logdet_hs(m: usize, n: f64) -> Result<f64> {
    check_dims("mean_logdet_hs", m, n)?;
    let mf = m as f64;
    let alpha = n - mf;
    Ok(-mf * psi(mf * n)? + n * psi(n)? - weighted_digamma(alpha)? - mf)
}

/// `E[ln det sigma]` over BH states:
/// `-m psi(mn - m^2/2) - n psi(n) - alpha (psi(alpha) + 2 psi(alpha + 1/2))
///  + (2n - m)(psi(n - m/2) + psi(n - m/2 + 1/2)) - m`.
pub fn mean_logdet_bh(m: usize, n: f64) -> Result<f64> {
    check_dims("mean_logdet_bh", m, n)?;
    let mf = m as f64;
    let alpha = n - mf;
    let shifted = mf * n - mf * mf / 2.0;
    if !(shifted > 0.0) {
        return Err(Error::domain("mean_logdet_bh", shifted, "requires mn - m^2/2 > 0"));
    }
    let h = n - mf / 2.0;
    Ok(
        -mf * psi(shifted)? - n * psi(n)? - weighted_digamma_triple(alpha)?
            + (2.0 * n - mf) * (psi(h)? + psi(h + 0.5)?)
            - mf,
    )
}

pub fn mean_entropy(kind: EnsembleKind, m: usize, n: f64) -> Result<f64> {
    match kind {
        EnsembleKind::HilbertSchmidt => mean_entropy_hs(m, n),
        EnsembleKind::BuresHall => mean_entropy_bh(m, n),
    }
}

pub fn mean_logdet(kind: EnsembleKind, m: usize, n: f64) -> Result<f64> {
    match kind {
        EnsembleKind::HilbertSchmidt => mean_logdet_hs(m, n),
        EnsembleKind::BuresHall => mean_logdet_bh(m, n),
    }
}

/// `-E[S(rho)] - E[ln det sigma] / m`.
pub fn composed_relative_entropy(q: &PairQuery) -> Result<f64> {
    let entropy = mean_entropy(q.pair.rho, q.m, q.n1)?;
    let logdet = mean_logdet(q.pair.sigma, q.m, q.n2)?;
    Ok(-entropy - logdet / q.m as f64)
}

/// The `(n2 / m) psi(n2) - ...` block shared by the two BH-sigma forms.
fn bh_sigma_terms(mf: f64, n2: f64) -> Result<f64> {
    let alpha2 = n2 - mf;
    let h = n2 - mf / 2.0;
    Ok(
        psi(mf * n2 - mf * mf / 2.0)? + n2 / mf * psi(n2)? - (2.0 * n2 - mf) / mf * (psi(h)? + psi(h + 0.5)?)
            + weighted_digamma_triple(alpha2)? / mf,
    )
}

fn hs_sigma_terms(mf: f64, n2: f64) -> Result<f64> {
    let alpha2 = n2 - mf;
    Ok(psi(mf * n2)? - (n2 * psi(n2)? - weighted_digamma(alpha2)?) / mf)
}

/// Exact `E[D(rho || sigma)]` for independent `rho`, `sigma`.
pub fn avg_relative_entropy(q: &PairQuery) -> Result<f64> {
    let q = PairQuery::new(q.pair, q.m, q.n1, q.n2)?;
    let mf = q.m as f64;
    let (n1, n2) = (q.n1, q.n2);
    let rho_terms = match q.pair.rho {
        EnsembleKind::HilbertSchmidt => -psi(mf * n1 + 1.0)? + psi(n1)? + (mf + 2.0 * n1 + 1.0) / (2.0 * n1),
        EnsembleKind::BuresHall => -psi(mf * n1 - mf * mf / 2.0 + 1.0)? + psi(n1 + 0.5)? + 1.0,
    };
    let sigma_terms = match q.pair.sigma {
        EnsembleKind::HilbertSchmidt => hs_sigma_terms(mf, n2)?,
        EnsembleKind::BuresHall => bh_sigma_terms(mf, n2)?,
    };
    Ok(sigma_terms + rho_terms)
}

/// O(1) limit of `E[D(rho || sigma)]` as `m, n_i -> inf` with
/// `n_i / m = c_i` fixed. Terms whose prefactor vanishes at `c = 1` are 0.
pub fn limit_avg_relative_entropy(q: &LimitQuery) -> Result<f64> {
    let q = LimitQuery::new(q.pair, q.c1, q.c2)?;
    let (c1, c2) = (q.c1, q.c2);
    match q.pair {
        p if p == Pair::HS_HS => Ok(scaled_log(c2 - 1.0, 1.0 - 1.0 / c2) + 1.0 / (2.0 * c1) + 1.0),
        p if p == Pair::BH_BH => Ok(
            c1.ln() + c2 * c2.ln() - (c1 - 0.5).ln() - (4.0 * c2 - 3.0) * (c2 - 0.5).ln()
                + scaled_log(3.0 * (c2 - 1.0), c2 - 1.0)
                + 1.0,
        ),
        p if p == Pair::BH_HS => {
            Ok(c1.ln() - scaled_log(c2 - 1.0, c2) - (c1 - 0.5).ln() + scaled_log(c2 - 1.0, c2 - 1.0) + 1.0)
        }
        p => Err(Error::UnsupportedLimit(p.to_string())),
    }
}

/// Whether a published limit exists for the pairing.
pub fn has_limit(pair: Pair) -> bool {
    pair != Pair::HS_BH
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const ALPHAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.0];

    fn q(pair: Pair, m: usize, n1: f64, n2: f64) -> PairQuery {
        PairQuery::new(pair, m, n1, n2).unwrap()
    }

    /// 30-digit reference values computed with mpmath's digamma.
    const REFERENCE: &[(&str, usize, f64, f64, f64)] = &[
        ("hs-hs", 2, 3.0, 4.0, 0.47619047619047619048),
        ("hs-hs", 3, 3.5, 5.0, 0.7223528535448040092),
        ("hs-hs", 4, 4.0, 4.0, 1.3125),
        ("hs-hs", 4, 6.5, 4.0, 1.1352183235974649829),
        ("hs-hs", 5, 5.0, 7.5, 0.90976559412965628775),
        ("hs-hs", 8, 8.0, 8.0, 1.421875),
        ("hs-hs", 8, 16.0, 24.0, 0.43201996354472393792),
        ("bh-bh", 2, 2.0, 2.0, 1.6666666666666666667),
        ("bh-bh", 2, 3.0, 4.0, 0.56666666666666666667),
        ("bh-bh", 3, 3.5, 5.0, 0.91095550476355429916),
        ("bh-bh", 4, 6.5, 4.0, 1.8507100924473866522),
        ("bh-bh", 5, 5.0, 7.5, 1.2047172579219288063),
        ("bh-bh", 8, 16.0, 24.0, 0.4877071959592823182),
        ("bh-hs", 2, 2.0, 2.0, 1.1137056388801093812),
        ("bh-hs", 3, 3.5, 5.0, 0.8293401043401043401),
        ("bh-hs", 4, 4.0, 4.0, 1.4831251082995788006),
        ("bh-hs", 5, 5.0, 7.5, 1.0882879358566688991),
        ("hs-bh", 2, 2.0, 2.0, 1.5529610277865572855),
        ("hs-bh", 3, 3.5, 5.0, 0.80396825396825396825),
        ("hs-bh", 4, 6.5, 4.0, 1.7961408343455052299),
        ("hs-bh", 8, 8.0, 8.0, 2.1071486528506416956),
    ];

    #[test]
    fn matches_reference_table() {
        for &(pair, m, n1, n2, expected) in REFERENCE {
            let v = avg_relative_entropy(&q(pair.parse().unwrap(), m, n1, n2)).unwrap();
            assert!((v - expected).abs() < 1e-12, "{pair} {m} {n1} {n2}: {v} vs {expected}");
        }
    }

    #[test]
    fn scalar_states_give_zero() {
        for pair in Pair::ALL {
            let v = avg_relative_entropy(&q(pair, 1, 1.0, 1.0)).unwrap();
            assert!(v.abs() <= 1e-12, "{pair}: {v}");
        }
        assert_eq!(mean_entropy_hs(1, 1.0).unwrap(), 0.0);
        assert!(mean_entropy_bh(1, 1.0).unwrap().abs() < 1e-15);
        assert!(mean_logdet_hs(1, 1.0).unwrap().abs() < 1e-15);
        assert!(mean_logdet_bh(1, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn single_ensemble_examples() {
        assert!((mean_entropy_hs(2, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // psi(9) - psi(4) - 3/8 = H_8 - H_3 - 3/8
        assert!((mean_entropy_hs(2, 4.0).unwrap() - 0.50952380952380952381).abs() < 1e-14);
        assert!((mean_entropy_bh(2, 2.0).unwrap() - (2.0 * LN_2 - 7.0 / 6.0)).abs() < 1e-14);
        let bh23 = psi(5.0).unwrap() - psi(3.5).unwrap();
        assert!((mean_entropy_bh(2, 3.0).unwrap() - bh23).abs() < 1e-14);
        assert!((mean_logdet_hs(2, 2.0).unwrap() + 8.0 / 3.0).abs() < 1e-14);
        assert!((mean_logdet_hs(2, 3.0).unwrap() + 31.0 / 15.0).abs() < 1e-14);
        assert!((mean_logdet_bh(2, 2.0).unwrap() - (-1.0 - 4.0 * LN_2)).abs() < 1e-14);
        assert!((mean_logdet_bh(2, 3.0).unwrap() + 2.2725887222397812377).abs() < 1e-13);
        assert!((mean_logdet_bh(6, 9.0).unwrap() + 14.082112689478520352).abs() < 1e-12);
        assert!((mean_entropy_hs(3, 4.5).unwrap() - 0.80595435454501277627).abs() < 1e-13);
    }

    #[test]
    fn hs_pair_at_two_is_one() {
        assert!((avg_relative_entropy(&q(Pair::HS_HS, 2, 2.0, 2.0)).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(mean_entropy_hs(3, 2.0).is_err());
        assert!(mean_logdet_bh(3, 2.9).is_err());
        assert!(mean_entropy_bh(0, 2.0).is_err());
        assert!(PairQuery::new(Pair::HS_HS, 2, 1.0, 2.0).is_err());
        assert!(PairQuery::new(Pair::HS_HS, 2, 2.0, f64::NAN).is_err());
        assert!(LimitQuery::new(Pair::HS_HS, 0.5, 1.0).is_err());
    }

    #[test]
    fn composition_identity() {
        for pair in Pair::ALL {
            for m in 1..=8 {
                for a1 in ALPHAS {
                    for a2 in ALPHAS {
                        let qq = q(pair, m, m as f64 + a1, m as f64 + a2);
                        let direct = avg_relative_entropy(&qq).unwrap();
                        let composed = composed_relative_entropy(&qq).unwrap();
                        assert!(
                            (direct - composed).abs() <= 1e-10,
                            "{pair} m={m} a1={a1} a2={a2}: {direct} vs {composed}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn averages_are_nonnegative() {
        for pair in Pair::ALL {
            for m in 1..=16 {
                for a1 in 0..=16 {
                    for a2 in 0..=16 {
                        let qq = q(pair, m, m as f64 + a1 as f64 / 2.0, m as f64 + a2 as f64 / 2.0);
                        assert!(avg_relative_entropy(&qq).unwrap() >= -1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bures_hall_exceeds_hilbert_schmidt() {
        for m in 1..=16 {
            for a1 in 0..=8 {
                for a2 in 0..=8 {
                    let (n1, n2) = ((m + a1) as f64, (m + a2) as f64);
                    let bh = avg_relative_entropy(&q(Pair::BH_BH, m, n1, n2)).unwrap();
                    let hs = avg_relative_entropy(&q(Pair::HS_HS, m, n1, n2)).unwrap();
                    assert!(bh >= hs - 1e-12, "m={m} a1={a1} a2={a2}");
                }
            }
        }
    }

    #[test]
    fn limit_examples() {
        let lim = |p, c1, c2| limit_avg_relative_entropy(&LimitQuery::new(p, c1, c2).unwrap()).unwrap();
        assert_eq!(lim(Pair::HS_HS, 1.0, 1.0), 1.5);
        assert!((lim(Pair::HS_HS, 2.0, 2.0) - (1.25 - LN_2)).abs() < 1e-15);
        assert!((lim(Pair::BH_BH, 1.0, 1.0) - (1.0 + 2.0 * LN_2)).abs() <= 4e-16);
        assert!((lim(Pair::BH_HS, 1.0, 1.0) - (1.0 + LN_2)).abs() <= 2e-16);
        assert!((lim(Pair::BH_BH, 1.5, 3.0) - 0.61356847060476972602).abs() < 1e-14);
        assert!((lim(Pair::BH_HS, 3.0, 1.25) - 0.77996207868542953256).abs() < 1e-14);
        assert!((lim(Pair::HS_HS, 3.0, 1.25) - 0.76430718855814157302).abs() < 1e-14);
        let err = limit_avg_relative_entropy(&LimitQuery::new(Pair::HS_BH, 1.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::UnsupportedLimit(_))));
    }

    #[test]
    fn converges_to_limit_like_one_over_m() {
        let ms = [8usize, 16, 32, 64, 128, 256];
        for pair in [Pair::HS_HS, Pair::BH_BH, Pair::BH_HS] {
            for (c1, c2) in [(1.0, 1.0), (2.0, 2.0), (2.0, 1.0), (1.0, 3.0), (3.0, 2.0)] {
                let limit = limit_avg_relative_entropy(&LimitQuery::new(pair, c1, c2).unwrap()).unwrap();
                let gaps: Vec<f64> = ms
                    .iter()
                    .map(|&m| {
                        let mf = m as f64;
                        let v = avg_relative_entropy(&q(pair, m, c1 * mf, c2 * mf)).unwrap();
                        (v - limit).abs()
                    })
                    .collect();
                let k = gaps[0] * 8.0;
                for (i, w) in gaps.windows(2).enumerate() {
                    assert!(w[1] < w[0], "{pair} c=({c1},{c2}) not decreasing at {}", ms[i + 1]);
                }
                for (&m, &g) in ms.iter().zip(&gaps) {
                    assert!(g <= k / m as f64 * (1.0 + 1e-9), "{pair} c=({c1},{c2}) m={m}");
                }
            }
        }
    }

    #[test]
    fn limits_decrease_in_c() {
        let grid: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 * 0.1).collect();
        for pair in [Pair::HS_HS, Pair::BH_BH, Pair::BH_HS] {
            let lim = |c1, c2| limit_avg_relative_entropy(&LimitQuery::new(pair, c1, c2).unwrap()).unwrap();
            for &fixed in &grid {
                for w in grid.windows(2) {
                    assert!(lim(w[1], fixed) < lim(w[0], fixed), "{pair} in c1");
                    assert!(lim(fixed, w[1]) < lim(fixed, w[0]), "{pair} in c2");
                }
            }
        }
    }

    #[test]
    fn pair_parsing() {
        for p in Pair::ALL {
            assert_eq!(p.to_string().parse::<Pair>().unwrap(), p);
        }
        assert!("hs".parse::<Pair>().is_err());
        assert!("hs-xx".parse::<Pair>().is_err());
        assert!(!has_limit(Pair::HS_BH));
    }
}
