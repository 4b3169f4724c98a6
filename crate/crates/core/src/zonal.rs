//! Schur functions, complex zonal polynomials and the unitary-group
//! integrals that tie them to Haar averages.
//!
//! The complex zonal polynomial of a partition `kappa |- l` with at most
//! `m` parts is `C_kappa(X) = chi_kappa(1) * s_kappa(x_1..x_m)`, where
//! `chi_kappa(1)` is the dimension of the symmetric-group irrep. Summed over
//! all such `kappa` they reproduce `(tr X)^l`, and
//!
//! ```text
//! E_U[ C_kappa(X U Y U^dagger) ] = C_kappa(X) C_kappa(Y) / C_kappa(I_m).
//! ```

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_haar_unitary, RngStream};
use crate::error::{Error, Result};
use crate::harness::{compare, Comparison, Estimate, EstimateMethod, Moments};
use crate::matrixcore::{eigh, CMatrix, HermitianMatrix};

/// Smallest sample count for the unitary-integral estimators.
pub const MIN_INTEGRAL_SAMPLES: usize = 1000;

/// Integer partition stored as its nonzero parts in weakly decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Trailing zeros are dropped; the parts must be weakly decreasing.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(format!(
                "partition parts {parts:?} must be weakly decreasing"
            )));
        }
        Ok(Self(parts))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|kappa|`, the sum of the parts.
    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Transposed Young diagram.
    pub fn conjugate(&self) -> Partition {
        let first = self.0.first().copied().unwrap_or(0);
        Partition(
            (1..=first)
                .map(|j| self.0.iter().filter(|&&p| p >= j).count() as u32)
                .collect(),
        )
    }

    /// Parts padded with zeros to length `m`.
    fn padded(&self, m: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(m.max(v.len()), 0);
        v
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<u32>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Vec<u32> {
        p.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Eigenvalues `x_1..x_m` of a matrix argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "eigenvalue tuple must be non-empty and finite".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn of_hermitian(h: &HermitianMatrix) -> Self {
        Self(eigh(h, false).eigenvalues)
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Partitions of `l` with at most `max_parts` parts, lexicographically
/// descending (`(l)` first).
pub fn partitions_of(l: u32, max_parts: usize) -> Vec<Partition> {
    fn rec(rest: u32, cap: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        if slots == 0 {
            return;
        }
        for p in (1..=rest.min(cap)).rev() {
            cur.push(p);
            rec(rest - p, p, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(l, l, max_parts, &mut Vec::new(), &mut out);
    out
}

/// `e_0..e_m` of `x`.
pub fn elementary_symmetric_all(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += xi * e[k - 1];
        }
    }
    e
}

/// `e_k(x)`, zero for `k < 0` or `k > len(x)`.
pub fn elementary_symmetric(k: i64, x: &[f64]) -> f64 {
    if k < 0 || k as usize > x.len() {
        return 0.0;
    }
    elementary_symmetric_all(x)[k as usize]
}

/// Schur function from elementary symmetric values `e[0..=m]` through the
/// dual Jacobi–Trudi determinant `det(e_{kappa'_i - i + j})`.
pub fn schur_from_elementary(kappa: &Partition, e: &[f64]) -> f64 {
    let conj = kappa.conjugate();
    let r = conj.len();
    if r == 0 {
        return 1.0;
    }
    let get = |k: i64| -> f64 {
        if k < 0 || k as usize >= e.len() {
            0.0
        } else {
            e[k as usize]
        }
    };
    let mat = DMatrix::from_fn(r, r, |i, j| get(conj.0[i] as i64 - i as i64 + j as i64));
    mat.determinant()
}

/// `s_kappa(x)`.
pub fn schur(kappa: &Partition, x: &[f64]) -> f64 {
    schur_from_elementary(kappa, &elementary_symmetric_all(x))
}

/// `chi_kappa(1) = l! * prod_{i<j} (k_i - k_j - i + j) / prod_i (k_i + m - i)!`
/// with `kappa` padded to `m` parts, evaluated in exact integer arithmetic.
pub fn chi_dim(kappa: &Partition, m: usize) -> Result<BigUint> {
    if kappa.len() > m {
        return Err(Error::InvalidConfig(format!(
            "partition {kappa} has more than m = {m} parts"
        )));
    }
    let k = kappa.padded(m);
    let factorial = |n: u64| -> BigUint { (1..=n).fold(BigUint::one(), |acc, i| acc * i) };
    let mut num = factorial(u64::from(kappa.weight()));
    for i in 0..m {
        for j in i + 1..m {
            // k_i - k_j - i + j > 0 since k is weakly decreasing and j > i.
            num *= (i64::from(k[i]) - i64::from(k[j]) + (j - i) as i64) as u64;
        }
    }
    let mut den = BigUint::one();
    for (i, &ki) in k.iter().enumerate() {
        den *= factorial(u64::from(ki) + (m - 1 - i) as u64);
    }
    if den.is_zero() || !(&num % &den).is_zero() {
        return Err(Error::Consistency(format!(
            "chi({kappa}) with m = {m} is not an integer: {num} / {den}"
        )));
    }
    Ok(num / den)
}

/// `chi_kappa(1)` as `f64`.
pub fn chi_dim_f64(kappa: &Partition, m: usize) -> Result<f64> {
    let c = chi_dim(kappa, m)?;
    c.to_f64()
        .ok_or_else(|| Error::Consistency(format!("chi({kappa}) = {c} overflows f64")))
}

/// `C_kappa` evaluated on eigenvalues; zero when `kappa` has more parts than
/// there are eigenvalues.
pub fn zonal_c(kappa: &Partition, x: &EigenTuple) -> Result<f64> {
    if kappa.len() > x.dim() {
        return Ok(0.0);
    }
    Ok(chi_dim_f64(kappa, x.dim())? * schur(kappa, x.values()))
}

/// `C_kappa(A)` for a general square matrix: the elementary symmetric
/// functions of its eigenvalues come from power traces through Newton's
/// identities, so no eigen-decomposition of a non-normal matrix is needed.
/// The imaginary part is dropped.
pub fn zonal_c_matrix(kappa: &Partition, a: &CMatrix) -> Result<f64> {
    let m = a.nrows();
    if a.ncols() != m || m == 0 {
        return Err(Error::ShapeMismatch {
            expected: "non-empty square matrix".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if kappa.len() > m {
        return Ok(0.0);
    }
    let e = elementary_from_power_traces(a, m);
    let e_real: Vec<f64> = e.iter().map(|z| z.re).collect();
    Ok(chi_dim_f64(kappa, m)? * schur_from_elementary(kappa, &e_real))
}

fn elementary_from_power_traces(a: &CMatrix, kmax: usize) -> Vec<Complex64> {
    let mut p = Vec::with_capacity(kmax);
    let mut power = a.clone();
    for k in 0..kmax {
        if k > 0 {
            power = &power * a;
        }
        p.push(power.trace());
    }
    let mut e = vec![Complex64::new(0.0, 0.0); kmax + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=kmax {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=k {
            let term = e[k - i] * p[i - 1];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e[k] = acc / k as f64;
    }
    e
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_INTEGRAL_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_INTEGRAL_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

fn iid_estimate(moments: &Moments, rng: &RngStream) -> Estimate {
    Estimate {
        mean: moments.mean(),
        stderr: moments.stderr(),
        n_samples: moments.count() as usize,
        seed: rng.seed(),
        method: EstimateMethod::Iid,
    }
}

/// Haar estimate of an integral next to its exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralCheck {
    pub estimate: Estimate,
    pub exact: f64,
    pub comparison: Comparison,
}

impl IntegralCheck {
    fn new(estimate: Estimate, exact: f64) -> Self {
        let comparison = compare(&estimate, exact);
        Self {
            estimate,
            exact,
            comparison,
        }
    }
}

/// Estimates `E_U[C_kappa(X U Y U^dagger)]` over `samples` Haar unitaries.
pub fn mc_unitary_integral(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    kappa: &Partition,
    samples: usize,
    rng: &mut RngStream,
) -> Result<IntegralCheck> {
    let m = x.dim();
    if y.dim() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m}x{m}"),
            found: format!("{0}x{0}", y.dim()),
        });
    }
    if kappa.len() > m {
        return Err(Error::InvalidConfig(format!(
            "partition {kappa} has more than m = {m} parts"
        )));
    }
    check_samples(samples)?;
    let ones = zonal_c(kappa, &EigenTuple::ones(m))?;
    let exact = zonal_c(kappa, &EigenTuple::of_hermitian(x))? * zonal_c(kappa, &EigenTuple::of_hermitian(y))? / ones;
    let mut moments = Moments::new();
    for _ in 0..samples {
        let u = sample_haar_unitary(m, rng);
        let a = x.as_matrix() * &u * y.as_matrix() * u.adjoint();
        moments.push(zonal_c_matrix(kappa, &a)?);
    }
    Ok(IntegralCheck::new(iid_estimate(&moments, rng), exact))
}

/// Estimates `E_U[sum_ij rho_i |u_ij|^2 ln sigma_j]`, which factorizes to
/// `(1/m) (sum_i rho_i)(sum_j ln sigma_j)`.
pub fn factorized_cross_term_check(
    rho: &[f64],
    sigma: &[f64],
    samples: usize,
    rng: &mut RngStream,
) -> Result<IntegralCheck> {
    let m = rho.len();
    if m == 0 || sigma.len() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m} non-empty spectra"),
            found: format!("{} and {}", m, sigma.len()),
        });
    }
    if let Some(&s) = sigma.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::Singular {
            eigenvalue: s,
            threshold: 0.0,
        });
    }
    check_samples(samples)?;
    let log_sigma: Vec<f64> = sigma.iter().map(|s| s.ln()).collect();
    let exact = rho.iter().sum::<f64>() * log_sigma.iter().sum::<f64>() / m as f64;
    let mut moments = Moments::new();
    for _ in 0..samples {
        let u = sample_haar_unitary(m, rng);
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += rho[i] * u[(i, j)].norm_sqr() * log_sigma[j];
            }
        }
        moments.push(acc);
    }
    Ok(IntegralCheck::new(iid_estimate(&moments, rng), exact))
}

/// One entry of the first-moment tensor `E[u_ij conj(u_kl)] = delta_ik delta_jl / m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub index: [usize; 4],
    pub expected: f64,
    pub re: IntegralCheck,
    pub im: IntegralCheck,
}

impl MomentEntry {
    pub fn pass(&self) -> bool {
        self.re.comparison.pass && self.im.comparison.pass
    }
}

/// Estimates every entry of `E[u_ij conj(u_kl)]` from one set of samples.
pub fn weingarten_first_moment(m: usize, samples: usize, rng: &mut RngStream) -> Result<Vec<MomentEntry>> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be >= 1".into()));
    }
    check_samples(samples)?;
    let flat = m * m;
    let mut re = vec![Moments::new(); flat * flat];
    let mut im = vec![Moments::new(); flat * flat];
    for _ in 0..samples {
        let u = sample_haar_unitary(m, rng);
        for a in 0..flat {
            let ua = u[(a / m, a % m)];
            for b in 0..flat {
                let v = ua * u[(b / m, b % m)].conj();
                re[a * flat + b].push(v.re);
                im[a * flat + b].push(v.im);
            }
        }
    }
    let mut out = Vec::with_capacity(flat * flat);
    for a in 0..flat {
        for b in 0..flat {
            let expected = if a == b { 1.0 / m as f64 } else { 0.0 };
            out.push(MomentEntry {
                index: [a / m, a % m, b / m, b % m],
                expected,
                re: IntegralCheck::new(iid_estimate(&re[a * flat + b], rng), expected),
                im: IntegralCheck::new(iid_estimate(&im[a * flat + b], rng), 0.0),
            });
        }
    }
    Ok(out)
}

/// Relative residual of `sum_kappa C_kappa(x) = (sum x)^l`.
pub fn trace_power_residual(x: &EigenTuple, l: u32) -> Result<f64> {
    let mut total = 0.0;
    for kappa in partitions_of(l, x.dim()) {
        total += zonal_c(&kappa, x)?;
    }
    let power = x.values().iter().sum::<f64>().powi(l as i32);
    Ok((total - power).abs() / power.abs().max(1.0))
}

/// Result of one named identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub detail: String,
    pub pass: bool,
    /// Largest `|z|` (Monte Carlo checks) or relative residual (exact checks).
    pub worst: f64,
}

/// Settings for [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZonalVerifyConfig {
    pub m: usize,
    pub l_max: u32,
    pub samples: usize,
    pub seed: u64,
}

impl ZonalVerifyConfig {
    pub const MAX_M: usize = 6;
    pub const MAX_L: u32 = 4;

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > Self::MAX_M {
            return Err(Error::InvalidConfig(format!(
                "m = {} must be in 1..={}",
                self.m,
                Self::MAX_M
            )));
        }
        if self.l_max == 0 || self.l_max > Self::MAX_L {
            return Err(Error::InvalidConfig(format!(
                "l_max = {} must be in 1..={}",
                self.l_max,
                Self::MAX_L
            )));
        }
        check_samples(self.samples)
    }
}

/// Exact relative tolerance for the algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;

fn verify_diagonals(m: usize) -> (HermitianMatrix, HermitianMatrix) {
    let x: Vec<f64> = (0..m).map(|i| 0.2 + 0.3 * i as f64).collect();
    let y: Vec<f64> = (0..m).map(|i| 1.1 - 0.15 * i as f64).collect();
    (
        HermitianMatrix::from_real_diagonal(&x),
        HermitianMatrix::from_real_diagonal(&y),
    )
}

/// Runs the zonal-polynomial identities and Haar integral checks at
/// dimension `m`.
///
/// Exact checks: the trace-power decomposition for every dimension up to
/// `m` and `l <= l_max`, and `sum chi^2 = l!`. Monte Carlo checks, each at
/// `|z| <= 4`: the product formula for every `kappa |- l <= l_max`, the
/// factorized cross term, and the full first-moment tensor.
pub fn verify(cfg: &ZonalVerifyConfig) -> Result<Vec<IdentityCheck>> {
    cfg.validate()?;
    let m = cfg.m;
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for d in 1..=m {
        let x = EigenTuple((0..d).map(|i| 0.3 + 0.7 * i as f64 - 0.05 * (i * i) as f64).collect());
        for l in 1..=cfg.l_max {
            worst = worst.max(trace_power_residual(&x, l)?);
        }
    }
    checks.push(IdentityCheck {
        name: "trace_power_decomposition".into(),
        detail: format!("l <= {}, dimensions 1..={m}", cfg.l_max),
        pass: worst <= IDENTITY_TOL,
        worst,
    });

    let mut pass = true;
    for l in 1..=cfg.l_max {
        let sum: BigUint = partitions_of(l, l as usize)
            .iter()
            .map(|k| chi_dim(k, l as usize).map(|c| &c * &c))
            .sum::<Result<BigUint>>()?;
        let fact: BigUint = (1..=u64::from(l)).product();
        pass &= sum == fact;
    }
    checks.push(IdentityCheck {
        name: "irrep_dimension_squares".into(),
        detail: format!("l <= {}", cfg.l_max),
        pass,
        worst: 0.0,
    });

    let mut rng = RngStream::new(cfg.seed, 0);
    let (x, y) = verify_diagonals(m);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut count = 0;
    for l in 1..=cfg.l_max {
        for kappa in partitions_of(l, m) {
            let c = mc_unitary_integral(&x, &y, &kappa, cfg.samples, &mut rng)?;
            worst = worst.max(c.comparison.z.abs());
            pass &= c.comparison.pass;
            count += 1;
        }
    }
    checks.push(IdentityCheck {
        name: "unitary_product_formula".into(),
        detail: format!("{count} partitions with l <= {}", cfg.l_max),
        pass,
        worst,
    });

    let mut rng = RngStream::new(cfg.seed, 1);
    let rho: Vec<f64> = (0..m).map(|i| 2.0 * (i + 1) as f64 / (m * (m + 1)) as f64).collect();
    let sigma: Vec<f64> = (0..m).map(|j| 1.0 / (j + 2) as f64).collect();
    let c = factorized_cross_term_check(&rho, &sigma, cfg.samples, &mut rng)?;
    checks.push(IdentityCheck {
        name: "factorized_cross_term".into(),
        detail: format!("exact {}", c.exact),
        pass: c.comparison.pass,
        worst: c.comparison.z.abs(),
    });

    let mut rng = RngStream::new(cfg.seed, 2);
    let entries = weingarten_first_moment(m, cfg.samples, &mut rng)?;
    let worst = entries
        .iter()
        .flat_map(|e| [e.re.comparison.z.abs(), e.im.comparison.z.abs()])
        .fold(0.0, f64::max);
    checks.push(IdentityCheck {
        name: "first_moment_tensor".into(),
        detail: format!("{} entries", entries.len()),
        pass: entries.iter().all(MomentEntry::pass),
        worst,
    });
    Ok(checks)
}
