//! Fast invariant suite: special-function identities, closed-form
//! consistency and the exact zonal identities. No sampling.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::formulas::{
    avg_relative_entropy, composed_relative_entropy, limit_avg_relative_entropy, mean_entropy_hs, LimitQuery, Pair,
    PairQuery,
};
use crate::specfun::{
    digamma, digamma_half, digamma_int, digamma_with_table, weighted_digamma, BernoulliTable, CompensatedSum,
};
use crate::zonal::{chi_dim, partitions_of, trace_power_residual, EigenTuple};

/// One named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub checks: Vec<CheckResult>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// The standard table with `B_8` replaced by `-1/31`.
pub fn corrupted_bernoulli_table() -> BernoulliTable {
    let mut values: Vec<Ratio<i128>> = (1..=BernoulliTable::standard().order())
        .map(|k| BernoulliTable::standard().get(k).expect("k within the standard table"))
        .collect();
    values[3] = Ratio::new(-1, 31);
    BernoulliTable::from_values(values)
}

type Check = std::result::Result<String, String>;

fn within(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<f64, String> {
    let err = (got - want).abs();
    if err <= tol && got.is_finite() {
        Ok(err)
    } else {
        Err(format!("{name}: got {got}, expected {want} (|diff| {err:e} > {tol:e})"))
    }
}

fn bernoulli_recurrence(table: &BernoulliTable) -> Check {
    table
        .validate()
        .map(|()| format!("B_2..B_{} satisfy the recurrence", 2 * table.order()))
        .map_err(|e| e.to_string())
}

fn digamma_table_series(table: &BernoulliTable) -> Check {
    let mut worst: f64 = 0.0;
    for l in [1u64, 2, 5, 17, 40, 200] {
        let got = digamma_with_table(l as f64, table).map_err(|e| e.to_string())?;
        let want = digamma_int(l).map_err(|e| e.to_string())?;
        worst = worst.max(within(&format!("psi({l})"), got, want, 1e-13)?);
        let got = digamma_with_table(l as f64 + 0.5, table).map_err(|e| e.to_string())?;
        worst = worst.max(within(&format!("psi({l}+1/2)"), got, digamma_half(l), 1e-13)?);
    }
    Ok(format!(
        "table-driven series matches harmonic sums, max |diff| {worst:e}"
    ))
}

fn digamma_reference() -> Check {
    let gamma = 0.577_215_664_901_532_9;
    within("psi(1)", digamma(1.0).map_err(|e| e.to_string())?, -gamma, 1e-15)?;
    within(
        "psi(1/2)",
        digamma(0.5).map_err(|e| e.to_string())?,
        -gamma - 2.0 * std::f64::consts::LN_2,
        1e-15,
    )?;
    let mut worst: f64 = 0.0;
    for l in 1..=200u64 {
        let a = digamma(l as f64).map_err(|e| e.to_string())?;
        worst = worst.max(within(
            &format!("psi({l})"),
            a,
            digamma_int(l).map_err(|e| e.to_string())?,
            1e-13,
        )?);
    }
    Ok(format!("psi(1), psi(1/2), psi(1..=200) agree, max |diff| {worst:e}"))
}

fn digamma_identities() -> Check {
    let ln2 = std::f64::consts::LN_2;
    for x in [0.5, 0.7, 1.0, 1.5, 2.3, 10.0, 100.0] {
        let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
        within(&format!("recurrence at {x}"), d, 0.0, 1e-12)?;
    }
    for x in [0.5, 1.0, 1.5, 2.0, 7.5, 40.0] {
        let lhs = 2.0 * digamma(2.0 * x).unwrap();
        let rhs = digamma(x + 0.5).unwrap() + digamma(x).unwrap() + 2.0 * ln2;
        within(&format!("duplication at {x}"), lhs, rhs, 1e-12)?;
    }
    Ok("recurrence and duplication hold on the grid".into())
}

fn summation_formula() -> Check {
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.5, 1.0, 2.0, 3.25] {
        for m in 1..=50u32 {
            let lhs: CompensatedSum = (1..=m).map(|i| digamma(i as f64 + alpha).unwrap()).collect();
            let mf = m as f64;
            let rhs = (mf + alpha) * digamma(mf + alpha).unwrap() - weighted_digamma(alpha).unwrap() - mf;
            worst = worst.max(within(&format!("m={m} alpha={alpha}"), lhs.value(), rhs, 1e-10)?);
        }
    }
    Ok(format!(
        "sum_i psi(i+alpha) closed form for m <= 50, max |diff| {worst:e}"
    ))
}

fn closed_form_examples() -> Check {
    let q = |pair, m, n1: f64, n2: f64| PairQuery::new(pair, m, n1, n2).map_err(|e| e.to_string());
    let d = |q: PairQuery| avg_relative_entropy(&q).map_err(|e| e.to_string());
    for pair in Pair::ALL {
        within(&format!("{pair} at m=n=1"), d(q(pair, 1, 1.0, 1.0)?)?, 0.0, 1e-12)?;
    }
    within("hs-hs (2,2,2)", d(q(Pair::HS_HS, 2, 2.0, 2.0)?)?, 1.0, 1e-12)?;
    within(
        "S_HS(2,2)",
        mean_entropy_hs(2, 2.0).map_err(|e| e.to_string())?,
        1.0 / 3.0,
        1e-12,
    )?;
    within(
        "S_HS(2,4)",
        mean_entropy_hs(2, 4.0).map_err(|e| e.to_string())?,
        107.0 / 210.0,
        1e-12,
    )?;
    Ok("trivial and tabulated averages reproduced".into())
}

fn composition() -> Check {
    let mut worst: f64 = 0.0;
    for pair in Pair::ALL {
        for m in 1..=8usize {
            for a1 in [0.0, 0.5, 1.0, 2.0, 3.0] {
                for a2 in [0.0, 0.5, 1.0, 2.0, 3.0] {
                    let mf = m as f64;
                    let q = PairQuery::new(pair, m, mf + a1, mf + a2).map_err(|e| e.to_string())?;
                    let a = avg_relative_entropy(&q).map_err(|e| e.to_string())?;
                    let b = composed_relative_entropy(&q).map_err(|e| e.to_string())?;
                    worst = worst.max(within(
                        &format!("{pair} m={m} a={a1},{a2}"),
                        a,
                        b,
                        1e-10 * a.abs().max(1.0),
                    )?);
                }
            }
        }
    }
    Ok(format!(
        "explicit forms equal -S - L/m on the grid, max |diff| {worst:e}"
    ))
}

fn limit_values() -> Check {
    let lim = |pair, c1, c2| {
        LimitQuery::new(pair, c1, c2)
            .and_then(|q| limit_avg_relative_entropy(&q))
            .map_err(|e| e.to_string())
    };
    within("hs-hs limit at c=1", lim(Pair::HS_HS, 1.0, 1.0)?, 1.5, 1e-12)?;
    within(
        "hs-hs limit at c=2",
        lim(Pair::HS_HS, 2.0, 2.0)?,
        1.25 - std::f64::consts::LN_2,
        1e-12,
    )?;
    if lim(Pair::HS_BH, 2.0, 2.0).is_ok() {
        return Err("hs-bh limit should be unsupported".into());
    }
    Ok("limit endpoints reproduced".into())
}

fn zonal_identities() -> Check {
    let mut worst: f64 = 0.0;
    for m in 1..=5usize {
        let x = EigenTuple::new((0..m).map(|i| 0.3 + 0.7 * i as f64).collect()).map_err(|e| e.to_string())?;
        for l in 1..=4 {
            let r = trace_power_residual(&x, l).map_err(|e| e.to_string())?;
            worst = worst.max(within(&format!("m={m} l={l}"), r, 0.0, 1e-10)?);
        }
    }
    for l in 1..=6u32 {
        let mut sum = num_bigint::BigUint::default();
        for k in partitions_of(l, l as usize) {
            let c = chi_dim(&k, l as usize).map_err(|e| e.to_string())?;
            sum += &c * &c;
        }
        let fact: num_bigint::BigUint = (1..=u64::from(l)).product();
        if sum != fact {
            return Err(format!("sum chi^2 for l={l} is {sum}, expected {fact}"));
        }
    }
    Ok(format!(
        "trace-power decomposition (residual {worst:e}) and sum chi^2 = l!"
    ))
}

/// Runs every check; `table` feeds the Bernoulli checks.
pub fn run(table: &BernoulliTable) -> SelfTestReport {
    let checks: Vec<(&str, Check)> = vec![
        ("bernoulli_recurrence", bernoulli_recurrence(table)),
        ("digamma_table_series", digamma_table_series(table)),
        ("digamma_reference", digamma_reference()),
        ("digamma_identities", digamma_identities()),
        ("digamma_summation", summation_formula()),
        ("closed_form_examples", closed_form_examples()),
        ("composition_identity", composition()),
        ("limit_values", limit_values()),
        ("zonal_identities", zonal_identities()),
    ];
    SelfTestReport {
        checks: checks
            .into_iter()
            .map(|(name, r)| {
                let (pass, detail) = match r {
                    Ok(d) => (true, d),
                    Err(d) => (false, d),
                };
                CheckResult {
                    name: name.to_string(),
                    pass,
                    detail,
                }
            })
            .collect(),
    }
}
