use std::fs::File;
use std::io::{BufWriter, Write};

use relent::formulas::{
    avg_relative_entropy, limit_avg_relative_entropy, mean_entropy, mean_logdet, LimitQuery, PairQuery,
};
use relent::harness::{
    compare, estimate_relative_entropy, run_sweep, write_csv, SamplingPlan, SweepConfig, DEFAULT_STREAMS, Z_THRESHOLD,
};
use relent::selftest::{self, corrupted_bernoulli_table};
use relent::specfun::BernoulliTable;
use relent::zonal::{verify, ZonalVerifyConfig};
use serde_json::{json, Map, Value};

use crate::envelope::{print_csv, tagged, CliError, Envelope, RngInfo};
use crate::{ExactArgs, FigureArgs, Format, LimitArgs, SelftestArgs, SimulateArgs, ZonalArgs};

/// Smallest single-sample relative entropy tolerated before a run is
/// flagged.
const NONNEGATIVITY_TOL: f64 = -1e-9;

fn params(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(map) => map,
        _ => Map::new(),
    }
}

pub fn exact(a: &ExactArgs) -> Result<bool, CliError> {
    let q = PairQuery::new(a.pair, a.m, a.n1, a.n2)?;
    let value = avg_relative_entropy(&q)?;
    let entropy = mean_entropy(a.pair.rho, a.m, a.n1)?;
    let logdet = mean_logdet(a.pair.sigma, a.m, a.n2)?;
    match a.format {
        Format::Csv => print_csv(
            "pair,m,n1,n2,value,mean_entropy_rho,mean_logdet_sigma",
            &format!(
                "{},{},{:?},{:?},{value:?},{entropy:?},{logdet:?}",
                a.pair, a.m, a.n1, a.n2
            ),
        )?,
        Format::Json => Envelope::new(
            "exact",
            params(json!({ "pair": a.pair, "m": a.m, "n1": a.n1, "n2": a.n2 })),
            json!({
                "value": value,
                "provenance": "exact",
                "terms": {
                    "mean_entropy_rho": tagged(entropy, "exact"),
                    "mean_logdet_sigma": tagged(logdet, "exact"),
                },
            }),
        )
        .print()?,
    }
    Ok(true)
}

pub fn limit(a: &LimitArgs) -> Result<bool, CliError> {
    let q = LimitQuery::new(a.pair, a.c1, a.c2)?;
    let value = limit_avg_relative_entropy(&q)?;
    match a.format {
        Format::Csv => print_csv(
            "pair,c1,c2,limit",
            &format!("{},{:?},{:?},{value:?}", a.pair, a.c1, a.c2),
        )?,
        Format::Json => Envelope::new(
            "limit",
            params(json!({ "pair": a.pair, "c1": a.c1, "c2": a.c2 })),
            tagged(value, "limit"),
        )
        .print()?,
    }
    Ok(true)
}

pub fn simulate(a: &SimulateArgs) -> Result<bool, CliError> {
    let q = PairQuery::new(a.pair, a.m, a.n1, a.n2)?;
    let exact = avg_relative_entropy(&q)?;
    let plan = SamplingPlan::new(a.samples, a.seed)
        .with_threads(a.threads)
        .with_chain(a.chain.into());
    let mc = estimate_relative_entropy(&q, &plan)?;
    let cmp = compare(&mc.estimate, exact);
    let nonnegative = mc.min_value >= NONNEGATIVITY_TOL;
    let mut warnings = mc.warnings.clone();
    if !nonnegative {
        warnings.push(format!("sampled relative entropy {} is negative", mc.min_value));
    }
    if !cmp.pass {
        warnings.push(format!("|z| = {} exceeds {}", cmp.z.abs(), cmp.threshold));
    }
    match a.format {
        Format::Csv => print_csv(
            "pair,m,n1,n2,exact,mc_mean,mc_stderr,n_samples,seed,z",
            &format!(
                "{},{},{:?},{:?},{exact:?},{:?},{:?},{},{},{:?}",
                a.pair, a.m, a.n1, a.n2, mc.estimate.mean, mc.estimate.stderr, mc.estimate.n_samples, a.seed, cmp.z
            ),
        )?,
        Format::Json => {
            let mut env = Envelope::new(
                "simulate",
                params(json!({
                    "pair": a.pair, "m": a.m, "n1": a.n1, "n2": a.n2,
                    "samples": a.samples, "chain": relent::ensembles::ChainKind::from(a.chain),
                })),
                json!({
                    "estimate": mc.estimate,
                    "provenance": "monte_carlo",
                    "exact": tagged(exact, "exact"),
                    "z": cmp.z,
                    "threshold": Z_THRESHOLD,
                    "pass": cmp.pass,
                    "min_sample": mc.min_value,
                    "max_sample": mc.max_value,
                    "mcmc": mc.mcmc,
                }),
            );
            env.rng = Some(RngInfo {
                seed: a.seed,
                threads: a.threads,
                streams: mc.streams,
            });
            env.warnings = warnings.clone();
            env.print()?;
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(cmp.pass && nonnegative)
}

pub fn figure(a: &FigureArgs) -> Result<bool, CliError> {
    let cfg = SweepConfig {
        pair: a.pair,
        c1_list: a.c1.clone(),
        c2: a.c2,
        m_list: a.m.clone(),
        samples_per_point: a.samples,
        seed: a.seed,
        threads: a.threads,
        streams: DEFAULT_STREAMS,
        chain: a.chain.into(),
    };
    cfg.validate()?;
    let out = run_sweep(&cfg)?;

    if let Some(path) = &a.out {
        let io_err = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        write_csv(&out.rows, &mut w)?;
        w.flush().map_err(io_err)?;
    } else if a.format == Format::Csv {
        write_csv(&out.rows, std::io::stdout().lock())?;
    }

    let failing: Vec<String> = out
        .rows
        .iter()
        .filter(|r| !(r.z.abs() <= Z_THRESHOLD))
        .map(|r| format!("m={} c1={} z={}", r.m, r.c1, r.z))
        .collect();
    let nonnegative = out.min_sample >= NONNEGATIVITY_TOL;
    let mut warnings = out.warnings.clone();
    if !failing.is_empty() {
        warnings.push(format!("rows outside |z| <= {Z_THRESHOLD}: {}", failing.join("; ")));
    }
    if !nonnegative {
        warnings.push(format!("sampled relative entropy {} is negative", out.min_sample));
    }
    if a.format == Format::Json {
        let mut env = Envelope::new(
            "figure",
            params(json!({
                "pair": a.pair, "c1": a.c1, "c2": a.c2, "m": a.m, "samples": a.samples,
                "chain": relent::ensembles::ChainKind::from(a.chain),
                "out": a.out.as_ref().map(|p| p.display().to_string()),
            })),
            json!({
                "rows": out.rows,
                "provenance": { "exact": "exact", "limit": "limit", "mc_mean": "monte_carlo", "mc_stderr": "monte_carlo", "z": "monte_carlo" },
                "min_sample": out.min_sample,
            }),
        );
        env.rng = Some(RngInfo {
            seed: a.seed,
            threads: a.threads,
            streams: DEFAULT_STREAMS,
        });
        env.warnings = warnings.clone();
        env.print()?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(failing.is_empty() && nonnegative)
}

pub fn zonal_verify(a: &ZonalArgs) -> Result<bool, CliError> {
    let cfg = ZonalVerifyConfig {
        m: a.m,
        l_max: a.l_max,
        samples: a.samples,
        seed: a.seed,
    };
    let checks = verify(&cfg)?;
    let pass = checks.iter().all(|c| c.pass);
    let mut env = Envelope::new(
        "zonal-verify",
        params(json!({ "m": a.m, "l_max": a.l_max, "samples": a.samples })),
        json!({ "checks": checks, "pass": pass, "provenance": "monte_carlo" }),
    );
    env.rng = Some(RngInfo {
        seed: a.seed,
        threads: 1,
        streams: 3,
    });
    env.warnings = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} failed: {}", c.name, c.detail))
        .collect();
    env.print()?;
    Ok(pass)
}

pub fn selftest(a: &SelftestArgs) -> Result<bool, CliError> {
    let table = if a.corrupt_bernoulli {
        corrupted_bernoulli_table()
    } else {
        BernoulliTable::standard()
    };
    let report = selftest::run(&table);
    let mut out = std::io::stdout().lock();
    let io_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {}: {}", c.name, c.detail).map_err(io_err)?;
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(out, "selftest passed ({} checks)", report.checks.len()).map_err(io_err)?;
    } else {
        eprintln!("selftest failed: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}
