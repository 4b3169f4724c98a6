//! Monte Carlo estimation against the exact averages.
//!
//! Samples are split over a fixed number of RNG sub-streams
//! (`stream_id = 0..streams`). Worker threads only decide which streams run
//! concurrently, so a result depends on `(seed, samples, streams)` and not on
//! the thread count. Per-stream results are merged in stream order.
//!
//! When every sampler is i.i.d. the standard error is `sd / sqrt(N)`.
//! When a Bures–Hall sampler runs a Metropolis chain the samples are
//! correlated and the standard error comes from [`BATCH_COUNT`] batch means
//! over the stream-ordered sample sequence.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{ChainKind, EnsembleSpec, McmcConfig, McmcDiagnostics, RngStream, StateSampler};
use crate::error::{Error, Result};
use crate::formulas::{avg_relative_entropy, has_limit, limit_avg_relative_entropy, LimitQuery, Pair, PairQuery};
use crate::matrixcore::{log_det, relative_entropy, von_neumann_entropy, DensityMatrix};

/// Default `|z|` acceptance threshold.
pub const Z_THRESHOLD: f64 = 4.0;
/// Number of batches for batch-means standard errors.
pub const BATCH_COUNT: usize = 50;
/// Default number of RNG sub-streams per estimate.
pub const DEFAULT_STREAMS: usize = 16;
/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 100;
/// A standard error at or below this (relative to `max(1, |exact|)`) marks
/// a constant estimator; it then passes only if it matches to
/// [`DEGENERATE_MATCH_TOL`].
pub const DEGENERATE_STDERR: f64 = 1e-12;
pub const DEGENERATE_MATCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Iid,
    BatchMeans,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub method: EstimateMethod,
}

/// Running count, mean and sum of squared deviations. Merging uses the
/// pairwise update, so partial results from different streams combine
/// without a second pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Mean and batch-means standard error of a correlated sequence.
///
/// The sequence is cut into `batches` contiguous blocks of equal length
/// (the remainder goes to the leading blocks); the standard error is the
/// standard deviation of the block means divided by `sqrt(batches)`.
pub fn batch_means(values: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || values.len() < batches {
        return Err(Error::InvalidConfig(format!(
            "batch means needs at least {batches} >= 2 samples, got {}",
            values.len()
        )));
    }
    let base = values.len() / batches;
    let extra = values.len() % batches;
    let mut start = 0;
    let mut block_means = Moments::new();
    for b in 0..batches {
        let len = base + usize::from(b < extra);
        let block: Moments = values[start..start + len].iter().copied().collect();
        block_means.push(block.mean());
        start += len;
    }
    let overall: Moments = values.iter().copied().collect();
    Ok((overall.mean(), block_means.stderr()))
}

/// Outcome of comparing an estimate with an exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub z: f64,
    pub threshold: f64,
    pub pass: bool,
    /// The estimator had (numerically) zero variance.
    pub degenerate: bool,
}

pub fn compare(estimate: &Estimate, exact: f64) -> Comparison {
    compare_with_threshold(estimate, exact, Z_THRESHOLD)
}

/// `z = (mean - exact) / stderr`, passing when `|z| <= threshold`.
///
/// A zero-variance estimator passes only when its mean equals `exact`
/// (within [`DEGENERATE_MATCH_TOL`]); otherwise `z` is reported as
/// `+-inf`.
pub fn compare_with_threshold(estimate: &Estimate, exact: f64, threshold: f64) -> Comparison {
    let scale = exact.abs().max(1.0);
    let diff = estimate.mean - exact;
    if estimate.stderr <= DEGENERATE_STDERR * scale {
        let pass = diff.abs() <= DEGENERATE_MATCH_TOL * scale;
        let z = if pass { 0.0 } else { f64::INFINITY.copysign(diff) };
        return Comparison {
            z,
            threshold,
            pass,
            degenerate: true,
        };
    }
    let z = diff / estimate.stderr;
    Comparison {
        z,
        threshold,
        pass: z.abs() <= threshold,
        degenerate: false,
    }
}

/// How an estimate is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub samples: usize,
    pub seed: u64,
    pub streams: usize,
    pub threads: usize,
    /// Chain used for Bures–Hall states with `alpha > 0`.
    pub chain: ChainKind,
}

impl SamplingPlan {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            streams: DEFAULT_STREAMS,
            threads: 1,
            chain: ChainKind::MatrixWalk,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_streams(mut self, streams: usize) -> Self {
        self.streams = streams;
        self
    }

    pub fn with_chain(mut self, chain: ChainKind) -> Self {
        self.chain = chain;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        if self.streams == 0 || self.threads == 0 {
            return Err(Error::InvalidConfig("streams and threads must be >= 1".into()));
        }
        Ok(())
    }

    fn stream_len(&self, stream: usize) -> usize {
        let streams = self.streams.min(self.samples);
        self.samples / streams + usize::from(stream < self.samples % streams)
    }
}

/// Monte Carlo estimate together with run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: Estimate,
    pub min_value: f64,
    pub max_value: f64,
    pub streams: usize,
    /// Merged chain diagnostics when a Metropolis chain was used.
    pub mcmc: Option<McmcDiagnostics>,
    pub warnings: Vec<String>,
}

struct StreamOutput {
    values: Vec<f64>,
    iid: bool,
    mcmc: Option<McmcDiagnostics>,
}

fn map_streams<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads <= 1 || count <= 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Draws one state from each spec per sample and averages `statistic`.
pub fn estimate_statistic<F>(specs: &[EnsembleSpec], plan: &SamplingPlan, statistic: F) -> Result<McEstimate>
where
    F: Fn(&[DensityMatrix]) -> Result<f64> + Sync + Send,
{
    plan.validate()?;
    let streams = plan.streams.min(plan.samples);
    let offsets: Vec<usize> = (0..streams)
        .scan(0usize, |acc, s| {
            let start = *acc;
            *acc += plan.stream_len(s);
            Some(start)
        })
        .collect();

    let outputs = map_streams(plan.threads, streams, |s| -> Result<StreamOutput> {
        let mut rng = RngStream::new(plan.seed, s as u64);
        let mut samplers = specs
            .iter()
            .map(|spec| StateSampler::with_config(*spec, McmcConfig::for_kind(plan.chain, spec.m), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let len = plan.stream_len(s);
        let mut values = Vec::with_capacity(len);
        let mut states = Vec::with_capacity(specs.len());
        for i in 0..len {
            states.clear();
            let value = samplers
                .iter_mut()
                .map(|smp| smp.sample(&mut rng))
                .collect::<Result<Vec<_>>>()
                .and_then(|st| {
                    states.extend(st);
                    statistic(&states)
                })
                .map_err(|e| Error::Sample {
                    index: offsets[s] + i,
                    source: Box::new(e),
                })?;
            values.push(value);
        }
        let iid = samplers.iter().all(StateSampler::is_iid);
        let mut mcmc: Option<McmcDiagnostics> = None;
        for d in samplers.iter().filter_map(StateSampler::diagnostics) {
            mcmc.get_or_insert_with(McmcDiagnostics::default).merge(d);
        }
        Ok(StreamOutput { values, iid, mcmc })
    })?;
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let iid = outputs.iter().all(|o| o.iid);
    let mut mcmc: Option<McmcDiagnostics> = None;
    for d in outputs.iter().filter_map(|o| o.mcmc.as_ref()) {
        mcmc.get_or_insert_with(McmcDiagnostics::default).merge(d);
    }
    let all = outputs.iter().flat_map(|o| o.values.iter().copied());
    let min_value = all.clone().fold(f64::INFINITY, f64::min);
    let max_value = all.fold(f64::NEG_INFINITY, f64::max);

    let estimate = if iid {
        let mut moments = Moments::new();
        for o in &outputs {
            let part: Moments = o.values.iter().copied().collect();
            moments.merge(&part);
        }
        Estimate {
            mean: moments.mean(),
            stderr: moments.stderr(),
            n_samples: plan.samples,
            seed: plan.seed,
            method: EstimateMethod::Iid,
        }
    } else {
        let values: Vec<f64> = outputs.iter().flat_map(|o| o.values.iter().copied()).collect();
        let (mean, stderr) = batch_means(&values, BATCH_COUNT)?;
        Estimate {
            mean,
            stderr,
            n_samples: plan.samples,
            seed: plan.seed,
            method: EstimateMethod::BatchMeans,
        }
    };
    let warnings = mcmc.iter().filter_map(McmcDiagnostics::warning).collect();
    Ok(McEstimate {
        estimate,
        min_value,
        max_value,
        streams,
        mcmc,
        warnings,
    })
}

fn integer_dim(n: f64) -> Result<usize> {
    if n.fract() != 0.0 || n < 1.0 || !n.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "simulation needs integer dimensions, got n = {n}"
        )));
    }
    Ok(n as usize)
}

/// Sample mean of `D(rho || sigma)` over independent draws.
pub fn estimate_relative_entropy(q: &PairQuery, plan: &SamplingPlan) -> Result<McEstimate> {
    let rho = EnsembleSpec::new(q.pair.rho, q.m, integer_dim(q.n1)?)?;
    let sigma = EnsembleSpec::new(q.pair.sigma, q.m, integer_dim(q.n2)?)?;
    estimate_statistic(&[rho, sigma], plan, |s| relative_entropy(&s[0], &s[1]))
}

/// Sample mean of the von Neumann entropy.
pub fn estimate_mean_entropy(spec: &EnsembleSpec, plan: &SamplingPlan) -> Result<McEstimate> {
    estimate_statistic(&[*spec], plan, |s| Ok(von_neumann_entropy(&s[0])))
}

/// Sample mean of `ln det`.
pub fn estimate_mean_logdet(spec: &EnsembleSpec, plan: &SamplingPlan) -> Result<McEstimate> {
    estimate_statistic(&[*spec], plan, |s| log_det(&s[0]))
}

/// Grid of `(m, c1)` points for one pairing at fixed `c2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub pair: Pair,
    pub c1_list: Vec<f64>,
    pub c2: f64,
    pub m_list: Vec<usize>,
    pub samples_per_point: usize,
    pub seed: u64,
    pub threads: usize,
    pub streams: usize,
    pub chain: ChainKind,
}

impl SweepConfig {
    /// `c1 in {1, 2, 3}`, `c2 = 1`, `m in {2, 4, 8, 16, 32}`.
    pub fn default_grid(pair: Pair, samples_per_point: usize, seed: u64) -> Self {
        Self {
            pair,
            c1_list: vec![1.0, 2.0, 3.0],
            c2: 1.0,
            m_list: vec![2, 4, 8, 16, 32],
            samples_per_point,
            seed,
            threads: 1,
            streams: DEFAULT_STREAMS,
            chain: ChainKind::Eigenphase,
        }
    }

    /// Rejects empty grids, `c < 1`, and any point where `c * m` is not an
    /// integer.
    pub fn validate(&self) -> Result<()> {
        if self.c1_list.is_empty() || self.m_list.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.samples_per_point < MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "need at least {MIN_SAMPLES} samples per point, got {}",
                self.samples_per_point
            )));
        }
        for &c in self.c1_list.iter().chain(std::iter::once(&self.c2)) {
            if !(c >= 1.0) || !c.is_finite() {
                return Err(Error::InvalidConfig(format!("c = {c} must be >= 1")));
            }
        }
        for &m in &self.m_list {
            if m == 0 {
                return Err(Error::InvalidConfig("m must be >= 1".into()));
            }
            for &c in self.c1_list.iter().chain(std::iter::once(&self.c2)) {
                grid_dim(c, m)?;
            }
        }
        Ok(())
    }
}

fn grid_dim(c: f64, m: usize) -> Result<usize> {
    let n = c * m as f64;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "c = {c} at m = {m} gives non-integer n = {n}"
        )));
    }
    Ok(rounded as usize)
}

/// One CSV row of a sweep. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pair: Pair,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub c1: f64,
    pub c2: f64,
    pub exact: f64,
    pub limit: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub z: f64,
}

pub const CSV_HEADER: &str = "pair,m,n1,n2,c1,c2,exact,limit,mc_mean,mc_stderr,n_samples,seed,z";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Smallest single-sample relative entropy seen anywhere in the sweep.
    pub min_sample: f64,
    pub warnings: Vec<String>,
}

/// Runs every `(c1, m)` point, `c1` outer and `m` inner. Row `i` is
/// simulated with seed `cfg.seed + i`. Points run in parallel on
/// `cfg.threads` workers; each point samples its streams sequentially, so
/// the output does not depend on the thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let mut points = Vec::new();
    for &c1 in &cfg.c1_list {
        let limit = if has_limit(cfg.pair) {
            Some(limit_avg_relative_entropy(&LimitQuery::new(cfg.pair, c1, cfg.c2)?)?)
        } else {
            None
        };
        for &m in &cfg.m_list {
            let n1 = grid_dim(c1, m)?;
            let n2 = grid_dim(cfg.c2, m)?;
            let q = PairQuery::new(cfg.pair, m, n1 as f64, n2 as f64)?;
            points.push((c1, limit, q, avg_relative_entropy(&q)?));
        }
    }
    let results = map_streams(cfg.threads, points.len(), |i| {
        let plan = SamplingPlan::new(cfg.samples_per_point, cfg.seed.wrapping_add(i as u64))
            .with_streams(cfg.streams)
            .with_chain(cfg.chain);
        estimate_relative_entropy(&points[i].2, &plan)
    })?;

    let mut rows = Vec::with_capacity(points.len());
    let mut warnings = Vec::new();
    let mut min_sample = f64::INFINITY;
    for ((c1, limit, q, exact), mc) in points.into_iter().zip(results) {
        let mc = mc?;
        let cmp = compare(&mc.estimate, exact);
        min_sample = min_sample.min(mc.min_value);
        warnings.extend(
            mc.warnings
                .iter()
                .map(|w| format!("{} m={} c1={c1}: {w}", cfg.pair, q.m)),
        );
        rows.push(SweepRow {
            pair: cfg.pair,
            m: q.m,
            n1: q.n1 as usize,
            n2: q.n2 as usize,
            c1,
            c2: cfg.c2,
            exact,
            limit,
            mc_mean: mc.estimate.mean,
            mc_stderr: mc.estimate.stderr,
            n_samples: mc.estimate.n_samples,
            seed: mc.estimate.seed,
            z: cmp.z,
        });
    }
    Ok(SweepOutput {
        rows,
        min_sample,
        warnings,
    })
}

/// Writes rows with the [`CSV_HEADER`] columns, LF line endings and
/// shortest round-trip floats. A missing limit is an empty field.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "CSV header '{}' does not match '{CSV_HEADER}'",
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(mean: f64, stderr: f64) -> Estimate {
        Estimate {
            mean,
            stderr,
            n_samples: 100,
            seed: 0,
            method: EstimateMethod::Iid,
        }
    }

    #[test]
    fn compare_examples() {
        let c = compare(&est(1.0, 0.01), 1.0);
        assert_eq!(c.z, 0.0);
        assert!(c.pass);
        let c = compare(&est(1.05, 0.01), 1.0);
        assert!((c.z - 5.0).abs() < 1e-9);
        assert!(!c.pass);
        let c = compare(&est(3.0, 0.0), 3.0);
        assert!(c.pass && c.degenerate);
        let c = compare(&est(3.0 + 1e-15, 1e-17), 3.0);
        assert!(c.pass && c.degenerate);
        let c = compare(&est(2.5, 0.0), 3.0);
        assert!(!c.pass);
        assert_eq!(c.z, f64::NEG_INFINITY);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let whole: Moments = xs.iter().copied().collect();
        let mut merged = Moments::new();
        for chunk in xs.chunks(77) {
            merged.merge(&chunk.iter().copied().collect());
        }
        assert_eq!(merged.count(), whole.count());
        assert!((merged.mean() - whole.mean()).abs() < 1e-12);
        assert!((merged.variance() - whole.variance()).abs() < 1e-10);
    }

    #[test]
    fn batch_means_of_independent_blocks() {
        // Alternating constant blocks: block means are 0 and 1.
        let mut v = Vec::new();
        for b in 0..50 {
            v.extend(std::iter::repeat((b % 2) as f64).take(10));
        }
        let (mean, se) = batch_means(&v, 50).unwrap();
        assert!((mean - 0.5).abs() < 1e-15);
        let sd = (0.25f64 * 50.0 / 49.0).sqrt();
        assert!((se - sd / 50f64.sqrt()).abs() < 1e-12);
        assert!(batch_means(&v[..10], 50).is_err());
    }

    #[test]
    fn plan_splits_samples_exactly() {
        let plan = SamplingPlan::new(1003, 1);
        let total: usize = (0..plan.streams).map(|s| plan.stream_len(s)).sum();
        assert_eq!(total, 1003);
        let small = SamplingPlan::new(100, 1).with_streams(300);
        let streams = small.streams.min(small.samples);
        assert_eq!((0..streams).map(|s| small.stream_len(s)).sum::<usize>(), 100);
    }

    #[test]
    fn sweep_rejects_fractional_dimensions() {
        let mut cfg = SweepConfig::default_grid(Pair::HS_HS, 100, 0);
        cfg.c1_list = vec![1.5];
        cfg.m_list = vec![2, 3];
        assert!(cfg.validate().is_err());
        cfg.m_list = vec![2, 4];
        assert!(cfg.validate().is_ok());
        cfg.c2 = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_noninteger_simulation() {
        let q = PairQuery::new(Pair::HS_HS, 2, 2.5, 2.0).unwrap();
        assert!(estimate_relative_entropy(&q, &SamplingPlan::new(100, 0)).is_err());
        let q = PairQuery::new(Pair::HS_HS, 2, 2.0, 2.0).unwrap();
        assert!(estimate_relative_entropy(&q, &SamplingPlan::new(99, 0)).is_err());
    }
}
