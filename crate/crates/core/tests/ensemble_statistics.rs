//! Statistical checks of the samplers against known moments.

use num_complex::Complex64;
use relent::ensembles::{
    mcmc_unitary_chain, sample_ginibre, sample_haar_unitary, ChainKind, EnsembleSpec, McmcConfig, RngStream,
};
use relent::formulas::{avg_relative_entropy, mean_entropy_bh, Pair, PairQuery};
use relent::harness::{
    batch_means, compare, estimate_mean_entropy, estimate_mean_logdet, estimate_relative_entropy, Estimate,
    EstimateMethod, Moments, SamplingPlan, BATCH_COUNT,
};
use relent::matrixcore::CMatrix;
use relent::specfun::digamma;

const N: usize = 100_000;

fn iid(m: &Moments) -> Estimate {
    Estimate {
        mean: m.mean(),
        stderr: m.stderr(),
        n_samples: m.count() as usize,
        seed: 0,
        method: EstimateMethod::Iid,
    }
}

fn assert_z(est: &Estimate, exact: f64, what: &str) {
    let c = compare(est, exact);
    assert!(
        c.pass,
        "{what}: mean {} stderr {} exact {exact} z {}",
        est.mean, est.stderr, c.z
    );
}

#[test]
fn ginibre_entries_have_unit_variance() {
    let mut rng = RngStream::new(21, 0);
    let (mut re, mut sq) = (Moments::new(), Moments::new());
    for _ in 0..N / 10 {
        let g = sample_ginibre(2, 3, &mut rng);
        for z in g.iter() {
            re.push(z.re);
            sq.push(z.norm_sqr());
        }
    }
    assert_z(&iid(&re), 0.0, "E Re g");
    assert_z(&iid(&sq), 1.0, "E |g|^2");
}

#[test]
fn haar_first_moments() {
    let m = 3;
    let mut rng = RngStream::new(22, 0);
    let (mut diag, mut cross_re, mut cross_im, mut trace) =
        (Moments::new(), Moments::new(), Moments::new(), Moments::new());
    for _ in 0..N {
        let u = sample_haar_unitary(m, &mut rng);
        diag.push(u[(0, 0)].norm_sqr());
        let c = u[(0, 0)] * u[(1, 1)].conj();
        cross_re.push(c.re);
        cross_im.push(c.im);
        trace.push(u.trace().norm_sqr());
    }
    assert_z(&iid(&diag), 1.0 / m as f64, "E|u11|^2");
    assert_z(&iid(&cross_re), 0.0, "Re E[u11 u22*]");
    assert_z(&iid(&cross_im), 0.0, "Im E[u11 u22*]");
    assert_z(&iid(&trace), 1.0, "E|tr U|^2");
}

#[test]
fn haar_left_invariance() {
    let m = 3;
    let mut rng = RngStream::new(23, 0);
    // A fixed non-diagonal unitary.
    let v = sample_haar_unitary(m, &mut RngStream::new(99, 5));
    let (mut plain, mut rotated) = (Moments::new(), Moments::new());
    for _ in 0..N {
        let u = sample_haar_unitary(m, &mut rng);
        plain.push(u[(0, 0)].norm_sqr());
        let vu: CMatrix = &v * sample_haar_unitary(m, &mut rng);
        rotated.push(vu[(0, 0)].norm_sqr());
    }
    let z = (plain.mean() - rotated.mean()) / (plain.stderr().powi(2) + rotated.stderr().powi(2)).sqrt();
    assert!(z.abs() <= 4.0, "z = {z}");
}

#[test]
fn hilbert_schmidt_entropy_and_logdet() {
    let spec = EnsembleSpec::hilbert_schmidt(2, 2).unwrap();
    let plan = SamplingPlan::new(N, 31);
    let s = estimate_mean_entropy(&spec, &plan).unwrap();
    assert_eq!(s.estimate.method, EstimateMethod::Iid);
    assert_z(&s.estimate, 1.0 / 3.0, "S_HS(2,2)");
    let l = estimate_mean_logdet(&spec, &plan).unwrap();
    assert_z(&l.estimate, -8.0 / 3.0, "L_HS(2,2)");
}

#[test]
fn bures_hall_entropy_at_alpha_zero() {
    let spec = EnsembleSpec::bures_hall(2, 2).unwrap();
    let s = estimate_mean_entropy(&spec, &SamplingPlan::new(N, 32)).unwrap();
    assert_eq!(s.estimate.method, EstimateMethod::Iid);
    assert_z(&s.estimate, 2.0 * std::f64::consts::LN_2 - 7.0 / 6.0, "S_BH(2,2)");
}

#[test]
fn bures_hall_entropy_with_matrix_walk() {
    let spec = EnsembleSpec::bures_hall(2, 3).unwrap();
    let s = estimate_mean_entropy(&spec, &SamplingPlan::new(40_000, 33)).unwrap();
    assert_eq!(s.estimate.method, EstimateMethod::BatchMeans);
    let exact = digamma(5.0).unwrap() - digamma(3.5).unwrap();
    assert_z(&s.estimate, exact, "S_BH(2,3)");
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
}

#[test]
fn chains_agree_with_each_other() {
    let spec = EnsembleSpec::bures_hall(3, 5).unwrap();
    let exact = mean_entropy_bh(3, 5.0).unwrap();
    let mut means = Vec::new();
    for chain in [ChainKind::MatrixWalk, ChainKind::Eigenphase] {
        let s = estimate_mean_entropy(&spec, &SamplingPlan::new(20_000, 34).with_chain(chain)).unwrap();
        assert_z(&s.estimate, exact, &format!("{chain:?}"));
        means.push(s.estimate);
    }
    let z = (means[0].mean - means[1].mean) / (means[0].stderr.powi(2) + means[1].stderr.powi(2)).sqrt();
    assert!(z.abs() <= 4.0, "chains disagree: z = {z}");
}

fn chain_cos_theta(kind: ChainKind, seed: u64) -> (f64, f64) {
    let cfg = McmcConfig::for_kind(kind, 1).with_chain_length(50_000);
    let run = mcmc_unitary_chain(1, 1.0, &mut RngStream::new(seed, 0), cfg).unwrap();
    let cos: Vec<f64> = run.unitaries.iter().map(|u| u[(0, 0)].re).collect();
    for u in &run.unitaries {
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }
    batch_means(&cos, BATCH_COUNT).unwrap()
}

#[test]
fn one_dimensional_chain_matches_cosine_oracle() {
    for (kind, seed) in [(ChainKind::MatrixWalk, 41), (ChainKind::Eigenphase, 42)] {
        let (mean, se) = chain_cos_theta(kind, seed);
        assert!(((mean - 0.5) / se).abs() <= 4.0, "{kind:?}: {mean} +- {se}");
    }
}

#[test]
fn chain_at_alpha_zero_is_haar() {
    let m = 3;
    let cfg = McmcConfig::matrix_walk(m).with_chain_length(20_000);
    let run = mcmc_unitary_chain(m, 0.0, &mut RngStream::new(43, 0), cfg).unwrap();
    assert_eq!(run.diagnostics.accepted, run.diagnostics.proposed);
    let v: Vec<f64> = run.unitaries.iter().map(|u| u[(0, 0)].norm_sqr()).collect();
    let (mean, se) = batch_means(&v, BATCH_COUNT).unwrap();
    assert!(((mean - 1.0 / 3.0) / se).abs() <= 4.0, "{mean} +- {se}");
}

#[test]
fn chain_trajectory_is_reproducible() {
    let cfg = McmcConfig::matrix_walk(2).with_chain_length(20);
    let a = mcmc_unitary_chain(2, 1.5, &mut RngStream::new(44, 3), cfg).unwrap();
    let b = mcmc_unitary_chain(2, 1.5, &mut RngStream::new(44, 3), cfg).unwrap();
    assert_eq!(a.unitaries, b.unitaries);
    let c = mcmc_unitary_chain(2, 1.5, &mut RngStream::new(44, 4), cfg).unwrap();
    assert_ne!(a.unitaries, c.unitaries);
}

#[test]
fn scalar_states_give_exact_zero() {
    for pair in Pair::ALL {
        let q = PairQuery::new(pair, 1, 1.0, 1.0).unwrap();
        let e = estimate_relative_entropy(&q, &SamplingPlan::new(200, 1)).unwrap();
        assert_eq!(e.estimate.mean, 0.0);
        assert_eq!(e.estimate.stderr, 0.0);
        assert!(compare(&e.estimate, 0.0).pass);
    }
}

#[test]
fn bures_hall_against_hilbert_schmidt_at_m2() {
    let q = PairQuery::new(Pair::BH_HS, 2, 2.0, 2.0).unwrap();
    let e = estimate_relative_entropy(&q, &SamplingPlan::new(N, 45)).unwrap();
    assert_z(&e.estimate, avg_relative_entropy(&q).unwrap(), "bh-hs (2,2,2)");
}

#[test]
fn thread_count_does_not_change_estimates() {
    let q = PairQuery::new(Pair::BH_BH, 2, 3.0, 2.0).unwrap();
    let plan = SamplingPlan::new(2_000, 46);
    let one = estimate_relative_entropy(&q, &plan).unwrap();
    let four = estimate_relative_entropy(&q, &plan.with_threads(4)).unwrap();
    assert_eq!(one, four);
    let other = estimate_relative_entropy(&q, &SamplingPlan::new(2_000, 47)).unwrap();
    assert_ne!(one.estimate.mean, other.estimate.mean);
}

#[test]
fn unitary_columns_stay_orthonormal_along_chain() {
    let cfg = McmcConfig::matrix_walk(4).with_chain_length(200);
    let run = mcmc_unitary_chain(4, 2.0, &mut RngStream::new(48, 0), cfg).unwrap();
    let id = CMatrix::identity(4, 4);
    for u in &run.unitaries {
        let d = (u.adjoint() * u - &id)
            .iter()
            .map(|z: &Complex64| z.norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{d:e}");
    }
}
