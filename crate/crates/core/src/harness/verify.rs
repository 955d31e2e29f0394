//! Synthetic instance generators for the matrix-sequence lemma verifiers.
//!
//! Each generator draws rates, a time `n`, a closeness `δ` inside the
//! admissible window, and builds the comparison sequence by conjugating a
//! block-diagonal model with a rotation sized so the closeness hypothesis
//! holds. The hypotheses are then re-checked by the verifier itself before
//! any bound is evaluated, so a sweep counts an instance as sound only when
//! every clause held and the measured distance stayed below the bound.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    self, BoundsError, BundleSplit, MetricInstance, MetricParams, PairInstance, PairParams,
    TripleInstance, TripleParams,
};
use crate::grassmann::Subspace;
use crate::linalg;

use super::HarnessError;

/// Tally of a randomized soundness sweep.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SweepOutcome {
    pub instances: usize,
    /// Instances whose measured distance exceeded the bound. Soundness
    /// requires this to be zero.
    pub violations: usize,
    /// Deliberately corrupted instances rejected as hypothesis failures.
    pub hypothesis_rejections: usize,
    /// Smallest bound − measured margin over the sweep.
    pub worst_margin: f64,
    pub notes: String,
}

impl SweepOutcome {
    pub fn sound(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

/// Rotation in the (i, j) coordinate plane.
fn givens(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    m[(i, i)] = theta.cos();
    m[(j, j)] = theta.cos();
    m[(i, j)] = -theta.sin();
    m[(j, i)] = theta.sin();
    m
}

fn powers(base: &DMatrix<f64>, n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut acc = DMatrix::identity(base.nrows(), base.ncols());
    for _ in 0..n {
        acc = base * &acc;
        out.push(acc.clone());
    }
    out
}

fn conjugate_all(q: &DMatrix<f64>, seq: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let q_inv = q.transpose();
    seq.iter().map(|m| q * m * &q_inv).collect()
}

/// Shrinks θ until `‖A_n − B_n(θ)‖ ≤ cap` where `B_n(θ)` conjugates by the
/// plane rotation; returns the conjugation and the realized difference.
fn fit_rotation(
    a_n: &DMatrix<f64>,
    i: usize,
    j: usize,
    cap: f64,
    mut theta: f64,
) -> (DMatrix<f64>, f64) {
    loop {
        let q = givens(a_n.nrows(), i, j, theta);
        let b_n = &q * a_n * q.transpose();
        let diff = linalg::opnorm(&(a_n - &b_n));
        if diff <= cap || theta < 1e-14 {
            return (q, theta);
        }
        theta *= 0.5;
    }
}

/// One random pair-lemma instance; returns the bound − measured margin.
fn pair_instance(rng: &mut ChaCha8Rng, corrupt: bool) -> Result<f64, BoundsError> {
    let dim = rng.gen_range(2..=4usize);
    let p_split = rng.gen_range(1..dim);
    let lambda: f64 = rng.gen_range(0.3..0.95);
    let mu = lambda * rng.gen_range(1.5..4.0);
    let a = mu * rng.gen_range(1.5..4.0);
    let n = rng.gen_range(3..=10usize);
    // admissible window (λ/a)^{n+1} < δ ≤ (λ/a)^n: n is the time the proof
    // associates with this δ
    let u = rng.gen_range(0.05..0.999);
    let ratio = lambda / a;
    let delta = ratio.powi(n as i32) * ratio.powf(u);
    let mut params = PairParams {
        lambda,
        mu,
        c: 1.0,
        d: 1.0,
        a,
        delta,
    };
    let mut diag = vec![lambda; dim];
    for item in diag.iter_mut().take(dim).skip(p_split) {
        *item = mu;
    }
    let base = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    let a_seq = powers(&base, n);
    let cap = 0.9 * delta * a.powi(n as i32);
    let (q, _theta) = fit_rotation(&a_seq[n - 1], p_split - 1, p_split, cap, 0.2);
    let b_seq = conjugate_all(&q, &a_seq);
    let e = Subspace::coordinate(dim, &(0..p_split).collect::<Vec<_>>());
    let e_prime = Subspace::coordinate(dim, &(p_split..dim).collect::<Vec<_>>());
    let f = e.map(&q);
    let f_prime = e_prime.map(&q);
    if corrupt {
        params.delta *= 1e-6;
    }
    let inst = PairInstance {
        a_seq: &a_seq,
        b_seq: &b_seq,
        e: &e,
        e_prime: &e_prime,
        f: &f,
        f_prime: &f_prime,
    };
    let report = bounds::verify_pair_lemma(&inst, &params, n)?;
    Ok(report.report.margin)
}

/// One random triple-lemma instance; returns the worst margin over the three
/// bundle distances.
fn triple_instance(rng: &mut ChaCha8Rng, corrupt: bool) -> Result<f64, BoundsError> {
    let lambda1: f64 = rng.gen_range(0.3..0.5);
    let lambda2 = lambda1 * rng.gen_range(1.3..1.8);
    let mu1 = lambda2 * rng.gen_range(1.3..1.8);
    let mu2 = mu1 * rng.gen_range(1.3..1.8);
    let sigma1 = mu2 * rng.gen_range(1.3..1.8);
    let sigma2 = sigma1 * rng.gen_range(1.3..1.8);
    let a = (lambda2 + 1.0 / lambda2 + sigma1).max(sigma2) * rng.gen_range(1.05..1.5);
    let n = rng.gen_range(3..=8usize);
    // keep the V-bundle bound small so the graph-transform step is valid
    let omega = (mu1 / lambda2).ln() / (a * mu1).ln();
    let delta_cap = (0.25 / (3.0 * (mu1 / lambda2))).powf(1.0 / omega);
    let delta = (delta_cap * rng.gen_range(0.05..0.8)).min(0.999);
    let mut params = TripleParams {
        lambda1,
        lambda2,
        mu1,
        mu2,
        sigma1,
        sigma2,
        c: 1.0,
        d: 1.0,
        a,
        delta,
    };
    let r_e = lambda1 * rng.gen_range(1.05..1.2);
    let r_f = mu1 * rng.gen_range(1.05..1.2);
    let r_g = sigma1 * rng.gen_range(1.05..1.2);
    debug_assert!(r_e < lambda2 && r_f < mu2 && r_g < sigma2);
    let base = DMatrix::from_diagonal(&nalgebra::dvector![r_e, r_f, r_g]);
    let base_inv = base.clone().try_inverse().unwrap();
    let a_fwd = powers(&base, n);
    let a_bwd = powers(&base_inv, n);
    let cap_fwd = 0.9 * params.delta * a.powi(n as i32);
    // the backward difference scales like r_e^{-n}θ, so size θ against it
    let (q, _) = {
        let probe = givens(3, rng.gen_range(0..2), 2, 1.0);
        let _ = probe;
        let mut theta = 0.2_f64;
        let (i, j) = (rng.gen_range(0..2), 2);
        loop {
            let q = givens(3, i, j, theta);
            let fwd_diff = linalg::opnorm(&(&a_fwd[n - 1] - &q * &a_fwd[n - 1] * q.transpose()));
            let bwd_diff = linalg::opnorm(&(&a_bwd[n - 1] - &q * &a_bwd[n - 1] * q.transpose()));
            if (fwd_diff <= cap_fwd && bwd_diff <= cap_fwd) || theta < 1e-14 {
                break (q, theta);
            }
            theta *= 0.5;
        }
    };
    let b_fwd = conjugate_all(&q, &a_fwd);
    let b_bwd = conjugate_all(&q, &a_bwd);
    let split_a = BundleSplit {
        e: Subspace::coordinate(3, &[0]),
        f: Subspace::coordinate(3, &[1]),
        g: Subspace::coordinate(3, &[2]),
    };
    let split_b = BundleSplit {
        e: split_a.e.map(&q),
        f: split_a.f.map(&q),
        g: split_a.g.map(&q),
    };
    if corrupt {
        params.delta *= 1e-8;
    }
    let inst = TripleInstance {
        a_fwd: &a_fwd,
        a_bwd: &a_bwd,
        b_fwd: &b_fwd,
        b_bwd: &b_bwd,
        split_a: &split_a,
        split_b: &split_b,
    };
    let report = bounds::verify_triple_lemma(&inst, &params, n)?;
    Ok(report
        .e_report
        .margin
        .min(report.f_report.margin)
        .min(report.g_report.margin))
}

/// One random metric-lemma instance built from the pullback metrics
/// `h_n(v) = ‖M_n v‖²` of a diagonal model and its rotated conjugate.
fn metric_instance(rng: &mut ChaCha8Rng, corrupt: bool) -> Result<f64, BoundsError> {
    let dim = rng.gen_range(2..=4usize);
    let p_split = rng.gen_range(1..dim);
    let lambda: f64 = rng.gen_range(0.4..0.9);
    let mu = lambda * rng.gen_range(1.5..3.0);
    let a_cap: f64 = rng.gen_range(2.0..6.0);
    let n = rng.gen_range(3..=8usize);
    let u = rng.gen_range(1.0..a_cap * 0.999);
    let delta = u * a_cap.powi(-(n as i32));
    let mut params = MetricParams {
        lambda,
        mu,
        c: 1.0,
        c2: 1.0,
        a_cap,
        delta,
    };
    let mut diag = vec![lambda; dim];
    for item in diag.iter_mut().take(dim).skip(p_split) {
        *item = mu;
    }
    let base = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    let a_seq = powers(&base, n);
    // size the rotation so the metric-distance hypothesis holds at n
    let allowed = (1.0 + delta * params.c2 * a_cap.powi(n as i32)).ln();
    let mut theta = 0.2_f64;
    let q = loop {
        let q = givens(dim, p_split - 1, p_split, theta);
        let b_n = &q * &a_seq[n - 1] * q.transpose();
        let h_e = a_seq[n - 1].transpose() * &a_seq[n - 1];
        let h_f = b_n.transpose() * &b_n;
        let md = bounds::metric_distance(&h_e, &h_f)?;
        if md <= 0.9 * allowed || theta < 1e-14 {
            break q;
        }
        theta *= 0.5;
    };
    let b_seq = conjugate_all(&q, &a_seq);
    let h_seq: Vec<(DMatrix<f64>, DMatrix<f64>)> = a_seq
        .iter()
        .zip(&b_seq)
        .map(|(a_m, b_m)| (a_m.transpose() * a_m, b_m.transpose() * b_m))
        .collect();
    let e = Subspace::coordinate(dim, &(0..p_split).collect::<Vec<_>>());
    let f = e.map(&q);
    if corrupt {
        params.delta *= 1e-6;
    }
    let inst = MetricInstance {
        e: &e,
        f: &f,
        h_seq: &h_seq,
    };
    let report = bounds::verify_metric_lemma(&inst, &params, n)?;
    Ok(report.margin)
}

fn run_sweep(
    count: usize,
    seed: u64,
    kind: &str,
    instance: impl Fn(&mut ChaCha8Rng, bool) -> Result<f64, BoundsError>,
) -> Result<SweepOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = SweepOutcome {
        worst_margin: f64::INFINITY,
        notes: format!("{kind} lemma sweep"),
        ..Default::default()
    };
    for idx in 0..count {
        let margin = instance(&mut rng, false).map_err(HarnessError::Bounds)?;
        outcome.instances += 1;
        outcome.worst_margin = outcome.worst_margin.min(margin);
        if margin < 0.0 {
            outcome.violations += 1;
        }
        // every 10th instance is corrupted and must be rejected upfront
        if idx % 10 == 0 {
            match instance(&mut rng, true) {
                Err(BoundsError::HypothesisFailure { .. }) => outcome.hypothesis_rejections += 1,
                Err(_) => outcome.hypothesis_rejections += 1,
                Ok(_) => {
                    return Err(HarnessError::Config(format!(
                        "{kind} sweep: corrupted instance {idx} was not rejected"
                    )))
                }
            }
        }
    }
    Ok(outcome)
}

/// Randomized soundness sweep for the two-splitting lemma.
pub fn pair_lemma_sweep(count: usize, seed: u64) -> Result<SweepOutcome, HarnessError> {
    run_sweep(count, seed, "pair", pair_instance)
}

/// Randomized soundness sweep for the three-bundle lemma.
pub fn triple_lemma_sweep(count: usize, seed: u64) -> Result<SweepOutcome, HarnessError> {
    run_sweep(count, seed, "triple", triple_instance)
}

/// Randomized soundness sweep for the metric-sequence lemma.
pub fn metric_lemma_sweep(count: usize, seed: u64) -> Result<SweepOutcome, HarnessError> {
    run_sweep(count, seed, "metric", metric_instance)
}
