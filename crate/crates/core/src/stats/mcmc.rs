//! Adaptive random-walk Metropolis.
//!
//! Proposals are `x + s * L z` with `z` standard normal and `L` the Cholesky
//! factor of a proposal covariance. During warm-up the log step size `s`
//! follows a Robbins-Monro recursion towards an acceptance rate of 0.234 and
//! the covariance is re-estimated at the end of doubling windows; both are
//! frozen for the sampling phase, so the retained draws come from a fixed
//! Markov kernel.

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::derive_rng_stream;

const TARGET_ACCEPT: f64 = 0.234;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSettings {
    pub chains: u32,
    pub warmup: u32,
    pub draws: u32,
    /// Random-walk steps per recorded iteration.
    pub steps_per_draw: u32,
    pub seed: u64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings { chains: 4, warmup: 1000, draws: 1000, steps_per_draw: 10, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// `draws[i]` is the parameter vector at retained iteration `i`.
    pub draws: Vec<Vec<f64>>,
    pub warmup_acceptance: f64,
    pub acceptance: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub dims: usize,
    pub chains: Vec<Chain>,
}

impl Samples {
    /// Draws of parameter `k`, one vector per chain.
    pub fn parameter(&self, k: usize) -> Vec<Vec<f64>> {
        self.transform(|x| x[k])
    }

    /// A function of the parameter vector evaluated draw by draw.
    pub fn transform(&self, f: impl Fn(&[f64]) -> f64) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.draws.iter().map(|x| f(x)).collect()).collect()
    }
}

/// Stan-like warm-up schedule: a fast initial phase, doubling covariance
/// windows, and a final stretch adapting the step size only.
fn window_ends(warmup: usize) -> Vec<usize> {
    if warmup < 20 {
        return Vec::new();
    }
    let start = warmup * 15 / 100;
    let end = warmup * 90 / 100;
    let mut ends = Vec::new();
    let mut len = ((end - start) / 15).max(1);
    let mut at = start;
    while at + len < end {
        at += len;
        ends.push(at);
        len *= 2;
        if at + 2 * len > end {
            ends.push(end);
            break;
        }
    }
    ends.dedup();
    ends
}

fn regularised_covariance(window: &[Vec<f64>], dims: usize) -> DMatrix<f64> {
    let n = window.len() as f64;
    let mean = DVector::from_fn(dims, |j, _| window.iter().map(|x| x[j]).sum::<f64>() / n);
    let mut cov = DMatrix::zeros(dims, dims);
    for x in window {
        let d = DVector::from_fn(dims, |j, _| x[j] - mean[j]);
        cov += &d * d.transpose();
    }
    cov /= (n - 1.0).max(1.0);
    // shrink towards a small diagonal, as Stan does for its metric
    let w = n / (n + 5.0);
    cov * w + DMatrix::identity(dims, dims) * (1e-3 * (1.0 - w) + 1e-12)
}

fn cholesky(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let mut jitter = 0.0;
    loop {
        let m = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * jitter;
        if let Some(c) = m.cholesky() {
            return c.l();
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    }
}

fn run_chain<F>(log_post: &F, dims: usize, s: &SamplerSettings, chain: u32) -> Result<Chain>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut rng = derive_rng_stream(s.seed, "mcmc", chain as u64);
    let k = s.steps_per_draw.max(1) as usize;
    let mut x = vec![0.0; dims];
    let mut lp = log_post(&x);
    if !lp.is_finite() {
        return Err(Error::Sampling(format!("log posterior not finite at the initial point ({lp})")));
    }
    let base_log_step = (2.38 / (dims as f64).sqrt()).ln();
    let mut log_step = base_log_step;
    let mut chol = DMatrix::identity(dims, dims);
    let mut proposal = vec![0.0; dims];

    let mut step = |x: &mut Vec<f64>, lp: &mut f64, log_step: f64, chol: &DMatrix<f64>, rng: &mut _| -> f64 {
        let z = DVector::from_fn(dims, |_, _| rand::Rng::sample::<f64, _>(rng, StandardNormal));
        let delta = chol * z * log_step.exp();
        for j in 0..dims {
            proposal[j] = x[j] + delta[j];
        }
        let lp_new = log_post(&proposal);
        let accept_prob = if lp_new.is_nan() { 0.0 } else { (lp_new - *lp).exp().min(1.0) };
        if rand::Rng::random::<f64>(rng) < accept_prob {
            x.copy_from_slice(&proposal);
            *lp = lp_new;
        }
        accept_prob
    };

    let ends = window_ends(s.warmup as usize);
    let mut window: Vec<Vec<f64>> = Vec::new();
    let mut window_start = ends.first().map(|_| s.warmup as usize * 15 / 100).unwrap_or(usize::MAX);
    let mut next_end = 0;
    let mut adapt_t = 0u64;
    let mut accepted = 0.0;
    for it in 0..s.warmup as usize {
        for _ in 0..k {
            let a = step(&mut x, &mut lp, log_step, &chol, &mut rng);
            accepted += a;
            adapt_t += 1;
            log_step += (adapt_t as f64).powf(-0.6) * (a - TARGET_ACCEPT);
            log_step = log_step.clamp(-40.0, 10.0);
        }
        if it + 1 > window_start {
            window.push(x.clone());
        }
        if next_end < ends.len() && it + 1 == ends[next_end] {
            chol = cholesky(&regularised_covariance(&window, dims));
            window.clear();
            window_start = it + 1;
            next_end += 1;
            log_step = base_log_step;
            adapt_t = 0;
        }
    }
    let warmup_steps = (s.warmup as usize * k).max(1) as f64;
    if s.warmup > 0 && accepted == 0.0 {
        return Err(Error::Sampling(format!("chain {chain}: every warm-up proposal was rejected")));
    }

    let mut draws = Vec::with_capacity(s.draws as usize);
    let mut kept = 0.0;
    for _ in 0..s.draws {
        for _ in 0..k {
            kept += step(&mut x, &mut lp, log_step, &chol, &mut rng);
        }
        draws.push(x.clone());
    }
    Ok(Chain {
        draws,
        warmup_acceptance: accepted / warmup_steps,
        acceptance: kept / (s.draws as usize * k).max(1) as f64,
        step_size: log_step.exp(),
    })
}

/// Run `settings.chains` independent chains from the origin, each on its own
/// random stream, in parallel.
pub fn metropolis_sample<F>(log_post: &F, dims: usize, settings: &SamplerSettings) -> Result<Samples>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dims == 0 || settings.chains == 0 || settings.draws == 0 {
        return Err(Error::Parameter("sampler needs dims, chains and draws > 0".into()));
    }
    let chains = (0..settings.chains)
        .into_par_iter()
        .map(|c| run_chain(log_post, dims, settings, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Samples { dims, chains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rhat;

    fn pooled(s: &Samples, k: usize) -> Vec<f64> {
        s.parameter(k).into_iter().flatten().collect()
    }

    #[test]
    fn standard_normal_moments() {
        let s = metropolis_sample(&|x: &[f64]| -0.5 * x[0] * x[0], 1, &SamplerSettings::default()).unwrap();
        let v = pooled(&s, 0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
        assert!(rhat(&s.parameter(0)) < 1.01);
        for c in &s.chains {
            assert!((0.2..=0.5).contains(&c.acceptance), "acceptance {}", c.acceptance);
        }
    }

    #[test]
    fn correlated_narrow_target() {
        // strongly correlated, badly scaled 2-D Gaussian far from the origin
        let lp = |x: &[f64]| {
            let (a, b) = ((x[0] - 3.0) / 0.01, (x[0] + x[1] - 1.0) / 0.002);
            -0.5 * (a * a + b * b)
        };
        let s = metropolis_sample(&lp, 2, &SamplerSettings::default()).unwrap();
        let m0 = pooled(&s, 0).iter().sum::<f64>() / 4000.0;
        let m1 = pooled(&s, 1).iter().sum::<f64>() / 4000.0;
        assert!((m0 - 3.0).abs() < 0.003 && (m1 + 2.0).abs() < 0.003, "{m0} {m1}");
        assert!(rhat(&s.parameter(0)) < 1.01 && rhat(&s.parameter(1)) < 1.01);
    }

    #[test]
    fn deterministic_chains() {
        let lp = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let a = metropolis_sample(&lp, 3, &SamplerSettings { seed: 9, ..Default::default() }).unwrap();
        let b = metropolis_sample(&lp, 3, &SamplerSettings { seed: 9, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.chains[0].draws, a.chains[1].draws);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let lp = |x: &[f64]| if x[0] > 1.0 { 0.0 } else { f64::NEG_INFINITY };
        assert!(matches!(metropolis_sample(&lp, 1, &SamplerSettings::default()), Err(Error::Sampling(_))));
    }

    #[test]
    fn pathological_target_is_an_error() {
        // finite only at the origin itself
        let lp = |x: &[f64]| if x[0] == 0.0 { 0.0 } else { f64::NEG_INFINITY };
        let s = SamplerSettings { warmup: 50, draws: 10, ..Default::default() };
        assert!(matches!(metropolis_sample(&lp, 1, &s), Err(Error::Sampling(_))));
    }

    #[test]
    fn windows_are_increasing_and_inside_warmup() {
        let e = window_ends(1000);
        assert!(!e.is_empty());
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(*e.last().unwrap() <= 900);
        assert!(window_ends(10).is_empty());
    }
}
