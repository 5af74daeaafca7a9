use serde::Serialize;

/// Narrowest interval over the sorted samples that contains
/// `ceil(mass * N)` of them; ties go to the lowest start.
pub fn hpdi(samples: &[f64], mass: f64) -> (f64, f64) {
    assert!(!samples.is_empty(), "hpdi of no samples");
    assert!(mass > 0.0 && mass < 1.0, "mass must lie in (0, 1)");
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    // 0.89 * 100 is 89.00000000000001 in floating point
    let w = ((mass * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=n - w {
        let width = s[i + w - 1] - s[i];
        if width < best_width {
            best = i;
            best_width = width;
        }
    }
    (s[best], s[best + w - 1])
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Split-chain potential scale reduction: each chain is cut in half and the
/// classic between/within variance ratio is computed over the halves.
pub fn rhat(chains: &[Vec<f64>]) -> f64 {
    assert!(chains.len() >= 2, "split R-hat needs at least two chains");
    let len = chains[0].len();
    assert!(chains.iter().all(|c| c.len() == len), "chains must have equal length");
    let half = len / 2;
    assert!(half >= 2, "chains too short");
    let halves: Vec<&[f64]> = chains.iter().flat_map(|c| [&c[..half], &c[len - half..]]).collect();
    let stats: Vec<(f64, f64)> = halves.iter().map(|h| mean_var(h)).collect();
    let m = stats.len() as f64;
    let n = half as f64;
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
    let b = n * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub name: String,
    pub mean: f64,
    pub hpdi_low: f64,
    pub hpdi_high: f64,
    pub rhat: f64,
    /// Draws per chain.
    #[serde(skip)]
    pub chains: Vec<Vec<f64>>,
}

impl PosteriorSummary {
    pub fn from_chains(name: impl Into<String>, chains: Vec<Vec<f64>>, mass: f64) -> PosteriorSummary {
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let (hpdi_low, hpdi_high) = hpdi(&pooled, mass);
        let rhat = if chains.len() >= 2 { rhat(&chains) } else { f64::NAN };
        PosteriorSummary { name: name.into(), mean, hpdi_low, hpdi_high, rhat, chains }
    }

    pub fn pooled(&self) -> Vec<f64> {
        self.chains.iter().flatten().copied().collect()
    }

    pub fn excludes(&self, x: f64) -> bool {
        x < self.hpdi_low || x > self.hpdi_high
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng_stream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn brute_force(samples: &[f64], mass: f64) -> (f64, f64) {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let need = (mass * n as f64 - 1e-9).ceil() as usize;
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i..n {
                if j - i + 1 >= need {
                    let width = s[j] - s[i];
                    if best.is_none_or(|b| width < b.0) {
                        best = Some((width, i, j));
                    }
                    break;
                }
            }
        }
        let (_, i, j) = best.unwrap();
        (s[i], s[j])
    }

    #[test]
    fn integer_samples() {
        let s: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(hpdi(&s, 0.89), (1.0, 89.0));
    }

    #[test]
    fn point_mass() {
        assert_eq!(hpdi(&[3.0; 200], 0.89), (3.0, 3.0));
    }

    #[test]
    fn normal_interval() {
        let mut rng = derive_rng_stream(1, "test/hpdi", 0);
        let s: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let (lo, hi) = hpdi(&s, 0.89);
        assert!((lo + 1.598).abs() < 0.05 && (hi - 1.598).abs() < 0.05, "({lo}, {hi})");
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = derive_rng_stream(2, "test/hpdi", 0);
        for case in 0..100 {
            let n = rng.random_range(100..400);
            let s: Vec<f64> = (0..n)
                .map(|_| {
                    let x: f64 = rng.sample(StandardNormal);
                    // mix in skew and repeated values
                    if case % 3 == 0 { (x * 4.0).round() / 4.0 } else { x.exp() }
                })
                .collect();
            let mass = rng.random_range(0.5..0.99);
            assert_eq!(hpdi(&s, mass), brute_force(&s, mass), "case {case}");
        }
    }

    #[test]
    fn constant_chains_give_exactly_one() {
        assert_eq!(rhat(&[vec![2.0; 100], vec![2.0; 100]]), 1.0);
    }

    #[test]
    fn identical_chains_near_one() {
        let mut rng = derive_rng_stream(3, "test/rhat", 0);
        let c: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let r = rhat(&[c.clone(), c.clone(), c.clone(), c]);
        assert!((r - 1.0).abs() < 1e-2, "{r}");
    }

    #[test]
    fn disjoint_chains_flagged() {
        let mut rng = derive_rng_stream(4, "test/rhat", 0);
        let a: Vec<f64> = (0..1000).map(|_| -10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..1000).map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(rhat(&[a, b]) > 1.5);
    }

    #[test]
    fn well_mixed_chains_pass() {
        let mut rng = derive_rng_stream(5, "test/rhat", 0);
        let chains: Vec<Vec<f64>> =
            (0..4).map(|_| (0..1000).map(|_| rng.sample(StandardNormal)).collect()).collect();
        assert!(rhat(&chains) < 1.01);
    }

    proptest! {
        #[test]
        fn never_wider_than_equal_tailed(raw in prop::collection::vec(-50.0..50.0f64, 100..300), mass in 0.5..0.98f64) {
            let (lo, hi) = hpdi(&raw, mass);
            let mut s = raw.clone();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            let w = (mass * n as f64 - 1e-9).ceil() as usize;
            let tail = (n - w) / 2;
            let et = s[tail + w - 1] - s[tail];
            prop_assert!(hi - lo <= et);
            let inside = raw.iter().filter(|x| **x >= lo && **x <= hi).count();
            prop_assert!(inside >= w);
        }
    }
}
