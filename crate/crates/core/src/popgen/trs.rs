//! Truncate, replicate, sample: integerise fractional weights.

use rand::Rng;

/// Integer counts whose total is `round(sum(weights))`.
///
/// Each cell keeps `floor(weight)`. The remaining units are drawn without
/// replacement with probability proportional to the fractional parts, using
/// systematic sampling so each cell's inclusion probability is exactly its
/// scaled fractional part (capped at one).
pub fn trs_integerise<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<u64> {
    let total: f64 = weights.iter().sum();
    let target = total.round() as u64;
    let mut counts: Vec<u64> = weights.iter().map(|w| w.floor() as u64).collect();
    let truncated: u64 = counts.iter().sum();
    let remaining = target.saturating_sub(truncated);
    if remaining == 0 {
        return counts;
    }

    let frac: Vec<f64> = weights.iter().map(|w| w - w.floor()).collect();
    let probs = inclusion_probabilities(&frac, remaining as f64);

    let start: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut next = start;
    let mut taken = 0;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p;
        while next < cumulative && taken < remaining {
            counts[i] += 1;
            taken += 1;
            next += 1.0;
        }
    }
    // float drift can leave the last point just past the final cumulative sum
    if taken < remaining {
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1);
        counts[last] += remaining - taken;
    }
    counts
}

/// Proportional-to-size inclusion probabilities summing to `n`, each capped at one.
fn inclusion_probabilities(size: &[f64], n: f64) -> Vec<f64> {
    let mut p = vec![0.0; size.len()];
    let mut capped = vec![false; size.len()];
    let mut left = n;
    loop {
        let mass: f64 = size.iter().zip(&capped).filter(|(_, c)| !**c).map(|(s, _)| s).sum();
        if mass <= 0.0 {
            break;
        }
        let mut changed = false;
        for i in 0..size.len() {
            if capped[i] {
                continue;
            }
            p[i] = left * size[i] / mass;
            if p[i] >= 1.0 {
                capped[i] = true;
                p[i] = 1.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        left = n - capped.iter().filter(|c| **c).count() as f64;
        if left <= 0.0 {
            for i in 0..size.len() {
                if !capped[i] {
                    p[i] = 0.0;
                }
            }
            break;
        }
    }
    p
}
