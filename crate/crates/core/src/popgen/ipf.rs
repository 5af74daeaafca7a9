//! Iterative proportional fitting of a multi-way seed table to one-way
//! marginal targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub name: String,
    pub categories: Vec<String>,
}

/// Dense table over the cartesian product of `dimensions`, row-major with the
/// last dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedTable {
    pub dimensions: Vec<Dimension>,
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marginal {
    pub dimension: String,
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarginalSet {
    pub marginals: Vec<Marginal>,
}

impl SeedTable {
    pub fn shape(&self) -> Vec<usize> {
        self.dimensions.iter().map(|d| d.categories.len()).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    /// Category index of every dimension for a flat cell index.
    pub fn unravel(&self, mut cell: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for (d, &n) in shape.iter().enumerate().rev() {
            out[d] = cell % n;
            cell /= n;
        }
        out
    }

    /// For dimension `d`, the category of each cell.
    fn category_map(&self, d: usize) -> Vec<usize> {
        let shape = self.shape();
        let stride: usize = shape[d + 1..].iter().product();
        let n = shape[d];
        (0..self.cell_count()).map(|c| (c / stride) % n).collect()
    }

    /// Marginal sums of `weights` along dimension `d`.
    pub fn marginal_of(&self, weights: &[f64], d: usize) -> Vec<f64> {
        let map = self.category_map(d);
        let mut out = vec![0.0; self.dimensions[d].categories.len()];
        for (w, &c) in weights.iter().zip(&map) {
            out[c] += w;
        }
        out
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::Parameter("seed table has no dimensions".into()));
        }
        if self.dimensions.iter().any(|d| d.categories.is_empty()) {
            return Err(Error::Parameter("seed table dimension with no categories".into()));
        }
        if self.cells.len() != self.cell_count() {
            return Err(Error::Parameter(format!(
                "seed table has {} cells, expected {}",
                self.cells.len(),
                self.cell_count()
            )));
        }
        if self.cells.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter("seed table weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

impl MarginalSet {
    pub fn total(&self) -> f64 {
        self.marginals.first().map(|m| m.counts.iter().sum()).unwrap_or(0.0)
    }

    /// Rescale every marginal so it sums to `total`.
    pub fn scaled_to(&self, total: f64) -> MarginalSet {
        MarginalSet {
            marginals: self
                .marginals
                .iter()
                .map(|m| {
                    let s: f64 = m.counts.iter().sum();
                    Marginal {
                        dimension: m.dimension.clone(),
                        counts: m.counts.iter().map(|c| c * total / s).collect(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpfFit {
    pub weights: Vec<f64>,
    pub converged: bool,
    pub sweeps: u32,
    /// Largest per-dimension total absolute error after the final sweep.
    pub max_error: f64,
    /// Summed total absolute error over all fitted dimensions, after each sweep.
    pub error_history: Vec<f64>,
}

struct Target {
    counts: Vec<f64>,
    map: Vec<usize>,
}

fn errors(weights: &[f64], targets: &[Target]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for t in targets {
        let mut m = vec![0.0; t.counts.len()];
        for (w, &c) in weights.iter().zip(&t.map) {
            m[c] += w;
        }
        let e: f64 = m.iter().zip(&t.counts).map(|(a, b)| (a - b).abs()).sum();
        sum += e;
        max = max.max(e);
    }
    (sum, max)
}

/// Scale `seed` until each targeted marginal is within `tol` total absolute
/// error of its target, or `max_iter` sweeps have run.
///
/// Zero cells stay zero. A positive target over a slice with no seed mass
/// can never be met and is reported as [`Error::Infeasible`].
pub fn ipf_fit(seed: &SeedTable, targets: &MarginalSet, tol: f64, max_iter: u32) -> Result<IpfFit> {
    seed.check_shape()?;
    if !(tol > 0.0) {
        return Err(Error::Parameter("IPF tolerance must be positive".into()));
    }
    if targets.marginals.is_empty() {
        return Err(Error::Parameter("no marginal targets".into()));
    }

    let total = targets.total();
    let mut prepared = Vec::with_capacity(targets.marginals.len());
    for m in &targets.marginals {
        let d = seed.dimension_index(&m.dimension).ok_or_else(|| {
            Error::Parameter(format!("marginal for unknown dimension '{}'", m.dimension))
        })?;
        let dim = &seed.dimensions[d];
        if m.counts.len() != dim.categories.len() {
            return Err(Error::Parameter(format!(
                "marginal '{}' has {} counts for {} categories",
                m.dimension,
                m.counts.len(),
                dim.categories.len()
            )));
        }
        if m.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Parameter(format!("marginal '{}' has a negative count", m.dimension)));
        }
        let s: f64 = m.counts.iter().sum();
        if (s - total).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(Error::Parameter(format!(
                "marginal totals differ: '{}' sums to {s}, expected {total}",
                m.dimension
            )));
        }
        let have = seed.marginal_of(&seed.cells, d);
        for (k, (&target, &mass)) in m.counts.iter().zip(&have).enumerate() {
            if target > 0.0 && mass <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "{}={} has target {target} but no seed mass",
                    dim.name, dim.categories[k]
                )));
            }
        }
        prepared.push(Target { counts: m.counts.clone(), map: seed.category_map(d) });
    }

    let mut w = seed.cells.clone();
    let mut history = Vec::new();
    let (_, mut err_max) = errors(&w, &prepared);
    let mut sweeps = 0;
    while err_max > tol && sweeps < max_iter {
        for t in &prepared {
            let mut current = vec![0.0; t.counts.len()];
            for (x, &c) in w.iter().zip(&t.map) {
                current[c] += x;
            }
            let factor: Vec<f64> = current
                .iter()
                .zip(&t.counts)
                .map(|(&have, &want)| if have > 0.0 { want / have } else { 0.0 })
                .collect();
            for (x, &c) in w.iter_mut().zip(&t.map) {
                *x *= factor[c];
            }
        }
        sweeps += 1;
        let (err_sum, e) = errors(&w, &prepared);
        err_max = e;
        history.push(err_sum);
    }

    Ok(IpfFit { weights: w, converged: err_max <= tol, sweeps, max_error: err_max, error_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng_stream;
    use rand::Rng;

    fn dims(shape: &[usize]) -> Vec<Dimension> {
        shape
            .iter()
            .enumerate()
            .map(|(i, &n)| Dimension {
                name: format!("d{i}"),
                categories: (0..n).map(|k| format!("c{k}")).collect(),
            })
            .collect()
    }

    fn marginals(pairs: &[(&str, &[f64])]) -> MarginalSet {
        MarginalSet {
            marginals: pairs
                .iter()
                .map(|(d, c)| Marginal { dimension: d.to_string(), counts: c.to_vec() })
                .collect(),
        }
    }

    #[test]
    fn uniform_two_by_two_is_outer_product() {
        let seed = SeedTable { dimensions: dims(&[2, 2]), cells: vec![1.0; 4] };
        let t = marginals(&[("d0", &[10.0, 20.0]), ("d1", &[15.0, 15.0])]);
        let fit = ipf_fit(&seed, &t, 1e-12, 100).unwrap();
        assert!(fit.converged);
        let expected = [5.0, 5.0, 10.0, 10.0];
        for (a, b) in fit.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{:?}", fit.weights);
        }
    }

    #[test]
    fn structural_zero_blocking_target_is_infeasible() {
        // category d0=c1 has no seed mass at all
        let seed = SeedTable { dimensions: dims(&[2, 2]), cells: vec![1.0, 1.0, 0.0, 0.0] };
        let t = marginals(&[("d0", &[10.0, 20.0]), ("d1", &[15.0, 15.0])]);
        match ipf_fit(&seed, &t, 1e-9, 100) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("d0=c1"), "{msg}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_cells_are_preserved() {
        let seed = SeedTable { dimensions: dims(&[2, 3]), cells: vec![1.0, 0.0, 2.0, 1.0, 1.0, 0.0] };
        let t = marginals(&[("d0", &[40.0, 60.0]), ("d1", &[40.0, 25.0, 35.0])]);
        let fit = ipf_fit(&seed, &t, 1e-10, 500).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.weights[1], 0.0);
        assert_eq!(fit.weights[5], 0.0);
    }

    #[test]
    fn random_three_way_matches_marginals() {
        let mut rng = derive_rng_stream(7, "test/ipf", 0);
        let shape = [4, 3, 2];
        let n: usize = shape.iter().product();
        let seed = SeedTable {
            dimensions: dims(&shape),
            cells: (0..n).map(|_| rng.random_range(0.1..5.0)).collect(),
        };
        // targets from a different random table guarantee consistency
        let other: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let t = MarginalSet {
            marginals: (0..3)
                .map(|d| Marginal { dimension: format!("d{d}"), counts: seed.marginal_of(&other, d) })
                .collect(),
        };
        let fit = ipf_fit(&seed, &t, 1e-10, 1000).unwrap();
        assert!(fit.converged);
        for d in 0..3 {
            // direct summation of fitted cells
            for (k, want) in t.marginals[d].counts.iter().enumerate() {
                let have: f64 = (0..n)
                    .filter(|&c| seed.unravel(c)[d] == k)
                    .map(|c| fit.weights[c])
                    .sum();
                assert!((have - want).abs() < 1e-8, "dim {d} cat {k}: {have} vs {want}");
            }
        }
    }

    #[test]
    fn inconsistent_totals_rejected() {
        let seed = SeedTable { dimensions: dims(&[2, 2]), cells: vec![1.0; 4] };
        let t = marginals(&[("d0", &[10.0, 20.0]), ("d1", &[15.0, 16.0])]);
        assert!(matches!(ipf_fit(&seed, &t, 1e-9, 10), Err(Error::Parameter(_))));
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = derive_rng_stream(8, "test/ipf", 0);
        let seed = SeedTable {
            dimensions: dims(&[5, 5]),
            cells: (0..25).map(|_| rng.random_range(0.01..10.0)).collect(),
        };
        let t = marginals(&[
            ("d0", &[1.0, 100.0, 3.0, 50.0, 46.0]),
            ("d1", &[90.0, 1.0, 1.0, 1.0, 107.0]),
        ]);
        let fit = ipf_fit(&seed, &t, 1e-14, 1).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 1);
    }

    #[test]
    fn unravel_matches_row_major() {
        let seed = SeedTable { dimensions: dims(&[2, 3, 4]), cells: vec![1.0; 24] };
        assert_eq!(seed.unravel(0), vec![0, 0, 0]);
        assert_eq!(seed.unravel(5), vec![0, 1, 1]);
        assert_eq!(seed.unravel(23), vec![1, 2, 3]);
    }
}
