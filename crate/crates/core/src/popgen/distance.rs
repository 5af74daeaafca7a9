//! Commute distances: mode-specific sampling and category classification.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::{CommuteCategory, TransportMode};

/// Upper edge of the local band, metres (inclusive).
pub const LOCAL_MAX_M: f64 = 4_943.0;
/// Upper edge of the city band, metres (inclusive).
pub const CITY_MAX_M: f64 = 20_059.0;

/// Draws needed before giving up on a distance specification. At an
/// acceptance rate of 1e-6 this fails with probability e^-10.
pub const MAX_DRAWS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Untruncated distance law in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceSpec {
    LogNormal { mu: f64, sigma: f64 },
    Mixture { components: Vec<GaussianComponent> },
}

impl DistanceSpec {
    pub fn check(&self) -> std::result::Result<(), String> {
        match self {
            DistanceSpec::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && *sigma > 0.0) {
                    return Err(format!("log-normal needs finite mu and sigma > 0 (got {mu}, {sigma})"));
                }
            }
            DistanceSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err("mixture has no components".into());
                }
                for c in components {
                    if !(c.weight > 0.0 && c.sd > 0.0 && c.mean.is_finite()) {
                        return Err("mixture components need weight > 0, sd > 0".into());
                    }
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistanceSpec::LogNormal { mu, sigma } => {
                LogNormal::new(*mu, *sigma).expect("checked").sample(rng)
            }
            DistanceSpec::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut u = rng.random::<f64>() * total;
                let mut chosen = components.last().expect("non-empty");
                for c in components {
                    if u < c.weight {
                        chosen = c;
                        break;
                    }
                    u -= c.weight;
                }
                Normal::new(chosen.mean, chosen.sd).expect("checked").sample(rng)
            }
        }
    }
}

/// Longest admissible commute for a mode, metres.
pub fn mode_bound(mode: TransportMode) -> f64 {
    match mode {
        TransportMode::Walk => 10_000.0,
        TransportMode::Cycle => 40_000.0,
        TransportMode::PublicTransport | TransportMode::Car => 80_000.0,
    }
}

/// Half-open range `(low, high]` of distances in a category.
pub fn category_range(c: CommuteCategory) -> (f64, f64) {
    match c {
        CommuteCategory::Local => (0.0, LOCAL_MAX_M),
        CommuteCategory::City => (LOCAL_MAX_M, CITY_MAX_M),
        CommuteCategory::Beyond => (CITY_MAX_M, f64::INFINITY),
    }
}

pub fn classify_commute(distance_m: f64) -> Result<CommuteCategory> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Parameter(format!("commute distance must be positive, got {distance_m}")));
    }
    Ok(if distance_m <= LOCAL_MAX_M {
        CommuteCategory::Local
    } else if distance_m <= CITY_MAX_M {
        CommuteCategory::City
    } else {
        CommuteCategory::Beyond
    })
}

fn rejection_sample<R: Rng + ?Sized>(
    spec: &DistanceSpec,
    low: f64,
    high: f64,
    rng: &mut R,
    what: impl FnOnce() -> String,
) -> Result<f64> {
    spec.check().map_err(Error::Parameter)?;
    for _ in 0..MAX_DRAWS {
        let d = spec.draw(rng);
        if d > low && d <= high {
            return Ok(d);
        }
    }
    Err(Error::Sampling(format!(
        "no admissible {} after {MAX_DRAWS} draws; acceptance probability is below 1e-6",
        what()
    )))
}

/// Draw from `spec`, redrawing until the value lies in `(0, mode_bound(mode)]`.
pub fn sample_commute_distance<R: Rng + ?Sized>(
    mode: TransportMode,
    spec: &DistanceSpec,
    rng: &mut R,
) -> Result<f64> {
    rejection_sample(spec, 0.0, mode_bound(mode), rng, || format!("{mode} distance"))
}

/// As [`sample_commute_distance`], additionally restricted to `category`.
pub fn sample_commute_distance_in<R: Rng + ?Sized>(
    mode: TransportMode,
    category: CommuteCategory,
    spec: &DistanceSpec,
    rng: &mut R,
) -> Result<f64> {
    let (low, high) = category_range(category);
    let high = high.min(mode_bound(mode));
    if high <= low {
        return Err(Error::Sampling(format!("{mode} cannot reach a {category} commute")));
    }
    rejection_sample(spec, low, high, rng, || format!("{mode} distance in {category} band"))
}
