//! Synthetic population: IPF to marginal targets, TRS integerisation,
//! bicycle-ownership imputation, and commute distance / initial mode draws.

mod distance;
pub mod io;
mod ipf;
mod trs;

pub use distance::{
    category_range, classify_commute, mode_bound, sample_commute_distance,
    sample_commute_distance_in, DistanceSpec, GaussianComponent, CITY_MAX_M, LOCAL_MAX_M,
};
pub use ipf::{ipf_fit, Dimension, IpfFit, Marginal, MarginalSet, SeedTable};
pub use trs::trs_integerise;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CategoryTable, PopulationConfig, ScenarioConfig};
use crate::error::{Error, Result};
use crate::mode::{CommuteCategory, ModeVector, TransportMode};
use crate::rng::derive_rng_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub dimension: String,
    pub category: String,
    pub value: f64,
}

/// Logistic model for bicycle access over seed-table attributes (dummy coded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BicycleModel {
    pub intercept: f64,
    pub coefficients: Vec<Coefficient>,
}

/// A [`BicycleModel`] resolved against a seed table's dimension layout.
#[derive(Debug, Clone)]
pub struct CompiledBicycleModel {
    intercept: f64,
    terms: Vec<(usize, usize, f64)>,
}

impl BicycleModel {
    pub fn compile(&self, dims: &[Dimension]) -> Result<CompiledBicycleModel> {
        let mut terms = Vec::with_capacity(self.coefficients.len());
        for c in &self.coefficients {
            let d = dims.iter().position(|d| d.name == c.dimension).ok_or_else(|| {
                Error::Parameter(format!("bicycle coefficient for unknown dimension '{}'", c.dimension))
            })?;
            let k = dims[d].categories.iter().position(|k| *k == c.category).ok_or_else(|| {
                Error::Parameter(format!(
                    "bicycle coefficient for unknown category '{}={}'",
                    c.dimension, c.category
                ))
            })?;
            terms.push((d, k, c.value));
        }
        Ok(CompiledBicycleModel { intercept: self.intercept, terms })
    }
}

impl CompiledBicycleModel {
    pub fn probability(&self, attributes: &[u16]) -> f64 {
        let eta = self.terms.iter().fold(self.intercept, |acc, &(d, k, v)| {
            if attributes[d] as usize == k {
                acc + v
            } else {
                acc
            }
        });
        logistic(eta)
    }
}

impl BicycleModel {
    /// Maximum-likelihood fit to survey rows. Every dimension in `fitted` is
    /// dummy coded against its first category.
    pub fn fit(dims: &[Dimension], fitted: &[&str], rows: &[Vec<u16>], owns: &[bool]) -> Result<BicycleModel> {
        let mut terms = Vec::new();
        for name in fitted {
            let d = dims
                .iter()
                .position(|d| d.name == *name)
                .ok_or_else(|| Error::Parameter(format!("unknown dimension '{name}'")))?;
            terms.extend((1..dims[d].categories.len()).map(|k| (d, k)));
        }
        let design: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                std::iter::once(1.0)
                    .chain(terms.iter().map(|&(d, k)| if r[d] as usize == k { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        let fit = crate::stats::logistic_fit(&design, owns)?;
        Ok(BicycleModel {
            intercept: fit.coefficients[0],
            coefficients: terms
                .iter()
                .zip(&fit.coefficients[1..])
                .map(|(&(d, k), &value)| Coefficient {
                    dimension: dims[d].name.clone(),
                    category: dims[d].categories[k].clone(),
                    value,
                })
                .collect(),
        })
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli draw with the model's probability for these attributes.
pub fn impute_bicycle_ownership<R: Rng + ?Sized>(
    attributes: &[u16],
    model: &CompiledBicycleModel,
    rng: &mut R,
) -> bool {
    rng.random::<f64>() < model.probability(attributes)
}

/// Draw an initial mode from a category's modal split.
pub fn sample_initial_mode<R: Rng + ?Sized>(shares: &ModeVector<f64>, rng: &mut R) -> TransportMode {
    let total = shares.sum();
    let mut u = rng.random::<f64>() * total;
    for (m, &p) in shares.iter() {
        if u < p {
            return m;
        }
        u -= p;
    }
    // u landed on the float edge; take the last mode with positive share
    TransportMode::ALL.into_iter().rev().find(|&m| shares[m] > 0.0).unwrap_or(TransportMode::PublicTransport)
}

pub fn mode_allowed(mode: TransportMode, bicycle_owner: bool, car_owner: bool) -> bool {
    match mode {
        TransportMode::Car => car_owner,
        TransportMode::Cycle => bicycle_owner,
        _ => true,
    }
}

/// Replace a mode the agent cannot use by the most common usable mode of the category.
pub fn repair_initial_mode(
    sampled: TransportMode,
    shares: &ModeVector<f64>,
    bicycle_owner: bool,
    car_owner: bool,
) -> TransportMode {
    if mode_allowed(sampled, bicycle_owner, car_owner) {
        return sampled;
    }
    let mut ranked = TransportMode::ALL;
    // stable sort keeps canonical order among equal shares
    ranked.sort_by(|a, b| shares[*b].total_cmp(&shares[*a]));
    ranked
        .into_iter()
        .find(|&m| m != sampled && shares[m] > 0.0 && mode_allowed(m, bicycle_owner, car_owner))
        .unwrap_or(TransportMode::PublicTransport)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthAgentRecord {
    pub id: u32,
    /// Category index for each seed-table dimension.
    pub attributes: Vec<u16>,
    pub bicycle_owner: bool,
    pub car_owner: bool,
    pub commute_distance_m: f64,
    pub commute_category: CommuteCategory,
    pub initial_mode: TransportMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub dimensions: Vec<Dimension>,
    pub records: Vec<SynthAgentRecord>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summary(&self) -> PopulationSummary {
        let n = self.records.len().max(1) as f64;
        let count = |f: &dyn Fn(&SynthAgentRecord) -> bool| self.records.iter().filter(|r| f(r)).count() as f64 / n;
        let cat = |c: CommuteCategory| count(&|r| r.commute_category == c);
        let mean_dist = |c: CommuteCategory| {
            let (s, k) = self
                .records
                .iter()
                .filter(|r| r.commute_category == c)
                .fold((0.0, 0usize), |(s, k), r| (s + r.commute_distance_m, k + 1));
            if k == 0 {
                0.0
            } else {
                s / k as f64
            }
        };
        PopulationSummary {
            agents: self.records.len(),
            bicycle_rate: count(&|r| r.bicycle_owner),
            car_rate: count(&|r| r.car_owner),
            category_share: CategoryTable {
                local: cat(CommuteCategory::Local),
                city: cat(CommuteCategory::City),
                beyond: cat(CommuteCategory::Beyond),
            },
            mean_distance_m: CategoryTable {
                local: mean_dist(CommuteCategory::Local),
                city: mean_dist(CommuteCategory::City),
                beyond: mean_dist(CommuteCategory::Beyond),
            },
            initial_mode_share: ModeVector::from_fn(|m| count(&|r| r.initial_mode == m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub agents: usize,
    pub bicycle_rate: f64,
    pub car_rate: f64,
    pub category_share: CategoryTable<f64>,
    pub mean_distance_m: CategoryTable<f64>,
    pub initial_mode_share: ModeVector<f64>,
}

/// Fitted (fractional) cell weights for a population of `total` people.
pub fn fit_weights(pop: &PopulationConfig, total: f64) -> Result<IpfFit> {
    let targets = pop.marginals.scaled_to(total);
    let fit = ipf_fit(&pop.seed_table, &targets, pop.ipf_tolerance * total.max(1.0), pop.ipf_max_iter)?;
    if !fit.converged {
        return Err(Error::Parameter(format!(
            "IPF did not converge within {} sweeps (error {})",
            fit.sweeps, fit.max_error
        )));
    }
    Ok(fit)
}

fn commute_categories(pop: &PopulationConfig) -> Result<(usize, Vec<CommuteCategory>)> {
    let d = pop.seed_table.dimension_index(&pop.commute_dimension).ok_or_else(|| {
        Error::Parameter(format!("commute dimension '{}' not in seed table", pop.commute_dimension))
    })?;
    let cats = pop.seed_table.dimensions[d]
        .categories
        .iter()
        .map(|c| c.parse::<CommuteCategory>().map_err(Error::Parameter))
        .collect::<Result<Vec<_>>>()?;
    Ok((d, cats))
}

fn car_slot(pop: &PopulationConfig) -> Result<(usize, usize)> {
    let d = pop.seed_table.dimension_index(&pop.car_dimension).ok_or_else(|| {
        Error::Parameter(format!("car dimension '{}' not in seed table", pop.car_dimension))
    })?;
    let k = pop.seed_table.dimensions[d]
        .categories
        .iter()
        .position(|c| *c == pop.car_category)
        .ok_or_else(|| Error::Parameter(format!("car category '{}' not found", pop.car_category)))?;
    Ok((d, k))
}

/// Build `cfg.agent_count` agents. Deterministic in `cfg.master_seed`.
pub fn synthesize_population(cfg: &ScenarioConfig) -> Result<Population> {
    let pop = &cfg.population;
    let n = cfg.agent_count as usize;
    let fit = fit_weights(pop, n as f64)?;
    let mut trs_rng = derive_rng_stream(cfg.master_seed, "popgen/trs", 0);
    let counts = trs_integerise(&fit.weights, &mut trs_rng);

    let mut cells: Vec<usize> = Vec::with_capacity(n);
    for (cell, &c) in counts.iter().enumerate() {
        cells.extend(std::iter::repeat_n(cell, c as usize));
    }
    // the global network is built over agent ids; shuffle so ids carry no attribute order
    cells.shuffle(&mut derive_rng_stream(cfg.master_seed, "popgen/order", 0));

    let (commute_dim, commute_cats) = commute_categories(pop)?;
    let (car_dim, car_cat) = car_slot(pop)?;
    let bicycle = pop.bicycle_model.compile(&pop.seed_table.dimensions)?;

    let records = cells
        .par_iter()
        .enumerate()
        .map(|(i, &cell)| {
            let mut rng = derive_rng_stream(cfg.master_seed, "popgen/agent", i as u64);
            let attributes: Vec<u16> = pop.seed_table.unravel(cell).into_iter().map(|k| k as u16).collect();
            let car_owner = attributes[car_dim] as usize == car_cat;
            let bicycle_owner = impute_bicycle_ownership(&attributes, &bicycle, &mut rng);
            let category = commute_cats[attributes[commute_dim] as usize];
            let shares = pop.modal_distribution.get(category);
            let sampled = sample_initial_mode(shares, &mut rng);
            let initial_mode = repair_initial_mode(sampled, shares, bicycle_owner, car_owner);
            let commute_distance_m =
                sample_commute_distance_in(initial_mode, category, &pop.distance[initial_mode], &mut rng)?;
            Ok(SynthAgentRecord {
                id: i as u32,
                attributes,
                bicycle_owner,
                car_owner,
                commute_distance_m,
                commute_category: category,
                initial_mode,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Population { dimensions: pop.seed_table.dimensions.clone(), records })
}

pub fn validate_population_config(p: &PopulationConfig, push: &mut dyn FnMut(String, String)) {
    let mut err = |f: &str, m: String| push(format!("population.{f}"), m);
    if let Err(e) = p.seed_table.check_shape() {
        err("seed_table", e.to_string());
        return;
    }
    let total = p.marginals.total();
    for m in &p.marginals.marginals {
        match p.seed_table.dimension_index(&m.dimension) {
            None => err("marginals", format!("unknown dimension '{}'", m.dimension)),
            Some(d) => {
                if m.counts.len() != p.seed_table.dimensions[d].categories.len() {
                    err("marginals", format!("'{}' has the wrong number of categories", m.dimension));
                }
                let s: f64 = m.counts.iter().sum();
                if (s - total).abs() > 1e-9 * total.max(1.0) {
                    err("marginals", format!("'{}' total {s} differs from {total}", m.dimension));
                }
                if m.counts.iter().any(|c| *c < 0.0) {
                    err("marginals", format!("'{}' has a negative count", m.dimension));
                }
            }
        }
    }
    if total <= 0.0 {
        err("marginals", "marginal totals must be positive".into());
    }
    if let Err(e) = car_slot(p) {
        err("car_dimension", e.to_string());
    }
    match commute_categories(p) {
        Err(e) => err("commute_dimension", e.to_string()),
        Ok((_, cats)) => {
            for c in CommuteCategory::ALL {
                if !cats.contains(&c) {
                    err("commute_dimension", format!("category '{c}' missing"));
                }
            }
        }
    }
    if let Err(e) = p.bicycle_model.compile(&p.seed_table.dimensions) {
        err("bicycle_model", e.to_string());
    }
    for (m, spec) in p.distance.iter() {
        if let Err(e) = spec.check() {
            err(&format!("distance.{m}"), e);
        }
    }
    for c in CommuteCategory::ALL {
        let row = p.modal_distribution.get(c);
        if row.iter().any(|(_, v)| !(0.0..=1.0).contains(v)) {
            err(&format!("modal_distribution.{c}"), "shares must lie in [0, 1]".into());
        }
        if (row.sum() - 1.0).abs() > 1e-9 {
            err(&format!("modal_distribution.{c}"), format!("shares sum to {}", row.sum()));
        }
        if row.public_transport <= 0.0 {
            err(&format!("modal_distribution.{c}"), "public transport share must be positive".into());
        }
        if c == CommuteCategory::Beyond && row.walk > 0.0 {
            err("modal_distribution.beyond", "walking cannot reach beyond-city commutes".into());
        }
    }
    if !(p.ipf_tolerance > 0.0) {
        err("ipf_tolerance", "must be positive".into());
    }
    if p.ipf_max_iter == 0 {
        err("ipf_max_iter", "must be positive".into());
    }
}

fn dim(name: &str, cats: &[&str]) -> Dimension {
    Dimension { name: name.into(), categories: cats.iter().map(|c| c.to_string()).collect() }
}

/// Shipped toy seed table (sex x age group x car usage x commute band).
pub fn default_seed_table() -> SeedTable {
    let car_by_age = [0.30, 0.50, 0.55];
    let commute_by_car = [[0.35, 0.57, 0.08], [0.25, 0.52, 0.23]];
    let mut cells = Vec::with_capacity(36);
    for sex in 0..2 {
        for age in 0..3 {
            for car in 0..2 {
                for commute in 0..3 {
                    let p_car = if car == 1 { car_by_age[age] } else { 1.0 - car_by_age[age] };
                    let male_driver = if sex == 1 && car == 1 { 1.15 } else { 1.0 };
                    let w: f64 = 1000.0 * p_car * male_driver * commute_by_car[car][commute];
                    cells.push((w * 100.0).round() / 100.0);
                }
            }
        }
    }
    SeedTable {
        dimensions: vec![
            dim("sex", &["female", "male"]),
            dim("age_group", &["16-29", "30-49", "50+"]),
            dim("car_usage", &["no", "yes"]),
            dim("commute", &["local", "city", "beyond"]),
        ],
        cells,
    }
}

pub fn default_marginals() -> MarginalSet {
    let m = |d: &str, c: &[f64]| Marginal { dimension: d.into(), counts: c.to_vec() };
    MarginalSet {
        marginals: vec![
            m("sex", &[49_000.0, 51_000.0]),
            m("age_group", &[30_000.0, 48_000.0, 22_000.0]),
            m("car_usage", &[56_000.0, 44_000.0]),
            m("commute", &[30_000.0, 55_000.0, 15_000.0]),
        ],
    }
}

pub fn default_population_config() -> PopulationConfig {
    let coef = |d: &str, c: &str, v: f64| Coefficient { dimension: d.into(), category: c.into(), value: v };
    PopulationConfig {
        seed_table: default_seed_table(),
        marginals: default_marginals(),
        car_dimension: "car_usage".into(),
        car_category: "yes".into(),
        commute_dimension: "commute".into(),
        bicycle_model: BicycleModel {
            intercept: DEFAULT_BICYCLE_INTERCEPT,
            coefficients: vec![
                coef("sex", "male", 0.35),
                coef("age_group", "16-29", 0.1),
                coef("age_group", "50+", -0.45),
                coef("car_usage", "yes", 0.15),
            ],
        },
        distance: ModeVector {
            walk: DistanceSpec::LogNormal { mu: 7.7225, sigma: 0.6 },
            cycle: DistanceSpec::Mixture {
                components: vec![
                    GaussianComponent { weight: 0.55, mean: 3_500.0, sd: 1_200.0 },
                    GaussianComponent { weight: 0.45, mean: 12_841.0, sd: 4_500.0 },
                ],
            },
            public_transport: DistanceSpec::LogNormal { mu: 9.0402, sigma: 0.7 },
            car: DistanceSpec::LogNormal { mu: 8.869, sigma: 0.75 },
        },
        modal_distribution: CategoryTable {
            local: ModeVector::new(0.215, 0.035, 0.315, 0.435),
            city: ModeVector::new(0.002, 0.028, 0.711, 0.259),
            beyond: ModeVector::new(0.0, 0.008, 0.452, 0.540),
        },
        ipf_tolerance: 1e-10,
        ipf_max_iter: 500,
    }
}

/// Calibrated so the default population's expected bicycle access rate is 46.5%.
const DEFAULT_BICYCLE_INTERCEPT: f64 = -0.319;
