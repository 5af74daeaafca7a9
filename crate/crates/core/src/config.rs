//! Scenario configuration: schema, defaults, validation and JSON IO.
//!
//! The configuration file is a JSON document. Unknown keys are rejected.
//! Serialising a parsed configuration reproduces the input byte for byte
//! when the input was itself produced by [`ScenarioConfig::to_json_string`].

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::{CommuteCategory, ModeVector, TransportMode, Weather, WEDNESDAY};
use crate::popgen::{BicycleModel, DistanceSpec, MarginalSet, SeedTable};

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subculture {
    pub id: String,
    pub desirability: ModeVector<f64>,
}

/// Per-category table (local, city, beyond).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryTable<V> {
    pub local: V,
    pub city: V,
    pub beyond: V,
}

impl<V> CategoryTable<V> {
    pub fn get(&self, c: CommuteCategory) -> &V {
        match c {
            CommuteCategory::Local => &self.local,
            CommuteCategory::City => &self.city,
            CommuteCategory::Beyond => &self.beyond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherModifier {
    pub wet: ModeVector<f64>,
    pub dry: ModeVector<f64>,
}

impl WeatherModifier {
    pub fn get(&self, w: Weather) -> &ModeVector<f64> {
        match w {
            Weather::Wet => &self.wet,
            Weather::Dry => &self.dry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherConfig {
    /// Row-stochastic transition matrix, rows and columns ordered (wet, dry).
    pub transition: [[f64; 2]; 2],
    pub initial: Weather,
    pub modifier: WeatherModifier,
}

/// How neighbourhood capacities are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityUnits {
    /// Absolute number of journeys per day.
    Journeys,
    /// Fraction of the neighbourhood's residents; scales with population size.
    ResidentShare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighbourhoodSpec {
    pub id: String,
    pub supportiveness: ModeVector<f64>,
    pub capacity: ModeVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighbourhoodsConfig {
    pub capacity_units: CapacityUnits,
    pub list: Vec<NeighbourhoodSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    None,
    CarFreeDays,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub kind: InterventionKind,
    pub banned_mode: TransportMode,
    /// 0 = Monday.
    pub weekday: u8,
    pub start_day: u32,
}

impl Default for InterventionSpec {
    fn default() -> Self {
        InterventionSpec {
            kind: InterventionKind::CarFreeDays,
            banned_mode: TransportMode::Car,
            weekday: WEDNESDAY,
            start_day: 365,
        }
    }
}

impl InterventionSpec {
    pub fn none() -> Self {
        InterventionSpec { kind: InterventionKind::None, ..Default::default() }
    }

    /// Mode banned on `day`, if any.
    pub fn banned_on(&self, day: u32) -> Option<TransportMode> {
        match self.kind {
            InterventionKind::CarFreeDays
                if day >= self.start_day && crate::mode::weekday(day) == self.weekday =>
            {
                Some(self.banned_mode)
            }
            _ => None,
        }
    }
}

/// Which agents a neighbour network spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighbourScope {
    PerNeighbourhood,
    WholePopulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub small_world_k: u32,
    pub small_world_beta: f64,
    pub ba_m0: u32,
    pub ba_m: u32,
    pub neighbour_scope: NeighbourScope,
    /// Regenerate neighbour networks per replicate, or only the global one.
    pub regenerate_neighbour_networks: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            small_world_k: 10,
            small_world_beta: 0.1,
            ba_m0: 3,
            ba_m: 3,
            neighbour_scope: NeighbourScope::PerNeighbourhood,
            regenerate_neighbour_networks: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostComposition {
    /// weather factor = 1 + sensitivity * resolve * (modifier - 1)
    Interpolated,
    /// weather factor = sensitivity * modifier * resolve
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    pub cost_composition: CostComposition,
    /// Preference order used to break ties, most preferred first.
    pub tie_break: [TransportMode; 4],
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            cost_composition: CostComposition::Interpolated,
            tie_break: TransportMode::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub seed_table: SeedTable,
    pub marginals: MarginalSet,
    /// Seed-table dimension carrying car usage, and its category meaning "owns a car".
    pub car_dimension: String,
    pub car_category: String,
    /// Seed-table dimension whose categories are commute categories.
    pub commute_dimension: String,
    pub bicycle_model: BicycleModel,
    pub distance: ModeVector<DistanceSpec>,
    /// Initial modal split per commute category.
    pub modal_distribution: CategoryTable<ModeVector<f64>>,
    pub ipf_tolerance: f64,
    pub ipf_max_iter: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Days after the intervention start excluded before aggregation.
    pub burn_in_days: u32,
    pub hpdi_mass: f64,
    pub chains: u32,
    pub warmup: u32,
    pub draws: u32,
    /// Random-walk steps between retained draws.
    pub steps_per_draw: u32,
    pub rhat_threshold: f64,
    pub moving_average_window: u32,
}

impl AnalysisConfig {
    pub fn sampler(&self, seed: u64) -> crate::stats::SamplerSettings {
        crate::stats::SamplerSettings {
            chains: self.chains,
            warmup: self.warmup,
            draws: self.draws,
            steps_per_draw: self.steps_per_draw,
            seed,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            burn_in_days: 365,
            hpdi_mass: 0.89,
            chains: 4,
            warmup: 1000,
            draws: 1000,
            steps_per_draw: 10,
            rhat_threshold: 1.01,
            moving_average_window: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub agent_count: u32,
    pub neighbourhood_count: u32,
    pub master_seed: u64,
    pub total_days: u32,
    pub network_replicates: u32,
    pub subcultures: Vec<Subculture>,
    pub weather: WeatherConfig,
    pub distance_cost: CategoryTable<ModeVector<f64>>,
    pub neighbourhoods: NeighbourhoodsConfig,
    pub intervention: InterventionSpec,
    pub network: NetworkConfig,
    pub decision: DecisionConfig,
    pub population: PopulationConfig,
    pub analysis: AnalysisConfig,
}

pub fn default_subcultures() -> Vec<Subculture> {
    vec![
        Subculture { id: "A".into(), desirability: ModeVector::new(0.7, 0.9, 0.6, 0.8) },
        Subculture { id: "B".into(), desirability: ModeVector::new(0.5, 0.3, 0.7, 0.9) },
        Subculture { id: "C".into(), desirability: ModeVector::new(0.9, 0.9, 0.7, 0.4) },
    ]
}

pub fn default_weather() -> WeatherConfig {
    WeatherConfig {
        transition: [[0.5, 0.5], [0.18, 0.82]],
        initial: Weather::Dry,
        modifier: WeatherModifier {
            wet: ModeVector::new(1.5, 2.0, 1.1, 1.0),
            dry: ModeVector::splat(1.0),
        },
    }
}

pub fn default_distance_cost() -> CategoryTable<ModeVector<f64>> {
    CategoryTable {
        local: ModeVector::new(0.1, 0.1, 0.2, 0.2),
        city: ModeVector::new(0.9, 0.5, 0.2, 0.3),
        beyond: ModeVector::new(1.0, 0.9, 0.3, 0.3),
    }
}

/// Wards vary smoothly from car-oriented to active-travel-friendly.
pub fn default_neighbourhoods(count: u32) -> NeighbourhoodsConfig {
    let list = (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
            NeighbourhoodSpec {
                id: format!("N{:02}", i + 1),
                supportiveness: ModeVector::new(
                    round3(0.55 + 0.3 * t),
                    round3(0.35 + 0.4 * t),
                    round3(0.6 + 0.2 * (1.0 - (2.0 * t - 1.0).abs())),
                    round3(0.8 - 0.3 * t),
                ),
                capacity: ModeVector::new(1.0, 1.0, 0.4, 0.25),
            }
        })
        .collect();
    NeighbourhoodsConfig { capacity_units: CapacityUnits::ResidentShare, list }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            agent_count: 111_166,
            neighbourhood_count: 20,
            master_seed: 42,
            total_days: 5 * 365,
            network_replicates: 200,
            subcultures: default_subcultures(),
            weather: default_weather(),
            distance_cost: default_distance_cost(),
            neighbourhoods: default_neighbourhoods(20),
            intervention: InterventionSpec::default(),
            network: NetworkConfig::default(),
            decision: DecisionConfig::default(),
            population: crate::popgen::default_population_config(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Laptop-scale variant: 1 000 agents, 20 replicates, three simulated years.
    pub fn desk() -> Self {
        ScenarioConfig {
            agent_count: 1_000,
            total_days: 3 * 365,
            network_replicates: 20,
            ..Default::default()
        }
    }

    pub fn intervention_day(&self) -> u32 {
        self.intervention.start_day
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse("configuration", e))
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configuration serialises");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("configuration {}", path.display()), e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical serialisation, hex encoded.
    pub fn hash(&self) -> String {
        crate::io::sha256_hex(self.to_json_string().as_bytes())
    }

    /// Load and validate in one step.
    pub fn load_valid(path: impl AsRef<Path>) -> Result<Self> {
        let cfg = Self::load(path)?;
        let report = validate_config(&cfg);
        if report.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Invalid(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { field: field.into(), message: message.into() });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle) || v.field.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

fn check_unit(report: &mut ValidationReport, field: &str, v: &ModeVector<f64>) {
    for (m, x) in v.iter() {
        if !(0.0..=1.0).contains(x) {
            report.push(format!("{field}.{m}"), format!("value {x} outside [0, 1]"));
        }
    }
}

fn check_non_negative(report: &mut ValidationReport, field: &str, v: &ModeVector<f64>) {
    for (m, x) in v.iter() {
        if !(x.is_finite() && *x >= 0.0) {
            report.push(format!("{field}.{m}"), format!("value {x} must be finite and >= 0"));
        }
    }
}

/// Collect every invariant violation in `cfg`. An empty report means valid.
pub fn validate_config(cfg: &ScenarioConfig) -> ValidationReport {
    let mut r = ValidationReport::default();

    if cfg.agent_count == 0 {
        r.push("agent_count", "must be positive");
    }
    if cfg.neighbourhood_count == 0 {
        r.push("neighbourhood_count", "must be positive");
    }
    if cfg.total_days == 0 {
        r.push("total_days", "must be positive");
    }
    if cfg.network_replicates == 0 {
        r.push("network_replicates", "must be positive");
    }

    if cfg.subcultures.is_empty() {
        r.push("subcultures", "at least one subculture required");
    }
    let mut ids = HashSet::new();
    for (i, s) in cfg.subcultures.iter().enumerate() {
        if !ids.insert(&s.id) {
            r.push(format!("subcultures[{i}].id"), format!("duplicate id '{}'", s.id));
        }
        check_unit(&mut r, &format!("subcultures[{i}].desirability"), &s.desirability);
    }

    for (i, row) in cfg.weather.transition.iter().enumerate() {
        let name = Weather::from_index(i);
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            r.push(format!("weather.transition.{name}"), "probabilities must lie in [0, 1]");
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            r.push(
                format!("weather.transition.{name}"),
                format!("row not stochastic (sums to {sum})"),
            );
        }
    }
    check_non_negative(&mut r, "weather.modifier.wet", &cfg.weather.modifier.wet);
    check_non_negative(&mut r, "weather.modifier.dry", &cfg.weather.modifier.dry);

    for c in CommuteCategory::ALL {
        check_unit(&mut r, &format!("distance_cost.{c}"), cfg.distance_cost.get(c));
    }

    if cfg.neighbourhoods.list.len() != cfg.neighbourhood_count as usize {
        r.push(
            "neighbourhoods.list",
            format!(
                "{} neighbourhoods listed but neighbourhood_count is {}",
                cfg.neighbourhoods.list.len(),
                cfg.neighbourhood_count
            ),
        );
    }
    let mut nids = HashSet::new();
    for (i, n) in cfg.neighbourhoods.list.iter().enumerate() {
        if !nids.insert(&n.id) {
            r.push(format!("neighbourhoods.list[{i}].id"), format!("duplicate id '{}'", n.id));
        }
        check_unit(&mut r, &format!("neighbourhoods.list[{i}].supportiveness"), &n.supportiveness);
        check_non_negative(&mut r, &format!("neighbourhoods.list[{i}].capacity"), &n.capacity);
    }

    let iv = &cfg.intervention;
    if iv.start_day >= cfg.total_days {
        r.push(
            "intervention.start_day",
            format!("intervention after end (day {} >= total_days {})", iv.start_day, cfg.total_days),
        );
    }
    if iv.weekday > 6 {
        r.push("intervention.weekday", "must be 0..=6");
    }
    if matches!(iv.banned_mode, TransportMode::Walk | TransportMode::PublicTransport)
        && iv.kind != InterventionKind::None
    {
        r.push("intervention.banned_mode", "walk and public transport must stay available");
    }

    let net = &cfg.network;
    if net.small_world_k < 2 || net.small_world_k % 2 != 0 {
        r.push("network.small_world_k", "must be an even integer >= 2");
    }
    if cfg.agent_count <= net.small_world_k {
        r.push("network.small_world_k", "must be smaller than agent_count");
    }
    if !(0.0..=1.0).contains(&net.small_world_beta) {
        r.push("network.small_world_beta", "must lie in [0, 1]");
    }
    if net.ba_m == 0 || net.ba_m > net.ba_m0 {
        r.push("network.ba_m", "require 1 <= m <= m0");
    }

    let mut seen = HashSet::new();
    if !cfg.decision.tie_break.iter().all(|m| seen.insert(*m)) {
        r.push("decision.tie_break", "must list each mode exactly once");
    }

    crate::popgen::validate_population_config(&cfg.population, &mut |f, m| r.push(f, m));

    let a = &cfg.analysis;
    if !(a.hpdi_mass > 0.0 && a.hpdi_mass < 1.0) {
        r.push("analysis.hpdi_mass", "must lie in (0, 1)");
    }
    if a.chains < 2 {
        r.push("analysis.chains", "at least two chains required");
    }
    if a.draws < 100 {
        r.push("analysis.draws", "at least 100 draws required");
    }
    if a.steps_per_draw == 0 {
        r.push("analysis.steps_per_draw", "must be positive");
    }
    if a.moving_average_window == 0 {
        r.push("analysis.moving_average_window", "must be positive");
    }
    if a.rhat_threshold <= 1.0 {
        r.push("analysis.rhat_threshold", "must exceed 1");
    }

    r
}
