//! Daily agent loop.
//!
//! Every day each agent ranks the modes twice — by its social "budget"
//! (norm, habit and congestion) and by perceived cost (distance,
//! infrastructure, weather) — and takes the available mode with the best
//! combined rank. All decisions on day `t` read the state left by day `t-1`
//! and are committed together, so the result does not depend on agent order
//! or thread count. No randomness is drawn during a run.

mod decision;
mod trace;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

pub use decision::*;
pub use trace::*;

use crate::config::{CapacityUnits, InterventionSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::mode::{weekday, CommuteCategory, ModeVector, TransportMode};
use crate::netgen::{generate_networks, SocialNetworks};
use crate::popgen::Population;
use crate::rng::derive_rng_stream;
use crate::weather::WeatherSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub subculture: u16,
    pub neighbourhood: u32,
    pub commute_category: CommuteCategory,
    pub weather_sensitivity: f64,
    pub consistency: f64,
    pub social_connectivity: f64,
    pub subculture_connectivity: f64,
    pub neighbourhood_connectivity: f64,
    pub habit_decay: f64,
    /// 0.9, 1.0 or 1.1.
    pub resolve: f64,
    pub bicycle_owner: bool,
    pub car_owner: bool,
    pub habit: ModeVector<f64>,
    pub last_mode: TransportMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbourhood {
    pub id: String,
    pub supportiveness: ModeVector<f64>,
    /// Journeys per day before congestion sets in.
    pub capacity: ModeVector<f64>,
    pub congestion_modifier: ModeVector<f64>,
    pub population: u32,
}

/// Which neighbourhood and subculture each agent belongs to, and its
/// unit-interval traits. Drawn once per seed and shared by every replicate
/// and scenario so that runs differ only in their networks.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentAssignment {
    pub neighbourhood: Vec<u32>,
    pub subculture: Vec<u16>,
    /// weather sensitivity, consistency, social, subculture and
    /// neighbourhood connectivity, habit decay.
    pub traits: Vec<[f64; 6]>,
}

impl AgentAssignment {
    pub fn len(&self) -> usize {
        self.neighbourhood.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbourhood.is_empty()
    }
}

pub fn assign_agents(cfg: &ScenarioConfig) -> AgentAssignment {
    let n = cfg.agent_count as usize;
    let mut rng = derive_rng_stream(cfg.master_seed, "agents", 0);
    let mut a = AgentAssignment {
        neighbourhood: Vec::with_capacity(n),
        subculture: Vec::with_capacity(n),
        traits: Vec::with_capacity(n),
    };
    for _ in 0..n {
        a.neighbourhood.push(rng.random_range(0..cfg.neighbourhood_count));
        a.subculture.push(rng.random_range(0..cfg.subcultures.len()) as u16);
        a.traits.push(std::array::from_fn(|_| rng.random::<f64>()));
    }
    a
}

/// The two simulated arms of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Control,
    CarFreeDays,
}

impl Scenario {
    pub const BOTH: [Scenario; 2] = [Scenario::Control, Scenario::CarFreeDays];

    pub const fn as_str(self) -> &'static str {
        match self {
            Scenario::Control => "control",
            Scenario::CarFreeDays => "cfd",
        }
    }

    pub fn intervention(self, cfg: &ScenarioConfig) -> InterventionSpec {
        match self {
            Scenario::Control => InterventionSpec::none(),
            Scenario::CarFreeDays => cfg.intervention.clone(),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "control" => Ok(Scenario::Control),
            "cfd" | "car_free_days" => Ok(Scenario::CarFreeDays),
            other => Err(format!("unknown scenario '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    /// Last simulated day (0 is the initial snapshot).
    pub day: u32,
    pub agents: Vec<Agent>,
    pub neighbourhoods: Vec<Neighbourhood>,
    pub networks: Arc<SocialNetworks>,
    pub weather: Arc<WeatherSequence>,
    /// Mode of every agent on `day`, indexed by agent id.
    pub choices: Vec<TransportMode>,
    /// Journeys on `day` per neighbourhood and mode.
    pub journeys: Vec<ModeVector<u32>>,
    tie: TieBreak,
    next: Vec<(TransportMode, f64)>,
}

fn count_journeys(agents: &[Agent], choices: &[TransportMode], neighbourhoods: usize) -> Vec<ModeVector<u32>> {
    let mut j = vec![ModeVector::splat(0u32); neighbourhoods];
    for (a, &m) in agents.iter().zip(choices) {
        j[a.neighbourhood as usize][m] += 1;
    }
    j
}

pub fn init_state(
    cfg: &ScenarioConfig,
    population: &Population,
    assignment: &AgentAssignment,
    networks: Arc<SocialNetworks>,
    weather: Arc<WeatherSequence>,
) -> Result<SimulationState> {
    let n = population.len();
    let mismatch = |what: &str, got: usize| {
        Err(Error::Parameter(format!("{what} has {got} entries but the population has {n} agents")))
    };
    if assignment.len() != n {
        return mismatch("agent assignment", assignment.len());
    }
    if networks.global.node_count() != n {
        return mismatch("global network", networks.global.node_count());
    }
    if networks.neighbour.node_count() != n {
        return mismatch("neighbour network", networks.neighbour.node_count());
    }
    if weather.len() < cfg.total_days as usize {
        return Err(Error::Parameter(format!(
            "weather sequence covers {} days, need {}",
            weather.len(),
            cfg.total_days
        )));
    }
    if cfg.neighbourhoods.list.len() != cfg.neighbourhood_count as usize {
        return Err(Error::Parameter("neighbourhood list does not match neighbourhood_count".into()));
    }

    let agents: Vec<Agent> = population
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = assignment.traits[i];
            Agent {
                id: i as u32,
                subculture: assignment.subculture[i],
                neighbourhood: assignment.neighbourhood[i],
                commute_category: r.commute_category,
                weather_sensitivity: t[0],
                consistency: t[1],
                social_connectivity: t[2],
                subculture_connectivity: t[3],
                neighbourhood_connectivity: t[4],
                habit_decay: t[5],
                resolve: 1.0,
                bicycle_owner: r.bicycle_owner,
                car_owner: r.car_owner,
                habit: ModeVector::one_hot(r.initial_mode),
                last_mode: r.initial_mode,
            }
        })
        .collect();
    if let Some(a) = agents.iter().find(|a| {
        a.neighbourhood >= cfg.neighbourhood_count || a.subculture as usize >= cfg.subcultures.len()
    }) {
        return Err(Error::Parameter(format!("agent {} assigned outside the configured groups", a.id)));
    }

    let mut population_of = vec![0u32; cfg.neighbourhood_count as usize];
    for a in &agents {
        population_of[a.neighbourhood as usize] += 1;
    }
    let neighbourhoods = cfg
        .neighbourhoods
        .list
        .iter()
        .zip(&population_of)
        .map(|(spec, &p)| Neighbourhood {
            id: spec.id.clone(),
            supportiveness: spec.supportiveness,
            capacity: match cfg.neighbourhoods.capacity_units {
                CapacityUnits::Journeys => spec.capacity,
                CapacityUnits::ResidentShare => spec.capacity.scale(p as f64),
            },
            congestion_modifier: ModeVector::splat(1.0),
            population: p,
        })
        .collect::<Vec<_>>();

    let choices: Vec<TransportMode> = agents.iter().map(|a| a.last_mode).collect();
    let journeys = count_journeys(&agents, &choices, neighbourhoods.len());
    Ok(SimulationState {
        day: 0,
        agents,
        neighbourhoods,
        networks,
        weather,
        choices,
        journeys,
        tie: TieBreak::new(&cfg.decision.tie_break),
        next: vec![(TransportMode::Walk, 1.0); n],
    })
}

/// Resolve and mode for one agent on `day`, reading only yesterday's state.
fn decide(
    state: &SimulationState,
    cfg: &ScenarioConfig,
    agent: &Agent,
    day: u32,
    banned: Option<TransportMode>,
) -> (TransportMode, f64) {
    let weather = &state.weather;
    let resolve = update_resolve(weather.get(day - 1), agent.last_mode);
    let mut today = agent.clone();
    today.resolve = resolve;
    let hood = &state.neighbourhoods[agent.neighbourhood as usize];
    let desirability = &cfg.subcultures[agent.subculture as usize].desirability;
    let norm = compute_norm(agent, &state.choices, &state.networks.global, &state.networks.neighbour, desirability);
    let budget = compute_budget_ranks(&norm, &agent.habit, agent.consistency, &hood.congestion_modifier, state.tie);
    let cost = compute_cost_ranks(&today, weather.get(day), cfg, &hood.supportiveness, state.tie);
    (choose_mode(&budget, &cost, agent, banned, state.tie), resolve)
}

/// Advance `state` by one day and return that day's trace.
pub fn step_day(
    state: &mut SimulationState,
    cfg: &ScenarioConfig,
    intervention: &InterventionSpec,
    run_id: u32,
    scenario: Scenario,
) -> DailyTrace {
    let day = state.day + 1;
    assert!((day as usize) < state.weather.len(), "day {day} beyond the weather sequence");
    let banned = intervention.banned_on(day);

    let mut next = std::mem::take(&mut state.next);
    {
        let s = &*state;
        next.par_iter_mut()
            .zip(s.agents.par_iter())
            .with_min_len(512)
            .for_each(|(out, agent)| *out = decide(s, cfg, agent, day, banned));
    }

    state.agents.par_iter_mut().zip(next.par_iter()).with_min_len(512).for_each(|(a, &(m, r))| {
        a.habit = update_habit(&a.habit, m, a.habit_decay);
        a.resolve = r;
        a.last_mode = m;
    });
    for (c, &(m, _)) in state.choices.iter_mut().zip(&next) {
        *c = m;
    }
    state.next = next;
    state.day = day;
    state.journeys = count_journeys(&state.agents, &state.choices, state.neighbourhoods.len());
    for (hood, j) in state.neighbourhoods.iter_mut().zip(&state.journeys) {
        hood.congestion_modifier =
            ModeVector::from_fn(|m| congestion_modifier(j[m] as f64, hood.capacity[m], hood.population as f64));
    }
    snapshot(state, run_id, scenario)
}

/// Trace of the state's current day.
pub fn snapshot(state: &SimulationState, run_id: u32, scenario: Scenario) -> DailyTrace {
    let mut counts = ModeVector::splat(0u32);
    for j in &state.journeys {
        for m in TransportMode::ALL {
            counts[m] += j[m];
        }
    }
    DailyTrace {
        run_id,
        scenario,
        day: state.day,
        weekday: weekday(state.day),
        weather: state.weather.get(state.day),
        counts,
    }
}

/// Day 0 is the initial snapshot; decisions run for days `1..total_days`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    population: &Population,
    assignment: &AgentAssignment,
    networks: Arc<SocialNetworks>,
    weather: Arc<WeatherSequence>,
    scenario: Scenario,
    run_id: u32,
) -> Result<Vec<DailyTrace>> {
    let mut state = init_state(cfg, population, assignment, networks, weather)?;
    let intervention = scenario.intervention(cfg);
    let mut traces = Vec::with_capacity(cfg.total_days as usize);
    traces.push(snapshot(&state, run_id, scenario));
    for _ in 1..cfg.total_days {
        traces.push(step_day(&mut state, cfg, &intervention, run_id, scenario));
    }
    Ok(traces)
}

/// Generate replicate `run_id`'s networks and run every requested scenario on them.
pub fn run_replicate(
    cfg: &ScenarioConfig,
    population: &Population,
    assignment: &AgentAssignment,
    weather: Arc<WeatherSequence>,
    scenarios: &[Scenario],
    run_id: u32,
) -> Result<Vec<Vec<DailyTrace>>> {
    let networks = Arc::new(generate_networks(cfg, &assignment.neighbourhood, run_id as u64)?);
    scenarios
        .iter()
        .map(|&s| run_scenario(cfg, population, assignment, networks.clone(), weather.clone(), s, run_id))
        .collect()
}
