//! The per-agent daily decision, as pure functions.

use crate::config::{CostComposition, ScenarioConfig};
use crate::mode::{ModeVector, TransportMode, Weather};
use crate::netgen::Graph;

use super::Agent;

/// Position of each mode in a tie-break order (0 = most preferred).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieBreak([u8; 4]);

impl TieBreak {
    /// `order` must be a permutation of the four modes.
    pub fn new(order: &[TransportMode; 4]) -> TieBreak {
        let mut pos = [0u8; 4];
        for (i, m) in order.iter().enumerate() {
            pos[m.index()] = i as u8;
        }
        TieBreak(pos)
    }

    #[inline]
    pub fn position(&self, m: TransportMode) -> u8 {
        self.0[m.index()]
    }
}

impl Default for TieBreak {
    fn default() -> Self {
        TieBreak::new(&TransportMode::ALL)
    }
}

/// Rank 4 for the highest score down to 1; equal scores are ordered by `tie`.
pub fn rank_descending(scores: &ModeVector<f64>, tie: TieBreak) -> ModeVector<u8> {
    ModeVector::from_fn(|m| {
        let beaten_by = TransportMode::ALL
            .iter()
            .filter(|&&o| {
                o != m && (scores[o] > scores[m] || (scores[o] == scores[m] && tie.position(o) < tie.position(m)))
            })
            .count();
        4 - beaten_by as u8
    })
}

/// Share of each mode among `contacts` yesterday; all zero without contacts.
#[inline]
pub fn mode_fractions(contacts: &[u32], prev: &[TransportMode]) -> ModeVector<f64> {
    if contacts.is_empty() {
        return ModeVector::splat(0.0);
    }
    let mut counts = [0u32; 4];
    for &c in contacts {
        counts[prev[c as usize].index()] += 1;
    }
    let n = contacts.len() as f64;
    ModeVector::from_fn(|m| counts[m.index()] as f64 / n)
}

/// Weighted sum of what the agent's contacts did yesterday plus its
/// subculture's desirability.
pub fn compute_norm(
    agent: &Agent,
    prev: &[TransportMode],
    global: &Graph,
    neighbour: &Graph,
    desirability: &ModeVector<f64>,
) -> ModeVector<f64> {
    let i = agent.id as usize;
    let social = mode_fractions(global.neighbours(i), prev);
    let local = mode_fractions(neighbour.neighbours(i), prev);
    ModeVector::from_fn(|m| {
        agent.social_connectivity * social[m]
            + agent.neighbourhood_connectivity * local[m]
            + agent.subculture_connectivity * desirability[m]
    })
}

pub fn budget_scores(
    norm: &ModeVector<f64>,
    habit: &ModeVector<f64>,
    consistency: f64,
    congestion: &ModeVector<f64>,
) -> ModeVector<f64> {
    ModeVector::from_fn(|m| (norm[m] + consistency * habit[m]) * congestion[m])
}

pub fn compute_budget_ranks(
    norm: &ModeVector<f64>,
    habit: &ModeVector<f64>,
    consistency: f64,
    congestion: &ModeVector<f64>,
    tie: TieBreak,
) -> ModeVector<u8> {
    rank_descending(&budget_scores(norm, habit, consistency, congestion), tie)
}

pub fn weather_factor(composition: CostComposition, sensitivity: f64, resolve: f64, modifier: f64) -> f64 {
    match composition {
        CostComposition::Interpolated => 1.0 + sensitivity * resolve * (modifier - 1.0),
        CostComposition::Literal => sensitivity * modifier * resolve,
    }
}

/// Perceived cost of each mode today.
pub fn compute_costs(
    agent: &Agent,
    weather_today: Weather,
    cfg: &ScenarioConfig,
    supportiveness: &ModeVector<f64>,
) -> ModeVector<f64> {
    let distance = cfg.distance_cost.get(agent.commute_category);
    let modifier = cfg.weather.modifier.get(weather_today);
    let composition = cfg.decision.cost_composition;
    ModeVector::from_fn(|m| {
        let base = (distance[m] + (1.0 - supportiveness[m])) / 2.0;
        base * weather_factor(composition, agent.weather_sensitivity, agent.resolve, modifier[m])
    })
}

/// Cheapest mode gets rank 4.
pub fn compute_cost_ranks(
    agent: &Agent,
    weather_today: Weather,
    cfg: &ScenarioConfig,
    supportiveness: &ModeVector<f64>,
    tie: TieBreak,
) -> ModeVector<u8> {
    let costs = compute_costs(agent, weather_today, cfg, supportiveness);
    rank_descending(&costs.map(|_, c| -c), tie)
}

#[inline]
pub fn is_available(m: TransportMode, agent: &Agent, banned: Option<TransportMode>) -> bool {
    Some(m) != banned
        && match m {
            TransportMode::Car => agent.car_owner,
            TransportMode::Cycle => agent.bicycle_owner,
            _ => true,
        }
}

/// Highest combined rank among the modes the agent may use today.
pub fn choose_mode(
    budget: &ModeVector<u8>,
    cost: &ModeVector<u8>,
    agent: &Agent,
    banned: Option<TransportMode>,
    tie: TieBreak,
) -> TransportMode {
    let mut best: Option<(TransportMode, u8)> = None;
    for m in TransportMode::ALL {
        if !is_available(m, agent, banned) {
            continue;
        }
        let score = budget[m] + cost[m];
        best = match best {
            Some((b, s)) if s > score || (s == score && tie.position(b) < tie.position(m)) => Some((b, s)),
            _ => Some((m, score)),
        };
    }
    // walking is never restricted by ownership; only a ban on it could empty the set
    best.map(|(m, _)| m).unwrap_or(TransportMode::PublicTransport)
}

pub fn update_habit(habit: &ModeVector<f64>, chosen: TransportMode, decay: f64) -> ModeVector<f64> {
    ModeVector::from_fn(|m| decay * habit[m] + (1.0 - decay) * if m == chosen { 1.0 } else { 0.0 })
}

/// Resolve for today from yesterday's weather and mode.
pub fn update_resolve(yesterday_weather: Weather, yesterday_mode: TransportMode) -> f64 {
    match (yesterday_weather, yesterday_mode.is_active()) {
        (Weather::Wet, true) => 0.9,
        (Weather::Wet, false) => 1.1,
        (Weather::Dry, _) => 1.0,
    }
}

/// One for journeys within capacity, otherwise reduced by the overflow as a
/// share of the neighbourhood's residents.
#[inline]
pub fn congestion_modifier(journeys: f64, capacity: f64, population: f64) -> f64 {
    if journeys <= capacity || population <= 0.0 {
        1.0
    } else {
        1.0 - (journeys - capacity) / population
    }
}

pub fn compute_congestion_modifiers(
    journeys: &[ModeVector<u32>],
    capacity: &[ModeVector<f64>],
    population: &[u32],
) -> Vec<ModeVector<f64>> {
    journeys
        .iter()
        .zip(capacity)
        .zip(population)
        .map(|((j, c), &p)| ModeVector::from_fn(|m| congestion_modifier(j[m] as f64, c[m], p as f64)))
        .collect()
}
