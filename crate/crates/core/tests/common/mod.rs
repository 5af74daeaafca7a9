//! Shared by the engine oracle and the acceptance suite: a deliberately
//! naive re-implementation of the daily decision loop, plus a generator of
//! tiny random worlds to run it on.
#![allow(dead_code)]

use std::sync::Arc;

use normshift::config::{
    CapacityUnits, CostComposition, InterventionKind, NeighbourhoodSpec, ScenarioConfig, Subculture,
};
use normshift::engine::{run_scenario, AgentAssignment, DailyTrace, Scenario};
use normshift::netgen::{Graph, SocialNetworks};
use normshift::popgen::{Population, SynthAgentRecord};
use normshift::weather::WeatherSequence;
use normshift::{derive_rng_stream, CommuteCategory, ModeVector, TransportMode, Weather};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WALK: usize = 0;
pub const CYCLE: usize = 1;
pub const CAR: usize = 3;

/// Everything the engine consumes, in plain form.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub population: Population,
    pub assignment: AgentAssignment,
    pub global_edges: Vec<(u32, u32)>,
    pub neighbour_edges: Vec<(u32, u32)>,
    pub weather: Vec<Weather>,
    pub scenario: Scenario,
}

fn v4(m: &ModeVector<f64>) -> [f64; 4] {
    [m.walk, m.cycle, m.public_transport, m.car]
}

fn mode_index(m: TransportMode) -> usize {
    match m {
        TransportMode::Walk => 0,
        TransportMode::Cycle => 1,
        TransportMode::PublicTransport => 2,
        TransportMode::Car => 3,
    }
}

fn category_row(cfg: &ScenarioConfig, c: CommuteCategory) -> [f64; 4] {
    match c {
        CommuteCategory::Local => v4(&cfg.distance_cost.local),
        CommuteCategory::City => v4(&cfg.distance_cost.city),
        CommuteCategory::Beyond => v4(&cfg.distance_cost.beyond),
    }
}

fn adjacency(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    adj
}

/// Rank 4 for the highest score; equal scores are ordered by `tie` (earlier wins).
fn ranks(scores: [f64; 4], tie: &[usize; 4]) -> [u8; 4] {
    let mut order = *tie;
    // stable sort on score keeps tie order among equals
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut r = [0u8; 4];
    for (k, &m) in order.iter().enumerate() {
        r[m] = 4 - k as u8;
    }
    r
}

/// One row per day: (day, weekday, weather, counts) plus every agent's mode that day.
pub struct ReferenceRun {
    pub days: Vec<(u32, u8, Weather, [u32; 4])>,
    pub choices: Vec<Vec<usize>>,
}

/// Straight-line evaluation of the daily loop: no parallelism, no caching,
/// every quantity recomputed from scratch each day.
pub fn reference_run(w: &World) -> ReferenceRun {
    let cfg = &w.cfg;
    let n = w.population.records.len();
    let hoods = cfg.neighbourhood_count as usize;
    let tie: [usize; 4] = cfg.decision.tie_break.map(mode_index);
    let global = adjacency(n, &w.global_edges);
    let neighbour = adjacency(n, &w.neighbour_edges);

    let mut residents = vec![0f64; hoods];
    for &h in &w.assignment.neighbourhood {
        residents[h as usize] += 1.0;
    }
    let capacity: Vec<[f64; 4]> = cfg
        .neighbourhoods
        .list
        .iter()
        .enumerate()
        .map(|(h, spec)| {
            let c = v4(&spec.capacity);
            match cfg.neighbourhoods.capacity_units {
                CapacityUnits::Journeys => c,
                CapacityUnits::ResidentShare => c.map(|x| x * residents[h]),
            }
        })
        .collect();

    let mut choice: Vec<usize> = w.population.records.iter().map(|r| mode_index(r.initial_mode)).collect();
    let mut habit: Vec<[f64; 4]> = choice
        .iter()
        .map(|&m| {
            let mut h = [0.0; 4];
            h[m] = 1.0;
            h
        })
        .collect();
    let mut congestion = vec![[1.0f64; 4]; hoods];

    let count = |choice: &[usize]| {
        let mut c = [0u32; 4];
        for &m in choice {
            c[m] += 1;
        }
        c
    };
    let mut out = ReferenceRun {
        days: vec![(0, 0, w.weather[0], count(&choice))],
        choices: vec![choice.clone()],
    };

    for day in 1..cfg.total_days {
        let weekday = (day % 7) as u8;
        let iv = &cfg.intervention;
        let banned = (w.scenario == Scenario::CarFreeDays
            && iv.kind == InterventionKind::CarFreeDays
            && day >= iv.start_day
            && weekday == iv.weekday)
            .then(|| mode_index(iv.banned_mode));
        let today = w.weather[day as usize];
        let yesterday = w.weather[day as usize - 1];

        let mut next = vec![0usize; n];
        for i in 0..n {
            let rec = &w.population.records[i];
            let t = w.assignment.traits[i];
            let (sensitivity, consistency, social, subculture_w, neighbourhood_w, _) = (t[0], t[1], t[2], t[3], t[4], t[5]);
            let h = w.assignment.neighbourhood[i] as usize;

            let fractions = |contacts: &Vec<usize>| {
                let mut f = [0.0; 4];
                if !contacts.is_empty() {
                    for m in 0..4 {
                        let k = contacts.iter().filter(|&&c| choice[c] == m).count();
                        f[m] = k as f64 / contacts.len() as f64;
                    }
                }
                f
            };
            let fs = fractions(&global[i]);
            let fnb = fractions(&neighbour[i]);
            let desirability = v4(&cfg.subcultures[w.assignment.subculture[i] as usize].desirability);
            let mut budget = [0.0; 4];
            for m in 0..4 {
                let norm = social * fs[m] + neighbourhood_w * fnb[m] + subculture_w * desirability[m];
                budget[m] = (norm + consistency * habit[i][m]) * congestion[h][m];
            }

            let was_active = choice[i] == WALK || choice[i] == CYCLE;
            let resolve = match (yesterday, was_active) {
                (Weather::Wet, true) => 0.9,
                (Weather::Wet, false) => 1.1,
                (Weather::Dry, _) => 1.0,
            };
            let distance = category_row(cfg, rec.commute_category);
            let support = v4(&cfg.neighbourhoods.list[h].supportiveness);
            let modifier = v4(cfg.weather.modifier.get(today));
            let mut neg_cost = [0.0; 4];
            for m in 0..4 {
                let base = (distance[m] + (1.0 - support[m])) / 2.0;
                let factor = match cfg.decision.cost_composition {
                    CostComposition::Interpolated => 1.0 + sensitivity * resolve * (modifier[m] - 1.0),
                    CostComposition::Literal => sensitivity * modifier[m] * resolve,
                };
                neg_cost[m] = -(base * factor);
            }

            let b = ranks(budget, &tie);
            let c = ranks(neg_cost, &tie);
            let mut best: Option<(usize, u8)> = None;
            for &m in &tie {
                let allowed = Some(m) != banned
                    && (m != CAR || rec.car_owner)
                    && (m != CYCLE || rec.bicycle_owner);
                if allowed && best.is_none_or(|(_, s)| b[m] + c[m] > s) {
                    best = Some((m, b[m] + c[m]));
                }
            }
            next[i] = best.expect("walk or public transport is always allowed").0;
        }

        for i in 0..n {
            let decay = w.assignment.traits[i][5];
            for m in 0..4 {
                let chosen = if m == next[i] { 1.0 } else { 0.0 };
                habit[i][m] = decay * habit[i][m] + (1.0 - decay) * chosen;
            }
        }
        choice = next;
        for h in 0..hoods {
            for m in 0..4 {
                let journeys = (0..n)
                    .filter(|&i| w.assignment.neighbourhood[i] as usize == h && choice[i] == m)
                    .count() as f64;
                congestion[h][m] = if journeys <= capacity[h][m] || residents[h] == 0.0 {
                    1.0
                } else {
                    1.0 - (journeys - capacity[h][m]) / residents[h]
                };
            }
        }
        out.days.push((day, weekday, today, count(&choice)));
        out.choices.push(choice.clone());
    }
    out
}

pub fn engine_run(w: &World) -> Vec<DailyTrace> {
    let n = w.population.records.len();
    let networks = SocialNetworks {
        global: Graph::from_edges(n, &w.global_edges).unwrap(),
        neighbour: Graph::from_edges(n, &w.neighbour_edges).unwrap(),
    };
    run_scenario(
        &w.cfg,
        &w.population,
        &w.assignment,
        Arc::new(networks),
        Arc::new(WeatherSequence::new(w.weather.clone())),
        w.scenario,
        7,
    )
    .unwrap()
}

/// Mostly uniform, with a good share of exact 0, 1/2 and 1 to force ties.
fn unit<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 0.5,
        2 => 1.0,
        _ => rng.random(),
    }
}

fn mode_vec<R: Rng>(rng: &mut R) -> ModeVector<f64> {
    ModeVector::new(unit(rng), unit(rng), unit(rng), unit(rng))
}

fn edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(u32, u32)> {
    let mut e = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                e.push((u, v));
            }
        }
    }
    e
}

/// Case `case` of the randomised oracle suite: at most 5 agents and 10 days.
pub fn random_world(case: u64) -> World {
    let mut rng = derive_rng_stream(2024, "test/oracle", case);
    let n = rng.random_range(1..=5usize);
    let days = rng.random_range(1..=10u32);
    let hoods = rng.random_range(1..=3u32);
    let subcultures = rng.random_range(1..=3usize);

    let mut cfg = ScenarioConfig::desk();
    cfg.agent_count = n as u32;
    cfg.total_days = days;
    cfg.neighbourhood_count = hoods;
    cfg.subcultures =
        (0..subcultures).map(|k| Subculture { id: format!("s{k}"), desirability: mode_vec(&mut rng) }).collect();
    cfg.distance_cost.local = mode_vec(&mut rng);
    cfg.distance_cost.city = mode_vec(&mut rng);
    cfg.distance_cost.beyond = mode_vec(&mut rng);
    cfg.weather.modifier.wet = ModeVector::from_fn(|_| rng.random_range(0.5..2.0));
    cfg.weather.modifier.dry =
        if rng.random_bool(0.5) { ModeVector::splat(1.0) } else { ModeVector::from_fn(|_| rng.random_range(0.5..2.0)) };
    cfg.neighbourhoods.capacity_units =
        if rng.random_bool(0.5) { CapacityUnits::ResidentShare } else { CapacityUnits::Journeys };
    cfg.neighbourhoods.list = (0..hoods)
        .map(|h| NeighbourhoodSpec {
            id: format!("h{h}"),
            supportiveness: mode_vec(&mut rng),
            capacity: match cfg.neighbourhoods.capacity_units {
                CapacityUnits::ResidentShare => mode_vec(&mut rng),
                CapacityUnits::Journeys => ModeVector::from_fn(|_| rng.random_range(0..=3) as f64),
            },
        })
        .collect();
    cfg.decision.cost_composition =
        if rng.random_bool(0.7) { CostComposition::Interpolated } else { CostComposition::Literal };
    let mut tie = TransportMode::ALL;
    if rng.random_bool(0.5) {
        tie.shuffle(&mut rng);
    }
    cfg.decision.tie_break = tie;
    cfg.intervention.start_day = rng.random_range(0..10);
    cfg.intervention.weekday = rng.random_range(0..7);
    cfg.intervention.banned_mode = if rng.random_bool(0.8) { TransportMode::Car } else { TransportMode::Cycle };

    let records = (0..n)
        .map(|i| {
            let bicycle_owner = rng.random_bool(0.5);
            let car_owner = rng.random_bool(0.5);
            let mut allowed = vec![TransportMode::Walk, TransportMode::PublicTransport];
            if bicycle_owner {
                allowed.push(TransportMode::Cycle);
            }
            if car_owner {
                allowed.push(TransportMode::Car);
            }
            SynthAgentRecord {
                id: i as u32,
                attributes: Vec::new(),
                bicycle_owner,
                car_owner,
                commute_distance_m: 1000.0,
                commute_category: CommuteCategory::ALL[rng.random_range(0..3)],
                initial_mode: allowed[rng.random_range(0..allowed.len())],
            }
        })
        .collect();
    let assignment = AgentAssignment {
        neighbourhood: (0..n).map(|_| rng.random_range(0..hoods)).collect(),
        subculture: (0..n).map(|_| rng.random_range(0..subcultures) as u16).collect(),
        traits: (0..n).map(|_| std::array::from_fn(|_| unit(&mut rng))).collect(),
    };
    let p_global = rng.random_range(0.0..1.0);
    let p_neighbour = rng.random_range(0.0..1.0);
    let global_edges = edges(&mut rng, n, p_global);
    let neighbour_edges = edges(&mut rng, n, p_neighbour);
    let weather = (0..days).map(|_| if rng.random_bool(0.4) { Weather::Wet } else { Weather::Dry }).collect();
    let scenario = if rng.random_bool(0.7) { Scenario::CarFreeDays } else { Scenario::Control };

    World {
        cfg,
        population: Population { dimensions: Vec::new(), records },
        assignment,
        global_edges,
        neighbour_edges,
        weather,
        scenario,
    }
}

/// Days on which the engine and the reference disagree.
pub fn oracle_mismatches(w: &World) -> Vec<String> {
    let engine = engine_run(w);
    let reference = reference_run(w);
    let mut bad = Vec::new();
    if engine.len() != reference.days.len() {
        bad.push(format!("{} engine days vs {} reference days", engine.len(), reference.days.len()));
        return bad;
    }
    for (e, &(day, weekday, weather, counts)) in engine.iter().zip(&reference.days) {
        let ec = [e.counts.walk, e.counts.cycle, e.counts.public_transport, e.counts.car];
        if (e.day, e.weekday, e.weather, ec) != (day, weekday, weather, counts)
            || e.run_id != 7
            || e.scenario != w.scenario
        {
            bad.push(format!("day {day}: engine {:?} {ec:?}, reference {weather:?} {counts:?}", e.weather));
        }
    }
    bad
}
