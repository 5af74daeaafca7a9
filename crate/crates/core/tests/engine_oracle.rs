mod common;

use std::sync::Arc;

use normshift::engine::{init_state, step_day, Scenario};
use normshift::netgen::{Graph, SocialNetworks};
use normshift::weather::WeatherSequence;
use normshift::TransportMode;

use common::{oracle_mismatches, random_world, reference_run};

#[test]
fn traces_match_reference_on_random_worlds() {
    let mut failures = Vec::new();
    for case in 0..100 {
        let w = random_world(case);
        let bad = oracle_mismatches(&w);
        if !bad.is_empty() {
            failures.push(format!("case {case}: {}", bad.join("; ")));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn every_agent_choice_matches_reference() {
    for case in 0..100 {
        let w = random_world(case);
        let n = w.population.records.len();
        let networks = SocialNetworks {
            global: Graph::from_edges(n, &w.global_edges).unwrap(),
            neighbour: Graph::from_edges(n, &w.neighbour_edges).unwrap(),
        };
        let mut state = init_state(
            &w.cfg,
            &w.population,
            &w.assignment,
            Arc::new(networks),
            Arc::new(WeatherSequence::new(w.weather.clone())),
        )
        .unwrap();
        let intervention = w.scenario.intervention(&w.cfg);
        let reference = reference_run(&w);
        let as_index = |c: &[TransportMode]| c.iter().map(|m| m.index()).collect::<Vec<_>>();
        assert_eq!(as_index(&state.choices), reference.choices[0], "case {case} day 0");
        for day in 1..w.cfg.total_days as usize {
            step_day(&mut state, &w.cfg, &intervention, 0, w.scenario);
            assert_eq!(as_index(&state.choices), reference.choices[day], "case {case} day {day}");
        }
    }
}

#[test]
fn random_worlds_exercise_the_interesting_paths() {
    // guard against a generator that never bans, never congests or never ties
    let worlds: Vec<_> = (0..100).map(random_world).collect();
    let banned_days = worlds
        .iter()
        .filter(|w| w.scenario == Scenario::CarFreeDays)
        .map(|w| (1..w.cfg.total_days).filter(|&d| w.cfg.intervention.banned_on(d).is_some()).count())
        .sum::<usize>();
    assert!(banned_days >= 10, "{banned_days}");
    assert!(worlds.iter().any(|w| w.population.records.len() == 5 && w.cfg.total_days == 10));
    assert!(worlds.iter().any(|w| w.global_edges.is_empty()));
    let switches = worlds
        .iter()
        .map(|w| {
            let r = reference_run(w);
            r.choices.windows(2).filter(|p| p[0] != p[1]).count()
        })
        .sum::<usize>();
    assert!(switches >= 50, "{switches}");
}
