use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use normshift::config::validate_config;
use normshift::engine::{assign_agents, load_traces, run_replicate, write_traces, DailyTrace, Scenario};
use normshift::io::{sha256_file, sha256_hex, write_atomic};
use normshift::mode::WEDNESDAY;
use normshift::netgen::io::format_edge_list;
use normshift::netgen::{generate_networks, graph_stats, Graph};
use normshift::popgen::io::{load_marginals, load_population, load_seed_table, save_population};
use normshift::popgen::synthesize_population;
use normshift::stats::{aggregate_traces, analysis_start, fit_model, write_summary_table, Model, PosteriorSummary};
use normshift::weather::{estimate_transitions, load_rainfall, shared_sequence, WET_THRESHOLD_MM};
use normshift::{Error, ScenarioConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::fail::{CliResult, Failure};
use crate::manifest::{trace_file_name, RunManifest, RunRecord, RunStatus};
use crate::report::{format_report, moving_average, parse_summary_table};
use crate::{Cli, Command, GlobalArgs};

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Failure::invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(format!("cannot start thread pool: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Synth { seed_table, marginals } => synth(g, seed_table.as_deref(), marginals.as_deref()),
        Command::Net { replicate } => net(g, replicate),
        Command::Simulate { population, replicates, scenarios, rainfall, force } => {
            simulate(g, population, replicates.as_deref(), &scenarios, rainfall.as_deref(), force)
        }
        Command::Analyze { traces, model, per_replicate, out } => analyze(g, traces, model, per_replicate, out),
        Command::Report { traces, summary, out } => report(g, traces, summary.as_deref(), out),
    }
}

/// The configuration with command-line overrides applied, not yet validated.
fn load_config(g: &GlobalArgs) -> CliResult<ScenarioConfig> {
    let mut cfg = match &g.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn validated(cfg: ScenarioConfig) -> CliResult<ScenarioConfig> {
    let report = validate_config(&cfg);
    if report.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Invalid(report).into())
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn synth(g: &GlobalArgs, seed_table: Option<&Path>, marginals: Option<&Path>) -> CliResult<()> {
    let mut cfg = load_config(g)?;
    if let Some(path) = seed_table {
        cfg.population.seed_table = load_seed_table(path)?;
    }
    if let Some(path) = marginals {
        cfg.population.marginals = load_marginals(path, &cfg.population.seed_table)?;
    }
    let cfg = validated(cfg)?;
    let pop = synthesize_population(&cfg)?;
    let pop_path = g.out_dir.join("population.csv");
    save_population(&pop, &pop_path)?;
    let mut summary = serde_json::to_string_pretty(&pop.summary()).expect("summary serialises");
    summary.push('\n');
    write_text(&g.out_dir.join("population_summary.json"), &summary)?;
    print!("{summary}");
    eprintln!("wrote {} ({} agents)", pop_path.display(), pop.len());
    Ok(())
}

#[derive(Serialize)]
struct NetSummary {
    file: String,
    nodes: usize,
    edges: usize,
    mean_degree: f64,
    max_degree: usize,
    mean_clustering: f64,
    mean_path_length: f64,
}

fn net(g: &GlobalArgs, replicate: u32) -> CliResult<()> {
    let cfg = validated(load_config(g)?)?;
    let assignment = assign_agents(&cfg);
    let nets = generate_networks(&cfg, &assignment.neighbourhood, replicate as u64)?;
    let net_cfg = &cfg.network;
    let mut summaries = Vec::new();
    for (kind, graph, params) in [
        ("global", &nets.global, format!("k={} beta={}", net_cfg.small_world_k, net_cfg.small_world_beta)),
        ("neighbour", &nets.neighbour, format!("m0={} m={}", net_cfg.ba_m0, net_cfg.ba_m)),
    ] {
        let rel = format!("networks/run{replicate}_{kind}.edges");
        let mut header = vec![("kind".to_string(), kind.to_string())];
        header.extend(params.split(' ').filter_map(|p| p.split_once('=')).map(|(k, v)| (k.into(), v.into())));
        header.push(("seed".into(), cfg.master_seed.to_string()));
        header.push(("replicate".into(), replicate.to_string()));
        write_text(&g.out_dir.join(&rel), &format_edge_list(graph, &header))?;
        summaries.push(net_summary(rel, graph, cfg.master_seed));
    }
    println!("{}", serde_json::to_string_pretty(&summaries).expect("summary serialises"));
    Ok(())
}

fn net_summary(file: String, graph: &Graph, seed: u64) -> NetSummary {
    let stats = graph_stats(graph, 100, seed);
    let n = graph.node_count();
    NetSummary {
        file,
        nodes: n,
        edges: graph.edge_count(),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * graph.edge_count() as f64 / n as f64 },
        max_degree: stats.degree_histogram.len().saturating_sub(1),
        mean_clustering: stats.mean_clustering,
        mean_path_length: stats.mean_path_length,
    }
}

/// Inclusive replicate ranges: `n`, `a..b` or `a..=b` (the last two are
/// the same), so `0..4` means five replicates.
pub fn parse_replicates(spec: &str) -> Result<Vec<u32>, String> {
    let num = |s: &str| s.trim().parse::<u32>().map_err(|e| format!("bad replicate range '{spec}': {e}"));
    let (lo, hi) = match spec.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = num(spec)?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(format!("replicate range '{spec}' is empty"));
    }
    Ok((lo..=hi).collect())
}

fn simulate(
    g: &GlobalArgs,
    population: Option<PathBuf>,
    replicates: Option<&str>,
    scenarios: &[String],
    rainfall: Option<&Path>,
    force: bool,
) -> CliResult<()> {
    let mut cfg = load_config(g)?;
    if let Some(path) = rainfall {
        cfg.weather.transition = estimate_transitions(&load_rainfall(path)?, WET_THRESHOLD_MM)?;
    }
    let cfg = validated(cfg)?;
    let replicates = match replicates {
        Some(spec) => parse_replicates(spec).map_err(Failure::invalid)?,
        None => (0..cfg.network_replicates).collect(),
    };
    let mut wanted: Vec<Scenario> =
        scenarios.iter().map(|s| s.parse::<Scenario>()).collect::<Result<_, _>>().map_err(Failure::invalid)?;
    wanted.sort();
    wanted.dedup();

    let pop_path = population.unwrap_or_else(|| g.out_dir.join("population.csv"));
    let pop = load_population(&pop_path, &cfg.population.seed_table.dimensions)?;
    if pop.len() != cfg.agent_count as usize {
        return Err(Failure::invalid(format!(
            "{} holds {} agents but the configuration expects {}",
            pop_path.display(),
            pop.len(),
            cfg.agent_count
        )));
    }

    let fresh = RunManifest {
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        population_sha256: sha256_file(&pop_path)?,
        total_days: cfg.total_days,
        replicates: replicates.clone(),
        scenarios: wanted.iter().map(|s| s.to_string()).collect(),
        runs: Vec::new(),
    };
    let mut manifest = match RunManifest::load(&g.out_dir)? {
        Some(old) if old.same_inputs(&fresh) => {
            let mut m = old;
            m.replicates.extend(&fresh.replicates);
            m.scenarios.extend(fresh.scenarios.iter().cloned());
            m
        }
        Some(old) if !force => {
            return Err(Failure::runtime(format!(
                "{} belongs to a batch with different inputs (config {}, seed {}); \
                 use --force to replace it or choose another --out-dir",
                RunManifest::path(&g.out_dir).display(),
                &old.config_hash[..12.min(old.config_hash.len())],
                old.master_seed
            )));
        }
        _ => fresh,
    };

    let mut todo: BTreeMap<u32, Vec<Scenario>> = BTreeMap::new();
    for &r in &replicates {
        for &s in &wanted {
            if force || !manifest.verified(&g.out_dir, r, s.as_str())? {
                todo.entry(r).or_default().push(s);
                manifest.upsert(RunRecord {
                    replicate: r,
                    scenario: s.to_string(),
                    path: trace_file_name(r, s.as_str()),
                    status: RunStatus::Pending,
                    sha256: None,
                });
            }
        }
    }
    manifest.save(&g.out_dir)?;
    let weather = Arc::new(shared_sequence(&cfg));
    write_text(&g.out_dir.join("weather.txt"), &weather.to_text())?;
    write_text(&g.out_dir.join("config.resolved.json"), &cfg.to_json_string())?;

    let skipped = replicates.len() * wanted.len() - todo.values().map(Vec::len).sum::<usize>();
    if skipped > 0 {
        eprintln!("{skipped} run(s) already complete; skipping");
    }
    let assignment = assign_agents(&cfg);
    let manifest = Mutex::new(manifest);
    let jobs: Vec<(u32, Vec<Scenario>)> = todo.into_iter().collect();
    jobs.par_iter().try_for_each(|(r, scens)| -> CliResult<()> {
        let runs = run_replicate(&cfg, &pop, &assignment, weather.clone(), scens, *r)?;
        for (s, traces) in scens.iter().zip(runs) {
            let rel = trace_file_name(*r, s.as_str());
            let sha = store_traces(&g.out_dir.join(&rel), &traces, force)?;
            let mut m = manifest.lock().expect("manifest lock");
            m.upsert(RunRecord {
                replicate: *r,
                scenario: s.to_string(),
                path: rel.clone(),
                status: RunStatus::Complete,
                sha256: Some(sha),
            });
            m.save(&g.out_dir)?;
            eprintln!("wrote {rel}");
        }
        Ok(())
    })?;
    let m = manifest.into_inner().expect("manifest lock");
    let done = m.runs.iter().filter(|r| r.status == RunStatus::Complete).count();
    println!("{done} of {} recorded runs complete in {}", m.runs.len(), g.out_dir.display());
    Ok(())
}

/// Write a trace file unless a different file already sits at `path`.
fn store_traces(path: &Path, traces: &[DailyTrace], force: bool) -> CliResult<String> {
    let mut buf = Vec::new();
    write_traces(&mut buf, traces)?;
    let sha = sha256_hex(&buf);
    if !force && path.exists() && sha256_file(path)? != sha {
        return Err(Failure::runtime(format!(
            "{} exists with different contents and is not recorded in the manifest; \
             use --force to overwrite it",
            path.display()
        )));
    }
    write_atomic(path, &buf)?;
    Ok(sha)
}

fn load_trace_glob(g: &GlobalArgs, pattern: Option<String>) -> CliResult<Vec<DailyTrace>> {
    let pattern = pattern.unwrap_or_else(|| g.out_dir.join("traces").join("*.csv").to_string_lossy().into_owned());
    let paths: Vec<PathBuf> = glob::glob(&pattern)
        .map_err(|e| Failure::io(format!("bad glob '{pattern}': {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::io(e.to_string()))?;
    if paths.is_empty() {
        return Err(Failure::io(format!("no trace files match '{pattern}'")));
    }
    let per_file = paths.par_iter().map(|p| load_traces(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

fn analyze(
    g: &GlobalArgs,
    traces: Option<String>,
    model: u32,
    per_replicate: bool,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let cfg = validated(load_config(g)?)?;
    let model = Model::parse(model).map_err(|e| Failure::invalid(e.to_string()))?;
    let traces = load_trace_glob(g, traces)?;
    let start = analysis_start(cfg.intervention_day(), cfg.analysis.burn_in_days);
    let counts = aggregate_traces(&traces, start, WEDNESDAY)?;
    let settings = cfg.analysis.sampler(cfg.master_seed);
    let mass = cfg.analysis.hpdi_mass;

    let fit = fit_model(model, &counts, &settings, mass)?;
    fit.check_convergence(cfg.analysis.rhat_threshold)?;
    let mut rows: Vec<PosteriorSummary> = fit.parameters.into_iter().chain(fit.odds_ratios).collect();
    if per_replicate {
        for r in counts.replicates() {
            let f = fit_model(model, &counts.only_replicate(r), &settings, mass)?;
            f.check_convergence(cfg.analysis.rhat_threshold)?;
            rows.extend(f.parameters.into_iter().chain(f.odds_ratios).map(|mut p| {
                p.name = format!("{}[r{r}]", p.name);
                p
            }));
        }
    }
    let mut buf = Vec::new();
    write_summary_table(&mut buf, &rows)?;
    let out = out.unwrap_or_else(|| {
        g.out_dir.join(format!("summary_model{}.csv", if model == Model::Intercepts { 1 } else { 2 }))
    });
    write_atomic(&out, &buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    eprintln!("wrote {} (analysis window starts at day {start})", out.display());
    Ok(())
}

fn report(g: &GlobalArgs, traces: Option<String>, summary: Option<&Path>, out: Option<PathBuf>) -> CliResult<()> {
    let cfg = validated(load_config(g)?)?;
    let traces = load_trace_glob(g, traces)?;
    let summary = match summary {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            parse_summary_table(&text).map_err(|e| Failure::io(format!("failed to parse {}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    let window = cfg.analysis.moving_average_window as usize;
    let points = moving_average(&traces, window);
    let out = out.unwrap_or_else(|| g.out_dir.join("report.csv"));
    write_text(&out, &format_report(&points, cfg.intervention_day(), window, &summary))?;
    eprintln!("wrote {} ({} points)", out.display(), points.len());
    Ok(())
}
