//! Binomial regressions on aggregated daily traces.
//!
//! Model 1: `logit(pi_j) = alpha_j`, one intercept per scenario.
//! Model 2: `logit(pi_jk) = alpha_j + beta_j * wednesday_k`.
//! Priors are Student-t(3, 0, 1) on every coefficient; replicates of a
//! scenario are pooled into one binomial likelihood.

use std::collections::BTreeMap;
use std::io::Write;

use crate::engine::{DailyTrace, Scenario};
use crate::error::{Error, Result};

use super::mcmc::{metropolis_sample, SamplerSettings, Samples};
use super::summary::PosteriorSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRow {
    pub scenario: Scenario,
    pub replicate: u32,
    pub wednesday: bool,
    /// Active journeys.
    pub y: u64,
    /// All journeys.
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AggregatedCounts {
    pub rows: Vec<CountRow>,
}

impl AggregatedCounts {
    /// Pooled (y, n) for a scenario, optionally restricted to one stratum.
    pub fn total(&self, scenario: Scenario, wednesday: Option<bool>) -> (u64, u64) {
        self.rows
            .iter()
            .filter(|r| r.scenario == scenario && wednesday.is_none_or(|w| r.wednesday == w))
            .fold((0, 0), |(y, n), r| (y + r.y, n + r.n))
    }

    pub fn replicates(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.rows.iter().map(|r| r.replicate).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn only_replicate(&self, replicate: u32) -> AggregatedCounts {
        AggregatedCounts { rows: self.rows.iter().filter(|r| r.replicate == replicate).copied().collect() }
    }

    fn has(&self, scenario: Scenario, wednesday: Option<bool>) -> bool {
        self.total(scenario, wednesday).1 > 0
    }
}

/// First day included in the analysis: the post-intervention burn-in year is
/// dropped.
pub fn analysis_start(intervention_day: u32, burn_in_days: u32) -> u32 {
    intervention_day + burn_in_days
}

/// Sum active and total journeys per (scenario, replicate, Wednesday) over
/// days `>= start_day`. Errors when no trace reaches `start_day`.
pub fn aggregate_traces(traces: &[DailyTrace], start_day: u32, wednesday: u8) -> Result<AggregatedCounts> {
    let last = traces.iter().map(|t| t.day).max();
    if last.is_none_or(|d| d < start_day) {
        return Err(Error::Analysis(format!(
            "traces end at day {} but the analysis window starts at day {start_day} \
             (intervention day + one-year burn-in); simulate at least {} days",
            last.map_or("-".to_string(), |d| d.to_string()),
            start_day + 1
        )));
    }
    let mut acc: BTreeMap<(Scenario, u32, bool), (u64, u64)> = BTreeMap::new();
    for t in traces.iter().filter(|t| t.day >= start_day) {
        let e = acc.entry((t.scenario, t.run_id, t.weekday == wednesday)).or_default();
        e.0 += t.active() as u64;
        e.1 += t.total() as u64;
    }
    Ok(AggregatedCounts {
        rows: acc
            .into_iter()
            .map(|((scenario, replicate, wednesday), (y, n))| CountRow { scenario, replicate, wednesday, y, n })
            .collect(),
    })
}

/// Student-t(3, 0, 1) log density up to a constant.
pub fn student_t3_log_prior(x: f64) -> f64 {
    -2.0 * (1.0 + x * x / 3.0).ln()
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binomial log likelihood of `y` successes in `n` trials at logit `eta`.
pub fn binomial_logit_loglik(y: f64, n: f64, eta: f64) -> f64 {
    y * eta - n * softplus(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Intercepts,
    Wednesday,
}

impl Model {
    pub fn parse(k: u32) -> Result<Model> {
        match k {
            1 => Ok(Model::Intercepts),
            2 => Ok(Model::Wednesday),
            _ => Err(Error::Parameter(format!("model must be 1 or 2, got {k}"))),
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Model::Intercepts => &["alpha_control", "alpha_cfd"],
            Model::Wednesday => &["alpha_control", "alpha_cfd", "beta_control", "beta_cfd"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub model: Model,
    pub parameters: Vec<PosteriorSummary>,
    pub odds_ratios: Vec<PosteriorSummary>,
    pub samples: Samples,
}

impl ModelFit {
    pub fn get(&self, name: &str) -> Option<&PosteriorSummary> {
        self.parameters.iter().chain(&self.odds_ratios).find(|s| s.name == name)
    }

    pub fn max_rhat(&self) -> f64 {
        self.parameters.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Summaries are only trustworthy once every chain agrees.
    pub fn check_convergence(&self, threshold: f64) -> Result<()> {
        match self.parameters.iter().find(|p| !(p.rhat < threshold)) {
            Some(p) => Err(Error::Analysis(format!(
                "{} did not converge (R-hat {:.4} >= {threshold})",
                p.name, p.rhat
            ))),
            None => Ok(()),
        }
    }
}

fn require_both(counts: &AggregatedCounts, stratified: bool) -> Result<()> {
    for s in Scenario::BOTH {
        if !counts.has(s, None) {
            return Err(Error::Analysis("both scenarios required".into()));
        }
        if stratified && !(counts.has(s, Some(true)) && counts.has(s, Some(false))) {
            return Err(Error::Analysis(format!("scenario {s} lacks Wednesday or non-Wednesday days")));
        }
    }
    Ok(())
}

fn fit(model: Model, counts: &AggregatedCounts, settings: &SamplerSettings, mass: f64) -> Result<ModelFit> {
    require_both(counts, model == Model::Wednesday)?;
    let cell = |s, w| {
        let (y, n) = counts.total(s, w);
        (y as f64, n as f64)
    };
    let samples = match model {
        Model::Intercepts => {
            let data = [cell(Scenario::Control, None), cell(Scenario::CarFreeDays, None)];
            let lp = move |p: &[f64]| {
                (0..2).map(|j| student_t3_log_prior(p[j]) + binomial_logit_loglik(data[j].0, data[j].1, p[j])).sum()
            };
            metropolis_sample(&lp, 2, settings)?
        }
        Model::Wednesday => {
            // [scenario][non-Wednesday, Wednesday]
            let data = Scenario::BOTH.map(|s| [cell(s, Some(false)), cell(s, Some(true))]);
            let lp = move |p: &[f64]| {
                let mut total = p.iter().map(|&v| student_t3_log_prior(v)).sum::<f64>();
                for j in 0..2 {
                    let (alpha, beta) = (p[j], p[2 + j]);
                    total += binomial_logit_loglik(data[j][0].0, data[j][0].1, alpha);
                    total += binomial_logit_loglik(data[j][1].0, data[j][1].1, alpha + beta);
                }
                total
            };
            metropolis_sample(&lp, 4, settings)?
        }
    };
    let parameters = model
        .parameter_names()
        .iter()
        .enumerate()
        .map(|(k, name)| PosteriorSummary::from_chains(*name, samples.parameter(k), mass))
        .collect();
    let odds_ratios = odds_ratios(model, &samples, mass);
    Ok(ModelFit { model, parameters, odds_ratios, samples })
}

pub fn fit_model1(counts: &AggregatedCounts, settings: &SamplerSettings, mass: f64) -> Result<ModelFit> {
    fit(Model::Intercepts, counts, settings, mass)
}

pub fn fit_model2(counts: &AggregatedCounts, settings: &SamplerSettings, mass: f64) -> Result<ModelFit> {
    fit(Model::Wednesday, counts, settings, mass)
}

pub fn fit_model(model: Model, counts: &AggregatedCounts, settings: &SamplerSettings, mass: f64) -> Result<ModelFit> {
    fit(model, counts, settings, mass)
}

/// Odds and odds ratios, each computed draw by draw before summarising.
/// Parameter order is that of [`Model::parameter_names`].
pub fn odds_ratios(model: Model, samples: &Samples, mass: f64) -> Vec<PosteriorSummary> {
    let s = |name: &str, f: &dyn Fn(&[f64]) -> f64| PosteriorSummary::from_chains(name, samples.transform(f), mass);
    match model {
        Model::Intercepts => vec![
            s("odds_control", &|p| p[0].exp()),
            s("odds_cfd", &|p| p[1].exp()),
            s("or_cfd_vs_control", &|p| (p[1] - p[0]).exp()),
        ],
        Model::Wednesday => vec![
            s("odds_control", &|p| p[0].exp()),
            s("or_non_wednesday_cfd_vs_control", &|p| (p[1] - p[0]).exp()),
            s("or_wednesday_control", &|p| p[2].exp()),
            s("or_wednesday_cfd", &|p| p[3].exp()),
            s("or_wednesday_cfd_vs_control", &|p| ((p[1] + p[3]) - (p[0] + p[2])).exp()),
        ],
    }
}

/// Rows `name,mean,hpdi_low,hpdi_high,rhat`.
pub fn write_summary_table<W: Write>(w: W, rows: &[PosteriorSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::parse("summary table", e);
    out.write_record(["name", "mean", "hpdi_low", "hpdi_high", "rhat"]).map_err(err)?;
    for r in rows {
        out.write_record([
            r.name.clone(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.hpdi_low),
            format!("{:.6}", r.hpdi_high),
            format!("{:.4}", r.rhat),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::parse("summary table", e))?;
    Ok(())
}
