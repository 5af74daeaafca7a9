//! Moving-average active-share series for plotting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use normshift::engine::{DailyTrace, Scenario};
use normshift::stats::PosteriorSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub run_id: u32,
    pub scenario: Scenario,
    /// Last day of the averaging window.
    pub day: u32,
    pub active_share: f64,
}

/// Trailing `window`-day active share per run: active journeys over all
/// journeys in the window. A run of `d` days yields `d - window + 1` points.
pub fn moving_average(traces: &[DailyTrace], window: usize) -> Vec<SeriesPoint> {
    assert!(window > 0, "window must be positive");
    let mut runs: BTreeMap<(u32, Scenario), Vec<&DailyTrace>> = BTreeMap::new();
    for t in traces {
        runs.entry((t.run_id, t.scenario)).or_default().push(t);
    }
    let mut out = Vec::new();
    for ((run_id, scenario), mut days) in runs {
        days.sort_by_key(|t| t.day);
        if days.len() < window {
            continue;
        }
        let (mut active, mut total) = (0u64, 0u64);
        for (i, t) in days.iter().enumerate() {
            active += t.active() as u64;
            total += t.total() as u64;
            if i >= window {
                active -= days[i - window].active() as u64;
                total -= days[i - window].total() as u64;
            }
            if i + 1 >= window {
                let active_share = if total == 0 { 0.0 } else { active as f64 / total as f64 };
                out.push(SeriesPoint { run_id, scenario, day: t.day, active_share });
            }
        }
    }
    out
}

pub fn format_report(
    points: &[SeriesPoint],
    intervention_day: u32,
    window: usize,
    summary: &[PosteriorSummary],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# intervention_day={intervention_day} window={window}");
    for p in summary {
        let _ = writeln!(
            s,
            "# {} mean={:.6} hpdi_low={:.6} hpdi_high={:.6} rhat={:.4}",
            p.name, p.mean, p.hpdi_low, p.hpdi_high, p.rhat
        );
    }
    s.push_str("run_id,scenario,day,active_share_ma\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{:.6}", p.run_id, p.scenario, p.day, p.active_share);
    }
    s
}

/// Read back a table written by `analyze`.
pub fn parse_summary_table(text: &str) -> Result<Vec<PosteriorSummary>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != 5 {
            return Err(format!("row {}: expected 5 columns", i + 1));
        }
        let num = |k: usize| rec[k].parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        out.push(PosteriorSummary {
            name: rec[0].to_string(),
            mean: num(1)?,
            hpdi_low: num(2)?,
            hpdi_high: num(3)?,
            rhat: num(4)?,
            chains: Vec::new(),
        });
    }
    Ok(out)
}
