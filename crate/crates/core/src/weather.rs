//! Two-state (wet/dry) Markov weather.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::mode::Weather;
use crate::rng::derive_rng_stream;

/// Daily rainfall above this many millimetres makes a wet day.
pub const WET_THRESHOLD_MM: f64 = 4.4;

/// Row-stochastic matrix, rows and columns ordered (wet, dry).
pub type TransitionMatrix = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeatherSequence(Vec<Weather>);

impl WeatherSequence {
    pub fn new(days: Vec<Weather>) -> Self {
        WeatherSequence(days)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, day: u32) -> Weather {
        self.0[day as usize]
    }

    pub fn days(&self) -> &[Weather] {
        &self.0
    }

    pub fn wet_fraction(&self) -> f64 {
        self.0.iter().filter(|w| **w == Weather::Wet).count() as f64 / self.0.len().max(1) as f64
    }

    /// Empirical transition frequencies (rows with no observations are NaN).
    pub fn empirical_transitions(&self) -> TransitionMatrix {
        let mut counts = [[0u64; 2]; 2];
        for w in self.0.windows(2) {
            counts[w[0].index()][w[1].index()] += 1;
        }
        let mut p = [[f64::NAN; 2]; 2];
        for (i, row) in counts.iter().enumerate() {
            let total = row[0] + row[1];
            if total > 0 {
                p[i] = [row[0] as f64 / total as f64, row[1] as f64 / total as f64];
            }
        }
        p
    }

    /// One line per day: `day,weather`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("day,weather\n");
        for (d, w) in self.0.iter().enumerate() {
            s.push_str(&format!("{d},{w}\n"));
        }
        s
    }
}

/// Label days wet when rain exceeds `threshold_mm` and count transitions.
/// A row with no observed transitions is smoothed to uniform (add-one).
pub fn estimate_transitions(daily_rain_mm: &[f64], threshold_mm: f64) -> Result<TransitionMatrix> {
    if daily_rain_mm.len() < 2 {
        return Err(Error::Parameter("need at least two days of rainfall".into()));
    }
    let labels: Vec<Weather> = daily_rain_mm
        .iter()
        .map(|&mm| if mm > threshold_mm { Weather::Wet } else { Weather::Dry })
        .collect();
    let mut counts = [[0u64; 2]; 2];
    for w in labels.windows(2) {
        counts[w[0].index()][w[1].index()] += 1;
    }
    let mut p = [[0.0; 2]; 2];
    for (i, row) in counts.iter().enumerate() {
        let total = row[0] + row[1];
        p[i] = if total == 0 {
            [0.5, 0.5]
        } else {
            [row[0] as f64 / total as f64, row[1] as f64 / total as f64]
        };
    }
    Ok(p)
}

/// Markov chain from `initial`: each day is drawn from the previous day's row.
pub fn generate_sequence<R: Rng + ?Sized>(
    matrix: &TransitionMatrix,
    initial: Weather,
    days: usize,
    rng: &mut R,
) -> WeatherSequence {
    let mut out = Vec::with_capacity(days);
    if days == 0 {
        return WeatherSequence(out);
    }
    out.push(initial);
    let mut prev = initial;
    for _ in 1..days {
        let p_wet = matrix[prev.index()][Weather::Wet.index()];
        let next = if rng.random::<f64>() < p_wet { Weather::Wet } else { Weather::Dry };
        out.push(next);
        prev = next;
    }
    WeatherSequence(out)
}

/// Long-run wet-day probability of a two-state chain.
pub fn stationary_wet(matrix: &TransitionMatrix) -> f64 {
    let wet_to_dry = matrix[0][1];
    let dry_to_wet = matrix[1][0];
    if wet_to_dry + dry_to_wet == 0.0 {
        return f64::NAN;
    }
    dry_to_wet / (wet_to_dry + dry_to_wet)
}

/// The single weather sequence shared by every replicate and scenario.
pub fn shared_sequence(cfg: &ScenarioConfig) -> WeatherSequence {
    let mut rng = derive_rng_stream(cfg.master_seed, "weather", 0);
    generate_sequence(&cfg.weather.transition, cfg.weather.initial, cfg.total_days as usize, &mut rng)
}

/// Rainfall series from a two-column `date,mm` file (header optional).
pub fn read_rainfall<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("rainfall", e))?;
        if rec.len() < 2 {
            return Err(Error::parse("rainfall", format!("row {} needs date,mm", i + 1)));
        }
        match rec[1].parse::<f64>() {
            Ok(mm) => out.push(mm),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::parse("rainfall", format!("row {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn load_rainfall(path: &Path) -> Result<Vec<f64>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rainfall(f)
}
