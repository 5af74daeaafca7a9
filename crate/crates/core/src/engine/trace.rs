use std::io::{Read, Write};
use std::path::Path;

use super::Scenario;
use crate::error::{Error, Result};
use crate::mode::{ModeVector, Weather};

/// Mode counts for one run, scenario and day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyTrace {
    pub run_id: u32,
    pub scenario: Scenario,
    pub day: u32,
    pub weekday: u8,
    pub weather: Weather,
    pub counts: ModeVector<u32>,
}

impl DailyTrace {
    pub fn active(&self) -> u32 {
        self.counts.walk + self.counts.cycle
    }

    pub fn total(&self) -> u32 {
        self.counts.walk + self.counts.cycle + self.counts.public_transport + self.counts.car
    }

    pub fn active_share(&self) -> f64 {
        self.active() as f64 / self.total().max(1) as f64
    }
}

pub const TRACE_HEADER: [&str; 9] =
    ["run_id", "scenario", "day", "weekday", "weather", "n_walk", "n_cycle", "n_pt", "n_car"];

pub fn write_traces<W: Write>(writer: W, traces: &[DailyTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::parse("trace", e);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for t in traces {
        w.write_record([
            t.run_id.to_string(),
            t.scenario.to_string(),
            t.day.to_string(),
            t.weekday.to_string(),
            t.weather.to_string(),
            t.counts.walk.to_string(),
            t.counts.cycle.to_string(),
            t.counts.public_transport.to_string(),
            t.counts.car.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::parse("trace", e))?;
    Ok(())
}

pub fn read_traces<R: Read>(reader: R) -> Result<Vec<DailyTrace>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| Error::parse("trace", e))?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::parse("trace", format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse("trace", e))?;
        let bad = |field: &str, e: &dyn std::fmt::Display| Error::parse("trace", format!("row {}: {field}: {e}", i + 1));
        macro_rules! num {
            ($k:expr, $name:expr) => {
                rec[$k].parse().map_err(|e| bad($name, &e))?
            };
        }
        out.push(DailyTrace {
            run_id: num!(0, "run_id"),
            scenario: rec[1].parse().map_err(|e: String| bad("scenario", &e))?,
            day: num!(2, "day"),
            weekday: num!(3, "weekday"),
            weather: rec[4].parse().map_err(|e: String| bad("weather", &e))?,
            counts: ModeVector::new(num!(5, "n_walk"), num!(6, "n_cycle"), num!(7, "n_pt"), num!(8, "n_car")),
        });
    }
    Ok(out)
}

pub fn save_traces(path: &Path, traces: &[DailyTrace]) -> Result<()> {
    let mut buf = Vec::new();
    write_traces(&mut buf, traces)?;
    crate::io::write_atomic(path, &buf)
}

pub fn load_traces(path: &Path) -> Result<Vec<DailyTrace>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_traces(f)
}
