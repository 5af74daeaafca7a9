//! Delimited-text formats for seed tables, marginals and populations.
//!
//! Seed table: header `<dim_1>,...,<dim_k>,weight`, one row per non-zero
//! cell. Categories are ordered by first appearance; cells not listed are 0.
//!
//! Marginals: header `dimension,category,count`.
//!
//! Population: header `id,<dim_1>,...,<dim_k>,bicycle_owner,car_owner,
//! commute_distance_m,commute_category,initial_mode`, one row per agent in
//! id order.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dimension, Marginal, MarginalSet, Population, SeedTable, SynthAgentRecord};
use crate::error::{Error, Result};

fn csv_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::parse(what, e)
}

pub fn read_seed_table<R: Read>(reader: R) -> Result<SeedTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err("seed table", e))?.clone();
    if headers.len() < 2 || &headers[headers.len() - 1] != "weight" {
        return Err(csv_err("seed table", "last column must be 'weight'"));
    }
    let k = headers.len() - 1;
    let mut dims: Vec<Dimension> = headers
        .iter()
        .take(k)
        .map(|h| Dimension { name: h.to_string(), categories: Vec::new() })
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err("seed table", e))?;
        let mut idx = Vec::with_capacity(k);
        for (d, dim) in dims.iter_mut().enumerate() {
            let label = &rec[d];
            let pos = match dim.categories.iter().position(|c| c == label) {
                Some(p) => p,
                None => {
                    dim.categories.push(label.to_string());
                    dim.categories.len() - 1
                }
            };
            idx.push(pos);
        }
        let w: f64 = rec[k].parse().map_err(|e| csv_err("seed table weight", e))?;
        rows.push((idx, w));
    }
    let shape: Vec<usize> = dims.iter().map(|d| d.categories.len()).collect();
    let mut cells = vec![0.0; shape.iter().product()];
    for (idx, w) in rows {
        let flat = idx.iter().zip(&shape).fold(0, |acc, (&i, &n)| acc * n + i);
        cells[flat] += w;
    }
    let table = SeedTable { dimensions: dims, cells };
    table.check_shape()?;
    Ok(table)
}

/// Marginals, ordered to match `seed`'s dimension and category layout.
pub fn read_marginals<R: Read>(reader: R, seed: &SeedTable) -> Result<MarginalSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut found: HashMap<String, Vec<Option<f64>>> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err("marginals", e))?;
        if rec.len() != 3 {
            return Err(csv_err("marginals", "expected columns dimension,category,count"));
        }
        let d = seed
            .dimension_index(&rec[0])
            .ok_or_else(|| csv_err("marginals", format!("unknown dimension '{}'", &rec[0])))?;
        let k = seed.dimensions[d]
            .categories
            .iter()
            .position(|c| c == &rec[1])
            .ok_or_else(|| csv_err("marginals", format!("unknown category '{}={}'", &rec[0], &rec[1])))?;
        let count: f64 = rec[2].parse().map_err(|e| csv_err("marginal count", e))?;
        let slot = found.entry(rec[0].to_string()).or_insert_with(|| {
            order.push(rec[0].to_string());
            vec![None; seed.dimensions[d].categories.len()]
        });
        slot[k] = Some(count);
    }
    let mut marginals = Vec::new();
    for name in order {
        let counts = found.remove(&name).expect("present");
        let counts = counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| csv_err("marginals", format!("'{name}' missing category #{k}"))))
            .collect::<Result<Vec<_>>>()?;
        marginals.push(Marginal { dimension: name, counts });
    }
    Ok(MarginalSet { marginals })
}

pub fn load_seed_table(path: &Path) -> Result<SeedTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_seed_table(f)
}

pub fn load_marginals(path: &Path, seed: &SeedTable) -> Result<MarginalSet> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_marginals(f, seed)
}

pub fn write_seed_table<W: Write>(table: &SeedTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.dimensions.iter().map(|d| d.name.as_str()).collect();
    header.push("weight");
    w.write_record(&header).map_err(|e| csv_err("seed table", e))?;
    for (c, weight) in table.cells.iter().enumerate() {
        if *weight == 0.0 {
            continue;
        }
        let idx = table.unravel(c);
        let mut row: Vec<String> =
            idx.iter().zip(&table.dimensions).map(|(&k, d)| d.categories[k].clone()).collect();
        row.push(weight.to_string());
        w.write_record(&row).map_err(|e| csv_err("seed table", e))?;
    }
    w.flush().map_err(|e| csv_err("seed table", e))
}

pub fn write_marginals<W: Write>(set: &MarginalSet, seed: &SeedTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dimension", "category", "count"]).map_err(|e| csv_err("marginals", e))?;
    for m in &set.marginals {
        let d = seed
            .dimension_index(&m.dimension)
            .ok_or_else(|| csv_err("marginals", format!("unknown dimension '{}'", m.dimension)))?;
        for (cat, count) in seed.dimensions[d].categories.iter().zip(&m.counts) {
            w.write_record([m.dimension.as_str(), cat.as_str(), &count.to_string()])
                .map_err(|e| csv_err("marginals", e))?;
        }
    }
    w.flush().map_err(|e| csv_err("marginals", e))
}

pub fn write_population<W: Write>(pop: &Population, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(pop.dimensions.iter().map(|d| d.name.clone()));
    header.extend(
        ["bicycle_owner", "car_owner", "commute_distance_m", "commute_category", "initial_mode"]
            .map(String::from),
    );
    w.write_record(&header).map_err(|e| csv_err("population", e))?;
    for r in &pop.records {
        let mut row = vec![r.id.to_string()];
        row.extend(r.attributes.iter().zip(&pop.dimensions).map(|(&k, d)| d.categories[k as usize].clone()));
        row.push(r.bicycle_owner.to_string());
        row.push(r.car_owner.to_string());
        row.push(r.commute_distance_m.to_string());
        row.push(r.commute_category.to_string());
        row.push(r.initial_mode.to_string());
        w.write_record(&row).map_err(|e| csv_err("population", e))?;
    }
    w.flush().map_err(|e| csv_err("population", e))
}

/// Parse a population file. Dimension categories must match `dims`.
pub fn read_population<R: Read>(reader: R, dims: &[Dimension]) -> Result<Population> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err("population", e))?.clone();
    let k = dims.len();
    let expected_len = 1 + k + 5;
    if headers.len() != expected_len || &headers[0] != "id" {
        return Err(csv_err("population", format!("expected {expected_len} columns starting with 'id'")));
    }
    for (d, dim) in dims.iter().enumerate() {
        if headers[1 + d] != dim.name {
            return Err(csv_err(
                "population",
                format!("column {} is '{}', expected '{}'", d + 2, &headers[1 + d], dim.name),
            ));
        }
    }
    let parse_bool = |s: &str| match s {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(csv_err("population", format!("bad boolean '{other}'"))),
    };
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err("population", e))?;
        let id: u32 = rec[0].parse().map_err(|e| csv_err("population id", e))?;
        if id as usize != row {
            return Err(csv_err("population", format!("row {row} has id {id}; ids must be 0..n in order")));
        }
        let mut attributes = Vec::with_capacity(k);
        for (d, dim) in dims.iter().enumerate() {
            let label = &rec[1 + d];
            let pos = dim
                .categories
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| csv_err("population", format!("unknown {}='{label}'", dim.name)))?;
            attributes.push(pos as u16);
        }
        records.push(SynthAgentRecord {
            id,
            attributes,
            bicycle_owner: parse_bool(&rec[k + 1])?,
            car_owner: parse_bool(&rec[k + 2])?,
            commute_distance_m: rec[k + 3].parse().map_err(|e| csv_err("commute distance", e))?,
            commute_category: rec[k + 4].parse().map_err(|e: String| csv_err("population", e))?,
            initial_mode: rec[k + 5].parse().map_err(|e: String| csv_err("population", e))?,
        });
    }
    Ok(Population { dimensions: dims.to_vec(), records })
}

pub fn save_population(pop: &Population, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_population(pop, &mut buf)?;
    crate::io::write_atomic(path, &buf)
}

pub fn load_population(path: &Path, dims: &[Dimension]) -> Result<Population> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_population(f, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::popgen::{default_marginals, default_seed_table, synthesize_population};

    #[test]
    fn seed_table_text_round_trip() {
        let t = default_seed_table();
        let mut buf = Vec::new();
        write_seed_table(&t, &mut buf).unwrap();
        let back = read_seed_table(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let m = default_marginals();
        let mut buf = Vec::new();
        write_marginals(&m, &t, &mut buf).unwrap();
        assert_eq!(read_marginals(buf.as_slice(), &t).unwrap(), m);
    }

    #[test]
    fn sparse_seed_rows_fill_zeros() {
        let text = "sex,age,weight\nf,young,2\nm,old,3\n";
        let t = read_seed_table(text.as_bytes()).unwrap();
        assert_eq!(t.cells, vec![2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn population_round_trip() {
        let mut cfg = ScenarioConfig::desk();
        cfg.agent_count = 300;
        let pop = synthesize_population(&cfg).unwrap();
        let mut buf = Vec::new();
        write_population(&pop, &mut buf).unwrap();
        let back = read_population(buf.as_slice(), &pop.dimensions).unwrap();
        assert_eq!(back, pop);
        let mut again = Vec::new();
        write_population(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn unknown_marginal_category_rejected() {
        let t = default_seed_table();
        let text = "dimension,category,count\nsex,other,10\n";
        assert!(read_marginals(text.as_bytes(), &t).is_err());
    }
}
