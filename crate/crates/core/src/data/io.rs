//! Newline-delimited JSON datasets, one sample per line:
//! `{family, variant, n, d, features, edges, seed}` with row-major features
//! and `[i, j]` edges, `i < j`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sample::{adjacency_from_edges, Family, GraphSample};
use crate::error::{GlnError, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    family: Family,
    variant: String,
    n: usize,
    d: usize,
    features: Vec<f64>,
    edges: Vec<[usize; 2]>,
    seed: u64,
}

pub fn to_line(sample: &GraphSample) -> Result<String> {
    let record = Record {
        family: sample.family,
        variant: sample.variant.clone(),
        n: sample.n(),
        d: sample.feature_dim(),
        features: sample.features.as_slice().to_vec(),
        edges: sample.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        seed: sample.seed,
    };
    Ok(serde_json::to_string(&record)?)
}

pub fn from_line(line: &str) -> Result<GraphSample> {
    let r: Record = serde_json::from_str(line)?;
    if r.edges.iter().any(|&[i, j]| i >= j) {
        return Err(GlnError::Format("edges must be listed as [i, j] with i < j".into()));
    }
    let features = DenseMatrix::from_vec(r.n, r.d, r.features)?;
    let edges: Vec<(usize, usize)> = r.edges.into_iter().map(|[i, j]| (i, j)).collect();
    let adjacency = adjacency_from_edges(r.n, &edges)?;
    GraphSample::new(r.family, r.variant, features, adjacency, r.seed)
}

pub fn write_ndjson<'a>(writer: impl Write, samples: impl IntoIterator<Item = &'a GraphSample>) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for s in samples {
        writeln!(w, "{}", to_line(s)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ndjson(reader: impl std::io::Read) -> Result<Vec<GraphSample>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_line(&line).map_err(|e| GlnError::Format(format!("line {}: {e}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn save_dataset(path: &Path, samples: &[GraphSample]) -> Result<()> {
    write_ndjson(File::create(path)?, samples)
}

pub fn load_dataset(path: &Path) -> Result<Vec<GraphSample>> {
    read_ndjson(File::open(path)?)
}
