use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FsError;
use crate::base::SeededRng;

/// Tabular classification data with integer-coded labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Row-major, `n_rows × n_features`.
    pub features: Vec<Vec<f64>>,
    /// Class index per row, into `class_names`.
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub label_column: String,
    /// Original label strings, in first-appearance order.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// The rows at `idx`, in that order, sharing this dataset's schema.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_column: self.label_column.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.feature_names == other.feature_names && self.class_names == other.class_names
    }
}

/// Checks the size requirements for running a feature search.
pub fn validate_for_selection(data: &Dataset) -> Result<(), FsError> {
    if data.n_rows() < 10 {
        return Err(FsError::TooSmall(format!("need at least 10 rows, got {}", data.n_rows())));
    }
    if data.n_features() < 2 {
        return Err(FsError::TooSmall(format!("need at least 2 features, got {}", data.n_features())));
    }
    Ok(())
}

/// How feature cells that do not parse as numbers are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellPolicy {
    /// A column with any non-numeric cell is categorical and integer-coded
    /// by first appearance (0, 1, 2, ...).
    #[default]
    Auto,
    /// Every feature must be numeric; rows with a non-numeric cell are
    /// dropped.
    Strict,
}

/// Ingestion result: the data plus how many rows were rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub dropped_rows: usize,
    /// 1-based data line numbers of dropped rows.
    pub dropped_lines: Vec<usize>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "?")
}

fn parse_num(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a CSV with a header row. Rows with a missing cell (empty, `NA`,
/// `NaN`, `?`), a wrong field count, or (in strict mode) a non-numeric
/// feature are dropped and counted.
pub fn read_csv<R: Read>(reader: R, label_column: &str, policy: CellPolicy) -> Result<Loaded, FsError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(|e| FsError::Csv(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(FsError::EmptyFile);
    }
    let label_at = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| FsError::MissingLabel { label: label_column.to_string(), available: header.clone() })?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut dropped_lines = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FsError::Csv(e.to_string()))?;
        let line = i + 1;
        if rec.len() != header.len() || rec.iter().any(is_missing) {
            dropped_lines.push(line);
            continue;
        }
        rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
        lines.push(line);
    }
    if rows.is_empty() && dropped_lines.is_empty() {
        return Err(FsError::EmptyFile);
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_at).collect();
    let categorical: Vec<bool> = match policy {
        CellPolicy::Auto => feature_cols.iter().map(|&c| rows.iter().any(|r| parse_num(&r[c]).is_none())).collect(),
        CellPolicy::Strict => vec![false; feature_cols.len()],
    };
    let mut codes: Vec<HashMap<String, usize>> = vec![HashMap::new(); feature_cols.len()];
    let mut class_of: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());

    'rows: for (row, line) in rows.iter().zip(lines) {
        let mut x = Vec::with_capacity(feature_cols.len());
        for (j, &c) in feature_cols.iter().enumerate() {
            if categorical[j] {
                let next = codes[j].len();
                x.push(*codes[j].entry(row[c].clone()).or_insert(next) as f64);
            } else {
                match parse_num(&row[c]) {
                    Some(v) => x.push(v),
                    None => {
                        dropped_lines.push(line);
                        continue 'rows;
                    }
                }
            }
        }
        let label = &row[label_at];
        let class = *class_of.entry(label.clone()).or_insert_with(|| {
            class_names.push(label.clone());
            class_names.len() - 1
        });
        features.push(x);
        labels.push(class);
    }
    dropped_lines.sort_unstable();
    if labels.is_empty() {
        return Err(FsError::AllRowsDropped { dropped: dropped_lines.len() });
    }
    Ok(Loaded {
        dataset: Dataset {
            features,
            labels,
            feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
            label_column: label_column.to_string(),
            class_names,
        },
        dropped_rows: dropped_lines.len(),
        dropped_lines,
    })
}

pub fn load_csv(path: &Path, label_column: &str, policy: CellPolicy) -> Result<Loaded, FsError> {
    let file = std::fs::File::open(path).map_err(|e| FsError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    read_csv(file, label_column, policy)
}

/// Writes features and labels as CSV, label column last. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_csv<W: std::io::Write>(data: &Dataset, writer: W) -> Result<(), FsError> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| FsError::Csv(e.to_string());
    let mut header = data.feature_names.clone();
    header.push(data.label_column.clone());
    w.write_record(&header).map_err(wrap)?;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(data.class_names[y].clone());
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| FsError::Csv(e.to_string()))
}

/// Test rows per class. The total is `floor(n · fraction)`, shared out by
/// largest remainder, then adjusted so every class has at least one test
/// and one training row.
pub fn stratified_allocation(class_counts: &[usize], fraction: f64) -> Result<Vec<usize>, FsError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(FsError::Config(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    if let Some(c) = class_counts.iter().position(|&n| n < 2) {
        return Err(FsError::Stratify { class: c, count: class_counts[c] });
    }
    let n: usize = class_counts.iter().sum();
    let total = (n as f64 * fraction).floor() as usize;
    let quotas: Vec<f64> = class_counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let mut short = total.saturating_sub(alloc.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if short == 0 {
            break;
        }
        if alloc[c] < class_counts[c] - 1 {
            alloc[c] += 1;
            short -= 1;
        }
    }
    for c in 0..alloc.len() {
        alloc[c] = alloc[c].clamp(1, class_counts[c] - 1);
    }
    // Restore the total where the floor of one was applied, taking from the
    // class with the most test rows.
    while alloc.iter().sum::<usize>() > total.max(alloc.len()) {
        let c = (0..alloc.len()).filter(|&c| alloc[c] > 1).max_by_key(|&c| (alloc[c], std::cmp::Reverse(c)));
        match c {
            Some(c) => alloc[c] -= 1,
            None => break,
        }
    }
    Ok(alloc)
}

/// Row indices of a stratified split: `(train, test)`, each ascending.
pub fn split_indices(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), FsError> {
    let alloc = stratified_allocation(&data.class_counts(), test_fraction)?;
    let mut rng = SeededRng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, &k) in alloc.iter().enumerate() {
        let mut members: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels[i] == class).collect();
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified random split into `(train, test)`.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), FsError> {
    let (train, test) = split_indices(data, test_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}
