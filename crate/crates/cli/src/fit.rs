//! Log-log decay fit over two columns of a CSV table.

use std::path::Path;

use cgolab::fit::{fit_decay, DecayFit};

#[derive(Debug)]
pub enum FitError {
    /// Unreadable file or missing column.
    Input(String),
    /// The samples do not admit a fit.
    Numerical(String),
}

impl std::fmt::Display for FitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitError::Input(m) | FitError::Numerical(m) => f.write_str(m),
        }
    }
}

/// Exact header match, else the unique header starting with `name`.
fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, FitError> {
    if let Some(k) = headers.iter().position(|h| h == name) {
        return Ok(k);
    }
    let hits: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with(name))
        .map(|(k, _)| k)
        .collect();
    match hits.as_slice() {
        [k] => Ok(*k),
        [] => Err(FitError::Input(format!("no column named {name}"))),
        _ => Err(FitError::Input(format!("column prefix {name} is ambiguous"))),
    }
}

/// `filter` keeps rows whose column equals the given text, e.g. `("nx", "257")`.
pub fn fit_table(path: &Path, x: &str, y: &str, filter: Option<(&str, &str)>) -> Result<DecayFit, FitError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| FitError::Input(format!("{}: {e}", path.display())))?;
    let headers = rd.headers().map_err(|e| FitError::Input(e.to_string()))?.clone();
    let (kx, ky) = (column(&headers, x)?, column(&headers, y)?);
    let kf = match filter {
        Some((col, v)) => Some((column(&headers, col)?, v)),
        None => None,
    };
    let mut samples = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| FitError::Input(e.to_string()))?;
        if let Some((k, v)) = kf {
            if &rec[k] != v {
                continue;
            }
        }
        let parse = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| FitError::Input(format!("row {}: {:?} is not a number", line + 1, &rec[k])))
        };
        samples.push((parse(kx)?, parse(ky)?));
    }
    fit_decay(&samples).map_err(|e| FitError::Numerical(e.to_string()))
}
