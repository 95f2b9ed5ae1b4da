use super::{LibraryError, Result};
use std::path::Path;

/// Regression table: input columns (`Z`, `chi`) and target columns
/// (`T`, species mass fractions), row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(input_names: Vec<String>, target_names: Vec<String>) -> Dataset {
        Dataset {
            input_names,
            target_names,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, input: Vec<f64>, target: Vec<f64>) {
        debug_assert_eq!(input.len(), self.input_names.len());
        debug_assert_eq!(target.len(), self.target_names.len());
        self.inputs.push(input);
        self.targets.push(target);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn n_targets(&self) -> usize {
        self.target_names.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.input_names
            .iter()
            .chain(&self.target_names)
            .cloned()
            .collect()
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_names.iter().position(|n| n == name)
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            input_names: self.input_names.clone(),
            target_names: self.target_names.clone(),
            inputs: rows.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i].clone()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(LibraryError::Schema(format!(
                "{} input rows but {} target rows",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        for (r, (x, y)) in self.inputs.iter().zip(&self.targets).enumerate() {
            if x.len() != self.n_inputs() || y.len() != self.n_targets() {
                return Err(LibraryError::Schema(format!("row {r} has the wrong width")));
            }
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(LibraryError::Schema(format!(
                    "row {r} has a non-finite value"
                )));
            }
        }
        Ok(())
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

const INPUT_COLUMNS: [&str; 2] = ["Z", "chi"];

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    ds.validate()?;
    let mut w = csv::WriterBuilder::new()
        .from_path(path.as_ref())
        .map_err(csv_io)?;
    w.write_record(ds.column_names()).map_err(csv_io)?;
    let mut rec = Vec::with_capacity(ds.n_inputs() + ds.n_targets());
    for (x, y) in ds.inputs.iter().zip(&ds.targets) {
        rec.clear();
        rec.extend(x.iter().chain(y).map(|&v| format_float(v)));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> LibraryError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LibraryError::Io(io),
        other => LibraryError::Schema(format!("{other:?}")),
    }
}

/// Read a dataset whose header starts with `Z,chi,T` followed by species.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path.as_ref())
        .map_err(csv_io)?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_io)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 3
        || header[0] != INPUT_COLUMNS[0]
        || header[1] != INPUT_COLUMNS[1]
        || header[2] != "T"
    {
        return Err(LibraryError::Schema(format!(
            "header must begin with Z,chi,T; found {}",
            header.join(",")
        )));
    }
    for (i, name) in header.iter().enumerate() {
        if name.is_empty() || header[..i].contains(name) {
            return Err(LibraryError::Schema(format!(
                "bad or duplicate column name '{name}'"
            )));
        }
    }
    let mut ds = Dataset::new(header[..2].to_vec(), header[2..].to_vec());
    let width = header.len();
    let mut rec = csv::StringRecord::new();
    while r.read_record(&mut rec).map_err(csv_io)? {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(LibraryError::Schema(format!(
                "line {line} has {} fields, header has {width}",
                rec.len()
            )));
        }
        let mut vals = Vec::with_capacity(width);
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| LibraryError::Parse {
                row: line,
                col: c + 1,
                msg: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(LibraryError::Parse {
                    row: line,
                    col: c + 1,
                    msg: "non-finite value".into(),
                });
            }
            vals.push(v);
        }
        let targets = vals.split_off(2);
        ds.push(vals, targets);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1e-4,
            9.999e-5,
            1e16,
            123456789.123,
            f64::MIN_POSITIVE,
            f64::MAX,
            -2.5e-300,
            5e-324,
        ] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
        assert_eq!(format_float(300.15), "300.15");
        assert_eq!(format_float(1e-9), "1e-9");
    }
}
