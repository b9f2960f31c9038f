use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Multichannel sampled trajectory, one row per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    labels: Vec<String>,
}

impl TimeSeries {
    pub fn new(data: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let (len, ch) = data.shape();
        if len == 0 || ch == 0 {
            return Err(Error::InvalidArgument("time series needs at least one sample and channel".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("time series contains non-finite samples".into()));
        }
        let labels = match labels {
            Some(l) if l.len() != ch => {
                return Err(Error::Shape(format!("{} labels for {ch} channels", l.len())));
            }
            Some(l) => l,
            None => (1..=ch).map(|i| format!("ch{i}")).collect(),
        };
        Ok(TimeSeries { data, labels })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let len = columns.first().map(Vec::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::Shape("columns have different lengths".into()));
        }
        TimeSeries::new(DMatrix::from_fn(len, columns.len(), |t, j| columns[j][t]), None)
    }

    pub fn from_column(column: Vec<f64>) -> Result<Self> {
        TimeSeries::from_columns(&[column])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.channels() {
            return Err(Error::Shape("label count does not match channels".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        let len = self.len();
        &self.data.as_slice()[j * len..(j + 1) * len]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.data[(t, j)]
    }

    pub fn select_channels(&self, idx: &[usize]) -> Result<TimeSeries> {
        if let Some(bad) = idx.iter().find(|j| **j >= self.channels()) {
            return Err(Error::Shape(format!("channel {bad} out of range")));
        }
        let data = DMatrix::from_fn(self.len(), idx.len(), |t, k| self.data[(t, idx[k])]);
        TimeSeries::new(data, Some(idx.iter().map(|&j| self.labels[j].clone()).collect()))
    }

    /// Drop the first `n` samples.
    pub fn skip(&self, n: usize) -> Result<TimeSeries> {
        if n >= self.len() {
            return Err(Error::InsufficientData(format!("cannot discard {n} of {} samples", self.len())));
        }
        let data = self.data.rows(n, self.len() - n).into_owned();
        TimeSeries::new(data, Some(self.labels.clone()))
    }

    /// Channels side by side; lengths must agree.
    pub fn concat_channels(parts: &[&TimeSeries]) -> Result<TimeSeries> {
        let len = parts.first().map(|p| p.len()).ok_or_else(|| Error::Shape("nothing to concatenate".into()))?;
        if parts.iter().any(|p| p.len() != len) {
            return Err(Error::Shape("series lengths differ".into()));
        }
        let ch: usize = parts.iter().map(|p| p.channels()).sum();
        let mut data = DMatrix::zeros(len, ch);
        let mut labels = Vec::with_capacity(ch);
        let mut col = 0;
        for p in parts {
            for j in 0..p.channels() {
                data.set_column(col, &p.data.column(j));
                labels.push(p.labels[j].clone());
                col += 1;
            }
        }
        TimeSeries::new(data, Some(labels))
    }

    pub fn sub(&self, other: &TimeSeries) -> Result<TimeSeries> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::Shape("series shapes differ".into()));
        }
        TimeSeries::new(&self.data - &other.data, Some(self.labels.clone()))
    }

    pub fn add(&self, other: &TimeSeries) -> Result<TimeSeries> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::Shape("series shapes differ".into()));
        }
        TimeSeries::new(&self.data + &other.data, Some(self.labels.clone()))
    }

    pub fn scale(&self, s: f64) -> TimeSeries {
        TimeSeries { data: &self.data * s, labels: self.labels.clone() }
    }

    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// Sample variance per channel (mean removed, divisor `N`).
    pub fn variance(&self) -> Vec<f64> {
        (0..self.channels())
            .map(|j| {
                let c = self.channel(j);
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64
            })
            .collect()
    }

    /// CSV with header `t,<labels>` and 17-significant-digit samples. An
    /// optional comment is written first as a `# ` line.
    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut out = out;
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![t.to_string()];
            rec.extend((0..self.channels()).map(|j| format!("{:.16e}", self.data[(t, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<TimeSeries> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "t" {
            return Err(Error::Config("time series CSV must start with a `t` column".into()));
        }
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("row {}: {e}", line + 1)))?;
            if vals.len() != labels.len() {
                return Err(Error::Config(format!("row {} has {} values", line + 1, vals.len())));
            }
            rows.push(vals);
        }
        let data = DMatrix::from_fn(rows.len(), labels.len(), |t, j| rows[t][j]);
        TimeSeries::new(data, Some(labels))
    }

    pub fn save_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), comment)
    }

    pub fn load_csv(path: &Path) -> Result<TimeSeries> {
        TimeSeries::read_csv(std::fs::File::open(path)?)
    }
}
