//! Series ingestion, sliding windows, min-max scaling, chronological splits,
//! a seeded synthetic load generator, and forecasting metrics.

use std::f64::consts::TAU;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derived_rng;

pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_COLUMN: &str = "load";
pub const DAILY_PERIOD: usize = 24;
pub const WEEKLY_PERIOD: usize = 168;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite value at index {i}")));
        }
        Ok(Series { name: name.into(), values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn file_error(path: &Path, message: impl Into<String>) -> Error {
    Error::DataFile { path: path.to_path_buf(), message: message.into() }
}

fn sniff_delimiter(header: &str) -> u8 {
    b",;\t"
        .iter()
        .copied()
        .max_by_key(|&d| header.bytes().filter(|&b| b == d).count())
        .filter(|d| header.as_bytes().contains(d))
        .unwrap_or(b',')
}

/// Reads column `column` of a headered delimited file (comma, semicolon or
/// tab, picked from the header line).
pub fn load_series(path: &Path, column: &str) -> Result<Series> {
    let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e.to_string()))?;
    parse_series(&text, column).map_err(|e| match e {
        Error::Data(m) => file_error(path, m),
        other => other,
    })
}

/// [`load_series`] on in-memory text.
pub fn parse_series(text: &str, column: &str) -> Result<Series> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.trim().is_empty() {
        return Err(Error::data("empty file"));
    }
    if let Some(i) = body.lines().position(|l| l.trim().is_empty()) {
        return Err(Error::data(format!("line {}: blank line", i + 1)));
    }
    let header = body.lines().next().unwrap_or_default();
    let mut reader =
        csv::ReaderBuilder::new().delimiter(sniff_delimiter(header)).trim(csv::Trim::All).from_reader(body.as_bytes());
    let col = reader
        .headers()
        .map_err(|e| Error::data(format!("line 1: {e}")))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::data(format!("column `{column}` not found in header")))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(col).ok_or_else(|| Error::data(format!("line {line}: missing `{column}` field")))?;
        let v: f64 =
            field.parse().map_err(|_| Error::data(format!("line {line}: cannot parse `{field}` as a number")))?;
        if !v.is_finite() {
            return Err(Error::data(format!("line {line}: non-finite value `{field}`")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::data("no data rows"));
    }
    Series::new(column, values)
}

/// Sample counts per split, taken chronologically in the order train, val, test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSpec {
    pub fn new(train: usize, val: usize, test: usize) -> Self {
        SplitSpec { train, val, test }
    }

    /// 70/15/15 of `samples`, with the rounding remainder going to test.
    pub fn default_for(samples: usize) -> Self {
        let train = samples * 70 / 100;
        let val = samples * 15 / 100;
        SplitSpec { train, val, test: samples - train - val }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: f64,
    pub max: f64,
}

impl NormParams {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::data(format!("degenerate normalization range [{min}, {max}]")));
        }
        Ok(NormParams { min, max })
    }

    pub fn fit(values: &[f64]) -> Result<Self> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        NormParams::new(min, max)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        x * (self.max - self.min) + self.min
    }
}

pub fn normalize(x: f64, x_min: f64, x_max: f64) -> Result<f64> {
    Ok(NormParams::new(x_min, x_max)?.normalize(x))
}

pub fn denormalize(x: f64, x_min: f64, x_max: f64) -> Result<f64> {
    Ok(NormParams::new(x_min, x_max)?.denormalize(x))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    /// `m` rows of `w` consecutive values.
    pub windows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Index of the first sample within the full windowed sequence.
    pub offset: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window_refs(&self) -> Vec<&[f64]> {
        self.windows.iter().map(Vec::as_slice).collect()
    }

    fn range(&self, r: std::ops::Range<usize>) -> WindowedDataset {
        WindowedDataset {
            windows: self.windows[r.clone()].to_vec(),
            targets: self.targets[r.clone()].to_vec(),
            offset: self.offset + r.start,
        }
    }

    /// Every `stride`-th sample, starting with the first.
    pub fn strided(&self, stride: usize) -> WindowedDataset {
        let stride = stride.max(1);
        WindowedDataset {
            windows: self.windows.iter().step_by(stride).cloned().collect(),
            targets: self.targets.iter().step_by(stride).copied().collect(),
            offset: self.offset,
        }
    }
}

/// Raw sliding windows: sample `i` is `values[i..i+w]` with target `values[i+w]`.
pub fn sliding_windows(values: &[f64], window: usize) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::data("window size must be at least 1"));
    }
    if values.len() <= window {
        return Err(Error::data(format!("series of length {} is too short for window {window}", values.len())));
    }
    let m = values.len() - window;
    Ok(WindowedDataset {
        windows: (0..m).map(|i| values[i..i + window].to_vec()).collect(),
        targets: values[window..].to_vec(),
        offset: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub window: usize,
    pub split: SplitSpec,
    pub norm: NormParams,
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

/// Windows the series, splits it chronologically, and scales every split
/// with the min/max of the values the training samples touch.
pub fn make_windows(series: &Series, window: usize, split: SplitSpec) -> Result<DatasetSplits> {
    let raw = sliding_windows(&series.values, window)?;
    let m = raw.len();
    if split.total() > m {
        return Err(Error::data(format!(
            "split {}+{}+{} exceeds the {m} available samples",
            split.train, split.val, split.test
        )));
    }
    if split.train == 0 {
        return Err(Error::data("training split is empty"));
    }
    let norm = NormParams::fit(&series.values[..split.train + window])?;
    let scaled = WindowedDataset {
        windows: raw.windows.iter().map(|w| w.iter().map(|&x| norm.normalize(x)).collect()).collect(),
        targets: raw.targets.iter().map(|&x| norm.normalize(x)).collect(),
        offset: 0,
    };
    let (a, b) = (split.train, split.train + split.val);
    Ok(DatasetSplits {
        window,
        split,
        norm,
        train: scaled.range(0..a),
        val: scaled.range(a..b),
        test: scaled.range(b..b + split.test),
    })
}

/// Amplitudes of the synthetic generator, in load units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthComponents {
    pub level: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    /// Increase per hour.
    pub trend: f64,
    pub noise_std: f64,
}

impl Default for SynthComponents {
    fn default() -> Self {
        SynthComponents { level: 5000.0, daily_amplitude: 800.0, weekly_amplitude: 300.0, trend: 0.05, noise_std: 40.0 }
    }
}

/// `level + daily·sin(2πt/24) + weekly·sin(2πt/168) + trend·t + N(0, σ²)`.
/// Phases are taken modulo each period so that the noiseless, trendless
/// series repeats exactly.
pub fn synthesize_series(length: usize, seed: u64, c: &SynthComponents) -> Result<Series> {
    if length == 0 {
        return Err(Error::data("synthetic series needs a positive length"));
    }
    let noise = Normal::new(0.0, c.noise_std.abs()).map_err(|e| Error::data(e.to_string()))?;
    let mut rng = derived_rng(seed, "synthetic-noise", &[]);
    let values = (0..length)
        .map(|t| {
            let daily = (TAU * (t % DAILY_PERIOD) as f64 / DAILY_PERIOD as f64).sin();
            let weekly = (TAU * (t % WEEKLY_PERIOD) as f64 / WEEKLY_PERIOD as f64).sin();
            let eps = if c.noise_std == 0.0 { 0.0 } else { noise.sample(&mut rng) };
            c.level + c.daily_amplitude * daily + c.weekly_amplitude * weekly + c.trend * t as f64 + eps
        })
        .collect();
    Series::new("synthetic", values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// NaN when the true values are constant; see `r2_defined`.
    #[serde(with = "nan_as_null")]
    pub r2: f64,
    pub r2_defined: bool,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<ForecastMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::data(format!("{} true values vs {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::data("metrics need at least one sample"));
    }
    let m = y_true.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (t, p) in y_true.iter().zip(y_pred) {
        abs += (t - p).abs();
        sq += (t - p) * (t - p);
    }
    let mean = y_true.iter().sum::<f64>() / m;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    let r2_defined = ss_tot > 0.0;
    Ok(ForecastMetrics {
        mae: abs / m,
        rmse: (sq / m).sqrt(),
        r2: if r2_defined { 1.0 - sq / ss_tot } else { f64::NAN },
        r2_defined,
    })
}

/// Where a prepared dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    File { path: String, column: String },
    Synthetic { length: usize, seed: u64, components: SynthComponents },
}

/// Self-describing prepared dataset, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArtifact {
    pub source: DataSource,
    pub series_length: usize,
    pub seed: Option<u64>,
    pub normalization: String,
    #[serde(flatten)]
    pub data: DatasetSplits,
}

impl DatasetArtifact {
    pub fn new(source: DataSource, series_length: usize, data: DatasetSplits) -> Self {
        let seed = match &source {
            DataSource::Synthetic { seed, .. } => Some(*seed),
            DataSource::File { .. } => None,
        };
        DatasetArtifact { source, series_length, seed, normalization: "train-min-max".into(), data }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| file_error(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| file_error(path, format!("invalid dataset artifact: {e}")))
    }
}
