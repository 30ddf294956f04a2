//! Multichannel series, chronological splitting, standardisation and
//! sliding windows.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Real-valued series stored channel-major: `values[(c, t)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeries {
    values: Matrix,
    channel_names: Vec<String>,
    timestamps: Option<Vec<String>>,
}

impl MultiSeries {
    pub fn new(
        values: Matrix,
        channel_names: Vec<String>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        let (channels, len) = values.shape();
        if channels == 0 || len == 0 {
            return Err(Error::NoData);
        }
        if channel_names.len() != channels {
            return Err(Error::InvalidInput(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                channels
            )));
        }
        if !values.is_finite() {
            return Err(Error::InvalidInput("series contains non-finite values".into()));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != len {
                return Err(Error::InvalidInput(format!(
                    "{} timestamps for {} steps",
                    ts.len(),
                    len
                )));
            }
            // ISO-8601 strings of a fixed layout order lexicographically.
            if let Some(i) = ts.windows(2).position(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!(
                    "timestamps not strictly increasing at step {}",
                    i + 1
                )));
            }
        }
        Ok(MultiSeries {
            values,
            channel_names,
            timestamps,
        })
    }

    /// Builds a series from per-channel vectors with generated names `ch0..`.
    pub fn from_channels(channels: Vec<Vec<f64>>) -> Result<Self> {
        let c = channels.len();
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|ch| ch.len() != len) {
            return Err(Error::InvalidInput("channels of unequal length".into()));
        }
        let data: Vec<f64> = channels.into_iter().flatten().collect();
        let names = (0..c).map(|i| format!("ch{i}")).collect();
        MultiSeries::new(Matrix::from_vec(c, len, data)?, names, None)
    }

    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        self.values.row(c)
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    /// Contiguous sub-range `[start, end)` of time steps.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidInput(format!(
                "bad slice {start}..{end} of length {}",
                self.len()
            )));
        }
        let values = Matrix::from_fn(self.channels(), end - start, |c, t| {
            self.values[(c, start + t)]
        });
        Ok(MultiSeries {
            values,
            channel_names: self.channel_names.clone(),
            timestamps: self.timestamps.as_ref().map(|ts| ts[start..end].to_vec()),
        })
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select_channels(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() || keep.iter().any(|&c| c >= self.channels()) {
            return Err(Error::InvalidInput("bad channel selection".into()));
        }
        let values = Matrix::from_fn(keep.len(), self.len(), |c, t| self.values[(keep[c], t)]);
        let names = keep.iter().map(|&c| self.channel_names[c].clone()).collect();
        MultiSeries::new(values, names, self.timestamps.clone())
    }

    fn map_channels(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let values = Matrix::from_fn(self.channels(), self.len(), |c, t| f(c, self.values[(c, t)]));
        MultiSeries {
            values,
            channel_names: self.channel_names.clone(),
            timestamps: self.timestamps.clone(),
        }
    }
}

/// How a series is cut into train / validation / test segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Train and validation lengths are `floor(fraction * L)`; test takes the rest.
    Fractional { train: f64, val: f64, test: f64 },
    /// 12 / 4 / 4 months of 30 days. `steps_per_hour` is 1 for ETTh and 4 for
    /// ETTm; rows past the 20 months are unused.
    EttPreset { steps_per_hour: usize },
}

impl SplitSpec {
    pub const ETT_HOURLY: SplitSpec = SplitSpec::EttPreset { steps_per_hour: 1 };
    pub const ETT_MINUTE: SplitSpec = SplitSpec::EttPreset { steps_per_hour: 4 };

    pub fn fractional(train: f64, val: f64, test: f64) -> Result<Self> {
        let spec = SplitSpec::Fractional { train, val, test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitSpec::Fractional { train, val, test } => {
                let ok = |f: f64| f > 0.0 && f < 1.0;
                if !(ok(train) && ok(val) && ok(test)) {
                    return Err(Error::InvalidConfig(
                        "split fractions must lie in (0, 1)".into(),
                    ));
                }
                if libm::fabs(train + val + test - 1.0) > 1e-9 {
                    return Err(Error::InvalidConfig("split fractions must sum to 1".into()));
                }
            }
            SplitSpec::EttPreset { steps_per_hour } => {
                if steps_per_hour == 0 {
                    return Err(Error::InvalidConfig("steps_per_hour must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Segment lengths `(train, val, test)` for a series of length `len`.
    pub fn lengths(&self, len: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let (train, val, test) = match *self {
            SplitSpec::Fractional { train, val, .. } => {
                // Tiny epsilon so that e.g. 0.6 * 10 does not floor to 5.
                let n_train = libm::floor(train * len as f64 + 1e-9) as usize;
                let n_val = libm::floor(val * len as f64 + 1e-9) as usize;
                let n_test = len.saturating_sub(n_train + n_val);
                (n_train, n_val, n_test)
            }
            SplitSpec::EttPreset { steps_per_hour } => {
                let month = 30 * 24 * steps_per_hour;
                let (train, val, test) = (12 * month, 4 * month, 4 * month);
                if len < train + val + test {
                    return Err(Error::SeriesTooShort {
                        len,
                        needed: train + val + test,
                    });
                }
                (train, val, test)
            }
        };
        if train == 0 {
            return Err(Error::SplitTooSmall("train"));
        }
        if val == 0 {
            return Err(Error::SplitTooSmall("validation"));
        }
        if test == 0 {
            return Err(Error::SplitTooSmall("test"));
        }
        Ok((train, val, test))
    }
}

/// Contiguous chronological train / validation / test split.
pub fn time_split(
    series: &MultiSeries,
    spec: &SplitSpec,
) -> Result<(MultiSeries, MultiSeries, MultiSeries)> {
    let (train, val, test) = spec.lengths(series.len())?;
    Ok((
        series.slice(0, train)?,
        series.slice(train, train + val)?,
        series.slice(train + val, train + val + test)?,
    ))
}

/// Per-channel standardisation fitted on a training segment.
///
/// Uses the sample standard deviation (divisor `L - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &MultiSeries) -> Result<Self> {
        let len = train.len();
        if len < 2 {
            return Err(Error::NoData);
        }
        let mut mean = Vec::with_capacity(train.channels());
        let mut std = Vec::with_capacity(train.channels());
        for c in 0..train.channels() {
            let xs = train.channel(c);
            let m = xs.iter().sum::<f64>() / len as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (len - 1) as f64;
            let s = libm::sqrt(var);
            if !(s > 0.0) || s <= 1e-12 * (1.0 + libm::fabs(m)) {
                return Err(Error::DegenerateChannel { channel: c });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Scaler { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    fn check(&self, series: &MultiSeries) -> Result<()> {
        if series.channels() != self.mean.len() {
            return Err(Error::shape(
                (self.mean.len(), series.len()),
                (series.channels(), series.len()),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, series: &MultiSeries) -> Result<MultiSeries> {
        self.check(series)?;
        Ok(series.map_channels(|c, x| (x - self.mean[c]) / self.std[c]))
    }

    pub fn invert(&self, series: &MultiSeries) -> Result<MultiSeries> {
        self.check(series)?;
        Ok(series.map_channels(|c, x| x * self.std[c] + self.mean[c]))
    }
}

/// Fits a [`Scaler`] on `train` and applies it to `train` and every series in
/// `others`.
pub fn fit_apply_scaler(
    train: &MultiSeries,
    others: &[&MultiSeries],
) -> Result<(MultiSeries, Vec<MultiSeries>, Scaler)> {
    let scaler = Scaler::fit(train)?;
    let scaled_train = scaler.apply(train)?;
    let scaled = others
        .iter()
        .map(|s| scaler.apply(s))
        .collect::<Result<Vec<_>>>()?;
    Ok((scaled_train, scaled, scaler))
}

/// One supervised example: `input` (T x C) immediately followed by `target`
/// (S x C). Rows are time steps, columns channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    pub input: Matrix,
    pub target: Matrix,
    pub origin_index: usize,
}

impl WindowPair {
    pub fn lookback(&self) -> usize {
        self.input.rows()
    }

    pub fn horizon(&self) -> usize {
        self.target.rows()
    }

    pub fn channels(&self) -> usize {
        self.input.cols()
    }
}

/// Sliding windows over one segment, origins `0, stride, 2*stride, ...`.
pub fn make_windows(
    series: &MultiSeries,
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<WindowPair>> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::InvalidConfig(
            "lookback, horizon and stride must be positive".into(),
        ));
    }
    let len = series.len();
    let needed = lookback + horizon;
    if len < needed {
        return Err(Error::SeriesTooShort { len, needed });
    }
    let channels = series.channels();
    let values = series.values();
    let count = (len - needed) / stride + 1;
    Ok((0..count)
        .map(|w| {
            let origin = w * stride;
            WindowPair {
                input: Matrix::from_fn(lookback, channels, |t, c| values[(c, origin + t)]),
                target: Matrix::from_fn(horizon, channels, |t, c| {
                    values[(c, origin + lookback + t)]
                }),
                origin_index: origin,
            }
        })
        .collect())
}
