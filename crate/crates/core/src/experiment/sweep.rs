use std::fmt;
use std::str::FromStr;

use crate::config::CONFIG_KEYS;

use super::RunnerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Log,
    /// start, 2·start, 4·start, … (at most `points` values, none above stop).
    Doubling,
}

impl FromStr for SweepScale {
    type Err = RunnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(SweepScale::Linear),
            "log" => Ok(SweepScale::Log),
            "doubling" => Ok(SweepScale::Doubling),
            other => Err(RunnerError::InvalidSweep(format!("unknown scale `{other}`"))),
        }
    }
}

impl fmt::Display for SweepScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepScale::Linear => "linear",
            SweepScale::Log => "log",
            SweepScale::Doubling => "doubling",
        })
    }
}

/// One swept config key, written `key:start:stop:points:scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: SweepScale,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        match self.scale {
            SweepScale::Linear if n == 1 => vec![self.start],
            SweepScale::Linear => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
            SweepScale::Log if n == 1 => vec![self.start],
            SweepScale::Log => {
                let ratio = self.stop / self.start;
                (0..n)
                    .map(|i| self.start * ratio.powf(i as f64 / (n - 1) as f64))
                    .collect()
            }
            SweepScale::Doubling => (0..n as i32)
                .map(|i| self.start * 2f64.powi(i))
                .take_while(|v| *v <= self.stop * (1.0 + 1e-12))
                .collect(),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = RunnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [key, start, stop, points, scale] = parts.as_slice() else {
            return Err(RunnerError::InvalidSweep(format!(
                "expected key:start:stop:points:scale, got `{s}`"
            )));
        };
        if !CONFIG_KEYS.contains(key) {
            return Err(RunnerError::UnknownSweepKey(key.to_string()));
        }
        let number = |what: &str, v: &str| -> Result<f64, RunnerError> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| RunnerError::InvalidSweep(format!("{what} `{v}` is not a number")))
        };
        let axis = SweepAxis {
            key: key.to_string(),
            start: number("start", start)?,
            stop: number("stop", stop)?,
            points: points.parse().ok().filter(|p| *p > 0).ok_or_else(|| {
                RunnerError::InvalidSweep(format!("points `{points}` must be a positive integer"))
            })?,
            scale: scale.parse()?,
        };
        if matches!(axis.scale, SweepScale::Log | SweepScale::Doubling)
            && !(axis.start > 0.0 && axis.stop > 0.0)
        {
            return Err(RunnerError::InvalidSweep(format!(
                "{} sweeps need positive start and stop",
                axis.scale
            )));
        }
        Ok(axis)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.key, self.start, self.stop, self.points, self.scale
        )
    }
}
