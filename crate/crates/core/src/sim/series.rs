// SPDX-License-Identifier: Apache-2.0

//! Sample series and their long-format CSV encoding:
//!
//! ```text
//! experiment,datapath,param_count,match_index,rep,metric,value,unit
//! ```

use std::io::{self, Write};

use super::config::DatapathKind;

pub const CSV_HEADER: &str = "experiment,datapath,param_count,match_index,rep,metric,value,unit";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RttNs,
    ThroughputBps,
    ConfigTimeNs,
    LoadTimeNs,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RttNs => "rtt_ns",
            Metric::ThroughputBps => "throughput_Bps",
            Metric::ConfigTimeNs => "config_time_ns",
            Metric::LoadTimeNs => "load_time_ns",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Samples for one value of the independent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub param_count: usize,
    pub match_index: Option<usize>,
    pub samples: Vec<f64>,
}

impl SeriesPoint {
    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    /// Mean of the last `n` samples (all of them if there are fewer).
    pub fn tail_mean(&self, n: usize) -> f64 {
        let start = self.samples.len().saturating_sub(n);
        mean(&self.samples[start..])
    }

    pub fn summary(&self) -> Summary {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        Summary {
            mean: mean(&sorted),
            p50: percentile(&sorted, 0.50),
            p95: percentile(&sorted, 0.95),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank percentile of already sorted samples.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub experiment: String,
    pub datapath: DatapathKind,
    pub metric: Metric,
    pub unit: &'static str,
    pub points: Vec<SeriesPoint>,
}

impl SampleSeries {
    pub fn new(
        experiment: impl Into<String>,
        datapath: DatapathKind,
        metric: Metric,
        unit: &'static str,
    ) -> Self {
        Self {
            experiment: experiment.into(),
            datapath,
            metric,
            unit,
            points: Vec::new(),
        }
    }

    pub fn with_point(mut self, point: SeriesPoint) -> Self {
        self.points.push(point);
        self
    }

    /// Appends the points of `other`, which must describe the same
    /// measurement.
    pub fn extend(&mut self, other: SampleSeries) {
        assert_eq!(
            (&self.experiment, self.datapath, self.metric, self.unit),
            (&other.experiment, other.datapath, other.metric, other.unit),
            "merging unrelated series"
        );
        self.points.extend(other.points);
    }

    pub fn point(&self, param_count: usize) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.param_count == param_count)
    }

    pub fn write_rows<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for point in &self.points {
            let match_index = point.match_index.map(|m| m.to_string()).unwrap_or_default();
            for (rep, value) in point.samples.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    self.experiment,
                    self.datapath,
                    point.param_count,
                    match_index,
                    rep,
                    self.metric.as_str(),
                    value,
                    self.unit
                )?;
            }
        }
        Ok(())
    }
}

/// Writes a complete CSV document: a `#` comment naming the seed, the
/// header, then every series in order.
pub fn write_csv<W: Write>(out: &mut W, seed: u64, series: &[SampleSeries]) -> io::Result<()> {
    writeln!(out, "# seed={seed}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for s in series {
        s.write_rows(out)?;
    }
    Ok(())
}
