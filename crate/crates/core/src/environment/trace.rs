//! Piecewise-constant bandwidth traces.
//!
//! On disk a trace is a CSV with the header `t_seconds,throughput_kbps`.
//! Each sample holds until the next timestamp; the last one holds forever and
//! the first one also covers any time before it.

use std::io::Read;

use serde::Deserialize;

use super::EnvironmentError;

pub const TRACE_HEADER: &str = "t_seconds,throughput_kbps";

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthTrace {
    samples: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct TraceRow {
    t_seconds: f64,
    throughput_kbps: f64,
}

impl BandwidthTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, EnvironmentError> {
        if samples.is_empty() {
            return Err(EnvironmentError::Trace("trace has no samples".into()));
        }
        for (i, &(t, c)) in samples.iter().enumerate() {
            if !t.is_finite() {
                return Err(EnvironmentError::Trace(format!("row {}: non-finite timestamp", i + 1)));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(EnvironmentError::Trace(format!(
                    "row {}: throughput must be positive, got {c}",
                    i + 1
                )));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(EnvironmentError::Trace(format!(
                    "row {}: timestamps must strictly increase",
                    i + 1
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn from_csv(reader: impl Read) -> Result<Self, EnvironmentError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| EnvironmentError::Trace(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if headers != TRACE_HEADER {
            return Err(EnvironmentError::Trace(format!(
                "expected header `{TRACE_HEADER}`, found `{headers}`"
            )));
        }
        let samples = rdr
            .deserialize::<TraceRow>()
            .map(|r| {
                r.map(|row| (row.t_seconds, row.throughput_kbps))
                    .map_err(|e| EnvironmentError::Trace(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(samples)
    }

    pub fn parse(text: &str) -> Result<Self, EnvironmentError> {
        Self::from_csv(text.as_bytes())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for (t, c) in &self.samples {
            out.push_str(&format!("{t},{c}\n"));
        }
        out
    }

    fn segment_at(&self, t: f64) -> usize {
        self.samples.partition_point(|s| s.0 <= t).saturating_sub(1)
    }

    pub fn bandwidth_at(&self, t: f64) -> f64 {
        self.samples[self.segment_at(t)].1
    }

    /// Seconds needed to move `kbits` starting at time `start`.
    pub fn download_time(&self, start: f64, kbits: f64) -> f64 {
        if kbits <= 0.0 {
            return 0.0;
        }
        let mut i = self.segment_at(start);
        let mut t = start;
        let mut left = kbits;
        loop {
            let rate = self.samples[i].1;
            match self.samples.get(i + 1) {
                Some(&(next, _)) if next > t => {
                    let span = next - t;
                    if rate * span >= left {
                        return t + left / rate - start;
                    }
                    left -= rate * span;
                    t = next;
                    i += 1;
                }
                Some(_) => i += 1,
                None => return t + left / rate - start,
            }
        }
    }

    /// Average throughput over `[start, start + secs]`.
    pub fn mean_over(&self, start: f64, secs: f64) -> f64 {
        if secs <= 0.0 {
            return self.bandwidth_at(start);
        }
        let end = start + secs;
        let mut kbits = 0.0;
        let mut i = self.segment_at(start);
        let mut t = start;
        while t < end {
            let stop = self.samples.get(i + 1).map_or(end, |s| s.0.min(end)).max(t);
            kbits += self.samples[i].1 * (stop - t);
            t = stop;
            i += 1;
            if i >= self.samples.len() {
                kbits += self.samples.last().unwrap().1 * (end - t);
                break;
            }
        }
        kbits / secs
    }
}

/// Converts a Neubot-style CSV export (columns `timestamp` in unix seconds
/// and `download_speed` in bytes/s, any others ignored) into a trace rebased
/// to `t = 0`. Rows with non-positive speed are dropped and only the first
/// row of a repeated timestamp is kept.
pub fn convert_neubot(reader: impl Read) -> Result<BandwidthTrace, EnvironmentError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| EnvironmentError::Trace(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EnvironmentError::Trace(format!("missing column `{name}`")))
    };
    let (ti, si) = (col("timestamp")?, col("download_speed")?);
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| EnvironmentError::Trace(e.to_string()))?;
        let field = |i: usize| -> Result<f64, EnvironmentError> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                EnvironmentError::Trace(format!("row {}: cannot parse `{raw}`", n + 2))
            })
        };
        let (t, speed) = (field(ti)?, field(si)?);
        if !t.is_finite() || !speed.is_finite() {
            return Err(EnvironmentError::Trace(format!("row {}: non-finite value", n + 2)));
        }
        if speed > 0.0 {
            rows.push((t, speed * 8.0 / 1000.0));
        }
    }
    // stable sort keeps file order among equal timestamps
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.dedup_by(|later, first| later.0 == first.0);
    let t0 = rows.first().map(|r| r.0).unwrap_or(0.0);
    BandwidthTrace::new(rows.into_iter().map(|(t, c)| (t - t0, c)).collect())
}
