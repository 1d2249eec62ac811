//! Multi-channel discrete-time signals with uniform sampling.

use std::io;
use std::path::Path;

use indexmap::IndexMap;

use super::StlError;

/// Uniformly sampled multi-channel trace. All channels share the same length
/// and sample period; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dt: f64,
    len: usize,
    channels: IndexMap<String, Vec<f64>>,
}

impl Signal {
    pub fn new(dt: f64, channels: IndexMap<String, Vec<f64>>) -> Result<Self, StlError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(StlError::InvalidSignal { reason: format!("sample period {dt} must be positive") });
        }
        let mut len = None;
        for (name, values) in &channels {
            match len {
                None => len = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(StlError::InvalidSignal {
                        reason: format!(
                            "channel `{name}` has {} samples, expected {n}",
                            values.len()
                        ),
                    });
                }
                _ => {}
            }
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(StlError::InvalidSignal {
                    reason: format!("channel `{name}` contains non-finite value {bad}"),
                });
            }
        }
        let len = len.unwrap_or(0);
        if len == 0 {
            return Err(StlError::InvalidSignal { reason: "signal must have at least one sample".into() });
        }
        Ok(Self { dt, len, channels })
    }

    /// Construction without the finiteness scan, for internally generated
    /// traces. Channel lengths must already agree.
    pub(crate) fn from_parts_unchecked(dt: f64, channels: IndexMap<String, Vec<f64>>) -> Self {
        let len = channels.values().next().map_or(0, Vec::len);
        debug_assert!(channels.values().all(|v| v.len() == len));
        Self { dt, len, channels }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples (`k + 1` for a signal over `t_0..t_k`).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the last sample.
    pub fn max_index(&self) -> usize {
        self.len - 1
    }

    /// Time of the last sample.
    pub fn horizon(&self) -> f64 {
        self.max_index() as f64 * self.dt
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64], StlError> {
        self.channels
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| StlError::UnknownChannel { name: name.to_string() })
    }

    pub fn sample(&self, name: &str, index: usize) -> Result<f64, StlError> {
        Ok(self.channel(name)?[index])
    }

    /// Reads a `t,<ch1>,<ch2>,...` CSV, inferring the sample period from the
    /// time column and checking that it is uniform.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, StlError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || headers.get(0) != Some("t") {
            return Err(StlError::InvalidSignal { reason: "first csv column must be `t`".into() });
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        if names.is_empty() {
            return Err(StlError::InvalidSignal { reason: "csv has no value columns".into() });
        }
        let mut times = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for record in rdr.records() {
            let record = record?;
            if record.len() != names.len() + 1 {
                return Err(StlError::InvalidSignal {
                    reason: format!("row {} has {} fields, expected {}", times.len() + 2, record.len(), names.len() + 1),
                });
            }
            let parse = |field: &str| -> Result<f64, StlError> {
                field.trim().parse::<f64>().map_err(|_| StlError::InvalidSignal {
                    reason: format!("cannot parse `{field}` as a number"),
                })
            };
            times.push(parse(&record[0])?);
            for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
                col.push(parse(field)?);
            }
        }
        if times.is_empty() {
            return Err(StlError::InvalidSignal { reason: "signal csv has no samples".into() });
        }
        let dt = if times.len() == 1 { 1.0 } else { times[1] - times[0] };
        if !(dt > 0.0) {
            return Err(StlError::InvalidSignal { reason: "time column must increase".into() });
        }
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(StlError::InvalidSignal {
                    reason: format!("non-uniform sampling at row {}: t = {t}", i + 2),
                });
            }
        }
        let channels = names.into_iter().zip(columns).collect();
        Signal::new(dt, channels)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self, StlError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), StlError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.channels.keys().cloned());
        wtr.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for i in 0..self.len {
            row.clear();
            row.push(format!("{}", i as f64 * self.dt));
            for values in self.channels.values() {
                row.push(format!("{}", values[i]));
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), StlError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
