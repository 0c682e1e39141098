//! Observed prevalence time series and their CSV format.
//!
//! The format is `t,N,E,R,A` with one header line; a blank field marks an
//! unobserved compartment at that time. Times ascend strictly, prevalence
//! values are fractions in `[0, 1]`, and at least three rows are required.

use serde::Serialize;
use thiserror::Error;

use crate::model::{State, COMPONENT_NAMES};

pub const SERIES_HEADER: &str = "t,N,E,R,A";

#[derive(Clone, Debug, Serialize)]
pub struct ObservedSeries {
    pub times: Vec<f64>,
    /// One entry per time; `None` marks an unobserved compartment.
    pub values: Vec<[Option<f64>; 4]>,
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("missing or wrong header: expected `{SERIES_HEADER}`, got `{found}`")]
    Header { found: String },
    #[error("line {line}: expected 5 comma-separated fields, got {count}")]
    FieldCount { line: usize, count: usize },
    #[error("line {line}, column {column}: invalid number `{text}`")]
    BadNumber {
        line: usize,
        column: &'static str,
        text: String,
    },
    #[error("line {line}, column {column}: value {value} outside [0, 1]")]
    OutOfRange {
        line: usize,
        column: &'static str,
        value: f64,
    },
    #[error("line {line}: times must be strictly ascending")]
    NotAscending { line: usize },
    #[error("need at least 3 time points, got {rows}")]
    TooFewRows { rows: usize },
    #[error("no compartment has any observation")]
    NothingObserved,
}

impl ObservedSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Which compartments have at least one observation.
    pub fn mask(&self) -> [bool; 4] {
        let mut mask = [false; 4];
        for row in &self.values {
            for i in 0..4 {
                mask[i] |= row[i].is_some();
            }
        }
        mask
    }

    /// First row as a full state, filling unobserved compartments from
    /// `fill`.
    pub fn first_full_state(&self, fill: [f64; 4]) -> State {
        let mut s = fill;
        for i in 0..4 {
            if let Some(v) = self.values[0][i] {
                s[i] = v;
            }
        }
        State(s)
    }

    pub fn parse_csv(text: &str) -> Result<Self, SeriesError> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((_, l)) => break l,
                None => {
                    return Err(SeriesError::Header {
                        found: String::new(),
                    })
                }
            }
        };
        if header.trim() != SERIES_HEADER {
            return Err(SeriesError::Header {
                found: header.trim().to_string(),
            });
        }

        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 5 {
                return Err(SeriesError::FieldCount {
                    line,
                    count: fields.len(),
                });
            }
            let t: f64 = fields[0].trim().parse().map_err(|_| SeriesError::BadNumber {
                line,
                column: "t",
                text: fields[0].trim().to_string(),
            })?;
            if !t.is_finite() {
                return Err(SeriesError::BadNumber {
                    line,
                    column: "t",
                    text: fields[0].trim().to_string(),
                });
            }
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(SeriesError::NotAscending { line });
                }
            }
            let mut row = [None; 4];
            for i in 0..4 {
                let cell = fields[i + 1].trim();
                if cell.is_empty() {
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| SeriesError::BadNumber {
                    line,
                    column: COMPONENT_NAMES[i],
                    text: cell.to_string(),
                })?;
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(SeriesError::OutOfRange {
                        line,
                        column: COMPONENT_NAMES[i],
                        value: v,
                    });
                }
                row[i] = Some(v);
            }
            times.push(t);
            values.push(row);
        }

        let series = ObservedSeries { times, values };
        if series.len() < 3 {
            return Err(SeriesError::TooFewRows { rows: series.len() });
        }
        if series.mask() == [false; 4] {
            return Err(SeriesError::NothingObserved);
        }
        Ok(series)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(SERIES_HEADER);
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            out.push_str(&t.to_string());
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "t,N,E,R,A\n0,0.8,0.1,0.05,0.01\n1,0.78,,0.06,0.012\n2,0.75,0.12,,0.013\n";

    #[test]
    fn parses_with_blank_cells() {
        let s = ObservedSeries::parse_csv(SAMPLE).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.mask(), [true; 4]);
        assert_eq!(s.values[1][1], None);
        assert_eq!(s.values[2][2], None);
    }

    #[test]
    fn round_trips() {
        let s = ObservedSeries::parse_csv(SAMPLE).unwrap();
        let again = ObservedSeries::parse_csv(&s.to_csv_string()).unwrap();
        assert_eq!(s.times, again.times);
        assert_eq!(s.values, again.values);
    }

    #[test]
    fn rejects_wrong_header() {
        let err = ObservedSeries::parse_csv("time,N,E,R,A\n0,1,1,1,1\n").unwrap_err();
        assert!(matches!(err, SeriesError::Header { .. }));
    }

    #[test]
    fn rejects_descending_times() {
        let text = "t,N,E,R,A\n0,0.5,,,\n2,0.5,,,\n1,0.5,,,\n";
        let err = ObservedSeries::parse_csv(text).unwrap_err();
        assert!(matches!(err, SeriesError::NotAscending { line: 4 }));
    }

    #[test]
    fn rejects_out_of_range_values() {
        let text = "t,N,E,R,A\n0,0.5,,,\n1,1.5,,,\n2,0.5,,,\n";
        let err = ObservedSeries::parse_csv(text).unwrap_err();
        assert!(matches!(
            err,
            SeriesError::OutOfRange {
                line: 3,
                column: "N",
                ..
            }
        ));
    }

    #[test]
    fn rejects_too_few_rows() {
        let text = "t,N,E,R,A\n0,0.5,,,\n1,0.4,,,\n";
        assert!(matches!(
            ObservedSeries::parse_csv(text),
            Err(SeriesError::TooFewRows { rows: 2 })
        ));
    }

    #[test]
    fn first_full_state_uses_fill() {
        let text = "t,N,E,R,A\n0,0.8,,0.05,\n1,0.7,,0.04,\n2,0.6,,0.03,\n";
        let s = ObservedSeries::parse_csv(text).unwrap();
        let state = s.first_full_state([0.0, 0.02, 0.0, 0.01]);
        assert_eq!(state.0, [0.8, 0.02, 0.05, 0.01]);
    }
}
