//! Report records and deterministic emission: one JSON object per
//! experiment instance, curves as CSV with 17 significant digits.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::config::Experiment;

/// An extended real that serializes as a JSON number when finite and as the
/// strings "inf"/"-inf" otherwise (plain JSON has no infinities).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogVal(pub f64);

impl Serialize for LogVal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub experiment: Experiment,
    pub fixture: String,
    pub p: f64,
    pub t: Option<f64>,
    pub kind: String,
    pub s_point: Option<Vec<f64>>,
    pub log_inf: Option<LogVal>,
    #[serde(rename = "log_Mp")]
    pub log_mp: Option<LogVal>,
    pub log_bound: Option<LogVal>,
    pub ratio_log: Option<LogVal>,
    pub margins: Vec<(String, LogVal)>,
    pub flags: Vec<String>,
    pub verdict: String,
}

/// A monotonicity curve row set for CSV emission.
pub struct Curve {
    pub times: Vec<f64>,
    pub alpha_log: Vec<f64>,
    pub mp_log: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

/// Render with 17 significant digits, round-trip safe.
fn sig17(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn curve_csv(curve: &Curve) -> String {
    let dim = curve.points.first().map(|p| p.len()).unwrap_or(1);
    let mut s = String::from("t,alpha_log,mp_log");
    for k in 0..dim {
        let _ = write!(s, ",s_{}", k + 1);
    }
    s.push('\n');
    for i in 0..curve.times.len() {
        let _ = write!(
            s,
            "{},{},{}",
            sig17(curve.times[i]),
            sig17(curve.alpha_log[i]),
            sig17(curve.mp_log[i])
        );
        for k in 0..dim {
            let _ = write!(s, ",{}", sig17(curve.points[i][k]));
        }
        s.push('\n');
    }
    s
}

pub fn records_json(records: &[Record]) -> String {
    serde_json::to_string_pretty(records).expect("report serialization cannot fail") + "\n"
}
