//! JSON-facing report shapes shared by the CLI and tests.
//!
//! Every floating-point field is rounded to 12 significant digits before
//! serialization so reports are stable across platforms; integer fields are
//! exact. The schema version is 1.

use crate::degree::DegreeReport;
use crate::locate::PeriodicOrbit;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Round to `digits` significant digits via a decimal round trip.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits as usize - 1, x).parse().unwrap_or(x)
}

/// The degree-report schema:
/// `{"op", "region", "value", "certified", "clearance", "samples"}`.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReportJson {
    pub op: String,
    pub region: String,
    pub value: i64,
    pub certified: bool,
    pub clearance: f64,
    pub samples: usize,
}

impl DegreeReportJson {
    pub fn new(op: &str, region: &str, report: &DegreeReport) -> Self {
        Self {
            op: op.to_string(),
            region: region.to_string(),
            value: report.value,
            certified: report.certified,
            clearance: round_sig(report.boundary_clearance, 12),
            samples: report.samples_used,
        }
    }
}

/// Orbit rows for the emitted JSON array.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitJson {
    pub x: f64,
    pub y: f64,
    pub rotation: i64,
    pub residual: f64,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<[[f64; 2]; 2]>,
}

impl From<&PeriodicOrbit> for OrbitJson {
    fn from(o: &PeriodicOrbit) -> Self {
        Self {
            x: round_sig(o.point.x, 12),
            y: round_sig(o.point.y, 12),
            rotation: o.rotation,
            residual: round_sig(o.residual, 12),
            certified: o.enclosure.is_some(),
            multipliers: o
                .multipliers
                .map(|(a, b)| [[round_sig(a.re, 12), round_sig(a.im, 12)], [round_sig(b.re, 12), round_sig(b.im, 12)]]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(std::f64::consts::PI, 12), 3.14159265359);
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert_eq!(round_sig(-1.0 / 3.0, 12), -0.333333333333);
        assert_eq!(round_sig(1.5e-11, 12), 1.5e-11);
    }

    #[test]
    fn degree_report_schema_fields() {
        let r = DegreeReport {
            value: -2,
            boundary_clearance: 0.123456789012345,
            max_angular_step: 0.3,
            samples_used: 128,
            certified: true,
        };
        let json = serde_json::to_value(DegreeReportJson::new("dee", "ball:0,0,1", &r)).unwrap();
        assert_eq!(json["op"], "dee");
        assert_eq!(json["value"], -2);
        assert_eq!(json["samples"], 128);
        assert_eq!(json["clearance"], 0.123456789012);
    }
}
