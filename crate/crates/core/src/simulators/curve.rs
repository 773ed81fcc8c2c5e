use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One converged load step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Prescribed displacement (mm).
    pub u: f64,
    /// Reaction (N).
    #[serde(rename = "L")]
    pub load: f64,
    /// Expansion `v2 - v1` for the beam, lateral contraction for the bar (mm).
    pub delta_l: f64,
    /// Crack opening (mm).
    pub crack_open: f64,
}

impl CurvePoint {
    pub const ORIGIN: CurvePoint = CurvePoint {
        u: 0.0,
        load: 0.0,
        delta_l: 0.0,
        crack_open: 0.0,
    };
}

/// Structural response recorded along the pseudo-time axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub points: Vec<CurvePoint>,
}

pub const CSV_HEADER: &str = "u,L,delta_l,crack_open";

impl ResponseCurve {
    pub fn new() -> Self {
        ResponseCurve {
            points: vec![CurvePoint::ORIGIN],
        }
    }

    pub fn push(&mut self, p: CurvePoint) {
        debug_assert!(self.points.last().map_or(true, |q| p.u > q.u));
        self.points.push(p);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_u(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.u)
    }

    pub fn peak_load(&self) -> f64 {
        self.points.iter().map(|p| p.load).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks the structural invariants of a recorded curve.
    pub fn validate(&self) -> Result<()> {
        match self.points.first() {
            Some(p) if *p == CurvePoint::ORIGIN => {}
            _ => return Err(Error::Domain("curve must start at the origin".into())),
        }
        for w in self.points.windows(2) {
            if !(w[1].u > w[0].u) {
                return Err(Error::Domain(format!("u not increasing at {}", w[1].u)));
            }
        }
        let finite = self
            .points
            .iter()
            .all(|p| p.u.is_finite() && p.load.is_finite() && p.delta_l.is_finite() && p.crack_open.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite curve entry".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * (self.points.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            // `{:e}` round-trips f64 exactly.
            let _ = writeln!(s, "{:e},{:e},{:e},{:e}", p.u, p.load, p.delta_l, p.crack_open);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Io(format!("unexpected CSV header {other:?}"))),
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("line {}: {e}", i + 2)))?;
            if vals.len() != 4 {
                return Err(Error::Io(format!("line {}: expected 4 columns", i + 2)));
            }
            points.push(CurvePoint {
                u: vals[0],
                load: vals[1],
                delta_l: vals[2],
                crack_open: vals[3],
            });
        }
        let curve = ResponseCurve { points };
        curve.validate()?;
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec((1e-6f64..1.0, -1e4f64..1e4, -1.0f64..1.0, 0.0f64..1.0), 1..20)) {
            let mut c = ResponseCurve::new();
            let mut u = 0.0;
            for (du, l, dl, co) in rows {
                u += du;
                c.push(CurvePoint { u, load: l, delta_l: dl, crack_open: co });
            }
            let back = ResponseCurve::from_csv(&c.to_csv()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn header_is_fixed() {
        let c = ResponseCurve::new();
        assert!(c.to_csv().starts_with("u,L,delta_l,crack_open\n"));
        assert!(ResponseCurve::from_csv("a,b\n").is_err());
    }
}
