use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Planar effective mobility sampled on uniform angles `2 pi j / n`, with
/// periodic linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTable {
    values: Vec<f64>,
    theta: f64,
    theta_high: f64,
}

#[derive(Serialize, Deserialize)]
struct Row {
    angle: f64,
    mbar: f64,
    theta: f64,
    theta_high: f64,
}

impl MobilityTable {
    pub fn new(values: Vec<f64>, (theta, theta_high): (f64, f64)) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty mobility table".into()));
        }
        let slack = 1e-12 * theta_high.abs();
        if let Some(v) = values
            .iter()
            .find(|&&v| !(v >= theta - slack && v <= theta_high + slack))
        {
            return Err(Error::InconsistentMobility(format!(
                "table entry {v} outside [{theta}, {theta_high}]"
            )));
        }
        Ok(Self {
            values,
            theta,
            theta_high,
        })
    }

    /// A direction-independent table.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![value], (value, value))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.theta, self.theta_high)
    }

    pub fn angles(&self) -> Vec<f64> {
        let n = self.values.len();
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    /// Interpolated value at the polar angle `angle`.
    pub fn eval(&self, angle: f64) -> f64 {
        let n = self.values.len();
        let x = angle.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[(i + 1) % n]
    }

    /// Value at the direction of a planar vector.
    pub fn eval_vec(&self, n1: f64, n2: f64) -> f64 {
        self.eval(n2.atan2(n1))
    }

    /// Mean over the circle.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (angle, &mbar) in self.angles().into_iter().zip(&self.values) {
            w.serialize(Row {
                angle,
                mbar,
                theta: self.theta,
                theta_high: self.theta_high,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows: Vec<Row> = r.deserialize().collect::<std::result::Result<_, _>>()?;
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mobility table".into()))?;
        let n = rows.len();
        for (j, row) in rows.iter().enumerate() {
            if (row.angle - 2.0 * PI * j as f64 / n as f64).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "row {j}: angles must be uniform from 0"
                )));
            }
        }
        Self::new(
            rows.iter().map(|r| r.mbar).collect(),
            (first.theta, first.theta_high),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_periodic() {
        let t = MobilityTable::new(vec![1.0, 2.0, 3.0, 2.0], (1.0, 3.0)).unwrap();
        assert_eq!(t.eval(0.0), 1.0);
        assert_eq!(t.eval(PI), 3.0);
        assert!((t.eval(-PI / 4.0) - 1.5).abs() < 1e-14);
        assert!((t.eval(2.0 * PI + PI / 4.0) - 1.5).abs() < 1e-14);
        assert_eq!(t.eval_vec(0.0, 1.0), 2.0);
        assert!(MobilityTable::new(vec![0.5], (1.0, 2.0)).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mbar.csv");
        let t = MobilityTable::new(vec![1.0, 1.25, 1.5, 1.1, 1.9], (1.0, 2.0)).unwrap();
        t.write_csv(&p).unwrap();
        assert_eq!(MobilityTable::read_csv(&p).unwrap(), t);
    }
}
