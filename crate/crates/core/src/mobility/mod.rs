//! Mobility coefficients, lattice and irrational directions, effective
//! mobilities and rational-direction layer averages.

mod effective;
mod lattice;
mod table;

pub use effective::{
    effective_mobility, layer_average, layer_oscillation, layer_profile, mobility_modulus,
    tabulate_effective_mobility, Quadrature,
};
pub use lattice::{sub_torus_period, unimodular_completion};
pub use table::MobilityTable;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A unit normal direction, declared either as a primitive lattice vector or
/// as an irrational unit vector. Rationality is never inferred from floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Lattice(Vec<i64>),
    Irrational(Vec<f64>),
}

impl Direction {
    /// A primitive, nonzero integer vector.
    pub fn lattice(k: Vec<i64>) -> Result<Self> {
        let g = k.iter().fold(0i64, |g, &x| lattice::gcd(g, x));
        if g != 1 {
            return Err(Error::NonPrimitive(k));
        }
        Ok(Direction::Lattice(k))
    }

    /// Any nonzero float vector, normalized. The caller asserts it is not a
    /// multiple of a lattice vector.
    pub fn irrational(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(
                "direction must be a finite nonzero vector".into(),
            ));
        }
        Ok(Direction::Irrational(v.iter().map(|x| x / norm).collect()))
    }

    /// Planar direction `(cos a, sin a)`, tagged irrational.
    pub fn from_angle(angle: f64) -> Self {
        Direction::Irrational(vec![angle.cos(), angle.sin()])
    }

    pub fn dim(&self) -> usize {
        match self {
            Direction::Lattice(k) => k.len(),
            Direction::Irrational(v) => v.len(),
        }
    }

    pub fn unit(&self) -> Vec<f64> {
        match self {
            Direction::Lattice(k) => {
                let n = k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                k.iter().map(|&x| x as f64 / n).collect()
            }
            Direction::Irrational(v) => v.clone(),
        }
    }

    pub fn lattice_vector(&self) -> Option<&[i64]> {
        match self {
            Direction::Lattice(k) => Some(k),
            Direction::Irrational(_) => None,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Direction::Lattice(_))
    }
}

/// One term `a cos(2 pi <k,y>) + b sin(2 pi <k,y>)` of a Fourier mobility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// The mobility coefficient `m(y, v)` for `y` on the unit torus and `v` a
/// gradient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Mobility {
    /// `m = value`
    Constant { value: f64 },
    /// `m = mean + amplitude cos(2 pi y_1)`
    CosineY1 { mean: f64, amplitude: f64 },
    /// `m = base + amplitude exp(-|v|^2)`
    GaussianV { base: f64, amplitude: f64 },
    /// `m = mean + amplitude sin(2 pi y_1) sin(2 pi y_2) exp(-|v|^2)`
    ProductSine { mean: f64, amplitude: f64 },
    /// `m = mean + exp(-rate |v|^2) sum_j (a_j cos + b_j sin)(2 pi <k_j, y>)`
    Fourier {
        mean: f64,
        modes: Vec<FourierMode>,
        #[serde(default)]
        radial_rate: f64,
    },
}

fn dot(k: &[i64], y: &[f64]) -> f64 {
    k.iter().zip(y).map(|(&a, &b)| a as f64 * b).sum()
}

impl Mobility {
    pub fn constant(value: f64) -> Result<Self> {
        Mobility::Constant { value }.validated()
    }

    pub fn cosine_y1(mean: f64, amplitude: f64) -> Result<Self> {
        Mobility::CosineY1 { mean, amplitude }.validated()
    }

    pub fn gaussian_v(base: f64, amplitude: f64) -> Result<Self> {
        Mobility::GaussianV { base, amplitude }.validated()
    }

    pub fn product_sine(mean: f64, amplitude: f64) -> Result<Self> {
        Mobility::ProductSine { mean, amplitude }.validated()
    }

    /// Check finiteness and the positive lower bound.
    pub fn validated(self) -> Result<Self> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(
                "mobility parameters must be finite".into(),
            ));
        }
        if lo <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "mobility lower bound {lo} is not positive"
            )));
        }
        if let Mobility::Fourier {
            modes, radial_rate, ..
        } = &self
        {
            if *radial_rate < 0.0 {
                return Err(Error::InvalidArgument(
                    "radial rate must be nonnegative".into(),
                ));
            }
            let d = modes.first().map(|m| m.k.len()).unwrap_or(0);
            if modes
                .iter()
                .any(|m| m.k.len() != d || m.k.iter().all(|&x| x == 0))
            {
                return Err(Error::InvalidArgument(
                    "Fourier modes need nonzero wave vectors of one dimension".into(),
                ));
            }
        }
        Ok(self)
    }

    pub fn eval(&self, y: &[f64], v: &[f64]) -> f64 {
        let (a, b) = self.torus_parts(y);
        a + b * self.gradient_factor(v)
    }

    /// Every mobility in the catalog separates as `a(y) + b(y) c(v)`; this
    /// returns `(a(y), b(y))`.
    pub fn torus_parts(&self, y: &[f64]) -> (f64, f64) {
        match self {
            Mobility::Constant { value } => (*value, 0.0),
            Mobility::CosineY1 { mean, amplitude } => {
                (mean + amplitude * (2.0 * PI * y[0]).cos(), 0.0)
            }
            Mobility::GaussianV { base, amplitude } => (*base, *amplitude),
            Mobility::ProductSine { mean, amplitude } => (
                *mean,
                amplitude * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).sin(),
            ),
            Mobility::Fourier { mean, modes, .. } => {
                let sum: f64 = modes
                    .iter()
                    .map(|m| {
                        let a = 2.0 * PI * dot(&m.k, y);
                        m.cos * a.cos() + m.sin * a.sin()
                    })
                    .sum();
                (*mean, sum)
            }
        }
    }

    /// The factor `c(v)` of the separated form.
    pub fn gradient_factor(&self, v: &[f64]) -> f64 {
        let v2 = || v.iter().map(|x| x * x).sum::<f64>();
        match self {
            Mobility::Constant { .. } | Mobility::CosineY1 { .. } => 1.0,
            Mobility::GaussianV { .. } | Mobility::ProductSine { .. } => (-v2()).exp(),
            Mobility::Fourier { radial_rate, .. } => {
                if *radial_rate == 0.0 {
                    1.0
                } else {
                    (-radial_rate * v2()).exp()
                }
            }
        }
    }

    /// Analytic bounds `(theta, Theta)` valid for all `y` and `v`.
    pub fn bounds(&self) -> (f64, f64) {
        let around = |c: f64, a: f64| (c - a.abs(), c + a.abs());
        match self {
            Mobility::Constant { value } => (*value, *value),
            Mobility::CosineY1 { mean, amplitude } => around(*mean, *amplitude),
            Mobility::GaussianV { base, amplitude } => {
                (base + amplitude.min(0.0), base + amplitude.max(0.0))
            }
            Mobility::ProductSine { mean, amplitude } => around(*mean, *amplitude),
            Mobility::Fourier { mean, modes, .. } => {
                around(*mean, modes.iter().map(|m| m.cos.hypot(m.sin)).sum())
            }
        }
    }

    pub fn theta(&self) -> f64 {
        self.bounds().0
    }

    pub fn theta_high(&self) -> f64 {
        self.bounds().1
    }

    /// Lipschitz constant in `y`, uniform in `v`.
    pub fn lip_y(&self) -> f64 {
        match self {
            Mobility::Constant { .. } | Mobility::GaussianV { .. } => 0.0,
            Mobility::CosineY1 { amplitude, .. } => 2.0 * PI * amplitude.abs(),
            Mobility::ProductSine { amplitude, .. } => 2.0 * PI * amplitude.abs() * 2f64.sqrt(),
            Mobility::Fourier { modes, .. } => modes
                .iter()
                .map(|m| {
                    let kn = m.k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                    2.0 * PI * kn * m.cos.hypot(m.sin)
                })
                .sum(),
        }
    }

    /// Whether `m` ignores its gradient argument.
    pub fn is_v_independent(&self) -> bool {
        match self {
            Mobility::Constant { .. } | Mobility::CosineY1 { .. } => true,
            Mobility::Fourier {
                radial_rate, modes, ..
            } => *radial_rate == 0.0 || modes.is_empty(),
            _ => false,
        }
    }

    /// Whether `m` ignores its torus argument.
    pub fn is_y_independent(&self) -> bool {
        match self {
            Mobility::Constant { .. } | Mobility::GaussianV { .. } => true,
            Mobility::Fourier { modes, .. } => modes.is_empty(),
            _ => false,
        }
    }

    /// Smallest torus dimension the formula needs.
    pub fn min_dim(&self) -> usize {
        match self {
            Mobility::Constant { .. } | Mobility::GaussianV { .. } => 1,
            Mobility::CosineY1 { .. } => 1,
            Mobility::ProductSine { .. } => 2,
            Mobility::Fourier { modes, .. } => modes.first().map(|m| m.k.len()).unwrap_or(1),
        }
    }
}
