//! Double-well potentials and the one-dimensional standing wave.

mod wave;

pub use wave::{StandingWaveProfile, TAIL_TOLERANCE};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default flatness radius; reduced automatically when a potential does not
/// satisfy the second-derivative bands at this value.
pub const DEFAULT_MU: f64 = 0.1;

/// A polynomial double-well potential `W(u) = sum_j c_j u^j` with zeros at
/// `-1` and `+1`.
///
/// Besides the monomial coefficients the potential keeps Taylor expansions
/// about both wells so that values near `u = +-1` are computed without
/// cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialW {
    name: String,
    coeffs: Vec<f64>,
    /// `W(1 - d) = sum_j plus[j] d^j`
    plus: Vec<f64>,
    /// `W(-1 + d) = sum_j minus[j] d^j`
    minus: Vec<f64>,
    mu: f64,
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, a)| j as f64 * a)
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `p(a + sign * d)` in powers of `d`.
fn shift(c: &[f64], a: f64, sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for (j, &cj) in c.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate().take(j + 1) {
            *o += cj * binomial(j, i) * a.powi((j - i) as i32) * sign.powi(i as i32);
        }
    }
    out
}

impl PotentialW {
    /// `W(u) = (1 - u^2)^2 / 4`.
    pub fn quartic() -> Self {
        Self::quartic_family(0.0).expect("quartic well is admissible")
    }

    /// `W(u) = (1 - u^2)^2 (1 + b u^2) / 4` for `b` in `[0, 2)`; `W''(0) = (b - 2)/2`.
    pub fn quartic_family(b: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&b) {
            return Err(Error::InvalidArgument(format!(
                "quartic family parameter b = {b} outside [0, 2)"
            )));
        }
        // (1 - 2u^2 + u^4)(1 + b u^2)/4
        let c = vec![
            0.25,
            0.0,
            0.25 * (b - 2.0),
            0.0,
            0.25 * (1.0 - 2.0 * b),
            0.0,
            0.25 * b,
        ];
        let name = if b == 0.0 {
            "quartic".to_string()
        } else {
            format!("quartic-family(b={b})")
        };
        Self::polynomial(name, c)
    }

    /// Look up a potential from the builtin catalog.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "quartic" => Ok(Self::quartic()),
            "sextic" => Self::quartic_family(1.0),
            other => Err(Error::InvalidArgument(format!(
                "unknown potential '{other}'"
            ))),
        }
    }

    /// A polynomial potential given by ascending monomial coefficients.
    /// Validates the structural hypotheses and picks the flatness radius.
    pub fn polynomial(name: impl Into<String>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 3 || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Structure(
                "need at least a quadratic with finite coefficients".into(),
            ));
        }
        let mut plus = shift(&coeffs, 1.0, -1.0);
        let mut minus = shift(&coeffs, -1.0, 1.0);
        let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>();
        for (label, c) in [("W(1)", &plus), ("W(-1)", &minus)] {
            if c[0].abs() > 1e-12 * scale || c[1].abs() > 1e-12 * scale {
                return Err(Error::Structure(format!("{label} or its slope is nonzero")));
            }
        }
        // The wells are exact zeros of W and W'.
        plus[0] = 0.0;
        plus[1] = 0.0;
        minus[0] = 0.0;
        minus[1] = 0.0;
        let mut w = Self {
            name: name.into(),
            coeffs,
            plus,
            minus,
            mu: DEFAULT_MU,
        };
        w.check_structure()?;
        w.mu = w.admissible_mu(DEFAULT_MU);
        Ok(w)
    }

    /// Replace the flatness radius; fails unless `mu` lies in `(0, 1/8)` and
    /// satisfies the second-derivative bands.
    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 0.125) {
            return Err(Error::InvalidArgument(format!(
                "mu = {mu} outside (0, 1/8)"
            )));
        }
        if let Some(band) = self.band_violation(mu) {
            return Err(Error::Structure(format!(
                "mu = {mu} violates the {band} band"
            )));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u > 0.5 {
            horner(&self.plus, 1.0 - u)
        } else if u < -0.5 {
            horner(&self.minus, u + 1.0)
        } else {
            horner(&self.coeffs, u)
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        horner(&derivative(&self.coeffs), u)
    }

    pub fn d2(&self, u: f64) -> f64 {
        horner(&derivative(&derivative(&self.coeffs)), u)
    }

    pub fn d3(&self, u: f64) -> f64 {
        horner(&derivative(&derivative(&derivative(&self.coeffs))), u)
    }

    /// Well expansion `W(+-1 -+ d) = sum_j c_j d^j` for the side `sign`.
    pub(crate) fn well_expansion(&self, sign: f64) -> &[f64] {
        if sign > 0.0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// `sup |W''|` over `[lo, hi]`, sampled.
    pub fn sup_abs_d2(&self, lo: f64, hi: f64) -> f64 {
        let d2 = derivative(&derivative(&self.coeffs));
        (0..=4000)
            .map(|i| horner(&d2, lo + (hi - lo) * i as f64 / 4000.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_structure(&self) -> Result<()> {
        let scale = self.coeffs.iter().map(|c| c.abs()).sum::<f64>();
        if self.d1(0.0).abs() > 1e-12 * scale {
            return Err(Error::Structure("W'(0) != 0".into()));
        }
        for i in 1..2000 {
            let u = -1.0 + i as f64 / 1000.0;
            if self.eval(u) <= 0.0 {
                return Err(Error::Structure(format!("W({u}) <= 0 inside the wells")));
            }
            if i != 1000 {
                let slope = self.d1(u);
                if (u < 0.0 && slope <= 0.0) || (u > 0.0 && slope >= 0.0) {
                    return Err(Error::Structure(format!(
                        "W' has the wrong sign at u = {u}"
                    )));
                }
            }
        }
        if self.d2(1.0) <= 0.0 || self.d2(-1.0) <= 0.0 {
            return Err(Error::Structure("W'' must be positive at the wells".into()));
        }
        if self.d2(0.0) >= 0.0 {
            return Err(Error::Structure("W''(0) must be negative".into()));
        }
        Ok(())
    }

    /// First band violated at `mu`, if any.
    fn band_violation(&self, mu: f64) -> Option<&'static str> {
        let within = |lo: f64, hi: f64, a: f64, b: f64| {
            (0..=2000).all(|i| {
                let v = self.d2(lo + (hi - lo) * i as f64 / 2000.0);
                v >= a - 1e-12 && v <= b + 1e-12
            })
        };
        let (wm, wp, w0) = (self.d2(-1.0), self.d2(1.0), self.d2(0.0));
        if !within(-1.0 - 2.0 * mu, -1.0 + 2.0 * mu, 0.5 * wm, 1.5 * wm) {
            return Some("negative-well");
        }
        if !within(1.0 - 2.0 * mu, 1.0, 0.5 * wp, 1.5 * wp) {
            return Some("positive-well");
        }
        if !within(-mu, mu, 1.5 * w0, 0.5 * w0) {
            return Some("central");
        }
        None
    }

    /// Largest admissible flatness radius not exceeding `cap`, rounded down
    /// to four decimals. The bands are nested in `mu`, so bisection applies.
    fn admissible_mu(&self, cap: f64) -> f64 {
        if self.band_violation(cap).is_none() {
            return cap;
        }
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.band_violation(mid).is_none() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo * 1e4).floor() / 1e4
    }
}
