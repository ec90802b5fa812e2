use super::PotentialW;
use crate::{numerics, Error, Result};
use serde::{Deserialize, Serialize};

/// Tail tolerance: the profile is flagged as truncated when `qdot(+-L)`
/// exceeds this value.
pub const TAIL_TOLERANCE: f64 = 1e-11;

/// Standing wave `q` with `qdot = sqrt(2 W(q))`, `q(0) = 0`, tabulated on a
/// uniform grid of `[-L, L]`.
///
/// Internally each half line is described by the well distance exponent
/// `r = -ln(1 - |q|)`, which is smooth, grows linearly in the tails and
/// satisfies `dr/d|s| = sqrt(2 W(+-(1 - d)) / d^2)` with `d = exp(-r)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandingWaveProfile {
    potential: PotentialW,
    half_length: f64,
    s: Vec<f64>,
    r: Vec<f64>,
    q: Vec<f64>,
    qdot: Vec<f64>,
    drift: Vec<f64>,
    wpp: Vec<f64>,
    cw: f64,
    decay_plus: f64,
    decay_minus: f64,
    tail_constant: f64,
    truncated: bool,
}

/// Right-hand side of the exponent equation on the side `sign`.
fn exponent_rate(c: &[f64], r: f64) -> f64 {
    let d = (-r).exp();
    let p = c[2..].iter().rev().fold(0.0, |acc, &a| acc * d + a);
    (2.0 * p).sqrt()
}

/// `(q, qdot, drift)` from the exponent on the side `sign`.
fn state(c: &[f64], sign: f64, r: f64) -> (f64, f64, f64) {
    let d = (-r).exp();
    let p = c[2..].iter().rev().fold(0.0, |acc, &a| acc * d + a);
    // dW/dd divided by d
    let dp = c[2..]
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (j, &a)| acc * d + (j + 2) as f64 * a);
    let root = (2.0 * p).sqrt();
    let q = sign * (1.0 - d);
    (q, d * root, -sign * dp / root)
}

fn rk4(c: &[f64], mut r: f64, dist: f64, max_step: f64) -> f64 {
    if dist == 0.0 {
        return r;
    }
    let steps = (dist / max_step).ceil().max(1.0) as usize;
    let h = dist / steps as f64;
    for _ in 0..steps {
        let k1 = exponent_rate(c, r);
        let k2 = exponent_rate(c, r + 0.5 * h * k1);
        let k3 = exponent_rate(c, r + 0.5 * h * k2);
        let k4 = exponent_rate(c, r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}

const SUBSTEP: f64 = 1.0 / 512.0;

impl StandingWaveProfile {
    /// Integrate the first-order equation outward from `q(0) = 0` onto `n`
    /// uniform nodes of `[-L, L]`.
    pub fn solve(potential: &PotentialW, half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half-length {half_length} must be positive"
            )));
        }
        if n < 64 {
            return Err(Error::InvalidArgument(format!(
                "need at least 64 nodes, got {n}"
            )));
        }
        let h = 2.0 * half_length / (n - 1) as f64;
        let mid = 0.5 * (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 - mid) * h).collect();
        let mut r = vec![0.0; n];
        for sign in [1.0, -1.0] {
            let c = potential.well_expansion(sign);
            let mut order: Vec<usize> = (0..n).filter(|&i| s[i] * sign >= 0.0).collect();
            order.sort_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()));
            let (mut at, mut cur) = (0.0, 0.0);
            for i in order {
                cur = rk4(c, cur, s[i].abs() - at, SUBSTEP);
                at = s[i].abs();
                r[i] = cur;
            }
        }
        let mut q = Vec::with_capacity(n);
        let mut qdot = Vec::with_capacity(n);
        let mut drift = Vec::with_capacity(n);
        for (si, &ri) in s.iter().zip(&r) {
            let sign = if *si >= 0.0 { 1.0 } else { -1.0 };
            let (a, b, c) = state(potential.well_expansion(sign), sign, ri);
            q.push(a);
            qdot.push(b);
            drift.push(c);
        }
        let wpp = q.iter().map(|&x| potential.d2(x)).collect();
        let sq: Vec<f64> = qdot.iter().map(|v| v * v).collect();
        let cw = numerics::trapezoid(&sq, h);

        // Exponential rates from the outer half of each tail.
        let fit = |sign: f64| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = s
                .iter()
                .zip(&r)
                .filter(|(si, _)| **si * sign >= 0.5 * half_length)
                .map(|(si, ri)| (si.abs(), *ri))
                .unzip();
            if xs.len() >= 2 {
                numerics::fit_slope(&xs, &ys)
            } else {
                f64::NAN
            }
        };
        let decay_plus = fit(1.0);
        let decay_minus = fit(-1.0);
        let tail_constant = tail_constant(&s, &q, &qdot, decay_plus.min(decay_minus));
        let truncated = qdot[0] > TAIL_TOLERANCE || qdot[n - 1] > TAIL_TOLERANCE;
        Ok(Self {
            potential: potential.clone(),
            half_length,
            s,
            r,
            q,
            qdot,
            drift,
            wpp,
            cw,
            decay_plus,
            decay_minus,
            tail_constant,
            truncated,
        })
    }

    pub fn potential(&self) -> &PotentialW {
        &self.potential
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn qdot(&self) -> &[f64] {
        &self.qdot
    }

    /// `qddot / qdot` at the nodes.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// `W''(q)` at the nodes.
    pub fn wpp(&self) -> &[f64] {
        &self.wpp
    }

    /// `int qdot^2 ds` by the trapezoid rule on the grid.
    pub fn cw(&self) -> f64 {
        self.cw
    }

    pub fn decay_plus(&self) -> f64 {
        self.decay_plus
    }

    pub fn decay_minus(&self) -> f64 {
        self.decay_minus
    }

    /// `C` with `|q -+ 1| <= C exp(-|s|/C)` and `qdot <= C exp(-|s|/C)` on the grid.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// True when `qdot(+-L)` is above [`TAIL_TOLERANCE`].
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Exponent at an arbitrary coordinate, continued from the nearest node on
    /// the same side of the origin. Works beyond `[-L, L]` as well.
    fn exponent_at(&self, s: f64) -> (f64, f64) {
        let sign = if s >= 0.0 { 1.0 } else { -1.0 };
        let c = self.potential.well_expansion(sign);
        let h = self.step();
        let n = self.s.len();
        let idx = (((s - self.s[0]) / h).round().max(0.0) as usize).min(n - 1);
        // Start from a node on the same side, or from the origin.
        let (start, r0) = if self.s[idx] * sign > 0.0 && self.s[idx].abs() <= s.abs() {
            (self.s[idx].abs(), self.r[idx])
        } else {
            let back = if sign > 0.0 {
                idx.checked_sub(1)
            } else {
                Some(idx + 1).filter(|&j| j < n)
            };
            match back {
                Some(j) if self.s[j] * sign > 0.0 && self.s[j].abs() <= s.abs() => {
                    (self.s[j].abs(), self.r[j])
                }
                _ => (0.0, 0.0),
            }
        };
        (sign, rk4(c, r0, s.abs() - start, SUBSTEP))
    }

    pub fn q_at(&self, s: f64) -> f64 {
        let (sign, r) = self.exponent_at(s);
        state(self.potential.well_expansion(sign), sign, r).0
    }

    pub fn qdot_at(&self, s: f64) -> f64 {
        let (sign, r) = self.exponent_at(s);
        state(self.potential.well_expansion(sign), sign, r).1
    }

    /// `qddot(s) / qdot(s) = W'(q(s)) / qdot(s)`, evaluated in the exponent
    /// variables so it stays accurate deep in the tails.
    pub fn drift_ratio(&self, s: f64) -> f64 {
        let (sign, r) = self.exponent_at(s);
        state(self.potential.well_expansion(sign), sign, r).2
    }
}

fn tail_constant(s: &[f64], q: &[f64], qdot: &[f64], rate: f64) -> f64 {
    let mut c: f64 = if rate > 0.0 { 1.0 / (0.9 * rate) } else { 1.0 };
    // Raising C only loosens the bound, so a few passes settle it.
    for _ in 0..8 {
        let need = s
            .iter()
            .zip(q.iter().zip(qdot))
            .map(|(&si, (&qi, &vi))| {
                let gap = if si >= 0.0 { 1.0 - qi } else { 1.0 + qi };
                gap.max(vi) * (si.abs() / c).exp()
            })
            .fold(0.0, f64::max);
        if need <= c {
            break;
        }
        c = need;
    }
    c
}
