//! Initialization machinery: the two-sided forcing built from `W'`, its
//! regularized and cut-off versions, the scalar flow they generate, and the
//! margin constants of the subsolution construction.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::ode::{dopri5, Tolerance};
use crate::numerics::quadrature::GaussRule;
use crate::potential::{PotentialW, StandingWaveProfile};

/// Value and first two derivatives at a point.
pub type Jet = [f64; 3];

const FORCING_RANGE: f64 = 3.0;
const CHECK_NODES: usize = 10_000;
const BUMP_NODES: usize = 64;

fn bump_rule() -> &'static (GaussRule, f64) {
    static RULE: OnceLock<(GaussRule, f64)> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = GaussRule::legendre(BUMP_NODES);
        // Normalization over [-1, 1], split so the flat ends are resolved.
        let fine = GaussRule::legendre(96);
        let mut norm = 0.0;
        for i in 0..8 {
            let a = -1.0 + 0.25 * i as f64;
            norm += fine.integrate(a, a + 0.25, bump_raw);
        }
        (rule, norm)
    })
}

fn bump_raw(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn bump_raw_d1(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let w = 1.0 - t * t;
        bump_raw(t) * (-2.0 * t / (w * w))
    }
}

fn mul(a: Jet, b: Jet) -> Jet {
    [
        a[0] * b[0],
        a[1] * b[0] + a[0] * b[1],
        a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
    ]
}

/// `(1 - w) a + w b`.
fn blend(w: Jet, a: Jet, b: Jet) -> Jet {
    let diff = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let wd = mul(w, diff);
    [a[0] + wd[0], a[1] + wd[1], a[2] + wd[2]]
}

fn cubic_step(t: f64) -> Jet {
    let t = t.clamp(0.0, 1.0);
    [t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t), 6.0 - 12.0 * t]
}

fn quintic_step(t: f64) -> Jet {
    if t <= 0.0 {
        return [0.0; 3];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let t2 = t * t;
    [
        t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    ]
}

/// The forcing family at a fixed `eps`.
#[derive(Debug, Clone)]
pub struct ModifiedForcing {
    potential: PotentialW,
    theta: f64,
    theta_high: f64,
    eps: f64,
    log_eps: f64,
    mu: f64,
    big_m: f64,
    lip: f64,
    z_eps: f64,
    band_constant: f64,
    zero_set_holds: bool,
}

/// Build the forcing family and verify its ordering and sign bands on a
/// dense grid.
pub fn build_forcing(
    potential: &PotentialW,
    theta: f64,
    theta_high: f64,
    eps: f64,
) -> Result<ModifiedForcing> {
    if !(theta > 0.0 && theta <= theta_high && theta_high.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < theta <= Theta, got ({theta}, {theta_high})"
        )));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Domain {
            what: "eps",
            value: eps,
            lo: 0.0,
            hi: 0.1,
        });
    }
    let log_eps = -eps.ln();
    let big_m = potential.sup_abs_d2(-FORCING_RANGE, FORCING_RANGE) / theta;
    let mut forcing = ModifiedForcing {
        potential: potential.clone(),
        theta,
        theta_high,
        eps,
        log_eps,
        mu: potential.mu(),
        big_m,
        lip: 0.0,
        z_eps: -1.0,
        band_constant: 0.0,
        zero_set_holds: false,
    };
    let n = 60_000;
    forcing.lip = (0..=n)
        .map(|i| {
            let u = -FORCING_RANGE + 2.0 * FORCING_RANGE * i as f64 / n as f64;
            forcing.fbar_jet(u)[1].abs()
        })
        .fold(0.0, f64::max);
    if 3.0 * eps * log_eps >= 0.5 {
        return Err(Error::EpsTooLarge {
            eps,
            clause: "cutoff support",
        });
    }

    // The negative zero of the regularized forcing sits left of -1.
    let (mut a, mut b) = (-2.0, -1.0);
    if forcing.feps(a) >= 0.0 || forcing.feps(b) <= 0.0 {
        return Err(Error::EpsTooLarge {
            eps,
            clause: "regularization zero",
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if forcing.feps(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    forcing.z_eps = 0.5 * (a + b);

    let lo = -1.0 - forcing.mu;
    let scale = forcing.lip * eps;
    let mut zero_set = forcing.z_eps >= lo;
    for i in 0..=CHECK_NODES {
        let u = lo + (1.0 - lo) * i as f64 / CHECK_NODES as f64;
        let fbar = forcing.fbar(u);
        let feps = forcing.feps(u);
        let ftilde = forcing.ftilde(u);
        if feps < fbar - 1e-12 * (1.0 + scale) || ftilde < feps - 1e-12 * (1.0 + scale) {
            return Err(Error::EpsTooLarge {
                eps,
                clause: "ordering",
            });
        }
        let expected = if u < forcing.z_eps {
            -1.0
        } else if u < 0.0 {
            1.0
        } else {
            -1.0
        };
        let near_zero = [forcing.z_eps, 0.0, 1.0]
            .iter()
            .any(|z| (u - z).abs() < 1e-9);
        if !near_zero && feps * expected <= 0.0 {
            zero_set = false;
        }
    }
    forcing.zero_set_holds = zero_set;

    let samples = 400;
    let (neg_lo, neg_hi) = (-eps / big_m, 0.0);
    let (pos_lo, pos_hi) = (2.0 * eps * log_eps, 3.0 * eps * log_eps);
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        lower = lower.min(forcing.ftilde(neg_lo + (neg_hi - neg_lo) * t));
        upper = upper.min(-forcing.ftilde(pos_lo + (pos_hi - pos_lo) * t));
    }
    if lower <= 0.0 {
        return Err(Error::EpsTooLarge {
            eps,
            clause: "sign band below zero",
        });
    }
    if upper <= 0.0 {
        return Err(Error::EpsTooLarge {
            eps,
            clause: "sign band above zero",
        });
    }
    forcing.band_constant = lower.min(upper) / eps;
    Ok(forcing)
}

impl ModifiedForcing {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `|log eps|`.
    pub fn log_eps(&self) -> f64 {
        self.log_eps
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_high(&self) -> f64 {
        self.theta_high
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `theta^-1 sup |W''|` over `[-3, 3]`.
    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    /// Lipschitz constant of the unregularized forcing on `[-3, 3]`.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    /// Negative zero of the regularized forcing.
    pub fn z_eps(&self) -> f64 {
        self.z_eps
    }

    /// Largest `c` with `ftilde >= c eps` on the left band and
    /// `ftilde <= -c eps` on the right band (sampled).
    pub fn band_constant(&self) -> f64 {
        self.band_constant
    }

    /// Whether the regularized forcing has exactly the zeros
    /// `{z_eps, 0, 1}` on `[-1 - mu, 1]` with `z_eps >= -1 - mu`.
    pub fn zero_set_holds(&self) -> bool {
        self.zero_set_holds
    }

    /// Interval that the flow leaves invariant.
    pub fn flow_range(&self) -> (f64, f64) {
        ((-1.0 - self.mu).min(self.z_eps), 1.0)
    }

    pub fn fbar(&self, u: f64) -> f64 {
        self.fbar_jet(u)[0]
    }

    pub fn fbar_jet(&self, u: f64) -> Jet {
        let w = &self.potential;
        let scale = if (-1.0..=0.0).contains(&u) {
            1.0 / self.theta
        } else {
            1.0 / self.theta_high
        };
        [scale * w.d1(u), scale * w.d2(u), scale * w.d3(u)]
    }

    /// Bump mollification of `fbar` at scale `eps`.
    fn mollified_jet(&self, u: f64) -> Jet {
        let (rule, norm) = bump_rule();
        let eps = self.eps;
        let mut cuts = vec![-1.0, 1.0];
        for kink in [-1.0, 0.0] {
            let t = (u - kink) / eps;
            if t.abs() < 1.0 {
                cuts.push(t);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut out = [0.0; 3];
        for pair in cuts.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                // Evaluate fbar on the side of the kink this piece lies on.
                let arg = u - eps * t;
                let side = u - eps * mid;
                let f = self.fbar_on_side(arg, side);
                let r = bump_raw(t);
                let dr = bump_raw_d1(t);
                out[0] += w * half * r * f[0];
                out[1] += w * half * dr * f[0];
                out[2] += w * half * dr * f[1];
            }
        }
        [out[0] / norm, out[1] / (norm * eps), out[2] / (norm * eps)]
    }

    fn fbar_on_side(&self, u: f64, side: f64) -> Jet {
        let w = &self.potential;
        let scale = if (-1.0..=0.0).contains(&side) {
            1.0 / self.theta
        } else {
            1.0 / self.theta_high
        };
        [scale * w.d1(u), scale * w.d2(u), scale * w.d3(u)]
    }

    fn eta_jet(u: f64) -> Jet {
        let s = quintic_step((u + 0.75) / 0.5);
        [s[0], 2.0 * s[1], 4.0 * s[2]]
    }

    /// Cutoff equal to one on `[0, 2 eps L]`, vanishing outside
    /// `(-eps/M, 3 eps L)`.
    pub fn zeta_jet(&self, u: f64) -> Jet {
        let eps = self.eps;
        let left = eps / self.big_m;
        let band = eps * self.log_eps;
        if u <= -left || u >= 3.0 * band {
            [0.0; 3]
        } else if u < 0.0 {
            let s = cubic_step((u + left) / left);
            [s[0], s[1] / left, s[2] / (left * left)]
        } else if u <= 2.0 * band {
            [1.0, 0.0, 0.0]
        } else {
            let s = cubic_step((u - 2.0 * band) / band);
            [1.0 - s[0], -s[1] / band, -s[2] / (band * band)]
        }
    }

    pub fn feps(&self, u: f64) -> f64 {
        self.feps_jet(u)[0]
    }

    pub fn feps_jet(&self, u: f64) -> Jet {
        let eta = Self::eta_jet(u);
        let fbar = self.fbar_jet(u);
        if eta[0] == 1.0 && eta[1] == 0.0 {
            return fbar;
        }
        let mut smooth = self.mollified_jet(u);
        smooth[0] += 2.0 * self.lip * self.eps;
        blend(eta, smooth, fbar)
    }

    pub fn ftilde(&self, u: f64) -> f64 {
        self.ftilde_jet(u)[0]
    }

    pub fn ftilde_jet(&self, u: f64) -> Jet {
        let f = self.feps_jet(u);
        let zeta = self.zeta_jet(u);
        if zeta == [0.0; 3] {
            return f;
        }
        let line = [self.eps - u / self.log_eps, -1.0 / self.log_eps, 0.0];
        blend(zeta, f, line)
    }
}

fn flow_tolerance() -> Tolerance {
    Tolerance {
        rtol: 1e-11,
        atol: 1e-13,
        max_step: 0.5,
    }
}

/// Solution of `chi' = -ftilde(chi)`, `chi(0) = xi`, at time `s`.
pub fn ode_flow(forcing: &ModifiedForcing, xi: f64, s: f64) -> f64 {
    dopri5(
        |_, y: &[f64; 1]| [-forcing.ftilde(y[0])],
        0.0,
        [xi],
        s,
        flow_tolerance(),
        |_, _| {},
    )[0]
}

/// Flow together with its first variation `chi_xi` and the ratio
/// `chi_xixi / chi_xi`. Returns the final state and the largest
/// `|chi_xixi / chi_xi|` seen along the way.
pub fn ode_flow_variations(forcing: &ModifiedForcing, xi: f64, s: f64) -> ([f64; 3], f64) {
    let mut peak = 0.0f64;
    let end = dopri5(
        |_, y: &[f64; 3]| {
            let f = forcing.ftilde_jet(y[0]);
            [-f[0], -f[1] * y[1], -f[2] * y[1]]
        },
        0.0,
        [xi, 1.0, 0.0],
        s,
        flow_tolerance(),
        |_, y| peak = peak.max(y[2].abs()),
    );
    (end, peak)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalReport {
    pub eps: f64,
    pub beta: f64,
    pub horizon: f64,
    /// Arrival time divided by `|log eps|`; infinite if never reached.
    pub tau: f64,
    pub arrival_holds: bool,
    pub monotone_holds: bool,
    /// Largest `|chi_xixi / chi_xi|` over the start grid and `[0, a |log eps|]`.
    pub max_ratio: f64,
    /// `eps * max_ratio`.
    pub ratio_constant: f64,
}

/// Check the arrival, monotonicity and second-variation properties of the
/// flow on a grid of starting points.
pub fn verify_universal(forcing: &ModifiedForcing, beta: f64, a: f64) -> Result<UniversalReport> {
    if !(beta > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need beta > 0 and a > 0, got ({beta}, {a})"
        )));
    }
    let eps = forcing.eps();
    let log_eps = forcing.log_eps();
    let start = 3.0 * eps * log_eps;
    let target = 1.0 - beta * eps;

    let mut hi = log_eps;
    let mut arrival_holds = true;
    while ode_flow(forcing, start, hi) < target {
        hi *= 2.0;
        if hi > 100.0 * log_eps {
            arrival_holds = false;
            break;
        }
    }
    let tau = if arrival_holds {
        let mut lo = 0.0;
        while hi - lo > 1e-9 * log_eps {
            let mid = 0.5 * (lo + hi);
            if ode_flow(forcing, start, mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi / log_eps
    } else {
        f64::INFINITY
    };

    let (lo, top) = forcing.flow_range();
    let horizon = a * log_eps;
    let mut starts: Vec<f64> = (0..=200)
        .map(|i| lo + (top - lo) * i as f64 / 200.0)
        .collect();
    let (band_lo, band_hi) = (-eps / forcing.big_m(), start);
    starts.extend((0..=40).map(|i| band_lo + (band_hi - band_lo) * i as f64 / 40.0));
    starts.extend((0..=40).map(|i| -1.0 - 2.0 * eps + 4.0 * eps * i as f64 / 40.0));
    starts.sort_by(f64::total_cmp);
    starts.dedup();

    let mut monotone_holds = true;
    let mut max_ratio = 0.0f64;
    let times = [0.25 * horizon, 0.5 * horizon, horizon];
    let mut previous: Option<Vec<f64>> = None;
    for &xi in &starts {
        let (end, peak) = ode_flow_variations(forcing, xi, horizon);
        max_ratio = max_ratio.max(peak);
        if end[1] <= 0.0 {
            monotone_holds = false;
        }
        let values: Vec<f64> = times.iter().map(|&s| ode_flow(forcing, xi, s)).collect();
        if let Some(prev) = &previous {
            if prev.iter().zip(&values).any(|(p, v)| v <= p) {
                monotone_holds = false;
            }
        }
        previous = Some(values);
    }
    Ok(UniversalReport {
        eps,
        beta,
        horizon: a,
        tau,
        arrival_holds,
        monotone_holds,
        max_ratio,
        ratio_constant: eps * max_ratio,
    })
}

/// `min_s C qdot(s) + 2 beta W''(q(s))` over the profile grid, together with
/// its limit `2 beta min W''(+-1)` as `s -> +-infinity`.
pub fn bs_margin(profile: &StandingWaveProfile, c: f64, beta: f64) -> f64 {
    let w = profile.potential();
    let tail = 2.0 * beta * w.d2(1.0).min(w.d2(-1.0));
    profile
        .qdot()
        .iter()
        .zip(profile.wpp())
        .map(|(qd, wpp)| c * qd + 2.0 * beta * wpp)
        .fold(tail, f64::min)
}

/// Supremum of the `beta` for which `bs_margin` is positive, located by
/// bisection to within `tol`.
pub fn margin_threshold(profile: &StandingWaveProfile, c: f64, tol: f64) -> Result<f64> {
    if !(c > 0.0 && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need C > 0 and tol > 0, got ({c}, {tol})"
        )));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while bs_margin(profile, c, hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::SolverDegeneracy(
                "margin stays positive for every beta".into(),
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if bs_margin(profile, c, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::SolverDegeneracy(
            "no positive margin above beta = 0".into(),
        ));
    }
    Ok(0.5 * (lo + hi))
}
