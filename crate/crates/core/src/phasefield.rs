//! Explicit finite-difference simulator for `m(x/eps, eps Du) u_t = Lap u -
//! eps^-2 W'(u)` on a periodic square, with interface tracking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, Interface, RunHistory};
use crate::mobility::Mobility;
use crate::potential::{PotentialW, StandingWaveProfile};

/// Default fraction of the stability bound used for the time step.
pub const STABILITY_FACTOR: f64 = 0.2;

/// Initial interface geometry. The positive phase is the inside of the
/// circle, the slab on the positive side of the plane, or the strip below
/// the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Pair of parallel lines `x . normal = offset` and its antipode on the
    /// torus; the normal must be a lattice direction.
    Plane {
        normal: [f64; 2],
        offset: f64,
    },
    /// `x2 = offset + sum a cos(2 pi k x1 / L) + b sin(2 pi k x1 / L)`.
    Graph {
        offset: f64,
        modes: Vec<(i64, f64, f64)>,
    },
}

fn wrap(d: f64, l: f64) -> f64 {
    d - (d / l).round() * l
}

/// Signed distance to a periodic slab of width `period / 2` centred on
/// `period / 4`.
fn slab_distance(t: f64, period: f64) -> f64 {
    let s = t.rem_euclid(period);
    let half = 0.5 * period;
    if s < half {
        s.min(half - s)
    } else {
        -(s - half).min(period - s)
    }
}

impl Shape {
    /// Period of the plane's normal coordinate on a box of side `box_len`.
    fn plane_period(normal: [f64; 2], box_len: f64) -> Result<f64> {
        let len = normal[0].hypot(normal[1]);
        let e = [normal[0] / len, normal[1] / len];
        for k1 in -16i64..=16 {
            for k2 in -16i64..=16 {
                if (k1, k2) == (0, 0) {
                    continue;
                }
                let kl = (k1 as f64).hypot(k2 as f64);
                let cross = e[0] * k2 as f64 - e[1] * k1 as f64;
                let dot = e[0] * k1 as f64 + e[1] * k2 as f64;
                if cross.abs() < 1e-12 * kl && dot > 0.0 {
                    return Ok(box_len / kl);
                }
            }
        }
        Err(Error::InvalidArgument(format!(
            "plane normal {normal:?} is not a lattice direction of the periodic box"
        )))
    }

    /// Check that the shape fits the box with a margin of `margin`.
    pub fn check_fit(&self, box_len: f64, margin: f64) -> Result<()> {
        match self {
            Shape::Circle { radius, .. } => {
                if *radius < margin || 2.0 * (radius + margin) > box_len + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "circle of radius {radius} does not fit the box with margin {margin}"
                    )));
                }
            }
            Shape::Plane { normal, .. } => {
                if normal[0].hypot(normal[1]) == 0.0 {
                    return Err(Error::InvalidArgument("plane normal is zero".into()));
                }
                let p = Self::plane_period(*normal, box_len)?;
                if 0.5 * p < 2.0 * margin {
                    return Err(Error::InvalidArgument(format!(
                        "slab of width {} is thinner than the margin",
                        0.5 * p
                    )));
                }
            }
            Shape::Graph { modes, .. } => {
                let amp: f64 = modes.iter().map(|(_, a, b)| a.abs() + b.abs()).sum();
                if 0.25 * box_len - amp < margin {
                    return Err(Error::InvalidArgument(
                        "graph amplitude leaves no room for the margin".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Signed distance at `(x, y)`, positive in the positive phase. For the
    /// graph this is the first-order estimate `(g - x2) / sqrt(1 + g'^2)`.
    pub fn signed_distance(&self, x: f64, y: f64, box_len: f64) -> f64 {
        match self {
            Shape::Circle { center, radius } => {
                radius - wrap(x - center[0], box_len).hypot(wrap(y - center[1], box_len))
            }
            Shape::Plane { normal, offset } => {
                let len = normal[0].hypot(normal[1]);
                let period = Self::plane_period(*normal, box_len).unwrap_or(box_len);
                slab_distance((x * normal[0] + y * normal[1]) / len - offset, period)
            }
            Shape::Graph { offset, modes } => {
                let w = 2.0 * std::f64::consts::PI / box_len;
                let (mut g, mut dg) = (*offset, 0.0);
                for &(k, a, b) in modes {
                    let arg = w * k as f64 * x;
                    g += a * arg.cos() + b * arg.sin();
                    dg += w * k as f64 * (b * arg.cos() - a * arg.sin());
                }
                slab_distance((g - y) / (1.0 + dg * dg).sqrt(), box_len)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub u: GridField,
    pub eps: f64,
    pub steps: usize,
}

/// `u = q(d / eps)` for the standing wave `q` and the signed distance `d`.
pub fn init_interface(
    shape: &Shape,
    eps: f64,
    n: usize,
    box_len: f64,
    profile: &StandingWaveProfile,
) -> Result<PhaseState> {
    let h = box_len / n as f64;
    if !(eps >= 3.0 * h) {
        return Err(Error::UnderResolved { eps, min: 3.0 * h });
    }
    shape.check_fit(box_len, 5.0 * eps)?;
    let u = GridField::from_fn(n, box_len, |x, y| {
        profile.q_at(shape.signed_distance(x, y, box_len) / eps)
    })?;
    Ok(PhaseState { u, eps, steps: 0 })
}

/// Mobility and potential with the constants the stepper needs.
#[derive(Debug, Clone)]
pub struct PhaseModel {
    mobility: Mobility,
    potential: PotentialW,
    curvature_sup: f64,
}

impl PhaseModel {
    pub fn new(mobility: Mobility, potential: PotentialW) -> Result<Self> {
        if mobility.min_dim() > 2 {
            return Err(Error::InvalidArgument(format!(
                "mobility needs {} dimensions, the simulator is planar",
                mobility.min_dim()
            )));
        }
        let curvature_sup = potential.sup_abs_d2(-1.0, 1.0);
        Ok(Self {
            mobility,
            potential,
            curvature_sup,
        })
    }

    pub fn mobility(&self) -> &Mobility {
        &self.mobility
    }

    pub fn potential(&self) -> &PotentialW {
        &self.potential
    }

    /// Largest admissible step, `c theta min(h^2, eps^2 / sup|W''|)`.
    pub fn max_dt(&self, state: &PhaseState, factor: f64) -> f64 {
        let h = state.u.step();
        factor * self.mobility.theta() * (h * h).min(state.eps * state.eps / self.curvature_sup)
    }

    /// Mobility at every node when it does not depend on the gradient.
    fn frozen_mobility(&self, state: &PhaseState) -> Option<Vec<f64>> {
        if !self.mobility.is_v_independent() {
            return None;
        }
        let eps = state.eps;
        let field = GridField::from_fn(state.u.n(), state.u.box_len(), |x, y| {
            self.mobility.eval(&[x / eps, y / eps], &[0.0, 0.0])
        })
        .ok()?;
        Some(field.values().to_vec())
    }
}

/// One explicit step.
pub fn step(state: &mut PhaseState, model: &PhaseModel, dt: f64) -> Result<()> {
    step_with(state, model, dt, None)
}

fn step_with(
    state: &mut PhaseState,
    model: &PhaseModel,
    dt: f64,
    frozen: Option<&[f64]>,
) -> Result<()> {
    // At this limit the update is monotone in every stencil value.
    let limit = model.max_dt(state, STABILITY_FACTOR);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, limit });
    }
    let n = state.u.n();
    let h = state.u.step();
    let eps = state.eps;
    let inv_h2 = 1.0 / (h * h);
    let inv_eps2 = 1.0 / (eps * eps);
    let u = state.u.values();
    let mut next = vec![0.0; n * n];
    next.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        for (i, out) in row.iter_mut().enumerate() {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let c = u[j * n + i];
            let (w, e, s, nn) = (u[j * n + im], u[j * n + ip], u[jm * n + i], u[jp * n + i]);
            let lap = (w + e + s + nn - 4.0 * c) * inv_h2;
            let m = match frozen {
                Some(f) => f[j * n + i],
                None => {
                    let grad = [(e - w) / (2.0 * h), (nn - s) / (2.0 * h)];
                    let x = i as f64 * h;
                    let y = j as f64 * h;
                    model
                        .mobility
                        .eval(&[x / eps, y / eps], &[eps * grad[0], eps * grad[1]])
                }
            };
            *out = c + dt * (lap - inv_eps2 * model.potential.d1(c)) / m;
        }
    });
    state.u.values_mut().copy_from_slice(&next);
    let t = state.u.time() + dt;
    state.u.set_time(t);
    state.steps += 1;
    Ok(())
}

/// Discrete energy `sum h^2 (|D+ u|^2 / 2 + W(u) / eps^2)`.
pub fn energy(state: &PhaseState, potential: &PotentialW) -> f64 {
    let u = &state.u;
    let n = u.n() as isize;
    let h = u.step();
    let eps2 = state.eps * state.eps;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                let c = u.at(i, j);
                let dx = u.at(i + 1, j) - c;
                let dy = u.at(i, j + 1) - c;
                acc += 0.5 * (dx * dx + dy * dy) + h * h * potential.eval(c) / eps2;
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

/// Advance to `t_end` with the largest stable step scaled by `factor`,
/// recording a snapshot every `cadence` time units (and at both ends).
pub fn run(
    state: &mut PhaseState,
    model: &PhaseModel,
    t_end: f64,
    factor: f64,
    cadence: f64,
) -> Result<RunHistory> {
    if !(factor > 0.0 && factor <= STABILITY_FACTOR) {
        return Err(Error::InvalidArgument(format!(
            "step factor {factor} outside (0, {STABILITY_FACTOR}]"
        )));
    }
    if !(t_end >= 0.0 && cadence > 0.0) {
        return Err(Error::InvalidArgument(
            "need t_end >= 0 and cadence > 0".into(),
        ));
    }
    let dt_max = model.max_dt(state, factor);
    let steps = (t_end / dt_max).ceil() as usize;
    let dt = if steps == 0 {
        0.0
    } else {
        t_end / steps as f64
    };
    let every = if steps == 0 {
        1
    } else {
        ((cadence / dt).round() as usize).max(1)
    };
    let frozen = model.frozen_mobility(state);
    let t0 = state.u.time();
    let mut history = RunHistory {
        snapshots: vec![state.u.clone()],
    };
    for k in 1..=steps {
        step_with(state, model, dt, frozen.as_deref())?;
        // Keep the clock free of accumulated rounding.
        state.u.set_time(t0 + k as f64 * dt);
        if k % every == 0 || k == steps {
            history.snapshots.push(state.u.clone());
        }
        if !state.u.is_finite() {
            return Err(Error::Stability {
                dt,
                limit: f64::NAN,
            });
        }
    }
    Ok(history)
}

/// Normal velocity at one interface vertex; `None` where it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub velocity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySnapshot {
    pub time: f64,
    pub samples: Vec<VelocitySample>,
}

/// Centred displacement of each vertex along its outward normal (away from
/// the positive phase) between the neighbouring snapshots.
pub fn measure_normal_velocity(history: &[(f64, Interface)]) -> Result<Vec<VelocitySnapshot>> {
    if history.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 snapshots, got {}",
            history.len()
        )));
    }
    let mut out = Vec::new();
    for k in 1..history.len() - 1 {
        let (t0, before) = (&history[k - 1].0, &history[k - 1].1);
        let (t, now) = (&history[k].0, &history[k].1);
        let (t1, after) = (&history[k + 1].0, &history[k + 1].1);
        let same_topology = before.polylines.len() == now.polylines.len()
            && after.polylines.len() == now.polylines.len();
        let reach = 0.25 * now.box_len;
        let mut samples = Vec::with_capacity(now.len());
        for line in &now.polylines {
            for (idx, &p) in line.points.iter().enumerate() {
                let normal = line.normal(idx, now.box_len);
                let velocity = if same_topology && normal != [0.0, 0.0] {
                    match (
                        before.ray_hit(p, normal, reach),
                        after.ray_hit(p, normal, reach),
                    ) {
                        (Some(a), Some(b)) => Some((b - a) / (t1 - t0)),
                        _ => None,
                    }
                } else {
                    None
                };
                samples.push(VelocitySample {
                    point: p,
                    normal,
                    velocity,
                });
            }
        }
        out.push(VelocitySnapshot { time: *t, samples });
    }
    Ok(out)
}
