//! Finite-difference level-set solver for the homogenized flow
//! `mbar(n) phi_t = tr((I - n n) D^2 phi)` in the plane, plus the exact
//! shrinking-ball law and run-to-run comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{hausdorff, GridField, RunHistory};
use crate::mobility::MobilityTable;

/// Largest admissible `dt / (theta h^2)`.
pub const LS_STABILITY: f64 = 0.25;

/// Default `dt / (theta h^2)` used by [`run_levelset`].
pub const LS_STEP_FACTOR: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelState {
    pub phi: GridField,
    pub mbar: MobilityTable,
}

impl LevelState {
    pub fn new(phi: GridField, mbar: MobilityTable) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidArgument(
                "level-set function has non-finite values".into(),
            ));
        }
        Ok(Self { phi, mbar })
    }

    pub fn max_dt(&self, factor: f64) -> f64 {
        let h = self.phi.step();
        factor * h * h * self.mbar.bounds().0
    }

    /// Default gradient floor `1e-6 * (box / h)`.
    pub fn default_grad_floor(&self) -> f64 {
        1e-6 * self.phi.n() as f64
    }
}

/// One explicit step of the centred geometric scheme. Where `|grad phi|`
/// drops below `grad_floor`, the curvature term becomes the mean of the two
/// axis second differences and the mobility its angular mean.
pub fn ls_step(state: &mut LevelState, dt: f64, grad_floor: f64) -> Result<()> {
    let limit = state.max_dt(LS_STABILITY);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, limit });
    }
    let n = state.phi.n();
    let h = state.phi.step();
    let phi = state.phi.values();
    let mbar = &state.mbar;
    let mean_mobility = mbar.mean();
    let mut next = vec![0.0; n * n];
    next.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        for (i, out) in row.iter_mut().enumerate() {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let c = phi[j * n + i];
            let (w, e, s, nn) = (
                phi[j * n + im],
                phi[j * n + ip],
                phi[jm * n + i],
                phi[jp * n + i],
            );
            let px = (e - w) / (2.0 * h);
            let py = (nn - s) / (2.0 * h);
            let pxx = (e - 2.0 * c + w) / (h * h);
            let pyy = (nn - 2.0 * c + s) / (h * h);
            let g2 = px * px + py * py;
            let rate = if g2.sqrt() >= grad_floor {
                let pxy = (phi[jp * n + ip] - phi[jp * n + im] - phi[jm * n + ip]
                    + phi[jm * n + im])
                    / (4.0 * h * h);
                let curv = (pxx * py * py - 2.0 * pxy * px * py + pyy * px * px) / g2;
                let g = g2.sqrt();
                curv / mbar.eval_vec(px / g, py / g)
            } else {
                0.5 * (pxx + pyy) / mean_mobility
            };
            *out = c + dt * rate;
        }
    });
    state.phi.values_mut().copy_from_slice(&next);
    let t = state.phi.time() + dt;
    state.phi.set_time(t);
    Ok(())
}

/// Advance to `t_end` with `dt = factor theta h^2` (shortened to land on
/// `t_end`), recording a snapshot every `cadence` time units.
pub fn run_levelset(
    state: &mut LevelState,
    t_end: f64,
    factor: f64,
    cadence: f64,
    grad_floor: f64,
) -> Result<RunHistory> {
    if !(factor > 0.0 && factor <= LS_STABILITY) {
        return Err(Error::InvalidArgument(format!(
            "step factor {factor} outside (0, {LS_STABILITY}]"
        )));
    }
    if !(t_end >= 0.0 && cadence > 0.0) {
        return Err(Error::InvalidArgument(
            "need t_end >= 0 and cadence > 0".into(),
        ));
    }
    let steps = (t_end / state.max_dt(factor)).ceil() as usize;
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
    let t0 = state.phi.time();
    let mut history = RunHistory {
        snapshots: vec![state.phi.clone()],
    };
    for k in 1..=steps {
        ls_step(state, dt, grad_floor)?;
        state.phi.set_time(t0 + k as f64 * dt);
        if k % every == 0 || k == steps {
            history.snapshots.push(state.phi.clone());
        }
    }
    if !state.phi.is_finite() {
        return Err(Error::Stability {
            dt,
            limit: state.max_dt(LS_STABILITY),
        });
    }
    Ok(history)
}

/// Radius of a ball under `mbar V = kappa` in dimension `d`:
/// `sqrt(R0^2 - 2 (d - 1) t / mbar)`.
pub fn shrink_ball_exact(r0: f64, t: f64, mbar: f64, d: usize) -> Result<f64> {
    if !(r0 > 0.0 && mbar > 0.0 && d >= 2 && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need R0 > 0, mbar > 0, d >= 2 and t >= 0, got ({r0}, {mbar}, {d}, {t})"
        )));
    }
    let extinction = mbar * r0 * r0 / (2.0 * (d - 1) as f64);
    if t > extinction {
        return Err(Error::Extinction { t, extinction });
    }
    Ok((r0 * r0 - 2.0 * (d - 1) as f64 * t / mbar).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowComparison {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max: f64,
    pub final_distance: f64,
}

/// Hausdorff distance between the zero sets of two runs at the snapshot
/// times of `a` that fall inside the time span of `b`; `b` is interpolated
/// in time.
pub fn compare_flows(a: &RunHistory, b: &RunHistory) -> Result<FlowComparison> {
    let (b0, b1) = match (b.snapshots.first(), b.snapshots.last()) {
        (Some(x), Some(y)) => (x.time(), y.time()),
        _ => return Err(Error::EmptyInterface),
    };
    let tol = 1e-12 * (1.0 + b1.abs());
    let mut times = Vec::new();
    let mut distances = Vec::new();
    for snap in &a.snapshots {
        let t = snap.time();
        if t < b0 - tol || t > b1 + tol {
            continue;
        }
        let other = b.field_at(t.clamp(b0, b1))?;
        times.push(t);
        distances.push(hausdorff(&snap.zero_set(), &other.zero_set())?);
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("runs share no time window".into()));
    }
    let max = distances.iter().copied().fold(0.0, f64::max);
    let final_distance = *distances.last().unwrap_or(&0.0);
    Ok(FlowComparison {
        times,
        distances,
        max,
        final_distance,
    })
}
