use crate::numerics::fft2::Fft2;
use crate::{Direction, Error, Mobility, Result, StandingWaveProfile};
use num_complex::Complex64;
use rayon::prelude::*;

/// Largest Fourier cutoff tried by [`smooth_mobility`].
pub const CUTOFF_CAP: usize = 64;

/// Fourier truncation of `y -> m(y, qdot(s) e)` on every profile node, split
/// into the torus mean `m1(s)` and the fluctuation modes `m2(s, k)`, `k != 0`.
#[derive(Debug, Clone)]
pub struct SmoothedMobility {
    direction: Direction,
    cutoff: usize,
    m1: Vec<f64>,
    modes: Vec<[i64; 2]>,
    coeffs: Vec<Vec<Complex64>>,
    sup_error: f64,
    fluctuation_sup: f64,
}

impl SmoothedMobility {
    /// Assemble from explicit data. `coeffs[j][i]` is the coefficient of mode
    /// `modes[j]` at profile node `i`; modes must come in `k, -k` pairs with
    /// conjugate coefficients.
    pub fn from_parts(
        direction: Direction,
        m1: Vec<f64>,
        modes: Vec<[i64; 2]>,
        coeffs: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if direction.dim() != 2 {
            return Err(Error::InvalidArgument(
                "correctors are implemented for d = 2".into(),
            ));
        }
        if modes.len() != coeffs.len() || coeffs.iter().any(|c| c.len() != m1.len()) {
            return Err(Error::InvalidArgument(
                "mode data does not match the grid".into(),
            ));
        }
        for (j, k) in modes.iter().enumerate() {
            if *k == [0, 0] {
                return Err(Error::InvalidArgument("the zero mode belongs to m1".into()));
            }
            let partner = modes
                .iter()
                .position(|q| *q == [-k[0], -k[1]])
                .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} has no partner")))?;
            let bad = coeffs[j]
                .iter()
                .zip(&coeffs[partner])
                .any(|(a, b)| (a - b.conj()).norm() > 1e-12 * (1.0 + a.norm()));
            if bad {
                return Err(Error::InvalidArgument(format!(
                    "mode {k:?} is not Hermitian"
                )));
            }
        }
        let cutoff = modes
            .iter()
            .map(|k| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0);
        let fluctuation_sup = coeffs
            .iter()
            .map(|c| c.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .sum();
        let mut sm = Self {
            direction,
            cutoff,
            m1,
            modes,
            coeffs,
            sup_error: 0.0,
            fluctuation_sup,
        };
        sm.sort_modes();
        Ok(sm)
    }

    fn sort_modes(&mut self) {
        let mut order: Vec<usize> = (0..self.modes.len()).collect();
        order.sort_by_key(|&j| self.modes[j]);
        self.modes = order.iter().map(|&j| self.modes[j]).collect();
        self.coeffs = order
            .iter()
            .map(|&j| std::mem::take(&mut self.coeffs[j]))
            .collect();
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    /// Fourier cutoff `K` in the max norm.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn m1(&self) -> &[f64] {
        &self.m1
    }

    /// Active fluctuation modes, sorted.
    pub fn modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    /// Coefficients of `modes()[j]` over the profile grid.
    pub fn coeffs(&self, j: usize) -> &[Complex64] {
        &self.coeffs[j]
    }

    pub fn mode(&self, k: [i64; 2]) -> Option<&[Complex64]> {
        self.modes
            .iter()
            .position(|q| *q == k)
            .map(|j| self.coeffs[j].as_slice())
    }

    /// Measured `sup |m(y, qdot(s) e) - mtilde(s, y)|`.
    pub fn sup_error(&self) -> f64 {
        self.sup_error
    }

    /// `sup |m2|` over the sampled grids (bounded above by the sum of mode
    /// amplitudes when built from parts).
    pub fn fluctuation_sup(&self) -> f64 {
        self.fluctuation_sup
    }

    /// The fluctuation-free smoothing of `m` (all modes dropped).
    pub fn is_fluctuation_free(&self) -> bool {
        self.modes.is_empty()
    }
}

fn sample(m: &Mobility, v: &[f64; 2], n: usize) -> Vec<Complex64> {
    (0..n * n)
        .map(|idx| {
            let y = [(idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64];
            Complex64::new(m.eval(&y, v), 0.0)
        })
        .collect()
}

struct NodeResult {
    coeffs: Vec<Complex64>,
    sup_error: f64,
    fluctuation_sup: f64,
}

/// Truncate one torus slice to `|k|_inf <= cutoff` and measure the error on
/// a grid twice as fine as the sampling grid.
fn truncate(m: &Mobility, v: &[f64; 2], cutoff: usize, coarse: &Fft2, fine: &Fft2) -> NodeResult {
    let n = coarse.size();
    let nf = fine.size();
    let c = cutoff as i64;
    let mut data = sample(m, v, n);
    coarse.forward(&mut data);
    let side = 2 * cutoff + 1;
    let mut coeffs = vec![Complex64::default(); side * side];
    for k1 in -c..=c {
        for k2 in -c..=c {
            coeffs[((k1 + c) as usize) * side + (k2 + c) as usize] = data[coarse.index(k1, k2)];
        }
    }
    // Hermitian symmetrization keeps the truncation real.
    let copy = coeffs.clone();
    for (idx, z) in coeffs.iter_mut().enumerate() {
        *z = 0.5 * (*z + copy[side * side - 1 - idx].conj());
    }
    let mut padded = vec![Complex64::default(); nf * nf];
    for k1 in -c..=c {
        for k2 in -c..=c {
            padded[fine.index(k1, k2)] = coeffs[((k1 + c) as usize) * side + (k2 + c) as usize];
        }
    }
    fine.inverse(&mut padded);
    let mean = coeffs[(side * side) / 2].re;
    let exact = sample(m, v, nf);
    let mut sup_error: f64 = 0.0;
    let mut fluctuation_sup: f64 = 0.0;
    for (a, b) in padded.iter().zip(&exact) {
        sup_error = sup_error.max((a.re - b.re).abs());
        fluctuation_sup = fluctuation_sup.max((a.re - mean).abs());
    }
    NodeResult {
        coeffs,
        sup_error,
        fluctuation_sup,
    }
}

fn smooth_at(
    m: &Mobility,
    profile: &StandingWaveProfile,
    direction: &Direction,
    cutoff: usize,
) -> SmoothedMobility {
    let n = (4 * cutoff).max(8);
    let coarse = Fft2::new(n);
    let fine = Fft2::new(2 * n);
    let unit = direction.unit();
    let at = |qd: f64| truncate(m, &[qd * unit[0], qd * unit[1]], cutoff, &coarse, &fine);
    let nodes: Vec<NodeResult> = if m.is_v_independent() {
        let one = at(0.0);
        profile
            .qdot()
            .iter()
            .map(|_| NodeResult {
                coeffs: one.coeffs.clone(),
                ..one
            })
            .collect()
    } else {
        profile.qdot().par_iter().map(|&qd| at(qd)).collect()
    };
    let side = 2 * cutoff + 1;
    let c = cutoff as i64;
    let m1 = nodes
        .iter()
        .map(|r| r.coeffs[(side * side) / 2].re)
        .collect();
    let scale = m.theta_high().abs().max(1.0);
    let mut modes = Vec::new();
    let mut coeffs = Vec::new();
    for k1 in -c..=c {
        for k2 in -c..=c {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let idx = ((k1 + c) as usize) * side + (k2 + c) as usize;
            let series: Vec<Complex64> = nodes.iter().map(|r| r.coeffs[idx]).collect();
            if series.iter().any(|z| z.norm() > 1e-13 * scale) {
                modes.push([k1, k2]);
                coeffs.push(series);
            }
        }
    }
    SmoothedMobility {
        direction: direction.clone(),
        cutoff,
        m1,
        modes,
        coeffs,
        sup_error: nodes.iter().map(|r| r.sup_error).fold(0.0, f64::max),
        fluctuation_sup: nodes.iter().map(|r| r.fluctuation_sup).fold(0.0, f64::max),
    }
}

/// Fourier-smooth `m` along the wave in direction `e`, doubling the cutoff
/// from `cutoff` until the measured sup error is at most `nu / 3`.
pub fn smooth_mobility(
    m: &Mobility,
    profile: &StandingWaveProfile,
    e: &Direction,
    cutoff: usize,
    nu: f64,
) -> Result<SmoothedMobility> {
    if e.dim() != 2 {
        return Err(Error::InvalidArgument(
            "correctors are implemented for d = 2".into(),
        ));
    }
    if cutoff < 1 {
        return Err(Error::InvalidArgument(
            "Fourier cutoff must be at least 1".into(),
        ));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target nu = {nu} must be positive"
        )));
    }
    let target = nu / 3.0;
    let mut k = cutoff;
    loop {
        let sm = smooth_at(m, profile, e, k);
        if sm.sup_error <= target {
            return Ok(sm);
        }
        if k >= CUTOFF_CAP {
            return Err(Error::InsufficientSmoothness {
                k,
                achieved: sm.sup_error,
                target,
            });
        }
        k = (2 * k).min(CUTOFF_CAP);
    }
}
