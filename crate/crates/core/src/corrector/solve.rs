use super::SmoothedMobility;
use crate::numerics::{self, tridiag::Tridiagonal};
use crate::{Direction, Error, Result, StandingWaveProfile};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Solution of the one-dimensional corrector equation
/// `-P'' + W''(q) P = (mbar_tilde - m1) qdot`, normalized by `P(0) = 0`.
#[derive(Debug, Clone)]
pub struct OneDCorrector {
    values: Vec<f64>,
    mbar_tilde: f64,
}

impl OneDCorrector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `int m1 qdot^2 / int qdot^2`, the constant that makes the forcing
    /// orthogonal to `qdot`.
    pub fn mbar_tilde(&self) -> f64 {
        self.mbar_tilde
    }
}

/// Penalized fluctuation corrector, stored as Fourier modes in `y` over the
/// profile grid in `s`.
#[derive(Debug, Clone)]
pub struct CorrectorField {
    delta: f64,
    direction: Direction,
    modes: Vec<[i64; 2]>,
    coeffs: Vec<Vec<Complex64>>,
}

impl CorrectorField {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    pub fn coeffs(&self, j: usize) -> &[Complex64] {
        &self.coeffs[j]
    }

    pub fn mode(&self, k: [i64; 2]) -> Option<&[Complex64]> {
        self.modes
            .iter()
            .position(|q| *q == k)
            .map(|j| self.coeffs[j].as_slice())
    }
}

/// Numerov discretization of `-w'' + V w = f` with `w = 0` at both ends and,
/// optionally, at one pinned interior node. Returns the factored matrix.
fn numerov_matrix(potential: &[f64], h: f64, pin: Option<usize>) -> Result<Tridiagonal> {
    let n = potential.len();
    let c = h * h / 12.0;
    let worst = potential.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if c * worst >= 0.5 {
        return Err(Error::Refinement(format!(
            "grid spacing {h} too coarse for potential magnitude {worst}; refine the profile grid"
        )));
    }
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        if Some(i) == pin {
            continue;
        }
        lower[i] = -(1.0 - c * potential[i - 1]);
        diag[i] = 2.0 + 10.0 * c * potential[i];
        upper[i] = -(1.0 - c * potential[i + 1]);
    }
    Tridiagonal::factor(&lower, &diag, &upper)
        .ok_or_else(|| Error::SolverDegeneracy("vanishing pivot in the corrector system".into()))
}

fn numerov_rhs<T>(f: &[T], h: f64, pin: Option<usize>) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    let c = h * h / 12.0;
    let mut rhs = vec![T::default(); n];
    for i in 1..n - 1 {
        if Some(i) != pin {
            rhs[i] = (f[i - 1] + f[i] * 10.0 + f[i + 1]) * c;
        }
    }
    rhs
}

/// Solve the one-dimensional corrector by a Numerov scheme.
///
/// The operator `-d^2 + W''(q)` has `qdot` in its kernel. Pinning the node
/// nearest to the origin splits the problem into two half-line problems that
/// are uniquely solvable; since the forcing is orthogonal to `qdot` the two
/// halves match to discretization accuracy. The result is then shifted
/// along `qdot` so that `P(0) = 0`.
pub fn solve_1d_corrector(
    sm: &SmoothedMobility,
    profile: &StandingWaveProfile,
) -> Result<OneDCorrector> {
    let qdot = profile.qdot();
    let n = qdot.len();
    if sm.m1().len() != n {
        return Err(Error::InvalidArgument(
            "smoothed mobility and profile grids differ".into(),
        ));
    }
    let h = profile.step();
    let sq: Vec<f64> = qdot.iter().map(|v| v * v).collect();
    let weighted: Vec<f64> = sm.m1().iter().zip(&sq).map(|(a, b)| a * b).collect();
    let mbar_tilde = numerics::trapezoid(&weighted, h) / numerics::trapezoid(&sq, h);
    let f: Vec<f64> = sm
        .m1()
        .iter()
        .zip(qdot)
        .map(|(m, v)| (mbar_tilde - m) * v)
        .collect();
    let s = profile.s_grid();
    let pin = (0..n)
        .min_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()))
        .unwrap();
    let lu = numerov_matrix(profile.wpp(), h, Some(pin))?;
    let mut values = numerov_rhs(&f, h, Some(pin));
    lu.solve(&mut values);

    // Cubic interpolation of P at s = 0 from the four surrounding nodes.
    let j0 = s
        .iter()
        .rposition(|&x| x <= 0.0)
        .unwrap_or(0)
        .clamp(1, n - 3);
    let idx = [j0 - 1, j0, j0 + 1, j0 + 2];
    let at_zero: f64 = idx
        .iter()
        .map(|&i| {
            let w: f64 = idx
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (0.0 - s[j]) / (s[i] - s[j]))
                .product();
            w * values[i]
        })
        .sum();
    let shift = at_zero / profile.qdot_at(0.0);
    values
        .iter_mut()
        .zip(qdot)
        .for_each(|(p, v)| *p -= shift * v);
    Ok(OneDCorrector { values, mbar_tilde })
}

/// Solve the penalized fluctuation cell problem mode by mode.
///
/// In mode `k` the equation reads
/// `m2 qdot + delta p - p'' - 4 pi i a p' + 4 pi^2 |k|^2 p + W''(q) p = 0`
/// with `a = <k, e>`. Writing `p = exp(-2 pi i a s) w` removes the first
/// derivative and leaves the real Schroedinger operator
/// `-w'' + (delta + 4 pi^2 (|k|^2 - a^2) + W''(q)) w = -m2 qdot exp(2 pi i a s)`,
/// which is solved by Numerov with zero values at `s = +-L`.
pub fn solve_penalized(
    sm: &SmoothedMobility,
    profile: &StandingWaveProfile,
    delta: f64,
) -> Result<CorrectorField> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "penalization delta = {delta} must be positive"
        )));
    }
    let n = profile.len();
    if sm.m1().len() != n {
        return Err(Error::InvalidArgument(
            "smoothed mobility and profile grids differ".into(),
        ));
    }
    let unit = sm.direction().unit();
    let h = profile.step();
    let s = profile.s_grid();
    let qdot = profile.qdot();
    let modes = sm.modes().to_vec();
    // Solve one representative of each pair `k, -k`; the partner is its conjugate.
    let canonical: Vec<usize> = (0..modes.len())
        .filter(|&j| {
            let k = modes[j];
            k[0] > 0 || (k[0] == 0 && k[1] > 0)
        })
        .collect();
    let solved: Vec<(usize, Vec<Complex64>)> = canonical
        .par_iter()
        .map(|&j| {
            let k = modes[j];
            let a = k[0] as f64 * unit[0] + k[1] as f64 * unit[1];
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            let gap = (k2 - a * a).max(0.0);
            let potential: Vec<f64> = profile
                .wpp()
                .iter()
                .map(|w| delta + 4.0 * PI * PI * gap + w)
                .collect();
            let lu = numerov_matrix(&potential, h, None)?;
            let f: Vec<Complex64> = (0..n)
                .map(|i| {
                    -sm.coeffs(j)[i] * qdot[i] * Complex64::from_polar(1.0, 2.0 * PI * a * s[i])
                })
                .collect();
            let mut w = numerov_rhs(&f, h, None);
            lu.solve(&mut w);
            let p = w
                .iter()
                .zip(s)
                .map(|(w, &si)| w * Complex64::from_polar(1.0, -2.0 * PI * a * si))
                .collect();
            Ok((j, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut coeffs = vec![Vec::new(); modes.len()];
    for (j, p) in solved {
        let k = modes[j];
        if let Some(partner) = modes.iter().position(|q| *q == [-k[0], -k[1]]) {
            coeffs[partner] = p.iter().map(|z| z.conj()).collect();
        }
        coeffs[j] = p;
    }
    Ok(CorrectorField {
        delta,
        direction: sm.direction().clone(),
        modes,
        coeffs,
    })
}
