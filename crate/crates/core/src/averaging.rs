//! Heat-kernel averaging over hyperplanes of the torus.
//!
//! Convolving a periodic function with the heat kernel of the hyperplane
//! orthogonal to `e` damps the mode `k` by `exp(-4 pi^2 |k - <k,e> e|^2 t)`.
//! Modes parallel to `e` never decay, which is what separates lattice
//! directions (resonant modes exist) from irrational ones.

use crate::numerics::quadrature::GaussRule;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A real trigonometric polynomial on the unit torus, stored as Fourier
/// coefficients with both `k` and `-k` present.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFunction {
    dim: usize,
    modes: Vec<(Vec<i64>, Complex64)>,
}

impl TorusFunction {
    /// `mean + sum_j (a_j cos + b_j sin)(2 pi <k_j, y>)`.
    pub fn from_real_modes(dim: usize, mean: f64, terms: &[(Vec<i64>, f64, f64)]) -> Result<Self> {
        let mut f = Self {
            dim,
            modes: vec![(vec![0; dim], Complex64::new(mean, 0.0))],
        };
        for (k, a, b) in terms {
            if k.len() != dim || k.iter().all(|&x| x == 0) {
                return Err(Error::InvalidArgument(format!("bad wave vector {k:?}")));
            }
            let c = Complex64::new(0.5 * a, -0.5 * b);
            f.add(k.clone(), c);
            f.add(k.iter().map(|x| -x).collect(), c.conj());
        }
        Ok(f)
    }

    /// Coefficients given directly. Entries for `k` and `-k` must be
    /// conjugate so that the function is real.
    pub fn from_coefficients(dim: usize, modes: Vec<(Vec<i64>, Complex64)>) -> Result<Self> {
        let mut f = Self {
            dim,
            modes: Vec::new(),
        };
        for (k, c) in modes {
            if k.len() != dim {
                return Err(Error::InvalidArgument(format!("bad wave vector {k:?}")));
            }
            f.add(k, c);
        }
        for (k, c) in &f.modes {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            if (f.coefficient(&neg) - c.conj()).norm() > 1e-12 * (1.0 + c.norm()) {
                return Err(Error::InvalidArgument(format!(
                    "coefficients at {k:?} are not Hermitian"
                )));
            }
        }
        Ok(f)
    }

    fn add(&mut self, k: Vec<i64>, c: Complex64) {
        match self.modes.iter_mut().find(|(q, _)| *q == k) {
            Some(entry) => entry.1 += c,
            None => self.modes.push((k, c)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[(Vec<i64>, Complex64)] {
        &self.modes
    }

    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        self.modes
            .iter()
            .find(|(q, _)| q == k)
            .map(|m| m.1)
            .unwrap_or_default()
    }

    /// The torus mean.
    pub fn mean(&self) -> f64 {
        self.coefficient(&vec![0; self.dim]).re
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, 2.0 * PI * dot(k, y))).re)
            .sum()
    }
}

fn dot(k: &[i64], y: &[f64]) -> f64 {
    k.iter().zip(y).map(|(&a, &b)| a as f64 * b).sum()
}

/// `|k - <k,e> e|^2` for a unit vector `e`.
pub fn transverse_gap(k: &[i64], e: &[f64]) -> f64 {
    let p = dot(k, e);
    k.iter()
        .zip(e)
        .map(|(&a, &b)| (a as f64 - p * b).powi(2))
        .sum()
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time {t} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Convolution of `u` with the heat kernel of the hyperplane orthogonal to
/// `e` at time `t`, evaluated at `x`.
pub fn hyperplane_average(u: &TorusFunction, e: &[f64], x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(u.modes
        .iter()
        .map(|(k, c)| {
            let damp = (-4.0 * PI * PI * transverse_gap(k, e) * t).exp();
            damp * (c * Complex64::from_polar(1.0, 2.0 * PI * dot(k, x))).re
        })
        .sum())
}

/// `sum_{k != 0} |u_k| exp(-4 pi^2 gap(k) t)`, an upper bound for
/// `sup_x |average - mean|` that is attained for a single real mode.
pub fn averaging_modulus(u: &TorusFunction, e: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(u.modes
        .iter()
        .filter(|(k, _)| k.iter().any(|&x| x != 0))
        .map(|(k, c)| c.norm() * (-4.0 * PI * PI * transverse_gap(k, e) * t).exp())
        .sum())
}

/// Orthonormal basis of the complement of the unit vector `e` (d = 2 or 3).
fn transverse_basis(e: &[f64]) -> Result<Vec<Vec<f64>>> {
    match e.len() {
        2 => Ok(vec![vec![-e[1], e[0]]]),
        3 => {
            // cross with the axis least aligned with e
            let i = (0..3)
                .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
                .unwrap();
            let mut a = [0.0; 3];
            a[i] = 1.0;
            let cross = |u: &[f64], v: &[f64]| {
                vec![
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ]
            };
            let mut b1 = cross(e, &a);
            let n = b1.iter().map(|x| x * x).sum::<f64>().sqrt();
            b1.iter_mut().for_each(|x| *x /= n);
            let b2 = cross(e, &b1);
            Ok(vec![b1, b2])
        }
        d => Err(Error::InvalidArgument(format!(
            "direct convolution supports d = 2, 3, got {d}"
        ))),
    }
}

/// Hyperplane average evaluated in physical space by tensor Gauss-Hermite
/// quadrature against the Gaussian kernel `(4 pi t)^{-(d-1)/2} exp(-|y|^2/4t)`.
///
/// The rule integrates `exp(i w xi - xi^2)` accurately once the node count
/// exceeds roughly `w^2 / 2`, with `w = 4 pi sqrt(t) |<k, b>|` for the
/// transverse basis vectors `b`.
pub fn direct_average(
    u: &TorusFunction,
    e: &[f64],
    x: &[f64],
    t: f64,
    nodes: usize,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "direct average needs t > 0, got {t}"
        )));
    }
    let basis = transverse_basis(e)?;
    let rule = GaussRule::hermite(nodes);
    let scale = 2.0 * t.sqrt();
    let norm = PI.powf(-0.5 * basis.len() as f64);
    let mut total = 0.0;
    let mut point = x.to_vec();
    match basis.len() {
        1 => {
            for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
                for (p, (x0, b)) in point.iter_mut().zip(x.iter().zip(&basis[0])) {
                    *p = x0 + scale * xi * b;
                }
                total += w * u.eval(&point);
            }
        }
        _ => {
            for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
                for (eta, wj) in rule.nodes.iter().zip(&rule.weights) {
                    for (c, p) in point.iter_mut().enumerate() {
                        *p = x[c] + scale * (xi * basis[0][c] + eta * basis[1][c]);
                    }
                    total += wi * wj * u.eval(&point);
                }
            }
        }
    }
    Ok(norm * total)
}

/// `|direct - Fourier|` for the hyperplane average at `x`.
pub fn direct_convolution_check(
    u: &TorusFunction,
    e: &[f64],
    x: &[f64],
    t: f64,
    nodes: usize,
) -> Result<f64> {
    Ok((direct_average(u, e, x, t, nodes)? - hyperplane_average(u, e, x, t)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn irrational() -> Vec<f64> {
        vec![1.0 / 3f64.sqrt(), 2f64.sqrt() / 3f64.sqrt()]
    }

    fn random_u(rng: &mut StdRng, d: usize, count: usize) -> TorusFunction {
        let terms: Vec<(Vec<i64>, f64, f64)> = (0..count)
            .map(|_| {
                let mut k: Vec<i64> = (0..d).map(|_| rng.gen_range(-2..=2)).collect();
                if k.iter().all(|&x| x == 0) {
                    k[0] = 1;
                }
                (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        TorusFunction::from_real_modes(d, rng.gen_range(-1.0..1.0), &terms).unwrap()
    }

    #[test]
    fn gaps() {
        assert!(transverse_gap(&[2, 4], &[1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()]) < 1e-14);
        assert!((transverse_gap(&[1, 0], &irrational()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(transverse_gap(&[0, 1], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn single_mode_examples() {
        let c1 = TorusFunction::from_real_modes(2, 0.0, &[(vec![1, 0], 1.0, 0.0)]).unwrap();
        let c2 = TorusFunction::from_real_modes(2, 0.0, &[(vec![0, 1], 1.0, 0.0)]).unwrap();
        let x = [0.13, 0.71];
        assert!(
            (hyperplane_average(&c1, &[1.0, 0.0], &x, 5.0).unwrap() - (2.0 * PI * x[0]).cos())
                .abs()
                < 1e-15
        );
        let expect = (-4.0 * PI * PI).exp() * (2.0 * PI * x[1]).cos();
        assert!((hyperplane_average(&c2, &[1.0, 0.0], &x, 1.0).unwrap() - expect).abs() < 1e-30);
        assert!(((-4.0 * PI * PI).exp() - 7.16e-18).abs() < 1e-20);
        assert!(averaging_modulus(&c1, &[1.0, 0.0], 10.0).unwrap() >= 0.99);
        assert!(averaging_modulus(&c1, &irrational(), 10.0).unwrap() <= 1e-6);
        assert_eq!(
            hyperplane_average(&c2, &irrational(), &x, 0.0).unwrap(),
            c2.eval(&x)
        );
    }

    #[test]
    fn resonant_limit() {
        let u = TorusFunction::from_real_modes(
            2,
            1.0,
            &[
                (vec![1, 1], 0.6, 0.8),
                (vec![2, 2], 0.0, 0.5),
                (vec![1, 0], 1.0, 0.0),
            ],
        )
        .unwrap();
        let e = [0.5f64.sqrt(), 0.5f64.sqrt()];
        // |u_k| = |a - ib|/2 on both k and -k
        let expect = 1.0 + 0.5;
        assert!((averaging_modulus(&u, &e, 50.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn direct_quadrature_agrees() {
        let c2 = TorusFunction::from_real_modes(2, 0.0, &[(vec![0, 1], 1.0, 0.0)]).unwrap();
        assert!(
            direct_convolution_check(&c2, &[1.0, 0.0], &[0.2, 0.3], 0.25, 120).unwrap() <= 1e-10
        );
        let mut rng = StdRng::seed_from_u64(7);
        let u = random_u(&mut rng, 2, 5);
        for x in [[0.0, 0.0], [0.31, 0.77]] {
            assert!(direct_convolution_check(&u, &irrational(), &x, 1.0, 800).unwrap() <= 1e-8);
        }
        let e3 = [0.6, 0.0, 0.8];
        let u3 = random_u(&mut rng, 3, 4);
        assert!(direct_convolution_check(&u3, &e3, &[0.1, 0.2, 0.3], 0.05, 80).unwrap() <= 1e-8);
        let flat = TorusFunction::from_real_modes(2, 2.5, &[]).unwrap();
        assert!(
            direct_convolution_check(&flat, &irrational(), &[0.4, 0.4], 0.3, 20).unwrap() < 1e-14
        );
    }

    #[test]
    fn decay_rate_of_single_mode() {
        let u = TorusFunction::from_real_modes(2, 0.0, &[(vec![1, 0], 1.0, 0.0)]).unwrap();
        let ts: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| averaging_modulus(&u, &irrational(), t).unwrap().ln())
            .collect();
        let rate = -crate::numerics::fit_slope(&ts, &ys);
        assert!((rate / (4.0 * PI * PI * 2.0 / 3.0) - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn semigroup(seed in 0u64..1000, t1 in 0.0f64..0.2, t2 in 0.0f64..0.2, x0 in 0.0f64..1.0, x1 in 0.0f64..1.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let u = random_u(&mut rng, 2, 4);
            let e = irrational();
            // applying the average twice multiplies the damping factors
            let once: Vec<(Vec<i64>, Complex64)> = u
                .modes()
                .iter()
                .map(|(k, c)| (k.clone(), c * (-4.0 * PI * PI * transverse_gap(k, &e) * t1).exp()))
                .collect();
            let v = TorusFunction::from_coefficients(2, once).unwrap();
            let twice = hyperplane_average(&v, &e, &[x0, x1], t2).unwrap();
            let direct = hyperplane_average(&u, &e, &[x0, x1], t1 + t2).unwrap();
            prop_assert!((twice - direct).abs() <= 1e-12);
        }

        #[test]
        fn modulus_nonincreasing(seed in 0u64..1000, t in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let u = random_u(&mut rng, 2, 5);
            let a: f64 = rng.gen_range(0.0..PI);
            let e = [a.cos(), a.sin()];
            prop_assert!(averaging_modulus(&u, &e, t + dt).unwrap() <= averaging_modulus(&u, &e, t).unwrap() + 1e-15);
        }
    }
}
