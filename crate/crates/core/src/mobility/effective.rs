use super::{sub_torus_period, unimodular_completion, Direction, Mobility, MobilityTable};
use crate::{Error, Result, StandingWaveProfile};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Resolution of the `(s, y)` quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Target spacing in `s`; the profile grid is subsampled to the nearest
    /// stride. The integrands are analytic and decay exponentially, so the
    /// trapezoid rule converges geometrically.
    pub s_step: f64,
    /// Uniform nodes per torus axis.
    pub torus_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            s_step: 1.0 / 16.0,
            torus_nodes: 64,
        }
    }
}

/// Uniform torus grid of dimension `d`, flattened.
fn torus_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let c = idx % n;
                    idx /= n;
                    c as f64 / n as f64
                })
                .collect()
        })
        .collect()
}

/// Subsampled profile nodes `(qdot, weight)` where `qdot^2` is not negligible.
fn s_nodes(profile: &StandingWaveProfile, quad: &Quadrature) -> Vec<f64> {
    let stride = ((quad.s_step / profile.step()).round() as usize).max(1);
    let peak = profile.qdot().iter().fold(0.0f64, |a, &b| a.max(b));
    profile
        .qdot()
        .iter()
        .step_by(stride)
        .copied()
        .filter(|v| v * v >= 1e-30 * peak * peak)
        .collect()
}

/// `qdot^2`-weighted mean over `s` of `avg(qdot)`.
fn weighted<F: Fn(f64) -> f64 + Sync>(qdots: &[f64], avg: F) -> f64 {
    // Summed in a fixed order so results do not depend on the thread count.
    let terms: Vec<(f64, f64)> = qdots.par_iter().map(|&v| (v * v * avg(v), v * v)).collect();
    let (num, den) = terms.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    num / den
}

fn check_dims(m: &Mobility, d: usize) -> Result<()> {
    if d < m.min_dim() {
        return Err(Error::InvalidArgument(format!(
            "mobility needs dimension {} but direction has {d}",
            m.min_dim()
        )));
    }
    Ok(())
}

/// Effective mobility: the `qdot^2`-weighted average of `m(y, qdot(s) e)`
/// over the torus and the line, normalized by `int qdot^2`.
pub fn effective_mobility(
    m: &Mobility,
    profile: &StandingWaveProfile,
    e: &Direction,
    quad: &Quadrature,
) -> Result<f64> {
    let d = e.dim();
    check_dims(m, d)?;
    let unit = e.unit();
    let grid = torus_grid(d, quad.torus_nodes);
    let (sa, sb) = grid.iter().fold((0.0, 0.0), |acc, y| {
        let (a, b) = m.torus_parts(y);
        (acc.0 + a, acc.1 + b)
    });
    let (mean_a, mean_b) = (sa / grid.len() as f64, sb / grid.len() as f64);
    let torus_mean = |v: f64| {
        let vel: Vec<f64> = unit.iter().map(|x| x * v).collect();
        mean_a + mean_b * m.gradient_factor(&vel)
    };
    let value = if m.is_v_independent() {
        torus_mean(0.0)
    } else {
        weighted(&s_nodes(profile, quad), torus_mean)
    };
    let (lo, hi) = m.bounds();
    let slack = 1e-12 * hi;
    if !(value >= lo - slack && value <= hi + slack) {
        return Err(Error::InconsistentMobility(format!(
            "effective mobility {value} outside [{lo}, {hi}]"
        )));
    }
    Ok(value)
}

/// Average over the sub-torus `{<y, e> = zeta}` and the profile weight, for
/// a lattice normal `k`.
pub fn layer_average(
    m: &Mobility,
    profile: &StandingWaveProfile,
    k: &[i64],
    zeta: f64,
    quad: &Quadrature,
) -> Result<f64> {
    let period = sub_torus_period(k)?;
    if !(0.0..period).contains(&zeta) {
        return Err(Error::Domain {
            what: "layer height",
            value: zeta,
            lo: 0.0,
            hi: period,
        });
    }
    let d = k.len();
    check_dims(m, d)?;
    let v = unimodular_completion(k)?;
    let unit = Direction::Lattice(k.to_vec()).unit();
    let first = zeta / period;
    let layer: Vec<Vec<f64>> = torus_grid(d - 1, quad.torus_nodes)
        .into_iter()
        .map(|rest| {
            let z: Vec<f64> = std::iter::once(first).chain(rest).collect();
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| v[i][j] as f64 * z[j])
                        .sum::<f64>()
                        .rem_euclid(1.0)
                })
                .collect()
        })
        .collect();
    let mean = |s: f64| {
        let vel: Vec<f64> = unit.iter().map(|x| x * s).collect();
        layer.iter().map(|y| m.eval(y, &vel)).sum::<f64>() / layer.len() as f64
    };
    Ok(if m.is_v_independent() {
        mean(0.0)
    } else {
        weighted(&s_nodes(profile, quad), mean)
    })
}

/// Layer averages on `n_zeta` uniform heights of one period.
pub fn layer_profile(
    m: &Mobility,
    profile: &StandingWaveProfile,
    k: &[i64],
    n_zeta: usize,
    quad: &Quadrature,
) -> Result<Vec<(f64, f64)>> {
    let period = sub_torus_period(k)?;
    (0..n_zeta)
        .map(|j| {
            let zeta = period * j as f64 / n_zeta as f64;
            layer_average(m, profile, k, zeta, quad).map(|a| (zeta, a))
        })
        .collect()
}

/// `max - min` of the layer averages over `n_zeta >= 16` heights.
pub fn layer_oscillation(
    m: &Mobility,
    profile: &StandingWaveProfile,
    k: &[i64],
    n_zeta: usize,
    quad: &Quadrature,
) -> Result<f64> {
    if n_zeta < 16 {
        return Err(Error::InvalidArgument(format!(
            "need at least 16 layer heights, got {n_zeta}"
        )));
    }
    let values = layer_profile(m, profile, k, n_zeta, quad)?;
    let max = values.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Radial spacing of the gradient samples; fixed so that the sample sets are
/// nested and the modulus is nondecreasing in the radius.
const MODULUS_RADIAL_STEP: f64 = 1.0 / 1024.0;
const MODULUS_ANGLES: usize = 64;

/// Sampled modulus of continuity in the gradient variable at `e` (planar):
/// the sup over `|v - e| <= chi` and `y` of `|m(y,v) - m(y,e)|` plus
/// `|mbar(v/|v|) - mbar(e)|`.
pub fn mobility_modulus(
    m: &Mobility,
    mbar: &MobilityTable,
    e: &Direction,
    chi: f64,
    torus_nodes: usize,
) -> Result<f64> {
    if e.dim() != 2 {
        return Err(Error::InvalidArgument("mobility modulus is planar".into()));
    }
    if !(chi >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {chi} must be nonnegative"
        )));
    }
    let unit = e.unit();
    let grid = torus_grid(2, torus_nodes);
    let base_angle = unit[1].atan2(unit[0]);
    let at_e: Vec<f64> = grid.iter().map(|y| m.eval(y, &unit)).collect();
    let mbar_e = mbar.eval(base_angle);
    let rings = (chi / MODULUS_RADIAL_STEP).floor() as usize;
    let worst = (1..=rings)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 * MODULUS_RADIAL_STEP;
            let mut worst: f64 = 0.0;
            for a in 0..MODULUS_ANGLES {
                let phi = 2.0 * PI * a as f64 / MODULUS_ANGLES as f64;
                let v = [unit[0] + r * phi.cos(), unit[1] + r * phi.sin()];
                let local = if m.is_v_independent() {
                    0.0
                } else {
                    grid.iter()
                        .zip(&at_e)
                        .map(|(y, me)| (m.eval(y, &v) - me).abs())
                        .fold(0.0, f64::max)
                };
                let norm = v[0].hypot(v[1]);
                let far = if norm > 0.0 {
                    (mbar.eval(v[1].atan2(v[0])) - mbar_e).abs()
                } else {
                    0.0
                };
                worst = worst.max(local + far);
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Effective mobility on `n_angles` uniform planar directions.
pub fn tabulate_effective_mobility(
    m: &Mobility,
    profile: &StandingWaveProfile,
    n_angles: usize,
    quad: &Quadrature,
) -> Result<MobilityTable> {
    let values = (0..n_angles)
        .map(|j| {
            let e = Direction::from_angle(2.0 * PI * j as f64 / n_angles as f64);
            effective_mobility(m, profile, &e, quad)
        })
        .collect::<Result<Vec<_>>>()?;
    MobilityTable::new(values, m.bounds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::FourierMode;
    use crate::PotentialW;
    use std::sync::OnceLock;

    fn profile() -> &'static StandingWaveProfile {
        static P: OnceLock<StandingWaveProfile> = OnceLock::new();
        P.get_or_init(|| StandingWaveProfile::solve(&PotentialW::quartic(), 20.0, 4096).unwrap())
    }

    fn quad() -> Quadrature {
        Quadrature {
            s_step: 1.0 / 16.0,
            torus_nodes: 32,
        }
    }

    #[test]
    fn constant_and_torus_mean() {
        let c = Mobility::constant(1.7).unwrap();
        let m = Mobility::cosine_y1(2.0, 1.0).unwrap();
        for e in [
            Direction::from_angle(0.3),
            Direction::lattice(vec![2, 1]).unwrap(),
        ] {
            assert!((effective_mobility(&c, profile(), &e, &quad()).unwrap() - 1.7).abs() < 1e-12);
            assert!((effective_mobility(&m, profile(), &e, &quad()).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_v_matches_line_oracle() {
        // 1 + c_W^{-1} int exp(-qdot^2) qdot^2 ds for qdot = sech^2(s/sqrt 2)/sqrt 2,
        // adaptive Gauss-Kronrod (scipy.integrate.quad, epsabs 1e-14) on [-40, 40].
        let oracle = 1.0 + 0.67644296758216 / 0.942809041582063;
        let m = Mobility::gaussian_v(1.0, 1.0).unwrap();
        let got = effective_mobility(&m, profile(), &Direction::from_angle(1.1), &quad()).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn layer_examples() {
        let m = Mobility::cosine_y1(2.0, 1.0).unwrap();
        for zeta in [0.0, 0.1, 0.37, 0.9] {
            let a = layer_average(&m, profile(), &[1, 0], zeta, &quad()).unwrap();
            assert!((a - 2.0 - (2.0 * PI * zeta).cos()).abs() < 1e-12);
            let b = layer_average(&m, profile(), &[0, 1], zeta, &quad()).unwrap();
            assert!((b - 2.0).abs() < 1e-12);
        }
        assert!(
            (layer_oscillation(&m, profile(), &[1, 0], 16, &quad()).unwrap() - 2.0).abs() < 1e-12
        );
        assert!(layer_oscillation(&m, profile(), &[0, 1], 16, &quad()).unwrap() < 1e-12);
        assert!(matches!(
            layer_average(&m, profile(), &[1, 1], 0.8, &quad()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn layer_mean_recovers_full_average() {
        let m = Mobility::Fourier {
            mean: 3.0,
            modes: vec![
                FourierMode {
                    k: vec![2, 1],
                    cos: 0.7,
                    sin: 0.1,
                },
                FourierMode {
                    k: vec![1, -1],
                    cos: 0.2,
                    sin: -0.4,
                },
            ],
            radial_rate: 1.5,
        }
        .validated()
        .unwrap();
        for k in [vec![2i64, 1], vec![1, 1], vec![1, 0]] {
            let e = Direction::lattice(k.clone()).unwrap();
            let full = effective_mobility(&m, profile(), &e, &quad()).unwrap();
            let layers = layer_profile(&m, profile(), &k, 24, &quad()).unwrap();
            let mean = layers.iter().map(|p| p.1).sum::<f64>() / layers.len() as f64;
            assert!((mean - full).abs() < 1e-10, "k = {k:?}");
        }
    }

    #[test]
    fn resonant_layer_amplitude() {
        // a mode parallel to k survives on the layers, others average out
        let m = Mobility::Fourier {
            mean: 2.0,
            modes: vec![
                FourierMode {
                    k: vec![2, 1],
                    cos: 0.5,
                    sin: 0.0,
                },
                FourierMode {
                    k: vec![1, 1],
                    cos: 0.3,
                    sin: 0.0,
                },
            ],
            radial_rate: 0.0,
        }
        .validated()
        .unwrap();
        let osc = layer_oscillation(&m, profile(), &[2, 1], 64, &quad()).unwrap();
        assert!((osc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillation_invariant_under_translation() {
        let shifted = |a: f64, b: f64| {
            Mobility::Fourier {
                mean: 2.0,
                modes: vec![FourierMode {
                    k: vec![1, 1],
                    cos: a,
                    sin: b,
                }],
                radial_rate: 0.5,
            }
            .validated()
            .unwrap()
        };
        // translating y by t rotates the phase of the (1,1) mode
        let t = 2.0 * PI * 0.3;
        let m0 = shifted(0.8, 0.0);
        let m1 = shifted(0.8 * t.cos(), 0.8 * t.sin());
        let a = layer_oscillation(&m0, profile(), &[1, 1], 64, &quad()).unwrap();
        let b = layer_oscillation(&m1, profile(), &[1, 1], 64, &quad()).unwrap();
        assert!((a - b).abs() < 1e-2 * a);
    }

    #[test]
    fn modulus_examples() {
        let m = Mobility::gaussian_v(1.0, 1.0).unwrap();
        let table = tabulate_effective_mobility(&m, profile(), 16, &quad()).unwrap();
        let e = Direction::lattice(vec![1, 0]).unwrap();
        assert_eq!(mobility_modulus(&m, &table, &e, 0.0, 8).unwrap(), 0.0);
        // brute-force oracle: 200 x 200 polar samples of the ball |v - e| <= 0.1
        let mut oracle: f64 = 0.0;
        for i in 0..=200 {
            for j in 0..200 {
                let r = 0.1 * i as f64 / 200.0;
                let a = 2.0 * PI * j as f64 / 200.0;
                let n2 = (1.0 + r * a.cos()).powi(2) + (r * a.sin()).powi(2);
                oracle = oracle.max(((-n2).exp() - (-1.0f64).exp()).abs());
            }
        }
        let got = mobility_modulus(&m, &table, &e, 0.1, 8).unwrap();
        assert!((got - oracle).abs() < 5e-4, "{got} vs {oracle}");
        let c = Mobility::cosine_y1(2.0, 1.0).unwrap();
        let flat = tabulate_effective_mobility(&c, profile(), 16, &quad()).unwrap();
        assert_eq!(mobility_modulus(&c, &flat, &e, 0.3, 8).unwrap(), 0.0);
        let mut last = 0.0;
        for chi in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let w = mobility_modulus(&m, &table, &e, chi, 8).unwrap();
            assert!(w >= last);
            last = w;
        }
    }

    #[test]
    fn table_within_bounds() {
        let m = Mobility::product_sine(1.5, 0.5).unwrap();
        let t = tabulate_effective_mobility(&m, profile(), 32, &quad()).unwrap();
        assert!(t.values().iter().all(|&v| v >= 1.0 && v <= 2.0));
        let c =
            tabulate_effective_mobility(&Mobility::constant(0.8).unwrap(), profile(), 8, &quad())
                .unwrap();
        assert!(c.values().iter().all(|&v| (v - 0.8).abs() < 1e-13));
    }
}
