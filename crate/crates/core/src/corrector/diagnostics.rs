use super::{CorrectorField, OneDCorrector, SmoothedMobility};
use crate::averaging::{averaging_modulus, TorusFunction};
use crate::numerics::{self, fft2::Fft2, quadrature::GaussRule};
use crate::{Error, Mobility, Result, StandingWaveProfile};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// `qdot`-renormalized quantities are only evaluated where
/// `qdot >= QDOT_GUARD * max qdot`.
pub const QDOT_GUARD: f64 = 1e-10;

fn guarded_nodes(profile: &StandingWaveProfile) -> Vec<usize> {
    let peak = profile.qdot().iter().fold(0.0f64, |a, &b| a.max(b));
    (0..profile.len())
        .filter(|&i| profile.qdot()[i] >= QDOT_GUARD * peak)
        .collect()
}

/// Torus grid size for synthesizing fields with the given modes.
pub fn synthesis_size(modes: &[[i64; 2]]) -> usize {
    let kmax = modes
        .iter()
        .map(|k| k[0].unsigned_abs().max(k[1].unsigned_abs()))
        .max()
        .unwrap_or(1) as usize;
    (4 * kmax).next_power_of_two().max(32)
}

/// Values on the `n x n` torus grid of the trigonometric polynomial with the
/// given mode coefficients.
fn synthesize<F: Fn(usize) -> Complex64>(
    fft: &Fft2,
    modes: &[[i64; 2]],
    coeff: F,
) -> Vec<Complex64> {
    let n = fft.size();
    let mut data = vec![Complex64::default(); n * n];
    for (j, k) in modes.iter().enumerate() {
        data[fft.index(k[0], k[1])] += coeff(j);
    }
    fft.inverse(&mut data);
    data
}

fn unit2(sm_dir: &crate::Direction) -> [f64; 2] {
    let u = sm_dir.unit();
    [u[0], u[1]]
}

impl CorrectorField {
    /// `sup |delta P / qdot|` over guarded profile nodes and a torus grid.
    pub fn renormalized_sup(&self, profile: &StandingWaveProfile) -> f64 {
        if self.modes().is_empty() {
            return 0.0;
        }
        let fft = Fft2::new(synthesis_size(self.modes()));
        guarded_nodes(profile)
            .par_iter()
            .map(|&i| {
                let field = synthesize(&fft, self.modes(), |j| self.coeffs(j)[i]);
                let sup = field.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
                self.delta() * sup / profile.qdot()[i]
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Largest imaginary part of the synthesized field over all nodes.
    pub fn max_imaginary(&self, profile: &StandingWaveProfile) -> f64 {
        if self.modes().is_empty() {
            return 0.0;
        }
        let fft = Fft2::new(synthesis_size(self.modes()));
        (0..profile.len())
            .into_par_iter()
            .map(|i| {
                synthesize(&fft, self.modes(), |j| self.coeffs(j)[i])
                    .iter()
                    .map(|z| z.im.abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Real field `P(s_i, y)` on the `n x n` torus grid (row-major in `y_1`).
    pub fn field_at(&self, i: usize, n: usize) -> Vec<f64> {
        let fft = Fft2::new(n);
        synthesize(&fft, self.modes(), |j| self.coeffs(j)[i])
            .iter()
            .map(|z| z.re)
            .collect()
    }
}

/// `sup |[m(y, qdot e) - mbar] qdot + D*D P + W''(q) P| / qdot` for
/// `P = Pbar + P2`, with `s`-derivatives by fourth-order differences and
/// `y`-derivatives exact in Fourier space.
pub fn approximate_corrector_residual(
    m: &Mobility,
    pbar: &OneDCorrector,
    p2: &CorrectorField,
    profile: &StandingWaveProfile,
    mbar: f64,
) -> Result<f64> {
    let n = profile.len();
    if pbar.values().len() != n
        || p2
            .modes()
            .iter()
            .enumerate()
            .any(|(j, _)| p2.coeffs(j).len() != n)
    {
        return Err(Error::InvalidArgument(
            "corrector grids differ from the profile grid".into(),
        ));
    }
    let h = profile.step();
    let e = unit2(p2.direction());
    let qdot = profile.qdot();
    let wpp = profile.wpp();
    let (_, bar2) = numerics::derivatives4(pbar.values(), h);
    let derivs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..p2.modes().len())
        .map(|j| numerics::derivatives4(p2.coeffs(j), h))
        .collect();
    let mut modes = p2.modes().to_vec();
    modes.push([0, 0]);
    let fft = Fft2::new(synthesis_size(&modes));
    let ny = fft.size();
    let ys: Vec<[f64; 2]> = (0..ny * ny)
        .map(|idx| [(idx / ny) as f64 / ny as f64, (idx % ny) as f64 / ny as f64])
        .collect();
    let nodes: Vec<usize> = guarded_nodes(profile)
        .into_iter()
        .filter(|&i| i >= 2 && i + 2 < n)
        .collect();
    let worst = nodes
        .par_iter()
        .map(|&i| {
            let zero = -bar2[i] + wpp[i] * pbar.values()[i];
            let field = synthesize(&fft, &modes, |j| {
                if j == modes.len() - 1 {
                    return Complex64::new(zero, 0.0);
                }
                let k = modes[j];
                let a = k[0] as f64 * e[0] + k[1] as f64 * e[1];
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                let p = p2.coeffs(j)[i];
                let (d1, d2) = (derivs[j].0[i], derivs[j].1[i]);
                -d2 - Complex64::new(0.0, 4.0 * PI * a) * d1 + p * (4.0 * PI * PI * k2 + wpp[i])
            });
            let v = [qdot[i] * e[0], qdot[i] * e[1]];
            field
                .iter()
                .zip(&ys)
                .map(|(z, y)| ((m.eval(y, &v) - mbar) * qdot[i] + z.re).abs() / qdot[i])
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// One row of a penalization sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    /// `sup |delta P2 / qdot|`
    pub renormalized: f64,
}

/// Renormalized size of `delta P2` for a decreasing list of penalizations.
pub fn delta_sweep(
    sm: &SmoothedMobility,
    profile: &StandingWaveProfile,
    deltas: &[f64],
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty()
        || deltas.iter().any(|d| !(*d > 0.0))
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidArgument(
            "deltas must be positive and strictly decreasing".into(),
        ));
    }
    deltas
        .iter()
        .map(|&delta| {
            let field = super::solve_penalized(sm, profile, delta)?;
            Ok(SweepRow {
                delta,
                renormalized: field.renormalized_sup(profile),
            })
        })
        .collect()
}

/// Comparison of `delta P / qdot` in a lattice direction with candidate
/// limit profiles of the phase `<y, e> - s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalLimit {
    pub delta: f64,
    /// `sup |delta P / qdot|` on the sampled nodes.
    pub limit_sup: f64,
    /// Sign in front of the layer profile that fits best.
    pub layer_sign: f64,
    /// `sup |delta P / qdot - sign * layer(<y,e> - s)|`.
    pub layer_mismatch: f64,
    /// `sup |layer|`, the layer profile of the fluctuation.
    pub layer_amplitude: f64,
    pub transported_sign: f64,
    /// `sup |delta P / qdot - sign * transported(<y,e> - s)|`.
    pub transported_mismatch: f64,
    pub transported_amplitude: f64,
}

/// Limit profiles of a lattice direction, as mode lists `(a, coefficient)`
/// with `a = <k, e>`: the layer average of the fluctuation and its version
/// transported along the wave, where each resonant mode picks up the phase
/// `exp(2 pi i a s)` inside the `qdot^2` average.
pub fn rational_limit_modes(
    sm: &SmoothedMobility,
    profile: &StandingWaveProfile,
) -> Result<(Vec<(f64, Complex64)>, Vec<(f64, Complex64)>)> {
    let k0 = sm
        .direction()
        .lattice_vector()
        .ok_or_else(|| Error::InvalidArgument("limit profiles need a lattice direction".into()))?
        .to_vec();
    let e = unit2(sm.direction());
    let h = profile.step();
    let qdot = profile.qdot();
    let s = profile.s_grid();
    let sq: Vec<f64> = qdot.iter().map(|v| v * v).collect();
    let cw = numerics::trapezoid(&sq, h);
    let mut layer = Vec::new();
    let mut transported = Vec::new();
    for (j, k) in sm.modes().iter().enumerate() {
        if k[0] * k0[1] - k[1] * k0[0] != 0 {
            continue;
        }
        let a = k[0] as f64 * e[0] + k[1] as f64 * e[1];
        let c = sm.coeffs(j);
        let avg = |phase: bool| {
            let re: Vec<f64> = (0..c.len())
                .map(|i| {
                    (c[i]
                        * if phase {
                            Complex64::from_polar(1.0, 2.0 * PI * a * s[i])
                        } else {
                            1.0.into()
                        })
                    .re * sq[i]
                })
                .collect();
            let im: Vec<f64> = (0..c.len())
                .map(|i| {
                    (c[i]
                        * if phase {
                            Complex64::from_polar(1.0, 2.0 * PI * a * s[i])
                        } else {
                            1.0.into()
                        })
                    .im * sq[i]
                })
                .collect();
            Complex64::new(numerics::trapezoid(&re, h), numerics::trapezoid(&im, h)) / cw
        };
        layer.push((a, avg(false)));
        transported.push((a, avg(true)));
    }
    Ok((layer, transported))
}

fn eval_profile(modes: &[(f64, Complex64)], c: f64) -> f64 {
    modes
        .iter()
        .map(|(a, z)| (z * Complex64::from_polar(1.0, 2.0 * PI * a * c)).re)
        .sum()
}

/// Solve at `delta` in a lattice direction and compare `delta P / qdot` with
/// the layer profile and the transported profile, each up to a global sign.
pub fn rational_limit_profile(
    sm: &SmoothedMobility,
    profile: &StandingWaveProfile,
    delta: f64,
) -> Result<RationalLimit> {
    let (layer, transported) = rational_limit_modes(sm, profile)?;
    let field = super::solve_penalized(sm, profile, delta)?;
    let e = unit2(sm.direction());
    let s = profile.s_grid();
    let qdot = profile.qdot();
    let nodes = guarded_nodes(profile);
    let stride = (nodes.len() / 400).max(1);
    let sampled: Vec<usize> = nodes.iter().copied().step_by(stride).collect();
    let ny = synthesis_size(field.modes());
    let fft = Fft2::new(ny);
    // per node: (sup g, layer mismatch +, layer mismatch -, transported +, transported -)
    let stats = sampled
        .par_iter()
        .map(|&i| {
            let g: Vec<f64> = if field.modes().is_empty() {
                vec![0.0; ny * ny]
            } else {
                synthesize(&fft, field.modes(), |j| field.coeffs(j)[i])
                    .iter()
                    .map(|z| delta * z.re / qdot[i])
                    .collect()
            };
            let mut out = [0.0f64; 5];
            for (idx, gv) in g.iter().enumerate() {
                let y = [(idx / ny) as f64 / ny as f64, (idx % ny) as f64 / ny as f64];
                let c = y[0] * e[0] + y[1] * e[1] - s[i];
                let l = eval_profile(&layer, c);
                let t = eval_profile(&transported, c);
                out[0] = out[0].max(gv.abs());
                out[1] = out[1].max((gv - l).abs());
                out[2] = out[2].max((gv + l).abs());
                out[3] = out[3].max((gv - t).abs());
                out[4] = out[4].max((gv + t).abs());
            }
            out
        })
        .reduce(|| [0.0; 5], |a, b| std::array::from_fn(|j| a[j].max(b[j])));
    let period =
        crate::mobility::sub_torus_period(sm.direction().lattice_vector().unwrap_or(&[1, 0]))?;
    let amplitude = |modes: &[(f64, Complex64)]| {
        (0..512)
            .map(|j| eval_profile(modes, period * j as f64 / 512.0).abs())
            .fold(0.0, f64::max)
    };
    let pick = |plus: f64, minus: f64| {
        if plus <= minus {
            (1.0, plus)
        } else {
            (-1.0, minus)
        }
    };
    let (layer_sign, layer_mismatch) = pick(stats[1], stats[2]);
    let (transported_sign, transported_mismatch) = pick(stats[3], stats[4]);
    Ok(RationalLimit {
        delta,
        limit_sup: stats[0],
        layer_sign,
        layer_mismatch,
        layer_amplitude: amplitude(&layer),
        transported_sign,
        transported_mismatch,
        transported_amplitude: amplitude(&transported),
    })
}

/// Outcome of the integrability diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrability {
    /// `int_0^T sum_k sup_s |m2(s,k)| exp(-4 pi^2 gap(k) t) dt`
    pub integral: f64,
    /// The same integral up to `T / 2`.
    pub half_integral: f64,
    /// Whether the second half contributes less than one percent.
    pub saturated: bool,
}

fn modulus_integral(u: &TorusFunction, e: &[f64], t_max: f64) -> Result<f64> {
    // Geometric panels resolve the fast-decaying modes near t = 0.
    let rule = GaussRule::legendre(16);
    let mut total = 0.0;
    let mut hi = t_max;
    for _ in 0..48 {
        let lo = 0.5 * hi;
        total += rule.integrate(lo, hi, |t| averaging_modulus(u, e, t).unwrap_or(0.0));
        hi = lo;
    }
    total += rule.integrate(0.0, hi, |t| averaging_modulus(u, e, t).unwrap_or(0.0));
    Ok(total)
}

/// Integrate the hyperplane-averaging modulus of the fluctuation forcing up
/// to `t_max`. A bounded integral indicates that the penalized correctors
/// stay bounded as the penalization vanishes.
pub fn diophantine_integrability_diagnostic(
    sm: &SmoothedMobility,
    t_max: f64,
) -> Result<Integrability> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {t_max} must be positive"
        )));
    }
    let e = sm.direction().unit();
    let amplitudes: Vec<(Vec<i64>, Complex64)> = sm
        .modes()
        .iter()
        .enumerate()
        .map(|(j, k)| {
            let a = sm.coeffs(j).iter().map(|z| z.norm()).fold(0.0, f64::max);
            (k.to_vec(), Complex64::new(a, 0.0))
        })
        .collect();
    let u = TorusFunction::from_coefficients(2, amplitudes)?;
    let integral = modulus_integral(&u, &e, t_max)?;
    let half_integral = modulus_integral(&u, &e, 0.5 * t_max)?;
    Ok(Integrability {
        integral,
        half_integral,
        saturated: integral - half_integral <= 1e-2 * integral.max(1e-300),
    })
}
