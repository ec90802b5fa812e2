use super::*;
use crate::mobility::FourierMode;
use crate::{numerics, Direction, Mobility, PotentialW, StandingWaveProfile};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn profile() -> &'static StandingWaveProfile {
    static P: OnceLock<StandingWaveProfile> = OnceLock::new();
    P.get_or_init(|| StandingWaveProfile::solve(&PotentialW::quartic(), 20.0, 4001).unwrap())
}

fn irrational() -> Direction {
    Direction::irrational(vec![1.0, 2f64.sqrt()]).unwrap()
}

fn cosine() -> Mobility {
    Mobility::cosine_y1(2.0, 1.0).unwrap()
}

#[test]
fn smoothing_of_cosine_is_exact() {
    let sm = smooth_mobility(&cosine(), profile(), &irrational(), 1, 0.1).unwrap();
    assert_eq!(sm.cutoff(), 1);
    assert!(sm.sup_error() < 1e-14);
    assert!(sm.m1().iter().all(|&m| (m - 2.0).abs() < 1e-14));
    assert_eq!(sm.modes(), &[[-1, 0], [1, 0]]);
    for j in 0..2 {
        assert!(sm
            .coeffs(j)
            .iter()
            .all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-14));
    }
    let flat = smooth_mobility(
        &Mobility::constant(1.3).unwrap(),
        profile(),
        &irrational(),
        4,
        0.1,
    )
    .unwrap();
    assert!(flat.is_fluctuation_free());
}

#[test]
fn smoothing_raises_cutoff_or_fails() {
    // a sharp Fourier tail needs more than the initial cutoff
    let modes = (1..=12)
        .map(|j| FourierMode {
            k: vec![j, 0],
            cos: 0.5f64.powi(j as i32),
            sin: 0.0,
        })
        .collect();
    let m = Mobility::Fourier {
        mean: 3.0,
        modes,
        radial_rate: 0.0,
    }
    .validated()
    .unwrap();
    let sm = smooth_mobility(&m, profile(), &irrational(), 2, 0.01).unwrap();
    assert!(sm.cutoff() > 2 && sm.sup_error() <= 0.01 / 3.0);
    let err = smooth_mobility(&m, profile(), &irrational(), 2, 1e-30).unwrap_err();
    assert!(matches!(
        err,
        crate::Error::InsufficientSmoothness { k: CUTOFF_CAP, .. }
    ));
}

#[test]
fn smoothing_of_gradient_dependent_mobility() {
    let m = Mobility::product_sine(2.0, 0.5).unwrap();
    let e = irrational();
    let sm = smooth_mobility(&m, profile(), &e, 2, 0.1).unwrap();
    assert!(sm.sup_error() < 1e-13);
    let i = 2000;
    let v2 = profile().qdot()[i].powi(2);
    // sin(2 pi y1) sin(2 pi y2) = -(1/4) sum of exp(2 pi i (+-y1 +- y2)) with signs
    let c = sm.mode([1, 1]).unwrap()[i];
    assert!((c.re + 0.125 * (-v2).exp()).abs() < 1e-14);
}

/// Five-point residual of `-P'' + W''(q) P - f`.
fn one_d_residual(p: &[f64], f: &[f64]) -> f64 {
    let prof = profile();
    let (_, d2) = numerics::derivatives4(p, prof.step());
    (2..p.len() - 2)
        .map(|i| (-d2[i] + prof.wpp()[i] * p[i] - f[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn one_d_trivial_and_odd() {
    let prof = profile();
    let n = prof.len();
    let dir = irrational();
    let constant = SmoothedMobility::from_parts(dir.clone(), vec![1.7; n], vec![], vec![]).unwrap();
    let c = solve_1d_corrector(&constant, prof).unwrap();
    assert!((c.mbar_tilde() - 1.7).abs() < 1e-14);
    assert!(c.values().iter().all(|p| p.abs() < 1e-14));

    let odd: Vec<f64> = prof.s_grid().iter().map(|s| s.tanh()).collect();
    let sm = SmoothedMobility::from_parts(dir, odd.clone(), vec![], vec![]).unwrap();
    let c = solve_1d_corrector(&sm, prof).unwrap();
    assert!(c.mbar_tilde().abs() < 1e-15);
    let f: Vec<f64> = odd
        .iter()
        .zip(prof.qdot())
        .map(|(m, v)| (c.mbar_tilde() - m) * v)
        .collect();
    assert!(one_d_residual(c.values(), &f) < 1e-6);
}

#[test]
fn one_d_matches_reduction_of_order_oracle() {
    // m1 = W''(q). Oracle: P = qdot v with v(s) = -int_0^s F / qdot^2 and
    // F(s) = int_{-inf}^s f qdot, evaluated by mpmath quadrature at 30 digits.
    let prof = profile();
    let m1 = prof.wpp().to_vec();
    let sm = SmoothedMobility::from_parts(irrational(), m1.clone(), vec![], vec![]).unwrap();
    let c = solve_1d_corrector(&sm, prof).unwrap();
    assert!((c.mbar_tilde() + 0.4).abs() < 1e-10);
    let oracle = [
        (-3.0, -0.068371681300115814),
        (-1.0, -0.12365759528709529),
        (0.5, -0.045973482441709378),
        (2.0, -0.13922943493607261),
        (4.0, -0.025183731507514752),
    ];
    for (s, expect) in oracle {
        let i = (s / prof.step() + 2000.0).round() as usize;
        assert!((prof.s_grid()[i] - s).abs() < 1e-12);
        assert!(
            (c.values()[i] - expect).abs() < 1e-7,
            "s = {s}: {} vs {expect}",
            c.values()[i]
        );
    }
    let f: Vec<f64> = m1
        .iter()
        .zip(prof.qdot())
        .map(|(m, v)| (c.mbar_tilde() - m) * v)
        .collect();
    assert!(one_d_residual(c.values(), &f) <= 1e-6);
}

fn single_mode(prof: &StandingWaveProfile, dir: Direction) -> SmoothedMobility {
    let g: Vec<Complex64> = prof
        .s_grid()
        .iter()
        .map(|s| Complex64::new(0.3, 0.4) * (-0.25 * s * s).exp())
        .collect();
    let conj = g.iter().map(|z| z.conj()).collect();
    SmoothedMobility::from_parts(
        dir,
        vec![2.0; prof.len()],
        vec![[1, 0], [-1, 0]],
        vec![g, conj],
    )
    .unwrap()
}

#[test]
fn penalized_single_mode_residual_on_doubled_grid() {
    let coarse = StandingWaveProfile::solve(&PotentialW::quartic(), 20.0, 2001).unwrap();
    let fine = profile();
    let dir = irrational();
    let e = dir.unit();
    let delta = 0.05;
    let a = coarse_solve(&coarse, dir.clone(), delta);
    let b = coarse_solve(fine, dir, delta);
    assert_eq!(b.modes(), &[[-1, 0], [1, 0]]);
    let pb = b.mode([1, 0]).unwrap();
    let pa = a.mode([1, 0]).unwrap();
    for i in 0..coarse.len() {
        assert!((pa[i] - pb[2 * i]).norm() < 1e-6);
    }
    let sm = single_mode(fine, irrational());
    let g = sm.mode([1, 0]).unwrap();
    let (d1, d2) = numerics::derivatives4(pb, fine.step());
    let av = e[0];
    let mut worst: f64 = 0.0;
    for i in 2..fine.len() - 2 {
        let r = g[i] * fine.qdot()[i] + pb[i] * (delta + 4.0 * PI * PI + fine.wpp()[i])
            - d2[i]
            - Complex64::new(0.0, 4.0 * PI * av) * d1[i];
        worst = worst.max(r.norm());
    }
    assert!(worst <= 1e-6, "residual {worst}");
}

fn coarse_solve(prof: &StandingWaveProfile, dir: Direction, delta: f64) -> CorrectorField {
    solve_penalized(&single_mode(prof, dir), prof, delta).unwrap()
}

#[test]
fn penalized_zero_forcing_and_bounds() {
    let prof = profile();
    let flat =
        SmoothedMobility::from_parts(irrational(), vec![1.0; prof.len()], vec![], vec![]).unwrap();
    let z = solve_penalized(&flat, prof, 0.1).unwrap();
    assert!(z.modes().is_empty());
    assert_eq!(z.renormalized_sup(prof), 0.0);

    for dir in [irrational(), Direction::lattice(vec![1, 0]).unwrap()] {
        let sm = smooth_mobility(
            &Mobility::product_sine(2.0, 0.8).unwrap(),
            prof,
            &dir,
            2,
            0.1,
        )
        .unwrap();
        for delta in [1.0, 0.1, 0.01] {
            let f = solve_penalized(&sm, prof, delta).unwrap();
            assert!(f.renormalized_sup(prof) <= sm.fluctuation_sup() * (1.0 + 1e-6));
            assert!(f.max_imaginary(prof) <= 1e-12);
            assert!(f.mode([0, 0]).is_none());
            // |<P, qdot>| <= sup|P/qdot| * c_W at every torus point
            let bound = f.renormalized_sup(prof) / delta * prof.cw();
            for i in [0usize, 5, 17] {
                let n = 8;
                let mut inner = vec![0.0; n * n];
                for (s_idx, v) in prof.qdot().iter().enumerate() {
                    let field = if s_idx % 50 == 0 {
                        Some(f.field_at(s_idx, n))
                    } else {
                        None
                    };
                    if let Some(field) = field {
                        for (acc, p) in inner.iter_mut().zip(field) {
                            *acc += p * v * prof.step() * 50.0;
                        }
                    }
                }
                assert!(inner[i % (n * n)].abs() <= 1.05 * bound);
            }
        }
    }
}

#[test]
fn approximate_residual_constant_mobility() {
    let prof = profile();
    let m = Mobility::constant(1.4).unwrap();
    let sm = smooth_mobility(&m, prof, &irrational(), 2, 0.1).unwrap();
    let pbar = solve_1d_corrector(&sm, prof).unwrap();
    let p2 = solve_penalized(&sm, prof, 0.1).unwrap();
    let r = approximate_corrector_residual(&m, &pbar, &p2, prof, 1.4).unwrap();
    assert!(r < 1e-10, "{r}");
}

#[test]
fn irrational_sweep_decreases_and_residual_improves() {
    let prof = profile();
    let m = cosine();
    let sm = smooth_mobility(&m, prof, &irrational(), 2, 0.1).unwrap();
    let rows = delta_sweep(&sm, prof, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].renormalized < w[0].renormalized, "{rows:?}");
    }
    let pbar = solve_1d_corrector(&sm, prof).unwrap();
    let residual = |delta| {
        let p2 = solve_penalized(&sm, prof, delta).unwrap();
        approximate_corrector_residual(&m, &pbar, &p2, prof, 2.0).unwrap()
    };
    let r2 = residual(1e-2);
    let r3 = residual(1e-3);
    assert!(r3 < r2, "{r3} vs {r2}");
    // the residual is delta P2 / qdot up to discretization
    assert!((r3 - rows[2].renormalized).abs() < 1e-6);
    assert!(delta_sweep(&sm, prof, &[1e-2, 1e-1]).is_err());
}

#[test]
fn zero_fluctuation_sweep() {
    let prof = profile();
    let sm = smooth_mobility(
        &Mobility::gaussian_v(1.0, 0.5).unwrap(),
        prof,
        &irrational(),
        2,
        0.1,
    )
    .unwrap();
    for row in delta_sweep(&sm, prof, &[1e-1, 1e-2]).unwrap() {
        assert_eq!(row.renormalized, 0.0);
    }
}

#[test]
fn rational_limit_profiles() {
    let prof = profile();
    let m = cosine();
    let k10 = Direction::lattice(vec![1, 0]).unwrap();
    let sm = smooth_mobility(&m, prof, &k10, 2, 0.1).unwrap();
    let (layer, transported) = rational_limit_modes(&sm, prof).unwrap();
    // layer profile of the fluctuation is cos(2 pi zeta), matching the layer averages
    let q = crate::mobility::Quadrature {
        s_step: 1.0 / 16.0,
        torus_nodes: 16,
    };
    for zeta in [0.0, 0.2, 0.65] {
        let direct = crate::mobility::layer_average(&m, prof, &[1, 0], zeta, &q).unwrap() - 2.0;
        let from_modes: f64 = layer
            .iter()
            .map(|(a, z)| (z * Complex64::from_polar(1.0, 2.0 * PI * a * zeta)).re)
            .sum();
        assert!((direct - from_modes).abs() < 1e-12);
    }
    // transported amplitude: int sech^4(s/sqrt2) cos(2 pi s) / int sech^4, by scipy quad
    let amp: f64 = transported.iter().map(|(_, z)| z.norm()).sum();
    assert!((amp - 5.021951e-4).abs() < 1e-9, "{amp}");

    let a = rational_limit_profile(&sm, prof, 1e-2).unwrap();
    let b = rational_limit_profile(&sm, prof, 1e-3).unwrap();
    assert!(b.transported_mismatch < a.transported_mismatch);
    assert_eq!(b.transported_sign, -1.0);
    assert!(b.transported_mismatch < 0.2 * b.transported_amplitude);
    assert!((b.layer_amplitude - 1.0).abs() < 1e-9);

    let k01 = Direction::lattice(vec![0, 1]).unwrap();
    let sm01 = smooth_mobility(&m, prof, &k01, 2, 0.1).unwrap();
    let c = rational_limit_profile(&sm01, prof, 1e-3).unwrap();
    assert_eq!(c.layer_amplitude, 0.0);
    assert!(c.limit_sup < 1e-3 && c.layer_mismatch == c.limit_sup);
}

#[test]
fn integrability_diagnostic() {
    let prof = profile();
    let e = irrational();
    let flat =
        SmoothedMobility::from_parts(e.clone(), vec![1.0; prof.len()], vec![], vec![]).unwrap();
    assert_eq!(
        diophantine_integrability_diagnostic(&flat, 10.0)
            .unwrap()
            .integral,
        0.0
    );

    let sm = single_mode(prof, e);
    let amp = 0.5;
    let gap = 2.0 / 3.0;
    for t in [0.01, 0.1, 10.0] {
        let got = diophantine_integrability_diagnostic(&sm, t).unwrap();
        let expect = amp * 2.0 / (4.0 * PI * PI * gap) * (1.0 - (-4.0 * PI * PI * gap * t).exp());
        assert!(
            (got.integral - expect).abs() < 1e-12 * expect.max(1.0),
            "{t}: {} vs {expect}",
            got.integral
        );
    }
    assert!(
        diophantine_integrability_diagnostic(&sm, 10.0)
            .unwrap()
            .saturated
    );

    let resonant = single_mode(prof, Direction::lattice(vec![1, 0]).unwrap());
    let a = diophantine_integrability_diagnostic(&resonant, 10.0).unwrap();
    let b = diophantine_integrability_diagnostic(&resonant, 20.0).unwrap();
    assert!(!a.saturated);
    assert!((b.integral / a.integral - 2.0).abs() < 1e-10);
}
