//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use acmob::averaging::{
    averaging_modulus, direct_average, hyperplane_average, transverse_gap, TorusFunction,
};
use acmob::corrector::{
    approximate_corrector_residual, delta_sweep, smooth_mobility, solve_1d_corrector,
    solve_penalized,
};
use acmob::grid::{GridField, Interface};
use acmob::initdyn::{bs_margin, build_forcing, margin_threshold, verify_universal};
use acmob::levelset::{ls_step, run_levelset, shrink_ball_exact, LevelState, LS_STEP_FACTOR};
use acmob::mobility::{
    effective_mobility, layer_oscillation, tabulate_effective_mobility, Quadrature,
};
use acmob::numerics::fit_slope;
use acmob::phasefield::{init_interface, run, step, PhaseModel, Shape, STABILITY_FACTOR};
use acmob::{Direction, Mobility, MobilityTable, PotentialW, StandingWaveProfile};
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let el = start.elapsed();
    (
        el <= limit,
        format!("{:.2}s of {}s", el.as_secs_f64(), limit.as_secs()),
    )
}

fn quartic_profile(n: usize) -> StandingWaveProfile {
    StandingWaveProfile::solve(&PotentialW::quartic(), 20.0, n).unwrap()
}

fn irrational() -> Direction {
    Direction::irrational(vec![1.0, 2f64.sqrt()]).unwrap()
}

fn cosine() -> Mobility {
    Mobility::cosine_y1(2.0, 1.0).unwrap()
}

fn standing_wave() -> Outcome {
    let start = Instant::now();
    let p = quartic_profile(4096);
    let err = p
        .s_grid()
        .iter()
        .zip(p.q())
        .map(|(s, q)| (q - (s / 2f64.sqrt()).tanh()).abs())
        .fold(0.0, f64::max);
    let cw_err = (p.cw() - 2.0 * 2f64.sqrt() / 3.0).abs();
    let (fast, time) = within(start, Duration::from_secs(1));
    outcome(
        err <= 1e-8 && cw_err <= 1e-8 && fast,
        format!("sup error {err:.2e}, c_W error {cw_err:.2e}, {time}"),
    )
}

fn effective_mobility_checks() -> Outcome {
    let start = Instant::now();
    let p = quartic_profile(4096);
    let quad = Quadrature::default();
    let mut const_err: f64 = 0.0;
    let mut avg_err: f64 = 0.0;
    for j in 0..8 {
        let e = Direction::from_angle(2.0 * PI * j as f64 / 8.0 + 0.1);
        let c = effective_mobility(&Mobility::constant(1.7).unwrap(), &p, &e, &quad).unwrap();
        const_err = const_err.max((c - 1.7).abs());
        let v = effective_mobility(&cosine(), &p, &e, &quad).unwrap();
        avg_err = avg_err.max((v - 2.0).abs());
    }
    let m = Mobility::product_sine(2.0, 0.8).unwrap();
    let table = tabulate_effective_mobility(&m, &p, 64, &quad).unwrap();
    let (theta, theta_high) = m.bounds();
    let bracketed = table
        .values()
        .iter()
        .all(|&v| v >= theta && v <= theta_high);
    let (fast, time) = within(start, Duration::from_secs(5));
    outcome(
        const_err <= 1e-12 && avg_err <= 1e-8 && bracketed && fast,
        format!("constant {const_err:.1e}, torus average {avg_err:.1e}, 64 directions bracketed {bracketed}, {time}"),
    )
}

fn rational_obstruction() -> Outcome {
    let start = Instant::now();
    let p = quartic_profile(4096);
    let quad = Quadrature::default();
    let m = cosine();
    let osc10 = layer_oscillation(&m, &p, &[1, 0], 32, &quad).unwrap();
    let osc01 = layer_oscillation(&m, &p, &[0, 1], 32, &quad).unwrap();
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let lattice =
        smooth_mobility(&m, &p, &Direction::lattice(vec![1, 0]).unwrap(), 2, 0.1).unwrap();
    let rows = delta_sweep(&lattice, &p, &deltas).unwrap();
    let r: Vec<f64> = rows.iter().map(|row| row.renormalized).collect();
    let stable = r.iter().all(|&x| x > 0.5) && (r[3] - r[2]).abs() <= 0.1 * r[2];
    let irr = smooth_mobility(&m, &p, &irrational(), 2, 0.1).unwrap();
    let ri: Vec<f64> = delta_sweep(&irr, &p, &deltas)
        .unwrap()
        .iter()
        .map(|row| row.renormalized)
        .collect();
    let decreasing = ri.windows(2).all(|w| w[1] < w[0]);
    let (fast, time) = within(start, Duration::from_secs(120));
    outcome(
        (osc10 - 2.0).abs() <= 1e-6 && osc01 <= 1e-6 && stable && decreasing && fast,
        format!(
            "oscillation (1,0) {osc10:.9}, (0,1) {osc01:.1e}; lattice sweep {:?} (stable above 0.5: {stable}); irrational sweep {:?} (decreasing: {decreasing}); {time}",
            r.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            ri.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn approximate_corrector() -> Outcome {
    let start = Instant::now();
    let nu = 0.1;
    let m = cosine();
    let e = irrational();
    let residual_on = |n: usize, delta: f64| {
        let p = quartic_profile(n);
        let mbar = effective_mobility(&m, &p, &e, &Quadrature::default()).unwrap();
        let sm = smooth_mobility(&m, &p, &e, 2, nu).unwrap();
        let pbar = solve_1d_corrector(&sm, &p).unwrap();
        let p2 = solve_penalized(&sm, &p, delta).unwrap();
        approximate_corrector_residual(&m, &pbar, &p2, &p, mbar).unwrap()
    };
    let mut found = None;
    for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
        let r = residual_on(4001, delta);
        if r <= nu {
            found = Some((delta, r));
            break;
        }
    }
    let (fast, time) = within(start, Duration::from_secs(300));
    match found {
        Some((delta, coarse)) => {
            let fine = residual_on(8001, delta);
            let change = (fine - coarse).abs() / coarse;
            let (fast2, time) = within(start, Duration::from_secs(300));
            outcome(
                change < 0.1 && fast && fast2,
                format!("delta {delta:.0e}: residual {coarse:.3e}, refined {fine:.3e} (change {:.2e}), {time}", change),
            )
        }
        None => outcome(false, format!("no delta reached residual {nu}, {time}")),
    }
}

fn averaging_checks() -> Outcome {
    let start = Instant::now();
    let e2 = irrational().unit();
    let u2 = TorusFunction::from_real_modes(
        2,
        0.5,
        &[
            (vec![1, 0], 0.7, 0.2),
            (vec![0, 1], -0.3, 0.4),
            (vec![1, 1], 0.25, 0.0),
        ],
    )
    .unwrap();
    let mut agree: f64 = 0.0;
    for &t in &[0.02, 0.1, 0.3] {
        for x in [[0.1, 0.7], [0.45, 0.05]] {
            let a = hyperplane_average(&u2, &e2, &x, t).unwrap();
            let b = direct_average(&u2, &e2, &x, t, 200).unwrap();
            agree = agree.max((a - b).abs());
        }
    }
    let n3 = 3f64.sqrt();
    let e3 = [
        1.0 / n3,
        2f64.sqrt() / n3 * 0.5f64.sqrt(),
        (1.0 - 1.0 / 3.0 - 1.0 / 3.0f64).sqrt(),
    ];
    let norm3 = e3.iter().map(|x| x * x).sum::<f64>().sqrt();
    let e3: Vec<f64> = e3.iter().map(|x| x / norm3).collect();
    let u3 = TorusFunction::from_real_modes(
        3,
        0.0,
        &[(vec![1, 0, 0], 1.0, 0.0), (vec![0, 1, 1], 0.0, 0.5)],
    )
    .unwrap();
    for &t in &[0.05, 0.2] {
        let x = [0.3, 0.1, 0.8];
        let a = hyperplane_average(&u3, &e3, &x, t).unwrap();
        let b = direct_average(&u3, &e3, &x, t, 64).unwrap();
        agree = agree.max((a - b).abs());
    }

    // Decay of a single mode measured from the quadrature route.
    let k = vec![1, 0];
    let single = TorusFunction::from_real_modes(2, 0.0, &[(k.clone(), 1.0, 0.0)]).unwrap();
    let times = [0.02, 0.05, 0.1, 0.15, 0.2];
    let logs: Vec<f64> = times
        .iter()
        .map(|&t| {
            direct_average(&single, &e2, &[0.0, 0.0], t, 200)
                .unwrap()
                .ln()
        })
        .collect();
    let rate = -fit_slope(&times, &logs);
    let expected = 4.0 * PI * PI * transverse_gap(&k, &e2);
    let rate_err = (rate / expected - 1.0).abs();

    let resonant = averaging_modulus(&single, &[1.0, 0.0], 10.0).unwrap();
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(
        agree <= 1e-8 && rate_err <= 0.01 && resonant >= 0.99 && fast,
        format!(
            "Fourier vs quadrature {agree:.1e}, decay rate {rate:.4} vs {expected:.4} ({:.3}%), resonant modulus {resonant:.4}, {time}",
            100.0 * rate_err
        ),
    )
}

fn radius_error(snapshots: &[GridField], r0: f64) -> f64 {
    snapshots
        .iter()
        .map(|f| {
            let (_, r) = f.zero_set().fit_circle().unwrap();
            let exact = shrink_ball_exact(r0, f.time(), 1.0, 2).unwrap();
            (r - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

fn shrinking_circle() -> Outcome {
    let start = Instant::now();
    let r0 = 0.3;
    let t_end = 0.02;
    let n = 256;
    let shape = Shape::Circle {
        center: [0.5, 0.5],
        radius: r0,
    };
    let profile = quartic_profile(4096);
    let model = PhaseModel::new(Mobility::constant(1.0).unwrap(), PotentialW::quartic()).unwrap();
    let mut errors = Vec::new();
    for eps in [0.04, 0.02] {
        let mut state = init_interface(&shape, eps, n, 1.0, &profile).unwrap();
        let history = run(&mut state, &model, t_end, STABILITY_FACTOR, 0.002).unwrap();
        errors.push(radius_error(&history.snapshots, r0));
    }
    let phi = GridField::from_fn(n, 1.0, |x, y| shape.signed_distance(x, y, 1.0)).unwrap();
    let mut ls = LevelState::new(phi, MobilityTable::constant(1.0).unwrap()).unwrap();
    let floor = ls.default_grad_floor();
    let history = run_levelset(&mut ls, t_end, LS_STEP_FACTOR, 0.002, floor).unwrap();
    let ls_err = radius_error(&history.snapshots, r0);
    let (fast, time) = within(start, Duration::from_secs(900));
    outcome(
        errors.iter().all(|&e| e <= 0.03) && errors[1] < errors[0] && ls_err <= 0.02 && fast,
        format!(
            "phase field eps 0.04: {:.3}%, eps 0.02: {:.3}%; level set: {:.3}%; {time}",
            100.0 * errors[0],
            100.0 * errors[1],
            100.0 * ls_err
        ),
    )
}

/// Mean abscissa of each interface line of a slab with normal (1, 0).
fn line_positions(iface: &Interface) -> Vec<f64> {
    let mut xs: Vec<f64> = iface
        .polylines
        .iter()
        .map(|p| {
            p.points
                .iter()
                .map(|q| q[0].rem_euclid(iface.box_len))
                .sum::<f64>()
                / p.points.len() as f64
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

fn rational_flat() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let eps = 0.04;
    let shape = Shape::Plane {
        normal: [1.0, 0.0],
        offset: 0.25,
    };
    let m = cosine();
    let profile = quartic_profile(4096);
    let model = PhaseModel::new(m.clone(), PotentialW::quartic()).unwrap();
    let mut state = init_interface(&shape, eps, n, 1.0, &profile).unwrap();
    let before = line_positions(&state.u.zero_set());
    let history = run(&mut state, &model, 0.05, STABILITY_FACTOR, 0.01).unwrap();
    let h = state.u.step();
    let drift = history
        .snapshots
        .iter()
        .map(|f| {
            let now = line_positions(&f.zero_set());
            before
                .iter()
                .zip(&now)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let table = tabulate_effective_mobility(&m, &profile, 64, &Quadrature::default()).unwrap();
    let phi = GridField::from_fn(n, 1.0, |x, y| shape.signed_distance(x, y, 1.0)).unwrap();
    let mut ls = LevelState::new(phi, table).unwrap();
    let initial = ls.phi.zero_set();
    let floor = ls.default_grad_floor();
    let lh = run_levelset(&mut ls, 0.05, LS_STEP_FACTOR, 0.01, floor).unwrap();
    let stationary = lh.snapshots.iter().all(|f| f.zero_set() == initial);
    let (fast, time) = within(start, Duration::from_secs(300));
    outcome(
        drift <= h && stationary && fast,
        format!("phase-field drift {drift:.2e} (h = {h:.2e}), level set stationary {stationary}, {time}"),
    )
}

fn discrete_comparison() -> Outcome {
    let start = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let profile = quartic_profile(4096);
    let mut phase_violations = 0usize;
    for pair in 0..50 {
        let m = if pair % 2 == 0 {
            Mobility::constant(1.0).unwrap()
        } else {
            cosine()
        };
        let model = PhaseModel::new(m, PotentialW::quartic()).unwrap();
        let shape = Shape::Circle {
            center: [rng.gen_range(0.48..0.52), rng.gen_range(0.48..0.52)],
            radius: rng.gen_range(0.2..0.3),
        };
        let mut a = init_interface(&shape, 0.035, 96, 1.0, &profile).unwrap();
        let mut b = a.clone();
        for v in b.u.values_mut() {
            *v = (*v + rng.gen_range(0.0..0.3)).min(1.0);
        }
        let dt = model.max_dt(&a, STABILITY_FACTOR);
        for _ in 0..500 {
            step(&mut a, &model, dt).unwrap();
            step(&mut b, &model, dt).unwrap();
            phase_violations +=
                a.u.values()
                    .iter()
                    .zip(b.u.values())
                    .filter(|(x, y)| x > y)
                    .count();
        }
    }
    let mut level_violations = 0usize;
    for _ in 0..20 {
        let amp = rng.gen_range(0.0..0.3);
        let values: Vec<f64> = (0..64)
            .map(|k| 1.5 + amp * (4.0 * PI * k as f64 / 64.0).cos())
            .collect();
        let table = MobilityTable::new(values, (1.0, 2.0)).unwrap();
        let (r, cx, cy) = (
            rng.gen_range(0.15..0.3),
            rng.gen_range(0.4..0.6),
            rng.gen_range(0.4..0.6),
        );
        let lift: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.0..0.03),
                    rng.gen_range(1.0..3.0),
                    rng.gen_range(0.0..1.0),
                )
            })
            .collect();
        let base = move |x: f64, y: f64| r - (x - cx).hypot(y - cy);
        let bump = move |x: f64, y: f64| {
            lift.iter()
                .map(|(a, k, p)| {
                    a * (1.0 + (2.0 * PI * (k.round() * x + p)).sin() * (2.0 * PI * y).cos())
                })
                .sum::<f64>()
        };
        let mut a =
            LevelState::new(GridField::from_fn(64, 1.0, base).unwrap(), table.clone()).unwrap();
        let mut b = LevelState::new(
            GridField::from_fn(64, 1.0, move |x, y| base(x, y) + bump(x, y)).unwrap(),
            table,
        )
        .unwrap();
        let dt = a.max_dt(LS_STEP_FACTOR);
        let floor = a.default_grad_floor();
        for _ in 0..500 {
            ls_step(&mut a, dt, floor).unwrap();
            ls_step(&mut b, dt, floor).unwrap();
            level_violations += a
                .phi
                .values()
                .iter()
                .zip(b.phi.values())
                .filter(|(x, y)| x > y)
                .count();
        }
    }
    let (_, time) = within(start, Duration::from_secs(600));
    outcome(
        phase_violations == 0 && level_violations == 0,
        format!("phase-field violations {phase_violations}, level-set violations {level_violations}, {time}"),
    )
}

fn initialization() -> Outcome {
    let start = Instant::now();
    let w = PotentialW::quartic();
    let mut ordered = true;
    for eps in [0.05, 0.01] {
        let f = build_forcing(&w, 1.0, 2.0, eps).unwrap();
        let lo = -1.0 - f.mu();
        for i in 0..=10_000 {
            let u = lo + (1.0 - lo) * i as f64 / 10_000.0;
            ordered &= f.ftilde(u) >= f.feps(u) - 1e-12 && f.feps(u) >= f.fbar(u) - 1e-12;
        }
    }
    let mut taus = Vec::new();
    let mut arrivals = true;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for eps in [0.02, 0.01, 0.005] {
        let f = build_forcing(&w, 1.0, 2.0, eps).unwrap();
        let report = verify_universal(&f, 0.1, 1.0).unwrap();
        arrivals &= report.arrival_holds && report.monotone_holds;
        taus.push(report.tau);
        xs.push(eps.ln());
        ys.push(report.max_ratio.ln());
    }
    let exponent = -fit_slope(&xs, &ys);
    let tau_max = taus.iter().copied().fold(0.0, f64::max);
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let bounded = tau_max.is_finite() && tau_max <= 2.0 * tau_min;
    let (fast, time) = within(start, Duration::from_secs(60));
    outcome(
        ordered && arrivals && bounded && (exponent - 1.0).abs() <= 0.2 && fast,
        format!("ordering {ordered}, tau {taus:.4?}, ratio exponent {exponent:.3}, {time}"),
    )
}

fn margin_constants() -> Outcome {
    let profile = quartic_profile(4096);
    let start = Instant::now();
    let mut ok = true;
    let mut found = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        match margin_threshold(&profile, c, 1e-4) {
            Ok(b) => {
                ok &= b > 0.0
                    && bs_margin(&profile, c, b - 1e-4) > 0.0
                    && bs_margin(&profile, c, b + 1e-4) <= 0.0;
                found.push(b);
            }
            Err(_) => ok = false,
        }
    }
    let (fast, time) = within(start, Duration::from_secs(1));
    outcome(ok && fast, format!("thresholds {found:.5?}, {time}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("standing wave", standing_wave),
        ("effective mobility", effective_mobility_checks),
        ("rational obstruction", rational_obstruction),
        ("approximate corrector", approximate_corrector),
        ("averaging", averaging_checks),
        ("shrinking circle", shrinking_circle),
        ("rational flat front", rational_flat),
        ("discrete comparison", discrete_comparison),
        ("initialization flow", initialization),
        ("margin constants", margin_constants),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
