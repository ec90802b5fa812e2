use std::path::Path;

use acmob::averaging::{averaging_modulus, TorusFunction};
use acmob::corrector::{
    approximate_corrector_residual, smooth_mobility, solve_1d_corrector, solve_penalized,
};
use acmob::grid::{GridField, RunHistory};
use acmob::initdyn::{build_forcing, margin_threshold, verify_universal};
use acmob::levelset::{compare_flows, run_levelset, LevelState};
use acmob::mobility::{
    effective_mobility, layer_oscillation, layer_profile, tabulate_effective_mobility,
};
use acmob::phasefield::{init_interface, measure_normal_velocity, run, PhaseModel};
use acmob::{Direction, MobilityTable, StandingWaveProfile};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::emit::{Emitter, RunManifest};
use crate::{CliError, Context};

fn label(d: &Direction) -> String {
    match d {
        Direction::Lattice(k) => k
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        Direction::Irrational(v) => v
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn kind(d: &Direction) -> &'static str {
    if d.is_lattice() {
        "lattice"
    } else {
        "irrational"
    }
}

fn profile(cfg: &ExperimentConfig) -> Result<StandingWaveProfile, CliError> {
    let w = cfg.build_potential()?;
    StandingWaveProfile::solve(&w, cfg.profile.half_length, cfg.profile.points).ctx("potential")
}

pub fn wave(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        s: f64,
        q: f64,
        qdot: f64,
        wpp: f64,
    }
    let p = profile(cfg)?;
    let rows: Vec<Row> = (0..p.len())
        .map(|i| Row {
            s: p.s_grid()[i],
            q: p.q()[i],
            qdot: p.qdot()[i],
            wpp: p.wpp()[i],
        })
        .collect();
    out.emit_rows("wave.csv", &rows)?;
    Ok(json!({
        "cw": p.cw(),
        "decay_minus": p.decay_minus(),
        "decay_plus": p.decay_plus(),
        "tail_constant": p.tail_constant(),
        "truncated": p.truncated(),
        "mu": p.potential().mu(),
    }))
}

pub fn mobility(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        kind: &'static str,
        direction: String,
        mbar: f64,
    }
    let p = profile(cfg)?;
    let quad = cfg.quadrature();
    let mut rows = Vec::new();
    for d in cfg.build_directions()? {
        let mbar = effective_mobility(&cfg.mobility, &p, &d, &quad).ctx("mobility")?;
        rows.push(Row {
            kind: kind(&d),
            direction: label(&d),
            mbar,
        });
    }
    out.emit_rows("mobility.csv", &rows)?;
    let mut summary = json!({ "bounds": cfg.mobility.bounds() });
    if let Some(n) = cfg.quadrature.table_angles {
        let table = tabulate_effective_mobility(&cfg.mobility, &p, n, &quad).ctx("mobility")?;
        let mut bytes = Vec::new();
        table.write_csv_to(&mut bytes).ctx("mobility")?;
        out.emit("mobility_table.csv", bytes)?;
        summary["table_mean"] = json!(table.mean());
    }
    Ok(summary)
}

pub fn layers(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        direction: String,
        zeta: f64,
        average: f64,
    }
    let p = profile(cfg)?;
    let quad = cfg.quadrature();
    let n_zeta = cfg.quadrature.layer_samples;
    let mut rows = Vec::new();
    let mut oscillations = Vec::new();
    for d in cfg.build_directions()? {
        let k = d
            .lattice_vector()
            .ok_or_else(|| CliError::Config("layers needs lattice directions".into()))?
            .to_vec();
        for (zeta, average) in
            layer_profile(&cfg.mobility, &p, &k, n_zeta, &quad).ctx("mobility")?
        {
            rows.push(Row {
                direction: label(&d),
                zeta,
                average,
            });
        }
        let osc = layer_oscillation(&cfg.mobility, &p, &k, n_zeta, &quad).ctx("mobility")?;
        oscillations.push(json!({ "direction": label(&d), "oscillation": osc }));
    }
    out.emit_rows("layers.csv", &rows)?;
    Ok(json!({ "oscillations": oscillations }))
}

pub fn corrector(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        direction: String,
        s: f64,
        pbar: f64,
    }
    let p = profile(cfg)?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for d in cfg.build_directions()? {
        let sm = smooth_mobility(
            &cfg.mobility,
            &p,
            &d,
            cfg.corrector.cutoff,
            cfg.corrector.nu,
        )
        .ctx("corrector")?;
        let pbar = solve_1d_corrector(&sm, &p).ctx("corrector")?;
        for (s, v) in p.s_grid().iter().zip(pbar.values()) {
            rows.push(Row {
                direction: label(&d),
                s: *s,
                pbar: *v,
            });
        }
        stats.push(json!({
            "direction": label(&d),
            "mbar_tilde": pbar.mbar_tilde(),
            "cutoff": sm.cutoff(),
            "smoothing_error": sm.sup_error(),
            "fluctuation_free": sm.is_fluctuation_free(),
        }));
    }
    out.emit_rows("corrector.csv", &rows)?;
    Ok(json!({ "directions": stats }))
}

pub fn delta_sweep(
    cfg: &ExperimentConfig,
    out: &mut Emitter,
) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        direction: String,
        delta: f64,
        sup_renormalized: f64,
        residual: f64,
        #[serde(rename = "K")]
        k: usize,
        n_s: usize,
    }
    let p = profile(cfg)?;
    let quad = cfg.quadrature();
    let mut rows = Vec::new();
    for d in cfg.build_directions()? {
        let mbar = effective_mobility(&cfg.mobility, &p, &d, &quad).ctx("mobility")?;
        let sm = smooth_mobility(
            &cfg.mobility,
            &p,
            &d,
            cfg.corrector.cutoff,
            cfg.corrector.nu,
        )
        .ctx("corrector")?;
        let pbar = solve_1d_corrector(&sm, &p).ctx("corrector")?;
        let found: Vec<(f64, f64, f64)> = cfg
            .corrector
            .deltas
            .par_iter()
            .map(|&delta| {
                let field = solve_penalized(&sm, &p, delta)?;
                let residual =
                    approximate_corrector_residual(&cfg.mobility, &pbar, &field, &p, mbar)?;
                Ok((delta, field.renormalized_sup(&p), residual))
            })
            .collect::<acmob::Result<_>>()
            .ctx("corrector")?;
        for (delta, sup_renormalized, residual) in found {
            rows.push(Row {
                direction: label(&d),
                delta,
                sup_renormalized,
                residual,
                k: sm.cutoff(),
                n_s: p.len(),
            });
        }
    }
    out.emit_rows("delta_sweep.csv", &rows)?;
    Ok(json!({}))
}

pub fn averaging(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        direction: String,
        t: f64,
        modulus: f64,
    }
    let a = &cfg.averaging;
    let dim = cfg.directions[0].dim();
    let terms: Vec<(Vec<i64>, f64, f64)> = a
        .modes
        .iter()
        .map(|m| (m.k.clone(), m.cos, m.sin))
        .collect();
    let u = TorusFunction::from_real_modes(dim, a.mean, &terms).ctx("averaging")?;
    let mut rows = Vec::new();
    for d in cfg.build_directions()? {
        for &t in &a.times {
            let modulus = averaging_modulus(&u, &d.unit(), t).ctx("averaging")?;
            rows.push(Row {
                direction: label(&d),
                t,
                modulus,
            });
        }
    }
    out.emit_rows("averaging.csv", &rows)?;
    Ok(json!({}))
}

/// Interface, area and velocity tables shared by both flows.
fn emit_history(
    history: &RunHistory,
    write_fields: bool,
    out: &mut Emitter,
) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Point {
        snapshot: usize,
        time: f64,
        polyline: usize,
        closed: bool,
        x: f64,
        y: f64,
    }
    #[derive(Serialize)]
    struct Stat {
        snapshot: usize,
        time: f64,
        points: usize,
        area: f64,
        radius: Option<f64>,
    }
    #[derive(Serialize)]
    struct Velocity {
        snapshot: usize,
        time: f64,
        x: f64,
        y: f64,
        normal_x: f64,
        normal_y: f64,
        velocity: Option<f64>,
    }
    let interfaces = history.interfaces();
    let mut points = Vec::new();
    let mut stats = Vec::new();
    for (s, (time, iface)) in interfaces.iter().enumerate() {
        for (j, line) in iface.polylines.iter().enumerate() {
            for q in &line.points {
                points.push(Point {
                    snapshot: s,
                    time: *time,
                    polyline: j,
                    closed: line.closed,
                    x: q[0],
                    y: q[1],
                });
            }
        }
        let area = iface.polylines.iter().map(|l| l.area(iface.box_len)).sum();
        let radius = match iface.polylines.as_slice() {
            [l] if l.closed => iface.fit_circle().ok().map(|(_, r)| r),
            _ => None,
        };
        stats.push(Stat {
            snapshot: s,
            time: *time,
            points: iface.len(),
            area,
            radius,
        });
    }
    out.emit_rows("interfaces.csv", &points)?;
    out.emit_rows("interface_stats.csv", &stats)?;
    if interfaces.len() >= 3 {
        let mut rows = Vec::new();
        for (s, snap) in measure_normal_velocity(&interfaces)
            .ctx("phasefield")?
            .iter()
            .enumerate()
        {
            for v in &snap.samples {
                rows.push(Velocity {
                    snapshot: s,
                    time: snap.time,
                    x: v.point[0],
                    y: v.point[1],
                    normal_x: v.normal[0],
                    normal_y: v.normal[1],
                    velocity: v.velocity,
                });
            }
        }
        out.emit_rows("velocities.csv", &rows)?;
    }
    let mut snapshots = Vec::new();
    for (s, f) in history.snapshots.iter().enumerate() {
        let mut entry = json!({ "time": f.time() });
        if write_fields {
            let name = format!("field_{s:04}.csv");
            out.emit(&name, field_bytes(f))?;
            entry["file"] = json!(name);
        }
        snapshots.push(entry);
    }
    let last = history
        .snapshots
        .last()
        .expect("history holds the initial state");
    Ok(json!({
        "n": last.n(),
        "box_len": last.box_len(),
        "snapshots": snapshots,
        "radii": stats.iter().map(|s| s.radius).collect::<Vec<_>>(),
        "areas": stats.iter().map(|s| s.area).collect::<Vec<_>>(),
    }))
}

/// One grid row per line, `n` values per row, no header.
fn field_bytes(f: &GridField) -> Vec<u8> {
    let n = f.n();
    let mut s = String::with_capacity(n * n * 22);
    for row in f.values().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

fn read_field(path: &Path, n: usize, box_len: f64, time: f64) -> Result<GridField, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let values: Vec<f64> = text
        .lines()
        .flat_map(|l| l.split(','))
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if values.len() != n * n {
        return Err(CliError::Config(format!(
            "{}: expected {} values, found {}",
            path.display(),
            n * n,
            values.len()
        )));
    }
    let mut f = GridField::zeros(n, box_len).ctx("grid")?;
    f.values_mut().copy_from_slice(&values);
    f.set_time(time);
    Ok(f)
}

fn load_history(dir: &Path) -> Result<RunHistory, CliError> {
    let m = RunManifest::read(dir)?;
    let s = &m.summary;
    let broken = || {
        CliError::Config(format!(
            "{}: manifest has no field snapshots",
            dir.display()
        ))
    };
    let n = s["n"].as_u64().ok_or_else(broken)? as usize;
    let box_len = s["box_len"].as_f64().ok_or_else(broken)?;
    let mut snapshots = Vec::new();
    for entry in s["snapshots"].as_array().ok_or_else(broken)? {
        let file = entry["file"].as_str().ok_or_else(broken)?;
        let time = entry["time"].as_f64().ok_or_else(broken)?;
        snapshots.push(read_field(&dir.join(file), n, box_len, time)?);
    }
    Ok(RunHistory { snapshots })
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    let s = &cfg.simulation;
    let p = profile(cfg)?;
    let model = PhaseModel::new(cfg.mobility.clone(), cfg.build_potential()?).ctx("phasefield")?;
    let mut state = init_interface(&s.shape, s.eps, s.n, s.box_len, &p).ctx("phasefield")?;
    let history =
        run(&mut state, &model, s.t_end, s.phase_factor(), s.cadence).ctx("phasefield")?;
    let mut summary = emit_history(&history, s.write_fields, out)?;
    summary["eps"] = json!(s.eps);
    summary["steps"] = json!(state.steps);
    Ok(summary)
}

pub fn levelset(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    let s = &cfg.simulation;
    let table = match &s.mobility_table {
        Some(path) => MobilityTable::read_csv(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => {
            let p = profile(cfg)?;
            tabulate_effective_mobility(&cfg.mobility, &p, s.table_angles, &cfg.quadrature())
                .ctx("mobility")?
        }
    };
    let shape = &s.shape;
    let phi = GridField::from_fn(s.n, s.box_len, |x, y| {
        shape.signed_distance(x, y, s.box_len)
    })
    .ctx("levelset")?;
    let mut state = LevelState::new(phi, table).ctx("levelset")?;
    let floor = s.grad_floor.unwrap_or_else(|| state.default_grad_floor());
    let history =
        run_levelset(&mut state, s.t_end, s.level_factor(), s.cadence, floor).ctx("levelset")?;
    let mut summary = emit_history(&history, s.write_fields, out)?;
    summary["mbar_mean"] = json!(state.mbar.mean());
    Ok(summary)
}

pub fn compare(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        time: f64,
        hausdorff: f64,
    }
    let c = &cfg.compare;
    if c.first.as_os_str().is_empty() || c.second.as_os_str().is_empty() {
        return Err(CliError::Config(
            "compare needs compare.first and compare.second run directories".into(),
        ));
    }
    let a = load_history(&c.first)?;
    let b = load_history(&c.second)?;
    let cmp = compare_flows(&a, &b).ctx("levelset")?;
    let rows: Vec<Row> = cmp
        .times
        .iter()
        .zip(&cmp.distances)
        .map(|(&time, &hausdorff)| Row { time, hausdorff })
        .collect();
    out.emit_rows("hausdorff.csv", &rows)?;
    Ok(json!({ "max": cmp.max, "final": cmp.final_distance }))
}

pub fn initdyn(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<serde_json::Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        eps: f64,
        beta: f64,
        tau: f64,
        max_ratio: f64,
        ratio_constant: f64,
        arrival_holds: bool,
        monotone_holds: bool,
        zero_set_holds: bool,
    }
    #[derive(Serialize)]
    struct Margin {
        c: f64,
        beta_critical: f64,
    }
    let i = &cfg.initdyn;
    let w = cfg.build_potential()?;
    let theta = i.theta.unwrap_or(cfg.mobility.theta());
    let theta_high = i.theta_high.unwrap_or(cfg.mobility.theta_high());
    let rows: Vec<Row> = i
        .eps
        .par_iter()
        .map(|&eps| {
            let f = build_forcing(&w, theta, theta_high, eps)?;
            let r = verify_universal(&f, i.beta, i.a)?;
            Ok(Row {
                eps,
                beta: i.beta,
                tau: r.tau,
                max_ratio: r.max_ratio,
                ratio_constant: r.ratio_constant,
                arrival_holds: r.arrival_holds,
                monotone_holds: r.monotone_holds,
                zero_set_holds: f.zero_set_holds(),
            })
        })
        .collect::<acmob::Result<_>>()
        .ctx("initdyn")?;
    out.emit_rows("initdyn.csv", &rows)?;
    if !i.constants.is_empty() {
        let p = profile(cfg)?;
        let margins: Vec<Margin> = i
            .constants
            .iter()
            .map(|&c| {
                Ok(Margin {
                    c,
                    beta_critical: margin_threshold(&p, c, 1e-6)?,
                })
            })
            .collect::<acmob::Result<_>>()
            .ctx("initdyn")?;
        out.emit_rows("margins.csv", &margins)?;
    }
    Ok(json!({ "theta": theta, "theta_high": theta_high }))
}
