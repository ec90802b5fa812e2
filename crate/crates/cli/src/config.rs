use std::path::{Path, PathBuf};

use acmob::levelset::LS_STEP_FACTOR;
use acmob::mobility::Quadrature;
use acmob::phasefield::{Shape, STABILITY_FACTOR};
use acmob::{Direction, Mobility, PotentialW};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs. Every section has defaults, so a config file only
/// lists what differs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub mobility: Mobility,
    pub directions: Vec<Direction>,
    pub profile: ProfileConfig,
    pub quadrature: QuadratureConfig,
    pub corrector: CorrectorConfig,
    pub averaging: AveragingConfig,
    pub simulation: SimulationConfig,
    pub compare: CompareConfig,
    pub initdyn: InitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::default(),
            mobility: Mobility::Constant { value: 1.0 },
            directions: vec![Direction::Lattice(vec![1, 0])],
            profile: ProfileConfig::default(),
            quadrature: QuadratureConfig::default(),
            corrector: CorrectorConfig::default(),
            averaging: AveragingConfig::default(),
            simulation: SimulationConfig::default(),
            compare: CompareConfig::default(),
            initdyn: InitConfig::default(),
        }
    }
}

/// A builtin well by name, or a polynomial by ascending coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            name: "quartic".into(),
            coeffs: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub half_length: f64,
    pub points: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            half_length: 20.0,
            points: 4096,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub s_step: f64,
    pub torus_nodes: usize,
    /// Also tabulate the effective mobility on this many uniform angles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_angles: Option<usize>,
    /// Layer samples per sub-torus period.
    pub layer_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = Quadrature::default();
        Self {
            s_step: q.s_step,
            torus_nodes: q.torus_nodes,
            table_angles: None,
            layer_samples: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectorConfig {
    pub cutoff: usize,
    pub nu: f64,
    pub deltas: Vec<f64>,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self {
            cutoff: 2,
            nu: 0.1,
            deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealMode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AveragingConfig {
    pub mean: f64,
    pub modes: Vec<RealMode>,
    pub times: Vec<f64>,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            mean: 0.0,
            modes: vec![RealMode {
                k: vec![1, 0],
                cos: 1.0,
                sin: 0.0,
            }],
            times: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub box_len: f64,
    pub eps: f64,
    /// Fraction of the stability limit used as time step. Absent means the
    /// solver default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_factor: Option<f64>,
    pub t_end: f64,
    pub cadence: f64,
    pub shape: Shape,
    /// Level set only: effective mobility table written by `mobility`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobility_table: Option<PathBuf>,
    /// Level set only: angles used when the table is computed in place.
    pub table_angles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_floor: Option<f64>,
    /// Write full field snapshots so `compare` can read the run back.
    pub write_fields: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 128,
            box_len: 1.0,
            eps: 0.04,
            dt_factor: None,
            t_end: 0.02,
            cadence: 0.002,
            shape: Shape::Circle {
                center: [0.5, 0.5],
                radius: 0.3,
            },
            mobility_table: None,
            table_angles: 64,
            grad_floor: None,
            write_fields: true,
        }
    }
}

impl SimulationConfig {
    pub fn phase_factor(&self) -> f64 {
        self.dt_factor.unwrap_or(STABILITY_FACTOR)
    }

    pub fn level_factor(&self) -> f64 {
        self.dt_factor.unwrap_or(LS_STEP_FACTOR)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub first: PathBuf,
    pub second: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub eps: Vec<f64>,
    pub beta: f64,
    pub a: f64,
    /// Mobility bounds; taken from the mobility when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_high: Option<f64>,
    /// Margin constants whose critical beta is reported.
    pub constants: Vec<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.02, 0.01, 0.005],
            beta: 0.1,
            a: 1.0,
            theta: None,
            theta_high: None,
            constants: vec![0.5, 1.0, 2.0],
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(what: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{what} = {x} must be positive")))
    }
}

fn nonempty<T>(what: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(bad(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parse a TOML file; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        anchor(&mut cfg.compare.first);
        anchor(&mut cfg.compare.second);
        if let Some(p) = cfg.simulation.mobility_table.as_mut() {
            anchor(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.build_potential()?;
        self.mobility
            .clone()
            .validated()
            .map_err(|e| bad(format!("mobility: {e}")))?;
        nonempty("directions", &self.directions)?;
        self.build_directions()?;
        positive("profile.half_length", self.profile.half_length)?;
        if self.profile.points < 16 {
            return Err(bad("profile.points must be at least 16"));
        }
        positive("quadrature.s_step", self.quadrature.s_step)?;
        if self.quadrature.torus_nodes == 0 || self.quadrature.table_angles == Some(0) {
            return Err(bad("quadrature resolutions must be positive"));
        }
        if self.quadrature.layer_samples < 16 {
            return Err(bad("quadrature.layer_samples must be at least 16"));
        }
        positive("corrector.nu", self.corrector.nu)?;
        nonempty("corrector.deltas", &self.corrector.deltas)?;
        for &d in &self.corrector.deltas {
            positive("corrector delta", d)?;
        }
        nonempty("averaging.times", &self.averaging.times)?;
        for &t in &self.averaging.times {
            positive("averaging time", t)?;
        }
        let s = &self.simulation;
        if s.n < 8 {
            return Err(bad("simulation.n must be at least 8"));
        }
        positive("simulation.box_len", s.box_len)?;
        positive("simulation.eps", s.eps)?;
        positive("simulation.cadence", s.cadence)?;
        if !(s.t_end >= 0.0) {
            return Err(bad("simulation.t_end must be nonnegative"));
        }
        if let Some(f) = s.dt_factor {
            positive("simulation.dt_factor", f)?;
        }
        if s.table_angles < 4 {
            return Err(bad("simulation.table_angles must be at least 4"));
        }
        let i = &self.initdyn;
        nonempty("initdyn.eps", &i.eps)?;
        positive("initdyn.beta", i.beta)?;
        positive("initdyn.a", i.a)?;
        Ok(())
    }

    pub fn build_potential(&self) -> Result<PotentialW, CliError> {
        let p = match &self.potential.coeffs {
            Some(c) => PotentialW::polynomial(self.potential.name.clone(), c.clone()),
            None => PotentialW::builtin(&self.potential.name),
        };
        p.map_err(|e| bad(format!("potential: {e}")))
    }

    /// Directions pass through the validating constructors.
    pub fn build_directions(&self) -> Result<Vec<Direction>, CliError> {
        self.directions
            .iter()
            .map(|d| match d {
                Direction::Lattice(k) => Direction::lattice(k.clone()),
                Direction::Irrational(v) => Direction::irrational(v.clone()),
            })
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("directions: {e}")))
    }

    pub fn quadrature(&self) -> Quadrature {
        Quadrature {
            s_step: self.quadrature.s_step,
            torus_nodes: self.quadrature.torus_nodes,
        }
    }
}
