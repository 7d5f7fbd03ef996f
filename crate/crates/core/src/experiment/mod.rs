//! Declarative experiment runner. A JSON document selects one study and its
//! parameters; a run writes CSV data, `audits.csv`, `metadata.json` and
//! `summary.txt` to an output directory.
//!
//! ```json
//! { "kind": "evans-limit", "eos": { "kind": "gamma_law", "a": 1.0, "gamma": 2.0 },
//!   "seed": 7, "params": { "eps_list": [0.1, 0.05, 0.025] } }
//! ```
//!
//! Omitted parameters take the defaults of the corresponding `*Params` type.

pub mod audits;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Complex;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evans::contour::{evans_convergence, origin_value, samples_csv, winding_number, Contour, WindingOptions};
use crate::evans::{EvansOptions, EvansProblem};
use crate::model::System1D;
use crate::profiles::{profile_auto, rankine_hugoniot, relaxation_profile, ProfileSolution, ShockSetup};
use crate::sim1d::{
    discrete_energy_audit, prepare_stress, relaxation_limit_study, sample_euler, Boundary, Grid1D,
    NavierStokesSolver, Reference, RelaxationSolver, RunOptions,
};
use crate::thermo::{EosSpec, GammaLaw};
pub use audits::{Audit, GodunovCheckParams, ModelCheckParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    LimitStudy,
    Profile,
    ProfileLimit,
    Evans,
    Winding,
    EvansLimit,
    CheckModel,
    CheckGodunov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub boundary: Boundary,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            n: 400,
            a: 0.0,
            b: 2.0 * PI,
            boundary: Boundary::Periodic,
        }
    }
}

/// Initial density and velocity; relaxation runs start from the Newtonian stress.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `rho = rho0 + rho_amp sin(k x)`, `u = u_amp cos(k x)`.
    Smooth {
        rho0: f64,
        rho_amp: f64,
        u_amp: f64,
        wavenumber: f64,
    },
    Riemann {
        x0: f64,
        rho_left: f64,
        u_left: f64,
        rho_right: f64,
        u_right: f64,
    },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Smooth {
            rho0: 1.0,
            rho_amp: 0.2,
            u_amp: 0.2,
            wavenumber: 1.0,
        }
    }
}

impl InitialData {
    fn sample(&self, grid: &Grid1D) -> Vec<[f64; 3]> {
        match *self {
            InitialData::Smooth {
                rho0,
                rho_amp,
                u_amp,
                wavenumber,
            } => sample_euler(grid, |x| rho0 + rho_amp * (wavenumber * x).sin(), |x| u_amp * (wavenumber * x).cos()),
            InitialData::Riemann {
                x0,
                rho_left,
                u_left,
                rho_right,
                u_right,
            } => sample_euler(
                grid,
                |x| if x < x0 { rho_left } else { rho_right },
                |x| if x < x0 { u_left } else { u_right },
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Relaxation,
    NavierStokes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub solver: Solver,
    pub eps: f64,
    pub mu_tilde: f64,
    pub grid: GridParams,
    pub t_final: f64,
    pub cfl: f64,
    pub output_times: Vec<f64>,
    pub initial: InitialData,
    /// Per-step energy increase allowed by the audit, relative to `E(0)`.
    pub energy_tol: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            solver: Solver::Relaxation,
            eps: 0.05,
            mu_tilde: 2.0,
            grid: GridParams::default(),
            t_final: 0.2,
            cfl: 0.45,
            output_times: vec![0.1],
            initial: InitialData::default(),
            energy_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitStudyParams {
    pub eps_list: Vec<f64>,
    pub mu_tilde: f64,
    pub grid: GridParams,
    pub t_final: f64,
    pub cfl: f64,
    pub initial: InitialData,
    pub reference: Reference,
    pub energy_tol: f64,
}

impl Default for LimitStudyParams {
    fn default() -> Self {
        LimitStudyParams {
            eps_list: vec![0.1, 0.05, 0.025],
            mu_tilde: 2.0,
            grid: GridParams::default(),
            t_final: 0.2,
            cfl: 0.45,
            initial: InitialData::default(),
            reference: Reference::NavierStokes,
            energy_tol: 1e-10,
        }
    }
}

/// Stationary shock with upstream state `(rho_minus, u_minus)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockParams {
    pub rho_minus: f64,
    pub u_minus: f64,
    pub mu_tilde: f64,
}

impl Default for ShockParams {
    fn default() -> Self {
        ShockParams {
            rho_minus: 1.0,
            u_minus: 2.0,
            mu_tilde: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileParams {
    pub shock: ShockParams,
    /// Zero selects the viscous profile.
    pub eps: f64,
    pub spacing: f64,
    pub endpoint_tol: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            shock: ShockParams::default(),
            eps: 0.0,
            spacing: 0.02,
            endpoint_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileLimitParams {
    pub shock: ShockParams,
    pub eps_list: Vec<f64>,
    pub half_length: f64,
    pub samples: usize,
    /// Accepted band of consecutive ratios of `sup |Sigma + mu_tilde U'|`.
    pub ratio_band: [f64; 2],
}

impl Default for ProfileLimitParams {
    fn default() -> Self {
        ProfileLimitParams {
            shock: ShockParams::default(),
            eps_list: vec![0.1, 0.05, 0.025, 0.0125],
            half_length: 25.0,
            samples: 1001,
            ratio_band: [1.5, 2.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvansParams {
    pub shock: ShockParams,
    pub eps: f64,
    /// Explicit spectral parameters `[re, im]`; when empty, `samples` points of `contour`.
    pub lambdas: Vec<[f64; 2]>,
    pub contour: Contour,
    pub samples: usize,
}

impl Default for EvansParams {
    fn default() -> Self {
        EvansParams {
            shock: ShockParams::default(),
            eps: 0.0,
            lambdas: vec![],
            contour: Contour::HalfDisc { radius: 5.0, offset: 0.1 },
            samples: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindingParams {
    pub shock: ShockParams,
    pub eps: f64,
    /// `None` selects a circle about the origin inside the nearest branch point,
    /// where the expected winding is 1 and `D(0)` is also checked.
    pub contour: Option<Contour>,
    pub expected: Option<i64>,
    pub options: WindingOptions,
}

impl Default for WindingParams {
    fn default() -> Self {
        WindingParams {
            shock: ShockParams::default(),
            eps: 0.0,
            contour: Some(Contour::HalfDisc { radius: 5.0, offset: 0.1 }),
            expected: Some(0),
            options: WindingOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvansLimitParams {
    pub shock: ShockParams,
    pub eps_list: Vec<f64>,
    pub contour: Contour,
    pub samples: usize,
    pub lambda_ref: f64,
}

impl Default for EvansLimitParams {
    fn default() -> Self {
        EvansLimitParams {
            shock: ShockParams::default(),
            eps_list: vec![0.1, 0.05, 0.025],
            contour: Contour::HalfDisc { radius: 5.0, offset: 0.1 },
            samples: 128,
            lambda_ref: 2.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Simulate(SimulateParams),
    LimitStudy(LimitStudyParams),
    Profile(ProfileParams),
    ProfileLimit(ProfileLimitParams),
    Evans(EvansParams),
    Winding(WindingParams),
    EvansLimit(EvansLimitParams),
    CheckModel(ModelCheckParams),
    CheckGodunov(GodunovCheckParams),
}

/// A resolved experiment: every parameter explicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub eos: EosSpec,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    #[serde(default)]
    eos: EosSpec,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: serde_json::Value,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn parse_params<T: DeserializeOwned + Default>(v: serde_json::Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { "params".into() } else { format!("params.{inner}") };
        config_error(path, e.into_inner().to_string())
    })
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(path, format!("must be positive, got {v}")))
    }
}

fn eps_list(path: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(config_error(path, "must not be empty"));
    }
    for (i, &e) in list.iter().enumerate() {
        positive(&format!("{path}[{i}]"), e)?;
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_error(path, "must be strictly decreasing"));
    }
    Ok(())
}

fn grid(path: &str, g: &GridParams) -> Result<Grid1D> {
    Grid1D::new(g.n, g.a, g.b, g.boundary).map_err(|e| config_error(path, e.to_string()))
}

fn shock(path: &str, s: &ShockParams) -> Result<()> {
    positive(&format!("{path}.rho_minus"), s.rho_minus)?;
    positive(&format!("{path}.u_minus"), s.u_minus)?;
    positive(&format!("{path}.mu_tilde"), s.mu_tilde)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            config_error(path, e.into_inner().to_string())
        })?;
        let params = match raw.kind {
            Kind::Simulate => Params::Simulate(parse_params(raw.params)?),
            Kind::LimitStudy => Params::LimitStudy(parse_params(raw.params)?),
            Kind::Profile => Params::Profile(parse_params(raw.params)?),
            Kind::ProfileLimit => Params::ProfileLimit(parse_params(raw.params)?),
            Kind::Evans => Params::Evans(parse_params(raw.params)?),
            Kind::Winding => Params::Winding(parse_params(raw.params)?),
            Kind::EvansLimit => Params::EvansLimit(parse_params(raw.params)?),
            Kind::CheckModel => Params::CheckModel(parse_params(raw.params)?),
            Kind::CheckGodunov => Params::CheckGodunov(parse_params(raw.params)?),
        };
        let cfg = ExperimentConfig {
            kind: raw.kind,
            eos: raw.eos,
            seed: raw.seed,
            output_dir: raw.output_dir,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn new(kind: Kind, params: Params) -> Self {
        ExperimentConfig {
            kind,
            eos: EosSpec::default(),
            seed: 0,
            output_dir: None,
            params,
        }
    }

    /// Rejects nonpositive relaxation parameters and malformed grids before any
    /// computation.
    pub fn validate(&self) -> Result<()> {
        self.eos.build().map_err(|e| config_error("eos", e.to_string()))?;
        match &self.params {
            Params::Simulate(p) => {
                positive("params.eps", p.eps)?;
                positive("params.mu_tilde", p.mu_tilde)?;
                positive("params.t_final", p.t_final)?;
                positive("params.cfl", p.cfl)?;
                grid("params.grid", &p.grid)?;
            }
            Params::LimitStudy(p) => {
                eps_list("params.eps_list", &p.eps_list)?;
                positive("params.mu_tilde", p.mu_tilde)?;
                positive("params.t_final", p.t_final)?;
                positive("params.cfl", p.cfl)?;
                grid("params.grid", &p.grid)?;
            }
            Params::Profile(p) => {
                shock("params.shock", &p.shock)?;
                if !(p.eps >= 0.0) {
                    return Err(config_error("params.eps", format!("must be nonnegative, got {}", p.eps)));
                }
                positive("params.spacing", p.spacing)?;
                positive("params.endpoint_tol", p.endpoint_tol)?;
            }
            Params::ProfileLimit(p) => {
                shock("params.shock", &p.shock)?;
                eps_list("params.eps_list", &p.eps_list)?;
                positive("params.half_length", p.half_length)?;
            }
            Params::Evans(p) => {
                shock("params.shock", &p.shock)?;
                if !(p.eps >= 0.0) {
                    return Err(config_error("params.eps", format!("must be nonnegative, got {}", p.eps)));
                }
                p.contour.validate().map_err(|e| config_error("params.contour", e.to_string()))?;
            }
            Params::Winding(p) => {
                shock("params.shock", &p.shock)?;
                if !(p.eps >= 0.0) {
                    return Err(config_error("params.eps", format!("must be nonnegative, got {}", p.eps)));
                }
                if let Some(c) = &p.contour {
                    c.validate().map_err(|e| config_error("params.contour", e.to_string()))?;
                }
            }
            Params::EvansLimit(p) => {
                shock("params.shock", &p.shock)?;
                eps_list("params.eps_list", &p.eps_list)?;
                p.contour.validate().map_err(|e| config_error("params.contour", e.to_string()))?;
                positive("params.lambda_ref", p.lambda_ref)?;
            }
            Params::CheckModel(p) => {
                positive("params.eps", p.eps)?;
                positive("params.mu", p.mu)?;
                positive("params.nu", p.nu)?;
                positive("params.identity_step", p.identity_step)?;
            }
            Params::CheckGodunov(p) => {
                for (i, e) in p.eta_c.iter().enumerate() {
                    if !(*e >= 0.0) {
                        return Err(config_error(format!("params.eta_c[{i}]"), "must be nonnegative"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Data produced by an experiment before anything is written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// File name and contents, in write order.
    pub files: Vec<(String, String)>,
    pub audits: Vec<Audit>,
    pub residuals: BTreeMap<String, f64>,
    pub observations: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub passed: bool,
    pub audits: Vec<Audit>,
    pub residuals: BTreeMap<String, f64>,
    pub observations: BTreeMap<String, String>,
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub outcome: Outcome,
    pub metadata: Metadata,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.metadata.passed
    }
}

fn build_shock(eos: &GammaLaw, s: &ShockParams) -> Result<ShockSetup<GammaLaw>> {
    rankine_hugoniot(eos, s.rho_minus, s.u_minus)
}

fn evans_problem(eos: &GammaLaw, s: &ShockParams, eps: f64) -> Result<EvansProblem<GammaLaw>> {
    let setup = build_shock(eos, s)?;
    let tol = if eps == 0.0 { 1e-8 } else { 1e-6 };
    let profile = profile_auto(&setup, s.mu_tilde, eps, 0.02, tol)?;
    EvansProblem::new(profile, EvansOptions::default())
}

fn audits_csv(audits: &[Audit]) -> String {
    let mut s = String::from("audit,value,threshold,passed\n");
    for a in audits {
        s.push_str(&format!("{},{:.9e},{},{}\n", a.name, a.value, a.threshold, a.passed));
    }
    s
}

fn simulate(eos: &GammaLaw, p: &SimulateParams) -> Result<Outcome> {
    let g = grid("params.grid", &p.grid)?;
    let mut q = p.initial.sample(&g);
    let opts = RunOptions {
        cfl: p.cfl,
        output_times: p.output_times.clone(),
        ..RunOptions::default()
    };
    let traj = match p.solver {
        Solver::Relaxation => {
            prepare_stress(&g, &mut q, p.mu_tilde);
            let sys = System1D {
                eos: *eos,
                eps: p.eps,
                mu_tilde: p.mu_tilde,
            };
            RelaxationSolver::new(sys, g).run(q, p.t_final, &opts)?
        }
        Solver::NavierStokes => {
            for c in &mut q {
                c[2] = 0.0;
            }
            NavierStokesSolver::new(*eos, p.mu_tilde, g)?.run(q, p.t_final, &opts)?
        }
    };
    let mut out = Outcome::default();
    let mut energy = String::from("t,energy,dissipated\n");
    for r in &traj.energy {
        energy.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", r.t, r.energy, r.dissipated));
    }
    out.residuals.insert("steps".into(), traj.steps as f64);
    if g.boundary == Boundary::Periodic && p.solver == Solver::Relaxation {
        let a = discrete_energy_audit(&traj, p.energy_tol)?;
        let e0 = traj.energy[0].energy.abs();
        out.audits.push(Audit::at_most(
            "energy_increase_per_step_relative",
            a.max_increase / e0,
            p.energy_tol,
        ));
    }
    out.files.push(("trajectory.csv".into(), traj.to_csv()));
    out.files.push(("energy.csv".into(), energy));
    Ok(out)
}

fn limit_study(eos: &GammaLaw, p: &LimitStudyParams) -> Result<Outcome> {
    let g = grid("params.grid", &p.grid)?;
    let q0 = p.initial.sample(&g);
    let opts = RunOptions {
        cfl: p.cfl,
        ..RunOptions::default()
    };
    let table = relaxation_limit_study(&q0, eos, p.mu_tilde, &g, p.t_final, &p.eps_list, &opts, p.reference)?;
    let mut csv = String::from("eps,l2_error,steps\n");
    for r in &table.rows {
        let err = r.l2_error.map(|e| format!("{e:.9e}")).unwrap_or_else(|| "nan".into());
        csv.push_str(&format!("{},{},{}\n", r.eps, err, r.steps));
    }
    let mut out = Outcome::default();
    for r in &table.rows {
        if let Some(f) = &r.failure {
            out.observations.push((format!("failure_eps_{}", r.eps), f.clone()));
        }
        if let Some(e) = r.l2_error {
            out.residuals.insert(format!("l2_error_eps_{}", r.eps), e);
        }
    }
    if p.reference == Reference::NavierStokes {
        out.audits.push(Audit::holds("l2_error_strictly_decreasing", table.strictly_decreasing()));
    }
    if g.boundary == Boundary::Periodic {
        out.audits.push(Audit::at_most(
            "energy_increase_per_step_relative",
            table.max_relative_energy_increase,
            p.energy_tol,
        ));
    }
    out.files.push(("limit.csv".into(), csv));
    Ok(out)
}

fn profile_audits(p: &ProfileSolution<GammaLaw>, tol: f64, out: &mut Outcome, tag: &str) {
    out.audits.push(Audit::at_most(&format!("{tag}endpoint_residual"), p.endpoint_residual, tol));
    let (dm, dc) = p.first_integral_defects();
    out.audits.push(Audit::at_most(&format!("{tag}first_integral_defect"), dm.max(dc), 1e-8));
}

fn profile(eos: &GammaLaw, p: &ProfileParams) -> Result<Outcome> {
    let setup = build_shock(eos, &p.shock)?;
    let sol = profile_auto(&setup, p.shock.mu_tilde, p.eps, p.spacing, p.endpoint_tol)?;
    let mut out = Outcome::default();
    out.residuals.insert("u_plus".into(), setup.u_plus);
    out.residuals.insert("rho_plus".into(), setup.rho_plus);
    out.residuals.insert("half_length".into(), sol.half_length);
    out.audits.push(Audit::holds("lax_shock", setup.is_lax()));
    profile_audits(&sol, p.endpoint_tol, &mut out, "");
    out.files.push(("profile.csv".into(), sol.to_csv()));
    Ok(out)
}

fn profile_limit(eos: &GammaLaw, p: &ProfileLimitParams) -> Result<Outcome> {
    let setup = build_shock(eos, &p.shock)?;
    let sols = p
        .eps_list
        .par_iter()
        .map(|&e| relaxation_profile(&setup, p.shock.mu_tilde, e, p.half_length, p.samples))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut csv = String::from("eps,newtonian_defect\n");
    let defects: Vec<f64> = sols.iter().map(|s| s.newtonian_defect()).collect();
    for (k, (s, d)) in sols.iter().zip(&defects).enumerate() {
        csv.push_str(&format!("{},{:.9e}\n", s.eps, d));
        profile_audits(s, 1e-6, &mut out, &format!("eps_{}_", s.eps));
        out.files.push((format!("profile_{k}.csv"), s.to_csv()));
    }
    for (k, w) in defects.windows(2).enumerate() {
        out.audits.push(Audit::within(
            &format!("newtonian_defect_ratio_{k}"),
            w[0] / w[1],
            p.ratio_band[0],
            p.ratio_band[1],
        ));
    }
    out.files.insert(0, ("profile_limit.csv".into(), csv));
    Ok(out)
}

fn evans(eos: &GammaLaw, p: &EvansParams) -> Result<Outcome> {
    let problem = evans_problem(eos, &p.shock, p.eps)?;
    let lambdas: Vec<_> = if p.lambdas.is_empty() {
        (0..p.samples).map(|k| p.contour.point(k as f64 / p.samples as f64)).collect()
    } else {
        p.lambdas.iter().map(|l| Complex::new(l[0], l[1])).collect()
    };
    let values = lambdas
        .par_iter()
        .map(|&l| problem.evaluate(l))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.audits.push(Audit::holds(
        "evans_values_finite",
        values.iter().all(|v| v.d.re.is_finite() && v.d.im.is_finite()),
    ));
    out.residuals.insert("working_margin".into(), problem.working_margin()?);
    out.files.push(("evans.csv".into(), samples_csv(&values)));
    Ok(out)
}

fn winding(eos: &GammaLaw, p: &WindingParams) -> Result<Outcome> {
    let problem = evans_problem(eos, &p.shock, p.eps)?;
    let mut out = Outcome::default();
    let (contour, expected) = match p.contour {
        Some(c) => (c, p.expected),
        None => {
            let r0 = 0.6 * problem.branch_point_distance(2.0)?;
            let d0 = origin_value(&problem, r0)?;
            let scale = problem.evaluate(Complex::new(r0, 0.0))?.d.norm();
            out.audits.push(Audit::at_most("origin_value_relative", d0.norm() / scale, 1e-6));
            out.residuals.insert("origin_radius".into(), r0);
            (
                Contour::Circle {
                    center_re: 0.0,
                    center_im: 0.0,
                    radius: r0,
                },
                Some(p.expected.unwrap_or(1)),
            )
        }
    };
    let r = winding_number(&problem, &contour, &p.options)?;
    out.residuals.insert("winding".into(), r.winding as f64);
    out.residuals.insert("winding_raw".into(), r.raw);
    out.residuals.insert("min_modulus".into(), r.min_modulus);
    if let Some(e) = expected {
        out.audits.push(Audit::holds(&format!("winding_equals_{e}"), r.winding == e));
    }
    out.files.push(("winding.csv".into(), r.to_csv()));
    Ok(out)
}

fn evans_limit(eos: &GammaLaw, p: &EvansLimitParams) -> Result<Outcome> {
    let viscous = evans_problem(eos, &p.shock, 0.0)?;
    let relaxed = p
        .eps_list
        .par_iter()
        .map(|&e| evans_problem(eos, &p.shock, e))
        .collect::<Result<Vec<_>>>()?;
    let table = evans_convergence(&viscous, &relaxed, &p.contour, p.samples, p.lambda_ref)?;
    let mut out = Outcome::default();
    for r in &table.rows {
        out.residuals.insert(format!("sup_error_eps_{}", r.eps), r.sup_error);
    }
    out.audits.push(Audit::holds("sup_error_strictly_decreasing", table.strictly_decreasing()));
    out.files.push(("evans_limit.csv".into(), table.to_csv()));
    Ok(out)
}

fn check_model(eos: &GammaLaw, p: &ModelCheckParams, seed: u64) -> Result<Outcome> {
    Ok(Outcome {
        audits: audits::model_audits(eos, p, seed)?,
        ..Outcome::default()
    })
}

fn check_godunov(p: &GodunovCheckParams, seed: u64) -> Result<Outcome> {
    let mut g = audits::GodunovAudit::default();
    audits::galilean_audits(p, seed, &mut g)?;
    audits::relativistic_audits(p, seed, &mut g)?;
    let mut csv = String::from("chart,state,protopotential_error,flux_chain_error,flux_symmetry_defect\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    for (k, c) in g.chart_checks.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{:.6e}\n",
            c.chart,
            k % p.random_states.max(1),
            opt(c.protopotential_error),
            opt(c.flux_chain_error),
            c.flux_symmetry_defect
        ));
    }
    Ok(Outcome {
        files: vec![("galilean_charts.csv".into(), csv)],
        audits: g.audits,
        residuals: BTreeMap::new(),
        observations: g.observations,
    })
}

/// Computes an experiment without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let eos = config.eos.build()?;
    match &config.params {
        Params::Simulate(p) => simulate(&eos, p),
        Params::LimitStudy(p) => limit_study(&eos, p),
        Params::Profile(p) => profile(&eos, p),
        Params::ProfileLimit(p) => profile_limit(&eos, p),
        Params::Evans(p) => evans(&eos, p),
        Params::Winding(p) => winding(&eos, p),
        Params::EvansLimit(p) => evans_limit(&eos, p),
        Params::CheckModel(p) => check_model(&eos, p, config.seed),
        Params::CheckGodunov(p) => check_godunov(p, config.seed),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<FileEntry>) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    files.push(FileEntry {
        name: name.into(),
        bytes: contents.len(),
        sha256: hex::encode(Sha256::digest(contents.as_bytes())),
    });
    Ok(())
}

fn summary(meta: &Metadata) -> String {
    let mut s = format!(
        "{} {}\nexperiment: {:?}\nconfig sha256: {}\n\n",
        meta.tool, meta.tool_version, meta.config.kind, meta.config_sha256
    );
    if let Some(e) = &meta.error {
        s.push_str(&format!("FAILED: {e}\n"));
        return s;
    }
    for a in &meta.audits {
        let tag = if a.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{tag}  {:<48} {:>14.6e}  {}\n", a.name, a.value, a.threshold));
    }
    for (k, v) in &meta.residuals {
        s.push_str(&format!("      {k:<48} {v:>14.6e}\n"));
    }
    for (k, v) in &meta.observations {
        s.push_str(&format!("note  {k}: {v}\n"));
    }
    s.push_str(&format!("\nverdict: {}\n", if meta.passed { "all audits pass" } else { "audits failed" }));
    s
}

/// Runs an experiment and writes its artifacts to `out_dir`. A numerical
/// failure writes `diagnostic.txt` and `metadata.json` before returning the error.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let result = execute(config);
    let mut files = Vec::new();
    let mut meta = Metadata {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        config_sha256: config.hash(),
        passed: false,
        audits: vec![],
        residuals: BTreeMap::new(),
        observations: BTreeMap::new(),
        error: None,
        files: vec![],
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            meta.error = Some(e.to_string());
            write_file(out_dir, "diagnostic.txt", &format!("{e}\n{e:?}\n"), &mut files)?;
            write_file(out_dir, "summary.txt", &summary(&meta), &mut files)?;
            meta.files = files;
            fs::write(out_dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
            return Err(e);
        }
    };
    for (name, contents) in &outcome.files {
        write_file(out_dir, name, contents, &mut files)?;
    }
    write_file(out_dir, "audits.csv", &audits_csv(&outcome.audits), &mut files)?;
    meta.passed = outcome.audits.iter().all(|a| a.passed);
    meta.audits = outcome.audits.clone();
    meta.residuals = outcome.residuals.clone();
    meta.observations = outcome.observations.iter().cloned().collect();
    write_file(out_dir, "summary.txt", &summary(&meta), &mut files)?;
    meta.files = files;
    fs::write(out_dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        outcome,
        metadata: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonpositive_eps_is_rejected_with_its_path() {
        let text = r#"{"kind": "evans-limit", "params": {"eps_list": [0.1, 0.0]}}"#;
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "params.eps_list[1]"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"kind": "simulate", "params": {"eps": -1}}"#;
        assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config { .. })));
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = r#"{"kind": "profile", "params": {"shock": {"rho_minus": 1, "speed": 2}}}"#;
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "params.shock.speed"),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_json(r#"{"kind": "nope"}"#).is_err());
    }

    #[test]
    fn defaults_round_trip_through_the_resolved_config() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "check-model", "seed": 3}"#).unwrap();
        let text = cfg.canonical_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn check_model_passes_with_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "check-model"}"#).unwrap();
        let out = execute(&cfg).unwrap();
        for a in &out.audits {
            assert!(a.passed, "{a:?}");
        }
    }
}
