//! Scenario files: flat TOML sections with typed keys.
//!
//! Frequencies ending in `_thz` are ordinary frequencies ν = ω/2π in THz;
//! linewidths use the same convention. Dipoles are in debye in SI mode and
//! dimensionless in normalized mode.
//!
//! A file may start from a shipped preset with `preset = "<name>"`; its own
//! keys then override the preset's key by key. Environment variables
//! `EOS_<SECTION>__<KEY>` (for example `EOS_PROBE__NU_C_THZ=260`) override
//! both. Values are parsed as TOML and fall back to plain strings.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{Dipoles, LevelScheme, Linewidths, Mode, PhysicalConstants};
use crate::moments::{CascadingModel, MomentEngine, OccupancyTable, ThzState};
use crate::probe::{theta_grid, EnvelopeShape, ProbeSpectrum};
use crate::statistics::ReconstructionOptions;
use crate::windows::{Context, GridSpec, Tolerances};

/// 2π · 10¹² rad/s.
pub const THZ: f64 = 2.0 * PI * 1e12;
pub const DEBYE: f64 = 3.335_640_951_981_52e-30;
pub const ENV_PREFIX: &str = "EOS_";

pub const PRESETS: [(&str, &str); 2] = [
    ("fig3-resonant", include_str!("../presets/fig3-resonant.toml")),
    ("fig3b-offresonant", include_str!("../presets/fig3b-offresonant.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            Error::Validation(vec![format!(
                "unknown preset '{name}', expected one of: {}",
                preset_names().join(", ")
            )])
        })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    preset: Option<String>,
    #[serde(default)]
    levels: RawLevels,
    #[serde(default)]
    probe: RawProbe,
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    mode: RawMode,
    #[serde(default)]
    thz: RawThz,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevels {
    nu_gprime_g_thz: Option<f64>,
    nu_f_g_thz: Option<f64>,
    gamma_gprime_g_thz: Option<f64>,
    gamma_f_g_thz: Option<f64>,
    gamma_f_gprime_thz: Option<f64>,
    gamma_gprime_gprime_thz: Option<f64>,
    gamma_f_f_thz: Option<f64>,
    mu_g_gprime: Option<f64>,
    mu_g_f: Option<f64>,
    mu_gprime_f: Option<f64>,
    mu_gprime_gprime: Option<f64>,
    mu_f_f: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    shape: Option<EnvelopeShape>,
    nu_c_thz: Option<f64>,
    delta_nu_thz: Option<f64>,
    n_target: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    l_um: Option<f64>,
    a_um2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    kind: Option<ModeKind>,
    max_correction_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Si,
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Vacuum,
    Thermal,
    Occupancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CascadingKind {
    Microscopic,
    Macroscopic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Clustered,
    Uniform,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThz {
    state: Option<StateKind>,
    temperature_k: Option<f64>,
    occupancy_nu_thz: Option<Vec<f64>>,
    occupancy_nbar: Option<Vec<f64>>,
    cascading: Option<CascadingKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    theta_points: Option<usize>,
    theta_over_pi: Option<Vec<f64>>,
    omega_tilde_points: Option<usize>,
    distribution_theta_over_pi: Option<f64>,
    distribution_points: Option<usize>,
    distribution_span: Option<f64>,
    window_theta_over_pi: Option<f64>,
    window_grid: Option<GridKind>,
    window_points: Option<usize>,
    chi2_points: Option<usize>,
    field_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rel: Option<f64>,
    max_depth: Option<u32>,
    reconstruction_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Validated scenario with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub levels: LevelsConfig,
    pub probe: ProbeConfig,
    pub geometry: GeometryConfig,
    pub mode: ModeConfig,
    pub thz: ThzConfig,
    pub sweep: SweepConfig,
    pub tolerances: ToleranceConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelsConfig {
    pub nu_gprime_g_thz: f64,
    pub nu_f_g_thz: f64,
    pub gamma_gprime_g_thz: f64,
    pub gamma_f_g_thz: f64,
    pub gamma_f_gprime_thz: f64,
    pub gamma_gprime_gprime_thz: f64,
    pub gamma_f_f_thz: f64,
    pub mu_g_gprime: f64,
    pub mu_g_f: f64,
    pub mu_gprime_f: f64,
    pub mu_gprime_gprime: f64,
    pub mu_f_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub shape: EnvelopeShape,
    pub nu_c_thz: f64,
    pub delta_nu_thz: f64,
    pub n_target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryConfig {
    pub l_um: f64,
    pub a_um2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeConfig {
    pub kind: ModeKind,
    pub max_correction_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThzConfig {
    pub state: StateKind,
    pub temperature_k: Option<f64>,
    pub occupancy_nu_thz: Vec<f64>,
    pub occupancy_nbar: Vec<f64>,
    pub cascading: CascadingKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub theta_over_pi: Vec<f64>,
    pub omega_tilde_points: usize,
    pub distribution_theta_over_pi: f64,
    pub distribution_points: usize,
    pub distribution_span: f64,
    pub window_theta_over_pi: f64,
    pub window_grid: GridKind,
    pub window_points: usize,
    pub chi2_points: usize,
    pub field_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceConfig {
    pub rel: f64,
    pub max_depth: u32,
    pub reconstruction_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Reads `path`, resolving a `preset` key and applying `EOS_` variables
/// from the process environment.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_config(&text, std::env::vars())
}

pub fn load_preset(name: &str) -> Result<ScenarioConfig> {
    parse_config(preset_source(name)?, std::env::vars())
}

/// Parses config text with an explicit set of environment variables.
pub fn parse_config(
    text: &str,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<ScenarioConfig> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    if let Some(base) = table.get("preset").cloned() {
        let Value::String(name) = base else {
            return Err(Error::Parse("key 'preset' must be a string".into()));
        };
        let mut merged: Table = preset_source(&name)?
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(format!("preset {name}: {e}")))?;
        overlay(&mut merged, table);
        merged.insert("name".into(), Value::String(name));
        table = merged;
    }
    apply_env(&mut table, env)?;
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    resolve(raw)
}

fn overlay(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                for (kk, vv) in t {
                    b.insert(kk, vv);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_env(table: &mut Table, env: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut vars: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let rest = key[ENV_PREFIX.len()..].to_ascii_lowercase();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(Value::String(raw.clone()));
        match rest.split_once("__") {
            Some((section, field)) => {
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| Value::Table(Table::new()));
                let Value::Table(t) = entry else {
                    return Err(Error::Parse(format!("{key}: '{section}' is not a section")));
                };
                t.insert(field.to_string(), value);
            }
            None if rest == "name" => {
                table.insert(rest, value);
            }
            // other EOS_ variables are not config overrides
            None => {}
        }
    }
    Ok(())
}

struct Checker {
    problems: Vec<String>,
}

impl Checker {
    fn required<T>(&mut self, v: Option<T>, key: &str) -> Option<T> {
        if v.is_none() {
            self.problems.push(format!("missing required key {key}"));
        }
        v
    }

    fn positive(&mut self, v: Option<f64>, key: &str) -> f64 {
        match v {
            Some(x) if x > 0.0 && x.is_finite() => x,
            Some(x) => {
                self.problems.push(format!("{key} must be positive, got {x}"));
                f64::NAN
            }
            None => f64::NAN,
        }
    }

    fn count(&mut self, v: usize, key: &str) -> usize {
        if v == 0 {
            self.problems.push(format!("{key} must be at least 1"));
        }
        v
    }

    fn theta(&mut self, over_pi: f64, key: &str) -> f64 {
        let t = over_pi * PI;
        if !(t >= FRAC_PI_2 - 1e-12 && t <= 3.0 * FRAC_PI_2 + 1e-12) {
            self.problems
                .push(format!("{key} = {over_pi} lies outside [0.5, 1.5] (units of pi)"));
        }
        over_pi
    }
}

fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    let mut c = Checker { problems: Vec::new() };
    let l = raw.levels;
    let req = [
        (l.nu_gprime_g_thz, "levels.nu_gprime_g_thz"),
        (l.nu_f_g_thz, "levels.nu_f_g_thz"),
        (l.gamma_gprime_g_thz, "levels.gamma_gprime_g_thz"),
        (l.gamma_f_g_thz, "levels.gamma_f_g_thz"),
        (l.gamma_f_gprime_thz, "levels.gamma_f_gprime_thz"),
        (raw.probe.nu_c_thz, "probe.nu_c_thz"),
        (raw.probe.delta_nu_thz, "probe.delta_nu_thz"),
        (raw.probe.n_target, "probe.n_target"),
        (raw.geometry.l_um, "geometry.l_um"),
    ];
    for (v, k) in req {
        c.required(v, k);
    }
    let kind = c.required(raw.mode.kind, "mode.kind");

    let nu_gpg = c.positive(l.nu_gprime_g_thz, "levels.nu_gprime_g_thz");
    let nu_fg = c.positive(l.nu_f_g_thz, "levels.nu_f_g_thz");
    if nu_fg <= nu_gpg {
        c.problems.push(format!(
            "levels.nu_f_g_thz ({nu_fg}) must exceed levels.nu_gprime_g_thz ({nu_gpg})"
        ));
    }
    let g_gpg = c.positive(l.gamma_gprime_g_thz, "levels.gamma_gprime_g_thz");
    let g_fg = c.positive(l.gamma_f_g_thz, "levels.gamma_f_g_thz");
    let g_fgp = c.positive(l.gamma_f_gprime_thz, "levels.gamma_f_gprime_thz");
    let g_gpgp = c.positive(l.gamma_gprime_gprime_thz.or(Some(g_gpg)), "levels.gamma_gprime_gprime_thz");
    let g_ff = c.positive(l.gamma_f_f_thz.or(Some(g_fg)), "levels.gamma_f_f_thz");
    let mus = [
        (l.mu_g_gprime.unwrap_or(1.0), "levels.mu_g_gprime"),
        (l.mu_g_f.unwrap_or(1.0), "levels.mu_g_f"),
        (l.mu_gprime_f.unwrap_or(1.0), "levels.mu_gprime_f"),
        (l.mu_gprime_gprime.unwrap_or(0.0), "levels.mu_gprime_gprime"),
        (l.mu_f_f.unwrap_or(0.0), "levels.mu_f_f"),
    ];
    for (v, k) in mus {
        if !v.is_finite() {
            c.problems.push(format!("{k} must be finite"));
        }
    }

    let nu_c = c.positive(raw.probe.nu_c_thz, "probe.nu_c_thz");
    let dnu = c.positive(raw.probe.delta_nu_thz, "probe.delta_nu_thz");
    let n_target = c.positive(raw.probe.n_target, "probe.n_target");
    let l_um = c.positive(raw.geometry.l_um, "geometry.l_um");
    let a_um2 = c.positive(raw.geometry.a_um2.or(Some(100.0)), "geometry.a_um2");

    let ratio = raw.mode.max_correction_ratio;
    match (kind, ratio) {
        (Some(ModeKind::Normalized), None) => {
            c.problems.push("mode.max_correction_ratio is required in normalized mode".into())
        }
        (Some(ModeKind::Normalized), Some(r)) if !(r > 0.0 && r < 1.0) => c
            .problems
            .push(format!("mode.max_correction_ratio must lie in (0, 1), got {r}")),
        (Some(ModeKind::Si), Some(_)) => c
            .problems
            .push("mode.max_correction_ratio applies to normalized mode only".into()),
        _ => {}
    }

    let state = raw.thz.state.unwrap_or(StateKind::Vacuum);
    let temperature = raw.thz.temperature_k;
    match state {
        StateKind::Thermal => {
            let t = c.required(temperature, "thz.temperature_k");
            c.positive(t, "thz.temperature_k");
        }
        _ if temperature.is_some() => c
            .problems
            .push("thz.temperature_k applies to the thermal state only".into()),
        _ => {}
    }
    let occ_nu = raw.thz.occupancy_nu_thz.unwrap_or_default();
    let occ_nbar = raw.thz.occupancy_nbar.unwrap_or_default();
    if state == StateKind::Occupancy {
        if let Err(Error::Validation(p)) = OccupancyTable::new(
            occ_nu.iter().map(|v| v * THZ).collect(),
            occ_nbar.clone(),
        ) {
            c.problems.extend(p.into_iter().map(|s| format!("thz: {s}")));
        }
    } else if !occ_nu.is_empty() || !occ_nbar.is_empty() {
        c.problems
            .push("thz.occupancy_* keys apply to the occupancy state only".into());
    }

    let s = raw.sweep;
    // an explicit list replaces the evenly spaced grid
    let theta_over_pi = match s.theta_over_pi {
        Some(v) => v,
        None => {
            let n = c.count(s.theta_points.unwrap_or(201), "sweep.theta_points");
            theta_grid(n).into_iter().map(|t| t / PI).collect()
        }
    };
    if theta_over_pi.is_empty() {
        c.problems.push("the theta grid is empty".into());
    }
    for t in &theta_over_pi {
        c.theta(*t, "sweep.theta_over_pi");
    }
    let dist_theta = c.theta(
        s.distribution_theta_over_pi.unwrap_or(0.5),
        "sweep.distribution_theta_over_pi",
    );
    let win_theta = c.theta(s.window_theta_over_pi.unwrap_or(0.75), "sweep.window_theta_over_pi");
    let omega_tilde_points = c.count(s.omega_tilde_points.unwrap_or(31), "sweep.omega_tilde_points");
    let distribution_points = c.count(s.distribution_points.unwrap_or(4001), "sweep.distribution_points");
    let distribution_span = c.positive(s.distribution_span.or(Some(8.0)), "sweep.distribution_span");
    let window_points = c.count(s.window_points.unwrap_or(512), "sweep.window_points");
    let chi2_points = c.count(s.chi2_points.unwrap_or(256), "sweep.chi2_points");
    let field_points = c.count(s.field_points.unwrap_or(2001), "sweep.field_points");

    let rel = raw.tolerances.rel.unwrap_or(1e-8);
    if !(rel > 0.0 && rel < 1.0) {
        c.problems.push(format!("tolerances.rel must lie in (0, 1), got {rel}"));
    }
    let max_depth = raw.tolerances.max_depth.unwrap_or(40);
    if !(1..=60).contains(&max_depth) {
        c.problems
            .push(format!("tolerances.max_depth must lie in 1..=60, got {max_depth}"));
    }
    let threshold = c.positive(
        raw.tolerances.reconstruction_threshold.or(Some(0.05)),
        "tolerances.reconstruction_threshold",
    );

    if c.problems.is_empty() {
        // probe support needs the other probe keys to be sane first
        let shape = raw.probe.shape.unwrap_or(EnvelopeShape::Rectangular);
        if let Err(Error::Validation(p)) = ProbeSpectrum::new(shape, nu_c * THZ, dnu * THZ, 1.0) {
            c.problems.extend(p);
        }
    }
    if !c.problems.is_empty() {
        return Err(Error::Validation(c.problems));
    }

    Ok(ScenarioConfig {
        name: raw.name.or(raw.preset).unwrap_or_else(|| "custom".into()),
        levels: LevelsConfig {
            nu_gprime_g_thz: nu_gpg,
            nu_f_g_thz: nu_fg,
            gamma_gprime_g_thz: g_gpg,
            gamma_f_g_thz: g_fg,
            gamma_f_gprime_thz: g_fgp,
            gamma_gprime_gprime_thz: g_gpgp,
            gamma_f_f_thz: g_ff,
            mu_g_gprime: mus[0].0,
            mu_g_f: mus[1].0,
            mu_gprime_f: mus[2].0,
            mu_gprime_gprime: mus[3].0,
            mu_f_f: mus[4].0,
        },
        probe: ProbeConfig {
            shape: raw.probe.shape.unwrap_or(EnvelopeShape::Rectangular),
            nu_c_thz: nu_c,
            delta_nu_thz: dnu,
            n_target,
        },
        geometry: GeometryConfig { l_um, a_um2 },
        mode: ModeConfig {
            kind: kind.expect("checked above"),
            max_correction_ratio: ratio,
        },
        thz: ThzConfig {
            state,
            temperature_k: temperature,
            occupancy_nu_thz: occ_nu,
            occupancy_nbar: occ_nbar,
            cascading: raw.thz.cascading.unwrap_or(CascadingKind::Microscopic),
        },
        sweep: SweepConfig {
            theta_over_pi,
            omega_tilde_points,
            distribution_theta_over_pi: dist_theta,
            distribution_points,
            distribution_span,
            window_theta_over_pi: win_theta,
            window_grid: s.window_grid.unwrap_or(GridKind::Clustered),
            window_points,
            chi2_points,
            field_points,
        },
        tolerances: ToleranceConfig {
            rel,
            max_depth,
            reconstruction_threshold: threshold,
        },
        output: OutputConfig {
            dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        },
    })
}

impl ScenarioConfig {
    /// SHA-256 of the resolved config in canonical TOML form.
    pub fn hash(&self) -> String {
        let canon = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            area: self.geometry.a_um2 * 1e-12,
            length: self.geometry.l_um * 1e-6,
            mode: match self.mode.kind {
                ModeKind::Si => Mode::Si,
                ModeKind::Normalized => Mode::Normalized {
                    max_correction_ratio: self.mode.max_correction_ratio.unwrap_or(0.2),
                },
            },
            ..PhysicalConstants::default()
        }
    }

    pub fn scheme(&self) -> Result<LevelScheme> {
        let l = &self.levels;
        let unit = match self.mode.kind {
            ModeKind::Si => DEBYE,
            ModeKind::Normalized => 1.0,
        };
        LevelScheme::new(
            l.nu_gprime_g_thz * THZ,
            l.nu_f_g_thz * THZ,
            Linewidths {
                gprime_g: l.gamma_gprime_g_thz * THZ,
                f_g: l.gamma_f_g_thz * THZ,
                f_gprime: l.gamma_f_gprime_thz * THZ,
                gprime_gprime: l.gamma_gprime_gprime_thz * THZ,
                f_f: l.gamma_f_f_thz * THZ,
            },
            Dipoles {
                g_gprime: l.mu_g_gprime * unit,
                g_f: l.mu_g_f * unit,
                gprime_f: l.mu_gprime_f * unit,
                gprime_gprime: l.mu_gprime_gprime * unit,
                f_f: l.mu_f_f * unit,
            },
        )
    }

    pub fn probe(&self) -> Result<ProbeSpectrum> {
        let p = &self.probe;
        ProbeSpectrum::with_photon_number(
            p.shape,
            p.nu_c_thz * THZ,
            p.delta_nu_thz * THZ,
            p.n_target,
            &self.constants(),
        )
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.tolerances.rel,
            max_depth: self.tolerances.max_depth,
        }
    }

    pub fn context(&self) -> Result<Context> {
        Ok(Context::with_tolerances(
            self.scheme()?,
            self.probe()?,
            self.constants(),
            self.tolerances(),
        ))
    }

    pub fn thz_state(&self) -> Result<ThzState> {
        Ok(match self.thz.state {
            StateKind::Vacuum => ThzState::Vacuum,
            StateKind::Thermal => ThzState::Thermal {
                temperature: self.thz.temperature_k.unwrap_or(f64::NAN),
            },
            StateKind::Occupancy => ThzState::Occupancy(OccupancyTable::new(
                self.thz.occupancy_nu_thz.iter().map(|v| v * THZ).collect(),
                self.thz.occupancy_nbar.clone(),
            )?),
        })
    }

    pub fn cascading(&self) -> CascadingModel {
        match self.thz.cascading {
            CascadingKind::Microscopic => CascadingModel::Microscopic,
            CascadingKind::Macroscopic => CascadingModel::Macroscopic,
        }
    }

    /// θ sweep in radians.
    pub fn thetas(&self) -> Vec<f64> {
        self.sweep.theta_over_pi.iter().map(|t| t * PI).collect()
    }

    /// Detection centres ω̃ spanning [ω_c − Δω/4, ω_c + Δω/4], symmetric
    /// about ω_c.
    pub fn omega_tildes(&self) -> Vec<f64> {
        let wc = self.probe.nu_c_thz * THZ;
        let q = 0.25 * self.probe.delta_nu_thz * THZ;
        match self.sweep.omega_tilde_points {
            1 => vec![wc],
            n => (0..n)
                .map(|i| wc + q * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
                .collect(),
        }
    }

    pub fn window_grid(&self) -> GridSpec {
        match self.sweep.window_grid {
            GridKind::Clustered => GridSpec::Clustered {
                points: self.sweep.window_points,
            },
            GridKind::Uniform => GridSpec::Uniform {
                points: self.sweep.window_points,
            },
        }
    }

    pub fn reconstruction_options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            threshold: self.tolerances.reconstruction_threshold,
            field_points: self.sweep.field_points,
            ..ReconstructionOptions::default()
        }
    }

    /// Engine for the configured state, normalized over the configured θ
    /// sweep in normalized mode.
    pub fn engine(&self) -> Result<MomentEngine> {
        let mut e = MomentEngine::new(self.context()?, self.thz_state()?)?
            .with_cascading_model(self.cascading());
        e.normalize_over(&self.thetas())?;
        Ok(e)
    }
}
