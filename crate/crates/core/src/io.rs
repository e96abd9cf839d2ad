//! Sweep orchestration and CSV emission.
//!
//! Every value is written with 17 significant digits (`{:.16e}`), rows are
//! emitted in grid order and the header carries no timestamps, so the same
//! config always produces the same bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{ScenarioConfig, THZ};
use crate::error::{Error, Result};
use crate::model::{chi2, SuperopIndex};
use crate::probe::quadrature_phase;
use crate::statistics::{
    distribution, reconstruct_at_quarter_wave, signal_grid, variance_contour, ValidityWarning,
};
use crate::windows::tabulate_windows;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SweepTheta,
    SpectralFilter,
    Distribution,
    Contour,
    Reconstruct,
    Chi2Table,
    Windows,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SweepTheta,
        Command::SpectralFilter,
        Command::Distribution,
        Command::Contour,
        Command::Reconstruct,
        Command::Chi2Table,
        Command::Windows,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SweepTheta => "sweep-theta",
            Command::SpectralFilter => "spectral-filter",
            Command::Distribution => "distribution",
            Command::Contour => "contour",
            Command::Reconstruct => "reconstruct",
            Command::Chi2Table => "chi2-table",
            Command::Windows => "windows",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(vec![format!("unknown command '{s}'")]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub command: Command,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable {
    fn new(command: Command, columns: Vec<&'static str>) -> Self {
        Self {
            command,
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.command.name())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn render(&self, cfg: &ScenarioConfig) -> String {
        let t = &cfg.tolerances;
        let mut s = String::new();
        let _ = writeln!(s, "# eosq {}", self.command.name());
        let _ = writeln!(s, "# preset: {}", cfg.name);
        let _ = writeln!(s, "# config_sha256: {}", cfg.hash());
        let _ = writeln!(
            s,
            "# tolerances: rel={:e} max_depth={} reconstruction_threshold={:e}",
            t.rel, t.max_depth, t.reconstruction_threshold
        );
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn run(command: Command, cfg: &ScenarioConfig) -> Result<CsvTable> {
    match command {
        Command::SweepTheta => run_sweep_theta(cfg),
        Command::SpectralFilter => run_spectral_filter(cfg),
        Command::Distribution => run_distribution(cfg),
        Command::Contour => run_contour(cfg),
        Command::Reconstruct => run_reconstruct(cfg),
        Command::Chi2Table => chi2_table(cfg),
        Command::Windows => run_windows(cfg),
    }
}

/// Writes the table under `dir`, creating it if needed.
pub fn write_table(table: &CsvTable, cfg: &ScenarioConfig, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(table.file_name());
    std::fs::write(&path, table.render(cfg))?;
    Ok(path)
}

fn with_theta<T>(theta: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("theta = {theta}: {m}")),
        e => e,
    })
}

pub fn run_sweep_theta(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let engine = cfg.engine()?;
    let mut t = CsvTable::new(
        Command::SweepTheta,
        vec![
            "theta_rad",
            "theta_over_pi",
            "phi_rad",
            "gamma_i",
            "gamma_ii",
            "gamma_iii",
            "gamma_iii_macroscopic",
            "gamma_iii_microscopic",
            "gamma_total",
            "shot_noise",
            "total_over_n",
            "ratio_ii",
        ],
    );
    let mut peak: f64 = 0.0;
    for theta in cfg.thetas() {
        let b = with_theta(theta, engine.breakdown(theta))?;
        peak = peak.max((b.gamma_total / b.shot_noise).abs());
        t.rows.push(vec![
            theta,
            theta / PI,
            quadrature_phase(theta)?,
            b.gamma_i,
            b.gamma_ii,
            b.gamma_iii,
            b.gamma_iii_macroscopic,
            b.gamma_iii_microscopic,
            b.gamma_total,
            b.shot_noise,
            b.gamma_total / b.shot_noise,
            b.ratio_ii(),
        ]);
    }
    t.meta("prefactor", format_value(engine.prefactor()));
    t.meta("photon_number", format_value(engine.photon_number()));
    t.meta("max_abs_total_over_n", format_value(peak));
    Ok(t)
}

pub fn run_spectral_filter(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let engine = cfg.engine()?;
    let points = engine.spectral_sweep(&cfg.omega_tildes())?;
    let mut t = CsvTable::new(
        Command::SpectralFilter,
        vec![
            "nu_tilde_thz",
            "omega_tilde_rad_s",
            "gamma_classical",
            "gamma_full",
            "difference",
            "mirror_sum",
        ],
    );
    let diff: Vec<f64> = points.iter().map(|p| p.gamma_full - p.gamma_classical).collect();
    let n = points.len();
    for (i, p) in points.iter().enumerate() {
        t.rows.push(vec![
            p.omega_tilde / THZ,
            p.omega_tilde,
            p.gamma_classical,
            p.gamma_full,
            diff[i],
            // the grid is symmetric about ω_c, so n − 1 − i is the mirror point
            diff[i] + diff[n - 1 - i],
        ]);
    }
    t.meta("theta_rad", format_value(std::f64::consts::FRAC_PI_2));
    t.meta("window_half_width_thz", format_value(0.25 * cfg.probe.delta_nu_thz));
    Ok(t)
}

fn warning_text(w: &[ValidityWarning]) -> String {
    if w.is_empty() {
        return "none".into();
    }
    w.iter()
        .map(|w| match w {
            ValidityWarning::NotPerturbative { ratio } => {
                format!("|gamma|/N = {} is not perturbative", format_value(*ratio))
            }
            ValidityWarning::NegativeDensity { points, min_factor } => format!(
                "truncated series negative at {points} points (min factor {})",
                format_value(*min_factor)
            ),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn run_distribution(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let engine = cfg.engine()?;
    let theta = cfg.sweep.distribution_theta_over_pi * PI;
    let b = with_theta(theta, engine.breakdown(theta))?;
    let n = b.shot_noise;
    let grid = signal_grid(n, cfg.sweep.distribution_span, cfg.sweep.distribution_points);
    let curve = distribution(n, b.gamma_total, &grid)?.with_theta(theta);
    let shot = distribution(n, 0.0, &grid)?;
    let mut t = CsvTable::new(Command::Distribution, vec!["s", "density", "shot_noise_density"]);
    for i in 0..grid.len() {
        t.rows.push(vec![grid[i], curve.density[i], shot.density[i]]);
    }
    t.meta("theta_rad", format_value(theta));
    t.meta("shot_noise", format_value(n));
    t.meta("gamma", format_value(b.gamma_total));
    t.meta("warnings", warning_text(&curve.warnings));
    Ok(t)
}

pub fn run_contour(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let engine = cfg.engine()?;
    let pts = variance_contour(&engine, &cfg.thetas())?;
    let mut t = CsvTable::new(
        Command::Contour,
        vec!["phi_rad", "theta_rad", "radius_full", "radius_classical", "radius_shot"],
    );
    for p in pts {
        t.rows.push(vec![p.phi, p.theta, p.radius_full, p.radius_classical, p.radius_shot]);
    }
    t.meta("level", "one standard deviation, mirrored to phi + pi");
    Ok(t)
}

pub fn run_reconstruct(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let engine = cfg.engine()?;
    let (curve, rec) = reconstruct_at_quarter_wave(&engine, &cfg.reconstruction_options())?;
    let mut t = CsvTable::new(Command::Reconstruct, vec!["e_over_enorm", "density"]);
    for (e, d) in rec.field_grid.iter().zip(&rec.density) {
        t.rows.push(vec![*e, *d]);
    }
    t.meta("e_norm_v_per_m", format_value(rec.e_norm));
    t.meta("shot_noise", format_value(rec.shot_noise));
    t.meta("measured_gamma", format_value(curve.gamma));
    t.meta("variance_signal_units", format_value(rec.variance_signal_units));
    t.meta("variance_field_units", format_value(rec.variance_field_units));
    Ok(t)
}

/// χ⁽²⁾(−(Ω + ω_c); Ω, ω_c) for the three index pairs that enter the windows.
pub fn chi2_table(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let ctx = cfg.context()?;
    let wc = ctx.probe.omega_c();
    let top = ctx.omega_max();
    let n = cfg.sweep.chi2_points;
    let mut t = CsvTable::new(
        Command::Chi2Table,
        vec![
            "nu_thz",
            "omega_rad_s",
            "chi_mm_re",
            "chi_mm_im",
            "chi_pm_re",
            "chi_pm_im",
            "chi_mp_re",
            "chi_mp_im",
        ],
    );
    use SuperopIndex::{Minus as M, Plus as P};
    for k in 1..=n {
        let w = top * k as f64 / n as f64;
        let mut row = vec![w / THZ, w];
        for (r, s) in [(M, M), (P, M), (M, P)] {
            let c = chi2(r, s, w, wc, &ctx.scheme, &ctx.consts);
            row.extend([c.re, c.im]);
        }
        t.rows.push(row);
    }
    t.meta("omega_1_rad_s", format_value(wc));
    Ok(t)
}

pub fn run_windows(cfg: &ScenarioConfig) -> Result<CsvTable> {
    let ctx = cfg.context()?;
    let theta = cfg.sweep.window_theta_over_pi * PI;
    let w = with_theta(theta, tabulate_windows(theta, &ctx, &cfg.window_grid()))?;
    let mut t = CsvTable::new(
        Command::Windows,
        vec![
            "nu_thz",
            "omega_rad_s",
            "d_re",
            "d_im",
            "d_q_re",
            "d_q_im",
            "d_casc_re",
            "d_casc_im",
        ],
    );
    for i in 0..w.omega_grid.len() {
        let o = w.omega_grid[i];
        t.rows.push(vec![
            o / THZ,
            o,
            w.d[i].re,
            w.d[i].im,
            w.d_q[i].re,
            w.d_q[i].im,
            w.d_casc[i].re,
            w.d_casc[i].im,
        ]);
    }
    t.meta("theta_rad", format_value(theta));
    Ok(t)
}
