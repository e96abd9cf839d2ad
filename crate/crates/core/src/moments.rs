//! Normally-ordered second moment Γ = Γ_I + Γ_II + Γ_III and related signals.
//!
//! With `D = P·m + P*·p` (and likewise for D_q, D_casc) the θ dependence of
//! every Ω-integrand is a trigonometric polynomial in P:
//!
//! ```text
//! |D|²  = |m|² + |p|² + 2 Re(P² m p*)
//! D·X   = P² m x_m + (m x_p + p x_m) + P*² p x_p
//! ```
//!
//! so fourteen θ-independent Ω-integrals give Γ(θ) exactly for every θ.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::K_B;
use crate::probe::{phase_factor, theta_grid, Sideband};
use crate::quadrature::{integrate, CVec, IntegrationSpec};
use crate::windows::{
    signed_resonances, window_set, Context, SpectralCut, WindowParts, RESONANCE_HALF_WIDTH,
    WINDOW_TERMS,
};

/// θ grid used for normalization when none is supplied.
pub const DEFAULT_NORMALIZATION_POINTS: usize = 1001;

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyTable {
    omega: Vec<f64>,
    nbar: Vec<f64>,
}

impl OccupancyTable {
    /// Samples n̄(Ω_k); linear in between and constant beyond the ends.
    pub fn new(omega: Vec<f64>, nbar: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if omega.is_empty() || omega.len() != nbar.len() {
            problems.push("occupancy table needs matching, non-empty columns".to_string());
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("occupancy frequencies must be strictly increasing".to_string());
        }
        if nbar.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
            problems.push("occupancies must be finite and non-negative".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self { omega, nbar })
    }

    pub fn at(&self, w: f64) -> f64 {
        let k = self.omega.partition_point(|&x| x <= w);
        if k == 0 {
            return self.nbar[0];
        }
        if k == self.omega.len() {
            return self.nbar[k - 1];
        }
        let (x0, x1) = (self.omega[k - 1], self.omega[k]);
        let t = (w - x0) / (x1 - x0);
        self.nbar[k - 1] * (1.0 - t) + self.nbar[k] * t
    }

    pub fn nodes(&self) -> &[f64] {
        &self.omega
    }
}

/// Stationary, zero-mean state of the THz field.
#[derive(Clone, Debug, PartialEq)]
pub enum ThzState {
    Vacuum,
    Thermal { temperature: f64 },
    Occupancy(OccupancyTable),
}

impl ThzState {
    pub fn occupancy(&self, big_omega: f64, hbar: f64) -> f64 {
        match self {
            ThzState::Vacuum => 0.0,
            ThzState::Thermal { temperature } => {
                let x = hbar * big_omega / (K_B * temperature);
                1.0 / x.exp_m1()
            }
            ThzState::Occupancy(t) => t.at(big_omega),
        }
    }

    /// Ω·(2n̄(Ω) + 1), finite as Ω → 0 for a thermal state.
    fn weighted_factor(&self, big_omega: f64, hbar: f64) -> f64 {
        match self {
            ThzState::Thermal { temperature } => {
                let x = hbar * big_omega / (2.0 * K_B * temperature);
                if x < 1e-8 {
                    2.0 * K_B * temperature / hbar
                } else {
                    big_omega / x.tanh()
                }
            }
            _ => big_omega * (2.0 * self.occupancy(big_omega, hbar) + 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ThzState::Thermal { temperature } if !(*temperature > 0.0 && temperature.is_finite()) => {
                Err(Error::Validation(vec![format!(
                    "temperature must be positive, got {temperature}"
                )]))
            }
            _ => Ok(()),
        }
    }
}

/// Which part of the cascading term enters Γ_III.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CascadingModel {
    /// Both the Re{D·D_casc} and the −2(c₀/L) Im{D·D_casc} terms.
    #[default]
    Microscopic,
    /// Only the Re{D·D_casc} term, as obtained from Maxwell's equations.
    Macroscopic,
}

/// θ-independent Ω-integrals, without the overall prefactor.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct MomentCoefficients {
    /// ∫Ω(2n̄+1)(|m|²+|p|²) and ∫Ω(2n̄+1) m p*.
    pub classical: [Complex64; 2],
    /// Ω-weighted and (2c₀/L)-weighted products for the P², 1, P*² harmonics.
    pub quantum_re: [Complex64; 3],
    pub quantum_im: [Complex64; 3],
    pub cascading_re: [Complex64; 3],
    pub cascading_im: [Complex64; 3],
}

fn harmonics(c: &[Complex64; 3], p: Complex64) -> Complex64 {
    let p2 = p * p;
    p2 * c[0] + c[1] + p2.conj() * c[2]
}

impl MomentCoefficients {
    pub fn gamma_i(&self, p: Complex64) -> f64 {
        self.classical[0].re + 2.0 * (p * p * self.classical[1]).re
    }

    pub fn gamma_ii(&self, p: Complex64) -> f64 {
        harmonics(&self.quantum_re, p).re - harmonics(&self.quantum_im, p).im
    }

    /// (macroscopic, microscopic) parts of Γ_III.
    pub fn gamma_iii_parts(&self, p: Complex64) -> (f64, f64) {
        (
            harmonics(&self.cascading_re, p).re,
            -harmonics(&self.cascading_im, p).im,
        )
    }

    fn from_vec(v: &CVec<14>) -> Self {
        let a = &v.0;
        Self {
            classical: [a[0], a[1]],
            quantum_re: [a[2], a[3], a[4]],
            quantum_im: [a[5], a[6], a[7]],
            cascading_re: [a[8], a[9], a[10]],
            cascading_im: [a[11], a[12], a[13]],
        }
    }
}

fn products(d: &WindowParts, x: &WindowParts) -> [Complex64; 3] {
    [d.m * x.m, d.m * x.p + d.p * x.m, d.p * x.p]
}

fn outer_integrand(
    ctx: &Context,
    thz: &ThzState,
    cut: Option<SpectralCut>,
    big_omega: f64,
) -> Result<CVec<14>> {
    let set = window_set(big_omega, ctx, cut)?;
    let d = set.classical;
    let t = thz.weighted_factor(big_omega, ctx.consts.hbar);
    let w_im = 2.0 * ctx.consts.c0 / ctx.consts.length;
    let mut out = [Complex64::new(0.0, 0.0); 14];
    out[0] = Complex64::new(t * (d.m.norm_sqr() + d.p.norm_sqr()), 0.0);
    out[1] = t * d.m * d.p.conj();
    let q = products(&d, &set.quantum);
    let c = products(&d, &set.cascading);
    for k in 0..3 {
        out[2 + k] = q[k] * big_omega;
        out[5 + k] = q[k] * w_im;
        out[8 + k] = c[k] * big_omega;
        out[11 + k] = c[k] * w_im;
    }
    Ok(CVec(out))
}

/// Ω points where the outer integrand changes rapidly: resonances of
/// Ω-only propagator arguments, resonances crossing the ω-domain edges,
/// and kinks introduced by a spectral cut.
fn outer_splits(ctx: &Context, thz: &ThzState, cut: Option<SpectralCut>) -> Vec<f64> {
    let (lo, hi) = ctx.probe.support();
    let top = ctx.omega_max();
    let res = signed_resonances(&ctx.scheme);
    let mut out = Vec::new();
    for t in &WINDOW_TERMS {
        // domain edges as e0 + c·Ω
        let mut edges = match t.side {
            Sideband::Minus => vec![(lo, 1.0), (hi, 0.0)],
            Sideband::Plus => vec![(lo, 0.0), (hi, -1.0)],
        };
        if let Some(c) = cut {
            edges.extend([(c.lo, 0.0), (c.hi, 0.0)]);
        }
        for form in [t.total(), t.omega1] {
            for &(w, g) in &res {
                let mut push = |centre: f64, den: f64| {
                    let half = RESONANCE_HALF_WIDTH * g / den.abs();
                    out.extend([centre - half, centre, centre + half]);
                };
                if form.omega == 0.0 {
                    if form.big != 0.0 {
                        push(w / form.big, form.big);
                    }
                } else {
                    for &(e0, c) in &edges {
                        let den = form.omega * c + form.big;
                        if den != 0.0 {
                            push((w - form.omega * e0) / den, den);
                        }
                    }
                }
            }
        }
    }
    if let Some(c) = cut {
        out.extend([c.lo - lo, hi - c.hi, c.hi - lo, hi - c.lo]);
    }
    if let ThzState::Occupancy(table) = thz {
        out.extend_from_slice(table.nodes());
    }
    out.retain(|&x| x > 0.0 && x < top);
    out.sort_by(f64::total_cmp);
    let min_gap = 1e-12 * top;
    out.dedup_by(|b, a| *b - *a < min_gap);
    out
}

/// Integrates the fourteen coefficients over Ω ∈ (0, Ω_max].
pub fn moment_coefficients(
    ctx: &Context,
    thz: &ThzState,
    cut: Option<SpectralCut>,
) -> Result<MomentCoefficients> {
    thz.validate()?;
    let mut failure: Option<Error> = None;
    let f = |w: f64| match outer_integrand(ctx, thz, cut, w) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            CVec([Complex64::new(0.0, 0.0); 14])
        }
    };
    let mut spec = IntegrationSpec::new(0.0, ctx.omega_max())
        .with_splits(outer_splits(ctx, thz, cut))
        .with_tolerances(ctx.tol.rel, 0.0)
        .with_scale_floor(1e-6);
    spec.max_depth = ctx.tol.max_depth;
    let est = integrate(f, &spec);
    if let Some(e) = failure {
        return Err(e);
    }
    let est = est?;
    if est.value.0.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(MomentCoefficients::default());
    }
    Ok(MomentCoefficients::from_vec(&est.value))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentBreakdown {
    pub theta: f64,
    pub gamma_i: f64,
    pub gamma_ii: f64,
    /// Γ_III under the engine's cascading model.
    pub gamma_iii: f64,
    pub gamma_iii_macroscopic: f64,
    pub gamma_iii_microscopic: f64,
    pub gamma_total: f64,
    pub shot_noise: f64,
    /// Overall factor multiplying the Ω-integrals: (Nω_pL/c₀)²ħ/C in SI
    /// mode, or the normalization constant.
    pub prefactor: f64,
    pub cascading: CascadingModel,
}

impl MomentBreakdown {
    /// |Γ_II| / (|Γ_I| + |Γ_II| + |Γ_III|).
    pub fn ratio_ii(&self) -> f64 {
        let g = self.gamma_i.abs() + self.gamma_ii.abs() + self.gamma_iii.abs();
        if g == 0.0 {
            0.0
        } else {
            self.gamma_ii.abs() / g
        }
    }

    /// ⟨S²⟩ = N + Γ.
    pub fn total_variance(&self) -> f64 {
        self.shot_noise + self.gamma_total
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCutPoint {
    pub omega_tilde: f64,
    pub gamma_classical: f64,
    pub gamma_full: f64,
}

/// Γ engine for one medium, probe and THz state.
#[derive(Clone, Debug)]
pub struct MomentEngine {
    ctx: Context,
    thz: ThzState,
    coeffs: MomentCoefficients,
    prefactor: f64,
    photon_number: f64,
    cascading: CascadingModel,
}

impl MomentEngine {
    /// Integrates the coefficients and fixes the prefactor. In normalized
    /// mode the reference sweep is a dense θ grid; see [`Self::normalize_over`].
    pub fn new(ctx: Context, thz: ThzState) -> Result<Self> {
        let coeffs = moment_coefficients(&ctx, &thz, None)?;
        Self::from_coefficients(ctx, thz, coeffs)
    }

    pub fn from_coefficients(ctx: Context, thz: ThzState, coeffs: MomentCoefficients) -> Result<Self> {
        let photon_number = ctx.probe.photon_number(&ctx.consts);
        let consts = &ctx.consts;
        let lead = photon_number * ctx.probe.mean_frequency() * consts.length / consts.c0;
        let mut engine = Self {
            prefactor: lead * lead * consts.hbar / consts.capital_c(),
            ctx,
            thz,
            coeffs,
            photon_number,
            cascading: CascadingModel::Microscopic,
        };
        if engine.ctx.consts.is_normalized() {
            engine.normalize_over(&theta_grid(DEFAULT_NORMALIZATION_POINTS))?;
        }
        Ok(engine)
    }

    pub fn with_cascading_model(mut self, model: CascadingModel) -> Self {
        self.cascading = model;
        self
    }

    /// In normalized mode, rescales so that max |Γ_total|/N over `thetas`
    /// equals the configured ratio. No-op in SI mode.
    pub fn normalize_over(&mut self, thetas: &[f64]) -> Result<()> {
        let crate::model::Mode::Normalized { max_correction_ratio } = self.ctx.consts.mode else {
            return Ok(());
        };
        let mut peak: f64 = 0.0;
        for &t in thetas {
            peak = peak.max(self.raw_total(phase_factor(t)?).abs());
        }
        self.prefactor = if peak > 0.0 {
            max_correction_ratio * self.photon_number / peak
        } else {
            0.0
        };
        Ok(())
    }

    fn raw_total(&self, p: Complex64) -> f64 {
        let (macro_, micro) = self.coeffs.gamma_iii_parts(p);
        let iii = match self.cascading {
            CascadingModel::Microscopic => macro_ + micro,
            CascadingModel::Macroscopic => macro_,
        };
        self.coeffs.gamma_i(p) + self.coeffs.gamma_ii(p) + iii
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn thz_state(&self) -> &ThzState {
        &self.thz
    }

    pub fn coefficients(&self) -> &MomentCoefficients {
        &self.coeffs
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn photon_number(&self) -> f64 {
        self.photon_number
    }

    /// Coupling implied by the prefactor, relative to unit dipoles in SI
    /// units: K = g²·(Nω_pL/c₀)²ħ/C.
    pub fn implied_coupling(&self) -> f64 {
        let c = &self.ctx.consts;
        let lead = self.photon_number * self.ctx.probe.mean_frequency() * c.length / c.c0;
        (self.prefactor / (lead * lead * c.hbar / c.capital_c())).sqrt()
    }

    pub fn breakdown(&self, theta: f64) -> Result<MomentBreakdown> {
        let p = phase_factor(theta)?;
        let k = self.prefactor;
        let gamma_i = k * self.coeffs.gamma_i(p);
        let gamma_ii = k * self.coeffs.gamma_ii(p);
        let (macro_, micro) = self.coeffs.gamma_iii_parts(p);
        let (macro_, micro) = (k * macro_, k * micro);
        let gamma_iii = match self.cascading {
            CascadingModel::Microscopic => macro_ + micro,
            CascadingModel::Macroscopic => macro_,
        };
        Ok(MomentBreakdown {
            theta,
            gamma_i,
            gamma_ii,
            gamma_iii,
            gamma_iii_macroscopic: macro_,
            gamma_iii_microscopic: micro,
            gamma_total: gamma_i + gamma_ii + gamma_iii,
            shot_noise: self.photon_number,
            prefactor: k,
            cascading: self.cascading,
        })
    }

    pub fn sweep(&self, thetas: &[f64]) -> Result<Vec<MomentBreakdown>> {
        thetas.iter().map(|&t| self.breakdown(t)).collect()
    }

    /// Γ at θ = π/2 with the detected frequency restricted to
    /// [ω̃ − Δω/4, ω̃ + Δω/4]; the prefactor is the unfiltered one.
    pub fn spectral_cut(&self, omega_tilde: f64) -> Result<SpectralCutPoint> {
        let probe = &self.ctx.probe;
        let q = probe.delta_omega() / 4.0;
        let (lo, hi) = (probe.omega_c() - q, probe.omega_c() + q);
        let slack = 1e-9 * probe.omega_c();
        if !(omega_tilde >= lo - slack && omega_tilde <= hi + slack) {
            return Err(Error::domain(format!(
                "omega_tilde = {omega_tilde:.6e} rad/s lies outside [{lo:.6e}, {hi:.6e}]"
            )));
        }
        let cut = SpectralCut::centred(omega_tilde, probe);
        let coeffs = moment_coefficients(&self.ctx, &self.thz, Some(cut))?;
        let cut_engine = Self {
            coeffs,
            ..self.clone()
        };
        let b = cut_engine.breakdown(std::f64::consts::FRAC_PI_2)?;
        Ok(SpectralCutPoint {
            omega_tilde,
            gamma_classical: b.gamma_i,
            gamma_full: b.gamma_total,
        })
    }

    pub fn spectral_sweep(&self, omega_tildes: &[f64]) -> Result<Vec<SpectralCutPoint>> {
        omega_tildes.par_iter().map(|&w| self.spectral_cut(w)).collect()
    }

    /// ⟨S⟩ = (Nω_pL/c₀)·g ∫ dΩ [A(Ω) D(Ω, θ) + c.c.] for a coherent THz
    /// amplitude A(Ω) on (0, Ω_max]. `breakpoints` mark features of A.
    pub fn mean_signal<A>(&self, amplitude: A, breakpoints: &[f64], theta: f64) -> Result<f64>
    where
        A: Fn(f64) -> Complex64,
    {
        let p = phase_factor(theta)?;
        let lead = (self.prefactor * self.ctx.consts.capital_c() / self.ctx.consts.hbar).sqrt();
        let mut failure: Option<Error> = None;
        let f = |w: f64| {
            let a = amplitude(w);
            if a == Complex64::new(0.0, 0.0) {
                return 0.0;
            }
            match window_set(w, &self.ctx, None) {
                Ok(s) => 2.0 * (a * s.classical.at(p)).re,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let mut splits = outer_splits(&self.ctx, &self.thz, None);
        splits.extend_from_slice(breakpoints);
        let spec = IntegrationSpec::new(0.0, self.ctx.omega_max())
            .with_splits(splits)
            .with_tolerances(self.ctx.tol.rel, 0.0);
        let est = integrate(f, &spec);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(lead * est?.value)
    }
}

/// Γ_I(θ) for one state.
pub fn gamma_i(theta: f64, ctx: &Context, thz: &ThzState) -> Result<f64> {
    Ok(MomentEngine::new(ctx.clone(), thz.clone())?.breakdown(theta)?.gamma_i)
}

/// Γ_II(θ); independent of the THz state.
pub fn gamma_ii(theta: f64, ctx: &Context) -> Result<f64> {
    Ok(MomentEngine::new(ctx.clone(), ThzState::Vacuum)?.breakdown(theta)?.gamma_ii)
}

/// Γ_III(θ) including the microscopic term; independent of the THz state.
pub fn gamma_iii(theta: f64, ctx: &Context) -> Result<f64> {
    Ok(MomentEngine::new(ctx.clone(), ThzState::Vacuum)?.breakdown(theta)?.gamma_iii)
}

pub fn gamma_total(theta: f64, ctx: &Context, thz: &ThzState) -> Result<MomentBreakdown> {
    MomentEngine::new(ctx.clone(), thz.clone())?.breakdown(theta)
}

pub fn gamma_spectral_cut(omega_tilde: f64, ctx: &Context) -> Result<SpectralCutPoint> {
    MomentEngine::new(ctx.clone(), ThzState::Vacuum)?.spectral_cut(omega_tilde)
}
