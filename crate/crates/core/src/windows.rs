//! Detection windows D, D_q and D_casc as integrals over the probe band.
//!
//! Every window has the form `P(θ)·m(Ω) + P*(θ)·p(Ω)`, where `m` collects
//! the f₋ terms and `p` the conjugated f₊ terms. Both parts are independent of
//! θ, so they are computed once per Ω and combined with any phase factor.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LevelScheme, PhysicalConstants, SuperopIndex};
use crate::probe::{phase_factor, ProbeSpectrum, Sideband};
use crate::quadrature::{integrate, CVec, IntegrationSpec};

use SuperopIndex::{Minus as M, Plus as P};

/// Half-width, in linewidths, of the refined region around each resonance.
pub const RESONANCE_HALF_WIDTH: f64 = 10.0;

/// Inner ω-integrals run this much tighter than the requested tolerance so
/// that the outer Ω-integrals see a smooth integrand.
pub(crate) const INNER_TOL_FACTOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Classical,
    Quantum,
    Cascading,
}

impl WindowKind {
    pub const ALL: [WindowKind; 3] = [WindowKind::Classical, WindowKind::Quantum, WindowKind::Cascading];

    fn slot(self) -> usize {
        match self {
            WindowKind::Classical => 0,
            WindowKind::Quantum => 1,
            WindowKind::Cascading => 2,
        }
    }
}

/// Linear frequency form `omega·ω + big·Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lin {
    pub omega: f64,
    pub big: f64,
}

const fn lin(omega: f64, big: f64) -> Lin {
    Lin { omega, big }
}

impl Lin {
    #[inline]
    pub fn at(self, omega: f64, big_omega: f64) -> f64 {
        self.omega * omega + self.big * big_omega
    }

    fn plus(self, o: Lin) -> Lin {
        lin(self.omega + o.omega, self.big + o.big)
    }
}

/// One susceptibility χ₊ᵣₛ(−(ω₂+ω₁); ω₂, ω₁) inside a window integral.
/// Terms on the `Plus` side are weighted by f₊* and enter conjugated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowTerm {
    pub kind: WindowKind,
    pub side: Sideband,
    pub coef: f64,
    pub r: SuperopIndex,
    pub s: SuperopIndex,
    pub omega2: Lin,
    pub omega1: Lin,
}

impl WindowTerm {
    /// Frequency form of the output slot, ω₂ + ω₁.
    pub fn total(&self) -> Lin {
        self.omega2.plus(self.omega1)
    }
}

const fn term(
    kind: WindowKind,
    side: Sideband,
    coef: f64,
    r: SuperopIndex,
    s: SuperopIndex,
    omega2: Lin,
    omega1: Lin,
) -> WindowTerm {
    WindowTerm {
        kind,
        side,
        coef,
        r,
        s,
        omega2,
        omega1,
    }
}

pub const WINDOW_TERMS: [WindowTerm; 16] = {
    use Sideband::{Minus as Lo, Plus as Hi};
    use WindowKind::*;
    [
        term(Classical, Lo, 0.5, M, M, lin(0.0, 1.0), lin(1.0, -1.0)),
        term(Classical, Lo, 0.5, M, M, lin(1.0, -1.0), lin(0.0, 1.0)),
        term(Classical, Hi, -0.5, M, M, lin(0.0, -1.0), lin(1.0, 1.0)),
        term(Classical, Hi, -0.5, M, M, lin(1.0, 1.0), lin(0.0, -1.0)),
        term(Quantum, Hi, 1.0, P, M, lin(-1.0, 0.0), lin(1.0, 1.0)),
        term(Quantum, Hi, 1.0, M, P, lin(1.0, 1.0), lin(-1.0, 0.0)),
        term(Quantum, Hi, 1.0, P, M, lin(0.0, -1.0), lin(1.0, 1.0)),
        term(Quantum, Hi, 1.0, M, P, lin(1.0, 1.0), lin(0.0, -1.0)),
        term(Quantum, Lo, 1.0, P, M, lin(-1.0, 0.0), lin(1.0, -1.0)),
        term(Quantum, Lo, 1.0, M, P, lin(1.0, -1.0), lin(-1.0, 0.0)),
        term(Quantum, Lo, 1.0, P, M, lin(0.0, 1.0), lin(1.0, -1.0)),
        term(Quantum, Lo, 1.0, M, P, lin(1.0, -1.0), lin(0.0, 1.0)),
        term(Cascading, Hi, 0.5, M, M, lin(-1.0, 0.0), lin(1.0, 1.0)),
        term(Cascading, Hi, 0.5, M, M, lin(1.0, 1.0), lin(-1.0, 0.0)),
        term(Cascading, Lo, 0.5, M, M, lin(-1.0, 0.0), lin(1.0, -1.0)),
        term(Cascading, Lo, 0.5, M, M, lin(1.0, -1.0), lin(-1.0, 0.0)),
    ]
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            max_depth: 40,
        }
    }
}

/// Medium, probe and constants shared by every window and moment evaluation.
#[derive(Clone, Debug)]
pub struct Context {
    pub scheme: LevelScheme,
    pub probe: ProbeSpectrum,
    pub consts: PhysicalConstants,
    pub tol: Tolerances,
    chi_scale: f64,
}

impl Context {
    pub fn new(scheme: LevelScheme, probe: ProbeSpectrum, consts: PhysicalConstants) -> Self {
        Self::with_tolerances(scheme, probe, consts, Tolerances::default())
    }

    pub fn with_tolerances(
        scheme: LevelScheme,
        probe: ProbeSpectrum,
        consts: PhysicalConstants,
        tol: Tolerances,
    ) -> Self {
        let chi_scale = chi_scale(&scheme, &probe);
        Self {
            scheme,
            probe,
            consts,
            tol,
            chi_scale,
        }
    }

    /// Typical |χ₊₋₋| over the sampling band (without the dimensional prefactor).
    pub fn chi_scale(&self) -> f64 {
        self.chi_scale
    }

    pub fn omega_max(&self) -> f64 {
        self.probe.omega_max()
    }
}

fn chi_scale(scheme: &LevelScheme, probe: &ProbeSpectrum) -> f64 {
    let wc = probe.omega_c();
    let top = probe.omega_max();
    let mut pts: Vec<f64> = (1..=32).map(|k| top * k as f64 / 32.0).collect();
    if scheme.omega_gprime_g() < top {
        pts.push(scheme.omega_gprime_g());
    }
    pts.iter()
        .map(|&w| {
            let a = scheme.chi2_bare(M, M, w, wc - w).norm();
            let b = scheme.chi2_bare(M, M, wc - w, w).norm();
            a.max(b)
        })
        .fold(0.0, f64::max)
}

/// θ-independent parts of one window: `W(θ) = P(θ)·m + P*(θ)·p`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct WindowParts {
    pub m: Complex64,
    pub p: Complex64,
}

impl WindowParts {
    #[inline]
    pub fn at(&self, phase: Complex64) -> Complex64 {
        phase * self.m + phase.conj() * self.p
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            m: self.m * k,
            p: self.p * k,
        }
    }
}

/// All three windows at one Ω.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct WindowSet {
    pub big_omega: f64,
    pub classical: WindowParts,
    pub quantum: WindowParts,
    pub cascading: WindowParts,
}

impl WindowSet {
    pub fn get(&self, kind: WindowKind) -> WindowParts {
        match kind {
            WindowKind::Classical => self.classical,
            WindowKind::Quantum => self.quantum,
            WindowKind::Cascading => self.cascading,
        }
    }
}

/// Restriction of the detection-side frequency ω to `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCut {
    pub lo: f64,
    pub hi: f64,
}

impl SpectralCut {
    /// Window of width Δω/2 centred at `omega_tilde`.
    pub fn centred(omega_tilde: f64, probe: &ProbeSpectrum) -> Self {
        let q = probe.delta_omega() / 4.0;
        Self {
            lo: omega_tilde - q,
            hi: omega_tilde + q,
        }
    }
}

/// Transition frequencies ±ω_ab together with their linewidths.
pub(crate) fn signed_resonances(scheme: &LevelScheme) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (w, g) in scheme.resonances() {
        out.push((w, g));
        if w != 0.0 {
            out.push((-w, g));
        }
    }
    out
}

/// ω interval integrated for the given sideband, or `None` if empty.
pub(crate) fn inner_domain(
    probe: &ProbeSpectrum,
    side: Sideband,
    big_omega: f64,
    cut: Option<SpectralCut>,
) -> Option<(f64, f64)> {
    if big_omega >= probe.omega_max() {
        return None;
    }
    let (mut lo, mut hi) = probe.overlap_domain(side, big_omega);
    if let Some(c) = cut {
        lo = lo.max(c.lo);
        hi = hi.min(c.hi);
    }
    (lo < hi).then_some((lo, hi))
}

fn inner_splits(ctx: &Context, side: Sideband, big_omega: f64) -> Vec<f64> {
    let res = signed_resonances(&ctx.scheme);
    let mut out = vec![ctx.probe.omega_c(), ctx.probe.omega_c() - big_omega, ctx.probe.omega_c() + big_omega];
    let mut seen: Vec<Lin> = Vec::new();
    for t in WINDOW_TERMS.iter().filter(|t| t.side == side) {
        for form in [t.total(), t.omega1] {
            if form.omega == 0.0 || seen.contains(&form) {
                continue;
            }
            seen.push(form);
            for &(w, g) in &res {
                let centre = (w - form.big * big_omega) / form.omega;
                let half = RESONANCE_HALF_WIDTH * g / form.omega.abs();
                out.extend([centre - half, centre, centre + half]);
            }
        }
    }
    out
}

fn integrate_side(
    ctx: &Context,
    side: Sideband,
    big_omega: f64,
    cut: Option<SpectralCut>,
) -> Result<CVec<3>> {
    let Some((lo, hi)) = inner_domain(&ctx.probe, side, big_omega, cut) else {
        return Ok(CVec([Complex64::new(0.0, 0.0); 3]));
    };
    let terms: Vec<&WindowTerm> = WINDOW_TERMS.iter().filter(|t| t.side == side).collect();
    let scheme = &ctx.scheme;
    let probe = &ctx.probe;
    let integrand = |w: f64| {
        let e = probe.correlation(side, w, big_omega);
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        if e != 0.0 {
            for t in &terms {
                let chi = scheme.chi2_bare(t.r, t.s, t.omega2.at(w, big_omega), t.omega1.at(w, big_omega));
                acc[t.kind.slot()] += chi * (t.coef * e);
            }
        }
        CVec(acc)
    };
    let mut spec = IntegrationSpec::new(lo, hi)
        .with_splits(inner_splits(ctx, side, big_omega))
        .with_tolerances(ctx.tol.rel * INNER_TOL_FACTOR, ctx.tol.rel * 1e-6 * ctx.chi_scale)
        .with_scale_floor(1e-6);
    spec.max_depth = ctx.tol.max_depth;
    integrate(integrand, &spec)
        .map(|e| e.value)
        .map_err(|source| Error::Window {
            omega: big_omega,
            source,
        })
}

/// θ-independent parts of D, D_q and D_casc at Ω, optionally with the
/// detection-side frequency restricted to a spectral cut.
pub fn window_set(big_omega: f64, ctx: &Context, cut: Option<SpectralCut>) -> Result<WindowSet> {
    if !(big_omega > 0.0 && big_omega.is_finite()) {
        return Err(Error::domain(format!("Omega must be positive, got {big_omega}")));
    }
    let lo = integrate_side(ctx, Sideband::Minus, big_omega, cut)?;
    let hi = integrate_side(ctx, Sideband::Plus, big_omega, cut)?;
    let k = ctx.consts.chi_prefactor();
    let parts = |slot: usize| WindowParts {
        m: lo.0[slot] * k,
        p: hi.0[slot].conj() * k,
    };
    Ok(WindowSet {
        big_omega,
        classical: parts(0),
        quantum: parts(1),
        cascading: parts(2),
    })
}

fn window(kind: WindowKind, big_omega: f64, theta: f64, ctx: &Context) -> Result<Complex64> {
    let phase = phase_factor(theta)?;
    Ok(window_set(big_omega, ctx, None)?.get(kind).at(phase))
}

/// Classical window D(Ω, θ).
pub fn window_classical(big_omega: f64, theta: f64, ctx: &Context) -> Result<Complex64> {
    window(WindowKind::Classical, big_omega, theta, ctx)
}

/// Quantum-susceptibility window D_q(Ω, θ).
pub fn window_quantum(big_omega: f64, theta: f64, ctx: &Context) -> Result<Complex64> {
    window(WindowKind::Quantum, big_omega, theta, ctx)
}

/// Cascading window D_casc(Ω, θ).
pub fn window_cascading(big_omega: f64, theta: f64, ctx: &Context) -> Result<Complex64> {
    window(WindowKind::Cascading, big_omega, theta, ctx)
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// `points` values on (0, Ω_max], denser near Ω = 0 and around ω_g'g.
    Clustered { points: usize },
    Uniform { points: usize },
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Clustered { points: 512 }
    }
}

impl GridSpec {
    pub fn resolve(&self, ctx: &Context) -> Result<Vec<f64>> {
        let top = ctx.omega_max();
        let grid = match self {
            GridSpec::Uniform { points } => (1..=*points).map(|k| top * k as f64 / *points as f64).collect(),
            GridSpec::Clustered { points } => clustered_grid(
                *points,
                top,
                ctx.scheme.omega_gprime_g(),
                ctx.scheme.linewidths().gprime_g,
            ),
            GridSpec::Explicit(v) => v.clone(),
        };
        if grid.is_empty() {
            return Err(Error::domain("Omega grid is empty"));
        }
        if grid.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::domain("Omega grid values must be positive and finite"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("Omega grid must be strictly increasing"));
        }
        Ok(grid)
    }
}

/// Inverts a mixture of logarithmic, Lorentzian and uniform distributions.
fn clustered_grid(points: usize, top: f64, resonance: f64, width: f64) -> Vec<f64> {
    let eps = 1e-4 * top;
    let log_cdf = |x: f64| ((x + eps) / eps).ln() / ((top + eps) / eps).ln();
    let with_peak = resonance > 0.0 && resonance < top;
    let at = |x: f64| ((x - resonance) / width).atan();
    let peak_cdf = |x: f64| (at(x) - at(0.0)) / (at(top) - at(0.0));
    let cdf = |x: f64| {
        if with_peak {
            (log_cdf(x) + peak_cdf(x) + x / top) / 3.0
        } else {
            (log_cdf(x) + x / top) / 2.0
        }
    };
    (1..=points)
        .map(|k| {
            let u = k as f64 / points as f64;
            if k == points {
                return top;
            }
            let (mut a, mut b) = (0.0, top);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if cdf(mid) < u {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            b
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionWindowTable {
    pub theta: f64,
    pub omega_grid: Vec<f64>,
    pub d: Vec<Complex64>,
    pub d_q: Vec<Complex64>,
    pub d_casc: Vec<Complex64>,
    pub parts: Vec<WindowSet>,
    pub tolerances: Tolerances,
}

impl DetectionWindowTable {
    /// Same windows at a different waveplate phase, without re-integrating.
    pub fn at_theta(&self, theta: f64) -> Result<Self> {
        let phase = phase_factor(theta)?;
        Ok(Self {
            theta,
            d: self.parts.iter().map(|s| s.classical.at(phase)).collect(),
            d_q: self.parts.iter().map(|s| s.quantum.at(phase)).collect(),
            d_casc: self.parts.iter().map(|s| s.cascading.at(phase)).collect(),
            ..self.clone()
        })
    }
}

pub fn tabulate_windows(theta: f64, ctx: &Context, grid: &GridSpec) -> Result<DetectionWindowTable> {
    let phase = phase_factor(theta)?;
    let omega_grid = grid.resolve(ctx)?;
    let parts: Vec<WindowSet> = omega_grid
        .par_iter()
        .map(|&w| window_set(w, ctx, None))
        .collect::<Result<_>>()?;
    Ok(DetectionWindowTable {
        theta,
        d: parts.iter().map(|s| s.classical.at(phase)).collect(),
        d_q: parts.iter().map(|s| s.quantum.at(phase)).collect(),
        d_casc: parts.iter().map(|s| s.cascading.at(phase)).collect(),
        omega_grid,
        parts,
        tolerances: ctx.tol,
    })
}
