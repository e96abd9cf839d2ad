//! Three-level medium and its closed-form second-order susceptibilities.
//!
//! Levels are `g` (ground), `g'` and `f`. Frequencies are angular (rad/s) and
//! measured from the ground state, so `ω_ab = E_a - E_b` is antisymmetric and
//! `ω_aa = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
pub const HBAR: f64 = 1.054_571_817e-34;
pub const C0: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const K_B: f64 = 1.380_649e-23;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    G,
    GPrime,
    F,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::GPrime, Level::F];
    /// Levels that can be reached from the ground state.
    pub const EXCITED: [Level; 2] = [Level::GPrime, Level::F];

    fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::GPrime => 1,
            Level::F => 2,
        }
    }
}

/// Lifetime broadenings γ_ab (rad/s). Symmetric in the level pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linewidths {
    pub gprime_g: f64,
    pub f_g: f64,
    pub f_gprime: f64,
    /// Used only by the `a = b` terms of the susceptibility sum.
    pub gprime_gprime: f64,
    pub f_f: f64,
}

impl Linewidths {
    /// Population broadenings default to the matching ground-state coherence.
    pub fn new(gprime_g: f64, f_g: f64, f_gprime: f64) -> Self {
        Self {
            gprime_g,
            f_g,
            f_gprime,
            gprime_gprime: gprime_g,
            f_f: f_g,
        }
    }

    pub fn uniform(gamma: f64) -> Self {
        Self::new(gamma, gamma, gamma)
    }
}

/// Real transition dipole moments μ_ab = μ_ba (C·m, or dimensionless when
/// the constants run in normalized mode).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dipoles {
    pub g_gprime: f64,
    pub g_f: f64,
    pub gprime_f: f64,
    /// Permanent dipoles; zero for a purely off-diagonal dipole operator.
    pub gprime_gprime: f64,
    pub f_f: f64,
}

impl Dipoles {
    pub fn new(g_gprime: f64, g_f: f64, gprime_f: f64) -> Self {
        Self {
            g_gprime,
            g_f,
            gprime_f,
            gprime_gprime: 0.0,
            f_f: 0.0,
        }
    }

    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            g_gprime: lambda * self.g_gprime,
            g_f: lambda * self.g_f,
            gprime_f: lambda * self.gprime_f,
            gprime_gprime: lambda * self.gprime_gprime,
            f_f: lambda * self.f_f,
        }
    }
}

/// One loop `g → a → b → g` of the susceptibility sum with its dipole weight.
#[derive(Clone, Copy, Debug)]
struct Pathway {
    a: Level,
    b: Level,
    weight: f64,
}

#[derive(Clone, Debug)]
pub struct LevelScheme {
    omega_gprime_g: f64,
    omega_f_g: f64,
    gamma: [[f64; 3]; 3],
    mu: [[f64; 3]; 3],
    linewidths: Linewidths,
    dipoles: Dipoles,
    pathways: Vec<Pathway>,
}

impl LevelScheme {
    pub fn new(
        omega_gprime_g: f64,
        omega_f_g: f64,
        linewidths: Linewidths,
        dipoles: Dipoles,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(omega_gprime_g > 0.0 && omega_gprime_g.is_finite()) {
            problems.push(format!("omega_g'g must be positive, got {omega_gprime_g}"));
        }
        if !(omega_f_g > omega_gprime_g && omega_f_g.is_finite()) {
            problems.push(format!(
                "omega_fg must exceed omega_g'g, got {omega_f_g} <= {omega_gprime_g}"
            ));
        }
        let lw = linewidths;
        for (name, g) in [
            ("gamma_g'g", lw.gprime_g),
            ("gamma_fg", lw.f_g),
            ("gamma_fg'", lw.f_gprime),
            ("gamma_g'g'", lw.gprime_gprime),
            ("gamma_ff", lw.f_f),
        ] {
            if !(g > 0.0 && g.is_finite()) {
                problems.push(format!("{name} must be positive, got {g}"));
            }
        }
        let d = dipoles;
        for v in [d.g_gprime, d.g_f, d.gprime_f, d.gprime_gprime, d.f_f] {
            if !v.is_finite() {
                problems.push(format!("dipole moments must be finite, got {v}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let (g, gp, f) = (0, 1, 2);
        let mut gamma = [[0.0; 3]; 3];
        let set = |m: &mut [[f64; 3]; 3], i: usize, j: usize, v: f64| {
            m[i][j] = v;
            m[j][i] = v;
        };
        set(&mut gamma, gp, g, lw.gprime_g);
        set(&mut gamma, f, g, lw.f_g);
        set(&mut gamma, f, gp, lw.f_gprime);
        set(&mut gamma, gp, gp, lw.gprime_gprime);
        set(&mut gamma, f, f, lw.f_f);
        set(&mut gamma, g, g, lw.gprime_g);

        let mut mu = [[0.0; 3]; 3];
        set(&mut mu, g, gp, d.g_gprime);
        set(&mut mu, g, f, d.g_f);
        set(&mut mu, gp, f, d.gprime_f);
        set(&mut mu, gp, gp, d.gprime_gprime);
        set(&mut mu, f, f, d.f_f);

        let mut pathways = Vec::with_capacity(4);
        for a in Level::EXCITED {
            for b in Level::EXCITED {
                let weight =
                    mu[Level::G.index()][b.index()] * mu[b.index()][a.index()] * mu[a.index()][0];
                if weight != 0.0 {
                    pathways.push(Pathway { a, b, weight });
                }
            }
        }

        Ok(Self {
            omega_gprime_g,
            omega_f_g,
            gamma,
            mu,
            linewidths,
            dipoles,
            pathways,
        })
    }

    pub fn omega_gprime_g(&self) -> f64 {
        self.omega_gprime_g
    }

    pub fn omega_f_g(&self) -> f64 {
        self.omega_f_g
    }

    pub fn linewidths(&self) -> Linewidths {
        self.linewidths
    }

    pub fn dipoles(&self) -> Dipoles {
        self.dipoles
    }

    fn energy(&self, level: Level) -> f64 {
        match level {
            Level::G => 0.0,
            Level::GPrime => self.omega_gprime_g,
            Level::F => self.omega_f_g,
        }
    }

    /// Transition frequency ω_ab.
    pub fn omega(&self, a: Level, b: Level) -> f64 {
        self.energy(a) - self.energy(b)
    }

    pub fn gamma(&self, a: Level, b: Level) -> f64 {
        self.gamma[a.index()][b.index()]
    }

    pub fn mu(&self, a: Level, b: Level) -> f64 {
        self.mu[a.index()][b.index()]
    }

    /// Same scheme with every dipole moment multiplied by `lambda`.
    pub fn with_scaled_dipoles(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.omega_gprime_g,
            self.omega_f_g,
            self.linewidths,
            self.dipoles.scaled(lambda),
        )
    }

    /// All distinct non-zero |ω_ab| paired with their linewidth, for
    /// locating resonances.
    pub fn resonances(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, a) in Level::ALL.iter().enumerate() {
            for b in &Level::ALL[i..] {
                let w = self.omega(*a, *b).abs();
                let needed = w > 0.0 || self.has_permanent_dipoles();
                if needed && !out.iter().any(|&(x, _)| x == w) {
                    out.push((w, self.gamma(*a, *b)));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    fn has_permanent_dipoles(&self) -> bool {
        self.dipoles.gprime_gprime != 0.0 || self.dipoles.f_f != 0.0
    }

    /// Sum over pathways without the dimensional prefactor.
    pub(crate) fn chi2_bare(&self, r: SuperopIndex, s: SuperopIndex, w2: f64, w1: f64) -> Complex64 {
        let (sr, ss) = (r.sgn(), s.sgn());
        let total = w2 + w1;
        let g = Level::G;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.pathways {
            let (a, b) = (p.a, p.b);
            let i_ab = propagator((a, b), total, self);
            let terms = propagator((b, g), total, self) * propagator((a, g), w1, self)
                + ss * i_ab * propagator((g, b), w1, self)
                + sr * ss * propagator((g, a), total, self) * propagator((g, b), w1, self)
                + sr * i_ab * propagator((a, g), w1, self);
            acc += p.weight * terms;
        }
        acc * superop_prefactor(r, s)
    }
}

/// Superoperator index of a dipole interaction: `+` anticommutator, `-` commutator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuperopIndex {
    Plus,
    Minus,
}

impl SuperopIndex {
    pub fn sgn(self) -> f64 {
        match self {
            SuperopIndex::Plus => 1.0,
            SuperopIndex::Minus => -1.0,
        }
    }
}

/// 2^{-1-(sgn r + sgn s)/2}: exactly 1, 1/2, 1/2, 1/4.
pub fn superop_prefactor(r: SuperopIndex, s: SuperopIndex) -> f64 {
    use SuperopIndex::*;
    match (r, s) {
        (Minus, Minus) => 1.0,
        (Plus, Minus) | (Minus, Plus) => 0.5,
        (Plus, Plus) => 0.25,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Dimensional susceptibilities, SI prefactors throughout.
    Si,
    /// Unit coupling; the overall scale is fixed afterwards so that the
    /// largest |Γ| over the θ sweep equals `max_correction_ratio · N`.
    Normalized { max_correction_ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c0: f64,
    pub eps0: f64,
    /// Effective transverse beam area (m²).
    pub area: f64,
    /// Medium length along the propagation direction (m).
    pub length: f64,
    pub mode: Mode,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            c0: C0,
            eps0: EPS0,
            area: 1.0e-10,
            length: 10.0e-6,
            mode: Mode::Normalized {
                max_correction_ratio: 0.2,
            },
        }
    }
}

impl PhysicalConstants {
    /// C = 4π ε₀ A c₀.
    pub fn capital_c(&self) -> f64 {
        4.0 * PI * self.eps0 * self.area * self.c0
    }

    /// Factor multiplying the pathway sum in χ⁽²⁾.
    pub fn chi_prefactor(&self) -> f64 {
        match self.mode {
            Mode::Si => 1.0 / (self.eps0 * self.hbar * self.hbar),
            Mode::Normalized { .. } => 1.0,
        }
    }

    pub fn is_normalized(&self) -> bool {
        matches!(self.mode, Mode::Normalized { .. })
    }
}

/// I_ab(ω) = 1/(ω − ω_ab + iγ_ab).
#[inline]
pub fn propagator(pair: (Level, Level), omega: f64, scheme: &LevelScheme) -> Complex64 {
    let (a, b) = pair;
    Complex64::new(omega - scheme.omega(a, b), scheme.gamma(a, b)).inv()
}

/// χ⁽²⁾₊ᵣₛ(−(ω₂+ω₁); ω₂, ω₁).
pub fn chi2(
    r: SuperopIndex,
    s: SuperopIndex,
    omega2: f64,
    omega1: f64,
    scheme: &LevelScheme,
    consts: &PhysicalConstants,
) -> Complex64 {
    consts.chi_prefactor() * scheme.chi2_bare(r, s, omega2, omega1)
}

/// The causal susceptibility χ⁽²⁾₊₋₋.
pub fn chi2_classical(
    omega2: f64,
    omega1: f64,
    scheme: &LevelScheme,
    consts: &PhysicalConstants,
) -> Complex64 {
    chi2(SuperopIndex::Minus, SuperopIndex::Minus, omega2, omega1, scheme, consts)
}
