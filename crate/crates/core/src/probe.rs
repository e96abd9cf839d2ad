//! Coherent probe spectrum and ellipsometry geometry.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalConstants;
use crate::quadrature::{integrate, IntegrationSpec};

/// Slack allowed on the θ range before rejecting an angle, absorbing
/// rounding in callers that build grids from π.
const THETA_SLACK: f64 = 1e-12;

/// Gaussian amplitudes are cut off where they fall to this fraction of the peak.
pub const GAUSSIAN_CUTOFF: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeShape {
    Rectangular,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sideband {
    Plus,
    Minus,
}

impl Sideband {
    pub fn sgn(self) -> f64 {
        match self {
            Sideband::Plus => 1.0,
            Sideband::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpectrum {
    shape: EnvelopeShape,
    omega_c: f64,
    delta_omega: f64,
    amplitude_scale: f64,
    // unit-amplitude integrals ∫|e|² and ∫|e|²/ω
    energy_unit: f64,
    inverse_unit: f64,
}

impl ProbeSpectrum {
    /// `delta_omega` is the full width of the rectangular envelope, or the
    /// width of a rectangle with the same intensity variance for the
    /// Gaussian envelope (σ = Δω/√12).
    pub fn new(
        shape: EnvelopeShape,
        omega_c: f64,
        delta_omega: f64,
        amplitude_scale: f64,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(delta_omega > 0.0 && delta_omega.is_finite()) {
            problems.push(format!("probe width must be positive, got {delta_omega}"));
        }
        if !(amplitude_scale > 0.0 && amplitude_scale.is_finite()) {
            problems.push(format!("amplitude scale must be positive, got {amplitude_scale}"));
        }
        if problems.is_empty() {
            let half = half_support(shape, delta_omega);
            if !(omega_c - half > 0.0 && omega_c.is_finite()) {
                problems.push(format!(
                    "probe support must lie at positive frequencies: omega_c = {omega_c}, \
                     half-width = {half}"
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let mut probe = Self {
            shape,
            omega_c,
            delta_omega,
            amplitude_scale: 1.0,
            energy_unit: 0.0,
            inverse_unit: 0.0,
        };
        let (lo, hi) = probe.support();
        let spec = IntegrationSpec::new(lo, hi)
            .with_splits([omega_c])
            .with_tolerances(1e-13, 0.0);
        probe.energy_unit = integrate(|w| probe.amplitude(w).powi(2), &spec)?.value;
        probe.inverse_unit = integrate(|w| probe.amplitude(w).powi(2) / w, &spec)?.value;
        probe.amplitude_scale = amplitude_scale;
        Ok(probe)
    }

    /// Chooses the amplitude so that the photon number equals `n_target`.
    pub fn with_photon_number(
        shape: EnvelopeShape,
        omega_c: f64,
        delta_omega: f64,
        n_target: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        if !(n_target > 0.0 && n_target.is_finite()) {
            return Err(Error::Validation(vec![format!(
                "photon number must be positive, got {n_target}"
            )]));
        }
        let unit = Self::new(shape, omega_c, delta_omega, 1.0)?;
        let amp = (n_target * consts.hbar / (consts.capital_c() * unit.inverse_unit)).sqrt();
        Ok(Self {
            amplitude_scale: amp,
            ..unit
        })
    }

    pub fn shape(&self) -> EnvelopeShape {
        self.shape
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    /// Intensity standard deviation of the Gaussian envelope.
    pub fn sigma(&self) -> f64 {
        self.delta_omega / 12f64.sqrt()
    }

    /// Closed interval outside which the envelope is exactly zero.
    pub fn support(&self) -> (f64, f64) {
        let h = half_support(self.shape, self.delta_omega);
        (self.omega_c - h, self.omega_c + h)
    }

    /// Largest THz frequency at which the two sidebands still overlap.
    pub fn omega_max(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// Real envelope amplitude at ω.
    pub fn amplitude(&self, omega: f64) -> f64 {
        let (lo, hi) = self.support();
        if omega < lo || omega > hi {
            return 0.0;
        }
        match self.shape {
            EnvelopeShape::Rectangular => self.amplitude_scale,
            EnvelopeShape::Gaussian => {
                let s = self.sigma();
                let x = omega - self.omega_c;
                self.amplitude_scale * (-x * x / (4.0 * s * s)).exp()
            }
        }
    }

    /// ∫|E(ω)|² dω.
    pub fn energy(&self) -> f64 {
        self.amplitude_scale.powi(2) * self.energy_unit
    }

    /// N = C ∫ |E|²/(ħω) dω.
    pub fn photon_number(&self, consts: &PhysicalConstants) -> f64 {
        consts.capital_c() * self.amplitude_scale.powi(2) * self.inverse_unit / consts.hbar
    }

    /// ω_p = ∫|E|² / ∫|E|²/ω.
    pub fn mean_frequency(&self) -> f64 {
        self.energy_unit / self.inverse_unit
    }

    /// E*(ω) E(ω ± Ω) / ∫|E|², i.e. f± without the phase factor.
    pub(crate) fn correlation(&self, sign: Sideband, omega: f64, big_omega: f64) -> f64 {
        if big_omega.abs() >= self.omega_max() {
            return 0.0;
        }
        let other = omega + sign.sgn() * big_omega;
        self.amplitude(omega) * self.amplitude(other) / self.energy()
    }

    /// Interval of ω on which both E(ω) and E(ω ± Ω) can be non-zero.
    /// Empty when `lo >= hi`.
    pub fn overlap_domain(&self, sign: Sideband, big_omega: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        match sign {
            Sideband::Minus => (lo + big_omega, hi),
            Sideband::Plus => (lo, hi - big_omega),
        }
    }
}

fn half_support(shape: EnvelopeShape, delta_omega: f64) -> f64 {
    match shape {
        EnvelopeShape::Rectangular => 0.5 * delta_omega,
        EnvelopeShape::Gaussian => {
            let sigma = delta_omega / 12f64.sqrt();
            2.0 * sigma * (1.0 / GAUSSIAN_CUTOFF).ln().sqrt()
        }
    }
}

/// Coherent amplitude E_p,z(ω).
pub fn envelope(omega: f64, probe: &ProbeSpectrum) -> Complex64 {
    Complex64::new(probe.amplitude(omega), 0.0)
}

/// −cos θ, after checking θ ∈ [π/2, 3π/2] and clamping rounding excursions.
fn minus_cos(theta: f64) -> Result<f64> {
    if !(theta >= FRAC_PI_2 - THETA_SLACK && theta <= 3.0 * FRAC_PI_2 + THETA_SLACK) {
        return Err(Error::domain(format!(
            "theta = {theta} lies outside [pi/2, 3pi/2]"
        )));
    }
    Ok((-theta.cos()).clamp(0.0, 1.0))
}

/// P(θ) = √(−cos θ) + i√(1 + cos θ).
pub fn phase_factor(theta: f64) -> Result<Complex64> {
    let mc = minus_cos(theta)?;
    Ok(Complex64::new(mc.sqrt(), (1.0 - mc).sqrt()))
}

/// α = arccos(−cot²(θ/2))/4.
pub fn balanced_waveplate_angle(theta: f64) -> Result<f64> {
    let mc = minus_cos(theta)?;
    // cot²(θ/2) = (1 + cos θ)/(1 − cos θ)
    let cot2 = (1.0 - mc) / (1.0 + mc);
    Ok((-cot2).acos() / 4.0)
}

/// φ = arccos(√(−cos θ)) ∈ [0, π/2].
pub fn quadrature_phase(theta: f64) -> Result<f64> {
    let mc = minus_cos(theta)?;
    Ok(mc.sqrt().acos())
}

/// f±(ω, Ω, θ) = P(θ) E*(ω) E(ω ± Ω) / ∫|E|².
pub fn overlap_f(
    sign: Sideband,
    omega: f64,
    big_omega: f64,
    theta: f64,
    probe: &ProbeSpectrum,
) -> Result<Complex64> {
    Ok(phase_factor(theta)? * probe.correlation(sign, omega, big_omega))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsometryState {
    pub theta: f64,
    pub alpha: f64,
    pub p: Complex64,
    pub phi: f64,
}

impl EllipsometryState {
    pub fn new(theta: f64) -> Result<Self> {
        Ok(Self {
            theta,
            alpha: balanced_waveplate_angle(theta)?,
            p: phase_factor(theta)?,
            phi: quadrature_phase(theta)?,
        })
    }

    /// cos²(θ/2) + sin²(θ/2) cos 4α; zero for a balanced detector.
    pub fn balance_residual(&self) -> f64 {
        let h = 0.5 * self.theta;
        h.cos().powi(2) + h.sin().powi(2) * (4.0 * self.alpha).cos()
    }
}

/// Evenly spaced θ grid on [π/2, 3π/2] with both endpoints.
pub fn theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![PI],
        n => (0..n)
            .map(|i| FRAC_PI_2 + PI * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
