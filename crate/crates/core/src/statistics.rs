//! Signal probability distributions, variance contours and Gaussian
//! deconvolution of the THz-field statistics.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::chi2_classical;
use crate::moments::{MomentBreakdown, MomentEngine};
use crate::probe::quadrature_phase;

/// Default number of signal grid points.
pub const DEFAULT_SIGNAL_POINTS: usize = 4001;
/// Default half-width of the signal grid in units of √N.
pub const DEFAULT_SIGNAL_SPAN: f64 = 8.0;
/// Default limit on |Γ_II + Γ_III| / Γ_I for a reconstruction.
pub const DEFAULT_RECONSTRUCTION_THRESHOLD: f64 = 0.05;

/// Ways in which the k = 2 truncation may be outside its range of validity.
/// The curve is still reported as evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValidityWarning {
    /// |Γ| ≥ N.
    NotPerturbative { ratio: f64 },
    /// 1 + (S² − N)Γ/(2N²) < 0 at `points` grid points.
    NegativeDensity { points: usize, min_factor: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionCurve {
    pub s_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub shot_noise: f64,
    pub gamma: f64,
    pub theta: Option<f64>,
    pub warnings: Vec<ValidityWarning>,
}

impl DistributionCurve {
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    /// Trapezoid ∫ S^k P(S) dS on the curve's grid.
    pub fn moment(&self, k: i32) -> f64 {
        trapezoid(&self.s_grid, |i| self.s_grid[i].powi(k) * self.density[i])
    }

    pub fn normalization(&self) -> f64 {
        self.moment(0)
    }

    pub fn is_valid(&self) -> bool {
        self.warnings.is_empty()
    }
}

fn trapezoid(x: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    (1..x.len())
        .map(|i| 0.5 * (x[i] - x[i - 1]) * (y(i) + y(i - 1)))
        .sum()
}

/// Uniform grid of `points` values over [−span·√N, span·√N].
pub fn signal_grid(shot_noise: f64, span: f64, points: usize) -> Vec<f64> {
    let h = span * shot_noise.sqrt();
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| -h + 2.0 * h * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn default_signal_grid(shot_noise: f64) -> Vec<f64> {
    signal_grid(shot_noise, DEFAULT_SIGNAL_SPAN, DEFAULT_SIGNAL_POINTS)
}

fn check_shot_noise(n: f64) -> Result<()> {
    if n > 0.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("shot noise must be positive, got {n}")))
    }
}

fn gaussian(s: f64, n: f64) -> f64 {
    (-s * s / (2.0 * n)).exp() / (2.0 * PI * n).sqrt()
}

/// P(S) = (2πN)^(−1/2) exp(−S²/2N) (1 + (S² − N)Γ/(2N²)).
pub fn distribution(shot_noise: f64, gamma: f64, s_grid: &[f64]) -> Result<DistributionCurve> {
    check_shot_noise(shot_noise)?;
    if !gamma.is_finite() {
        return Err(Error::domain(format!("gamma must be finite, got {gamma}")));
    }
    let n = shot_noise;
    let factors: Vec<f64> = s_grid
        .iter()
        .map(|&s| 1.0 + (s * s - n) * gamma / (2.0 * n * n))
        .collect();
    let density = s_grid
        .par_iter()
        .zip(&factors)
        .map(|(&s, &f)| gaussian(s, n) * f)
        .collect();
    let mut warnings = Vec::new();
    if gamma.abs() >= n {
        warnings.push(ValidityWarning::NotPerturbative { ratio: gamma / n });
    }
    let negative = factors.iter().filter(|&&f| f < 0.0).count();
    if negative > 0 {
        warnings.push(ValidityWarning::NegativeDensity {
            points: negative,
            min_factor: factors.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    Ok(DistributionCurve {
        s_grid: s_grid.to_vec(),
        density,
        shot_noise: n,
        gamma,
        theta: None,
        warnings,
    })
}

/// Σ_k H_k(S/√(2N)) ⟨:S^k:⟩ / ((2N)^(k/2) k!) times the shot-noise Gaussian.
///
/// The scaled terms t_k = H_k(x)/((2N)^(k/2) k!) obey
/// t_{k+1} = (2x t_k/√(2N) − 2 t_{k−1}/(2N))/(k+1), which never forms
/// H_k or k! on its own.
pub fn hermite_series(
    shot_noise: f64,
    normal_moments: &[f64],
    s_grid: &[f64],
) -> Result<DistributionCurve> {
    check_shot_noise(shot_noise)?;
    if normal_moments.first() != Some(&1.0) {
        return Err(Error::domain("normal-ordered moments must start with 1"));
    }
    let n = shot_noise;
    let r = (2.0 * n).sqrt();
    let density = s_grid
        .par_iter()
        .map(|&s| {
            let x = s / r;
            let (mut prev, mut cur) = (0.0, 1.0);
            let mut sum = normal_moments[0];
            for (k, &m) in normal_moments.iter().enumerate().skip(1) {
                let next = (2.0 * x * cur / r - 2.0 * prev / (2.0 * n)) / k as f64;
                prev = cur;
                cur = next;
                sum += cur * m;
            }
            gaussian(s, n) * sum
        })
        .collect::<Vec<f64>>();
    let mut warnings = Vec::new();
    let negative = density.iter().filter(|&&d| d < 0.0).count();
    if negative > 0 {
        warnings.push(ValidityWarning::NegativeDensity {
            points: negative,
            min_factor: s_grid
                .iter()
                .zip(&density)
                .map(|(&s, &d)| d / gaussian(s, n))
                .fold(f64::INFINITY, f64::min),
        });
    }
    Ok(DistributionCurve {
        s_grid: s_grid.to_vec(),
        density,
        shot_noise: n,
        gamma: normal_moments.get(2).copied().unwrap_or(0.0),
        theta: None,
        warnings,
    })
}

/// One-standard-deviation radii at quadrature phase `phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourPoint {
    pub phi: f64,
    pub theta: f64,
    pub radius_full: f64,
    pub radius_classical: f64,
    pub radius_shot: f64,
}

fn radius(variance: f64, theta: f64) -> Result<f64> {
    if variance >= 0.0 {
        Ok(variance.sqrt())
    } else {
        Err(Error::domain(format!(
            "negative signal variance {variance:.6e} at theta = {theta}"
        )))
    }
}

/// Polar contour √(N + Γ(θ)) against φ(θ). Each point is repeated at φ + π
/// since the zero-mean distribution is even in S. Sorted by φ.
pub fn variance_contour(engine: &MomentEngine, thetas: &[f64]) -> Result<Vec<ContourPoint>> {
    let mut out = Vec::with_capacity(2 * thetas.len());
    for &theta in thetas {
        let b = engine.breakdown(theta)?;
        let p = ContourPoint {
            phi: quadrature_phase(theta)?,
            theta,
            radius_full: radius(b.total_variance(), theta)?,
            radius_classical: radius(b.shot_noise + b.gamma_i, theta)?,
            radius_shot: b.shot_noise.sqrt(),
        };
        out.push(p);
        out.push(ContourPoint {
            phi: p.phi + PI,
            ..p
        });
    }
    out.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.theta.total_cmp(&b.theta)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionOptions {
    pub threshold: f64,
    pub field_points: usize,
    /// Half-width of the field grid in standard deviations.
    pub field_span: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_RECONSTRUCTION_THRESHOLD,
            field_points: 2001,
            field_span: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    /// Field values in units of E_norm.
    pub field_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub variance_signal_units: f64,
    /// Variance of E/E_norm.
    pub variance_field_units: f64,
    pub e_norm: f64,
    pub shot_noise: f64,
}

impl ReconstructionResult {
    /// Variance of the signal obtained by mapping the field back to signal
    /// units (S = N·E/E_norm) and convolving with the shot-noise Gaussian.
    pub fn reconvolved_variance(&self) -> f64 {
        self.shot_noise * self.shot_noise * self.variance_field_units + self.shot_noise
    }
}

/// E_norm = c₀/(L ω_p |χ₊₋₋|), with χ₊₋₋ the zero-THz-frequency value at
/// the probe's mean frequency, scaled by the engine's coupling.
pub fn e_norm(engine: &MomentEngine) -> f64 {
    let ctx = engine.context();
    let wp = ctx.probe.mean_frequency();
    let chi = 0.5
        * (chi2_classical(0.0, wp, &ctx.scheme, &ctx.consts)
            + chi2_classical(wp, 0.0, &ctx.scheme, &ctx.consts));
    ctx.consts.c0 / (ctx.consts.length * wp * engine.implied_coupling() * chi.norm())
}

/// Removes the shot-noise Gaussian from a measured Gaussian curve. The
/// quantum terms in `breakdown` decide whether that is legitimate.
pub fn reconstruct_thz(
    curve: &DistributionCurve,
    breakdown: &MomentBreakdown,
    e_norm: f64,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    let gi = breakdown.gamma_i;
    if !(gi > 0.0) {
        return Err(Error::Reconstruction {
            reason: format!("classical part of the variance is {gi:.6e}, nothing to deconvolve"),
            ratio: None,
        });
    }
    let ratio = (breakdown.gamma_ii + breakdown.gamma_iii).abs() / gi;
    if !(ratio <= opts.threshold) {
        return Err(Error::Reconstruction {
            reason: format!(
                "|Gamma_II + Gamma_III| / Gamma_I = {ratio:.6e} exceeds {:.3e}",
                opts.threshold
            ),
            ratio: Some(ratio),
        });
    }
    if !(e_norm > 0.0 && e_norm.is_finite()) {
        return Err(Error::domain(format!("E_norm must be positive, got {e_norm}")));
    }
    let n = curve.shot_noise;
    check_shot_noise(n)?;
    // (N + Γ) − N
    let variance = curve.gamma;
    if !(variance > 0.0) {
        return Err(Error::Reconstruction {
            reason: format!("measured excess variance is {variance:.6e}"),
            ratio: None,
        });
    }
    let var_field = variance / (n * n);
    let sd = var_field.sqrt();
    let field_grid = signal_grid(1.0, opts.field_span * sd, opts.field_points);
    let density = field_grid.iter().map(|&e| gaussian(e, var_field)).collect();
    Ok(ReconstructionResult {
        field_grid,
        density,
        variance_signal_units: variance,
        variance_field_units: var_field,
        e_norm,
        shot_noise: n,
    })
}

/// Full θ = π/2 pipeline: breakdown, measured curve on the default grid,
/// deconvolution.
pub fn reconstruct_at_quarter_wave(
    engine: &MomentEngine,
    opts: &ReconstructionOptions,
) -> Result<(DistributionCurve, ReconstructionResult)> {
    let b = engine.breakdown(FRAC_PI_2)?;
    let n = b.shot_noise;
    let curve = distribution(n, b.gamma_total, &default_signal_grid(n))?.with_theta(FRAC_PI_2);
    let rec = reconstruct_thz(&curve, &b, e_norm(engine), opts)?;
    Ok((curve, rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::CascadingModel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn breakdown(gi: f64, gii: f64, giii: f64, n: f64) -> MomentBreakdown {
        MomentBreakdown {
            theta: FRAC_PI_2,
            gamma_i: gi,
            gamma_ii: gii,
            gamma_iii: giii,
            gamma_iii_macroscopic: giii,
            gamma_iii_microscopic: 0.0,
            gamma_total: gi + gii + giii,
            shot_noise: n,
            prefactor: 1.0,
            cascading: CascadingModel::Macroscopic,
        }
    }

    #[test]
    fn zero_gamma_is_the_shot_noise_gaussian() {
        let n = 1e6;
        let grid = default_signal_grid(n);
        let c = distribution(n, 0.0, &grid).unwrap();
        for (s, d) in c.s_grid.iter().zip(&c.density) {
            assert_relative_eq!(*d, gaussian(*s, n), max_relative = 1e-15);
        }
        assert!(c.is_valid());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_signal_grid(4.0);
        assert_eq!(g.len(), 4001);
        assert_eq!(g[0], -16.0);
        assert_eq!(g[4000], 16.0);
        assert_eq!(g[2000], 0.0);
    }

    #[test]
    fn normalization_and_second_moment() {
        let n = 2.5e7;
        for gamma in [-0.2 * n, -1e3, 0.0, 0.05 * n, 0.2 * n] {
            let c = distribution(n, gamma, &default_signal_grid(n)).unwrap();
            assert!((c.normalization() - 1.0).abs() < 1e-8);
            assert!((c.moment(2) - (n + gamma)).abs() < 1e-8 * n);
            assert!(c.moment(1).abs() < 1e-8 * n.sqrt());
        }
    }

    #[test]
    fn large_gamma_warns_without_clipping() {
        let n = 100.0;
        let c = distribution(n, -1.5 * n, &default_signal_grid(n)).unwrap();
        assert!(c
            .warnings
            .iter()
            .any(|w| matches!(w, ValidityWarning::NotPerturbative { .. })));
        assert!(c
            .warnings
            .iter()
            .any(|w| matches!(w, ValidityWarning::NegativeDensity { .. })));
        assert!(c.density.iter().any(|&d| d < 0.0));
    }

    #[test]
    fn moderate_gamma_can_go_negative_in_the_far_tail() {
        // factor is 1 + Γ(S² − N)/2N², negative for S² > N(1 + 2N/|Γ|)
        let n = 1.0;
        let c = distribution(n, -0.5, &default_signal_grid(n)).unwrap();
        assert!(matches!(
            c.warnings.as_slice(),
            [ValidityWarning::NegativeDensity { .. }]
        ));
    }

    #[test]
    fn bad_shot_noise_is_rejected() {
        assert!(distribution(0.0, 0.0, &[0.0]).is_err());
        assert!(distribution(-1.0, 0.0, &[0.0]).is_err());
        assert!(hermite_series(0.0, &[1.0], &[0.0]).is_err());
        assert!(hermite_series(1.0, &[0.5], &[0.0]).is_err());
        assert!(hermite_series(1.0, &[], &[0.0]).is_err());
    }

    #[test]
    fn hermite_unit_moment_is_gaussian() {
        let n = 9.0;
        let grid = default_signal_grid(n);
        let h = hermite_series(n, &[1.0], &grid).unwrap();
        let d = distribution(n, 0.0, &grid).unwrap();
        assert_eq!(h.density, d.density);
    }

    #[test]
    fn hermite_second_order_matches_closed_form() {
        let n = 3.7e5;
        let gamma = 0.13 * n;
        let grid = signal_grid(n, 6.0, 2001);
        let h = hermite_series(n, &[1.0, 0.0, gamma], &grid).unwrap();
        let d = distribution(n, gamma, &grid).unwrap();
        for (a, b) in h.density.iter().zip(&d.density) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn hermite_first_moment_shifts_the_mean() {
        let n = 100.0;
        let m = 0.7;
        let h = hermite_series(n, &[1.0, m, 0.0], &default_signal_grid(n)).unwrap();
        assert!((h.moment(1) - m).abs() < 1e-10);
        assert!((h.normalization() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_high_order_stays_finite() {
        let n: f64 = 1e8;
        // even moments (0.1 N)^(k/2) up to k = 60
        let moments: Vec<f64> = (0..=60)
            .map(|k| if k % 2 == 0 { (0.1 * n).powi(k / 2) } else { 0.0 })
            .collect();
        let h = hermite_series(n, &moments, &signal_grid(n, 8.0, 101)).unwrap();
        assert!(h.density.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn reconstruction_round_trip() {
        let n = 4.0e6;
        let gi = 0.17 * n;
        let b = breakdown(gi, 1e-4 * gi, -2e-3 * gi, n);
        let curve = distribution(n, gi, &default_signal_grid(n)).unwrap();
        let r = reconstruct_thz(&curve, &b, 3.5e5, &ReconstructionOptions::default()).unwrap();
        assert_relative_eq!(r.variance_signal_units, gi, max_relative = 1e-12);
        assert_relative_eq!(r.variance_field_units, gi / (n * n), max_relative = 1e-12);
        assert_relative_eq!(r.reconvolved_variance(), n + gi, max_relative = 1e-12);
        let e = &r.field_grid;
        let norm = trapezoid(e, |i| r.density[i]);
        let var = trapezoid(e, |i| e[i] * e[i] * r.density[i]);
        assert!((norm - 1.0).abs() < 1e-9);
        assert_relative_eq!(var, r.variance_field_units, max_relative = 1e-8);
    }

    #[test]
    fn reconstruction_guards() {
        let n = 1e4;
        let curve = distribution(n, 0.0, &default_signal_grid(n)).unwrap();
        let opts = ReconstructionOptions::default();
        let err = reconstruct_thz(&curve, &breakdown(0.0, 0.0, 0.0, n), 1.0, &opts).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let curve = distribution(n, 100.0, &default_signal_grid(n)).unwrap();
        let err = reconstruct_thz(&curve, &breakdown(100.0, 3.0, 3.0, n), 1.0, &opts).unwrap_err();
        match err {
            Error::Reconstruction { ratio: Some(r), .. } => assert_relative_eq!(r, 0.06),
            e => panic!("unexpected {e:?}"),
        }
        assert!(reconstruct_thz(&curve, &breakdown(100.0, 2.0, 2.0, n), 1.0, &opts).is_ok());
    }

    proptest! {
        #[test]
        fn curves_are_normalized(log_n in 0.0f64..12.0, r in -0.5f64..0.5) {
            let n = 10f64.powf(log_n);
            let c = distribution(n, r * n, &default_signal_grid(n)).unwrap();
            prop_assert!((c.normalization() - 1.0).abs() < 1e-8);
            prop_assert!((c.moment(2) - n * (1.0 + r)).abs() < 1e-6 * n);
        }

        #[test]
        fn series_matches_closed_form(log_n in 0.0f64..12.0, r in -0.5f64..0.5) {
            let n = 10f64.powf(log_n);
            let grid = signal_grid(n, 6.0, 301);
            let h = hermite_series(n, &[1.0, 0.0, r * n], &grid).unwrap();
            let d = distribution(n, r * n, &grid).unwrap();
            // relative to the Gaussian envelope, since the density itself
            // may cross zero in the tails
            for ((s, a), b) in grid.iter().zip(&h.density).zip(&d.density) {
                prop_assert!((a - b).abs() <= 1e-12 * gaussian(*s, n) * (1.0 + (b / gaussian(*s, n)).abs()));
            }
        }

        #[test]
        fn deconvolution_recovers_variance(log_n in 2.0f64..12.0, r in 1e-3f64..0.5) {
            let n = 10f64.powf(log_n);
            let gi = r * n;
            let curve = distribution(n, gi, &signal_grid(n, 8.0, 11)).unwrap();
            let rec = reconstruct_thz(&curve, &breakdown(gi, 0.0, 0.0, n), 1.0,
                &ReconstructionOptions::default()).unwrap();
            prop_assert!((rec.reconvolved_variance() / (n + gi) - 1.0).abs() < 1e-9);
        }
    }
}
