//! Quantum statistics of electro-optic sampling in a three-level χ⁽²⁾ medium.
//!
//! The crate evaluates the classical and quantum second-order
//! susceptibilities of a three-level medium, the detection windows through
//! which THz fluctuations enter a balanced ellipsometric signal, the
//! normally-ordered second moment Γ of that signal and its parts, and the
//! resulting signal statistics.

pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod moments;
pub mod probe;
pub mod quadrature;
pub mod statistics;
pub mod windows;

pub use config::{load_config, load_preset, parse_config, preset_names, ScenarioConfig};
pub use error::{Error, Result};
pub use io::{run, write_table, Command, CsvTable};
pub use model::{
    chi2, chi2_classical, propagator, superop_prefactor, Dipoles, Level, LevelScheme, Linewidths,
    Mode, PhysicalConstants, SuperopIndex,
};
pub use moments::{
    gamma_i, gamma_ii, gamma_iii, gamma_spectral_cut, gamma_total, CascadingModel,
    MomentBreakdown, MomentCoefficients, MomentEngine, OccupancyTable, SpectralCutPoint, ThzState,
};
pub use probe::{
    balanced_waveplate_angle, envelope, overlap_f, phase_factor, quadrature_phase, theta_grid,
    EllipsometryState, EnvelopeShape, ProbeSpectrum, Sideband,
};
pub use quadrature::{integrate, CVec, Estimate, IntegrationSpec, QuadratureError, Quantity};
pub use statistics::{
    default_signal_grid, distribution, e_norm, hermite_series, reconstruct_at_quarter_wave,
    reconstruct_thz, signal_grid, variance_contour, ContourPoint, DistributionCurve,
    ReconstructionOptions, ReconstructionResult, ValidityWarning,
};
pub use windows::{
    tabulate_windows, window_cascading, window_classical, window_quantum, window_set, Context,
    DetectionWindowTable, GridSpec, SpectralCut, Tolerances, WindowKind, WindowParts, WindowSet,
};
