//! Channel models for molecular communication via diffusion with one point
//! transmitter and several fully absorbing spherical receivers.
//!
//! - [`siso`]: closed-form single-receiver hitting rate and fraction.
//! - [`recursive`]: discrete-time comprehensive recursion and its simplified
//!   approximation, for any number of receivers.
//! - [`closed_form`]: two-receiver series solution and its leading slice.
//! - [`montecarlo`]: Brownian particle simulator used as an independent oracle.
//! - [`metrics`]: RMS/max/correlation comparisons and separation-angle sweeps.

pub mod closed_form;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod montecarlo;
pub mod recursive;
pub mod scenarios;
pub mod siso;

pub use closed_form::{approx_pdf, build_series, roc_check, ClosedFormModel, SeriesTerm};
pub use curve::{csv_number, HittingCurve, TimeGrid};
pub use error::{Error, Result};
pub use geometry::{
    build_planar_2rx, half_eclipse_angle, no_eclipse_angle, PlanarSpec2Rx, Receiver, Topology, Vec3,
};
pub use metrics::{angle_sweep, compare, resample, CurveComparison, ModelKind};
pub use montecarlo::{simulate, HitRecord, SimConfig, SimOutcome};
pub use recursive::{approx_2rx, approx_nrx, recursive_2rx, recursive_nrx, siso_curve};
pub use siso::{siso_cdf, siso_pdf, SisoParams};
