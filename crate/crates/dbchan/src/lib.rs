//! Geometry-based stochastic channel model (GBSM) toolkit for D-band radio
//! links.
//!
//! The crate covers the full loop of a measurement-driven wideband channel
//! model:
//!
//! * [`statdist`] - a ten-family distribution engine (sampling, CDF/quantile,
//!   maximum-likelihood fitting, Kolmogorov-Smirnov and Q-Q goodness of fit)
//!   under a single loc/scale/shape standardization convention.
//! * [`catalog`] - fitted per-location multipath statistics for seven indoor
//!   and outdoor sites (excess gain, excess delay, path count) together with
//!   the link-budget constants of the underlying measurement campaigns.
//! * [`synth`] - random wideband MIMO channel realizations: free-space path
//!   loss, path drawing, uniform-linear-array steering vectors, frequency
//!   response tensors and tap delay lines.
//! * [`metrics`] - power/delay normalization, power delay profiles, noise
//!   thresholding and Monte Carlo maximum excess delay (MED) estimation.
//! * [`pipeline`] - CSV ingest of multipath component records, the fitting
//!   pipeline that regenerates summary tables, report emission, and the CLI.
//!
//! Everything stochastic is driven by one 64-bit seed through counter-derived
//! substreams (see [`rng`]), so results are reproducible bit for bit no
//! matter how many worker threads are in play.

pub mod catalog;
pub mod metrics;
pub mod pipeline;
pub mod rng;
mod special;
pub mod statdist;
pub mod synth;
