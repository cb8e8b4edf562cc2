//! Link-budget normalization, power delay profiles, noise-floor
//! thresholding, and maximum excess delay (MED) evaluation.
//!
//! Normalized power here means excess path gain: received power minus the
//! radiated power and receive antenna gain, plus the free-space loss at
//! the path's travel distance. A path whose only loss is free-space loss
//! normalizes to exactly 0 dB. The Monte Carlo MED procedure runs the
//! budget in reverse: drawn excess gains become absolute received powers
//! by charging spreading loss on each drawn delay, and only paths that
//! clear the noise threshold contribute to the excess-delay span.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{LocationProfile, Scenario, ScenarioStats};
use crate::synth::{
    draw_paths_indexed, fspl_db, PathSet, SynthError, SynthesisConfig, SPEED_OF_LIGHT_M_S,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("domain: {0}")]
    Domain(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// One measured multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcRecord {
    pub location: String,
    pub link_id: String,
    pub scenario: Scenario,
    pub distance_m: f64,
    pub delay_ns: f64,
    pub power_dbm: f64,
    pub aoa_deg: Option<f64>,
    pub aod_deg: Option<f64>,
}

/// Converts an absolute path delay in ns to travel distance in meters.
fn travel_distance_m(delay_ns: f64) -> f64 {
    SPEED_OF_LIGHT_M_S * (delay_ns * 1e-9)
}

/// Received power of a path under the profile's link budget: EIRP plus
/// receive gain, minus free-space loss at the travel distance, plus the
/// path's excess gain.
pub fn link_budget_power_dbm(
    profile: &LocationProfile,
    delay_ns: f64,
    excess_gain_db: f64,
    include_rx_gain: bool,
) -> Result<f64, MetricsError> {
    let fspl = fspl_db(travel_distance_m(delay_ns), profile.center_freq_hz)?;
    let rx = if include_rx_gain {
        profile.rx_gain_dbi
    } else {
        0.0
    };
    Ok((profile.eirp_dbm + rx) - fspl + excess_gain_db)
}

/// Excess path gain of a measured component: received power with the
/// link budget and free-space loss removed. Pure-FSPL paths map to 0 dB.
pub fn normalize_power(rec: &MpcRecord, profile: &LocationProfile) -> Result<f64, MetricsError> {
    if !(rec.delay_ns.is_finite() && rec.delay_ns > 0.0) {
        return Err(MetricsError::Domain(format!(
            "path delay must be positive to place it on the link budget, got {} ns",
            rec.delay_ns
        )));
    }
    if !rec.power_dbm.is_finite() {
        return Err(MetricsError::Domain(format!(
            "power must be finite, got {}",
            rec.power_dbm
        )));
    }
    let fspl = fspl_db(travel_distance_m(rec.delay_ns), profile.center_freq_hz)?;
    Ok((rec.power_dbm - (profile.eirp_dbm + profile.rx_gain_dbi)) + fspl)
}

/// Excess delays: each delay minus the group's first arrival, so the
/// earliest element maps to 0.
pub fn normalize_delay(delays_ns: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let Some(first) = delays_ns.iter().copied().reduce(f64::min) else {
        return Err(MetricsError::Usage(
            "cannot normalize an empty delay group".into(),
        ));
    };
    if !first.is_finite() {
        return Err(MetricsError::Domain("delays must be finite".into()));
    }
    Ok(delays_ns.iter().map(|d| d - first).collect())
}

/// Power delay profile points `(delay_ns, excess_gain_db)` for measured
/// records, sorted by delay.
pub fn pdp(
    records: &[MpcRecord],
    profile: &LocationProfile,
) -> Result<Vec<(f64, f64)>, MetricsError> {
    let mut points = records
        .iter()
        .map(|rec| Ok((rec.delay_ns, normalize_power(rec, profile)?)))
        .collect::<Result<Vec<_>, MetricsError>>()?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(points)
}

/// Power delay profile of a synthetic realization; drawn excess gains are
/// already normalized, so this only rescales delays to ns and sorts.
pub fn synthetic_pdp(ps: &PathSet) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = ps
        .paths
        .iter()
        .map(|p| (p.delay_s * 1e9, p.excess_gain_db))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points
}

/// Keeps paths whose absolute power is at or above the threshold,
/// preserving order. Entries are `(delay_ns, power_dbm)`.
pub fn apply_noise_floor(paths: &[(f64, f64)], threshold_dbm: f64) -> Vec<(f64, f64)> {
    paths
        .iter()
        .copied()
        .filter(|&(_, p)| p >= threshold_dbm)
        .collect()
}

/// Keeps paths within `range_db` of the strongest path, preserving order.
/// Used as an optional second filter after the noise floor.
pub fn apply_dynamic_range(paths: &[(f64, f64)], range_db: f64) -> Vec<(f64, f64)> {
    let Some(strongest) = paths.iter().map(|&(_, p)| p).reduce(f64::max) else {
        return Vec::new();
    };
    paths
        .iter()
        .copied()
        .filter(|&(_, p)| p >= strongest - range_db)
        .collect()
}

/// Maximum excess delay: last arrival minus first arrival, or `None` when
/// no paths survive.
pub fn med(delays_ns: &[f64]) -> Option<f64> {
    let first = delays_ns.iter().copied().reduce(f64::min)?;
    let last = delays_ns.iter().copied().reduce(f64::max)?;
    Some(last - first)
}

/// Behavior switches for [`monte_carlo_med_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedOptions {
    /// Absolute power threshold; defaults to the profile's noise floor
    /// plus margin.
    pub threshold_dbm: Option<f64>,
    /// Count receive antenna gain in the path budget (the measurement
    /// chain includes it).
    pub include_rx_gain: bool,
    /// Optional extra filter keeping paths within this range of the
    /// strongest path.
    pub dynamic_range_db: Option<f64>,
}

impl Default for MedOptions {
    fn default() -> Self {
        MedOptions {
            threshold_dbm: None,
            include_rx_gain: true,
            dynamic_range_db: None,
        }
    }
}

/// Monte Carlo MED results over a set of links.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedSummary {
    /// Arithmetic mean of `per_link_med_ns`.
    pub mean_med_ns: f64,
    /// Mean MED per link, for links with at least one surviving draw.
    /// Links whose draws all fell below the threshold are omitted.
    pub per_link_med_ns: Vec<f64>,
    /// Draws per link.
    pub n_draws: usize,
    /// Fraction of drawn paths that survived thresholding, over all links
    /// and draws.
    pub surviving_path_fraction: f64,
}

/// [`monte_carlo_med_with`] under default options.
pub fn monte_carlo_med(
    profile: &LocationProfile,
    stats: &ScenarioStats,
    cfg: &SynthesisConfig,
    link_distances_m: &[f64],
    n_draws: usize,
) -> Result<MedSummary, MetricsError> {
    monte_carlo_med_with(
        profile,
        stats,
        cfg,
        link_distances_m,
        n_draws,
        &MedOptions::default(),
    )
}

/// Draws `n_draws` realizations per link, converts each path to absolute
/// received power, drops paths below the noise threshold, and averages
/// the per-draw MED of the survivors.
///
/// The fitted gain distributions describe wave-object interaction losses
/// with spreading loss removed, so the budget reintroduces free-space
/// loss from the drawn delay: a path with excess delay `t` is charged
/// `fspl_db(c * t)` on top of the link budget. The first arrival carries
/// no excess delay and is budgeted at its full travel distance instead.
///
/// Realization `link_index * n_draws + draw` feeds each draw, so results
/// are independent of thread count and iteration order.
pub fn monte_carlo_med_with(
    profile: &LocationProfile,
    stats: &ScenarioStats,
    cfg: &SynthesisConfig,
    link_distances_m: &[f64],
    n_draws: usize,
    options: &MedOptions,
) -> Result<MedSummary, MetricsError> {
    if link_distances_m.is_empty() {
        return Err(MetricsError::Usage(
            "at least one link distance is required".into(),
        ));
    }
    if n_draws < 1 {
        return Err(MetricsError::Usage(
            "at least one draw per link is required".into(),
        ));
    }
    let threshold = options
        .threshold_dbm
        .unwrap_or_else(|| profile.noise_threshold_dbm());

    struct LinkOutcome {
        mean_med_ns: Option<f64>,
        surviving_paths: u64,
        drawn_paths: u64,
    }

    let outcomes = link_distances_m
        .par_iter()
        .enumerate()
        .map(|(link_index, &distance_m)| {
            let mut med_sum = 0.0;
            let mut draws_with_survivors = 0u64;
            let mut surviving_paths = 0u64;
            let mut drawn_paths = 0u64;
            let mut delays = Vec::new();
            let tau_first_ns = distance_m / SPEED_OF_LIGHT_M_S * 1e9;
            let rx = if options.include_rx_gain {
                profile.rx_gain_dbi
            } else {
                0.0
            };
            for draw in 0..n_draws {
                let realization = link_index as u64 * n_draws as u64 + draw as u64;
                let ps = draw_paths_indexed(profile, stats, cfg, distance_m, realization)?;
                let paths = ps
                    .paths
                    .iter()
                    .map(|p| {
                        let delay_ns = p.delay_s * 1e9;
                        let excess_ns = delay_ns - tau_first_ns;
                        let power = if excess_ns > 0.0 {
                            let fspl =
                                fspl_db(travel_distance_m(excess_ns), profile.center_freq_hz)?;
                            (profile.eirp_dbm + rx) - fspl + p.excess_gain_db
                        } else {
                            link_budget_power_dbm(
                                profile,
                                delay_ns,
                                p.excess_gain_db,
                                options.include_rx_gain,
                            )?
                        };
                        Ok((delay_ns, power))
                    })
                    .collect::<Result<Vec<_>, MetricsError>>()?;
                drawn_paths += paths.len() as u64;
                let mut alive = apply_noise_floor(&paths, threshold);
                if let Some(range_db) = options.dynamic_range_db {
                    alive = apply_dynamic_range(&alive, range_db);
                }
                surviving_paths += alive.len() as u64;
                delays.clear();
                delays.extend(alive.iter().map(|&(d, _)| d));
                if let Some(value) = med(&delays) {
                    med_sum += value;
                    draws_with_survivors += 1;
                }
            }
            Ok(LinkOutcome {
                mean_med_ns: (draws_with_survivors > 0)
                    .then(|| med_sum / draws_with_survivors as f64),
                surviving_paths,
                drawn_paths,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;

    let per_link_med_ns: Vec<f64> = outcomes.iter().filter_map(|o| o.mean_med_ns).collect();
    let mean_med_ns = if per_link_med_ns.is_empty() {
        f64::NAN
    } else {
        per_link_med_ns.iter().sum::<f64>() / per_link_med_ns.len() as f64
    };
    let drawn: u64 = outcomes.iter().map(|o| o.drawn_paths).sum();
    let surviving: u64 = outcomes.iter().map(|o| o.surviving_paths).sum();
    Ok(MedSummary {
        mean_med_ns,
        per_link_med_ns,
        n_draws,
        surviving_path_fraction: surviving as f64 / drawn as f64,
    })
}

/// Default link distances when no measured per-link set is supplied: the
/// catalog's measurement count spaced evenly across the profile's
/// measured distance range.
pub fn default_link_distances(profile: &LocationProfile, stats: &ScenarioStats) -> Vec<f64> {
    let (lo, hi) = profile.link_distance_range_m;
    let n = stats.measurements.max(1) as usize;
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
