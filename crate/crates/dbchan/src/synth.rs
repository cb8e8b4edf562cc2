//! Wideband MIMO channel synthesis from catalog statistics.
//!
//! A realization is drawn in two stages. `draw_paths` samples a `PathSet`
//! for one link: the number of paths, per-path excess delays (ns) and
//! excess gains (dB) from the catalog's fitted distributions, azimuth
//! angles per the configured angle model, and uniform random phases.
//! `frequency_response` then assembles the channel tensor
//!
//! ```text
//! H[k] = sum_l g_l(f_k) a_r(phi_l) a_t^H(theta_l) e^(-i(2 pi f_k tau_l + beta_l))
//! ```
//!
//! with `g_l(f) = 10^((-fspl_db(c tau_l, f) + excess_gain_db_l) / 20)` and
//! uniform-linear-array steering on both ends. `tap_delay_line` exports the
//! same per-path terms for time-domain link simulators.
//!
//! All randomness is derived from (seed, realization index, stream role)
//! counters, so every quantity is reproducible bit for bit regardless of
//! thread count, and changing for example the angle model cannot disturb
//! the delay draws.

use std::io::{Read, Write};

use ndarray::Array3;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::catalog::{LocationProfile, Scenario, ScenarioStats};
use crate::rng::substream;
use crate::statdist::{DistFamily, DistSpec};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

const TAU: f64 = std::f64::consts::TAU;

// Stream roles within one realization. Each role gets its own counter
// stream so the draws stay aligned when a config switch changes how many
// values another role consumes.
const ROLE_NOP: u64 = 0;
const ROLE_DELAY: u64 = 1;
const ROLE_GAIN: u64 = 2;
const ROLE_ANGLE_MEAN: u64 = 3;
const ROLE_SPREAD: u64 = 4;
const ROLE_ANGLE_OFFSET: u64 = 5;
const ROLE_PHASE: u64 = 6;
const ROLES_PER_REALIZATION: u64 = 8;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("domain: {0}")]
    Domain(String),
    #[error("parameter: {0}")]
    Parameter(String),
    #[error("cannot assemble a channel from an empty path set")]
    EmptyPathSet,
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Free-space path loss `20 log10(4 pi f d / c)` in dB.
pub fn fspl_db(distance_m: f64, freq_hz: f64) -> Result<f64, SynthError> {
    if !(distance_m.is_finite() && distance_m > 0.0 && freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(SynthError::Domain(format!(
            "fspl requires positive distance and frequency, got {distance_m} m at {freq_hz} Hz"
        )));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * freq_hz * distance_m / SPEED_OF_LIGHT_M_S).log10())
}

/// Reduces an angle to about [-pi, pi] with a Cody-Waite split of 2 pi, so
/// angles that differ by an exact multiple of 2 pi reduce to the same
/// float and steering vectors are exactly periodic.
fn wrap_angle(angle_rad: f64) -> f64 {
    const TAU_HI: f64 = f64::from_bits(0x401921FB50000000);
    const TAU_LO: f64 = TAU - TAU_HI;
    let k = (angle_rad / TAU).round();
    (angle_rad - k * TAU_HI) - k * TAU_LO
}

/// Uniform-linear-array steering vector: element `k` is
/// `amplitude * e^(-i 2 pi spacing k sin(angle))` for `k = 0..n`.
pub fn steering_vector(
    n: usize,
    spacing_wavelengths: f64,
    angle_rad: f64,
    amplitude: Complex64,
) -> Vec<Complex64> {
    let sin_angle = wrap_angle(angle_rad).sin();
    (0..n)
        .map(|k| {
            amplitude
                * Complex64::from_polar(1.0, -TAU * spacing_wavelengths * k as f64 * sin_angle)
        })
        .collect()
}

/// Antenna array geometry for both link ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing in wavelengths (half-wavelength by default).
    pub spacing_wavelengths: f64,
    /// Common element amplitude A_o.
    pub element_amplitude: Complex64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            n_tx: 1,
            n_rx: 1,
            spacing_wavelengths: 0.5,
            element_amplitude: Complex64::new(1.0, 0.0),
        }
    }
}

impl ArrayConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n_tx < 1 || self.n_rx < 1 {
            return Err(SynthError::Parameter(
                "array sizes must be at least 1".into(),
            ));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(SynthError::Parameter(format!(
                "element spacing must be positive, got {}",
                self.spacing_wavelengths
            )));
        }
        if !self.element_amplitude.re.is_finite() || !self.element_amplitude.im.is_finite() {
            return Err(SynthError::Parameter(
                "element amplitude must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// One multipath component of a realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    /// Absolute propagation delay in seconds.
    pub delay_s: f64,
    /// Gain relative to free-space loss at this delay, dB.
    pub excess_gain_db: f64,
    pub aod_rad: f64,
    pub aoa_rad: f64,
    pub phase_rad: f64,
}

/// A drawn channel realization before array/frequency expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub link_distance_m: f64,
    pub center_freq_hz: f64,
}

impl PathSet {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("path sets always serialize");
        text.push('\n');
        text
    }
}

/// Where the number of paths of a realization comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NopSource {
    Fixed(u32),
    /// Round the catalog's per-measurement mean.
    EmpiricalMean,
    /// Uniform integer in [min, max].
    Uniform {
        min: u32,
        max: u32,
    },
}

/// How azimuth angles are assigned to paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleModel {
    /// Independent uniform azimuth in [0, 2 pi) per path and side.
    UniformAzimuth,
    /// Gaussian per-path offsets around a mean direction; the offset
    /// standard deviation (radians) is drawn once per realization and side
    /// from LogNormal(shape, loc, scale). With no mean direction given,
    /// one is drawn uniformly per realization and side.
    LognormalSpread {
        shape: f64,
        loc: f64,
        scale: f64,
        mean_direction_rad: Option<f64>,
    },
}

/// Whether free-space loss tracks each frequency-grid point or is frozen
/// at the path set's center frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsplEval {
    PerFrequency,
    CenterFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Catalog keys this configuration was built for.
    pub location: String,
    pub scenario: Scenario,
    pub nop_source: NopSource,
    pub angle_model: AngleModel,
    /// Pin path 0 to the direct path (delay d/c, 0 dB excess gain) in LOS
    /// scenarios.
    pub pin_los_path: bool,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(location: impl Into<String>, scenario: Scenario, seed: u64) -> Self {
        SynthesisConfig {
            location: location.into(),
            scenario,
            nop_source: NopSource::EmpiricalMean,
            angle_model: AngleModel::UniformAzimuth,
            pin_los_path: true,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        match self.nop_source {
            NopSource::Fixed(l) if l < 1 => {
                return Err(SynthError::Parameter(
                    "fixed path count must be at least 1".into(),
                ));
            }
            NopSource::Uniform { min, max } if min > max => {
                return Err(SynthError::Parameter(format!(
                    "uniform path count range is empty: [{min}, {max}]"
                )));
            }
            _ => {}
        }
        if let AngleModel::LognormalSpread {
            shape,
            loc,
            scale,
            mean_direction_rad,
        } = self.angle_model
        {
            let params_ok = shape.is_finite()
                && shape > 0.0
                && scale.is_finite()
                && scale > 0.0
                && loc.is_finite()
                && loc >= 0.0;
            if !params_ok {
                return Err(SynthError::Parameter(
                    "angle spread parameters must be positive (loc nonnegative)".into(),
                ));
            }
            if let Some(mean) = mean_direction_rad {
                if !mean.is_finite() {
                    return Err(SynthError::Parameter(
                        "mean direction must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Draws realization 0; see [`draw_paths_indexed`].
pub fn draw_paths(
    profile: &LocationProfile,
    stats: &ScenarioStats,
    cfg: &SynthesisConfig,
    link_distance_m: f64,
) -> Result<PathSet, SynthError> {
    draw_paths_indexed(profile, stats, cfg, link_distance_m, 0)
}

/// Draws one channel realization for the given link.
///
/// `realization` indexes independent realizations under the same seed, so
/// Monte Carlo sweeps can generate them in any order or in parallel.
/// Distances outside the profile's measured range are accepted (the
/// statistics are simply extrapolated); callers who care should check
/// `profile.link_distance_range_m` themselves.
pub fn draw_paths_indexed(
    profile: &LocationProfile,
    stats: &ScenarioStats,
    cfg: &SynthesisConfig,
    link_distance_m: f64,
    realization: u64,
) -> Result<PathSet, SynthError> {
    cfg.validate()?;
    if !profile.name.eq_ignore_ascii_case(&cfg.location) || stats.scenario != cfg.scenario {
        return Err(SynthError::Parameter(format!(
            "config is for ({}, {}) but data is for ({}, {})",
            cfg.location, cfg.scenario, profile.name, stats.scenario
        )));
    }
    if !(link_distance_m.is_finite() && link_distance_m > 0.0) {
        return Err(SynthError::Domain(format!(
            "link distance must be positive, got {link_distance_m}"
        )));
    }

    let stream = |role: u64| substream(cfg.seed, realization * ROLES_PER_REALIZATION + role);

    let nop = match cfg.nop_source {
        NopSource::Fixed(l) => l,
        NopSource::EmpiricalMean => stats.nop.mean.round() as u32,
        NopSource::Uniform { min, max } => stream(ROLE_NOP).gen_range(min..=max),
    }
    .max(1) as usize;

    let tau_first = link_distance_m / SPEED_OF_LIGHT_M_S;
    let pinned = cfg.pin_los_path && stats.scenario == Scenario::Los;
    let drawn = nop - usize::from(pinned);

    let mut delays = Vec::with_capacity(nop);
    let mut gains = Vec::with_capacity(nop);
    if pinned {
        delays.push(tau_first);
        gains.push(0.0);
    }
    let mut delay_rng = stream(ROLE_DELAY);
    let mut gain_rng = stream(ROLE_GAIN);
    for _ in 0..drawn {
        delays.push(tau_first + 1e-9 * stats.ndd.draw(&mut delay_rng));
        gains.push(stats.npd.draw(&mut gain_rng));
    }

    let (aods, aoas) = draw_angles(cfg, nop, &stream)?;

    let mut phase_rng = stream(ROLE_PHASE);
    let paths = (0..nop)
        .map(|i| Path {
            delay_s: delays[i],
            excess_gain_db: gains[i],
            aod_rad: aods[i],
            aoa_rad: aoas[i],
            phase_rad: phase_rng.gen::<f64>() * TAU,
        })
        .collect();

    Ok(PathSet {
        paths,
        link_distance_m,
        center_freq_hz: profile.center_freq_hz,
    })
}

type AnglePair = (Vec<f64>, Vec<f64>);

fn draw_angles(
    cfg: &SynthesisConfig,
    nop: usize,
    stream: &impl Fn(u64) -> rand_chacha::ChaCha8Rng,
) -> Result<AnglePair, SynthError> {
    match cfg.angle_model {
        AngleModel::UniformAzimuth => {
            let mut rng = stream(ROLE_ANGLE_OFFSET);
            let aods = (0..nop).map(|_| rng.gen::<f64>() * TAU).collect();
            let aoas = (0..nop).map(|_| rng.gen::<f64>() * TAU).collect();
            Ok((aods, aoas))
        }
        AngleModel::LognormalSpread {
            shape,
            loc,
            scale,
            mean_direction_rad,
        } => {
            let spread_spec = DistSpec::new(DistFamily::LogNormal, &[shape], loc, scale)
                .map_err(|e| SynthError::Parameter(format!("angle spread spec: {e}")))?;
            let (mean_aod, mean_aoa) = match mean_direction_rad {
                Some(mean) => (mean, mean),
                None => {
                    let mut rng = stream(ROLE_ANGLE_MEAN);
                    (rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU)
                }
            };
            let mut spread_rng = stream(ROLE_SPREAD);
            let sd_aod = spread_spec.draw(&mut spread_rng);
            let sd_aoa = spread_spec.draw(&mut spread_rng);
            let mut rng = stream(ROLE_ANGLE_OFFSET);
            let mut offsets = |mean: f64, sd: f64| -> Vec<f64> {
                (0..nop)
                    .map(|_| mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect()
            };
            let aods = offsets(mean_aod, sd_aod);
            let aoas = offsets(mean_aoa, sd_aoa);
            Ok((aods, aoas))
        }
    }
}

/// Assembles the channel tensor `[n_freq, n_rx, n_tx]` over a frequency
/// grid.
pub fn frequency_response(
    ps: &PathSet,
    arr: &ArrayConfig,
    freq_grid_hz: &[f64],
    fspl_eval: FsplEval,
) -> Result<Array3<Complex64>, SynthError> {
    arr.validate()?;
    if ps.paths.is_empty() {
        return Err(SynthError::EmptyPathSet);
    }
    if freq_grid_hz.is_empty() {
        return Err(SynthError::Domain("frequency grid is empty".into()));
    }

    let mut h = Array3::<Complex64>::zeros((freq_grid_hz.len(), arr.n_rx, arr.n_tx));
    for path in &ps.paths {
        let a_rx = steering_vector(
            arr.n_rx,
            arr.spacing_wavelengths,
            path.aoa_rad,
            arr.element_amplitude,
        );
        let a_tx = steering_vector(
            arr.n_tx,
            arr.spacing_wavelengths,
            path.aod_rad,
            arr.element_amplitude,
        );
        let travel_m = SPEED_OF_LIGHT_M_S * path.delay_s;
        let center_gain = match fspl_eval {
            FsplEval::CenterFrequency => {
                Some(path_gain(travel_m, ps.center_freq_hz, path.excess_gain_db)?)
            }
            FsplEval::PerFrequency => None,
        };
        for (k, &freq) in freq_grid_hz.iter().enumerate() {
            let gain = match center_gain {
                Some(g) => g,
                None => path_gain(travel_m, freq, path.excess_gain_db)?,
            };
            let coef = Complex64::from_polar(gain, -(TAU * freq * path.delay_s + path.phase_rad));
            for (r, &ar) in a_rx.iter().enumerate() {
                let partial = coef * ar;
                for (t, &at) in a_tx.iter().enumerate() {
                    h[[k, r, t]] += partial * at.conj();
                }
            }
        }
    }
    Ok(h)
}

fn path_gain(travel_m: f64, freq_hz: f64, excess_gain_db: f64) -> Result<f64, SynthError> {
    Ok(10f64.powf((-fspl_db(travel_m, freq_hz)? + excess_gain_db) / 20.0))
}

/// Per-path taps `(delay_s, g_l(ref_freq) e^(-i beta_l))`, sorted by delay.
pub fn tap_delay_line(ps: &PathSet, ref_freq_hz: f64) -> Result<Vec<(f64, Complex64)>, SynthError> {
    let mut taps = ps
        .paths
        .iter()
        .map(|path| {
            let gain = path_gain(
                SPEED_OF_LIGHT_M_S * path.delay_s,
                ref_freq_hz,
                path.excess_gain_db,
            )?;
            Ok((path.delay_s, Complex64::from_polar(gain, -path.phase_rad)))
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    taps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(taps)
}

/// Writes a channel tensor as little-endian binary: a header of three u32
/// values {n_freq, n_rx, n_tx} followed by row-major (re, im) f64 pairs.
pub fn write_channel_binary<W: Write>(mut writer: W, h: &Array3<Complex64>) -> std::io::Result<()> {
    let (n_freq, n_rx, n_tx) = h.dim();
    for dim in [n_freq, n_rx, n_tx] {
        let dim = u32::try_from(dim).map_err(|_| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "tensor dimension exceeds u32",
            )
        })?;
        writer.write_all(&dim.to_le_bytes())?;
    }
    for value in h.iter() {
        writer.write_all(&value.re.to_le_bytes())?;
        writer.write_all(&value.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a tensor written by [`write_channel_binary`]. The payload length
/// must match the header exactly.
pub fn read_channel_binary<R: Read>(mut reader: R) -> Result<Array3<Complex64>, SynthError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < 12 {
        return Err(SynthError::Domain(
            "binary channel: truncated header".into(),
        ));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (n_freq, n_rx, n_tx) = (dim(0), dim(1), dim(2));
    let elements = n_freq
        .checked_mul(n_rx)
        .and_then(|v| v.checked_mul(n_tx))
        .ok_or_else(|| SynthError::Domain("binary channel: dimension overflow".into()))?;
    let expected = elements
        .checked_mul(16)
        .and_then(|v| v.checked_add(12))
        .ok_or_else(|| SynthError::Domain("binary channel: dimension overflow".into()))?;
    if bytes.len() != expected {
        return Err(SynthError::Domain(format!(
            "binary channel: expected {expected} bytes for {n_freq}x{n_rx}x{n_tx}, got {}",
            bytes.len()
        )));
    }
    let values: Vec<Complex64> = bytes[12..]
        .chunks_exact(16)
        .map(|pair| {
            Complex64::new(
                f64::from_le_bytes(pair[..8].try_into().unwrap()),
                f64::from_le_bytes(pair[8..].try_into().unwrap()),
            )
        })
        .collect();
    Array3::from_shape_vec((n_freq, n_rx, n_tx), values)
        .map_err(|e| SynthError::Domain(format!("binary channel: {e}")))
}
