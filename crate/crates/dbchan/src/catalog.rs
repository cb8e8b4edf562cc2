//! Measurement-campaign catalog: per-location constants and the fitted
//! per-scenario statistics that drive synthesis.
//!
//! The catalog is a plain data structure with JSON load/save. A builtin
//! instance ships with the crate covering the seven Helsinki-region
//! measurement locations (four indoor, three outdoor), each with LOS and
//! NLOS statistics:
//!
//! - `npd`: normalized power distribution in dB (power after removing the
//!   link budget and free-space path loss),
//! - `ndd`: normalized delay distribution in ns (delay differences to the
//!   first arrival, location pinned at zero),
//! - `nop`: max/min/mean number of paths per measurement,
//! - sample counts and, where available, reference maximum excess delay
//!   values in ns for validation.
//!
//! Catalogs are immutable after load and freely shareable across threads.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::statdist::{DistFamily, DistSpec};

/// Every delay-difference fit uses this family; the location is pinned at
/// zero because the reference path arrives at excess delay zero.
pub const NDD_POLICY_FAMILY: DistFamily = DistFamily::Exponential;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid catalog: {0}")]
    Invalid(String),
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error("location {location:?} has no {scenario} statistics")]
    MissingScenario {
        location: String,
        scenario: Scenario,
    },
    #[error("no MED reference for {location:?} {scenario}")]
    MedUnavailable {
        location: String,
        scenario: Scenario,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Indoor,
    Outdoor,
}

impl std::fmt::Display for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Environment::Indoor => "indoor",
            Environment::Outdoor => "outdoor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Los, Scenario::Nlos];
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Los => "LOS",
            Scenario::Nlos => "NLOS",
        })
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Scenario::Los),
            "nlos" => Ok(Scenario::Nlos),
            other => Err(format!("unknown scenario {other:?}, expected LOS or NLOS")),
        }
    }
}

/// Fixed per-location measurement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationProfile {
    pub name: String,
    pub environment: Environment,
    /// Sounded RF band as (low, high) in Hz.
    pub rf_band_hz: (f64, f64),
    pub center_freq_hz: f64,
    pub eirp_dbm: f64,
    pub rx_gain_dbi: f64,
    pub noise_floor_dbm: f64,
    pub noise_margin_db: f64,
    /// Tx-Rx separation range as (min, max) in meters.
    pub link_distance_range_m: (f64, f64),
    pub tx_height_m: f64,
    pub rx_height_m: f64,
}

impl LocationProfile {
    /// Detection threshold in dBm: noise floor plus margin.
    pub fn noise_threshold_dbm(&self) -> f64 {
        self.noise_floor_dbm + self.noise_margin_db
    }
}

/// Number-of-paths summary over the measurements of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NopStats {
    pub max: u32,
    pub min: u32,
    pub mean: f64,
}

/// Fitted statistics and sample counts for one (location, scenario) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub scenario: Scenario,
    /// Normalized power distribution, dB.
    pub npd: DistSpec,
    /// Normalized delay distribution, ns; loc is always zero.
    pub ndd: DistSpec,
    pub nop: NopStats,
    /// Number of multipath data points behind the fits.
    pub data_points: u32,
    /// Number of measured links.
    pub measurements: u32,
    /// Reference maximum excess delay from the measurements, ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med_empirical_ns: Option<f64>,
    /// Reference maximum excess delay reported for the model, ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med_model_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEntry {
    pub profile: LocationProfile,
    pub scenarios: Vec<ScenarioStats>,
}

impl LocationEntry {
    pub fn stats(&self, scenario: Scenario) -> Option<&ScenarioStats> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    locations: Vec<LocationEntry>,
}

impl Catalog {
    /// The catalog shipped with the crate: all seven measurement locations
    /// with their LOS and NLOS statistics.
    pub fn builtin() -> &'static Catalog {
        static BUILTIN: OnceLock<Catalog> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let catalog = builtin_catalog();
            catalog
                .validate()
                .expect("builtin catalog satisfies its invariants");
            catalog
        })
    }

    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        let catalog: Catalog = serde_json::from_str(text)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        Catalog::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical JSON: locations sorted by name, scenarios LOS before
    /// NLOS, pretty-printed with a trailing newline. Loading and saving a
    /// canonical document is byte-identical.
    pub fn to_json(&self) -> String {
        let mut canonical = self.clone();
        canonical
            .locations
            .sort_by(|a, b| a.profile.name.cmp(&b.profile.name));
        for entry in &mut canonical.locations {
            entry.scenarios.sort_by_key(|s| s.scenario);
        }
        let mut text =
            serde_json::to_string_pretty(&canonical).expect("catalog serialization is infallible");
        text.push('\n');
        text
    }

    pub fn locations(&self) -> &[LocationEntry] {
        &self.locations
    }

    /// Case-insensitive lookup by location name.
    pub fn location(&self, name: &str) -> Result<&LocationEntry, CatalogError> {
        self.locations
            .iter()
            .find(|entry| entry.profile.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| CatalogError::UnknownLocation(name.to_string()))
    }

    pub fn stats(
        &self,
        name: &str,
        scenario: Scenario,
    ) -> Result<(&LocationProfile, &ScenarioStats), CatalogError> {
        let entry = self.location(name)?;
        let stats = entry
            .stats(scenario)
            .ok_or_else(|| CatalogError::MissingScenario {
                location: entry.profile.name.clone(),
                scenario,
            })?;
        Ok((&entry.profile, stats))
    }

    /// The family used to represent normalized power in synthesis:
    /// log-logistic for indoor NLOS cells, log-normal everywhere else.
    pub fn best_fit_policy(
        &self,
        name: &str,
        scenario: Scenario,
    ) -> Result<DistFamily, CatalogError> {
        let entry = self.location(name)?;
        Ok(match (entry.profile.environment, scenario) {
            (Environment::Indoor, Scenario::Nlos) => DistFamily::LogLogistic,
            _ => DistFamily::LogNormal,
        })
    }

    /// Reference (empirical, model) maximum excess delay in ns.
    pub fn med_reference(
        &self,
        name: &str,
        scenario: Scenario,
    ) -> Result<(f64, f64), CatalogError> {
        let (profile, stats) = self.stats(name, scenario)?;
        match (stats.med_empirical_ns, stats.med_model_ns) {
            (Some(e), Some(m)) => Ok((e, m)),
            _ => Err(CatalogError::MedUnavailable {
                location: profile.name.clone(),
                scenario,
            }),
        }
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |msg: String| Err(CatalogError::Invalid(msg));
        for (i, entry) in self.locations.iter().enumerate() {
            let p = &entry.profile;
            let name = &p.name;
            if name.is_empty() {
                return invalid(format!("locations[{i}]: empty name"));
            }
            if self.locations[..i]
                .iter()
                .any(|other| other.profile.name.eq_ignore_ascii_case(name))
            {
                return invalid(format!("duplicate location {name:?}"));
            }
            let all_finite = [
                p.rf_band_hz.0,
                p.rf_band_hz.1,
                p.center_freq_hz,
                p.eirp_dbm,
                p.rx_gain_dbi,
                p.noise_floor_dbm,
                p.noise_margin_db,
                p.link_distance_range_m.0,
                p.link_distance_range_m.1,
                p.tx_height_m,
                p.rx_height_m,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !all_finite {
                return invalid(format!("{name}: non-finite profile field"));
            }
            if !(p.rf_band_hz.0 > 0.0 && p.rf_band_hz.0 < p.rf_band_hz.1) {
                return invalid(format!("{name}: rf_band_hz must satisfy 0 < low < high"));
            }
            if !(p.center_freq_hz >= p.rf_band_hz.0 && p.center_freq_hz <= p.rf_band_hz.1) {
                return invalid(format!("{name}: center_freq_hz outside rf_band_hz"));
            }
            if !(p.link_distance_range_m.0 > 0.0
                && p.link_distance_range_m.0 < p.link_distance_range_m.1)
            {
                return invalid(format!(
                    "{name}: link_distance_range_m must satisfy 0 < min < max"
                ));
            }
            if p.noise_margin_db < 0.0 {
                return invalid(format!("{name}: negative noise margin"));
            }
            for (j, stats) in entry.scenarios.iter().enumerate() {
                let scenario = stats.scenario;
                if entry.scenarios[..j]
                    .iter()
                    .any(|other| other.scenario == scenario)
                {
                    return invalid(format!("{name}: duplicate {scenario} statistics"));
                }
                if stats.ndd.loc() != 0.0 {
                    return invalid(format!("{name}/{scenario}: ndd loc must be zero"));
                }
                let nop = &stats.nop;
                if !nop.mean.is_finite()
                    || !(f64::from(nop.min) <= nop.mean && nop.mean <= f64::from(nop.max))
                {
                    return invalid(format!(
                        "{name}/{scenario}: nop must satisfy min <= mean <= max"
                    ));
                }
                if stats.data_points < stats.measurements {
                    return invalid(format!("{name}/{scenario}: data_points below measurements"));
                }
                for med in [stats.med_empirical_ns, stats.med_model_ns]
                    .into_iter()
                    .flatten()
                {
                    if !(med.is_finite() && med > 0.0) {
                        return invalid(format!("{name}/{scenario}: MED must be positive"));
                    }
                }
            }
        }
        Ok(())
    }
}

// ============================================================================
// Builtin data
// ============================================================================

const GHZ: f64 = 1e9;

fn profile(
    name: &str,
    environment: Environment,
    band_ghz: (f64, f64),
    center_ghz: f64,
    eirp_dbm: f64,
    link_m: (f64, f64),
    heights_m: (f64, f64),
) -> LocationProfile {
    LocationProfile {
        name: name.to_string(),
        environment,
        rf_band_hz: (band_ghz.0 * GHZ, band_ghz.1 * GHZ),
        center_freq_hz: center_ghz * GHZ,
        eirp_dbm,
        rx_gain_dbi: 19.0,
        noise_floor_dbm: -128.0,
        noise_margin_db: 10.0,
        link_distance_range_m: link_m,
        tx_height_m: heights_m.0,
        rx_height_m: heights_m.1,
    }
}

fn lognormal(s: f64, loc: f64, scale: f64) -> DistSpec {
    DistSpec::new(DistFamily::LogNormal, &[s], loc, scale).expect("builtin npd row")
}

fn loglogistic(c: f64, loc: f64, scale: f64) -> DistSpec {
    DistSpec::new(DistFamily::LogLogistic, &[c], loc, scale).expect("builtin npd row")
}

#[allow(clippy::too_many_arguments)]
fn row(
    scenario: Scenario,
    npd: DistSpec,
    ndd_scale_ns: f64,
    nop: (u32, u32, f64),
    data_points: u32,
    measurements: u32,
    med_ns: Option<(f64, f64)>,
) -> ScenarioStats {
    ScenarioStats {
        scenario,
        npd,
        ndd: DistSpec::new(NDD_POLICY_FAMILY, &[], 0.0, ndd_scale_ns).expect("builtin ndd row"),
        nop: NopStats {
            max: nop.0,
            min: nop.1,
            mean: nop.2,
        },
        data_points,
        measurements,
        med_empirical_ns: med_ns.map(|(e, _)| e),
        med_model_ns: med_ns.map(|(_, m)| m),
    }
}

fn builtin_catalog() -> Catalog {
    use Environment::{Indoor, Outdoor};
    use Scenario::{Los, Nlos};
    Catalog {
        locations: vec![
            LocationEntry {
                profile: profile(
                    "Airport",
                    Indoor,
                    (141.5, 145.1),
                    143.1,
                    -12.0,
                    (15.0, 51.0),
                    (1.7, 2.1),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.08, -105.5, 89.16),
                        69.7,
                        (56, 23, 37.5),
                        375,
                        10,
                        Some((276.56, 240.78)),
                    ),
                    row(
                        Nlos,
                        loglogistic(0.88, -27.9, 4.14),
                        81.21,
                        (41, 41, 41.0),
                        41,
                        1,
                        None,
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "Campus",
                    Outdoor,
                    (140.0, 144.0),
                    142.0,
                    5.0,
                    (2.0, 172.0),
                    (1.85, 1.85),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.28, -55.03, 28.28),
                        136.2,
                        (63, 1, 26.4),
                        924,
                        35,
                        Some((542.25, 562.04)),
                    ),
                    row(
                        Nlos,
                        lognormal(0.28, -55.03, 28.28),
                        107.38,
                        (4, 1, 2.25),
                        14,
                        8,
                        Some((317.12, 351.35)),
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "City",
                    Outdoor,
                    (140.0, 144.0),
                    142.0,
                    5.0,
                    (20.0, 175.0),
                    (1.85, 1.85),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.13, -85.46, 58.16),
                        135.25,
                        (178, 8, 64.0),
                        768,
                        12,
                        Some((482.51, 408.04)),
                    ),
                    row(
                        Nlos,
                        lognormal(0.28, -49.29, 22.27),
                        81.05,
                        (71, 1, 17.48),
                        435,
                        21,
                        Some((281.1, 306.65)),
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "Residential",
                    Outdoor,
                    (140.0, 144.0),
                    142.0,
                    5.0,
                    (10.0, 178.0),
                    (2.0, 1.85),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.3, -50.82, 27.49),
                        124.89,
                        (69, 1, 19.16),
                        477,
                        21,
                        Some((376.49, 467.87)),
                    ),
                    row(
                        Nlos,
                        lognormal(0.47, -34.64, 13.79),
                        98.05,
                        (16, 1, 4.01),
                        183,
                        27,
                        Some((188.7, 412.17)),
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "Sello",
                    Indoor,
                    (141.5, 145.1),
                    143.1,
                    -12.0,
                    (3.0, 65.0),
                    (1.89, 1.89),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.37, -35.5, 17.4),
                        50.52,
                        (41, 5, 19.0),
                        304,
                        16,
                        Some((155.2, 113.2)),
                    ),
                    row(
                        Nlos,
                        loglogistic(0.83, -22.5, 1.1),
                        43.51,
                        (19, 10, 14.5),
                        29,
                        2,
                        None,
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "TUAS",
                    Indoor,
                    (140.0, 144.0),
                    142.0,
                    5.0,
                    (3.0, 47.0),
                    (1.85, 1.85),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.52, -28.2, 12.1),
                        26.5,
                        (11, 6, 7.8),
                        29,
                        5,
                        Some((110.69, 88.13)),
                    ),
                    row(
                        Nlos,
                        loglogistic(6.62, -46.11, 20.78),
                        63.2,
                        (42, 0, 18.5),
                        378,
                        21,
                        Some((159.78, 228.89)),
                    ),
                ],
            },
            LocationEntry {
                profile: profile(
                    "TUAS2",
                    Indoor,
                    (140.0, 144.0),
                    142.0,
                    5.0,
                    (3.0, 66.0),
                    (1.85, 1.85),
                ),
                scenarios: vec![
                    row(
                        Los,
                        lognormal(0.37, -36.4, 18.3),
                        37.5,
                        (49, 6, 16.8),
                        268,
                        16,
                        Some((110.69, 124.54)),
                    ),
                    row(
                        Nlos,
                        loglogistic(6.4, -47.4, 21.7),
                        55.7,
                        (113, 0, 29.7),
                        1812,
                        61,
                        Some((172.65, 260.31)),
                    ),
                ],
            },
        ],
    }
}
