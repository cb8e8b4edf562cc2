//! Distribution engine: ten parametric families under one standardization
//! convention, plus sampling, maximum-likelihood fitting and goodness-of-fit
//! measures.
//!
//! Every family is expressed as `X = loc + scale * Z` where `Z` follows the
//! family's standard form (the convention used by `scipy.stats`, which is
//! what the catalog's fitted tables are expressed in):
//!
//! | family        | shape     | standard form of Z                          |
//! |---------------|-----------|---------------------------------------------|
//! | normal        | -         | pdf = exp(-z^2/2) / sqrt(2 pi), z real      |
//! | exponential   | -         | pdf = exp(-z), z >= 0                       |
//! | log_normal    | s > 0     | Z = exp(s N), N standard normal             |
//! | rayleigh      | -         | pdf = z exp(-z^2/2), z >= 0                 |
//! | rician        | b >= 0    | pdf = z exp(-(z^2+b^2)/2) I0(b z), z >= 0   |
//! | nakagami      | nu > 0    | pdf = 2 nu^nu z^(2nu-1) e^(-nu z^2)/Gam(nu) |
//! | gamma         | a > 0     | pdf = z^(a-1) e^(-z) / Gamma(a), z >= 0     |
//! | beta          | a, b > 0  | pdf on [0,1] with exponents a-1, b-1        |
//! | log_logistic  | c > 0     | cdf = z^c / (1 + z^c), z >= 0               |
//! | weibull       | c > 0     | pdf = c z^(c-1) exp(-z^c), z >= 0           |
//!
//! A Rician with b = 0 coincides with a Rayleigh; the CDF series used here
//! is exact in that limit, so the coincidence holds numerically as well.

mod families;
mod fit;
mod gof;

pub use fit::fit_mle;
pub use gof::{ks_test, qq_correlation};

use serde::{Deserialize, Serialize};

use crate::rng;

// ============================================================================
// Families
// ============================================================================

/// The supported distribution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistFamily {
    Normal,
    Exponential,
    LogNormal,
    Rayleigh,
    Rician,
    Nakagami,
    Gamma,
    Beta,
    LogLogistic,
    Weibull,
}

impl DistFamily {
    /// All families, in a stable order.
    pub const ALL: [DistFamily; 10] = [
        DistFamily::Normal,
        DistFamily::Exponential,
        DistFamily::LogNormal,
        DistFamily::Rayleigh,
        DistFamily::Rician,
        DistFamily::Nakagami,
        DistFamily::Gamma,
        DistFamily::Beta,
        DistFamily::LogLogistic,
        DistFamily::Weibull,
    ];

    /// Number of shape parameters beyond loc and scale.
    pub fn shape_count(self) -> usize {
        match self {
            DistFamily::Normal | DistFamily::Exponential | DistFamily::Rayleigh => 0,
            DistFamily::Beta => 2,
            _ => 1,
        }
    }

    /// Snake-case name, identical to the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            DistFamily::Normal => "normal",
            DistFamily::Exponential => "exponential",
            DistFamily::LogNormal => "log_normal",
            DistFamily::Rayleigh => "rayleigh",
            DistFamily::Rician => "rician",
            DistFamily::Nakagami => "nakagami",
            DistFamily::Gamma => "gamma",
            DistFamily::Beta => "beta",
            DistFamily::LogLogistic => "log_logistic",
            DistFamily::Weibull => "weibull",
        }
    }

    /// True when the standard support is bounded below at zero.
    pub(crate) fn one_sided(self) -> bool {
        !matches!(self, DistFamily::Normal)
    }
}

impl std::fmt::Display for DistFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DistFamily {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        DistFamily::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| DistError::Parameter(format!("unknown distribution family {s:?}")))
    }
}

// ============================================================================
// Errors
// ============================================================================

/// Errors from distribution construction, evaluation and fitting.
#[derive(Debug, thiserror::Error)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("input outside domain: {0}")]
    Domain(String),
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("fit did not converge: {0}")]
    NoConvergence(String),
    #[error("undefined result: {0}")]
    Undefined(String),
}

// ============================================================================
// DistSpec
// ============================================================================

/// A fully parameterized distribution: family, shape parameters, loc, scale.
///
/// Constructed through [`DistSpec::new`], which validates the parameters;
/// the JSON form `{"family": "...", "shape": [...], "loc": x, "scale": y}`
/// goes through the same validation on deserialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistSpec", into = "RawDistSpec")]
pub struct DistSpec {
    family: DistFamily,
    shape: Vec<f64>,
    loc: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDistSpec {
    family: DistFamily,
    shape: Vec<f64>,
    loc: f64,
    scale: f64,
}

impl TryFrom<RawDistSpec> for DistSpec {
    type Error = DistError;

    fn try_from(raw: RawDistSpec) -> Result<Self, Self::Error> {
        DistSpec::new(raw.family, &raw.shape, raw.loc, raw.scale)
    }
}

impl From<DistSpec> for RawDistSpec {
    fn from(spec: DistSpec) -> Self {
        RawDistSpec {
            family: spec.family,
            shape: spec.shape,
            loc: spec.loc,
            scale: spec.scale,
        }
    }
}

impl DistSpec {
    /// Validates and builds a spec.
    ///
    /// `scale` must be finite and positive, `loc` finite, and `shape` must
    /// carry exactly [`DistFamily::shape_count`] finite entries. Shape
    /// positivity is enforced per family (the Rician noncentrality may be
    /// zero; all other shapes must be strictly positive).
    pub fn new(family: DistFamily, shape: &[f64], loc: f64, scale: f64) -> Result<Self, DistError> {
        if !loc.is_finite() {
            return Err(DistError::Parameter(format!(
                "loc must be finite, got {loc}"
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(DistError::Parameter(format!(
                "scale must be finite and > 0, got {scale}"
            )));
        }
        if shape.len() != family.shape_count() {
            return Err(DistError::Parameter(format!(
                "{family} takes {} shape parameter(s), got {}",
                family.shape_count(),
                shape.len()
            )));
        }
        for &s in shape {
            if !s.is_finite() {
                return Err(DistError::Parameter(format!(
                    "shape parameters must be finite, got {s}"
                )));
            }
            let min_ok = if family == DistFamily::Rician {
                s >= 0.0
            } else {
                s > 0.0
            };
            if !min_ok {
                return Err(DistError::Parameter(format!(
                    "shape parameter of {family} out of range: {s}"
                )));
            }
        }
        Ok(DistSpec {
            family,
            shape: shape.to_vec(),
            loc,
            scale,
        })
    }

    pub fn family(&self) -> DistFamily {
        self.family
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Cumulative distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        families::std_cdf(self.family, &self.shape, z)
    }

    /// Probability density at `x` (zero outside the support).
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Natural log of the density at `x` (`-inf` outside the support).
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        families::std_ln_pdf(self.family, &self.shape, z) - self.scale.ln()
    }

    /// Quantile function; `p` must lie in `[0, 1]`.
    ///
    /// `p = 0` and `p = 1` yield the support endpoints, which may be
    /// infinite.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DistError::Domain(format!(
                "quantile probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(self.loc + self.scale * families::std_quantile(self.family, &self.shape, p))
    }

    /// Median, i.e. the 0.5 quantile.
    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid probability")
    }

    /// One random variate from `rng`.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.loc + self.scale * families::StdSampler::new(self.family, &self.shape).draw(rng)
    }

    /// `n` variates from the deterministic substream of `seed`.
    ///
    /// The same `(spec, n, seed)` always yields the same vector.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::substream(seed, 0);
        let sampler = families::StdSampler::new(self.family, &self.shape);
        (0..n)
            .map(|_| self.loc + self.scale * sampler.draw(&mut rng))
            .collect()
    }
}

impl std::fmt::Display for DistSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(", self.family)?;
        for s in &self.shape {
            write!(f, "{s}, ")?;
        }
        write!(f, "loc={}, scale={})", self.loc, self.scale)
    }
}

// ============================================================================
// Goodness of fit
// ============================================================================

/// Goodness-of-fit measures for one data set against one fitted spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub ks_statistic: f64,
    pub p_value: f64,
    pub qq_correlation: f64,
    pub fitted: DistSpec,
    pub sample_count: usize,
}

impl GofResult {
    /// KS test and Q-Q correlation of `data` against `spec` in one pass.
    pub fn evaluate(data: &[f64], spec: &DistSpec) -> Result<GofResult, DistError> {
        let (ks_statistic, p_value) = ks_test(data, spec)?;
        let qq = qq_correlation(data, spec)?;
        Ok(GofResult {
            ks_statistic,
            p_value,
            qq_correlation: qq,
            fitted: spec.clone(),
            sample_count: data.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(DistSpec::new(DistFamily::Normal, &[], 0.0, 0.0).is_err());
        assert!(DistSpec::new(DistFamily::Normal, &[], 0.0, -1.0).is_err());
        assert!(DistSpec::new(DistFamily::Normal, &[1.0], 0.0, 1.0).is_err());
        assert!(DistSpec::new(DistFamily::LogNormal, &[], 0.0, 1.0).is_err());
        assert!(DistSpec::new(DistFamily::LogNormal, &[-0.3], 0.0, 1.0).is_err());
        assert!(DistSpec::new(DistFamily::Beta, &[1.0], 0.0, 1.0).is_err());
        assert!(DistSpec::new(DistFamily::Beta, &[1.0, f64::NAN], 0.0, 1.0).is_err());
        assert!(DistSpec::new(DistFamily::Normal, &[], f64::INFINITY, 1.0).is_err());
        // Rician admits b = 0, everything else requires positive shapes.
        assert!(DistSpec::new(DistFamily::Rician, &[0.0], 0.0, 1.0).is_ok());
        assert!(DistSpec::new(DistFamily::Weibull, &[0.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn family_name_round_trip() {
        for fam in DistFamily::ALL {
            assert_eq!(fam.name().parse::<DistFamily>().unwrap(), fam);
        }
        assert_eq!(
            "Log-Normal".parse::<DistFamily>().unwrap(),
            DistFamily::LogNormal
        );
        assert_eq!(
            "Log Logistic".parse::<DistFamily>().unwrap(),
            DistFamily::LogLogistic
        );
        assert!("cauchy".parse::<DistFamily>().is_err());
    }

    #[test]
    fn json_round_trip_preserves_spec() {
        let spec = DistSpec::new(DistFamily::LogNormal, &[0.37], -35.5, 17.4).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: DistSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        // The documented field names are on the wire.
        assert!(json.contains("\"family\":\"log_normal\""));
        assert!(json.contains("\"shape\":[0.37]"));
    }

    #[test]
    fn json_rejects_invalid_spec() {
        let bad = r#"{"family":"log_normal","shape":[0.37],"loc":0.0,"scale":-1.0}"#;
        assert!(serde_json::from_str::<DistSpec>(bad).is_err());
        let bad_shape = r#"{"family":"normal","shape":[1.0],"loc":0.0,"scale":1.0}"#;
        assert!(serde_json::from_str::<DistSpec>(bad_shape).is_err());
    }

    #[test]
    fn shifted_lognormal_median_is_loc_plus_scale() {
        // Median of exp(s N) is 1, so the median of the shifted fit sits at
        // loc + scale.
        let spec = DistSpec::new(DistFamily::LogNormal, &[0.37], -35.5, 17.4).unwrap();
        assert_relative_eq!(spec.median(), -18.1, epsilon = 1e-9);
    }

    #[test]
    fn exponential_cdf_one_scale_unit_above_loc() {
        let spec = DistSpec::new(DistFamily::Exponential, &[], 0.0, 50.52).unwrap();
        assert_relative_eq!(spec.cdf(50.52), 0.6321205588285577, epsilon = 1e-12);
        assert_eq!(spec.cdf(-1.0), 0.0);
    }

    #[test]
    fn quantile_rejects_out_of_range_probability() {
        let spec = DistSpec::new(DistFamily::Normal, &[], 0.0, 1.0).unwrap();
        assert!(spec.quantile(-0.1).is_err());
        assert!(spec.quantile(1.1).is_err());
        assert!(spec.quantile(0.0).unwrap().is_infinite());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = DistSpec::new(DistFamily::Gamma, &[3.66], -30.7, 3.73).unwrap();
        let a = spec.sample(16, 7);
        let b = spec.sample(16, 7);
        let c = spec.sample(16, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
