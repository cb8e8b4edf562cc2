//! Maximum-likelihood fitting for all ten families.
//!
//! Strategy per family:
//!
//! - Normal and Exponential have closed-form MLEs (the free-loc Exponential
//!   optimum sits at loc = min(x)).
//! - The other one-sided families are fitted by profiling the likelihood
//!   over loc: for a candidate loc the conditional MLE on the shifted data
//!   is closed-form or a fast 1-D/2-D solve, and the profile is maximized
//!   over a log-spaced grid of offsets below min(x) followed by a golden
//!   section refinement. With `fix_loc` the conditional fit runs once.
//! - Conditional solvers: log-domain moments (LogNormal), quadratic moment
//!   (Rayleigh), digamma equation `ln a - psi(a) = ln mean - mean ln`
//!   (Gamma, and Nakagami through the squared data), safeguarded Newton on
//!   the profile shape equation (Weibull), an EM fixed point with the
//!   I1/I0 weight (Rician), and damped Newton on the logistic score in the
//!   log domain (LogLogistic).
//! - Beta optimizes its two support endpoints with Nelder-Mead (offsets
//!   below min and above max on a log scale) around a conditional digamma
//!   score solve for the two shapes.
//!
//! Everything is deterministic: no randomness enters the optimizers.

use statrs::function::beta::ln_beta;
use statrs::function::gamma::digamma;

use super::{DistError, DistFamily, DistSpec};
use crate::special::bessel_i1_i0_ratio;

const LN_10: f64 = std::f64::consts::LN_10;

/// Fits `family` to `data` by maximum likelihood.
///
/// With `fix_loc` the location is held at the given value, which is the
/// convention for delay-domain fits where the support is pinned at zero.
/// One-sided families then require the data to lie above the fixed loc
/// (Exponential admits equality).
pub fn fit_mle(
    family: DistFamily,
    data: &[f64],
    fix_loc: Option<f64>,
) -> Result<DistSpec, DistError> {
    if data.len() < 3 {
        return Err(DistError::InsufficientData {
            needed: 3,
            got: data.len(),
        });
    }
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(DistError::Domain(format!(
            "data contains non-finite value {bad}"
        )));
    }
    if let Some(l) = fix_loc {
        if !l.is_finite() {
            return Err(DistError::Parameter(format!(
                "fix_loc must be finite, got {l}"
            )));
        }
    }
    let min = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(DistError::Degenerate("all data points are equal".into()));
    }

    match family {
        DistFamily::Normal => fit_normal(data, fix_loc),
        DistFamily::Exponential => fit_exponential(data, fix_loc, min),
        DistFamily::Beta => fit_beta(data, fix_loc, min, max),
        _ => match fix_loc {
            Some(loc) => {
                if min <= loc {
                    return Err(DistError::Domain(format!(
                        "{family} with fixed loc requires all data strictly above {loc}"
                    )));
                }
                let y: Vec<f64> = data.iter().map(|x| x - loc).collect();
                let (shape, scale) = conditional_fit(family, &y, None)?;
                DistSpec::new(family, &shape, loc, scale)
            }
            None => fit_profile_loc(family, data, min, max - min),
        },
    }
}

fn ln_likelihood(spec: &DistSpec, data: &[f64]) -> f64 {
    data.iter().map(|&x| spec.ln_pdf(x)).sum()
}

// ============================================================================
// Closed forms
// ============================================================================

fn fit_normal(data: &[f64], fix_loc: Option<f64>) -> Result<DistSpec, DistError> {
    let n = data.len() as f64;
    let loc = fix_loc.unwrap_or_else(|| data.iter().sum::<f64>() / n);
    let var = data.iter().map(|x| (x - loc) * (x - loc)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(DistError::Degenerate(
            "zero variance around the location".into(),
        ));
    }
    DistSpec::new(DistFamily::Normal, &[], loc, var.sqrt())
}

fn fit_exponential(data: &[f64], fix_loc: Option<f64>, min: f64) -> Result<DistSpec, DistError> {
    let loc = match fix_loc {
        Some(l) => {
            if min < l {
                return Err(DistError::Domain(format!(
                    "exponential with fixed loc requires all data at or above {l}"
                )));
            }
            l
        }
        None => min,
    };
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    let scale = mean - loc;
    if scale <= 0.0 {
        return Err(DistError::Degenerate(
            "sample mean does not exceed the location".into(),
        ));
    }
    DistSpec::new(DistFamily::Exponential, &[], loc, scale)
}

// ============================================================================
// Conditional fits on shifted data (all y > 0)
// ============================================================================

fn conditional_fit(
    family: DistFamily,
    y: &[f64],
    warm: Option<&(Vec<f64>, f64)>,
) -> Result<(Vec<f64>, f64), DistError> {
    match family {
        DistFamily::LogNormal => lognormal_cond(y),
        DistFamily::Rayleigh => rayleigh_cond(y),
        DistFamily::Gamma => {
            let (a, scale) = gamma_cond(y, warm.map(|(s, _)| s[0]))?;
            Ok((vec![a], scale))
        }
        DistFamily::Nakagami => nakagami_cond(y, warm.map(|(s, _)| s[0])),
        DistFamily::Weibull => weibull_cond(y, warm.map(|(s, _)| s[0])),
        DistFamily::Rician => rician_cond(y, warm.map(|(s, sc)| (s[0], *sc))),
        DistFamily::LogLogistic => fisk_cond(y, warm.map(|(s, sc)| (s[0], *sc))),
        DistFamily::Normal | DistFamily::Exponential | DistFamily::Beta => {
            unreachable!("handled by dedicated fitters")
        }
    }
}

fn lognormal_cond(y: &[f64]) -> Result<(Vec<f64>, f64), DistError> {
    let n = y.len() as f64;
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(DistError::Degenerate(
            "zero variance in the log domain".into(),
        ));
    }
    Ok((vec![var.sqrt()], mu.exp()))
}

fn rayleigh_cond(y: &[f64]) -> Result<(Vec<f64>, f64), DistError> {
    let n = y.len() as f64;
    let m2 = y.iter().map(|v| v * v).sum::<f64>() / n;
    Ok((vec![], (0.5 * m2).sqrt()))
}

fn gamma_cond(y: &[f64], warm: Option<f64>) -> Result<(f64, f64), DistError> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let mean_ln = y.iter().map(|v| v.ln()).sum::<f64>() / n;
    // Jensen gap of the log; strictly positive unless the data is constant.
    let s = (mean.ln() - mean_ln).max(1e-15);
    let a = gamma_shape_from_gap(s, warm)?;
    Ok((a, mean / a))
}

/// Solves `ln a - digamma(a) = s` for the gamma shape, s > 0.
fn gamma_shape_from_gap(s: f64, warm: Option<f64>) -> Result<f64, DistError> {
    if s < 1e-8 {
        // Asymptotic inversion of 1/(2a) + 1/(12a^2) = s, stable quadratic
        // form; the likelihood is already in its normal limit here.
        let t = 12.0 * s / (6.0 + (36.0 + 48.0 * s).sqrt());
        return Ok(1.0 / t);
    }
    let f = |a: f64| a.ln() - digamma(a) - s;
    let mut start =
        warm.unwrap_or_else(|| (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s));
    if !start.is_finite() || start <= 0.0 {
        start = 1.0;
    }
    // f is strictly decreasing from +inf to 0; bracket and bisect.
    let mut lo = start;
    let mut guard = 0;
    while f(lo) < 0.0 {
        lo *= 0.25;
        guard += 1;
        if guard > 600 {
            return Err(DistError::NoConvergence(
                "gamma shape bracketing failed".into(),
            ));
        }
    }
    let mut hi = 2.0 * lo.max(start);
    while f(hi) > 0.0 {
        hi *= 4.0;
        guard += 1;
        if guard > 600 {
            return Err(DistError::NoConvergence(
                "gamma shape bracketing failed".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn nakagami_cond(y: &[f64], warm: Option<f64>) -> Result<(Vec<f64>, f64), DistError> {
    // The squared variable is Gamma(nu) with mean scale^2, so the Nakagami
    // MLE reduces to the gamma solve on the squares and the quadratic mean.
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let (nu, theta) = gamma_cond(&sq, warm)?;
    Ok((vec![nu], (nu * theta).sqrt()))
}

fn weibull_cond(y: &[f64], warm: Option<f64>) -> Result<(Vec<f64>, f64), DistError> {
    let n = y.len() as f64;
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Work with t = y / ymax so every power stays in (0, 1].
    let lt: Vec<f64> = y.iter().map(|v| (v / ymax).ln()).collect();
    let mean_lt = lt.iter().sum::<f64>() / n;
    let var_lt = lt
        .iter()
        .map(|l| (l - mean_lt) * (l - mean_lt))
        .sum::<f64>()
        / n;
    if var_lt <= 0.0 {
        return Err(DistError::Degenerate(
            "zero variance in the log domain".into(),
        ));
    }

    // Profile score in the shape: g(c) = sum t^c ln t / sum t^c - 1/c - mean ln t,
    // strictly increasing with a unique root.
    let eval = |c: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &lt {
            let e = (c * l).exp();
            s0 += e;
            s1 += e * l;
            s2 += e * l * l;
        }
        let r = s1 / s0;
        (r - 1.0 / c - mean_lt, (s2 / s0 - r * r) + 1.0 / (c * c))
    };

    // Moment start on the log data (Gumbel spread), then bracket the root.
    let mut c = warm.unwrap_or(1.282_549_830_161_864 / var_lt.sqrt());
    if !c.is_finite() || c <= 0.0 {
        c = 1.0;
    }
    let mut lo = c;
    let mut guard = 0;
    while eval(lo).0 > 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 200 {
            return Err(DistError::NoConvergence(
                "weibull shape bracketing failed".into(),
            ));
        }
    }
    let mut hi = 2.0 * lo.max(c);
    while eval(hi).0 < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(DistError::NoConvergence(
                "weibull shape bracketing failed".into(),
            ));
        }
    }
    c = c.clamp(lo, hi);
    for _ in 0..100 {
        let (g, gp) = eval(c);
        if g > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let mut next = c - g / gp;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - c).abs() <= 1e-13 * c.max(next);
        c = next;
        if done {
            break;
        }
    }
    let s0: f64 = lt.iter().map(|&l| (c * l).exp()).sum();
    let scale = ymax * (s0 / n).powf(1.0 / c);
    Ok((vec![c], scale))
}

fn rician_cond(y: &[f64], warm: Option<(f64, f64)>) -> Result<(Vec<f64>, f64), DistError> {
    let n = y.len() as f64;
    let m2 = y.iter().map(|v| v * v).sum::<f64>() / n;
    let m4 = y.iter().map(|v| v * v * v * v).sum::<f64>() / n;

    // EM on the hidden phase: the E-step weight is I1/I0 of A y / sigma^2,
    // the M-step updates A to the weighted mean and sigma^2 to
    // (m2 - A^2) / 2. The fixed point solves the exact score equations.
    let (mut a_amp, mut sigma) = match warm {
        Some((b, s)) => (b * s, s),
        None => {
            // Moment start from m2 = A^2 + 2 sigma^2 and the fourth moment.
            let disc = (2.0 * m2 * m2 - m4).max(0.0).sqrt();
            let mut sig2 = 0.5 * (m2 - disc);
            if sig2 <= 0.0 || sig2.is_nan() {
                sig2 = 0.25 * m2;
            }
            let a2 = (m2 - 2.0 * sig2).max(0.01 * m2);
            (a2.sqrt(), sig2.sqrt())
        }
    };
    if sigma <= 0.0 || sigma.is_nan() || !a_amp.is_finite() {
        a_amp = (0.5 * m2).sqrt();
        sigma = (0.25 * m2).sqrt();
    }
    for _ in 0..2000 {
        let sig2 = sigma * sigma;
        let mut s = 0.0;
        for &v in y {
            s += v * bessel_i1_i0_ratio(a_amp * v / sig2);
        }
        let a_new = s / n;
        let sigma_new = (0.5 * (m2 - a_new * a_new)).max(m2 * 1e-30).sqrt();
        let done = (a_new - a_amp).abs() <= 1e-12 * (sigma_new + a_new)
            && (sigma_new - sigma).abs() <= 1e-12 * sigma_new;
        a_amp = a_new;
        sigma = sigma_new;
        if done {
            break;
        }
    }
    if sigma <= 0.0 || sigma.is_nan() || !a_amp.is_finite() {
        return Err(DistError::NoConvergence(
            "rician EM produced invalid parameters".into(),
        ));
    }
    Ok((vec![a_amp / sigma], sigma))
}

fn fisk_cond(y: &[f64], warm: Option<(f64, f64)>) -> Result<(Vec<f64>, f64), DistError> {
    // Log-logistic data is logistic in the log domain; fit the logistic
    // location mu and spread s there by damped Newton on the score.
    let t: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let t_mean = t.iter().sum::<f64>() / n;
    let t_var = t.iter().map(|v| (v - t_mean) * (v - t_mean)).sum::<f64>() / n;
    if t_var <= 0.0 {
        return Err(DistError::Degenerate(
            "zero variance in the log domain".into(),
        ));
    }
    let (mut mu, mut s) = match warm {
        Some((c, scale)) if c > 0.0 && scale > 0.0 => (scale.ln(), 1.0 / c),
        _ => (t_mean, t_var.sqrt() * 3f64.sqrt() / std::f64::consts::PI),
    };
    if s <= 0.0 || s.is_nan() {
        s = 1e-6;
    }

    let lnl = |mu: f64, s: f64| -> f64 {
        let mut acc = 0.0;
        for &ti in &t {
            let u = (ti - mu) / s;
            let sp = if u > 0.0 {
                u + (-u).exp().ln_1p()
            } else {
                u.exp().ln_1p()
            };
            // ln f = -ln s - u - 2 softplus(-u) = -ln s + u - 2 softplus(u)
            acc += u - 2.0 * sp;
        }
        acc - n * s.ln()
    };
    let mut cur = lnl(mu, s);

    for _ in 0..200 {
        let (mut s1, mut s2, mut sq, mut suq, mut su2q) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &ti in &t {
            let u = (ti - mu) / s;
            let p = if u >= 0.0 {
                1.0 / (1.0 + (-u).exp())
            } else {
                let e = u.exp();
                e / (1.0 + e)
            };
            let q = p * (1.0 - p);
            let w = 2.0 * p - 1.0;
            s1 += w;
            s2 += u * w;
            sq += q;
            suq += u * q;
            su2q += u * u * q;
        }
        let g_mu = s1 / s;
        let g_s = (s2 - n) / s;
        let h_mm = -2.0 * sq / (s * s);
        let h_ms = -(s1 + 2.0 * suq) / (s * s);
        let h_ss = (n - 2.0 * s2 - 2.0 * su2q) / (s * s);
        let det = h_mm * h_ss - h_ms * h_ms;

        let (d_mu, d_s) = if h_mm < 0.0 && det > 0.0 {
            // Newton step -H^{-1} g with the explicit 2x2 inverse.
            (
                -(h_ss * g_mu - h_ms * g_s) / det,
                -(h_mm * g_s - h_ms * g_mu) / det,
            )
        } else {
            let norm = g_mu.hypot(g_s).max(1e-300);
            (0.1 * s * g_mu / norm, 0.1 * s * g_s / norm)
        };

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (mu2, s2p) = (mu + lambda * d_mu, s + lambda * d_s);
            if s2p > 0.0 {
                let l2 = lnl(mu2, s2p);
                if l2 > cur + 1e-13 * (1.0 + cur.abs()) {
                    mu = mu2;
                    s = s2p;
                    cur = l2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if (lambda * d_mu).abs() <= 1e-11 * (1.0 + mu.abs()) && (lambda * d_s).abs() <= 1e-11 * s {
            break;
        }
    }
    Ok((vec![1.0 / s], mu.exp()))
}

// ============================================================================
// Profile over the location
// ============================================================================

struct ProfileSearch<'a> {
    family: DistFamily,
    data: &'a [f64],
    min: f64,
    span: f64,
    warm: Option<(Vec<f64>, f64)>,
    best: Option<(f64, DistSpec)>,
}

impl ProfileSearch<'_> {
    /// Profile log-likelihood at loc = min - span * e^w; tracks the best
    /// spec seen and returns -inf for infeasible offsets.
    fn eval(&mut self, w: f64) -> f64 {
        let loc = self.min - self.span * w.exp();
        let y: Vec<f64> = self.data.iter().map(|x| x - loc).collect();
        if y.iter().any(|&v| v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        let Ok((shape, scale)) = conditional_fit(self.family, &y, self.warm.as_ref()) else {
            return f64::NEG_INFINITY;
        };
        self.warm = Some((shape.clone(), scale));
        let Ok(spec) = DistSpec::new(self.family, &shape, loc, scale) else {
            return f64::NEG_INFINITY;
        };
        let lnl = ln_likelihood(&spec, self.data);
        if !lnl.is_finite() {
            return f64::NEG_INFINITY;
        }
        if self.best.as_ref().is_none_or(|(b, _)| lnl > *b) {
            self.best = Some((lnl, spec));
        }
        lnl
    }
}

fn fit_profile_loc(
    family: DistFamily,
    data: &[f64],
    min: f64,
    span: f64,
) -> Result<DistSpec, DistError> {
    const GRID: usize = 24;
    const GOLDEN_ITERS: usize = 48;
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    // Offsets from 1e-7 spans to about 63 spans below the sample minimum.
    let w_min = -7.0 * LN_10;
    let w_max = 1.8 * LN_10;
    let dw = (w_max - w_min) / (GRID as f64 - 1.0);

    let mut search = ProfileSearch {
        family,
        data,
        min,
        span,
        warm: None,
        best: None,
    };
    let mut best_w = w_min;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..GRID {
        let w = w_min + i as f64 * dw;
        let v = search.eval(w);
        if v > best_val {
            best_val = v;
            best_w = w;
        }
    }
    if search.best.is_none() {
        return Err(DistError::NoConvergence(format!(
            "profile likelihood for {family} failed at every location offset"
        )));
    }

    let (mut a, mut b) = (best_w - dw, best_w + dw);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = search.eval(c);
    let mut fd = search.eval(d);
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = search.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = search.eval(d);
        }
    }
    Ok(search.best.expect("feasible point recorded above").1)
}

// ============================================================================
// Beta
// ============================================================================

fn fit_beta(data: &[f64], fix_loc: Option<f64>, min: f64, max: f64) -> Result<DistSpec, DistError> {
    let span = max - min;
    let mut search = BetaSearch {
        data,
        min,
        max,
        warm: None,
        best: None,
    };

    match fix_loc {
        Some(lo) => {
            if min <= lo {
                return Err(DistError::Domain(format!(
                    "beta with fixed loc requires all data strictly above {lo}"
                )));
            }
            // 1-D search over the upper endpoint offset, same grid + golden
            // pattern as the generic location profile.
            const GRID: usize = 24;
            const INV_PHI: f64 = 0.618_033_988_749_894_9;
            let w_min = -7.0 * LN_10;
            let w_max = 1.8 * LN_10;
            let dw = (w_max - w_min) / (GRID as f64 - 1.0);
            let mut best_w = w_min;
            let mut best_val = f64::NEG_INFINITY;
            for i in 0..GRID {
                let w = w_min + i as f64 * dw;
                let v = search.eval(lo, max + span * w.exp());
                if v > best_val {
                    best_val = v;
                    best_w = w;
                }
            }
            let (mut a, mut b) = (best_w - dw, best_w + dw);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = search.eval(lo, max + span * c.exp());
            let mut fd = search.eval(lo, max + span * d.exp());
            for _ in 0..48 {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = search.eval(lo, max + span * c.exp());
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = search.eval(lo, max + span * d.exp());
                }
            }
        }
        None => {
            // Nelder-Mead over both endpoint offsets on the log scale.
            for start in [[-3.0, -3.0], [-0.7, -0.7]] {
                let objective = |w: &[f64]| -> f64 {
                    if !w[0].is_finite() || !w[1].is_finite() || w[0] > 12.0 || w[1] > 12.0 {
                        return f64::INFINITY;
                    }
                    let v = search.eval(min - span * w[0].exp(), max + span * w[1].exp());
                    if v.is_finite() {
                        -v
                    } else {
                        f64::INFINITY
                    }
                };
                // The closure needs mutable access to the search state.
                let mut obj = objective;
                nelder_mead(&mut obj, &start, 1.2, 220);
            }
        }
    }

    match search.best {
        Some((_, spec)) => Ok(spec),
        None => Err(DistError::NoConvergence(
            "beta endpoint search found no feasible fit".into(),
        )),
    }
}

struct BetaSearch<'a> {
    data: &'a [f64],
    min: f64,
    max: f64,
    warm: Option<(f64, f64)>,
    best: Option<(f64, DistSpec)>,
}

impl BetaSearch<'_> {
    fn eval(&mut self, lo: f64, hi: f64) -> f64 {
        if !(lo < self.min && hi > self.max) {
            return f64::NEG_INFINITY;
        }
        let width = hi - lo;
        let n = self.data.len() as f64;
        let (mut g1, mut g2, mut mean, mut mean_sq) = (0.0, 0.0, 0.0, 0.0);
        for &x in self.data {
            let u = (x - lo) / width;
            let om = (hi - x) / width;
            g1 += u.ln();
            g2 += om.ln();
            mean += u;
            mean_sq += u * u;
        }
        g1 /= n;
        g2 /= n;
        mean /= n;
        let var = (mean_sq / n - mean * mean).max(1e-300);

        let start = self.warm.unwrap_or_else(|| {
            let common = mean * (1.0 - mean) / var - 1.0;
            if common > 0.0 {
                (
                    (mean * common).clamp(1e-3, 1e6),
                    ((1.0 - mean) * common).clamp(1e-3, 1e6),
                )
            } else {
                (2.0, 2.0)
            }
        });
        let Ok((sa, sb)) = beta_shapes(g1, g2, start) else {
            return f64::NEG_INFINITY;
        };
        self.warm = Some((sa, sb));
        let lnl = n * ((sa - 1.0) * g1 + (sb - 1.0) * g2 - ln_beta(sa, sb) - width.ln());
        if !lnl.is_finite() {
            return f64::NEG_INFINITY;
        }
        if let Ok(spec) = DistSpec::new(DistFamily::Beta, &[sa, sb], lo, width) {
            if self.best.as_ref().is_none_or(|(b, _)| lnl > *b) {
                self.best = Some((lnl, spec));
            }
        }
        lnl
    }
}

/// Solves the beta shape score equations `digamma(a) - digamma(a+b) = g1`,
/// `digamma(b) - digamma(a+b) = g2` by damped Newton in log parameters
/// with a forward-difference Jacobian.
fn beta_shapes(g1: f64, g2: f64, start: (f64, f64)) -> Result<(f64, f64), DistError> {
    if !g1.is_finite() || !g2.is_finite() {
        return Err(DistError::Domain("log moments are not finite".into()));
    }
    let score = |x: [f64; 2]| -> [f64; 2] {
        let (a, b) = (x[0].exp(), x[1].exp());
        let d = digamma(a + b);
        [digamma(a) - d - g1, digamma(b) - d - g2]
    };
    let merit = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];

    let mut x = [start.0.max(1e-6).ln(), start.1.max(1e-6).ln()];
    let mut fv = score(x);
    for _ in 0..200 {
        let m0 = merit(fv);
        if m0.sqrt() <= 1e-12 {
            break;
        }
        let h = 1e-7;
        let fa = score([x[0] + h, x[1]]);
        let fb = score([x[0], x[1] + h]);
        let j = [
            [(fa[0] - fv[0]) / h, (fb[0] - fv[0]) / h],
            [(fa[1] - fv[1]) / h, (fb[1] - fv[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let (dx0, dx1) = if det.abs() > 1e-300 {
            (
                -(j[1][1] * fv[0] - j[0][1] * fv[1]) / det,
                -(j[0][0] * fv[1] - j[1][0] * fv[0]) / det,
            )
        } else {
            (-fv[0], -fv[1])
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xt = [x[0] + lambda * dx0, x[1] + lambda * dx1];
            if xt[0].abs() < 300.0 && xt[1].abs() < 300.0 {
                let ft = score(xt);
                if merit(ft) < m0 {
                    x = xt;
                    fv = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (a, b) = (x[0].exp(), x[1].exp());
    if !a.is_finite() || !b.is_finite() || a <= 0.0 || b <= 0.0 {
        return Err(DistError::NoConvergence(
            "beta shape solve left the domain".into(),
        ));
    }
    Ok((a, b))
}

// ============================================================================
// Nelder-Mead (used for the beta endpoint search)
// ============================================================================

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += step;
        let fp = f(&p);
        simplex.push((p, fp));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[d].1 - simplex[0].1;
        if spread.abs() <= 1e-11 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(p, _)| p[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let reflect: Vec<f64> = (0..d).map(|j| 2.0 * centroid[j] - worst.0[j]).collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..d)
                .map(|j| 3.0 * centroid[j] - 2.0 * worst.0[j])
                .collect();
            let fe = f(&expand);
            simplex[d] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
        } else {
            let (base, fbase) = if fr < worst.1 {
                (&reflect, fr)
            } else {
                (&worst.0, worst.1)
            };
            let contract: Vec<f64> = (0..d)
                .map(|j| centroid[j] + 0.5 * (base[j] - centroid[j]))
                .collect();
            let fc = f(&contract);
            if fc < fbase {
                simplex[d] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = (0..d)
                        .map(|j| best[j] + 0.5 * (entry.0[j] - best[j]))
                        .collect();
                    let fp = f(&p);
                    *entry = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (p, v) = simplex.swap_remove(0);
    (p, v)
}
