//! Summaries, least squares, distribution fits and chi-square tests for
//! makespan samples.
//!
//! Special functions are self-contained: `Γ` uses the Lanczos approximation
//! with `g = 7` and nine coefficients (relative error below `1e-13` on the
//! positive axis, reflection below `1/2`); the regularized incomplete gamma
//! functions use the series for `x < a + 1` and a modified Lentz continued
//! fraction otherwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("x and y have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("regressor is constant")]
    ConstantX,
    #[error("samples are all equal; the fit is degenerate")]
    Degenerate,
    #[error("bin width must be positive and finite, got {0}")]
    BinWidth(f64),
    #[error("samples contain a non-finite value")]
    NonFinite,
    #[error("only {bins} bins remain after merging; {params} fitted parameters leave no degrees of freedom")]
    NoDegreesOfFreedom { bins: usize, params: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance.
    pub variance: f64,
    pub sd: f64,
    /// `sd / mean`; infinite for a zero mean with spread, 0 without spread.
    pub cv: f64,
}

pub fn summarize(samples: &[f64]) -> Result<Summary, StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::TooFew { need: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = variance.sqrt();
    let cv = if sd == 0.0 { 0.0 } else { sd / mean };
    Ok(Summary {
        n,
        mean,
        variance,
        sd,
        cv,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 0 when `y` is constant.
    pub r_squared: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

/// Ordinary least squares fit of `y = slope * x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(StatsError::ConstantX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 0.0 } else { 1.0 - sse / syy };
    let slope_se = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(Regression {
        slope,
        intercept,
        r_squared,
        slope_se,
    })
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln |Γ(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    ln_gamma(x).exp()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(stat: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, stat / 2.0)
}

/// Generalized extreme value distribution in the `ξ` sign convention:
/// `F(x) = exp(-(1 + ξ (x - μ)/σ)^(-1/ξ))`, Gumbel at `ξ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gev {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

const GUMBEL_EPS: f64 = 1e-9;

impl Gev {
    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.xi.abs() < GUMBEL_EPS {
            return (-(-z).exp()).exp();
        }
        let t = 1.0 + self.xi * z;
        if t <= 0.0 {
            return if self.xi > 0.0 { 0.0 } else { 1.0 };
        }
        (-t.powf(-1.0 / self.xi)).exp()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let y = -u.ln();
        if self.xi.abs() < GUMBEL_EPS {
            self.mu - self.sigma * y.ln()
        } else {
            self.mu + self.sigma * (y.powf(-self.xi) - 1.0) / self.xi
        }
    }
}

/// Sample probability-weighted moments `b0, b1, b2`.
fn pwm(samples: &[f64]) -> [f64; 3] {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (j, &v) in x.iter().enumerate() {
        let j = j as f64;
        b0 += v;
        b1 += v * j / (n - 1.0);
        b2 += v * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    [b0 / n, b1 / n, b2 / n]
}

/// GEV fit by probability-weighted moments, using the rational
/// approximation `k = 7.8590 c + 2.9554 c^2` for the shape.
pub fn fit_gev_pwm(samples: &[f64]) -> Result<Gev, StatsError> {
    if samples.len() < 50 {
        return Err(StatsError::TooFew {
            need: 50,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let [b0, b1, b2] = pwm(samples);
    let l2 = 2.0 * b1 - b0;
    let l3ish = 3.0 * b2 - b0;
    if l2 <= 0.0 || l3ish == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let c = l2 / l3ish - 2f64.ln() / 3f64.ln();
    let k = 7.8590 * c + 2.9554 * c * c;
    if k.abs() < 1e-7 {
        let sigma = l2 / 2f64.ln();
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        return Ok(Gev {
            mu: b0 - EULER_GAMMA * sigma,
            sigma,
            xi: 0.0,
        });
    }
    let g = gamma(1.0 + k);
    let sigma = l2 * k / (g * (1.0 - 2f64.powf(-k)));
    let mu = b0 + sigma * (g - 1.0) / k;
    Ok(Gev { mu, sigma, xi: -k })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x, self.mean, self.sd)
    }
}

pub fn fit_gaussian(samples: &[f64]) -> Result<Gaussian, StatsError> {
    let s = summarize(samples)?;
    if s.sd == 0.0 {
        return Err(StatsError::Degenerate);
    }
    Ok(Gaussian {
        mean: s.mean,
        sd: s.sd,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chi2Result {
    pub stat: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Merged bins as `(observed, expected)`.
    pub bins: Vec<(u64, f64)>,
}

/// Pearson chi-square test of integer-valued `samples` against `cdf`.
///
/// Integer `v` owns `(v - 1/2, v + 1/2]`; the lowest and highest observed
/// values absorb the open tails. Adjacent bins are merged left to right
/// until each expected count reaches `min_expected`, and a short remainder
/// joins the last bin. `dof = bins - 1 - fitted_params`.
pub fn chi2_gof<F: Fn(f64) -> f64>(
    samples: &[f64],
    cdf: F,
    fitted_params: usize,
    min_expected: f64,
) -> Result<Chi2Result, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    let hist = histogram(samples, 1.0)?;
    let n = samples.len() as f64;
    let lo = hist[0].0.round() as i64;
    let hi = hist[hist.len() - 1].0.round() as i64;
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &(v, c) in &hist {
        counts[(v.round() as i64 - lo) as usize] += c;
    }
    let mut raw = Vec::with_capacity(counts.len());
    for (i, &obs) in counts.iter().enumerate() {
        let v = (lo + i as i64) as f64;
        let upper = if v as i64 == hi { 1.0 } else { cdf(v + 0.5) };
        let lower = if v as i64 == lo { 0.0 } else { cdf(v - 0.5) };
        raw.push((obs, n * (upper - lower).max(0.0)));
    }
    let mut bins: Vec<(u64, f64)> = Vec::new();
    let mut acc = (0u64, 0.0f64);
    for (o, e) in raw {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= min_expected {
            bins.push(acc);
            acc = (0, 0.0);
        }
    }
    if acc.0 > 0 || acc.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => bins.push(acc),
        }
    }
    if bins.len() < fitted_params + 2 {
        return Err(StatsError::NoDegreesOfFreedom {
            bins: bins.len(),
            params: fitted_params,
        });
    }
    let stat: f64 = bins
        .iter()
        .map(|&(o, e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = bins.len() - 1 - fitted_params;
    Ok(Chi2Result {
        stat,
        dof,
        p_value: chi2_sf(stat, dof as f64),
        bins,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gev,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FitParams {
    Gev(Gev),
    Gaussian(Gaussian),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub family: Family,
    pub params: FitParams,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub const MIN_EXPECTED: f64 = 5.0;

/// Fits `family` to integer-valued samples and tests the fit.
pub fn fit_report(samples: &[f64], family: Family) -> Result<FitReport, StatsError> {
    let (params, test) = match family {
        Family::Gev => {
            let g = fit_gev_pwm(samples)?;
            (
                FitParams::Gev(g),
                chi2_gof(samples, |x| g.cdf(x), 3, MIN_EXPECTED)?,
            )
        }
        Family::Gaussian => {
            let g = fit_gaussian(samples)?;
            (
                FitParams::Gaussian(g),
                chi2_gof(samples, |x| g.cdf(x), 2, MIN_EXPECTED)?,
            )
        }
    };
    Ok(FitReport {
        family,
        params,
        chi2: test.stat,
        dof: test.dof,
        p_value: test.p_value,
    })
}

/// Counts per bin `[k w, (k+1) w)`, reported by lower edge, ascending.
pub fn histogram(samples: &[f64], bin_width: f64) -> Result<Vec<(f64, u64)>, StatsError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(StatsError::BinWidth(bin_width));
    }
    if samples.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut keys: Vec<i64> = samples
        .iter()
        .map(|x| (x / bin_width + 1e-9).floor() as i64)
        .collect();
    keys.sort_unstable();
    let mut out: Vec<(f64, u64)> = Vec::new();
    for k in keys {
        let edge = k as f64 * bin_width;
        match out.last_mut() {
            Some((e, c)) if *e == edge => *c += 1,
            _ => out.push((edge, 1)),
        }
    }
    Ok(out)
}
