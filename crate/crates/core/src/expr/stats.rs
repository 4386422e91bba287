//! Descriptive statistics and the classical tests quizzes show output for.

use serde::Serialize;
use statrs::distribution::{Beta, Binomial, ContinuousCDF, Discrete, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("empty data")]
    Empty,
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("{0}")]
    Domain(String),
}

pub fn sum(x: &[f64]) -> f64 {
    x.iter().sum()
}

pub fn mean(x: &[f64]) -> Result<f64, StatError> {
    if x.is_empty() {
        return Err(StatError::Empty);
    }
    Ok(sum(x) / x.len() as f64)
}

/// Sample variance (denominator n - 1).
pub fn var(x: &[f64]) -> Result<f64, StatError> {
    if x.len() < 2 {
        return Err(StatError::TooFew { needed: 2, got: x.len() });
    }
    let m = mean(x)?;
    Ok(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64)
}

pub fn sd(x: &[f64]) -> Result<f64, StatError> {
    var(x).map(f64::sqrt)
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(x: &[f64]) -> Result<f64, StatError> {
    quantile(x, 0.5)
}

/// Linear-interpolation quantile (Hyndman & Fan type 7, R's default).
pub fn quantile(x: &[f64], p: f64) -> Result<f64, StatError> {
    if x.is_empty() {
        return Err(StatError::Empty);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatError::Domain(format!("probability {p} outside [0, 1]")));
    }
    let s = sorted(x);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

/// Tukey's five-number summary: min, lower hinge, median, upper hinge, max.
pub fn fivenum(x: &[f64]) -> Result<[f64; 5], StatError> {
    if x.is_empty() {
        return Err(StatError::Empty);
    }
    let s = sorted(x);
    let n = s.len() as f64;
    let n4 = ((n + 3.0) / 2.0).floor() / 2.0;
    let depths = [1.0, n4, (n + 1.0) / 2.0, n + 1.0 - n4, n];
    Ok(depths.map(|d| 0.5 * (s[d.floor() as usize - 1] + s[d.ceil() as usize - 1])))
}

pub fn cor(x: &[f64], y: &[f64]) -> Result<f64, StatError> {
    if x.len() != y.len() {
        return Err(StatError::Domain(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(StatError::TooFew { needed: 2, got: x.len() });
    }
    let (mx, my) = (mean(x)?, mean(y)?);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(StatError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatError::ZeroVariance("y"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TOneSample,
    TTwoSample,
    BinomExact,
    SimpleRegression,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

/// Named result of a test, enough to print an R-style summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatResult {
    pub kind: TestKind,
    pub method: String,
    pub data_name: String,
    pub estimate: Vec<(String, f64)>,
    pub statistic: (String, f64),
    pub df: Option<f64>,
    pub p_value: f64,
    pub conf_level: f64,
    pub conf_int: (f64, f64),
    pub null_value: (String, f64),
    /// Trial count for the binomial test.
    pub trials: Option<u64>,
    /// Regression only.
    pub coefficients: Vec<Coefficient>,
    pub residual_se: Option<f64>,
    pub r_squared: Option<f64>,
}

impl StatResult {
    pub fn estimate_value(&self) -> Vec<f64> {
        self.estimate.iter().map(|(_, v)| *v).collect()
    }
}

/// Input of [`stat_test`].
#[derive(Debug, Clone, Copy)]
pub enum TestInput<'a> {
    OneSample { x: &'a [f64], mu: f64 },
    TwoSample { x: &'a [f64], y: &'a [f64] },
    Binomial { successes: u64, trials: u64, p: f64 },
    Regression { x: &'a [f64], y: &'a [f64] },
}

pub fn stat_test(input: TestInput<'_>, conf_level: f64) -> Result<StatResult, StatError> {
    match input {
        TestInput::OneSample { x, mu } => t_one_sample(x, mu, conf_level, "x"),
        TestInput::TwoSample { x, y } => t_two_sample(x, y, conf_level, "x and y"),
        TestInput::Binomial { successes, trials, p } => binom_exact(successes, trials, p, conf_level, None),
        TestInput::Regression { x, y } => simple_regression(x, y, "y ~ x"),
    }
}

fn check_level(conf_level: f64) -> Result<(), StatError> {
    if conf_level > 0.0 && conf_level < 1.0 {
        Ok(())
    } else {
        Err(StatError::Domain(format!("conf.level {conf_level} must lie in (0, 1)")))
    }
}

fn t_dist(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("positive df")
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    (2.0 * t_dist(df).sf(t.abs())).min(1.0)
}

pub fn t_one_sample(x: &[f64], mu: f64, conf_level: f64, data_name: &str) -> Result<StatResult, StatError> {
    check_level(conf_level)?;
    if x.is_empty() {
        return Err(StatError::Empty);
    }
    let n = x.len() as f64;
    let m = mean(x)?;
    let s = sd(x)?;
    if s == 0.0 {
        return Err(StatError::ZeroVariance("data"));
    }
    let se = s / n.sqrt();
    let t = (m - mu) / se;
    let df = n - 1.0;
    let q = t_dist(df).inverse_cdf(0.5 + conf_level / 2.0);
    Ok(StatResult {
        kind: TestKind::TOneSample,
        method: "One Sample t-test".into(),
        data_name: data_name.into(),
        estimate: vec![("mean of x".into(), m)],
        statistic: ("t".into(), t),
        df: Some(df),
        p_value: two_sided_t(t, df),
        conf_level,
        conf_int: (m - q * se, m + q * se),
        null_value: ("mean".into(), mu),
        trials: None,
        coefficients: vec![],
        residual_se: None,
        r_squared: None,
    })
}

/// Welch two-sample t-test.
pub fn t_two_sample(x: &[f64], y: &[f64], conf_level: f64, data_name: &str) -> Result<StatResult, StatError> {
    check_level(conf_level)?;
    if x.is_empty() || y.is_empty() {
        return Err(StatError::Empty);
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, my) = (mean(x)?, mean(y)?);
    let (vx, vy) = (var(x)? / nx, var(y)? / ny);
    if vx + vy == 0.0 {
        return Err(StatError::ZeroVariance("data"));
    }
    let se = (vx + vy).sqrt();
    let t = (mx - my) / se;
    let df = (vx + vy).powi(2) / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    let q = t_dist(df).inverse_cdf(0.5 + conf_level / 2.0);
    let diff = mx - my;
    Ok(StatResult {
        kind: TestKind::TTwoSample,
        method: "Welch Two Sample t-test".into(),
        data_name: data_name.into(),
        estimate: vec![("mean of x".into(), mx), ("mean of y".into(), my)],
        statistic: ("t".into(), t),
        df: Some(df),
        p_value: two_sided_t(t, df),
        conf_level,
        conf_int: (diff - q * se, diff + q * se),
        null_value: ("difference in means".into(), 0.0),
        trials: None,
        coefficients: vec![],
        residual_se: None,
        r_squared: None,
    })
}

/// Exact binomial test: two-sided p-value sums the probabilities of all
/// outcomes no more likely than the observed one; Clopper-Pearson interval.
pub fn binom_exact(
    successes: u64,
    trials: u64,
    p: f64,
    conf_level: f64,
    data_name: Option<&str>,
) -> Result<StatResult, StatError> {
    check_level(conf_level)?;
    if trials == 0 {
        return Err(StatError::TooFew { needed: 1, got: 0 });
    }
    if successes > trials {
        return Err(StatError::Domain(format!("{successes} successes exceed {trials} trials")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatError::Domain(format!("probability {p} outside [0, 1]")));
    }
    let dist = Binomial::new(p, trials).map_err(|e| StatError::Domain(e.to_string()))?;
    let observed = dist.pmf(successes);
    let cutoff = observed * (1.0 + 1e-7);
    let p_value = (0..=trials).map(|i| dist.pmf(i)).filter(|d| *d <= cutoff).sum::<f64>().min(1.0);
    let alpha = 1.0 - conf_level;
    let (k, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("shape").inverse_cdf(alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    let name = data_name.map(str::to_string).unwrap_or_else(|| format!("{successes} and {trials}"));
    Ok(StatResult {
        kind: TestKind::BinomExact,
        method: "Exact binomial test".into(),
        data_name: name,
        estimate: vec![("probability of success".into(), k / n)],
        statistic: ("number of successes".into(), k),
        df: None,
        p_value,
        conf_level,
        conf_int: (lower, upper),
        null_value: ("probability of success".into(), p),
        trials: Some(trials),
        coefficients: vec![],
        residual_se: None,
        r_squared: None,
    })
}

/// Least-squares fit of `y` on `x` with coefficient t-tests. The headline
/// statistic, p-value and interval are the slope's.
pub fn simple_regression(x: &[f64], y: &[f64], data_name: &str) -> Result<StatResult, StatError> {
    if x.len() != y.len() {
        return Err(StatError::Domain(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(StatError::Empty);
    }
    if x.len() < 3 {
        return Err(StatError::TooFew { needed: 3, got: x.len() });
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x)?, mean(y)?);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatError::ZeroVariance("x"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = n - 2.0;
    let s = (sse / df).sqrt();
    if s == 0.0 {
        return Err(StatError::ZeroVariance("residuals"));
    }
    let se_slope = s / sxx.sqrt();
    let se_intercept = s * (1.0 / n + mx * mx / sxx).sqrt();
    let coef = |name: &str, est: f64, se: f64| {
        let t = est / se;
        Coefficient { name: name.into(), estimate: est, std_error: se, t_value: t, p_value: two_sided_t(t, df) }
    };
    let c0 = coef("(Intercept)", intercept, se_intercept);
    let c1 = coef("x", slope, se_slope);
    let q = t_dist(df).inverse_cdf(0.975);
    Ok(StatResult {
        kind: TestKind::SimpleRegression,
        method: "Linear regression".into(),
        data_name: data_name.into(),
        estimate: vec![("(Intercept)".into(), intercept), ("x".into(), slope)],
        statistic: ("t".into(), c1.t_value),
        df: Some(df),
        p_value: c1.p_value,
        conf_level: 0.95,
        conf_int: (slope - q * se_slope, slope + q * se_slope),
        null_value: ("slope".into(), 0.0),
        trials: None,
        coefficients: vec![c0, c1],
        residual_se: Some(s),
        r_squared: Some(if syy == 0.0 { 1.0 } else { 1.0 - sse / syy }),
    })
}
