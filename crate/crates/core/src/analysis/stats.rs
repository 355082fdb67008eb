use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y = a + b x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(invalid("ys", "x and y lengths differ"));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("linear fit needs two points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r_squared, residual: (sse / nf).sqrt(), points: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// `y ∝ x^(-gamma)`.
    pub gamma: f64,
    /// Intercept of `ln y` against `ln x`.
    pub intercept: f64,
    pub range: (f64, f64),
    /// RMS residual in log space.
    pub residual: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn write_csv_row<W: Write>(&self, mut w: W, name: &str) -> std::io::Result<()> {
        writeln!(w, "{name},{},{},{}", self.gamma, self.intercept, self.residual)
    }
}

pub const FIT_CSV_HEADER: &str = "name,gamma,intercept,residual";

/// Least squares of `ln y` on `ln x` using only points with `x` inside the
/// closed `range`.
pub fn fit_power_law(points: &[(f64, f64)], range: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = range;
    let inside: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, _)| x >= lo && x <= hi).collect();
    if let Some(&(x, y)) = inside.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(invalid("points", format!("power-law fit needs positive values, got ({x}, {y})")));
    }
    if inside.len() < 3 {
        return Err(Error::InsufficientData(format!("power-law fit needs three points in range, got {}", inside.len())));
    }
    let lx: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        gamma: -fit.slope,
        intercept: fit.intercept,
        range,
        residual: fit.residual,
        r_squared: fit.r_squared,
        points: inside.len(),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Welch's unequal-variance t-test for a difference of means.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("each sample needs at least two values".into()));
    }
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        let same = mean(a) == mean(b);
        return Ok(WelchTest { t: if same { 0.0 } else { f64::INFINITY }, df: f64::INFINITY, p_value: if same { 1.0 } else { 0.0 } });
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| invalid("df", e.to_string()))?;
    let p_value = 2.0 * dist.cdf(-t.abs());
    Ok(WelchTest { t, df, p_value })
}

/// Agents (or cells) grouped by their local mean field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiEquilibriumBin {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub mean_mu: f64,
    pub mean_s: f64,
    pub count: usize,
}

/// Bins `(μ, s)` pairs into `bins` equal intervals of `[-1, 1]` and averages
/// both coordinates per bin. Empty bins are omitted.
pub fn quasi_equilibrium_bins<I>(pairs: I, bins: usize) -> Vec<QuasiEquilibriumBin>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let bins = bins.max(1);
    let width = 2.0 / bins as f64;
    let mut sum_mu = vec![0.0; bins];
    let mut sum_s = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (mu, s) in pairs {
        let k = (((mu + 1.0) / width) as usize).min(bins - 1);
        sum_mu[k] += mu;
        sum_s[k] += s;
        count[k] += 1;
    }
    (0..bins)
        .filter(|&k| count[k] > 0)
        .map(|k| QuasiEquilibriumBin {
            mu_lo: -1.0 + k as f64 * width,
            mu_hi: -1.0 + (k + 1) as f64 * width,
            mean_mu: sum_mu[k] / count[k] as f64,
            mean_s: sum_s[k] / count[k] as f64,
            count: count[k],
        })
        .collect()
}
