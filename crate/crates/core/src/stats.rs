//! Stylized-fact statistics of price series.

use alloc::vec::Vec;

use crate::{math, Error, Result};

/// Number of lags used for the white-noise and volatility summaries.
pub const SUMMARY_LAGS: usize = 50;

/// `r_k = ln S_k - ln S_{k-1}`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(&bad) = prices.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::NonPositiveSeriesValue(bad));
    }
    Ok(prices.windows(2).map(|w| math::ln(w[1] / w[0])).collect())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample autocorrelation for lags `0..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(Error::InvalidLag(0));
    }
    if x.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let mu = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if !(denom > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|l| d.iter().zip(&d[l..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// `m4 / m2^2 - 3` with central sample moments.
pub fn excess_kurtosis(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::SeriesTooShort {
            needed: 4,
            got: x.len(),
        });
    }
    let mu = mean(x);
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = (v - mu) * (v - mu);
        m2 += d;
        m4 += d * d;
    }
    let n = x.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Pairs `(Phi^-1((k - 0.5) / n), z_(k))` of standard-normal quantiles and
/// sorted standardized sample values.
pub fn qq_points(x: &[f64]) -> Result<Vec<(f64, f64)>> {
    if x.len() < 10 {
        return Err(Error::SeriesTooShort {
            needed: 10,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mu = mean(x);
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sd = math::sqrt(var);
    let mut z: Vec<f64> = x.iter().map(|v| (v - mu) / sd).collect();
    z.sort_by(f64::total_cmp);
    Ok(z.into_iter()
        .enumerate()
        .map(|(k, v)| (normal_quantile((k as f64 + 0.5) / n), v))
        .collect())
}

/// Inverse standard normal CDF (Wichura's AS241, relative error about 1e-16).
///
/// Returns `-inf` / `inf` at 0 / 1 and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = math::sqrt(-math::ln(r));
    let v = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Half-width `2 / sqrt(n)` of the approximate 95% white-noise band.
pub fn white_noise_band(n: usize) -> f64 {
    2.0 / math::sqrt(n as f64)
}

/// Fraction of lags `1..=max_lag` whose autocorrelation lies inside the
/// white-noise band of a series of length `n`.
pub fn fraction_within_band(acf: &[f64], n: usize) -> f64 {
    let band = white_noise_band(n);
    let lags = &acf[1..];
    lags.iter().filter(|r| r.abs() <= band).count() as f64 / lags.len() as f64
}

/// Volatility-clustering score: mean autocorrelation of `|r|` over lags
/// `1..=max_lag`.
pub fn mean_abs_acf(returns: &[f64], max_lag: usize) -> Result<f64> {
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let rho = acf(&abs, max_lag)?;
    Ok(rho[1..].iter().sum::<f64>() / max_lag as f64)
}

/// Summary statistics of one return series.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSummary {
    pub n: usize,
    pub excess_kurtosis: f64,
    pub acf_raw: Vec<f64>,
    pub acf_abs: Vec<f64>,
    pub raw_within_band: f64,
    pub mean_abs_acf: f64,
}

pub fn summarize(returns: &[f64], max_lag: usize) -> Result<ReturnSummary> {
    let acf_raw = acf(returns, max_lag)?;
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let acf_abs = acf(&abs, max_lag)?;
    let mean_abs_acf = acf_abs[1..].iter().sum::<f64>() / max_lag as f64;
    Ok(ReturnSummary {
        n: returns.len(),
        excess_kurtosis: excess_kurtosis(returns)?,
        raw_within_band: fraction_within_band(&acf_raw, returns.len()),
        acf_raw,
        acf_abs,
        mean_abs_acf,
    })
}
