//! Standard normal distribution function and its inverse.

use crate::error::{Error, Result};

use std::f64::consts::FRAC_1_SQRT_2;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function `Phi(x)`, via `erfc` so that tail
/// probabilities keep full relative accuracy.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)` without cancellation for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// Inverse of the standard normal distribution function.
///
/// Wichura's AS 241 (PPND16) rational approximations, accurate to about
/// 1e-16 relative over `(1e-300, 1 - 1e-16)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "normal quantile level {p} outside (0, 1)"
        )));
    }
    Ok(ppnd16(p))
}

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * (((((((2.509_080_928_730_122_7e3 * r
            + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_870_1e4) * r
            + 4.592_195_393_154_987_1e4) * r
            + 1.373_169_376_550_946_1e4) * r
            + 1.971_590_950_306_551_4e3) * r
            + 1.331_416_678_917_843_8e2) * r
            + 3.387_132_872_796_366_6)
            / (((((((5.226_495_278_852_545_6e3 * r
            + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271_1e4) * r
            + 2.121_379_430_158_659_6e4) * r
            + 5.394_196_021_424_751_1e3) * r
            + 6.871_870_074_920_579_1e2) * r
            + 4.231_333_070_160_091_1e1) * r
            + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r
            + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506_1e-1) * r
            + 1.270_458_252_452_368_4) * r
            + 3.647_848_324_763_204_6) * r
            + 5.769_497_221_460_691_4) * r
            + 4.630_337_846_156_545_3) * r
            + 1.423_437_110_749_683_6)
            / (((((((1.050_750_071_644_416_8e-9 * r
            + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2) * r
            + 1.481_039_764_274_800_7e-1) * r
            + 6.897_673_349_851e-1) * r
            + 1.676_384_830_183_803_8) * r
            + 2.053_191_626_637_758_8) * r
            + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r
            + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3) * r
            + 2.653_218_952_657_612_3e-2) * r
            + 2.965_605_718_285_048_9e-1) * r
            + 1.784_826_539_917_291_3) * r
            + 5.463_784_911_164_114_4) * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_8e-15 * r
            + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_7e-5) * r
            + 7.868_691_311_456_132_6e-4) * r
            + 1.487_536_129_085_061_5e-2) * r
            + 1.369_298_809_227_358e-1) * r
            + 5.998_322_065_558_879_4e-1) * r
            + 1.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}
