use rand::RngCore;

use crate::accounting::Threshold;
use crate::error::{Error, Result};

/// Per-item noise distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
}

impl NoiseKind {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(NoiseKind::Gaussian { sigma })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("laplace scale must be > 0, got {scale}")));
        }
        Ok(NoiseKind::Laplace { scale })
    }
}

/// T* = T + buffer; greedy policies stop funding items once they reach it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BufferedThreshold {
    pub base: Threshold,
    pub buffer: f64,
}

impl BufferedThreshold {
    pub fn new(base: Threshold, buffer: f64) -> Result<Self> {
        if !(buffer.is_finite() && buffer >= 0.0) {
            return Err(Error::invalid(format!("buffer must be >= 0, got {buffer}")));
        }
        Ok(BufferedThreshold { base, buffer })
    }

    pub fn value(&self) -> f64 {
        self.base.value + self.buffer
    }
}

#[inline]
fn unit_open_zero<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One draw. Gaussian by Box–Muller (cosine branch), Laplace by inverse CDF.
#[inline]
pub fn sample_noise<R: RngCore + ?Sized>(kind: NoiseKind, rng: &mut R) -> f64 {
    match kind {
        NoiseKind::Gaussian { sigma } => {
            let r = (-2.0 * unit_open_zero(rng).ln()).sqrt();
            let theta = std::f64::consts::TAU * unit(rng);
            sigma * r * theta.cos()
        }
        NoiseKind::Laplace { scale } => {
            // u uniform on (−½, ½]
            let u = unit_open_zero(rng) - 0.5;
            let mag = -(1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
            scale * mag.copysign(u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    const DRAWS: usize = 1_000_000;

    #[test]
    fn gaussian_mean_and_variance() {
        let sigma = 2.5;
        let mut rng = StreamRng::from_seed(11);
        let xs: Vec<f64> = (0..DRAWS)
            .map(|_| sample_noise(NoiseKind::Gaussian { sigma }, &mut rng))
            .collect();
        let mean = xs.iter().sum::<f64>() / DRAWS as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
        assert!(mean.abs() <= 5.0 * sigma / 1e3, "mean={mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() <= 0.01, "var={var}");
    }

    #[test]
    fn laplace_median_of_magnitude() {
        let b = 0.8;
        let mut rng = StreamRng::from_seed(12);
        let above = (0..DRAWS)
            .filter(|_| sample_noise(NoiseKind::Laplace { scale: b }, &mut rng).abs() > b * 2f64.ln())
            .count();
        let p = above as f64 / DRAWS as f64;
        assert!((p - 0.5).abs() <= 0.01, "p={p}");
    }

    #[test]
    fn laplace_is_symmetric() {
        let mut rng = StreamRng::from_seed(13);
        let pos = (0..DRAWS)
            .filter(|_| sample_noise(NoiseKind::Laplace { scale: 1.0 }, &mut rng) > 0.0)
            .count();
        assert!((pos as f64 / DRAWS as f64 - 0.5).abs() < 0.003);
    }

    #[test]
    fn constructors_validate() {
        assert!(NoiseKind::gaussian(0.0).is_err());
        assert!(NoiseKind::laplace(-1.0).is_err());
        assert!(BufferedThreshold::new(Threshold { value: 1.0 }, -0.1).is_err());
        let b = BufferedThreshold::new(Threshold { value: 1.0 }, 0.5).unwrap();
        assert_eq!(b.value(), 1.5);
    }
}
