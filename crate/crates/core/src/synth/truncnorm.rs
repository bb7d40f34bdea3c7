//! Truncated normal sampling with the parent location solved so that the
//! truncated (and optionally integer-rounded) mean hits a target.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::stats::special::{normal_cdf, normal_quantile, normal_sf};

/// Probability mass of a standard normal on [a, b], computed in whichever
/// tail keeps precision.
fn mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_sf(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
    /// Round draws to the nearest integer; support then runs over
    /// `[lo - 0.5, hi + 0.5]` before rounding.
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("target mean {mean} is not attainable on [{lo}, {hi}] with sd {sd}")]
pub struct CalibrationError {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    fn support(&self) -> (f64, f64) {
        if self.integer {
            (self.lo - 0.5, self.hi + 0.5)
        } else {
            (self.lo, self.hi)
        }
    }

    /// Mean of the (rounded) truncated distribution.
    pub fn mean(&self) -> f64 {
        let (lo, hi) = self.support();
        let z = |x: f64| (x - self.mu) / self.sigma;
        let (a, b) = (z(lo), z(hi));
        let total = mass(a, b);
        if !self.integer {
            let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            return self.mu + self.sigma * (phi(a) - phi(b)) / total;
        }
        let (first, last) = (self.lo.round() as i64, self.hi.round() as i64);
        let mut acc = 0.0;
        for k in first..=last {
            let k = k as f64;
            acc += k * mass(z(k - 0.5), z(k + 0.5));
        }
        acc / total
    }

    /// Solves for the parent location so the truncated mean equals `mean`,
    /// keeping the parent SD at `sd`.
    pub fn calibrated(mean: f64, sd: f64, lo: f64, hi: f64, integer: bool) -> Result<Self, CalibrationError> {
        let err = CalibrationError { mean, sd, lo, hi };
        if !(sd > 0.0) || !(lo < hi) || !(mean > lo && mean < hi) {
            return Err(err);
        }
        let mut d = TruncatedNormal { mu: mean, sigma: sd, lo, hi, integer };
        let (slo, shi) = d.support();
        // Beyond ~30 SD the tail masses lose all precision.
        let (mut left, mut right) = (slo - 30.0 * sd, shi + 30.0 * sd);
        d.mu = left;
        let m_left = d.mean();
        d.mu = right;
        let m_right = d.mean();
        if !(m_left <= mean && mean <= m_right) {
            return Err(err);
        }
        for _ in 0..200 {
            let mid = 0.5 * (left + right);
            d.mu = mid;
            if d.mean() < mean {
                left = mid;
            } else {
                right = mid;
            }
            if right - left < 1e-12 * sd {
                break;
            }
        }
        d.mu = 0.5 * (left + right);
        Ok(d)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.support();
        let a = (lo - self.mu) / self.sigma;
        let b = (hi - self.mu) / self.sigma;
        let z = if mass(a, b) > 0.25 {
            loop {
                let z: f64 = StandardNormal.sample(rng);
                if z >= a && z <= b {
                    break z;
                }
            }
        } else if a >= 0.0 {
            // Upper tail: invert the survival function.
            let (qa, qb) = (normal_sf(a), normal_sf(b));
            let u = qb + rng.random::<f64>() * (qa - qb);
            -normal_quantile(u)
        } else {
            let (pa, pb) = (normal_cdf(a), normal_cdf(b));
            let u = pa + rng.random::<f64>() * (pb - pa);
            normal_quantile(u)
        };
        let x = (self.mu + self.sigma * z.clamp(a, b)).clamp(lo, hi);
        if self.integer {
            x.round().clamp(self.lo, self.hi)
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_mean(d: &TruncatedNormal, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64
    }

    #[test]
    fn untruncated_mean_is_parent_mean() {
        let d = TruncatedNormal { mu: 5.0, sigma: 1.0, lo: -100.0, hi: 100.0, integer: false };
        assert!((d.mean() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_mean_matches_heavily_skewed_targets() {
        // Oxygen saturation piles up against 100.
        let d = TruncatedNormal::calibrated(98.26, 6.93, 0.0, 100.0, true).unwrap();
        assert!((d.mean() - 98.26).abs() < 1e-8);
        assert!((sample_mean(&d, 200_000) - 98.26).abs() < 0.02);
        // A rare AIS region: almost all zeros.
        let d = TruncatedNormal::calibrated(0.03, 0.36, 0.0, 6.0, true).unwrap();
        assert!((d.mean() - 0.03).abs() < 1e-8);
        assert!((sample_mean(&d, 200_000) - 0.03).abs() < 0.003);
    }

    #[test]
    fn draws_respect_bounds() {
        let d = TruncatedNormal::calibrated(3.85, 0.62, 1.0, 4.0, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            assert!((1.0..=4.0).contains(&x) && x.fract() == 0.0);
        }
    }

    #[test]
    fn unattainable_target_is_rejected() {
        assert!(TruncatedNormal::calibrated(7.0, 1.0, 0.0, 6.0, true).is_err());
    }
}
