//! Snowflake approximations f_n and f̄_n: construction from a rotation
//! sequence, pointwise evaluation with overflow-safe Koebe stages, boundary
//! rendering, and the Monte Carlo cross-check of the integral-means growth.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexmaps::{log_ratio_from_infinity, ComplexValue, SlitBlock};
use crate::error::{Error, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// i.i.d. uniform rotation angles θ₀..θ_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSequence {
    pub angles: Vec<f64>,
    /// Generator seed when the sequence was drawn (None for explicit angles).
    pub seed: Option<u64>,
}

/// Deterministic uniform angles from a ChaCha8 stream.
pub fn make_rotations(seed: u64, count: usize) -> RotationSequence {
    assert!(count >= 1, "need at least one rotation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = (0..count).map(|_| rng.gen_range(0.0..TAU)).collect();
    RotationSequence { angles, seed: Some(seed) }
}

impl RotationSequence {
    pub fn explicit(angles: Vec<f64>) -> RotationSequence {
        RotationSequence {
            angles: angles.into_iter().map(|a| a.rem_euclid(TAU)).collect(),
            seed: None,
        }
    }
}

/// One snowflake approximation: f_n = Φ₀∘⋯∘Φ_n with Φ_j = K_{k^j} φ_{θ_j}.
#[derive(Debug, Clone, PartialEq)]
pub struct SnowflakeRealization {
    pub block: SlitBlock,
    pub k: u32,
    pub rotations: RotationSequence,
}

/// Result of one Koebe-stage evaluation: the image point and the stage
/// derivative at the input.
struct StageValue {
    value: Complex64,
    derivative: Complex64,
}

/// Φ(z) = z·exp(L(z^K)/K) with L(w) = log(φ_θ(w)/w) continued radially from
/// infinity.  Powers are taken in log space so arbitrarily large K is safe.
fn koebe_stage(block: &SlitBlock, theta: f64, kpow: f64, z: Complex64) -> Result<StageValue> {
    let rot = Complex64::from_polar(1.0, theta);
    let lz = z.ln();
    let lw_re = kpow * lz.re;
    if lw_re > 40.0 {
        // far field: phi(w)/w = b1 + O(1/w), phi'/phi = 1/w + O(1/w^2)
        let l = Complex64::new(block.b1.ln(), 0.0);
        let value = z * (l / kpow).exp();
        return Ok(StageValue { value, derivative: value / z });
    }
    let lw_im = (kpow * lz.im).rem_euclid(TAU);
    let w = Complex64::new(lw_re, lw_im).exp();
    let zr = w / rot; // pre-rotated argument of the unrotated block
    let l = block.log_ratio_continued(zr)?; // log(phi_theta(w)/w) (rotation cancels)
    let value = z * (l / kpow).exp();
    // Phi'(z) = Phi(z) · z^{K-1} · phi_theta'(w)/phi_theta(w)
    let ratio = block.phi_prime(zr)? / (block.phi(zr)? * rot);
    let zk1 = ((kpow - 1.0) * lz).exp();
    Ok(StageValue { value, derivative: value * zk1 * ratio })
}

impl SnowflakeRealization {
    pub fn new(block: SlitBlock, k: u32, rotations: RotationSequence) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!("k = {k} must be >= 2")));
        }
        if rotations.angles.is_empty() {
            return Err(Error::InvalidConfig("empty rotation sequence".into()));
        }
        Ok(SnowflakeRealization { block, k, rotations })
    }

    /// Generation count n (angles are θ₀..θ_n).
    pub fn generations(&self) -> usize {
        self.rotations.angles.len() - 1
    }

    /// f_n(z) = Φ₀(Φ₁(⋯Φ_n(z))).
    pub fn eval_fn_point(&self, z: ComplexValue) -> Result<ComplexValue> {
        let mut v = z;
        for (j, &theta) in self.rotations.angles.iter().enumerate().rev() {
            v = koebe_stage(&self.block, theta, (self.k as f64).powi(j as i32), v)?.value;
        }
        Ok(v)
    }

    /// f̄_n(z) = Φ₁(⋯Φ_n(z)) — the symmetric snowflake (starts at identity).
    pub fn eval_fbar_point(&self, z: ComplexValue) -> Result<ComplexValue> {
        let mut v = z;
        for (j, &theta) in self.rotations.angles.iter().enumerate().rev() {
            if j == 0 {
                break;
            }
            v = koebe_stage(&self.block, theta, (self.k as f64).powi(j as i32), v)?.value;
        }
        Ok(v)
    }

    /// f_n over a sample sequence.
    pub fn eval_fn(&self, points: &[ComplexValue]) -> Result<Vec<ComplexValue>> {
        points.iter().map(|&z| self.eval_fn_point(z)).collect()
    }

    /// f̄_n over a sample sequence.
    pub fn eval_fbar(&self, points: &[ComplexValue]) -> Result<Vec<ComplexValue>> {
        points.iter().map(|&z| self.eval_fbar_point(z)).collect()
    }

    /// f_n′(z) by the chain rule over the stage stack.
    pub fn eval_fn_deriv(&self, z: ComplexValue) -> Result<ComplexValue> {
        let mut v = z;
        let mut d = Complex64::new(1.0, 0.0);
        for (j, &theta) in self.rotations.angles.iter().enumerate().rev() {
            let stage = koebe_stage(&self.block, theta, (self.k as f64).powi(j as i32), v)?;
            d *= stage.derivative;
            v = stage.value;
        }
        Ok(d)
    }

    /// Numerical capacity from a large-radius ratio.
    pub fn capacity_numeric(&self) -> Result<f64> {
        let r = 1e7;
        Ok((self.eval_fn_point(Complex64::new(r, 0.0))?.norm() / r).ln())
    }

    pub fn fbar_capacity_numeric(&self) -> Result<f64> {
        let r = 1e7;
        Ok((self.eval_fbar_point(Complex64::new(r, 0.0))?.norm() / r).ln())
    }

    /// Boundary polyline: f_n over |z| = radius, adaptively refined in angle
    /// until adjacent image points are closer than a gap threshold.
    pub fn render_boundary(&self, samples: usize, radius: f64) -> Result<Vec<ComplexValue>> {
        if radius <= 1.0 {
            return Err(Error::InvalidConfig(format!("render radius {radius} must be > 1")));
        }
        let base = samples.max(16);
        let mut angles: Vec<f64> = (0..base).map(|i| TAU * i as f64 / base as f64).collect();
        angles.push(TAU); // closed
        let eval = |a: f64| self.eval_fn_point(Complex64::from_polar(radius, a));
        let mut pts: Vec<ComplexValue> = angles.iter().map(|&a| eval(a)).collect::<Result<_>>()?;
        // refine where adjacent image points are far apart, relative to the
        // overall diameter
        let diameter = {
            let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in &pts {
                lo_x = lo_x.min(p.re);
                hi_x = hi_x.max(p.re);
                lo_y = lo_y.min(p.im);
                hi_y = hi_y.max(p.im);
            }
            ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt()
        };
        let gap = 0.01 * diameter;
        let cap = 16 * base;
        let mut i = 0;
        while i + 1 < pts.len() {
            if (pts[i + 1] - pts[i]).norm() > gap && pts.len() < cap {
                let mid = 0.5 * (angles[i] + angles[i + 1]);
                angles.insert(i + 1, mid);
                pts.insert(i + 1, eval(mid)?);
            } else {
                i += 1;
            }
        }
        if pts.len() >= cap {
            let jump = pts.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
            if jump > gap * 4.0 {
                return Err(Error::InsufficientResolution { jump });
            }
        }
        Ok(pts)
    }
}

/// Monte Carlo estimate of the integral-means growth exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEstimate {
    pub t: f64,
    pub radii: Vec<f64>,
    /// Per-radius sample mean of |f_n′(re^{iθ})|^t.
    pub means: Vec<f64>,
    /// Per-radius standard error of the mean.
    pub std_errors: Vec<f64>,
    /// Least-squares slope of log(mean) vs −log(r−1).
    pub slope: f64,
    pub samples: usize,
    pub generations: usize,
    pub seed: u64,
    pub rejected: usize,
    /// Set when more than 1% of draws hit branch cuts and were resampled.
    pub rejection_warning: bool,
}

/// Smallest n with k^{−n} < min(r−1)/10.
pub fn default_generations(k: u32, radii: &[f64]) -> usize {
    let min_gap = radii.iter().map(|r| r - 1.0).fold(f64::MAX, f64::min);
    let mut n = 1;
    while (k as f64).powi(-(n as i32)) >= min_gap / 10.0 && n < 12 {
        n += 1;
    }
    n
}

fn stream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed, index) so per-sample streams are
    // independent of thread scheduling
    let mut x = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-radius Monte Carlo means of |f_n′|^t over random realizations with a
/// fresh uniform evaluation angle per draw, plus the fitted growth slope.
#[allow(clippy::too_many_arguments)]
pub fn mc_integral_means(
    block: &SlitBlock,
    k: u32,
    t: f64,
    generations: usize,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if radii.is_empty() || samples == 0 {
        return Err(Error::InvalidConfig("mc needs radii and samples".into()));
    }
    if radii.iter().any(|&r| r <= 1.0) {
        return Err(Error::InvalidConfig("mc radii must be > 1".into()));
    }
    let nr = radii.len();
    // per-sample rows, computed in parallel, reduced in fixed index order
    let rows: Vec<Result<(Vec<f64>, usize)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, i as u64));
            let rot = RotationSequence {
                angles: (0..=generations).map(|_| rng.gen_range(0.0..TAU)).collect(),
                seed: None,
            };
            let real = SnowflakeRealization::new(*block, k, rot)?;
            let mut row = Vec::with_capacity(nr);
            let mut rejected = 0;
            for &r in radii {
                let mut attempts = 0;
                let v = loop {
                    let theta = rng.gen_range(0.0..TAU);
                    match real.eval_fn_deriv(Complex64::from_polar(r, theta)) {
                        Ok(d) => break d.norm().powf(t),
                        Err(_) if attempts < 32 => {
                            attempts += 1;
                            rejected += 1;
                        }
                        Err(e) => return Err(e),
                    }
                };
                row.push(v);
            }
            Ok((row, rejected))
        })
        .collect();
    let mut sum = vec![0.0; nr];
    let mut sumsq = vec![0.0; nr];
    let mut rejected = 0;
    for row in rows {
        let (row, rej) = row?;
        rejected += rej;
        for (j, v) in row.into_iter().enumerate() {
            sum[j] += v;
            sumsq[j] += v * v;
        }
    }
    let n = samples as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_errors: Vec<f64> = sumsq
        .iter()
        .zip(&means)
        .map(|(&sq, &m)| ((sq / n - m * m).max(0.0) / n).sqrt())
        .collect();
    // least squares: log(mean) = slope · (−log(r−1)) + intercept
    let xs: Vec<f64> = radii.iter().map(|&r| -(r - 1.0).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|&m| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / nr as f64;
    let my = ys.iter().sum::<f64>() / nr as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let total_draws = samples * nr + rejected;
    Ok(McEstimate {
        t,
        radii: radii.to_vec(),
        means,
        std_errors,
        slope,
        samples,
        generations,
        seed,
        rejected,
        rejection_warning: rejected as f64 > 0.01 * total_draws as f64,
    })
}

/// Pointwise Koebe k-root of an arbitrary evaluator, branch fixed by radial
/// continuation from infinity (used by the stationarity property test and the
/// renderer plumbing).
pub fn koebe_root_point<F>(eval: &F, k: u32, z: ComplexValue) -> Result<ComplexValue>
where
    F: Fn(ComplexValue) -> Result<ComplexValue>,
{
    let w = z.powu(k);
    let l = log_ratio_from_infinity(eval, w)?;
    Ok(z * (l / k as f64).exp())
}
