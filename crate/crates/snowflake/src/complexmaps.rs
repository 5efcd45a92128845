//! The slit building block: exact evaluation of φ, its inverse ψ, their
//! derivatives, the logarithmic capacity, and sup-bounds on higher derivatives.
//!
//! The block maps the exterior of the unit disc into itself, cutting a
//! horizontal slit of length `l` that starts at 1.  A scale factor `s > 1`
//! pushes the two square-root singular points of φ′ strictly inside the unit
//! circle, so that all evaluations on |z| ≥ 1 stay regular.

use num_complex::Complex64;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};

use crate::error::{Error, Result};

/// Ambient complex scalar used throughout the crate.
pub type ComplexValue = Complex64;

/// (z−1)/(z+1): maps the exterior of the unit disc onto the right half-plane.
pub fn mobius_mu1(z: ComplexValue) -> Result<ComplexValue> {
    if (z + 1.0).norm() == 0.0 {
        return Err(Error::Domain("mu1 pole at z = -1".into()));
    }
    Ok((z - 1.0) / (z + 1.0))
}

/// (z+1)/(z−1): maps the right half-plane onto the exterior of the unit disc.
///
/// Note that μ₂ is not the pointwise inverse of μ₁; the exact relation is
/// μ₂(1/μ₁(z)) = z (equivalently μ₂∘μ₁ = −id).  The slit map below therefore
/// uses [`mobius_mu1_inv`] where the half-plane picture calls for "mapping
/// back".
pub fn mobius_mu2(z: ComplexValue) -> Result<ComplexValue> {
    if (z - 1.0).norm() == 0.0 {
        return Err(Error::Domain("mu2 pole at z = 1".into()));
    }
    Ok((z + 1.0) / (z - 1.0))
}

/// True inverse of μ₁: (1+u)/(1−u) = −μ₂(u).
pub fn mobius_mu1_inv(u: ComplexValue) -> Result<ComplexValue> {
    if (u - 1.0).norm() == 0.0 {
        return Err(Error::Domain("mu1_inv pole at u = 1".into()));
    }
    Ok((1.0 + u) / (1.0 - u))
}

fn check_sqrt_arg(w: ComplexValue, what: &str) -> Result<ComplexValue> {
    if w.im == 0.0 && w.re < 0.0 {
        return Err(Error::Degenerate(format!(
            "{what}: square-root argument {w} on the branch cut"
        )));
    }
    Ok(w.sqrt()) // principal branch, Re ≥ 0
}

/// The straight-slit building block with slit length `l` and scale `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitBlock {
    /// Slit length.
    pub l: f64,
    /// Scale factor; s > 1 regularizes the slit-base singularities.
    pub s: f64,
    /// Cached constant l²/(4l+4).
    pub c: f64,
    /// Singular point of φ′ with negative imaginary part.
    pub z1: ComplexValue,
    /// Conjugate singular point.
    pub z2: ComplexValue,
    /// Leading coefficient of the expansion at infinity, b₁ = s(1+c).
    pub b1: f64,
    /// Logarithmic capacity, log|b₁|.
    pub capacity: f64,
}

impl SlitBlock {
    pub fn new(l: f64, s: f64) -> Result<SlitBlock> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidConfig(format!("slit length l = {l} must be >= 0")));
        }
        if !(s >= 1.0) || !s.is_finite() {
            return Err(Error::InvalidConfig(format!("scale s = {s} must be >= 1")));
        }
        let c = l * l / (4.0 * l + 4.0);
        // z1 = mu1_inv(-i sqrt(c)) / s, on the circle |z| = 1/s.
        let sq = Complex64::new(0.0, -c.sqrt());
        let z1 = (1.0 + sq) / (1.0 - sq) / s;
        let b1 = s * (1.0 + c);
        Ok(SlitBlock {
            l,
            s,
            c,
            z1,
            z2: z1.conj(),
            b1,
            capacity: b1.abs().ln(),
        })
    }

    /// The identity map (l = 0, s = 1).
    pub fn identity() -> SlitBlock {
        SlitBlock::new(0.0, 1.0).expect("identity block parameters are valid")
    }

    fn check_domain(&self, z: ComplexValue) -> Result<()> {
        if z.norm() * self.s < 1.0 - 1e-12 {
            return Err(Error::Domain(format!(
                "|z| = {} not above 1/s = {}",
                z.norm(),
                1.0 / self.s
            )));
        }
        Ok(())
    }

    /// φ(z) = μ₁⁻¹( √(μ₁²(zs) + c) / √(1+c) ), evaluated in the
    /// cancellation-free form (√(1+c) + g)²(zs+1)²/(4zs) which stays accurate
    /// for arbitrarily large |z| (the naive Möbius composition loses all
    /// precision near its pole at infinity).
    pub fn phi(&self, z: ComplexValue) -> Result<ComplexValue> {
        self.check_domain(z)?;
        let zs = z * self.s;
        if self.c == 0.0 {
            return Ok(zs);
        }
        let m = mobius_mu1(zs)?;
        let g = check_sqrt_arg(m * m + self.c, "phi")?;
        let a = (1.0 + self.c).sqrt() + g;
        Ok(a * a * (zs + 1.0) * (zs + 1.0) / (4.0 * zs))
    }

    /// Analytic derivative of φ via the logarithmic derivative of the stable
    /// product form.
    pub fn phi_prime(&self, z: ComplexValue) -> Result<ComplexValue> {
        self.check_domain(z)?;
        let zs = z * self.s;
        if self.c == 0.0 {
            return Ok(Complex64::new(self.s, 0.0));
        }
        let m = mobius_mu1(zs)?;
        let g = check_sqrt_arg(m * m + self.c, "phi_prime")?;
        if g.norm() < 1e-14 {
            return Err(Error::Degenerate(format!("phi_prime singular near {z}")));
        }
        let a = (1.0 + self.c).sqrt() + g;
        let phi = a * a * (zs + 1.0) * (zs + 1.0) / (4.0 * zs);
        // g' = m·m'/g with m' = 2s/(zs+1)^2
        let g_prime = m * (2.0 * self.s / ((zs + 1.0) * (zs + 1.0))) / g;
        Ok(phi * (2.0 * g_prime / a + 2.0 * self.s / (zs + 1.0) - 1.0 / z))
    }

    /// Closed-form inverse ψ(w) = μ₁⁻¹( √((1+c)μ₁²(w) − c) ) / s, in the
    /// stable form (1 + G)²(w+1)²/(4w(1+c)s).
    pub fn psi(&self, w: ComplexValue) -> Result<ComplexValue> {
        if self.c == 0.0 {
            return Ok(w / self.s);
        }
        let m = mobius_mu1(w)?;
        let g = check_sqrt_arg((1.0 + self.c) * m * m - self.c, "psi")?;
        let a = 1.0 + g;
        Ok(a * a * (w + 1.0) * (w + 1.0) / (4.0 * w * (1.0 + self.c) * self.s))
    }

    /// Derivative of ψ.
    pub fn psi_prime(&self, w: ComplexValue) -> Result<ComplexValue> {
        if self.c == 0.0 {
            return Ok(Complex64::new(1.0 / self.s, 0.0));
        }
        let m = mobius_mu1(w)?;
        let g = check_sqrt_arg((1.0 + self.c) * m * m - self.c, "psi_prime")?;
        if g.norm() < 1e-14 {
            return Err(Error::Degenerate(format!("psi_prime singular near {w}")));
        }
        let a = 1.0 + g;
        let psi = a * a * (w + 1.0) * (w + 1.0) / (4.0 * w * (1.0 + self.c) * self.s);
        let g_prime = (1.0 + self.c) * m * (2.0 / ((w + 1.0) * (w + 1.0))) / g;
        Ok(psi * (2.0 * g_prime / a + 2.0 / (w + 1.0) - 1.0 / w))
    }

    /// ψ restricted to the real ray; the slit keeps the positive real axis real.
    pub fn psi_real(&self, x: f64) -> Result<f64> {
        let v = self.psi(Complex64::new(x, 0.0))?;
        if v.im.abs() > 1e-9 * v.norm() {
            return Err(Error::Degenerate(format!(
                "psi({x}) left the real axis (point on the slit)"
            )));
        }
        Ok(v.re)
    }

    /// Logarithmic capacity log|b₁|, in closed form.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Numerical capacity from the large-|z| limit; fallback/cross-check.
    pub fn capacity_numeric(&self, radius: f64) -> Result<f64> {
        let z = Complex64::new(radius, 0.0);
        Ok((self.phi(z)?.norm() / radius).ln())
    }

    /// Value of the slit tip, φ(1/s⁺) = μ₁⁻¹(√(c/(1+c))): the slit occupies
    /// [1, tip] on the real axis.
    pub fn slit_tip(&self) -> f64 {
        let u = (self.c / (1.0 + self.c)).sqrt();
        (1.0 + u) / (1.0 - u)
    }

    /// Continuous branch of log(φ(w)/w), normalized to log b₁ at infinity,
    /// carried down to `w` along the radial ray through `w`.
    pub fn log_ratio_continued(&self, w: ComplexValue) -> Result<ComplexValue> {
        let aw = w.norm();
        if aw <= 1.0 / self.s {
            return Err(Error::Domain(format!("|w| = {aw} too small")));
        }
        if aw >= 1e9 {
            // phi(w)/w = b1 + O(1/w); branch correction is below noise here.
            return Ok(Complex64::new(self.b1.ln(), 0.0));
        }
        let dir = w / aw;
        let start: f64 = 1e9;
        let steps = 160;
        let ratio = (aw / start).powf(1.0 / steps as f64);
        let mut phase = 0.0;
        let mut prev_arg = 0.0; // arg of b1 at infinity (b1 > 0)
        let mut r = start;
        let mut val = Complex64::new(self.b1, 0.0);
        for i in 1..=steps {
            r = if i == steps { aw } else { r * ratio };
            let z = dir * r;
            val = self.phi(z)? / z;
            let a = val.arg();
            let mut d = a - prev_arg;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            phase += d;
            prev_arg = a;
        }
        Ok(Complex64::new(val.norm().ln(), phase))
    }
}

/// Koebe n-root transform evaluated along an ordered circle sample:
/// returns φ(zⁿ)^{1/n} with the branch unwrapped along the sequence and
/// normalized so the result behaves as b₁^{1/n}·z at infinity.
pub fn koebe_root<F>(eval: F, n: u32, points: &[ComplexValue]) -> Result<Vec<ComplexValue>>
where
    F: Fn(ComplexValue) -> Result<ComplexValue>,
{
    assert!(n >= 1, "root order must be at least 1");
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    // Continuous branch of log(phi(w)/w) along the image sequence, anchored
    // by radial continuation from infinity at the first point.
    let w0 = points[0].powu(n);
    let anchor = log_ratio_from_infinity(&eval, w0)?;
    let mut out = Vec::with_capacity(points.len());
    let mut prev_arg = anchor.im;
    let mut phase = anchor.im;
    for (i, &z) in points.iter().enumerate() {
        let w = z.powu(n);
        let ratio = eval(w)? / w;
        let a = ratio.arg();
        if i == 0 {
            // anchor already holds the absolute phase of this point
            phase = anchor.im;
            prev_arg = a;
        } else {
            let mut d = a - prev_arg;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            // folded jumps cannot exceed π; past ~2.2 rad the unwrapping is
            // aliased (the observed spread of arg(φ(w)/w) reaches ~2.6)
            if d.abs() >= 2.2 {
                return Err(Error::InsufficientResolution { jump: d.abs() });
            }
            phase += d;
            prev_arg = a;
        }
        let log_ratio = Complex64::new(ratio.norm().ln(), phase);
        out.push(z * (log_ratio / nf).exp());
    }
    Ok(out)
}

/// Radial continuation of log(eval(w)/w) from infinity down to `w`, for any
/// evaluator with a positive real leading coefficient at infinity.
pub fn log_ratio_from_infinity<F>(eval: &F, w: ComplexValue) -> Result<ComplexValue>
where
    F: Fn(ComplexValue) -> Result<ComplexValue>,
{
    let aw = w.norm();
    let dir = w / aw;
    let start = (aw * 10.0).max(1e8);
    let steps = 200;
    let ratio = (aw / start).powf(1.0 / steps as f64);
    let mut r = start;
    let z0 = dir * r;
    let mut val = eval(z0)? / z0;
    let mut prev_arg = val.arg();
    // assume the evaluator has positive real leading coefficient at infinity;
    // fold its argument at the start radius into the phase directly
    let mut phase = prev_arg;
    for i in 1..=steps {
        r = if i == steps { aw } else { r * ratio };
        let z = dir * r;
        val = eval(z)? / z;
        let a = val.arg();
        let mut d = a - prev_arg;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        phase += d;
        prev_arg = a;
    }
    Ok(Complex64::new(val.norm().ln(), phase))
}

/// Upper bounds M_j ≥ sup_{|z|≥1} |φ^{(j)}(z)| together with optional bounds
/// for a radial test function ν.
#[derive(Debug, Clone)]
pub struct DerivativeBounds {
    /// phi_bounds[j-1] bounds the j-th derivative, j = 1..=max order.
    pub phi_bounds: Vec<f64>,
    /// Optional matching bounds |ν^{(j)}| on [1, R]; filled by the operator layer.
    pub nu_bounds: Vec<f64>,
}

/// Taylor coefficients |a_m| of h(u) = φ(a + u²) around the singular point a,
/// obtained from an FFT on a u-circle with the square-root branch tracked
/// continuously along the path.
fn singular_series_coeffs(block: &SlitBlock, rho_u: f64, keep: usize) -> Vec<f64> {
    const NF: usize = 8192;
    let a = block.z1;
    let c = block.c;
    let s = block.s;
    let sq1c = (1.0 + c).sqrt();
    let mut vals = vec![FftComplex::new(0.0, 0.0); NF];
    let mut sign = 1.0;
    let mut prev = Complex64::new(0.0, 0.0);
    for (j, slot) in vals.iter_mut().enumerate() {
        let u = Complex64::from_polar(rho_u, 2.0 * std::f64::consts::PI * j as f64 / NF as f64);
        let z = a + u * u;
        let m = (z * s - 1.0) / (z * s + 1.0);
        let g = (m * m + c).sqrt();
        if j == 0 {
            prev = g;
        } else {
            // keep the branch continuous along the path
            if (g * sign - prev).norm() > (-g * sign - prev).norm() {
                sign = -sign;
            }
            prev = g * sign;
        }
        let gc = g * sign;
        let h = (1.0 + gc / sq1c) / (1.0 - gc / sq1c);
        *slot = FftComplex::new(h.re, h.im);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(NF).process(&mut vals);
    (0..keep)
        .map(|m| (vals[m].norm() / NF as f64) / rho_u.powi(m as i32))
        .collect()
}

/// |m/2 · (m/2 − 1) ⋯ (m/2 − j + 1)|
fn falling_factor(m_half: f64, j: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..j {
        v *= (m_half - i as f64).abs();
    }
    v
}

/// Rigorous-style upper bounds on sup_{|z|≥1} |φ^{(j)}| for j = 1..=max_order:
/// a square-root power series around each singular point (with a geometric
/// tail) covers the neighbourhood of the slit base, and a sampled maximum with
/// margin covers the rest of the circle.
pub fn derivative_sup_bounds(block: &SlitBlock, max_order: usize) -> Result<DerivativeBounds> {
    if block.s <= 1.0 {
        return Err(Error::UnsupportedParameter(
            "derivative bounds need s > 1 (they diverge at s = 1)".into(),
        ));
    }
    assert!(max_order >= 1 && max_order <= 7, "supported orders are 1..=7");
    let a = block.z1;
    let dmin = (block.z1 - block.z2).norm().min(block.z1.norm());
    let rho_u = (0.8 * dmin).sqrt();
    let rho_loc = (0.35 * dmin).min(0.35);
    let q_u = 0.95 * dmin.sqrt();
    let keep = 200;
    let coeffs = singular_series_coeffs(block, rho_u, keep);
    let tail_c = 2.0
        * coeffs
            .iter()
            .enumerate()
            .map(|(m, &v)| v * q_u.powi(m as i32))
            .fold(0.0, f64::max);
    let d = 1.0 - 1.0 / block.s; // distance from |z| >= 1 to the singular point

    let mut bounds = Vec::with_capacity(max_order);
    for j in 1..=max_order {
        // Series region: d <= |z - a| <= rho_loc.
        let mut near = 0.0;
        for m in 0..2000 {
            let am = if m < keep {
                coeffs[m]
            } else {
                tail_c * q_u.powi(-(m as i32))
            };
            let e = m as f64 / 2.0 - j as f64;
            let r = if e < 0.0 { d.powf(e) } else { rho_loc.powf(e) };
            near += am * falling_factor(m as f64 / 2.0, j) * r;
        }
        // Far region: sampled maximum with margin.
        let far = 1.5 * far_region_derivative_max(block, j, rho_loc);
        let mut b = near.max(far);
        if let Some(&p) = bounds.last() {
            b = b.max(p); // monotone in j
        }
        bounds.push(b);
    }
    let _ = a;
    Ok(DerivativeBounds {
        phi_bounds: bounds,
        nu_bounds: Vec::new(),
    })
}

/// Distance from z to the branch-cut arc of φ (the arc of |ζ| = 1/s through
/// −1/s between the two singular points).
fn distance_to_cut(block: &SlitBlock, z: ComplexValue) -> f64 {
    let alpha_star = (block.z1 * block.s).arg().abs();
    let d_sing = (z - block.z1).norm().min((z - block.z2).norm());
    if z.arg().abs() >= alpha_star {
        d_sing.min((z.norm() - 1.0 / block.s).abs())
    } else {
        d_sing
    }
}

/// Exact |φ^{(j)}(z₀)| for all j ≤ jmax via a Cauchy integral on a circle that
/// stays clear of the singular points and the branch cut.
pub fn derivatives_at(block: &SlitBlock, z0: ComplexValue, jmax: usize) -> Result<Vec<f64>> {
    let d_sing = (z0 - block.z1).norm().min((z0 - block.z2).norm());
    let rho = (0.45 * d_sing).min(0.9 * distance_to_cut(block, z0)).min(0.08);
    if rho <= 0.0 {
        return Err(Error::Degenerate("evaluation point on the cut".into()));
    }
    const NP: usize = 128;
    let mut vals = vec![FftComplex::new(0.0, 0.0); NP];
    for (i, slot) in vals.iter_mut().enumerate() {
        let z = z0 + Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * i as f64 / NP as f64);
        let v = block.phi(z)?;
        *slot = FftComplex::new(v.re, v.im);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(NP).process(&mut vals);
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(jmax + 1);
    for j in 0..=jmax {
        if j > 0 {
            fact *= j as f64;
        }
        out.push(vals[j].norm() / NP as f64 * fact / rho.powi(j as i32));
    }
    Ok(out)
}

/// Sampled maximum of |φ^{(j)}| on |z| = 1 over points away from the slit base.
fn far_region_derivative_max(block: &SlitBlock, j: usize, rho_loc: f64) -> f64 {
    let n = 720;
    let mut best: f64 = 0.0;
    for i in 0..n {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / n as f64);
        if (z - block.z1).norm().min((z - block.z2).norm()) <= rho_loc {
            continue;
        }
        if let Ok(d) = derivatives_at(block, z, j) {
            best = best.max(d[j]);
        }
    }
    best
}

/// Maximum of |φ^{(j)}| over `samples` points on |z| = 1 (sampling oracle for
/// the bound tests; cut-aware Cauchy circles keep each sample exact).
pub fn sampled_derivative_max(block: &SlitBlock, jmax: usize, samples: usize) -> Vec<f64> {
    let mut best = vec![0.0_f64; jmax + 1];
    for i in 0..samples {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / samples as f64);
        if let Ok(d) = derivatives_at(block, z, jmax) {
            for j in 0..=jmax {
                best[j] = best[j].max(d[j]);
            }
        }
    }
    best
}
