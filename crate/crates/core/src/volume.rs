//! The volume functional `v(f) = vol{x : f(x) ≤ 1}` of a form.
//!
//! Two Monte-Carlo routes are provided and cross-checked:
//!
//! * Laplace: `v(f) = ∫ exp(−f) dx / Γ(1 + n/d)`, estimated by importance
//!   sampling from a Gaussian-like law `∝ exp(−s|x|^d)`. In polar form a draw is
//!   `x = (t/s)^{1/d} θ` with `t ~ Gamma(n/d)` and `θ` uniform on the sphere,
//!   and the weight is `exp(t (1 − f(θ)/s))`.
//! * Spherical: `v(f) = (1/n) ∫_{S^{n−1}} f(θ)^{−n/d} dθ`.
//!
//! Infinite volume is reported through a flag on [`VolumeEstimate`], never as
//! an error, so that solvers can reject such steps.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{ball_form, Form};
use crate::linalg::Matrix;
use crate::norms::{min_sphere_search, SphereSearch};
use crate::rng::{derive_seed, map_chunks, unit_vector, RunningStats};
use crate::sos::eigh;
use crate::special::{gamma, sphere_surface};

pub use crate::special::ball_volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Laplace,
    Spherical,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    /// `+∞` when `infinite` is set.
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub method: VolumeMethod,
    pub infinite: bool,
}

impl VolumeEstimate {
    pub fn infinite(method: VolumeMethod, samples: usize, seed: u64) -> Self {
        Self { value: f64::INFINITY, std_error: 0.0, samples, seed, method, infinite: true }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, samples: 0, seed: 0, method: VolumeMethod::Exact, infinite: false }
    }

    pub fn is_finite(&self) -> bool {
        !self.infinite
    }

    /// Estimate for `t·f`, using `v(t f) = t^{−n/d} v(f)`.
    pub fn rescaled(&self, t: f64, n: usize, d: usize) -> Self {
        let k = t.powf(-(n as f64) / d as f64);
        Self { value: self.value * k, std_error: self.std_error * k, ..*self }
    }
}

fn require_even(d: usize) -> Result<()> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Domain(format!("degree {d} must be even and positive")));
    }
    Ok(())
}

/// `κ = (Γ(1+n/d)/Γ(1+n/2))^{d/n} π^{d/2}`: the rate that makes
/// `exp(−κ|x|^d)` a probability density.
pub fn kappa(n: usize, d: usize) -> Result<f64> {
    require_even(d)?;
    if n == 0 {
        return Err(Error::Domain("variable count must be at least 1".into()));
    }
    let (nf, df) = (n as f64, d as f64);
    Ok((gamma(1.0 + nf / df) / gamma(1.0 + nf / 2.0)).powf(df / nf) * std::f64::consts::PI.powf(df / 2.0))
}

/// Probability law with density `exp(−κ|x|^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLikeLaw {
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
}

impl GaussianLikeLaw {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        Ok(Self { n, d, kappa: kappa(n, d)? })
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-self.kappa * r2.powf(self.d as f64 / 2.0)).exp()
    }

    /// The same law dilated to density `∝ exp(−rate |x|^d)`.
    pub fn with_rate(&self, rate: f64) -> ReferenceLaw {
        ReferenceLaw { n: self.n, d: self.d, rate }
    }

    pub fn reference(&self) -> ReferenceLaw {
        self.with_rate(self.kappa)
    }

    /// `∫ exp(−κ|x|^d) dx` by importance sampling from an isotropic Gaussian
    /// with twice the law's per-coordinate variance; returns `(value, std_error)`.
    pub fn total_mass_mc(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let n = self.n;
        let mut e1 = vec![0u32; n];
        e1[0] = 2;
        let sigma2 = 2.0 * gaussian_like_moment(&e1, n, self.d)?;
        let sigma = sigma2.sqrt();
        let log_norm = 0.5 * n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln();
        let parts = map_chunks(samples, seed, 0, |rng, count| {
            let mut stats = RunningStats::default();
            for _ in 0..count {
                let mut r2 = 0.0;
                for _ in 0..n {
                    let z: f64 = rand::Rng::sample(rng, rand_distr::StandardNormal);
                    r2 += (sigma * z).powi(2);
                }
                let log_w = -self.kappa * r2.powf(self.d as f64 / 2.0) + r2 / (2.0 * sigma2) + log_norm;
                stats.push(log_w.exp());
            }
            stats
        });
        let stats = RunningStats::merged(&parts);
        Ok((stats.mean, stats.std_error()))
    }
}

/// Importance-sampling reference `∝ exp(−rate |x|^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLaw {
    pub n: usize,
    pub d: usize,
    pub rate: f64,
}

/// Settings of the nonnegativity screen run before every volume estimate.
pub const SCREEN: SphereSearch = SphereSearch { restarts: 32, iters: 200, seed: 0 };

/// Weight variance beyond `1e6 · mean²` is treated as evidence that the
/// screen missed a direction where `f ≤ 0`.
const WEIGHT_BLOWUP: f64 = 1e6;

/// Sphere minima at or below this fraction of the Bombieri norm count as zero.
const SCREEN_FLOOR: f64 = 1e-10;

/// Minimum of `f` on the sphere found by the screen, or `None` when the screen
/// finds a direction with `f ≤ 0` (infinite volume).
pub fn screen_min(f: &Form, seed: u64) -> Result<Option<f64>> {
    let opts = SphereSearch { seed: derive_seed(seed, 0x5C_EE_4E), ..SCREEN };
    let best = min_sphere_search(f, opts)?;
    Ok(if best.value > SCREEN_FLOOR * f.bombieri_norm() { Some(best.value) } else { None })
}

impl ReferenceLaw {
    /// Reference dilated so that `rate = min_{S^{n−1}} f`, keeping every
    /// importance weight at or below one; `None` for infinite volume.
    pub fn matched_to(f: &Form, seed: u64) -> Result<Option<Self>> {
        require_even(f.degree())?;
        Ok(screen_min(f, seed)?.map(|m| Self { n: f.n(), d: f.degree(), rate: m }))
    }
}

/// Monte-Carlo value and gradient of `v` sharing one sample stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGradient {
    pub volume: VolumeEstimate,
    /// `∂v/∂f_α` in the rescaled basis; empty when the volume is infinite.
    pub gradient: Vec<f64>,
    pub gradient_std_error: Vec<f64>,
}

struct LaplacePass {
    weights: RunningStats,
    grad_sum: Vec<f64>,
    grad_sq: Vec<f64>,
    finite: bool,
}

fn laplace_pass(f: &Form, law: &ReferenceLaw, samples: usize, seed: u64, with_gradient: bool) -> Result<Vec<LaplacePass>> {
    let (n, d) = (f.n(), f.degree());
    if law.n != n || law.d != d {
        return Err(Error::Shape("reference law does not match the form".into()));
    }
    if !(law.rate > 0.0) || !law.rate.is_finite() {
        return Err(Error::Domain(format!("reference rate must be positive, got {}", law.rate)));
    }
    let radial = Gamma::new(n as f64 / d as f64, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let table = f.table().clone();
    let len = f.len();
    let stride = d + 1;
    Ok(map_chunks(samples, seed, 0, |rng, count| {
        let mut theta = vec![0.0; n];
        let mut powers = Vec::new();
        let mut pass = LaplacePass {
            weights: RunningStats::default(),
            grad_sum: vec![0.0; if with_gradient { len } else { 0 }],
            grad_sq: vec![0.0; if with_gradient { len } else { 0 }],
            finite: true,
        };
        for _ in 0..count {
            unit_vector(rng, &mut theta);
            let t = radial.sample(rng);
            crate::form::fill_powers(&theta, d, &mut powers);
            // rescaled monomials at θ, reused for f(θ) and for the gradient
            let mut f_theta = 0.0;
            let mut monomials = Vec::with_capacity(if with_gradient { len } else { 0 });
            for (idx, alpha) in table.iter().enumerate() {
                let mut m = table.sqrt_multinomial(idx);
                for (i, &a) in alpha.iter().enumerate() {
                    m *= powers[i * stride + a as usize];
                }
                f_theta += f.coeffs()[idx] * m;
                if with_gradient {
                    monomials.push(m);
                }
            }
            let w = (t * (1.0 - f_theta / law.rate)).exp();
            if !w.is_finite() {
                pass.finite = false;
            }
            pass.weights.push(w);
            if with_gradient {
                let k = w * t / law.rate;
                for ((s, q), m) in pass.grad_sum.iter_mut().zip(pass.grad_sq.iter_mut()).zip(&monomials) {
                    let term = k * m;
                    *s += term;
                    *q += term * term;
                }
            }
        }
        pass
    }))
}

fn laplace_estimate(
    f: &Form,
    law: &ReferenceLaw,
    samples: usize,
    seed: u64,
    with_gradient: bool,
) -> Result<VolumeGradient> {
    if samples < 10 {
        return Err(Error::Domain("the Laplace estimator needs at least 10 samples".into()));
    }
    let (n, d) = (f.n(), f.degree());
    let passes = laplace_pass(f, law, samples, seed, with_gradient)?;
    if passes.iter().any(|p| !p.finite) {
        return Err(Error::Numeric("importance weight overflow".into()));
    }
    let stats = RunningStats::merged(&passes.iter().map(|p| p.weights).collect::<Vec<_>>());
    let infinite = VolumeGradient {
        volume: VolumeEstimate::infinite(VolumeMethod::Laplace, samples, seed),
        gradient: Vec::new(),
        gradient_std_error: Vec::new(),
    };
    if stats.variance() > WEIGHT_BLOWUP * stats.mean * stats.mean {
        return Ok(infinite);
    }
    // Z_s / Γ(1+n/d) = vol(B) s^{−n/d}
    let prefactor = ball_volume(n) * law.rate.powf(-(n as f64) / d as f64);
    let volume = VolumeEstimate {
        value: prefactor * stats.mean,
        std_error: prefactor * stats.std_error(),
        samples,
        seed,
        method: VolumeMethod::Laplace,
        infinite: false,
    };
    let (mut gradient, mut gradient_std_error) = (Vec::new(), Vec::new());
    if with_gradient {
        let len = f.len();
        let mut sum = vec![0.0; len];
        let mut sq = vec![0.0; len];
        for p in &passes {
            for i in 0..len {
                sum[i] += p.grad_sum[i];
                sq[i] += p.grad_sq[i];
            }
        }
        let m = samples as f64;
        for i in 0..len {
            let mean = sum[i] / m;
            let var = ((sq[i] / m - mean * mean) * m / (m - 1.0)).max(0.0);
            gradient.push(-prefactor * mean);
            gradient_std_error.push(prefactor * (var / m).sqrt());
        }
    }
    Ok(VolumeGradient { volume, gradient, gradient_std_error })
}

/// Laplace-identity estimate with a caller-chosen reference law.
pub fn volume_laplace_with_reference(f: &Form, law: &ReferenceLaw, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    Ok(laplace_estimate(f, law, samples, seed, false)?.volume)
}

/// Laplace-identity estimate; the reference law is the Gaussian-like law
/// dilated to the screened minimum of `f` on the sphere.
pub fn volume_laplace_mc(f: &Form, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    match ReferenceLaw::matched_to(f, seed)? {
        Some(law) => volume_laplace_with_reference(f, &law, samples, seed),
        None => Ok(VolumeEstimate::infinite(VolumeMethod::Laplace, samples, seed)),
    }
}

/// Gradient of the Laplace estimator with respect to the rescaled
/// coefficients: `∂v/∂f_α = −(1/Γ(1+n/d)) ∫ m_α(x) exp(−f(x)) dx`.
pub fn volume_gradient_with_reference(f: &Form, law: &ReferenceLaw, samples: usize, seed: u64) -> Result<VolumeGradient> {
    laplace_estimate(f, law, samples, seed, true)
}

pub fn volume_gradient(f: &Form, samples: usize, seed: u64) -> Result<VolumeGradient> {
    match ReferenceLaw::matched_to(f, seed)? {
        Some(law) => volume_gradient_with_reference(f, &law, samples, seed),
        None => Ok(VolumeGradient {
            volume: VolumeEstimate::infinite(VolumeMethod::Laplace, samples, seed),
            gradient: Vec::new(),
            gradient_std_error: Vec::new(),
        }),
    }
}

/// Polar-coordinate estimate `(|S^{n−1}|/n) · E[f(θ)^{−n/d}]`.
pub fn volume_spherical_mc(f: &Form, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    require_even(f.degree())?;
    if samples < 2 {
        return Err(Error::Domain("at least two samples are required".into()));
    }
    if screen_min(f, seed)?.is_none() {
        return Ok(VolumeEstimate::infinite(VolumeMethod::Spherical, samples, seed));
    }
    volume_spherical_unscreened(f, samples, seed)
}

/// Spherical estimator without the nonnegativity screen; any sampled
/// direction with `f ≤ 0` still yields the infinite flag.
pub fn volume_spherical_unscreened(f: &Form, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    let (n, d) = (f.n(), f.degree());
    let exponent = -(n as f64) / d as f64;
    let parts = map_chunks(samples, seed, 0, |rng, count| {
        let mut theta = vec![0.0; n];
        let mut scratch = Vec::new();
        let mut stats = RunningStats::default();
        let mut positive = true;
        for _ in 0..count {
            unit_vector(rng, &mut theta);
            let v = f.eval_with(&theta, &mut scratch);
            if !(v > 0.0) {
                positive = false;
                continue;
            }
            stats.push(v.powf(exponent));
        }
        (stats, positive)
    });
    if parts.iter().any(|(_, ok)| !ok) {
        return Ok(VolumeEstimate::infinite(VolumeMethod::Spherical, samples, seed));
    }
    let stats = RunningStats::merged(&parts.iter().map(|(s, _)| *s).collect::<Vec<_>>());
    if stats.variance() > WEIGHT_BLOWUP * stats.mean * stats.mean {
        return Ok(VolumeEstimate::infinite(VolumeMethod::Spherical, samples, seed));
    }
    let k = sphere_surface(n) / n as f64;
    Ok(VolumeEstimate {
        value: k * stats.mean,
        std_error: k * stats.std_error(),
        samples,
        seed,
        method: VolumeMethod::Spherical,
        infinite: false,
    })
}

/// `vol{xᵗAx ≤ 1} = vol(B_n) / sqrt(det A)` for positive definite `A`.
pub fn volume_quadratic_exact(a: &Matrix) -> Result<f64> {
    let eig = eigh(a)?;
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Domain("matrix is not positive definite".into()));
    }
    let n = a.rows();
    Ok(ball_volume(n) * eig.eigenvalues.iter().map(|l| l.powf(-0.5)).product::<f64>())
}

/// Closed-form volume when one is available: univariate forms, quadratic
/// forms and multiples of the ball form. `None` otherwise.
pub fn volume_exact(f: &Form) -> Result<Option<VolumeEstimate>> {
    let (n, d) = (f.n(), f.degree());
    if d == 0 {
        return Ok(None);
    }
    if n == 1 {
        let a = f.coeffs()[0];
        return Ok(Some(if d % 2 == 0 && a > 0.0 {
            VolumeEstimate::exact(2.0 * a.powf(-1.0 / d as f64))
        } else {
            VolumeEstimate::infinite(VolumeMethod::Exact, 0, 0)
        }));
    }
    if d % 2 != 0 {
        return Ok(Some(VolumeEstimate::infinite(VolumeMethod::Exact, 0, 0)));
    }
    if d == 2 {
        let a = f.quadratic_matrix().expect("degree two");
        return Ok(Some(match volume_quadratic_exact(&a) {
            Ok(v) => VolumeEstimate::exact(v),
            Err(Error::Domain(_)) => VolumeEstimate::infinite(VolumeMethod::Exact, 0, 0),
            Err(e) => return Err(e),
        }));
    }
    let b = ball_form(n, d)?;
    let c = f.bombieri_product(&b)? / b.bombieri_product(&b)?;
    let residual = f.add_scaled(-c, &b)?.bombieri_norm();
    if residual <= 1e-12 * f.bombieri_norm().max(f64::MIN_POSITIVE) {
        return Ok(Some(if c > 0.0 {
            VolumeEstimate::exact(ball_volume(n) * c.powf(-(n as f64) / d as f64))
        } else {
            VolumeEstimate::infinite(VolumeMethod::Exact, 0, 0)
        }));
    }
    Ok(None)
}

/// Closed form when available, otherwise the spherical estimator.
pub fn volume(f: &Form, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    match volume_exact(f)? {
        Some(v) => Ok(v),
        None => volume_spherical_mc(f, samples, seed),
    }
}

/// `∫ x^α exp(−κ|x|^d) dx`, reduced to a Gaussian moment:
/// `Γ(1+(n+|α|)/d) / Γ(1+(n+|α|)/2) · ∫ x^α exp(−κ^{2/d}|x|²) dx`.
pub fn gaussian_like_moment(alpha: &[u32], n: usize, d: usize) -> Result<f64> {
    require_even(d)?;
    if alpha.len() != n {
        return Err(Error::Shape(format!("multi-index has {} entries, expected {n}", alpha.len())));
    }
    if alpha.iter().any(|a| a % 2 == 1) {
        return Ok(0.0);
    }
    let k = kappa(n, d)?;
    let c = k.powf(2.0 / d as f64);
    let total = (n + alpha.iter().map(|&a| a as usize).sum::<usize>()) as f64;
    // ∫ t^{2j} exp(−c t²) dt = Γ(j + 1/2) / c^{j + 1/2}
    let gaussian: f64 = alpha
        .iter()
        .map(|&a| {
            let h = a as f64 / 2.0 + 0.5;
            gamma(h) / c.powf(h)
        })
        .product();
    Ok(gamma(1.0 + total / d as f64) / gamma(1.0 + total / 2.0) * gaussian)
}

/// Scaling that turns `exp(−c f)` into a probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub scale: f64,
    pub std_error: f64,
    pub form: Form,
    pub volume: VolumeEstimate,
}

/// `c = (Γ(1+n/d) v(f))^{d/n}`, so that `∫ exp(−c f) = 1`.
pub fn normalize_with_volume(f: &Form, volume: VolumeEstimate) -> Result<Normalization> {
    let (n, d) = (f.n() as f64, f.degree() as f64);
    if volume.infinite || !(volume.value > 0.0) {
        return Err(Error::Domain("form has infinite volume; exp(−f) is not integrable".into()));
    }
    let scale = (gamma(1.0 + n / d) * volume.value).powf(d / n);
    let std_error = scale * (d / n) * volume.std_error / volume.value;
    Ok(Normalization { scale, std_error, form: f.scaled(scale), volume })
}

/// Uses a closed-form volume when one exists, the spherical estimator otherwise.
pub fn normalize_to_probability(f: &Form, samples: usize, seed: u64) -> Result<Normalization> {
    normalize_with_volume(f, volume(f, samples, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{powers_form, rescaled_from_monomial};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Trapezoid rule for `∫_{−L}^{L} g(x) dx`.
    fn quad(g: impl Fn(f64) -> f64, l: f64, m: usize) -> f64 {
        let h = 2.0 * l / m as f64;
        (0..=m)
            .map(|k| {
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * g(-l + k as f64 * h)
            })
            .sum::<f64>()
            * h
    }

    fn within(est: &VolumeEstimate, want: f64, k: f64) {
        assert!(est.is_finite(), "{est:?}");
        assert!((est.value - want).abs() <= k * est.std_error + 1e-12 * want, "{est:?} vs {want}");
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(ball_volume(2), PI, max_relative = 1e-15);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(1), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(kappa(1, 2).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(kappa(2, 2).unwrap(), PI, max_relative = 1e-14);
        let k = kappa(1, 4).unwrap();
        let mass = quad(|x| (-k * x.powi(4)).exp(), 2.0, 20_000);
        assert_relative_eq!(mass, 1.0, max_relative = 1e-10);
        assert!((k - 10.800).abs() < 1e-3);
        assert!(kappa(2, 3).is_err());
    }

    #[test]
    fn total_mass_by_monte_carlo() {
        for (n, d) in [(1, 2), (1, 4), (2, 2), (2, 4), (3, 2)] {
            let law = GaussianLikeLaw::new(n, d).unwrap();
            let (m, se) = law.total_mass_mc(100_000, 3).unwrap();
            assert!((m - 1.0).abs() <= 3.0 * se, "(n={n}, d={d}): {m} ± {se}");
        }
    }

    #[test]
    fn moments() {
        for (n, d) in [(1, 2), (2, 4), (3, 6)] {
            let zero = vec![0u32; n];
            assert_relative_eq!(gaussian_like_moment(&zero, n, d).unwrap(), 1.0, max_relative = 1e-10);
        }
        assert_eq!(gaussian_like_moment(&[1, 2], 2, 4).unwrap(), 0.0);
        assert_eq!(gaussian_like_moment(&[3], 1, 2).unwrap(), 0.0);
        assert_relative_eq!(gaussian_like_moment(&[2], 1, 2).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-13);
        // quartic law, 1D: ∫ x² exp(−κx⁴) by quadrature
        let k = kappa(1, 4).unwrap();
        let oracle = quad(|x| x * x * (-k * x.powi(4)).exp(), 2.0, 20_000);
        assert_relative_eq!(gaussian_like_moment(&[2], 1, 4).unwrap(), oracle, max_relative = 1e-9);
        assert!(gaussian_like_moment(&[2], 2, 4).is_err());
    }

    #[test]
    fn laplace_golden_values() {
        let b = ball_form(2, 2).unwrap();
        within(&volume_laplace_mc(&b, 100_000, 1).unwrap(), PI, 3.0);

        // x⁴ + y⁴: (∫exp(−x⁴))² / Γ(3/2)
        let one_d = quad(|x| (-x.powi(4)).exp(), 4.0, 40_000);
        let want = one_d * one_d / gamma(1.5);
        assert_relative_eq!(want, (2.0 * gamma(1.25)).powi(2) / gamma(1.5), max_relative = 1e-10);
        let p = powers_form(2, 4).unwrap();
        within(&volume_laplace_mc(&p, 100_000, 2).unwrap(), want, 3.0);

        let q = rescaled_from_monomial(2, 2, &[2.0, 0.0, 8.0]).unwrap();
        within(&volume_laplace_mc(&q, 100_000, 3).unwrap(), PI / 4.0, 3.0);
    }

    #[test]
    fn laplace_with_unscaled_gaussian_like_reference() {
        // weights stay square-integrable while f/κ > 1/2 on the sphere
        let law = GaussianLikeLaw::new(1, 4).unwrap().reference();
        let f = ball_form(1, 4).unwrap().scaled(0.8 * law.rate);
        let want = 2.0 * (0.8 * law.rate).powf(-0.25);
        within(&volume_laplace_with_reference(&f, &law, 100_000, 4).unwrap(), want, 3.0);
    }

    #[test]
    fn spherical_golden_values() {
        for (n, d) in [(2, 2), (3, 4), (4, 6)] {
            let est = volume_spherical_mc(&ball_form(n, d).unwrap(), 1000, 1).unwrap();
            assert_relative_eq!(est.value, ball_volume(n), max_relative = 1e-12);
        }
        let f = Form::new(1, 2, vec![4.0]).unwrap();
        let est = volume_spherical_mc(&f, 100, 1).unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-14);

        let want = (2.0 * gamma(1.25)).powi(2) / gamma(1.5);
        within(&volume_spherical_mc(&powers_form(2, 4).unwrap(), 100_000, 5).unwrap(), want, 3.0);
    }

    #[test]
    fn indefinite_forms_flag_infinite_volume() {
        let f = rescaled_from_monomial(2, 2, &[1.0, 0.0, -1.0]).unwrap();
        assert!(volume_laplace_mc(&f, 1000, 1).unwrap().infinite);
        assert!(volume_spherical_mc(&f, 1000, 1).unwrap().infinite);
        assert!(volume_gradient(&f, 1000, 1).unwrap().gradient.is_empty());
        assert!(volume_exact(&f).unwrap().unwrap().infinite);
        let f = rescaled_from_monomial(2, 4, &[1.0, 0.0, 0.0, 0.0, -0.01]).unwrap();
        assert!(volume_spherical_mc(&f, 1000, 1).unwrap().infinite);
        assert!(volume_spherical_unscreened(&f, 1000, 1).unwrap().infinite);
        assert!(volume_laplace_mc(&f, 1000, 1).unwrap().infinite);
    }

    #[test]
    fn quadratic_exact() {
        assert_relative_eq!(volume_quadratic_exact(&Matrix::identity(2)).unwrap(), PI, max_relative = 1e-15);
        assert_relative_eq!(volume_quadratic_exact(&Matrix::from_diagonal(&[2.0, 8.0])).unwrap(), PI / 4.0, max_relative = 1e-14);
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_relative_eq!(volume_quadratic_exact(&a).unwrap(), PI / 3f64.sqrt(), max_relative = 1e-14);
        let bad = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(volume_quadratic_exact(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_dispatch() {
        let f = ball_form(3, 4).unwrap().scaled(2.0);
        assert_relative_eq!(volume_exact(&f).unwrap().unwrap().value, ball_volume(3) * 2f64.powf(-0.75), max_relative = 1e-13);
        assert!(volume_exact(&powers_form(2, 4).unwrap()).unwrap().is_none());
        let f = Form::new(1, 4, vec![16.0]).unwrap();
        assert_relative_eq!(volume_exact(&f).unwrap().unwrap().value, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn gradient_symmetry_for_ball() {
        let b = ball_form(2, 2).unwrap();
        let g = volume_gradient(&b, 100_000, 6).unwrap();
        let joint = (g.gradient_std_error[0].powi(2) + g.gradient_std_error[2].powi(2)).sqrt();
        assert!((g.gradient[0] - g.gradient[2]).abs() <= 3.0 * joint);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = rescaled_from_monomial(2, 4, &[1.0, 0.3, 1.2, -0.2, 0.8]).unwrap();
        let law = ReferenceLaw::matched_to(&f, 1).unwrap().unwrap();
        let (samples, seed, h) = (20_000, 7, 1e-3);
        let g = volume_gradient_with_reference(&f, &law, samples, seed).unwrap();
        for i in 0..f.len() {
            let mut e = vec![0.0; f.len()];
            e[i] = h;
            let de = f.with_coeffs(e).unwrap();
            let up = volume_laplace_with_reference(&f.add_scaled(1.0, &de).unwrap(), &law, samples, seed).unwrap();
            let down = volume_laplace_with_reference(&f.add_scaled(-1.0, &de).unwrap(), &law, samples, seed).unwrap();
            let fd = (up.value - down.value) / (2.0 * h);
            let tol = (3.0 * g.gradient_std_error[i]).max(1e-3 * g.gradient[i].abs());
            assert!((fd - g.gradient[i]).abs() <= tol, "coordinate {i}: fd {fd} vs {}", g.gradient[i]);
        }
    }

    #[test]
    fn directional_derivative_along_form() {
        // v(tf) = t^{−n/d} v(f)  ⇒  ⟨∇v, f⟩ = −(n/d) v
        let f = rescaled_from_monomial(2, 4, &[1.0, 0.3, 1.2, -0.2, 0.8]).unwrap();
        let g = volume_gradient(&f, 200_000, 8).unwrap();
        let dir: f64 = g.gradient.iter().zip(f.coeffs()).map(|(a, b)| a * b).sum();
        let want = -0.5 * g.volume.value;
        let se: f64 = g.gradient_std_error.iter().zip(f.coeffs()).map(|(s, c)| (s * c).powi(2)).sum::<f64>().sqrt();
        assert!((dir - want).abs() <= 3.0 * (se + 0.5 * g.volume.std_error), "{dir} vs {want}");
    }

    #[test]
    fn scaling_law() {
        let f = rescaled_from_monomial(2, 4, &[1.0, 0.3, 1.2, -0.2, 0.8]).unwrap();
        let base = volume_spherical_mc(&f, 50_000, 9).unwrap();
        for t in [0.5, 2.0, 10.0] {
            let scaled = volume_spherical_mc(&f.scaled(t), 50_000, 10).unwrap();
            let pred = base.rescaled(t, 2, 4);
            let joint = (scaled.std_error.powi(2) + pred.std_error.powi(2)).sqrt();
            assert!((scaled.value - pred.value).abs() <= 3.0 * joint);
        }
    }

    #[test]
    fn normalization() {
        for (n, d) in [(1, 2), (2, 4), (3, 2)] {
            let c = normalize_to_probability(&ball_form(n, d).unwrap(), 1000, 1).unwrap();
            assert_relative_eq!(c.scale, kappa(n, d).unwrap(), max_relative = 1e-12);
            let again = normalize_to_probability(&c.form, 1000, 1).unwrap();
            assert_relative_eq!(again.scale, 1.0, max_relative = 1e-12);
        }
        let f = Form::new(1, 2, vec![2.0]).unwrap();
        let c = normalize_to_probability(&f, 100, 1).unwrap();
        assert_relative_eq!(c.volume.value, 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c.scale, PI / 2.0, max_relative = 1e-13);
        let coeff = c.form.coeffs()[0];
        assert_relative_eq!(quad(|x| (-coeff * x * x).exp(), 8.0, 20_000), 1.0, max_relative = 1e-10);

        let bad = rescaled_from_monomial(2, 2, &[1.0, 0.0, -1.0]).unwrap();
        assert!(matches!(normalize_to_probability(&bad, 100, 1), Err(Error::Domain(_))));
    }
}
