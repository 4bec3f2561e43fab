//! Randomized checks that no feasible point beats the closed-form optimum.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{form_norm, theoretical_opt, NormSpec};
use crate::error::{Error, Result};
use crate::form::{ball_form, nuclear_norm_ball, nuclear_upper_bound, power_form, Form, PowerTerm};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, substream, unit_vector};
use crate::sos::{gram_dimension, schatten_norm, GramMap, GramMatrix};
use crate::volume::{kappa, normalize_to_probability, volume, GaussianLikeLaw, VolumeMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Monte-Carlo samples per volume estimate (when no closed form exists).
    pub samples: usize,
    /// Monte-Carlo samples per `L^p` norm estimate.
    pub norm_samples: usize,
    pub tol: f64,
    /// Multiplies the bound before comparison; values above 1 exercise the
    /// failure path.
    pub bound_factor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { trials: 500, seed: 1234567, samples: 20_000, norm_samples: 20_000, tol: 1e-3, bound_factor: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub ratio: f64,
    pub std_error: f64,
    /// Rescaled coefficients of the offending unit-norm form.
    pub coeffs: Vec<f64>,
}

/// Quantiles of `ratio − 1` over all trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub norm: String,
    pub n: usize,
    pub d: usize,
    pub theoretical_opt: f64,
    pub bound: f64,
    pub trials: usize,
    pub min_ratio: f64,
    pub min_ratio_std_error: f64,
    pub passed: bool,
    pub gaps: GapSummary,
    pub violations: Vec<Violation>,
}

struct Trial {
    ratio: f64,
    std_error: f64,
    coeffs: Vec<f64>,
}

/// A power-sum decomposition of the ball form attaining its nuclear norm,
/// for the cases with an elementary one: `n = 1`, `d = 2`, and `n = 2`
/// (equally spaced directions on a half circle).
pub fn ball_power_decomposition(n: usize, d: usize) -> Result<Option<Vec<PowerTerm>>> {
    let total = nuclear_norm_ball(n, d)?;
    let axis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    Ok(if n == 1 || d == 2 {
        Some((0..n).map(|i| PowerTerm { weight: 1.0, direction: axis(i) }).collect())
    } else if n == 2 {
        let m = d / 2 + 1;
        Some(
            (0..m)
                .map(|k| {
                    let t = std::f64::consts::PI * k as f64 / m as f64;
                    PowerTerm { weight: total / m as f64, direction: vec![t.cos(), t.sin()] }
                })
                .collect(),
        )
    } else {
        None
    })
}

fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Spread of perturbation sizes, from near the minimizer to far from it.
fn perturbation<R: Rng>(rng: &mut R, trial: usize) -> f64 {
    if trial == 0 {
        0.0
    } else {
        10f64.powf(rng.random_range(-3.0..1.0))
    }
}

fn ratio_error(ratio: f64, rel_volume: f64, rel_norm: f64, exponent: f64) -> f64 {
    ratio * (rel_volume.powi(2) + (exponent * rel_norm).powi(2)).sqrt()
}

fn form_trial(norm: NormSpec, n: usize, d: usize, opt: f64, trial: usize, opts: &VerifyOptions) -> Result<Trial> {
    let mut rng = substream(derive_seed(opts.seed, 0x7_21A1), trial as u64, 0);
    let half = GramMap::new(n, d)?;
    let dim = half.dim();
    // a random sum of squares, strictly positive almost surely
    let mut w = Matrix::zeros(dim, dim);
    for _ in 0..dim + 1 {
        let s = gaussian_vec(&mut rng, dim);
        for i in 0..dim {
            for j in 0..dim {
                w.as_mut_slice()[i * dim + j] += s[i] * s[j];
            }
        }
    }
    let g = half.apply(&GramMatrix::new(n, d, w)?)?;
    let b = ball_form(n, d)?;
    let eps = perturbation(&mut rng, trial);
    let f = b.scaled(1.0 / b.bombieri_norm()).add_scaled(eps / g.bombieri_norm(), &g)?;
    let trial_seed = derive_seed(opts.seed, trial as u64);
    let size = form_norm(&f, norm, opts.norm_samples, derive_seed(trial_seed, 1))?;
    let unit = f.scaled(1.0 / size.value);
    let v = volume(&unit, opts.samples, derive_seed(trial_seed, 2))?;
    Ok(finish(v, size.std_error / size.value, n, d, opt, unit))
}

fn finish(v: crate::volume::VolumeEstimate, rel_norm: f64, n: usize, d: usize, opt: f64, unit: Form) -> Trial {
    if v.infinite {
        return Trial { ratio: f64::INFINITY, std_error: 0.0, coeffs: unit.into_coeffs() };
    }
    let ratio = v.value / opt;
    let exponent = n as f64 / d as f64;
    Trial { ratio, std_error: ratio_error(ratio, v.std_error / v.value, rel_norm, exponent), coeffs: unit.into_coeffs() }
}

fn nuclear_trial(n: usize, d: usize, opt: f64, trial: usize, opts: &VerifyOptions) -> Result<Trial> {
    let mut rng = substream(derive_seed(opts.seed, 0x7_21A1), trial as u64, 0);
    let base = ball_power_decomposition(n, d)?;
    let eps = perturbation(&mut rng, trial);
    let mut terms = base.clone().unwrap_or_default();
    let count = crate::form::dimension(n, d)? + 2;
    if base.is_none() || eps > 0.0 {
        let scale = if base.is_some() { eps * nuclear_norm_ball(n, d)? } else { 1.0 };
        for _ in 0..count {
            let mut y = vec![0.0; n];
            unit_vector(&mut rng, &mut y);
            let weight: f64 = rng.sample(Exp1);
            terms.push(PowerTerm { weight: scale * weight / count as f64, direction: y });
        }
    }
    let mut f = Form::zero(n, d)?;
    for t in &terms {
        f = f.add_scaled(t.weight, &power_form(&t.direction, d)?)?;
    }
    let certified = nuclear_upper_bound(&terms, &f, 1e-10 * f.bombieri_norm().max(1.0))?;
    let unit = f.scaled(1.0 / certified);
    let v = volume(&unit, opts.samples, derive_seed(derive_seed(opts.seed, trial as u64), 2))?;
    Ok(finish(v, 0.0, n, d, opt, unit))
}

fn gram_trial(norm: NormSpec, n: usize, d: usize, opt: f64, trial: usize, opts: &VerifyOptions) -> Result<Trial> {
    let p = norm.schatten_p().expect("matrix kind");
    let mut rng = substream(derive_seed(opts.seed, 0x7_21A1), trial as u64, 0);
    let dim = gram_dimension(n, d)?;
    let map = GramMap::new(n, d)?;
    let w = Matrix::from_row_major(dim, dim, gaussian_vec(&mut rng, dim * dim))?;
    let wwt = w.matmul(&w.transpose())?;
    let eps = perturbation(&mut rng, trial);
    // trial 1: the ball form again, through its least-Frobenius Gram matrix
    let least = map.least_norm_gram(&ball_form(n, d)?)?;
    let g = if trial == 1 && least.min_eigenvalue()? >= -1e-12 {
        least.into_matrix()
    } else {
        Matrix::identity(dim).add(&wwt.scale(eps / wwt.frobenius()))?.symmetrized()
    };
    let unit = GramMatrix::new(n, d, g.scale(1.0 / schatten_norm(&g, p)?))?;
    let f = map.apply(&unit)?;
    let v = volume(&f, opts.samples, derive_seed(derive_seed(opts.seed, trial as u64), 2))?;
    Ok(finish(v, 0.0, n, d, opt, f))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Samples `trials` random points on the unit sphere of `norm` and checks
/// `v ≥ opt − max(3σ, tol·opt)` for each.
pub fn verify_lower_bound(norm: NormSpec, n: usize, d: usize, opts: &VerifyOptions) -> Result<VerificationReport> {
    if opts.trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let opt = theoretical_opt(norm, n, d)?;
    let trials: Vec<Trial> = (0..opts.trials)
        .into_par_iter()
        .map(|t| match norm {
            NormSpec::Nuclear => nuclear_trial(n, d, opt, t, opts),
            m if m.is_matrix() => gram_trial(m, n, d, opt, t, opts),
            m => form_trial(m, n, d, opt, t, opts),
        })
        .collect::<Result<_>>()?;
    let factor = opts.bound_factor;
    let violations: Vec<Violation> = trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.ratio < factor - (3.0 * t.std_error).max(opts.tol * factor))
        .map(|(i, t)| Violation { trial: i, ratio: t.ratio, std_error: t.std_error, coeffs: t.coeffs.clone() })
        .collect();
    let min_trial = trials.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("non-empty");
    let mut gaps: Vec<f64> = trials.iter().map(|t| t.ratio - 1.0).collect();
    gaps.sort_by(f64::total_cmp);
    Ok(VerificationReport {
        norm: norm.to_string(),
        n,
        d,
        theoretical_opt: opt,
        bound: opt * factor,
        trials: opts.trials,
        min_ratio: min_trial.ratio,
        min_ratio_std_error: min_trial.std_error,
        passed: violations.is_empty(),
        gaps: GapSummary {
            min: gaps[0],
            p05: quantile(&gaps, 0.05),
            median: quantile(&gaps, 0.5),
            p95: quantile(&gaps, 0.95),
            max: gaps[gaps.len() - 1],
        },
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PStarReport {
    pub norm: String,
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
    /// Normalizing scale of the ball form from its closed-form volume.
    pub scale: f64,
    pub scale_method: VolumeMethod,
    /// The same scale from a Monte-Carlo mass estimate of `exp(−κ b)`.
    pub scale_mc: f64,
    pub scale_mc_std_error: f64,
    /// `κ ‖b‖`, the optimal value of the probability formulation.
    pub opt_star: f64,
    /// `‖κ b‖` evaluated directly.
    pub norm_of_minimizer: f64,
    pub norm_std_error: f64,
    pub passed: bool,
}

/// Checks that the ball form normalizes to `exp(−κ b)` and that
/// `‖κ b‖ = κ ‖b‖`.
pub fn verify_pstar_equivalence(norm: NormSpec, n: usize, d: usize, samples: usize, seed: u64) -> Result<PStarReport> {
    if !norm.is_invariant() {
        return Err(Error::Domain(format!("{norm} is not orthogonally invariant")));
    }
    let k = kappa(n, d)?;
    let b = ball_form(n, d)?;
    let normalization = normalize_to_probability(&b, samples, seed)?;
    let (mass, mass_se) = GaussianLikeLaw::new(n, d)?.total_mass_mc(samples, derive_seed(seed, 1))?;
    let ratio = d as f64 / n as f64;
    let scale_mc = k * mass.powf(ratio);
    let scale_mc_std_error = scale_mc * ratio * mass_se / mass;
    let opt_star = k * norm.at_ball(n, d)?;
    let (norm_of_minimizer, norm_std_error) = match norm {
        NormSpec::Nuclear => {
            let terms = ball_power_decomposition(n, d)?.ok_or_else(|| {
                Error::Domain(format!("no explicit power-sum decomposition of the ball form for (n={n}, d={d})"))
            })?;
            let scaled: Vec<PowerTerm> =
                terms.into_iter().map(|t| PowerTerm { weight: k * t.weight, direction: t.direction }).collect();
            let kb = b.scaled(k);
            (nuclear_upper_bound(&scaled, &kb, 1e-9 * k)?, 0.0)
        }
        m if m.is_matrix() => {
            let dim = gram_dimension(n, d)?;
            (schatten_norm(&Matrix::identity(dim).scale(k), m.schatten_p().expect("matrix kind"))?, 0.0)
        }
        m => {
            let v = form_norm(&b.scaled(k), m, samples, derive_seed(seed, 2))?;
            (v.value, v.std_error)
        }
    };
    let passed = (normalization.scale - k).abs() <= 1e-6 * k
        && (scale_mc - k).abs() <= 3.0 * scale_mc_std_error
        && (norm_of_minimizer - opt_star).abs() <= (3.0 * norm_std_error).max(1e-9 * opt_star);
    Ok(PStarReport {
        norm: norm.to_string(),
        n,
        d,
        kappa: k,
        scale: normalization.scale,
        scale_method: normalization.volume.method,
        scale_mc,
        scale_mc_std_error,
        opt_star,
        norm_of_minimizer,
        norm_std_error,
        passed,
    })
}
