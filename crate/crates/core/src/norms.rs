//! Norms of forms on the unit sphere: Monte-Carlo `L^p`, and sup/min found by
//! multistart projected gradient on the sphere.
//!
//! `L^p` norms integrate against the *unnormalized* surface measure, whose
//! total mass is `sphere_surface(n)`; they are not averages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{gradient_forms, Form};
use crate::rng::{derive_seed, map_chunks, unit_vector, RunningStats, SphereSampler};
pub use crate::special::sphere_surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormEstimateKind {
    Lp,
    Sup,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Zero for optimization-based estimates.
    pub std_error: f64,
    pub samples: usize,
    pub kind: NormEstimateKind,
}

/// Values `f(θ_k)` at the first `samples` points of the seeded sphere stream.
pub fn sphere_values(f: &Form, samples: usize, seed: u64) -> Vec<f64> {
    let n = f.n();
    map_chunks(samples, seed, 0, |rng, count| {
        let mut x = vec![0.0; n];
        let mut scratch = Vec::new();
        (0..count)
            .map(|_| {
                unit_vector(rng, &mut x);
                f.eval_with(&x, &mut scratch)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Monte-Carlo estimate of `(∫_{S^{n-1}} |f|^p dS)^{1/p}`.
pub fn lp_sphere_norm(f: &Form, p: f64, samples: usize, seed: u64) -> Result<NormEstimate> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Domain(format!("L^p exponent must be finite and ≥ 1, got {p}")));
    }
    if samples < 2 {
        return Err(Error::Domain("at least two samples are required".into()));
    }
    let n = f.n();
    let parts = map_chunks(samples, seed, 0, |rng, count| {
        let mut x = vec![0.0; n];
        let mut scratch = Vec::new();
        let mut stats = RunningStats::default();
        let mut finite = true;
        for _ in 0..count {
            unit_vector(rng, &mut x);
            let v = f.eval_with(&x, &mut scratch);
            finite &= v.is_finite();
            stats.push(v.abs().powf(p));
        }
        (stats, finite)
    });
    if parts.iter().any(|(_, ok)| !ok) {
        return Err(Error::Numeric("form produced non-finite values on the sphere".into()));
    }
    let stats = RunningStats::merged(&parts.iter().map(|(s, _)| *s).collect::<Vec<_>>());
    let surface = sphere_surface(n);
    let mean = stats.mean;
    let value = (surface * mean).powf(1.0 / p);
    let std_error = if mean > 0.0 { value * stats.std_error() / (p * mean) } else { 0.0 };
    Ok(NormEstimate { value, std_error, samples, kind: NormEstimateKind::Lp })
}

/// `‖b_{d,n}‖_{L^p} = sphere_surface(n)^{1/p}`; `p = ∞` gives 1.
pub fn lp_norm_ball_exact(n: usize, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p exponent must be ≥ 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(1.0);
    }
    Ok(sphere_surface(n).powf(1.0 / p))
}

/// Multistart search settings for sphere optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSearch {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self { restarts: 32, iters: 200, seed: 0x5EED }
    }
}

/// Best point found by a sphere search.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereOptimum {
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    MaxAbs,
    Min,
}

impl Goal {
    /// Larger is better.
    fn score(self, v: f64) -> f64 {
        match self {
            Goal::MaxAbs => v.abs(),
            Goal::Min => -v,
        }
    }
}

fn search(f: &Form, opts: SphereSearch, goal: Goal) -> Result<SphereOptimum> {
    if opts.restarts == 0 {
        return Err(Error::Domain("at least one restart is required".into()));
    }
    let n = f.n();
    let d = f.degree();
    let starts = SphereSampler::new(n, derive_seed(opts.seed, 0x53_50_48)).points(opts.restarts);
    if d == 0 {
        let v = f.coeffs()[0];
        return Ok(SphereOptimum { value: v, point: starts[0].clone() });
    }
    let grads = gradient_forms(f)?;
    let mut scratch = Vec::new();
    let scale = starts.iter().fold(0.0f64, |m, x| m.max(f.eval_with(x, &mut scratch).abs()));
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let step = 0.1 / (d as f64 * scale);

    let results: Vec<SphereOptimum> = starts
        .par_iter()
        .map(|start| climb(f, &grads, start, step, opts.iters, goal))
        .collect();
    // deterministic reduction: first best in restart order
    let mut best = results[0].clone();
    for r in &results[1..] {
        if goal.score(r.value) > goal.score(best.value) {
            best = r.clone();
        }
    }
    if !best.value.is_finite() {
        return Err(Error::Numeric("sphere search produced a non-finite value".into()));
    }
    Ok(best)
}

fn climb(f: &Form, grads: &[Form], start: &[f64], step: f64, iters: usize, goal: Goal) -> SphereOptimum {
    let n = f.n();
    let mut scratch = Vec::new();
    let mut x = start.to_vec();
    let mut fx = f.eval_with(&x, &mut scratch);
    let mut best = SphereOptimum { value: fx, point: x.clone() };
    let mut g = vec![0.0; n];
    for _ in 0..iters {
        for (gi, form) in g.iter_mut().zip(grads) {
            *gi = form.eval_with(&x, &mut scratch);
        }
        let sign = match goal {
            Goal::MaxAbs => {
                if fx >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Goal::Min => -1.0,
        };
        // tangential component of the (signed) gradient
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let mut len = 0.0;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += sign * step * (gi - radial * *xi);
            len += *xi * *xi;
        }
        let len = len.sqrt();
        x.iter_mut().for_each(|v| *v /= len);
        fx = f.eval_with(&x, &mut scratch);
        if goal.score(fx) > goal.score(best.value) {
            best = SphereOptimum { value: fx, point: x.clone() };
        }
    }
    best
}

/// Largest `|f|` found on the sphere; a lower bound on the uniform norm.
pub fn sup_sphere_search(f: &Form, opts: SphereSearch) -> Result<SphereOptimum> {
    let mut best = search(f, opts, Goal::MaxAbs)?;
    best.value = best.value.abs();
    Ok(best)
}

/// Smallest `f` found on the sphere; an upper bound on the true minimum.
pub fn min_sphere_search(f: &Form, opts: SphereSearch) -> Result<SphereOptimum> {
    search(f, opts, Goal::Min)
}

pub fn sup_sphere_norm(f: &Form, restarts: usize, iters: usize, seed: u64) -> Result<NormEstimate> {
    let best = sup_sphere_search(f, SphereSearch { restarts, iters, seed })?;
    Ok(NormEstimate { value: best.value, std_error: 0.0, samples: restarts, kind: NormEstimateKind::Sup })
}

/// A negative value certifies that `{f ≤ 1}` has infinite volume.
pub fn min_sphere(f: &Form, restarts: usize, iters: usize, seed: u64) -> Result<NormEstimate> {
    let best = min_sphere_search(f, SphereSearch { restarts, iters, seed })?;
    Ok(NormEstimate { value: best.value, std_error: 0.0, samples: restarts, kind: NormEstimateKind::Min })
}
