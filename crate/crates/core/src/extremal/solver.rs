//! Projected subgradient descent on the volume functional.

use serde::{Deserialize, Serialize};

use super::NormSpec;
use crate::error::{Error, Result};
use crate::form::{ball_form, Form};
use crate::linalg::{norm2, Matrix};
use crate::rng::derive_seed;
use crate::sos::{project_capped_simplex, project_psd_schatten_ball, schatten_norm, GramMap, GramMatrix};
use crate::volume::{screen_min, volume, volume_gradient_with_reference, ReferenceLaw, VolumeEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub iters: usize,
    /// Monte-Carlo samples per gradient at the first iteration.
    pub samples: usize,
    /// Upper limit on the adaptive sample count, as a multiple of `samples`.
    pub max_sample_factor: usize,
    pub seed: u64,
    /// Length of the first step in the solver's coordinates.
    pub step: f64,
    /// Samples for the final volume estimate when no closed form exists.
    pub final_samples: usize,
    /// Starting form; defaults to the ball form. Projected before use.
    pub start: Option<Form>,
    /// Starting Gram matrix for the SOS solver; defaults to the identity.
    pub start_gram: Option<Matrix>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            iters: 150,
            samples: 20_000,
            max_sample_factor: 16,
            seed: 1234567,
            step: 0.5,
            final_samples: 400_000,
            start: None,
            start_gram: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    /// Estimated volume at the iterate entering this step.
    pub volume: f64,
    pub std_error: f64,
    /// Step length actually taken (after any halving).
    pub step: f64,
    /// Distance outside the feasible set, `max(‖x‖ − 1, 0)` (plus negative
    /// eigenvalue mass for Gram iterates).
    pub residual: f64,
    pub samples: usize,
    /// Lowest volume seen so far.
    pub best: f64,
    /// Trial steps rejected for leaving the finite-volume region.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub norm: NormSpec,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub iterates: Vec<IterateRecord>,
    pub final_form: Form,
    pub final_gram: Option<GramMatrix>,
    pub final_volume: VolumeEstimate,
    /// Norm of the final iterate.
    pub final_norm: f64,
}

/// Feasible set in the solver's own coordinates.
trait Geometry {
    fn form(&self, x: &[f64]) -> Result<Form>;
    /// Pulls a gradient in rescaled form coordinates back to `x` coordinates.
    fn pull_back(&self, grad: &[f64]) -> Result<Vec<f64>>;
    /// Projection onto the ball followed by a radial push to its boundary.
    fn project(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn norm(&self, x: &[f64]) -> Result<f64>;
    fn residual(&self, x: &[f64]) -> Result<f64> {
        Ok((self.norm(x)? - 1.0).max(0.0))
    }
}

struct BombieriBall {
    template: Form,
}

impl Geometry for BombieriBall {
    fn form(&self, x: &[f64]) -> Result<Form> {
        self.template.with_coeffs(x.to_vec())
    }

    fn pull_back(&self, grad: &[f64]) -> Result<Vec<f64>> {
        Ok(grad.to_vec())
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = norm2(x);
        if r == 0.0 {
            return Err(Error::Numeric("projection of the zero form".into()));
        }
        Ok(x.iter().map(|v| v / r).collect())
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(norm2(x))
    }
}

/// Unit ball of the `ℓ1` norm of monomial coefficients; `x` holds those
/// coefficients.
struct L1Ball {
    template: Form,
    sqrt_multinomials: Vec<f64>,
}

impl Geometry for L1Ball {
    fn form(&self, x: &[f64]) -> Result<Form> {
        self.template.with_coeffs(x.iter().zip(&self.sqrt_multinomials).map(|(c, s)| c / s).collect())
    }

    fn pull_back(&self, grad: &[f64]) -> Result<Vec<f64>> {
        Ok(grad.iter().zip(&self.sqrt_multinomials).map(|(g, s)| g / s).collect())
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let magnitudes: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let w = project_capped_simplex(&magnitudes);
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return Err(Error::Numeric("projection of the zero form".into()));
        }
        Ok(x.iter().zip(&w).map(|(v, m)| v.signum() * m / total).collect())
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v.abs()).sum())
    }
}

/// PSD matrices in a Schatten ball; `x` holds the matrix row-major.
struct SchattenBall {
    map: GramMap,
    p: f64,
}

impl SchattenBall {
    fn matrix(&self, x: &[f64]) -> Result<Matrix> {
        let dim = self.map.dim();
        Matrix::from_row_major(dim, dim, x.to_vec())
    }

    fn gram(&self, x: &[f64]) -> Result<GramMatrix> {
        GramMatrix::new(self.map.n(), self.map.degree(), self.matrix(x)?)
    }
}

impl Geometry for SchattenBall {
    fn form(&self, x: &[f64]) -> Result<Form> {
        self.map.apply(&self.gram(x)?)
    }

    fn pull_back(&self, grad: &[f64]) -> Result<Vec<f64>> {
        let template = self.map.apply(&GramMatrix::zeros(self.map.n(), self.map.degree())?)?;
        Ok(self.map.adjoint(&template.with_coeffs(grad.to_vec())?)?.as_slice().to_vec())
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.matrix(x)?.symmetrized();
        let projected = project_psd_schatten_ball(&m, self.p)?;
        let r = schatten_norm(&projected, self.p)?;
        if r == 0.0 {
            return Err(Error::Numeric("projection of the zero matrix".into()));
        }
        Ok(projected.scale(1.0 / r).as_slice().to_vec())
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        schatten_norm(&self.matrix(x)?, self.p)
    }

    fn residual(&self, x: &[f64]) -> Result<f64> {
        let g = self.gram(x)?;
        Ok((self.norm(x)? - 1.0).max(0.0) + (-g.min_eigenvalue()?).max(0.0))
    }
}

const MAX_HALVINGS: usize = 40;

fn run<G: Geometry>(
    geometry: &G,
    start: Vec<f64>,
    norm: NormSpec,
    n: usize,
    d: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<IterateRecord>)> {
    if opts.iters == 0 {
        return Err(Error::Domain("iteration budget must be positive".into()));
    }
    if opts.samples < 10 {
        return Err(Error::Domain("at least 10 samples per gradient are required".into()));
    }
    // radial rescaling keeps a feasible start's shape; projection is the fallback
    let r = geometry.norm(&start)?;
    let scaled: Vec<f64> = start.iter().map(|v| v / r).collect();
    let mut x = if r > 0.0 && geometry.residual(&scaled)? <= 1e-12 { scaled } else { geometry.project(&start)? };
    if screen_min(&geometry.form(&x)?, opts.seed)?.is_none() {
        return Err(Error::Initialization(format!("start point for {norm} at (n={n}, d={d}) has infinite volume")));
    }
    let max_samples = opts.samples.saturating_mul(opts.max_sample_factor.max(1));
    let mut samples = opts.samples;
    let mut records = Vec::with_capacity(opts.iters);
    let mut best = f64::INFINITY;
    let mut first_step = None;
    let mut previous: Option<f64> = None;
    for k in 0..opts.iters {
        let seed = derive_seed(opts.seed, k as u64);
        let f = geometry.form(&x)?;
        let law = ReferenceLaw::matched_to(&f, seed)?
            .ok_or_else(|| Error::Numeric(format!("accepted iterate {k} failed the volume screen")))?;
        let g = volume_gradient_with_reference(&f, &law, samples, seed)?;
        if g.volume.infinite {
            return Err(Error::Numeric(format!("importance weights blew up at iterate {k}")));
        }
        let v = g.volume;
        best = best.min(v.value);
        let grad = geometry.pull_back(&g.gradient)?;
        let scale = *first_step.get_or_insert_with(|| opts.step / norm2(&grad).max(f64::MIN_POSITIVE));
        let mut eta = scale / ((k + 1) as f64).sqrt();
        let mut rejected = 0;
        let mut taken = 0.0;
        while rejected <= MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - eta * b).collect();
            let candidate = geometry.project(&trial)?;
            if screen_min(&geometry.form(&candidate)?, seed)?.is_some() {
                taken = eta;
                records.push(IterateRecord {
                    iter: k,
                    volume: v.value,
                    std_error: v.std_error,
                    step: taken,
                    residual: geometry.residual(&x)?,
                    samples,
                    best,
                    rejected,
                });
                x = candidate;
                break;
            }
            eta *= 0.5;
            rejected += 1;
        }
        if rejected > MAX_HALVINGS {
            records.push(IterateRecord {
                iter: k,
                volume: v.value,
                std_error: v.std_error,
                step: taken,
                residual: geometry.residual(&x)?,
                samples,
                best,
                rejected,
            });
        }
        if let Some(prev) = previous {
            if (v.value - prev).abs() < 2.0 * v.std_error {
                samples = (samples * 2).min(max_samples);
            }
        }
        previous = Some(v.value);
    }
    Ok((x, records))
}

fn final_volume(f: &Form, opts: &SolverOptions) -> Result<VolumeEstimate> {
    volume(f, opts.final_samples, derive_seed(opts.seed, u64::MAX))
}

/// Minimizes `v(f)` over the unit ball of the Bombieri norm or of the
/// monomial `ℓ1` norm.
pub fn minimize_volume_form(norm: NormSpec, n: usize, d: usize, opts: &SolverOptions) -> Result<SolverTrace> {
    let b = ball_form(n, d)?;
    let start = match &opts.start {
        Some(s) => {
            if s.n() != n || s.degree() != d {
                return Err(Error::Shape("start form does not match (n, d)".into()));
            }
            s.clone()
        }
        None => b.clone(),
    };
    let (iterates, final_form, final_norm) = match norm {
        NormSpec::Bombieri => {
            let geo = BombieriBall { template: b };
            let (x, it) = run(&geo, start.coeffs().to_vec(), norm, n, d, opts)?;
            (it, geo.form(&x)?, geo.norm(&x)?)
        }
        NormSpec::L1Coeff => {
            let geo = L1Ball { sqrt_multinomials: b.table().sqrt_multinomials().to_vec(), template: b };
            let (x, it) = run(&geo, start.to_monomial(), norm, n, d, opts)?;
            (it, geo.form(&x)?, geo.norm(&x)?)
        }
        other => {
            return Err(Error::Domain(format!(
                "the form solver supports the bombieri and l1 norms, not {other}"
            )))
        }
    };
    Ok(SolverTrace {
        norm,
        n,
        d,
        seed: opts.seed,
        iterates,
        final_volume: final_volume(&final_form, opts)?,
        final_form,
        final_gram: None,
        final_norm,
    })
}

/// Minimizes `v(m^t G m)` over PSD `G` in the unit Schatten `p`-ball,
/// `p ∈ {1, 2, ∞}`.
pub fn minimize_volume_sos(p: f64, n: usize, d: usize, opts: &SolverOptions) -> Result<SolverTrace> {
    if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
        return Err(Error::Domain(format!("Schatten exponent {p} is not supported; use 1, 2 or inf")));
    }
    let map = GramMap::new(n, d)?;
    let dim = map.dim();
    let start = match &opts.start_gram {
        Some(m) => {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::Shape(format!("start Gram matrix must be {dim}×{dim}")));
            }
            m.clone()
        }
        None => Matrix::identity(dim),
    };
    let geo = SchattenBall { map, p };
    let norm = if p.is_infinite() { NormSpec::Spectral } else { NormSpec::Schatten(p) };
    let (x, iterates) = run(&geo, start.as_slice().to_vec(), norm, n, d, opts)?;
    let gram = geo.gram(&x)?;
    let final_form = geo.form(&x)?;
    Ok(SolverTrace {
        norm,
        n,
        d,
        seed: opts.seed,
        iterates,
        final_volume: final_volume(&final_form, opts)?,
        final_norm: geo.norm(&x)?,
        final_form,
        final_gram: Some(gram),
    })
}
