use std::fs;

use serde::Serialize;

use ballopt::extremal::{
    l1_candidates, minimize_volume_form, minimize_volume_sos, parse_exponent, theoretical_minimizer, theoretical_opt,
    verify_lower_bound, IterateRecord, NormSpec, SolverOptions, VerificationReport, VerifyOptions,
};
use ballopt::form::{ball_form, powers_form, Form};
use ballopt::io::{load_json, Loaded};
use ballopt::linalg::norm2;
use ballopt::norms::{lp_sphere_norm, min_sphere, sup_sphere_norm};
use ballopt::sos::{form_from_gram, schatten_norm, GramMatrix};
use ballopt::volume::{self as vol, volume_laplace_mc, volume_spherical_mc, VolumeMethod};
use ballopt::Error;

use crate::output::{emit, num, Report};
use crate::{Builtin, Method, NormArgs, NormKind, OptimizeArgs, Source, VerifyArgs, VolumeArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

pub struct Outcome {
    pub code: u8,
    pub message: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Self { code: 0, message: None }
    }
}

enum Input {
    Form(Form),
    Gram(GramMatrix),
}

impl Input {
    fn into_form(self) -> Result<Form, Failure> {
        match self {
            Input::Form(f) => Ok(f),
            Input::Gram(g) => Ok(form_from_gram(&g)?),
        }
    }
}

fn read_input(path: &std::path::Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    load_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(source: &Source) -> Result<Input, Failure> {
    match (&source.input, source.builtin) {
        (Some(path), _) => Ok(match read_input(path)? {
            Loaded::Form(f) => Input::Form(f),
            Loaded::Gram(g) => Input::Gram(g),
        }),
        (None, Some(b)) => {
            let (n, d) = match (source.n, source.d) {
                (Some(n), Some(d)) => (n, d),
                _ => return Err(Failure::usage("--builtin needs --n and --d")),
            };
            Ok(Input::Form(match b {
                Builtin::Ball => ball_form(n, d)?,
                Builtin::Powers => powers_form(n, d)?,
            }))
        }
        (None, None) => Err(Failure::usage("give either --input FILE or --builtin ball|powers")),
    }
}

#[derive(Serialize)]
struct VolumeReport {
    n: usize,
    d: usize,
    method: VolumeMethod,
    /// Null when infinite.
    value: Option<f64>,
    std_error: f64,
    samples: usize,
    seed: u64,
    infinite: bool,
}

impl Report for VolumeReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["n", "d", "method", "value", "std_error", "samples", "seed", "infinite"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let method = serde_json::to_value(self.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        vec![vec![
            self.n.to_string(),
            self.d.to_string(),
            method,
            self.value.map(num).unwrap_or_else(|| "inf".into()),
            num(self.std_error),
            self.samples.to_string(),
            self.seed.to_string(),
            self.infinite.to_string(),
        ]]
    }
}

pub fn volume(args: &VolumeArgs) -> Result<Outcome, Failure> {
    let f = load(&args.source)?.into_form()?;
    let seed = args.common.seed;
    let est = match args.method {
        Method::Auto => vol::volume(&f, args.samples, seed)?,
        Method::Laplace => volume_laplace_mc(&f, args.samples, seed)?,
        Method::Spherical => volume_spherical_mc(&f, args.samples, seed)?,
    };
    let report = VolumeReport {
        n: f.n(),
        d: f.degree(),
        method: est.method,
        value: (!est.infinite).then_some(est.value),
        std_error: est.std_error,
        samples: est.samples,
        seed: est.seed,
        infinite: est.infinite,
    };
    emit(&report, &args.common)?;
    Ok(if est.infinite { Outcome { code: 3, message: Some("infinite volume".into()) } } else { Outcome::ok() })
}

#[derive(Serialize)]
struct NormReport {
    kind: String,
    p: Option<String>,
    n: usize,
    d: usize,
    value: f64,
    std_error: f64,
    /// exact, monte_carlo, lower_bound or upper_bound
    estimate: &'static str,
}

impl Report for NormReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["kind", "p", "n", "d", "value", "std_error", "estimate"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.kind.clone(),
            self.p.clone().unwrap_or_default(),
            self.n.to_string(),
            self.d.to_string(),
            num(self.value),
            num(self.std_error),
            self.estimate.into(),
        ]]
    }
}

fn exponent(p: &Option<String>, kind: &str) -> Result<f64, Failure> {
    let p = p.as_deref().ok_or_else(|| Failure::usage(format!("--kind {kind} needs --p")))?;
    let v = parse_exponent(p)?;
    if !(v >= 1.0) {
        return Err(Failure::usage(format!("--p must be at least 1, got {p}")));
    }
    Ok(v)
}

pub fn norm(args: &NormArgs) -> Result<Outcome, Failure> {
    let input = load(&args.source)?;
    let seed = args.common.seed;
    let kind_name = format!("{:?}", args.kind).to_ascii_lowercase();
    let mut p_label = None;
    let (n, d, value, std_error, estimate) = match args.kind {
        NormKind::Schatten | NormKind::Spectral => {
            let g = match input {
                Input::Gram(g) => g,
                Input::Form(_) => {
                    return Err(Failure::usage(format!("--kind {kind_name} needs a Gram matrix file, not a form")))
                }
            };
            let p = if args.kind == NormKind::Spectral { f64::INFINITY } else { exponent(&args.p, &kind_name)? };
            p_label = Some(if p.is_infinite() { "inf".to_string() } else { num(p) });
            (g.n(), g.degree(), schatten_norm(g.matrix(), p)?, 0.0, "exact")
        }
        kind => {
            let f = input.into_form()?;
            let (n, d) = (f.n(), f.degree());
            match kind {
                NormKind::Bombieri => (n, d, f.bombieri_norm(), 0.0, "exact"),
                NormKind::L1 => (n, d, f.monomial_l1_norm(), 0.0, "exact"),
                NormKind::Lp => {
                    let p = exponent(&args.p, "lp")?;
                    if p.is_infinite() {
                        return Err(Failure::usage("use --kind sup for the uniform norm"));
                    }
                    p_label = Some(num(p));
                    let e = lp_sphere_norm(&f, p, args.samples, seed)?;
                    (n, d, e.value, e.std_error, "monte_carlo")
                }
                NormKind::Sup => (n, d, sup_sphere_norm(&f, args.restarts, args.iters, seed)?.value, 0.0, "lower_bound"),
                NormKind::Min => (n, d, min_sphere(&f, args.restarts, args.iters, seed)?.value, 0.0, "upper_bound"),
                NormKind::Schatten | NormKind::Spectral => unreachable!(),
            }
        }
    };
    emit(&NormReport { kind: kind_name, p: p_label, n, d, value, std_error, estimate }, &args.common)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct Candidate {
    name: &'static str,
    /// Euclidean distance between monomial coefficient vectors.
    distance: f64,
    l1_norm: f64,
}

#[derive(Serialize)]
struct OptimizeReport {
    norm: String,
    n: usize,
    d: usize,
    seed: u64,
    iters: usize,
    samples: usize,
    final_volume: Option<f64>,
    final_std_error: f64,
    final_method: VolumeMethod,
    final_norm: f64,
    theoretical_opt: Option<f64>,
    /// Bombieri distance to the closed-form minimizer.
    distance_to_minimizer: Option<f64>,
    nearest_candidate: Option<&'static str>,
    candidates: Vec<Candidate>,
    coeffs: Vec<f64>,
    monomial_coeffs: Vec<f64>,
    gram: Option<Vec<Vec<f64>>>,
    trace: Vec<IterateRecord>,
}

impl Report for OptimizeReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["iter", "volume", "std_error", "step", "residual", "samples", "best", "rejected"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.trace
            .iter()
            .map(|r| {
                vec![
                    r.iter.to_string(),
                    num(r.volume),
                    num(r.std_error),
                    num(r.step),
                    num(r.residual),
                    r.samples.to_string(),
                    num(r.best),
                    r.rejected.to_string(),
                ]
            })
            .collect()
    }
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome, Failure> {
    if args.iters == 0 {
        return Err(Failure::usage("--iters must be positive"));
    }
    let mut opts = SolverOptions {
        iters: args.iters,
        samples: args.samples,
        seed: args.common.seed,
        step: args.step,
        ..SolverOptions::default()
    };
    let trace = if args.sos {
        let p = exponent(&args.p, "sos")?;
        if args.input.is_some() {
            return Err(Failure::usage("--input sets a start form and is not used with --sos"));
        }
        minimize_volume_sos(p, args.n, args.d, &opts)?
    } else {
        let name = args.norm.as_deref().ok_or_else(|| Failure::usage("give --norm bombieri|l1 or --sos --p P"))?;
        let norm: NormSpec = name.parse()?;
        if let Some(path) = &args.input {
            opts.start = Some(match read_input(path)? {
                Loaded::Form(f) => f,
                Loaded::Gram(g) => form_from_gram(&g)?,
            });
        }
        minimize_volume_form(norm, args.n, args.d, &opts)?
    };
    let (n, d) = (args.n, args.d);
    let f = &trace.final_form;
    let theory = theoretical_opt(trace.norm, n, d).ok();
    let distance_to_minimizer = match theoretical_minimizer(trace.norm, n, d) {
        Ok(m) => Some(f.add_scaled(-1.0, &m)?.bombieri_norm()),
        Err(_) => None,
    };
    let mut candidates = Vec::new();
    if trace.norm == NormSpec::L1Coeff {
        let mono = f.to_monomial();
        for (name, c) in l1_candidates(n, d)? {
            let diff: Vec<f64> = mono.iter().zip(c.to_monomial()).map(|(a, b)| a - b).collect();
            candidates.push(Candidate { name, distance: norm2(&diff), l1_norm: c.monomial_l1_norm() });
        }
    }
    let nearest_candidate =
        candidates.iter().min_by(|a, b| a.distance.total_cmp(&b.distance)).map(|c| c.name);
    let v = trace.final_volume;
    let report = OptimizeReport {
        norm: trace.norm.to_string(),
        n,
        d,
        seed: trace.seed,
        iters: args.iters,
        samples: args.samples,
        final_volume: (!v.infinite).then_some(v.value),
        final_std_error: v.std_error,
        final_method: v.method,
        final_norm: trace.final_norm,
        theoretical_opt: theory,
        distance_to_minimizer,
        nearest_candidate,
        candidates,
        coeffs: f.coeffs().to_vec(),
        monomial_coeffs: f.to_monomial(),
        gram: trace.final_gram.as_ref().map(|g| g.matrix().to_rows()),
        trace: trace.iterates.clone(),
    };
    emit(&report, &args.common)?;
    Ok(Outcome::ok())
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    cells: Vec<VerificationReport>,
}

impl Report for VerifyReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["norm", "n", "d", "theoretical_opt", "bound", "trials", "min_ratio", "min_ratio_std_error", "violations", "passed"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| {
                vec![
                    c.norm.clone(),
                    c.n.to_string(),
                    c.d.to_string(),
                    num(c.theoretical_opt),
                    num(c.bound),
                    c.trials.to_string(),
                    num(c.min_ratio),
                    num(c.min_ratio_std_error),
                    c.violations.len().to_string(),
                    c.passed.to_string(),
                ]
            })
            .collect()
    }
}

/// Norm kinds and sizes checked when no single cell is requested.
pub const MATRIX_NORMS: [NormSpec; 8] = [
    NormSpec::Bombieri,
    NormSpec::Lp(1.0),
    NormSpec::Lp(2.0),
    NormSpec::Sup,
    NormSpec::Nuclear,
    NormSpec::Schatten(1.0),
    NormSpec::Schatten(2.0),
    NormSpec::Spectral,
];
pub const MATRIX_SIZES: [(usize, usize); 3] = [(2, 2), (2, 4), (3, 2)];

pub fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let opts = VerifyOptions {
        trials: args.trials,
        seed: args.common.seed,
        samples: args.samples,
        norm_samples: args.samples,
        tol: args.tol,
        bound_factor: args.bound_factor,
    };
    let cells: Vec<(NormSpec, usize, usize)> = match &args.norm {
        Some(name) => {
            let norm: NormSpec = name.parse()?;
            match (args.n, args.d) {
                (Some(n), Some(d)) => vec![(norm, n, d)],
                (None, None) => MATRIX_SIZES.iter().map(|&(n, d)| (norm, n, d)).collect(),
                _ => return Err(Failure::usage("give both --n and --d, or neither")),
            }
        }
        None => MATRIX_NORMS.iter().flat_map(|&m| MATRIX_SIZES.iter().map(move |&(n, d)| (m, n, d))).collect(),
    };
    let reports = cells
        .into_iter()
        .map(|(norm, n, d)| verify_lower_bound(norm, n, d, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let failing: Vec<String> =
        reports.iter().filter(|r| !r.passed).map(|r| format!("{} (n={}, d={})", r.norm, r.n, r.d)).collect();
    emit(&VerifyReport { passed, cells: reports }, &args.common)?;
    Ok(if passed {
        Outcome::ok()
    } else {
        Outcome { code: 4, message: Some(format!("verification failed: {}", failing.join(", "))) }
    })
}
