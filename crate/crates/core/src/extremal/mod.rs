//! Volume minimization over norm balls and over PSD Gram matrices, with the
//! closed-form optima for orthogonally invariant norms and a randomized
//! lower-bound checker.

mod solver;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{ball_form, bombieri_norm_ball_exact, nuclear_norm_ball, powers_form, Form};
use crate::norms::{lp_norm_ball_exact, lp_sphere_norm, sup_sphere_search, SphereSearch};
use crate::sos::{gram_dimension, schatten_norm, GramMatrix};
use crate::special::ball_volume;

pub use solver::{minimize_volume_form, minimize_volume_sos, IterateRecord, SolverOptions, SolverTrace};
pub use verify::{
    ball_power_decomposition, verify_lower_bound, verify_pstar_equivalence, GapSummary, PStarReport,
    VerificationReport, VerifyOptions, Violation,
};

/// Norms on forms (or on Gram matrices) defining the feasible ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum NormSpec {
    Bombieri,
    /// `ℓ1` norm of the coefficients in the plain monomial basis.
    L1Coeff,
    /// `L^p` norm on the sphere against surface measure.
    Lp(f64),
    Sup,
    /// Infimum of `Σ|λ_k|` over power-sum decompositions.
    Nuclear,
    /// Schatten norm of a Gram matrix.
    Schatten(f64),
    Spectral,
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lp(p) | NormSpec::Schatten(p) if !(p >= 1.0) => {
                Err(Error::Domain(format!("norm exponent must be at least 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// Invariant under the orthogonal group acting on forms (or by
    /// conjugation on Gram matrices).
    pub fn is_invariant(&self) -> bool {
        !matches!(self, NormSpec::L1Coeff)
    }

    /// Defined on Gram matrices rather than on forms.
    pub fn is_matrix(&self) -> bool {
        matches!(self, NormSpec::Schatten(_) | NormSpec::Spectral)
    }

    /// Schatten exponent of a matrix kind, `∞` for the spectral norm.
    pub fn schatten_p(&self) -> Option<f64> {
        match *self {
            NormSpec::Schatten(p) => Some(p),
            NormSpec::Spectral => Some(f64::INFINITY),
            _ => None,
        }
    }

    /// Exact value of the norm at the ball form, or at the identity Gram matrix.
    pub fn at_ball(&self, n: usize, d: usize) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            NormSpec::Bombieri => bombieri_norm_ball_exact(n, d)?,
            NormSpec::L1Coeff => ball_form(n, d)?.monomial_l1_norm(),
            NormSpec::Lp(p) => lp_norm_ball_exact(n, p)?,
            NormSpec::Sup => 1.0,
            NormSpec::Nuclear => nuclear_norm_ball(n, d)?,
            NormSpec::Schatten(p) => schatten_identity(n, d, p)?,
            NormSpec::Spectral => {
                gram_dimension(n, d)?;
                1.0
            }
        })
    }
}

fn schatten_identity(n: usize, d: usize, p: f64) -> Result<f64> {
    let dim = gram_dimension(n, d)? as f64;
    Ok(if p.is_infinite() { 1.0 } else { dim.powf(1.0 / p) })
}

fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormSpec::Bombieri => write!(f, "bombieri"),
            NormSpec::L1Coeff => write!(f, "l1"),
            NormSpec::Lp(p) => write!(f, "lp({})", fmt_exponent(p)),
            NormSpec::Sup => write!(f, "sup"),
            NormSpec::Nuclear => write!(f, "nuclear"),
            NormSpec::Schatten(p) => write!(f, "schatten({})", fmt_exponent(p)),
            NormSpec::Spectral => write!(f, "spectral"),
        }
    }
}

pub fn parse_exponent(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::Parse(format!("bad exponent '{s}'"))),
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    /// Names as printed by `Display`; the exponent may also follow a colon
    /// (`lp:2`, `schatten:inf`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')'))),
            None => (s.as_str(), None),
        };
        let exponent = || -> Result<f64> {
            parse_exponent(arg.ok_or_else(|| Error::Parse(format!("norm '{s}' needs an exponent")))?)
        };
        let spec = match head {
            "bombieri" => NormSpec::Bombieri,
            "l1" | "l1_coeff" => NormSpec::L1Coeff,
            "lp" | "lp_sphere" => NormSpec::Lp(exponent()?),
            "sup" | "sup_sphere" | "uniform" => NormSpec::Sup,
            "nuclear" => NormSpec::Nuclear,
            "schatten" => match exponent()? {
                p if p.is_infinite() => NormSpec::Spectral,
                p => NormSpec::Schatten(p),
            },
            "spectral" => NormSpec::Spectral,
            _ => return Err(Error::Parse(format!("unknown norm '{s}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `‖b‖^{n/d} · vol(B_n)`, the least volume over the unit ball of an
/// invariant norm (`‖id_N‖` in place of `‖b‖` for Gram norms).
pub fn theoretical_opt(norm: NormSpec, n: usize, d: usize) -> Result<f64> {
    if !norm.is_invariant() {
        return Err(Error::Domain(format!("no closed-form optimum for the non-invariant norm {norm}")));
    }
    let scale = norm.at_ball(n, d)?;
    Ok(scale.powf(n as f64 / d as f64) * ball_volume(n))
}

/// The minimizer `b/‖b‖` (as a form) for invariant kinds.
pub fn theoretical_minimizer(norm: NormSpec, n: usize, d: usize) -> Result<Form> {
    if !norm.is_invariant() {
        return Err(Error::Domain(format!("no closed-form minimizer for the non-invariant norm {norm}")));
    }
    Ok(ball_form(n, d)?.scaled(1.0 / norm.at_ball(n, d)?))
}

/// `Σ x_i^d / sqrt(n)`, the form reported in the literature as the `ℓ1`
/// minimizer, and `Σ x_i^d / n`, the powers form on the unit `ℓ1` sphere.
pub fn l1_candidates(n: usize, d: usize) -> Result<Vec<(&'static str, Form)>> {
    let p = powers_form(n, d)?;
    let b = ball_form(n, d)?;
    let bl1 = b.monomial_l1_norm();
    Ok(vec![
        ("powers/sqrt(n)", p.scaled(1.0 / (n as f64).sqrt())),
        ("powers/n", p.scaled(1.0 / n as f64)),
        ("ball/l1", b.scaled(1.0 / bl1)),
    ])
}

/// Norm of a form with a standard error (zero for exact kinds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub std_error: f64,
}

/// Evaluates a form norm. The sup norm is a search lower bound; the nuclear
/// norm of an arbitrary form is not computable here.
pub fn form_norm(f: &Form, norm: NormSpec, samples: usize, seed: u64) -> Result<NormValue> {
    norm.validate()?;
    let exact = |value| NormValue { value, std_error: 0.0 };
    match norm {
        NormSpec::Bombieri => Ok(exact(f.bombieri_norm())),
        NormSpec::L1Coeff => Ok(exact(f.monomial_l1_norm())),
        NormSpec::Lp(p) => {
            let e = lp_sphere_norm(f, p, samples, seed)?;
            Ok(NormValue { value: e.value, std_error: e.std_error })
        }
        NormSpec::Sup => Ok(exact(sup_sphere_search(f, SphereSearch { seed, ..SphereSearch::default() })?.value)),
        NormSpec::Nuclear => Err(Error::Domain(
            "the nuclear norm of a general form needs a decomposition certificate".into(),
        )),
        NormSpec::Schatten(_) | NormSpec::Spectral => {
            Err(Error::Domain(format!("{norm} is a norm on Gram matrices, not on forms")))
        }
    }
}

pub fn gram_norm(g: &GramMatrix, norm: NormSpec) -> Result<f64> {
    match norm.schatten_p() {
        Some(p) => schatten_norm(g.matrix(), p),
        None => Err(Error::Domain(format!("{norm} is a norm on forms, not on Gram matrices"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn optima() {
        assert_relative_eq!(theoretical_opt(NormSpec::Bombieri, 2, 4).unwrap(), (8f64 / 3.0).powf(0.25) * PI, max_relative = 1e-14);
        assert!((theoretical_opt(NormSpec::Bombieri, 2, 4).unwrap() - 4.01459).abs() < 1e-5);
        for (n, d) in [(1, 2), (2, 4), (3, 6)] {
            assert_relative_eq!(theoretical_opt(NormSpec::Sup, n, d).unwrap(), ball_volume(n), max_relative = 1e-15);
            assert_relative_eq!(theoretical_opt(NormSpec::Spectral, n, d).unwrap(), ball_volume(n), max_relative = 1e-15);
        }
        assert_relative_eq!(theoretical_opt(NormSpec::Schatten(2.0), 2, 2).unwrap(), 2f64.sqrt() * PI, max_relative = 1e-14);
        assert_relative_eq!(theoretical_opt(NormSpec::Schatten(1.0), 2, 2).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(theoretical_opt(NormSpec::Nuclear, 2, 2).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(theoretical_opt(NormSpec::Lp(1.0), 2, 2).unwrap(), 2.0 * PI * PI, max_relative = 1e-14);
        assert!(matches!(theoretical_opt(NormSpec::L1Coeff, 2, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn minimizer_has_unit_norm() {
        for norm in [NormSpec::Bombieri, NormSpec::Sup, NormSpec::Nuclear, NormSpec::Lp(2.0), NormSpec::Schatten(2.0)] {
            let f = theoretical_minimizer(norm, 2, 4).unwrap();
            assert_relative_eq!(f.bombieri_norm() * norm.at_ball(2, 4).unwrap(), bombieri_norm_ball_exact(2, 4).unwrap(), max_relative = 1e-14);
        }
        let f = theoretical_minimizer(NormSpec::Bombieri, 3, 4).unwrap();
        assert_relative_eq!(form_norm(&f, NormSpec::Bombieri, 0, 0).unwrap().value, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn parsing_round_trip() {
        for norm in [
            NormSpec::Bombieri,
            NormSpec::L1Coeff,
            NormSpec::Lp(2.0),
            NormSpec::Sup,
            NormSpec::Nuclear,
            NormSpec::Schatten(1.0),
            NormSpec::Spectral,
        ] {
            assert_eq!(norm.to_string().parse::<NormSpec>().unwrap(), norm);
        }
        assert_eq!("schatten:inf".parse::<NormSpec>().unwrap(), NormSpec::Spectral);
        assert_eq!("lp:1.5".parse::<NormSpec>().unwrap(), NormSpec::Lp(1.5));
        assert!("lp(0.5)".parse::<NormSpec>().is_err());
        assert!("lp".parse::<NormSpec>().is_err());
        assert!("frobenius".parse::<NormSpec>().is_err());
    }

    #[test]
    fn l1_candidate_norms() {
        let c = l1_candidates(2, 4).unwrap();
        assert_relative_eq!(c[0].1.monomial_l1_norm(), 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(c[1].1.monomial_l1_norm(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(c[2].1.monomial_l1_norm(), 1.0, max_relative = 1e-14);
    }
}
