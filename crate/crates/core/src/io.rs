//! JSON file formats for forms and Gram matrices.
//!
//! Forms: `{"n", "d", "basis": "rescaled" | "monomial", "terms": [{"alpha", "coeff"}]}`,
//! omitted terms are zero. Gram matrices: `{"n", "d", "order": "graded-lex", "rows"}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{rescaled_from_monomial, Form, MultiIndexTable};
use crate::linalg::Matrix;
use crate::sos::GramMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Rescaled,
    Monomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFile {
    pub n: usize,
    pub d: usize,
    pub basis: Basis,
    pub terms: Vec<Term>,
}

pub const GRAM_ORDER: &str = "graded-lex";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramFile {
    pub n: usize,
    pub d: usize,
    pub order: String,
    pub rows: Vec<Vec<f64>>,
}

impl FormFile {
    /// Every coefficient, zeros included, in the requested basis.
    pub fn from_form(f: &Form, basis: Basis) -> Self {
        let coeffs = match basis {
            Basis::Rescaled => f.coeffs().to_vec(),
            Basis::Monomial => f.to_monomial(),
        };
        let terms = f.table().iter().zip(coeffs).map(|(alpha, coeff)| Term { alpha: alpha.to_vec(), coeff }).collect();
        Self { n: f.n(), d: f.degree(), basis, terms }
    }

    pub fn to_form(&self) -> Result<Form> {
        let table = MultiIndexTable::new(self.n, self.d)?;
        let mut coeffs = vec![0.0; table.len()];
        let mut seen = vec![false; table.len()];
        for t in &self.terms {
            if t.alpha.len() != self.n {
                return Err(Error::Parse(format!("exponent {:?} has {} entries, expected {}", t.alpha, t.alpha.len(), self.n)));
            }
            let pos = table.position(&t.alpha).ok_or_else(|| {
                Error::Parse(format!("exponent {:?} does not have total degree {}", t.alpha, self.d))
            })?;
            if std::mem::replace(&mut seen[pos], true) {
                return Err(Error::Parse(format!("exponent {:?} listed twice", t.alpha)));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Parse(format!("coefficient of {:?} is not finite", t.alpha)));
            }
            coeffs[pos] = t.coeff;
        }
        match self.basis {
            Basis::Rescaled => Form::new(self.n, self.d, coeffs),
            Basis::Monomial => rescaled_from_monomial(self.n, self.d, &coeffs),
        }
    }
}

impl GramFile {
    pub fn from_gram(g: &GramMatrix) -> Self {
        Self { n: g.n(), d: g.degree(), order: GRAM_ORDER.into(), rows: g.matrix().to_rows() }
    }

    /// Validates shape, ordering tag and symmetry.
    pub fn to_gram(&self) -> Result<GramMatrix> {
        if self.order != GRAM_ORDER {
            return Err(Error::Parse(format!("unsupported monomial order '{}'", self.order)));
        }
        if self.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("Gram matrix has non-finite entries".into()));
        }
        let m = Matrix::from_rows(&self.rows).map_err(|e| Error::Parse(e.to_string()))?;
        GramMatrix::new(self.n, self.d, m)
    }
}

pub fn form_from_json(text: &str) -> Result<Form> {
    serde_json::from_str::<FormFile>(text).map_err(|e| Error::Parse(e.to_string()))?.to_form()
}

pub fn form_to_json(f: &Form, basis: Basis) -> String {
    serde_json::to_string_pretty(&FormFile::from_form(f, basis)).expect("plain data serializes")
}

pub fn gram_from_json(text: &str) -> Result<GramMatrix> {
    serde_json::from_str::<GramFile>(text).map_err(|e| Error::Parse(e.to_string()))?.to_gram()
}

pub fn gram_to_json(g: &GramMatrix) -> String {
    serde_json::to_string_pretty(&GramFile::from_gram(g)).expect("plain data serializes")
}

/// Either kind of input file, told apart by its keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Form(Form),
    Gram(GramMatrix),
}

pub fn load_json(text: &str) -> Result<Loaded> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if value.get("rows").is_some() {
        gram_from_json(text).map(Loaded::Gram)
    } else if value.get("terms").is_some() {
        form_from_json(text).map(Loaded::Form)
    } else {
        Err(Error::Parse("expected a form file (with \"terms\") or a Gram file (with \"rows\")".into()))
    }
}
