//! Sum-of-squares machinery: the Gram map, symmetric eigensolver, Schatten
//! norms, projections onto PSD ∩ Schatten balls and the orthogonal
//! representation induced on half-degree forms.

mod eigen;
mod gram;
mod representation;
mod schatten;

pub use eigen::{eigh, EigenDecomposition};
pub use gram::{form_from_gram, gram_dimension, gram_from_squares, sos_decompose, GramMap, GramMatrix, PSD_TOLERANCE};
pub use representation::induced_representation;
pub use schatten::{project_capped_simplex, project_gram, project_psd_schatten_ball, schatten_norm, spectral_norm};
