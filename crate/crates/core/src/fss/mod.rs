//! Finite support summation over a decidable fragment of meadow terms:
//! guard tables, their algebra, the summation binder, and finitely
//! supported probability mass functions.

mod parse;
mod pmf;
pub mod poly;
mod sum;
mod table;

use thiserror::Error;

use crate::meadow::MeadowError;

pub use parse::{gt_parse, gt_parse_str};
pub use pmf::{
    corr2_pmf, cov_pmf, e_pmf, emptiness, is_independent, is_pmf, marginalise, var_pmf, NotPmf,
    PmfView,
};
pub use poly::{rational_roots, Affine, Poly};
pub use sum::{fss, indicator};
pub use table::{gt_add, gt_eval, gt_mul, gt_scale, Binding, Guard, GuardTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FssError {
    #[error("unsupported pattern in {term}: {reason}")]
    Unsupported { term: String, reason: String },
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("'{0}' is not a variable of the table")]
    NotAVariable(String),
    #[error("variable lists differ: [{0}] vs [{1}]")]
    VariableMismatch(String, String),
    #[error("invalid index list {0:?}")]
    BadIndices(Vec<usize>),
    #[error("invalid table literal '{0}'")]
    BadLiteral(String),
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Meadow(#[from] MeadowError),
}
