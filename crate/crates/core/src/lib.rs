//! Exact equational probability calculus over the signed meadow of rationals.

pub mod cli;
pub mod condval;
pub mod config;
pub mod events;
pub mod fss;
pub mod lexer;
pub mod meadow;
pub mod multidim;
pub mod probability;
pub mod rv;
