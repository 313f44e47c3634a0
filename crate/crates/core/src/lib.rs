//! Prediction of psycholinguistic norms (concreteness, imageability) from
//! word embeddings, within a language and across languages.
//!
//! The crate is organised bottom-up:
//!
//! * [`embed_store`]: `.vec` parsing, standardization, lexicon intersection.
//! * [`align`]: orthogonal Procrustes alignment of two embedding spaces.
//! * [`norms`]: norm lexicons and transfer dictionaries.
//! * [`svr`]: epsilon-SVR trained with SMO.
//! * [`ffn`]: feedforward regressor with inverted dropout.
//! * [`stats`]: correlations, folds and the approximate randomization test.
//! * [`pipelines`]: in-language CV, cross-lingual transfer, coefficient
//!   analysis and lexicon prediction.

pub mod align;
pub mod embed_store;
mod error;
pub mod ffn;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod pipelines;
pub mod stats;
pub mod svr;

pub use error::{Error, Result};
