//! Core algorithms for unsupervised cable-news bias characterization.
//!
//! The pipeline determines *what* each program talks about (named-entity
//! keywords) and *how* it talks about it (per-sentence stance toward each
//! keyword), folds both into a program-by-program similarity matrix per
//! month, and clusters programs with normalized spectral clustering.
//!
//! This crate is `no_std` compatible (it needs `alloc`). File formats, the
//! remote classifier, caching and the command line live in the `newsbias`
//! companion crate.
//!
//! | Module | Role |
//! |--------|------|
//! | [`ingest`] | canonical transcript parsing, sentence segmentation, monthly buckets |
//! | [`entity`] | entity recognition, exclusion classes, keyword selection |
//! | [`stance`] | stance prompt, verdict parsing, aggregation, lexicon sentiment |
//! | [`networks`] | B / C program-topic matrices, TF-IDF, T / S / P similarities |
//! | [`cluster`] | spectral embedding, k-means, label alignment, ARI, PCA, Sankey |
//! | [`linalg`] | dense matrices and the cyclic Jacobi eigensolver |

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cluster;
pub mod entity;
pub mod ingest;
pub mod linalg;
pub mod networks;
pub mod program;
pub mod stance;

pub use program::{MonthKey, ProgramId};
