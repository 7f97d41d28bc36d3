//! Latent variable evolution for fingerprint dictionary attacks.
//!
//! The pipeline searches the latent space of an image generator with CMA-ES
//! for a single image that matches as many enrolled identities as possible
//! under a calibrated false-match-rate policy:
//!
//! ```text
//! latent z ──generator──▶ image ──extractor──▶ minutiae ──matcher──▶ identity count
//!     ▲                                                                  │
//!     └─────────────────────────── CMA-ES ◀──────────────────────────────┘
//! ```
//!
//! Modules map onto the stages: [`generator`], [`minutiae`], [`matcher`],
//! [`gallery`] (ingestion, enrollment and threshold calibration), [`cmaes`]
//! and [`engine`] (fitness, evolution runs and evaluation reports).

pub mod cmaes;
pub mod engine;
pub mod error;
pub mod exec;
pub mod gallery;
pub mod generator;
pub mod matcher;
pub mod minutiae;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use raster::GrayImage;
