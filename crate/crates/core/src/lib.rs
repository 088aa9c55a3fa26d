//! Salient conditional diffusion: a black-box defense against backdoor
//! attacks on image classifiers.
//!
//! The pipeline combines three ingredients. RISE saliency maps, computed
//! from classifier queries alone, locate the pixels a (possibly trojaned)
//! model attends to. A percentile threshold over the top-r class maps
//! yields a binary visible mask. Diffusion purification then noises and
//! reconstructs the image with a DDPM twice: first diffusing the salient
//! pixels deeply while conditioning on everything else, then diffusing the
//! complement shallowly to strip image-wide perturbations.
//!
//! Everything here runs at desk scale on synthetic glyph datasets with toy
//! models trained from scratch, so the whole defense, the attacks it is
//! evaluated against, and the metrics harness are reproducible from a
//! single master seed.

pub mod attacks;
pub mod config;
pub mod datagen;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod models;
pub mod rng;
pub mod saliency;
pub mod sancdifi;
pub mod schedule;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::{derive_seed, SeededRng};
pub use schedule::DiffusionSchedule;
pub use tensor::{BinaryMask, Domain, ImageTensor};
