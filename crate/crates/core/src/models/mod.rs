//! Classifier and noise-predictor interfaces, trainable toy networks, and
//! the analytic Gaussian denoiser used as a correctness oracle.

mod analytic;
mod classifier;
mod convnet;
mod io;
mod noise_predictor;

pub use analytic::AnalyticGaussianDenoiser;
pub use classifier::{
    train_classifier, train_trojan_classifier, ToyClassifier, TrainedClassifier, CONV_FILTERS,
};
pub use io::{load_classifier, load_noise_predictor, save_classifier, save_noise_predictor};
pub use noise_predictor::{
    train_noise_predictor, ToyNoisePredictor, TrainedNoisePredictor, HIDDEN_WIDTH,
};

use crate::error::Result;
use crate::tensor::ImageTensor;

/// Black-box classifier: probability vector over classes from an image.
/// No gradient access; saliency estimation works against this trait alone.
pub trait Classifier: Sync {
    fn num_classes(&self) -> usize;

    /// Class probabilities for a unit-domain image. Nonnegative, summing
    /// to 1 within 1e-6.
    fn predict_probs(&self, x: &ImageTensor) -> Result<Vec<f64>>;
}

/// White-box extension: gradient of the log-probability of a class with
/// respect to the input. Needed by gradient attacks, not by the defense.
pub trait InputGradient {
    fn input_gradient(&self, x: &ImageTensor, class: usize) -> Result<ImageTensor>;
}

/// Noise predictor `eps(x_t, t)` parameterizing the reverse diffusion.
pub trait NoisePredictor: Sync {
    /// Predicted noise for a signed-domain state at timestep `t`. Output
    /// dims equal input dims; values are unbounded.
    fn predict_eps(&self, x_t: &ImageTensor, t: usize) -> Result<ImageTensor>;
}

/// Training hyperparameters shared by the toy networks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of training images replaced by trigger-embedded copies
    /// (trojan training only).
    pub poison_fraction: f64,
    /// Label forced onto poisoned images (trojan training only).
    pub target_label: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
            poison_fraction: 0.1,
            target_label: 0,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 {
            return Err(crate::error::Error::param(
                "learning_rate",
                "must be nonnegative",
            ));
        }
        if !(0.0..=1.0).contains(&self.poison_fraction) {
            return Err(crate::error::Error::param(
                "poison_fraction",
                "must lie in [0, 1]",
            ));
        }
        if self.batch_size == 0 {
            return Err(crate::error::Error::param("batch_size", "must be positive"));
        }
        Ok(())
    }
}

/// Top-1 accuracy of a classifier over a labeled dataset.
pub fn top1_accuracy(model: &impl Classifier, data: &crate::datagen::LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (img, &label) in data.images.iter().zip(&data.labels) {
        let probs = model.predict_probs(img)?;
        let pred = argmax(&probs);
        if pred == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let _ = values;
    best
}
