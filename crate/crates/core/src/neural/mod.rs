//! Feed-forward action predictors trained from scratch: dense and temporal
//! convolution layers, softmax cross-entropy, Adam, and the two history
//! encoders.

pub mod adam;
pub mod checkpoint;
pub mod encode;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use encode::{encode_samples, EncodedSet, EncodingMode, FeatureEncoding};
pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{softmax2, Architecture, Model, ModelSpec};
pub use tensor::Tensor;
pub use train::{train, EpochLog, TrainConfig, TrainLog};
