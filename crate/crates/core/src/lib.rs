//! Toolkit for building a topic-labelled bilingual documentary subtitle
//! corpus aligned with video clips: subtitle parsing, sentence assembly,
//! bilingual pairing and quality scoring, clip segmentation, corpus splits
//! and scenarios, context retrieval, cross-modal fusion kernels and
//! evaluation metrics.

pub mod assemble;
pub mod clip;
pub mod config;
pub mod context;
pub mod corpus;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod num;
pub mod pipeline;
pub mod scoring;
pub mod subtitle;

pub use error::{Error, Result};
pub use num::Scalar;

pub type Matrix = fusion::Matrix<f64>;
pub type Matrix32 = fusion::Matrix<f32>;
pub type Features = fusion::FeatureMatrix<f64>;
pub type Features32 = fusion::FeatureMatrix<f32>;
pub type Fusion = fusion::FusionOutput<f64>;
pub type Frame = metrics::FrameImage<f64>;
pub type Frame32 = metrics::FrameImage<f32>;
