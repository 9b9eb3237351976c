//! Bell's palsy screening from blink asymmetry.
//!
//! Frames of both eyes are classified open or closed by a small CNN, the
//! closed frames are counted per eye, and the ratio of the smaller to the
//! larger count (blink similarity) feeds a one-feature detector.

pub mod blink_feature;
pub mod cnn;
pub mod detector;
pub mod error;
pub mod eval;
pub mod formats;
pub mod image;
pub mod synth;
pub mod types;

pub use blink_feature::{
    blink_similarity, count_eye_closed_frames, estimate_ect, extract_feature, severity_score,
    ClosureTime, CountRatio,
};
pub use detector::{Classifier, Detector, Learner, LearnerKind};
pub use error::{Error, Result};
pub use eval::SplitRatios;
pub use formats::LabeledFeature;
pub use image::{GrayImage, CROP_SIZE};
pub use types::{
    BlinkFeature, ConfusionMatrix, EvalReport, EyeCropPair, EyeState, EyeStateSequence,
    FrameStates, SubjectLabel,
};
