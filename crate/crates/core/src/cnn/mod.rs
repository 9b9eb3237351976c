//! Frame-level blink detector: a small convolutional network written from
//! scratch, trained with Adam on categorical cross-entropy.

pub mod adam;
pub mod dataset;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dataset::{load_crop_dataset, load_crop_video, write_crop_dataset, CropVideo};
pub use layers::Mode;
pub use model::{CnnConfig, CnnModel, ConvBlock, TrainingMeta};
pub use tensor::Tensor;
pub use train::{
    classify_pair, classify_video, evaluate_crops, flip_horizontal, image_tensor,
    predict_eye_state, train_blink_detector, LabeledCrop, TrainOptions,
};
