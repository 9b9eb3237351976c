use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::dataset::CropVideo;
use super::layers::Mode;
use super::model::{CnnConfig, CnnModel};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::image::{GrayImage, CROP_SIZE};
use crate::types::{
    ConfusionMatrix, EvalReport, EyeCropPair, EyeState, EyeStateSequence, FrameStates,
};

/// An eye crop with its ground-truth state.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCrop {
    pub id: String,
    pub image: GrayImage,
    pub state: EyeState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Stop as soon as an epoch reaches 100% validation accuracy.
    pub stop_on_perfect_validation: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            stop_on_perfect_validation: true,
        }
    }
}

/// Mirrors a 50x50 crop left to right.
pub fn flip_horizontal(image: &GrayImage) -> Result<GrayImage> {
    if image.width() != CROP_SIZE || image.height() != CROP_SIZE {
        return Err(Error::ShapeMismatch(format!(
            "expected a {CROP_SIZE}x{CROP_SIZE} crop, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    Ok(image.flipped_horizontal())
}

pub fn image_tensor(image: &GrayImage) -> Tensor {
    Tensor::new(
        vec![1, image.height(), image.width()],
        image.pixels().to_vec(),
    )
    .expect("image dimensions are positive")
}

/// Eye state and its probability for a right-oriented crop.
pub fn predict_eye_state(model: &CnnModel, crop: &GrayImage) -> Result<(EyeState, f64)> {
    let probs = model.probabilities(&image_tensor(crop))?;
    let (class, p) = if probs[1] > probs[0] {
        (EyeState::Closed, probs[1])
    } else {
        (EyeState::Open, probs[0])
    };
    Ok((class, p))
}

/// Classifies both eyes of one frame.
pub fn classify_pair(model: &CnnModel, pair: &EyeCropPair) -> Result<FrameStates> {
    Ok(FrameStates {
        frame_index: pair.frame_index,
        left: predict_eye_state(model, &pair.left_image)?.0,
        right: predict_eye_state(model, &pair.right_image)?.0,
    })
}

/// Eye-state stream of a crop video, one frame per usable crop pair.
pub fn classify_video(model: &CnnModel, video: &CropVideo) -> Result<EyeStateSequence> {
    let frames = video
        .pairs
        .iter()
        .map(|p| classify_pair(model, p))
        .collect::<Result<Vec<_>>>()?;
    EyeStateSequence::new(video.video_id.clone(), video.fps, frames)
}

pub fn evaluate_crops(model: &CnnModel, crops: &[LabeledCrop]) -> Result<EvalReport> {
    let mut confusion = ConfusionMatrix::default();
    for crop in crops {
        let (state, _) = predict_eye_state(model, &crop.image)?;
        confusion.record(crop.state.class_index(), state.class_index());
    }
    EvalReport::from_confusion(confusion)
}

fn accuracy(model: &CnnModel, inputs: &[Tensor], targets: &[usize]) -> Result<f64> {
    let mut correct = 0;
    for (x, &t) in inputs.iter().zip(targets) {
        let p = model.probabilities(x)?;
        let predicted = usize::from(p[1] > p[0]);
        correct += usize::from(predicted == t);
    }
    Ok(correct as f64 / inputs.len().max(1) as f64)
}

/// Trains the blink detector with mini-batch Adam on summed cross-entropy.
///
/// The returned model holds the parameters from the epoch with the highest
/// validation accuracy (earliest on ties). With an empty validation set the
/// final epoch is kept. Identical inputs and seed give identical models.
pub fn train_blink_detector(
    train: &[LabeledCrop],
    val: &[LabeledCrop],
    config: &CnnConfig,
    options: &TrainOptions,
    seed: u64,
) -> Result<CnnModel> {
    config.validate()?;
    for state in [EyeState::Open, EyeState::Closed] {
        if !train.iter().any(|c| c.state == state) {
            return Err(Error::EmptyClass(format!(
                "no {state} crops in the training set"
            )));
        }
    }
    if options.batch_size == 0 || options.epochs == 0 {
        return Err(Error::ValidationFailure(
            "epochs and batch size must be positive".into(),
        ));
    }
    let to_inputs = |crops: &[LabeledCrop]| -> (Vec<Tensor>, Vec<usize>) {
        crops
            .iter()
            .map(|c| (image_tensor(&c.image), c.state.class_index()))
            .unzip()
    };
    let (train_x, train_y) = to_inputs(train);
    let (val_x, val_y) = to_inputs(val);

    let mut model = CnnModel::initialize(config.clone(), seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(seed);
    dropout_rng.set_stream(2);
    let mut adam = AdamState::new(&model.params, options.adam);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut losses = Vec::with_capacity(options.epochs);
    let mut best: Option<(f64, Vec<Tensor>)> = None;
    for epoch in 1..=options.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(options.batch_size) {
            let xs: Vec<Tensor> = batch.iter().map(|&i| train_x[i].clone()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| train_y[i]).collect();
            let (loss, grads) =
                model.loss_and_gradients(&xs, &ys, Mode::Train, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch, loss });
            }
            epoch_loss += loss;
            adam_step(&mut model.params, &grads, &mut adam)?;
        }
        losses.push(epoch_loss);

        if val.is_empty() {
            continue;
        }
        let val_acc = accuracy(&model, &val_x, &val_y)?;
        if best.as_ref().is_none_or(|(acc, _)| val_acc > *acc) {
            best = Some((val_acc, model.params.clone()));
        }
        if options.stop_on_perfect_validation && val_acc == 1.0 {
            break;
        }
    }
    model.training_meta.epochs = losses.len();
    model.training_meta.losses = losses;
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok(model)
}
