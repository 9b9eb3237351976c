//! Fixed inputs shared by the benchmarks.

use blinkscreen::cnn::{image_tensor, CnnConfig, CnnModel, Tensor};
use blinkscreen::detector::Sample;
use blinkscreen::extract_feature;
use blinkscreen::synth::{generate_cohort, toy_crop_dataset, CohortMember, CohortRanges};

/// The default 34 normal / 41 palsy cohort, 30 s at 30 fps.
pub fn cohort(seed: u64) -> Vec<CohortMember> {
    generate_cohort(34, 41, &CohortRanges::default(), seed).expect("default ranges are valid")
}

pub fn samples(cohort: &[CohortMember]) -> Vec<Sample> {
    cohort
        .iter()
        .map(|m| {
            (
                extract_feature(&m.sequence)
                    .expect("synthetic subjects blink")
                    .bs,
                m.label(),
            )
        })
        .collect()
}

/// An untrained blink detector and one 50x50 crop tensor.
pub fn model_and_crop(seed: u64) -> (CnnModel, Tensor) {
    let model =
        CnnModel::initialize(CnnConfig::blink_detector(), seed).expect("default geometry is valid");
    let crop = toy_crop_dataset(1, seed).remove(0);
    (model, image_tensor(&crop.image))
}
