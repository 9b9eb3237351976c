use blinkscreen::cnn::{train_blink_detector, CnnConfig, TrainOptions};
use blinkscreen::eval::holdout_split;
use blinkscreen::synth::toy_crop_dataset;
use blinkscreen::{EyeState, SplitRatios};

fn toy_split(
    seed: u64,
) -> (
    Vec<blinkscreen::cnn::LabeledCrop>,
    Vec<blinkscreen::cnn::LabeledCrop>,
) {
    let crops = toy_crop_dataset(64, seed);
    let labels: Vec<EyeState> = crops.iter().map(|c| c.state).collect();
    let split = holdout_split(&labels, SplitRatios::default(), seed).unwrap();
    let pick = |idx: &[usize]| idx.iter().map(|&i| crops[i].clone()).collect::<Vec<_>>();
    (pick(&split.train), pick(&split.val))
}

#[test]
fn toy_set_reaches_perfect_validation() {
    let (train, val) = toy_split(7);
    let start = std::time::Instant::now();
    let options = TrainOptions {
        epochs: 20,
        ..TrainOptions::default()
    };
    let model =
        train_blink_detector(&train, &val, &CnnConfig::blink_detector(), &options, 7).unwrap();
    let report = blinkscreen::cnn::evaluate_crops(&model, &val).unwrap();
    eprintln!(
        "epochs={} losses={:?} val={} in {:?}",
        model.training_meta.epochs,
        model.training_meta.losses,
        report.accuracy,
        start.elapsed()
    );
    assert_eq!(report.accuracy, 1.0);
    assert!(model.training_meta.epochs <= 20);
}

#[test]
fn training_is_bit_reproducible() {
    let (train, val) = toy_split(11);
    let options = TrainOptions {
        epochs: 2,
        stop_on_perfect_validation: false,
        ..TrainOptions::default()
    };
    let config = CnnConfig::blink_detector();
    let a = train_blink_detector(&train, &val, &config, &options, 11).unwrap();
    let b = train_blink_detector(&train, &val, &config, &options, 11).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    let c = train_blink_detector(&train, &val, &config, &options, 12).unwrap();
    assert_ne!(a.to_bytes(), c.to_bytes());
}
