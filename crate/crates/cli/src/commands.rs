use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use blinkscreen::cnn::dataset::CROP_MANIFEST;
use blinkscreen::cnn::{
    classify_pair, evaluate_crops, load_crop_dataset, load_crop_video, train_blink_detector,
    CnnConfig, CnnModel, CropVideo, TrainOptions,
};
use blinkscreen::detector::{DefaultLearner, Sample};
use blinkscreen::eval::{holdout_split, kfold_cv, render_report, report_csv};
use blinkscreen::formats::{
    read_eye_state_stream, read_feature_table, write_eye_state_stream_to, write_feature_table_to,
};
use blinkscreen::synth::{
    generate_cohort, manifest_csv, read_labels, render_crop_directory, CohortRanges,
};
use blinkscreen::{
    extract_feature, severity_score, Classifier, Detector, Error, EvalReport, EyeStateSequence,
    LabeledFeature, Learner, LearnerKind, SplitRatios, SubjectLabel,
};

use crate::filter::median_filter_sequence;
use crate::output::write_atomic;
use crate::{
    ClassifyFramesArgs, Command, EvaluateArgs, ExtractArgs, ScreenArgs, SimulateArgs,
    TrainBlinkArgs, TrainDetectorArgs,
};

pub const THREADS_ENV: &str = "BLINKSCREEN_THREADS";

/// Runs a command inside a worker pool capped by `BLINKSCREEN_THREADS`.
pub fn run(command: Command) -> Result<String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::ValidationFailure(format!(
                    "{THREADS_ENV}=`{value}` is not a positive integer"
                ))
            })?;
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().context("starting the worker pool")?;
    pool.install(|| match command {
        Command::TrainBlink(a) => train_blink(&a),
        Command::ClassifyFrames(a) => classify_frames(&a),
        Command::Extract(a) => extract(&a),
        Command::TrainDetector(a) => train_detector(&a),
        Command::Evaluate(a) => evaluate(&a).map(|(text, _)| text),
        Command::Simulate(a) => simulate(&a),
        Command::Screen(a) => screen(&a),
    })
}

fn parse_split(text: &str) -> Result<SplitRatios, Error> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::ValidationFailure(format!("bad split `{text}`")))?;
    match parts[..] {
        [train, val, test] => SplitRatios::new(train, val, test),
        _ => Err(Error::ValidationFailure(format!(
            "split `{text}` needs three fractions"
        ))),
    }
}

fn load_model(path: &Path) -> Result<CnnModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    CnnModel::from_bytes(&bytes).with_context(|| format!("loading model {}", path.display()))
}

fn load_detector(path: &Path) -> Result<Detector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Detector::from_text(&text).with_context(|| format!("loading detector {}", path.display()))
}

fn format_accuracy(report: Option<&EvalReport>) -> String {
    report.map_or_else(
        || "n/a".to_string(),
        |r| format!("{:.2}%", 100.0 * r.accuracy),
    )
}

pub fn train_blink(args: &TrainBlinkArgs) -> Result<String> {
    let ratios = parse_split(&args.split)?;
    let crops = load_crop_dataset(&args.data)
        .with_context(|| format!("loading crops from {}", args.data.display()))?;
    let labels: Vec<_> = crops.iter().map(|c| c.state).collect();
    let (train, val, test) = holdout_split(&labels, ratios, args.seed)?.select(&crops);
    let options = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch_size,
        stop_on_perfect_validation: !args.no_early_stop,
        ..TrainOptions::default()
    };
    let model = train_blink_detector(
        &train,
        &val,
        &CnnConfig::blink_detector(),
        &options,
        args.seed,
    )?;
    write_atomic(&args.out, &model.to_bytes())?;

    let mut out = String::new();
    let _ = writeln!(out, "{:<12}{:>8}{:>12}", "Split", "Images", "Accuracy");
    let mut test_report = None;
    for (name, set) in [("Training", &train), ("Validation", &val), ("Test", &test)] {
        let report = if set.is_empty() {
            None
        } else {
            Some(evaluate_crops(&model, set)?)
        };
        let _ = writeln!(
            out,
            "{:<12}{:>8}{:>12}",
            name,
            set.len(),
            format_accuracy(report.as_ref())
        );
        if name == "Test" {
            test_report = report;
        }
    }
    let _ = writeln!(out, "epochs run: {}", model.training_meta.epochs);
    if let Some(report) = test_report {
        out.push_str(&render_report(
            &report,
            "Test confusion matrix",
            "Open",
            "Closed",
        ));
    }
    let _ = writeln!(out, "model written to {}", args.out.display());
    Ok(out)
}

fn is_crop_video(dir: &Path) -> bool {
    dir.join(CROP_MANIFEST).is_file()
}

fn stream_bytes(seq: &EyeStateSequence) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_eye_state_stream_to(seq, &mut buf)?;
    Ok(buf)
}

/// Classifies every frame of `video`, frames in parallel.
pub fn classify_crop_video(model: &CnnModel, video: &CropVideo) -> Result<EyeStateSequence> {
    let frames = video
        .pairs
        .par_iter()
        .map(|p| classify_pair(model, p))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(EyeStateSequence::new(
        video.video_id.clone(),
        video.fps,
        frames,
    )?)
}

fn load_video(dir: &Path, fps_override: Option<f64>) -> Result<CropVideo> {
    load_crop_video(dir, fps_override)
        .with_context(|| format!("loading crops from {}", dir.display()))
}

pub fn classify_frames(args: &ClassifyFramesArgs) -> Result<String> {
    let model = load_model(&args.model)?;
    if is_crop_video(&args.crops) {
        let video = load_video(&args.crops, args.fps_override)?;
        let seq = classify_crop_video(&model, &video)?;
        write_atomic(&args.out, &stream_bytes(&seq)?)?;
        return Ok(format!(
            "{}: {} frames classified, {} skipped, written to {}\n",
            seq.video_id(),
            seq.frame_count(),
            video.skipped,
            args.out.display()
        ));
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(&args.crops)
        .with_context(|| format!("reading {}", args.crops.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    dirs.retain(|d| is_crop_video(d));
    if dirs.is_empty() {
        return Err(Error::ValidationFailure(format!(
            "{} has no {CROP_MANIFEST} and no crop subdirectories",
            args.crops.display()
        ))
        .into());
    }
    let mut streams = dirs
        .par_iter()
        .map(|dir| {
            let video = load_video(dir, args.fps_override)?;
            classify_crop_video(&model, &video)
        })
        .collect::<Result<Vec<_>>>()?;
    streams.sort_by(|a, b| a.video_id().cmp(b.video_id()));
    let mut out = String::new();
    for seq in &streams {
        let path = args.out.join(format!("{}.csv", seq.video_id()));
        write_atomic(&path, &stream_bytes(seq)?)?;
        let _ = writeln!(
            out,
            "{}: {} frames classified",
            seq.video_id(),
            seq.frame_count()
        );
    }
    let _ = writeln!(
        out,
        "{} streams written to {}",
        streams.len(),
        args.out.display()
    );
    Ok(out)
}

fn stream_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        p.is_file()
            && p.extension().is_some_and(|e| e == "csv")
            && p.file_name().is_some_and(|n| n != "manifest.csv")
    });
    paths.sort();
    Ok(paths)
}

/// Blink features of every stream under `args.streams`, sorted by video id.
pub fn extract_features(args: &ExtractArgs) -> Result<Vec<LabeledFeature>> {
    let labels_path = args
        .labels
        .clone()
        .unwrap_or_else(|| args.streams.join("manifest.csv"));
    let labels: BTreeMap<String, SubjectLabel> = read_labels(&labels_path)
        .with_context(|| format!("reading labels from {}", labels_path.display()))?
        .into_iter()
        .collect();
    let paths = stream_files(&args.streams)?;
    if paths.is_empty() {
        return Err(Error::ValidationFailure(format!(
            "no stream files in {}",
            args.streams.display()
        ))
        .into());
    }
    let mut features = paths
        .par_iter()
        .map(|path| -> Result<LabeledFeature> {
            let mut seq = read_eye_state_stream(path)
                .with_context(|| format!("reading {}", path.display()))?;
            if args.median_filter {
                seq = median_filter_sequence(&seq)?;
            }
            let feature = extract_feature(&seq)?;
            let label = *labels.get(&feature.video_id).ok_or_else(|| {
                Error::ValidationFailure(format!(
                    "no label for video `{}` in {}",
                    feature.video_id,
                    labels_path.display()
                ))
            })?;
            Ok(LabeledFeature { feature, label })
        })
        .collect::<Result<Vec<_>>>()?;
    features.sort_by(|a, b| a.feature.video_id.cmp(&b.feature.video_id));
    Ok(features)
}

pub fn extract(args: &ExtractArgs) -> Result<String> {
    let features = extract_features(args)?;
    let mut buf = Vec::new();
    write_feature_table_to(&features, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    Ok(format!(
        "{} features written to {}\n",
        features.len(),
        args.out.display()
    ))
}

fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    let table = read_feature_table(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(table.iter().map(|r| (r.feature.bs, r.label)).collect())
}

pub fn train_detector(args: &TrainDetectorArgs) -> Result<String> {
    let kind: LearnerKind = args.learner.parse()?;
    let samples = load_samples(&args.features)?;
    let detector = DefaultLearner(kind).fit(&samples, args.seed)?;
    let text = detector.to_text();
    write_atomic(&args.out, text.as_bytes())?;
    let mut confusion = blinkscreen::ConfusionMatrix::default();
    for &(bs, label) in &samples {
        confusion.record(label.class_index(), detector.predict(bs)?.class_index());
    }
    let report = EvalReport::from_confusion(confusion)?;
    Ok(format!(
        "{kind} detector trained on {} subjects, training accuracy {:.2}%, written to {}\n",
        samples.len(),
        100.0 * report.accuracy,
        args.out.display()
    ))
}

/// Stratified k-fold report of the chosen learner; returns the printed text too.
pub fn evaluate(args: &EvaluateArgs) -> Result<(String, EvalReport)> {
    let kind: LearnerKind = args.learner.parse()?;
    let samples = load_samples(&args.features)?;
    let report = kfold_cv(&samples, args.kfold, &DefaultLearner(kind), args.seed)?;
    let csv = report_csv(&report);
    if let Some(path) = &args.out {
        write_atomic(path, csv.as_bytes())?;
    }
    let title = format!("{kind}, stratified {}-fold cross-validation", args.kfold);
    let mut text = render_report(&report, &title, "Normal", "Palsy");
    text.push_str(&csv);
    Ok((text, report))
}

pub fn simulate(args: &SimulateArgs) -> Result<String> {
    let ranges = CohortRanges {
        duration_seconds: args.duration,
        fps: args.fps,
        ..CohortRanges::default()
    };
    let cohort = generate_cohort(args.normal, args.palsy, &ranges, args.seed)?;
    cohort.par_iter().try_for_each(|member| -> Result<()> {
        let path = args.out.join(format!("{}.csv", member.video_id));
        write_atomic(&path, &stream_bytes(&member.sequence)?)?;
        if args.crops {
            let dir = args.out.join("crops").join(&member.video_id);
            render_crop_directory(&member.sequence, &dir, member.seed)?;
        }
        Ok(())
    })?;
    write_atomic(
        &args.out.join("manifest.csv"),
        manifest_csv(&cohort).as_bytes(),
    )?;
    Ok(format!(
        "{} normal and {} palsy subjects written to {}\n",
        args.normal,
        args.palsy,
        args.out.display()
    ))
}

pub fn screen(args: &ScreenArgs) -> Result<String> {
    let model = load_model(&args.model)?;
    let detector = load_detector(&args.detector)?;
    let video = load_video(&args.crops, args.fps_override)?;
    let mut seq = classify_crop_video(&model, &video)?;
    if args.median_filter {
        seq = median_filter_sequence(&seq)?;
    }
    let feature = extract_feature(&seq)?;
    let verdict = detector.predict(feature.bs)?;
    let severity = severity_score(feature.bs)?;
    Ok(format!(
        "video {}\nclosed frames left {} right {} of {}\nblink similarity {:.4}\nseverity {:.4}\nverdict {}\n",
        feature.video_id, feature.ecf_left, feature.ecf_right, feature.frame_count, feature.bs, severity, verdict
    ))
}
