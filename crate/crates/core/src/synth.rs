//! Seeded synthetic subjects with periodic blinking.
//!
//! Each eye alternates a closure phase of `ec` seconds and an open phase of
//! `eo` seconds. A palsy subject's affected eye keeps the same period but
//! its closure phase is scaled by `rho`, so its duty cycle `ec / (ec + eo)`
//! drops by that factor. Normal subjects occasionally wink one eye.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::cnn::dataset::{CROP_MANIFEST, CROP_MANIFEST_HEADER};
use crate::cnn::LabeledCrop;
use crate::error::{Error, Result};
use crate::image::{GrayImage, CROP_SIZE};
use crate::types::{EyeState, EyeStateSequence, SubjectLabel};

/// Times closer than this to a phase boundary are treated as on it.
const BOUNDARY_EPS_SECONDS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkProfile {
    pub ec_seconds: f64,
    pub eo_seconds: f64,
    pub phase_offset_seconds: f64,
}

impl BlinkProfile {
    /// A profile with `ec < eo`. A zero closure phase is allowed and models
    /// an eye that never closes.
    pub fn new(ec_seconds: f64, eo_seconds: f64, phase_offset_seconds: f64) -> Result<Self> {
        let p = Self {
            ec_seconds,
            eo_seconds,
            phase_offset_seconds,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.ec_seconds, self.eo_seconds, self.phase_offset_seconds]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || self.ec_seconds < 0.0
            || self.eo_seconds <= 0.0
            || self.phase_offset_seconds < 0.0
            || self.ec_seconds >= self.eo_seconds
        {
            return Err(Error::InvalidRange(format!(
                "blink profile ec={} eo={} phase={} needs 0 <= ec < eo and phase >= 0",
                self.ec_seconds, self.eo_seconds, self.phase_offset_seconds
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.ec_seconds + self.eo_seconds
    }

    pub fn duty_cycle(&self) -> f64 {
        self.ec_seconds / self.period()
    }

    /// Same period and phase with the closure phase scaled by `rho`.
    pub fn with_reduced_closure(&self, rho: f64) -> Self {
        let ec = self.ec_seconds * rho;
        Self {
            ec_seconds: ec,
            eo_seconds: self.period() - ec,
            phase_offset_seconds: self.phase_offset_seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

pub const MAX_RHO: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectSpec {
    pub label: SubjectLabel,
    pub left: BlinkProfile,
    pub right: BlinkProfile,
    /// Half-width of the multiplicative uniform noise on each cycle's closure.
    pub jitter_fraction: f64,
    pub wink_rate_per_minute: f64,
    /// Affected side and duty-cycle ratio, for palsy subjects.
    pub affected: Option<(Side, f64)>,
}

impl SubjectSpec {
    pub fn normal(
        profile: BlinkProfile,
        jitter_fraction: f64,
        wink_rate_per_minute: f64,
    ) -> Result<Self> {
        let spec = Self {
            label: SubjectLabel::Normal,
            left: profile,
            right: profile,
            jitter_fraction,
            wink_rate_per_minute,
            affected: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Subject whose `side` eye closes for `rho` times the healthy closure.
    pub fn palsy(
        profile: BlinkProfile,
        side: Side,
        rho: f64,
        jitter_fraction: f64,
    ) -> Result<Self> {
        if !(0.0..=MAX_RHO).contains(&rho) {
            return Err(Error::InvalidRange(format!(
                "rho {rho} outside [0, {MAX_RHO}]"
            )));
        }
        let affected = profile.with_reduced_closure(rho);
        let (left, right) = match side {
            Side::Left => (affected, profile),
            Side::Right => (profile, affected),
        };
        let spec = Self {
            label: SubjectLabel::Palsy,
            left,
            right,
            jitter_fraction,
            wink_rate_per_minute: 0.0,
            affected: Some((side, rho)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()?;
        if !(0.0..0.5).contains(&self.jitter_fraction) {
            return Err(Error::InvalidRange(format!(
                "jitter fraction {} outside [0, 0.5)",
                self.jitter_fraction
            )));
        }
        if !(self.wink_rate_per_minute >= 0.0 && self.wink_rate_per_minute.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "wink rate {} must be non-negative",
                self.wink_rate_per_minute
            )));
        }
        match self.label {
            SubjectLabel::Normal => {
                let (a, b) = (self.left.duty_cycle(), self.right.duty_cycle());
                if (a - b).abs() > self.jitter_fraction * a.max(b) + 1e-12 {
                    return Err(Error::InvalidRange(format!(
                        "normal subject duty cycles {a} and {b} differ by more than the jitter"
                    )));
                }
            }
            SubjectLabel::Palsy => {
                if self.wink_rate_per_minute > 0.0 {
                    return Err(Error::InvalidRange(
                        "winks are only modelled for normal subjects".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Duty-cycle ratio of the weaker eye; 1 for normal subjects.
    pub fn rho(&self) -> f64 {
        self.affected.map_or(1.0, |(_, rho)| rho)
    }

    fn has_noise(&self) -> bool {
        self.jitter_fraction > 0.0
            || (self.label == SubjectLabel::Normal && self.wink_rate_per_minute > 0.0)
    }
}

fn frame_count(duration_seconds: f64, fps: f64) -> Result<usize> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidFps(fps));
    }
    let frames = duration_seconds * fps;
    if !(frames.is_finite() && frames + 1e-9 >= 1.0) {
        return Err(Error::InvalidDuration(format!(
            "{duration_seconds} s at {fps} fps is less than one frame"
        )));
    }
    Ok((frames + 1e-9).floor() as usize)
}

/// Frame-by-frame closures of one eye; `closures[m]` is cycle `m`'s closure time.
fn eye_column(profile: &BlinkProfile, closures: &[f64], frames: usize, fps: f64) -> Vec<EyeState> {
    let period = profile.period();
    (0..frames)
        .map(|t| {
            let time = t as f64 / fps + profile.phase_offset_seconds;
            let cycle = ((time + BOUNDARY_EPS_SECONDS) / period).floor();
            let position = time - cycle * period;
            let ec = closures[cycle as usize];
            if position < ec - BOUNDARY_EPS_SECONDS {
                EyeState::Closed
            } else {
                EyeState::Open
            }
        })
        .collect()
}

fn cycles_needed(profile: &BlinkProfile, frames: usize, fps: f64) -> usize {
    ((frames as f64 / fps + profile.phase_offset_seconds) / profile.period()).ceil() as usize + 2
}

fn jittered_closures<R: Rng>(
    profile: &BlinkProfile,
    cycles: usize,
    jitter: f64,
    rng: &mut R,
) -> Vec<f64> {
    (0..cycles)
        .map(|_| {
            if jitter > 0.0 {
                profile.ec_seconds * (1.0 + rng.random_range(-jitter..=jitter))
            } else {
                profile.ec_seconds
            }
        })
        .collect()
}

/// Simulates `duration_seconds` of video at `fps`.
pub fn generate_sequence(
    video_id: &str,
    spec: &SubjectSpec,
    duration_seconds: f64,
    fps: f64,
    seed: u64,
) -> Result<EyeStateSequence> {
    spec.validate()?;
    let frames = frame_count(duration_seconds, fps)?;
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };
    let mut columns = Vec::with_capacity(2);
    for (profile, stream_id) in [(&spec.left, 1), (&spec.right, 2)] {
        let closures = jittered_closures(
            profile,
            cycles_needed(profile, frames, fps),
            spec.jitter_fraction,
            &mut stream(stream_id),
        );
        columns.push(eye_column(profile, &closures, frames, fps));
    }
    let mut right = columns.pop().expect("two columns");
    let mut left = columns.pop().expect("two columns");

    if spec.label == SubjectLabel::Normal && spec.wink_rate_per_minute > 0.0 {
        let mut rng = stream(3);
        let gaps = Exp::new(spec.wink_rate_per_minute / 60.0).expect("positive wink rate");
        let length = frames as f64 / fps;
        let mut at = gaps.sample(&mut rng);
        while at < length {
            let (column, profile) = if rng.random_bool(0.5) {
                (&mut left, &spec.left)
            } else {
                (&mut right, &spec.right)
            };
            let first = (at * fps).ceil() as usize;
            let end = ((at + profile.ec_seconds) * fps).ceil() as usize;
            for state in column.iter_mut().take(end.min(frames)).skip(first) {
                *state = EyeState::Closed;
            }
            at += gaps.sample(&mut rng);
        }
    }
    EyeStateSequence::from_columns(video_id, fps, &left, &right)
}

/// Closed-frame count of one noise-free eye, summed cycle by cycle: cycle
/// `m` is closed on `[m P - phase, m P - phase + ec)`.
fn closed_form_count(profile: &BlinkProfile, frames: usize, fps: f64) -> u64 {
    let period = profile.period();
    let slack = BOUNDARY_EPS_SECONDS * fps;
    let last = cycles_needed(profile, frames, fps);
    (0..=last)
        .map(|m| {
            let start = m as f64 * period - profile.phase_offset_seconds;
            let lo = (fps * start - slack).ceil().max(0.0);
            let hi = (fps * (start + profile.ec_seconds) - slack)
                .ceil()
                .min(frames as f64);
            (hi - lo).max(0.0) as u64
        })
        .sum()
}

/// Exact per-eye closed-frame counts for a subject without jitter or winks.
pub fn oracle_ecf(spec: &SubjectSpec, duration_seconds: f64, fps: f64) -> Result<(u64, u64)> {
    spec.validate()?;
    if spec.has_noise() {
        return Err(Error::OracleInapplicable);
    }
    let frames = frame_count(duration_seconds, fps)?;
    Ok((
        closed_form_count(&spec.left, frames, fps),
        closed_form_count(&spec.right, frames, fps),
    ))
}

/// Long-run closed-frame count `duty * F`.
pub fn expected_ecf(profile: &BlinkProfile, frames: usize) -> f64 {
    profile.duty_cycle() * frames as f64
}

/// Sampling ranges for synthetic cohorts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortRanges {
    pub ec_seconds: (f64, f64),
    pub period_seconds: (f64, f64),
    pub normal_jitter: (f64, f64),
    pub palsy_jitter: (f64, f64),
    pub rho: (f64, f64),
    pub wink_rate_per_minute: f64,
    pub duration_seconds: f64,
    pub fps: f64,
}

impl Default for CohortRanges {
    fn default() -> Self {
        Self {
            ec_seconds: (0.15, 0.4),
            period_seconds: (2.0, 6.0),
            normal_jitter: (0.0, 0.05),
            palsy_jitter: (0.0, 0.05),
            rho: (0.0, 0.5),
            wink_rate_per_minute: 1.0,
            duration_seconds: 30.0,
            fps: 30.0,
        }
    }
}

impl CohortRanges {
    pub fn validate(&self) -> Result<()> {
        let ordered = |name: &str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(())
            } else {
                Err(Error::InvalidRange(format!(
                    "{name} range ({lo}, {hi}) is not ordered"
                )))
            }
        };
        ordered("ec", self.ec_seconds)?;
        ordered("period", self.period_seconds)?;
        ordered("normal jitter", self.normal_jitter)?;
        ordered("palsy jitter", self.palsy_jitter)?;
        ordered("rho", self.rho)?;
        if self.ec_seconds.0 <= 0.0 || 2.0 * self.ec_seconds.1 >= self.period_seconds.0 {
            return Err(Error::InvalidRange(
                "closure phase must be positive and shorter than the open phase".into(),
            ));
        }
        if self.normal_jitter.0 < 0.0
            || self.palsy_jitter.0 < 0.0
            || self.normal_jitter.1 >= 0.5
            || self.palsy_jitter.1 >= 0.5
        {
            return Err(Error::InvalidRange("jitter must lie in [0, 0.5)".into()));
        }
        if self.rho.0 < 0.0 || self.rho.1 > MAX_RHO {
            return Err(Error::InvalidRange(format!(
                "rho must lie in [0, {MAX_RHO}]"
            )));
        }
        if self.wink_rate_per_minute < 0.0 {
            return Err(Error::InvalidRange("wink rate must be non-negative".into()));
        }
        frame_count(self.duration_seconds, self.fps).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    pub video_id: String,
    pub spec: SubjectSpec,
    pub seed: u64,
    pub sequence: EyeStateSequence,
}

impl CohortMember {
    pub fn label(&self) -> SubjectLabel {
        self.spec.label
    }
}

fn sample_range<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws a subject specification from the cohort ranges.
pub fn sample_spec<R: Rng>(
    label: SubjectLabel,
    ranges: &CohortRanges,
    rng: &mut R,
) -> Result<SubjectSpec> {
    let ec = sample_range(rng, ranges.ec_seconds);
    let period = sample_range(rng, ranges.period_seconds);
    let phase = rng.random_range(0.0..period);
    let profile = BlinkProfile::new(ec, period - ec, phase)?;
    match label {
        SubjectLabel::Normal => SubjectSpec::normal(
            profile,
            sample_range(rng, ranges.normal_jitter),
            ranges.wink_rate_per_minute,
        ),
        SubjectLabel::Palsy => {
            let side = if rng.random_bool(0.5) {
                Side::Left
            } else {
                Side::Right
            };
            let rho = sample_range(rng, ranges.rho);
            SubjectSpec::palsy(profile, side, rho, sample_range(rng, ranges.palsy_jitter))
        }
    }
}

/// `n_normal` normal subjects followed by `n_palsy` palsy subjects, with ids
/// `normal_000`, ..., `palsy_000`, ....
pub fn generate_cohort(
    n_normal: usize,
    n_palsy: usize,
    ranges: &CohortRanges,
    seed: u64,
) -> Result<Vec<CohortMember>> {
    if n_normal == 0 || n_palsy == 0 {
        return Err(Error::InvalidRange(format!(
            "cohort needs at least one subject per class, got {n_normal} normal and {n_palsy} palsy"
        )));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = std::iter::repeat_n(SubjectLabel::Normal, n_normal)
        .enumerate()
        .chain(std::iter::repeat_n(SubjectLabel::Palsy, n_palsy).enumerate());
    let mut cohort = Vec::with_capacity(n_normal + n_palsy);
    for (i, label) in labels {
        let spec = sample_spec(label, ranges, &mut rng)?;
        let subject_seed: u64 = rng.random();
        let video_id = format!("{label}_{i:03}");
        let sequence = generate_sequence(
            &video_id,
            &spec,
            ranges.duration_seconds,
            ranges.fps,
            subject_seed,
        )?;
        cohort.push(CohortMember {
            video_id,
            spec,
            seed: subject_seed,
            sequence,
        });
    }
    Ok(cohort)
}

pub const MANIFEST_HEADER: &str = "video_id,label,rho,seed";

/// Cohort manifest CSV: `video_id,label,rho,seed`; normal subjects have rho 1.
pub fn manifest_csv(cohort: &[CohortMember]) -> String {
    let mut out = format!("{MANIFEST_HEADER}\n");
    for m in cohort {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            m.video_id,
            m.label(),
            m.spec.rho(),
            m.seed
        );
    }
    out
}

/// Reads `video_id -> label` pairs from a cohort manifest or any CSV with
/// `video_id` and `label` columns.
pub fn read_labels(path: &Path) -> Result<Vec<(String, SubjectLabel)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::malformed(1, format!("{} has no `{name}` column", path.display()))
        })
    };
    let (id_col, label_col) = (col("video_id")?, col("label")?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        out.push((record[id_col].to_string(), record[label_col].parse()?));
    }
    Ok(out)
}

/// A procedural 50x50 eye crop: textured upper half, lower half dark when
/// closed and bright when open.
pub fn render_eye_crop<R: Rng>(state: EyeState, rng: &mut R) -> GrayImage {
    let upper = rng.random_range(0.3..0.7);
    let lower = match state {
        EyeState::Closed => rng.random_range(0.05..0.25),
        EyeState::Open => rng.random_range(0.75..0.95),
    };
    GrayImage::from_fn(CROP_SIZE, CROP_SIZE, |r, _| {
        let base = if r < CROP_SIZE / 2 { upper } else { lower };
        base + rng.random_range(-0.05..0.05)
    })
}

/// Balanced procedural crop set: `n / 2` open then `n - n / 2` closed crops.
pub fn toy_crop_dataset(n: usize, seed: u64) -> Vec<LabeledCrop> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let state = if i < n / 2 {
                EyeState::Open
            } else {
                EyeState::Closed
            };
            LabeledCrop {
                id: format!("{state}_{i:03}"),
                image: render_eye_crop(state, &mut rng),
                state,
            }
        })
        .collect()
}

/// Renders a sequence as a per-frame crop directory: `frame_<n>_L.pgm`
/// (already in right-eye orientation), `frame_<n>_R.pgm`, and
/// `manifest.csv` with `# video_id=` and `# fps=` comment lines.
pub fn render_crop_directory(seq: &EyeStateSequence, dir: &Path, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = format!(
        "# video_id={}\n# fps={}\n{}\n",
        seq.video_id(),
        seq.fps(),
        CROP_MANIFEST_HEADER.join(",")
    );
    for f in seq.frames() {
        let left = format!("frame_{}_L.pgm", f.frame_index);
        let right = format!("frame_{}_R.pgm", f.frame_index);
        render_eye_crop(f.left, &mut rng).write_pgm(&dir.join(&left))?;
        render_eye_crop(f.right, &mut rng).write_pgm(&dir.join(&right))?;
        let _ = writeln!(manifest, "{},{left},{right},0", f.frame_index);
    }
    fs::write(dir.join(CROP_MANIFEST), manifest)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blink_feature::{count_eye_closed_frames, extract_feature};
    use proptest::prelude::*;

    /// Total overlap of the closure intervals with `[0, duration)`.
    fn continuous_closed_seconds(profile: &BlinkProfile, duration: f64) -> f64 {
        let period = profile.period();
        let mut total = 0.0;
        let mut start = -profile.phase_offset_seconds;
        while start < duration {
            let lo = start.max(0.0);
            let hi = (start + profile.ec_seconds).min(duration);
            total += (hi - lo).max(0.0);
            start += period;
        }
        total
    }

    fn profile(ec: f64, eo: f64, phase: f64) -> BlinkProfile {
        BlinkProfile::new(ec, eo, phase).unwrap()
    }

    #[test]
    fn duty_cycle_count_without_noise() {
        let spec = SubjectSpec::normal(profile(0.3, 2.7, 0.0), 0.0, 0.0).unwrap();
        let seq = generate_sequence("s", &spec, 30.0, 10.0, 1).unwrap();
        assert_eq!(seq.frame_count(), 300);
        assert_eq!(count_eye_closed_frames(&seq), (30, 30));
        assert_eq!(oracle_ecf(&spec, 30.0, 10.0).unwrap(), (30, 30));
    }

    #[test]
    fn paralyzed_eye_never_closes() {
        let spec = SubjectSpec::palsy(profile(0.3, 2.7, 0.4), Side::Right, 0.0, 0.02).unwrap();
        let seq = generate_sequence("p", &spec, 30.0, 30.0, 5).unwrap();
        assert!(seq.right_column().all(|s| s == EyeState::Open));
        assert_eq!(extract_feature(&seq).unwrap().bs, 0.0);
        let still = SubjectSpec::palsy(profile(0.3, 2.7, 0.4), Side::Left, 0.0, 0.0).unwrap();
        assert_eq!(oracle_ecf(&still, 30.0, 30.0).unwrap().0, 0);
    }

    #[test]
    fn identical_profiles_give_identical_columns() {
        let spec = SubjectSpec::normal(profile(0.2, 3.1, 1.3), 0.0, 0.0).unwrap();
        let seq = generate_sequence("n", &spec, 20.0, 25.0, 3).unwrap();
        assert!(seq.left_column().eq(seq.right_column()));
        assert_eq!(extract_feature(&seq).unwrap().bs, 1.0);
    }

    #[test]
    fn full_period_phase_shift_keeps_count() {
        let a = SubjectSpec::normal(profile(0.25, 2.0, 0.3), 0.0, 0.0).unwrap();
        let b = SubjectSpec::normal(profile(0.25, 2.0, 0.3 + 2.25), 0.0, 0.0).unwrap();
        assert_eq!(
            oracle_ecf(&a, 12.0, 30.0).unwrap(),
            oracle_ecf(&b, 12.0, 30.0).unwrap()
        );
    }

    #[test]
    fn oracle_refuses_noisy_specs() {
        let jittery = SubjectSpec::normal(profile(0.3, 2.7, 0.0), 0.05, 0.0).unwrap();
        assert!(matches!(
            oracle_ecf(&jittery, 10.0, 30.0),
            Err(Error::OracleInapplicable)
        ));
        let winky = SubjectSpec::normal(profile(0.3, 2.7, 0.0), 0.0, 1.0).unwrap();
        assert!(matches!(
            oracle_ecf(&winky, 10.0, 30.0),
            Err(Error::OracleInapplicable)
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(BlinkProfile::new(3.0, 2.0, 0.0).is_err());
        assert!(SubjectSpec::palsy(profile(0.3, 2.7, 0.0), Side::Left, 0.7, 0.0).is_err());
        let spec = SubjectSpec::normal(profile(0.3, 2.7, 0.0), 0.0, 0.0).unwrap();
        assert!(matches!(
            generate_sequence("x", &spec, 0.01, 30.0, 0),
            Err(Error::InvalidDuration(_))
        ));
        assert!(generate_sequence("x", &spec, 10.0, 0.0, 0).is_err());
    }

    #[test]
    fn cohort_shape_and_determinism() {
        let ranges = CohortRanges::default();
        let cohort = generate_cohort(34, 41, &ranges, 17).unwrap();
        assert_eq!(cohort.len(), 75);
        assert_eq!(
            cohort
                .iter()
                .filter(|m| m.label() == SubjectLabel::Palsy)
                .count(),
            41
        );
        assert_eq!(cohort, generate_cohort(34, 41, &ranges, 17).unwrap());
        assert!(matches!(
            generate_cohort(0, 41, &ranges, 17),
            Err(Error::InvalidRange(_))
        ));
        let manifest = manifest_csv(&cohort);
        assert!(manifest.starts_with("video_id,label,rho,seed\nnormal_000,normal,1,"));
        assert_eq!(manifest.lines().count(), 76);
    }

    #[test]
    fn winks_close_single_eyes() {
        let spec = SubjectSpec::normal(profile(0.3, 5.0, 0.0), 0.0, 30.0).unwrap();
        let seq = generate_sequence("w", &spec, 60.0, 30.0, 8).unwrap();
        let asymmetric = seq.frames().iter().filter(|f| f.left != f.right).count();
        assert!(asymmetric > 0);
        assert_eq!(seq, generate_sequence("w", &spec, 60.0, 30.0, 8).unwrap());
    }

    #[test]
    fn toy_crops_are_balanced() {
        let crops = toy_crop_dataset(64, 2);
        assert_eq!(
            crops.iter().filter(|c| c.state == EyeState::Closed).count(),
            32
        );
        let closed = &crops[40].image;
        let lower_mean: f64 = closed.pixels()[CROP_SIZE * CROP_SIZE / 2..]
            .iter()
            .sum::<f64>()
            / (CROP_SIZE * CROP_SIZE / 2) as f64;
        assert!(lower_mean < 0.35);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn counts_converge_to_duty_cycle(
            ec in 0.1f64..0.4, period in 2.0f64..6.0, phase in 0.0f64..6.0, jitter in 0.0f64..0.1, seed: u64,
        ) {
            let spec = SubjectSpec::normal(profile(ec, period - ec, phase), jitter, 0.0).unwrap();
            let (duration, fps) = (400.0, 30.0);
            let seq = generate_sequence("c", &spec, duration, fps, seed).unwrap();
            let f = seq.frame_count();
            let (l, _) = count_eye_closed_frames(&seq);
            let duty = spec.left.duty_cycle();
            // Each cycle's count is within one frame of ec * fps, which need
            // not average out when the period is a whole number of frames.
            // On top of that come one partial cycle at each end and the
            // sampled mean of the jitter.
            let cycles = duration / period;
            let bound = 1.0 / (period * fps)
                + 2.0 * (ec * fps + 1.0) / f as f64
                + jitter * duty * 3.0 / cycles.sqrt();
            prop_assert!(((l as f64 / f as f64) - duty).abs() <= bound);
        }

        #[test]
        fn sampled_closure_time_approaches_continuous(
            ec in 0.1f64..0.4, period in 2.0f64..6.0, phase in 0.0f64..6.0, seed: u64,
        ) {
            let spec = SubjectSpec::normal(profile(ec, period - ec, phase), 0.0, 0.0).unwrap();
            let duration = 60.0;
            let exact = continuous_closed_seconds(&spec.left, duration);
            let cycles = (duration / period).ceil() + 1.0;
            for fps in [30.0, 300.0, 3000.0] {
                let seq = generate_sequence("c", &spec, duration, fps, seed).unwrap();
                let (l, _) = count_eye_closed_frames(&seq);
                prop_assert!((l as f64 / fps - exact).abs() <= cycles / fps);
            }
        }
    }
}
