//! Domain values shared by every stage of the pipeline.
//!
//! All of these are plain immutable data once constructed. Constructors
//! validate their invariants so downstream code never re-checks them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{GrayImage, CROP_SIZE};

/// Whether an eye is open or closed in one frame.
///
/// Files encode `Open` as `0` and `Closed` as `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EyeState {
    Open,
    Closed,
}

impl EyeState {
    pub fn code(self) -> u8 {
        match self {
            EyeState::Open => 0,
            EyeState::Closed => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EyeState::Open),
            1 => Some(EyeState::Closed),
            _ => None,
        }
    }

    /// Class index used by the blink detector's output layer.
    pub fn class_index(self) -> usize {
        self.code() as usize
    }

    pub fn is_closed(self) -> bool {
        self == EyeState::Closed
    }
}

impl fmt::Display for EyeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EyeState::Open => "open",
            EyeState::Closed => "closed",
        })
    }
}

/// Video-level ground truth or verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubjectLabel {
    Normal,
    Palsy,
}

impl SubjectLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SubjectLabel::Normal => "normal",
            SubjectLabel::Palsy => "palsy",
        }
    }

    /// Signed target for margin-based learners: Normal is +1, Palsy is -1.
    pub fn sign(self) -> f64 {
        match self {
            SubjectLabel::Normal => 1.0,
            SubjectLabel::Palsy => -1.0,
        }
    }

    /// Row/column index in a confusion matrix; Palsy is the positive class.
    pub fn class_index(self) -> usize {
        match self {
            SubjectLabel::Normal => 0,
            SubjectLabel::Palsy => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SubjectLabel::Normal => SubjectLabel::Palsy,
            SubjectLabel::Palsy => SubjectLabel::Normal,
        }
    }
}

impl fmt::Display for SubjectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubjectLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(SubjectLabel::Normal),
            "palsy" => Ok(SubjectLabel::Palsy),
            other => Err(Error::ValidationFailure(format!(
                "unknown label `{other}`, expected normal or palsy"
            ))),
        }
    }
}

/// Eye states of a single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameStates {
    pub frame_index: u64,
    pub left: EyeState,
    pub right: EyeState,
}

/// Per-frame eye states for one video.
///
/// Frame indices are strictly increasing and the sequence is never empty.
/// Timestamps are not stored; a frame's time is `frame_index / fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeStateSequence {
    video_id: String,
    fps: f64,
    frames: Vec<FrameStates>,
}

impl EyeStateSequence {
    pub fn new(video_id: impl Into<String>, fps: f64, frames: Vec<FrameStates>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidFps(fps));
        }
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (i, pair) in frames.windows(2).enumerate() {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(Error::NonMonotoneFrames {
                    line: i + 2,
                    previous: pair[0].frame_index,
                    found: pair[1].frame_index,
                });
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            fps,
            frames,
        })
    }

    /// Builds a sequence with consecutive frame indices starting at zero.
    pub fn from_columns(
        video_id: impl Into<String>,
        fps: f64,
        left: &[EyeState],
        right: &[EyeState],
    ) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::ValidationFailure(format!(
                "left column has {} frames but right has {}",
                left.len(),
                right.len()
            )));
        }
        let frames = left
            .iter()
            .zip(right)
            .enumerate()
            .map(|(i, (&l, &r))| FrameStates {
                frame_index: i as u64,
                left: l,
                right: r,
            })
            .collect();
        Self::new(video_id, fps, frames)
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[FrameStates] {
        &self.frames
    }

    /// Total number of frames, `F`.
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Video length in seconds, `F / fps`.
    pub fn duration_seconds(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn left_column(&self) -> impl Iterator<Item = EyeState> + '_ {
        self.frames.iter().map(|f| f.left)
    }

    pub fn right_column(&self) -> impl Iterator<Item = EyeState> + '_ {
        self.frames.iter().map(|f| f.right)
    }

    /// The same video with left and right columns exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            video_id: self.video_id.clone(),
            fps: self.fps,
            frames: self
                .frames
                .iter()
                .map(|f| FrameStates {
                    frame_index: f.frame_index,
                    left: f.right,
                    right: f.left,
                })
                .collect(),
        }
    }

    /// Replaces the eye states while keeping indices and metadata.
    pub fn with_states(&self, left: &[EyeState], right: &[EyeState]) -> Result<Self> {
        if left.len() != self.frames.len() || right.len() != self.frames.len() {
            return Err(Error::ShapeMismatch(
                "replacement columns must match the frame count".into(),
            ));
        }
        let frames = self
            .frames
            .iter()
            .zip(left.iter().zip(right))
            .map(|(f, (&l, &r))| FrameStates {
                frame_index: f.frame_index,
                left: l,
                right: r,
            })
            .collect();
        Ok(Self {
            video_id: self.video_id.clone(),
            fps: self.fps,
            frames,
        })
    }
}

/// The two eye crops of one frame, both in right-eye orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeCropPair {
    pub video_id: String,
    pub frame_index: u64,
    pub left_image: GrayImage,
    pub right_image: GrayImage,
    pub left_is_flipped: bool,
}

impl EyeCropPair {
    /// Wraps crops whose left image has already been mirrored.
    pub fn from_oriented(
        video_id: impl Into<String>,
        frame_index: u64,
        left_flipped: GrayImage,
        right: GrayImage,
    ) -> Result<Self> {
        check_crop(&left_flipped)?;
        check_crop(&right)?;
        Ok(Self {
            video_id: video_id.into(),
            frame_index,
            left_image: left_flipped,
            right_image: right,
            left_is_flipped: true,
        })
    }

    /// Wraps camera-orientation crops, mirroring the left one.
    pub fn from_camera(
        video_id: impl Into<String>,
        frame_index: u64,
        left: &GrayImage,
        right: GrayImage,
    ) -> Result<Self> {
        check_crop(left)?;
        Self::from_oriented(video_id, frame_index, left.flipped_horizontal(), right)
    }
}

fn check_crop(img: &GrayImage) -> Result<()> {
    if img.width() != CROP_SIZE || img.height() != CROP_SIZE {
        return Err(Error::ShapeMismatch(format!(
            "eye crop must be {CROP_SIZE}x{CROP_SIZE}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Classifier input for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct BlinkFeature {
    pub video_id: String,
    pub ecf_left: u64,
    pub ecf_right: u64,
    pub frame_count: u64,
    pub bs: f64,
}

impl BlinkFeature {
    /// Checks the record invariants, including that `bs` is the min/max
    /// ratio of the two counts.
    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(Error::ValidationFailure(format!(
                "{}: frame_count must be positive",
                self.video_id
            )));
        }
        if self.ecf_left > self.frame_count || self.ecf_right > self.frame_count {
            return Err(Error::ValidationFailure(format!(
                "{}: eye-closed counts ({}, {}) exceed frame count {}",
                self.video_id, self.ecf_left, self.ecf_right, self.frame_count
            )));
        }
        if !(0.0..=1.0).contains(&self.bs) {
            return Err(Error::ValidationFailure(format!(
                "{}: blink similarity {} outside [0, 1]",
                self.video_id, self.bs
            )));
        }
        let hi = self.ecf_left.max(self.ecf_right);
        if hi > 0 {
            let expected = self.ecf_left.min(self.ecf_right) as f64 / hi as f64;
            if (expected - self.bs).abs() > 1e-12 {
                return Err(Error::ValidationFailure(format!(
                    "{}: blink similarity {} disagrees with counts ({}, {})",
                    self.video_id, self.bs, self.ecf_left, self.ecf_right
                )));
            }
        }
        Ok(())
    }
}

/// 2x2 confusion matrix, rows are actual class and columns predicted class.
///
/// Index 0 is the negative class (Normal, Open), index 1 the positive class
/// (Palsy, Closed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub cells: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(cells: [[u64; 2]; 2]) -> Self {
        Self { cells }
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.cells[actual][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.cells[0][0] + self.cells[1][1]
    }

    pub fn tn(&self) -> u64 {
        self.cells[0][0]
    }

    pub fn fp(&self) -> u64 {
        self.cells[0][1]
    }

    pub fn fn_(&self) -> u64 {
        self.cells[1][0]
    }

    pub fn tp(&self) -> u64 {
        self.cells[1][1]
    }
}

/// Accuracy and confusion matrix for a split or a cross-validation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub n: u64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let n = confusion.total();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            accuracy: confusion.correct() as f64 / n as f64,
            confusion,
            n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EyeState::*;

    #[test]
    fn eye_state_codes() {
        assert_eq!(Open.code(), 0);
        assert_eq!(Closed.code(), 1);
        assert_eq!(EyeState::from_code(1), Some(Closed));
        assert_eq!(EyeState::from_code(2), None);
    }

    #[test]
    fn sequence_rejects_repeated_frames() {
        let f = |i| FrameStates {
            frame_index: i,
            left: Open,
            right: Open,
        };
        let err = EyeStateSequence::new("v", 30.0, vec![f(0), f(0)]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneFrames { .. }));
        assert!(matches!(
            EyeStateSequence::new("v", 30.0, vec![]),
            Err(Error::EmptySequence)
        ));
        assert!(matches!(
            EyeStateSequence::new("v", 0.0, vec![f(0)]),
            Err(Error::InvalidFps(_))
        ));
    }

    #[test]
    fn duration_is_derived() {
        let seq = EyeStateSequence::from_columns("v", 30.0, &[Open; 300], &[Open; 300]).unwrap();
        assert_eq!(seq.frame_count(), 300);
        assert_eq!(seq.duration_seconds(), 10.0);
    }

    #[test]
    fn feature_validation() {
        let ok = BlinkFeature {
            video_id: "a".into(),
            ecf_left: 5,
            ecf_right: 10,
            frame_count: 100,
            bs: 0.5,
        };
        ok.validate().unwrap();
        let too_many = BlinkFeature {
            ecf_left: 101,
            ..ok.clone()
        };
        assert!(matches!(
            too_many.validate(),
            Err(Error::ValidationFailure(_))
        ));
        let wrong_bs = BlinkFeature { bs: 0.4, ..ok };
        assert!(wrong_bs.validate().is_err());
    }

    #[test]
    fn crop_pair_requires_50x50() {
        let small = GrayImage::new(10, 10);
        let crop = GrayImage::new(CROP_SIZE, CROP_SIZE);
        assert!(EyeCropPair::from_oriented("v", 0, small, crop.clone()).is_err());
        let pair = EyeCropPair::from_camera("v", 0, &crop, crop.clone()).unwrap();
        assert!(pair.left_is_flipped);
    }
}
