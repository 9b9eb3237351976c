//! Eye-closed frame counts, closure time and blink similarity.
//!
//! An eye that is closed for `ECF` of a video's `F` frames was closed for
//! `ECF * L / F` seconds, where `L` is the video length. The factor `L / F`
//! is shared by both eyes, so the ratio of closure times equals the ratio of
//! closed-frame counts and no timing metadata is needed to compare the eyes.
//! Blink similarity is that ratio oriented so it lies in `[0, 1]`.

use crate::error::{Error, Result};
use crate::types::{BlinkFeature, EyeStateSequence};

/// Number of frames in which each eye is closed, as `(left, right)`.
pub fn count_eye_closed_frames(seq: &EyeStateSequence) -> (u64, u64) {
    seq.frames().iter().fold((0, 0), |(l, r), f| {
        (
            l + u64::from(f.left.is_closed()),
            r + u64::from(f.right.is_closed()),
        )
    })
}

/// Total time an eye stayed closed, kept as `ecf` frames of a fixed
/// duration so that comparisons between the two eyes of one video are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureTime {
    ecf: u64,
    frame_seconds: f64,
}

/// Reduced fraction of two unsigned counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRatio {
    pub num: u64,
    pub den: u64,
}

impl CountRatio {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Self {
            num: num / g,
            den: den / g,
        })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl ClosureTime {
    pub fn seconds(&self) -> f64 {
        self.ecf as f64 * self.frame_seconds
    }

    pub fn closed_frames(&self) -> u64 {
        self.ecf
    }

    /// Duration of one frame, `L / F`.
    pub fn frame_seconds(&self) -> f64 {
        self.frame_seconds
    }

    /// Exact ratio `self / other`.
    ///
    /// Both times must come from the same video (identical `L / F`), and
    /// `other` must be non-zero.
    pub fn ratio_to(&self, other: &ClosureTime) -> Result<CountRatio> {
        if self.frame_seconds.to_bits() != other.frame_seconds.to_bits() {
            return Err(Error::ValidationFailure(
                "closure times come from videos with different frame durations".into(),
            ));
        }
        CountRatio::new(self.ecf, other.ecf).ok_or_else(|| {
            Error::ValidationFailure("ratio to a zero closure time is undefined".into())
        })
    }
}

/// Eye-closure time estimated from a closed-frame count as `ECF * L / F`.
pub fn estimate_ect(ecf: u64, frame_count: u64, fps: f64) -> Result<ClosureTime> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidFps(fps));
    }
    if frame_count == 0 {
        return Err(Error::ValidationFailure(
            "frame_count must be positive".into(),
        ));
    }
    if ecf > frame_count {
        return Err(Error::ValidationFailure(format!(
            "{ecf} closed frames exceed frame count {frame_count}"
        )));
    }
    let length = frame_count as f64 / fps;
    Ok(ClosureTime {
        ecf,
        frame_seconds: length / frame_count as f64,
    })
}

/// `min(left, right) / max(left, right)`.
///
/// Fails with [`Error::NoBlinksObserved`] when neither eye ever closes.
pub fn blink_similarity(ecf_left: u64, ecf_right: u64) -> Result<f64> {
    let hi = ecf_left.max(ecf_right);
    if hi == 0 {
        return Err(Error::NoBlinksObserved {
            video_id: String::new(),
        });
    }
    Ok(ecf_left.min(ecf_right) as f64 / hi as f64)
}

/// Distance of blink similarity from perfect symmetry.
pub fn severity_score(bs: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&bs) {
        return Err(Error::OutOfRange {
            what: "blink similarity",
            value: bs,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(1.0 - bs)
}

pub fn extract_feature(seq: &EyeStateSequence) -> Result<BlinkFeature> {
    let (ecf_left, ecf_right) = count_eye_closed_frames(seq);
    let bs = blink_similarity(ecf_left, ecf_right).map_err(|e| match e {
        Error::NoBlinksObserved { .. } => Error::NoBlinksObserved {
            video_id: seq.video_id().to_string(),
        },
        other => other,
    })?;
    Ok(BlinkFeature {
        video_id: seq.video_id().to_string(),
        ecf_left,
        ecf_right,
        frame_count: seq.frame_count() as u64,
        bs,
    })
}
