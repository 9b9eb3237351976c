//! Window-3 median smoothing of per-eye states.

use blinkscreen::{EyeState, EyeStateSequence, Result};

/// Median of each frame and its two neighbours; the first and last frames
/// are kept as they are. For binary states this is a majority vote.
pub fn median3(states: &[EyeState]) -> Vec<EyeState> {
    let mut out = states.to_vec();
    for i in 1..states.len().saturating_sub(1) {
        let closed = states[i - 1..=i + 1]
            .iter()
            .filter(|s| s.is_closed())
            .count();
        out[i] = if closed >= 2 {
            EyeState::Closed
        } else {
            EyeState::Open
        };
    }
    out
}

pub fn median_filter_sequence(seq: &EyeStateSequence) -> Result<EyeStateSequence> {
    let left: Vec<EyeState> = seq.left_column().collect();
    let right: Vec<EyeState> = seq.right_column().collect();
    seq.with_states(&median3(&left), &median3(&right))
}
