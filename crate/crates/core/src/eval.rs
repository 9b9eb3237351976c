//! Hold-out splitting, stratified k-fold cross-validation and accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detector::{Classifier, Learner, Sample};
use crate::error::{Error, Result};
use crate::types::{ConfusionMatrix, EvalReport, SubjectLabel};

/// Accuracy `trace / total` of a confusion matrix.
pub fn metrics_from_confusion(confusion: &ConfusionMatrix) -> Result<f64> {
    EvalReport::from_confusion(*confusion).map(|r| r.accuracy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        if [train, val, test].iter().any(|x| !(0.0..=1.0).contains(x))
            || (train + val + test - 1.0).abs() > 1e-9
        {
            return Err(Error::ValidationFailure(format!(
                "split ratios {train},{val},{test} must be in [0, 1] and sum to 1"
            )));
        }
        Ok(r)
    }

    /// `(train, val, test)` sizes: validation and test are floored, the
    /// remainder goes to training.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps products like 100 * 0.15 from flooring to 14.
        let floor = |r: f64| ((n as f64 * r) + 1e-9).floor() as usize;
        let val = floor(self.val);
        let test = floor(self.test).min(n - val);
        (n - val - test, val, test)
    }
}

/// Index sets of a three-way partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn select<T: Clone>(&self, items: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
        (pick(&self.train), pick(&self.val), pick(&self.test))
    }
}

/// Shuffled member indices of each label, in label order.
fn strata<K: Ord + Copy>(labels: &[K], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut by_label: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, &k) in labels.iter().enumerate() {
        by_label.entry(k).or_default().push(i);
    }
    by_label
        .into_values()
        .map(|mut members| {
            members.shuffle(rng);
            members
        })
        .collect()
}

/// Largest-remainder allocation of `total` slots across strata proportional
/// to their sizes, never exceeding `capacity`.
fn allocate(total: usize, sizes: &[usize], capacity: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut alloc: Vec<usize> = sizes
        .iter()
        .zip(capacity)
        .map(|(&s, &cap)| (total * s / n).min(cap))
        .collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // Larger fractional remainder first, then lower label.
    order.sort_by_key(|&i| (std::cmp::Reverse((total * sizes[i]) % n), i));
    let mut missing = total - alloc.iter().sum::<usize>();
    while missing > 0 {
        let before = missing;
        for &i in &order {
            if missing > 0 && alloc[i] < capacity[i] {
                alloc[i] += 1;
                missing -= 1;
            }
        }
        if before == missing {
            break;
        }
    }
    alloc
}

/// Stratified, seed-deterministic train/validation/test partition.
pub fn holdout_split<K: Ord + Copy>(labels: &[K], ratios: SplitRatios, seed: u64) -> Result<Split> {
    if labels.len() < 3 {
        return Err(Error::TooFewItems(format!(
            "hold-out split needs at least 3 items, got {}",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = strata(labels, &mut rng);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let (_, n_val, n_test) = ratios.sizes(labels.len());

    let val_alloc = allocate(n_val, &sizes, &sizes);
    let remaining: Vec<usize> = sizes.iter().zip(&val_alloc).map(|(s, v)| s - v).collect();
    let test_alloc = allocate(n_test, &sizes, &remaining);

    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for ((members, &v), &t) in groups.iter().zip(&val_alloc).zip(&test_alloc) {
        split.val.extend_from_slice(&members[..v]);
        split.test.extend_from_slice(&members[v..v + t]);
        split.train.extend_from_slice(&members[v + t..]);
    }
    Ok(split)
}

/// Stratified fold assignment: fold index of every item.
///
/// Members of each label are dealt round-robin, continuing the rotation
/// across labels so fold sizes differ by at most one.
pub fn stratified_folds<K: Ord + Copy>(labels: &[K], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > labels.len() {
        return Err(Error::TooFewItems(format!(
            "{k}-fold cross-validation over {} items",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for members in strata(labels, &mut rng) {
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

/// Predicts every sample exactly once with a model fit on the other folds
/// and aggregates the confusion matrix. Fold `f` is trained with seed
/// `seed + f`.
pub fn kfold_cv<L: Learner>(
    samples: &[Sample],
    k: usize,
    learner: &L,
    seed: u64,
) -> Result<EvalReport> {
    let labels: Vec<SubjectLabel> = samples.iter().map(|s| s.1).collect();
    for label in [SubjectLabel::Normal, SubjectLabel::Palsy] {
        if !labels.contains(&label) {
            return Err(Error::EmptyClass(format!(
                "no {label} subjects to cross-validate"
            )));
        }
    }
    let folds = stratified_folds(&labels, k, seed)?;
    let mut confusion = ConfusionMatrix::default();
    for fold in 0..k {
        let train: Vec<Sample> = samples
            .iter()
            .zip(&folds)
            .filter(|(_, &f)| f != fold)
            .map(|(s, _)| *s)
            .collect();
        let model = learner.fit(&train, seed.wrapping_add(fold as u64))?;
        for (&(bs, actual), _) in samples.iter().zip(&folds).filter(|(_, &f)| f == fold) {
            let predicted = model.predict(bs)?;
            confusion.record(actual.class_index(), predicted.class_index());
        }
    }
    EvalReport::from_confusion(confusion)
}

pub const REPORT_CSV_HEADER: &str = "tn,fp,fn,tp,accuracy";

/// One-row CSV: `tn,fp,fn,tp,accuracy`.
pub fn report_csv(report: &EvalReport) -> String {
    let c = &report.confusion;
    format!(
        "{REPORT_CSV_HEADER}\n{},{},{},{},{}\n",
        c.tn(),
        c.fp(),
        c.fn_(),
        c.tp(),
        report.accuracy
    )
}

/// Human-readable confusion table with the given class names and accuracy
/// as a percentage.
pub fn render_report(report: &EvalReport, title: &str, negative: &str, positive: &str) -> String {
    let c = &report.confusion.cells;
    let width = negative.len().max(positive.len()) + 9;
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:width$}  {:>12}  {:>12}",
        "",
        format!("Pred {negative}"),
        format!("Pred {positive}")
    );
    for (name, row) in [(negative, c[0]), (positive, c[1])] {
        let _ = writeln!(
            out,
            "{:width$}  {:>12}  {:>12}",
            format!("Actual {name}"),
            row[0],
            row[1]
        );
    }
    let _ = writeln!(
        out,
        "accuracy {:.2}% ({}/{})",
        100.0 * report.accuracy,
        report.confusion.correct(),
        report.n
    );
    out
}
