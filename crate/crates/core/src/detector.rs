//! Video-level classifiers over the one-dimensional blink-similarity feature.
//!
//! Three learners are provided: a linear model fit by per-sample SGD on the
//! hinge loss, logistic regression fit by full-batch gradient descent, and
//! k-nearest neighbours. Linear models use `+1` for Normal and `-1` for
//! Palsy and predict Normal only when the decision value is strictly
//! positive.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::SubjectLabel;

/// One training example: blink similarity and ground truth.
pub type Sample = (f64, SubjectLabel);

pub trait Classifier {
    fn predict(&self, bs: f64) -> Result<SubjectLabel>;
}

pub trait Learner {
    type Model: Classifier;

    fn fit(&self, samples: &[Sample], seed: u64) -> Result<Self::Model>;
}

fn check_bs(bs: f64) -> Result<()> {
    if (0.0..=1.0).contains(&bs) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "blink similarity",
            value: bs,
            min: 0.0,
            max: 1.0,
        })
    }
}

fn check_training_set(samples: &[Sample]) -> Result<()> {
    for &(bs, _) in samples {
        check_bs(bs)?;
    }
    for label in [SubjectLabel::Normal, SubjectLabel::Palsy] {
        if !samples.iter().any(|&(_, l)| l == label) {
            return Err(Error::EmptyClass(format!(
                "no {label} subjects in the training set"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    HingeSgd,
    Logistic,
}

impl LinearKind {
    fn tag(self) -> &'static str {
        match self {
            LinearKind::HingeSgd => "hinge",
            LinearKind::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub weight: f64,
    pub bias: f64,
    pub kind: LinearKind,
}

impl LinearModel {
    pub fn decision(&self, bs: f64) -> f64 {
        self.weight * bs + self.bias
    }
}

impl Classifier for LinearModel {
    fn predict(&self, bs: f64) -> Result<SubjectLabel> {
        check_bs(bs)?;
        Ok(if self.decision(bs) > 0.0 {
            SubjectLabel::Normal
        } else {
            SubjectLabel::Palsy
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeSgd {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for HingeSgd {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            l2: 1e-4,
        }
    }
}

/// Fits `max(0, 1 - y (w bs + b))` plus `l2/2 * w^2` by per-sample
/// subgradient steps, visiting samples in a seeded shuffled order each epoch.
pub fn train_hinge_sgd(samples: &[Sample], params: &HingeSgd, seed: u64) -> Result<LinearModel> {
    check_training_set(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let (mut w, mut b) = (0.0, 0.0);
    let lr = params.learning_rate;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = samples[i];
            let y = label.sign();
            let margin = y * (w * x + b);
            w -= lr * params.l2 * w;
            if margin < 1.0 {
                w += lr * y * x;
                b += lr * y;
            }
        }
    }
    finite_model(w, b, LinearKind::HingeSgd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for Logistic {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.1,
        }
    }
}

/// Full-batch gradient descent on the mean log-loss, starting from zero.
pub fn train_logistic(samples: &[Sample], params: &Logistic) -> Result<LinearModel> {
    check_training_set(samples)?;
    let n = samples.len() as f64;
    let (mut w, mut b) = (0.0, 0.0);
    for _ in 0..params.iterations {
        let (mut gw, mut gb) = (0.0, 0.0);
        for &(x, label) in samples {
            let target = if label == SubjectLabel::Normal {
                1.0
            } else {
                0.0
            };
            let p = 1.0 / (1.0 + (-(w * x + b)).exp());
            gw += (p - target) * x;
            gb += p - target;
        }
        w -= params.learning_rate * gw / n;
        b -= params.learning_rate * gb / n;
    }
    finite_model(w, b, LinearKind::Logistic)
}

fn finite_model(weight: f64, bias: f64, kind: LinearKind) -> Result<LinearModel> {
    if !(weight.is_finite() && bias.is_finite()) {
        return Err(Error::DivergedLoss {
            epoch: 0,
            loss: f64::NAN,
        });
    }
    Ok(LinearModel { weight, bias, kind })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub samples: Vec<Sample>,
}

/// Stores the training set; `k` must be odd and at most its size.
pub fn train_knn(samples: &[Sample], k: usize) -> Result<KnnModel> {
    check_training_set(samples)?;
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::ValidationFailure(format!(
            "k must be odd and positive, got {k}"
        )));
    }
    if k > samples.len() {
        return Err(Error::TooFewItems(format!(
            "k = {k} exceeds {} training samples",
            samples.len()
        )));
    }
    Ok(KnnModel {
        k,
        samples: samples.to_vec(),
    })
}

impl Classifier for KnnModel {
    /// Majority vote of the `k` nearest stored samples. Equal distances are
    /// resolved by training order; an even split votes Palsy.
    fn predict(&self, bs: f64) -> Result<SubjectLabel> {
        check_bs(bs)?;
        let mut by_distance: Vec<(f64, usize)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &(x, _))| ((x - bs).abs(), i))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let palsy_votes = by_distance[..self.k]
            .iter()
            .filter(|&&(_, i)| self.samples[i].1 == SubjectLabel::Palsy)
            .count();
        Ok(if 2 * palsy_votes >= self.k {
            SubjectLabel::Palsy
        } else {
            SubjectLabel::Normal
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Hinge,
    Logistic,
    Knn,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::Hinge, LearnerKind::Logistic, LearnerKind::Knn];
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Hinge => "hinge",
            LearnerKind::Logistic => "logistic",
            LearnerKind::Knn => "knn",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" | "sgd" => Ok(LearnerKind::Hinge),
            "logistic" | "lr" => Ok(LearnerKind::Logistic),
            "knn" => Ok(LearnerKind::Knn),
            other => Err(Error::ValidationFailure(format!(
                "unknown learner `{other}`, expected hinge, logistic or knn"
            ))),
        }
    }
}

/// Any trained final detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Linear(LinearModel),
    Knn(KnnModel),
}

impl Classifier for Detector {
    fn predict(&self, bs: f64) -> Result<SubjectLabel> {
        match self {
            Detector::Linear(m) => m.predict(bs),
            Detector::Knn(m) => m.predict(bs),
        }
    }
}

/// Learner with the default hyperparameters of each kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultLearner(pub LearnerKind);

impl DefaultLearner {
    pub const KNN_K: usize = 3;
}

impl Learner for DefaultLearner {
    type Model = Detector;

    fn fit(&self, samples: &[Sample], seed: u64) -> Result<Detector> {
        Ok(match self.0 {
            LearnerKind::Hinge => {
                Detector::Linear(train_hinge_sgd(samples, &HingeSgd::default(), seed)?)
            }
            LearnerKind::Logistic => {
                Detector::Linear(train_logistic(samples, &Logistic::default())?)
            }
            LearnerKind::Knn => Detector::Knn(train_knn(samples, Self::KNN_K)?),
        })
    }
}

impl Detector {
    /// Canonical text form: `hinge <w> <b>`, `logistic <w> <b>`, or
    /// `knn <k>` followed by one `<bs> <label>` row per stored sample.
    pub fn to_text(&self) -> String {
        match self {
            Detector::Linear(m) => format!("{} {} {}\n", m.kind.tag(), m.weight, m.bias),
            Detector::Knn(m) => {
                let mut out = format!("knn {}\n", m.k);
                for (bs, label) in &m.samples {
                    out.push_str(&format!("{bs} {label}\n"));
                }
                out
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::malformed(line, msg);
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| bad(1, "empty detector file".into()))?;
        let fields: Vec<&str> = first.split_whitespace().collect();
        let float = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(1, format!("bad number `{v}`")))
        };
        match fields[..] {
            [kind @ ("hinge" | "logistic"), w, b] => {
                let kind = if kind == "hinge" {
                    LinearKind::HingeSgd
                } else {
                    LinearKind::Logistic
                };
                Ok(Detector::Linear(LinearModel {
                    weight: float(w)?,
                    bias: float(b)?,
                    kind,
                }))
            }
            ["knn", k] => {
                let k: usize = k.parse().map_err(|_| bad(1, format!("bad k `{k}`")))?;
                let mut samples = Vec::new();
                for (i, line) in lines {
                    let row: Vec<&str> = line.split_whitespace().collect();
                    let [bs, label] = row[..] else {
                        return Err(bad(i + 1, format!("expected `<bs> <label>`, got `{line}`")));
                    };
                    let bs = bs
                        .parse::<f64>()
                        .map_err(|_| bad(i + 1, format!("bad bs `{bs}`")))?;
                    check_bs(bs)?;
                    samples.push((bs, label.parse()?));
                }
                Ok(Detector::Knn(train_knn(&samples, k)?))
            }
            _ => Err(bad(1, format!("unrecognized detector header `{first}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SubjectLabel::*;

    fn separable() -> Vec<Sample> {
        vec![
            (0.9, Normal),
            (0.95, Normal),
            (1.0, Normal),
            (0.0, Palsy),
            (0.1, Palsy),
            (0.2, Palsy),
        ]
    }

    fn training_accuracy(model: &impl Classifier, samples: &[Sample]) -> f64 {
        let hits = samples
            .iter()
            .filter(|&&(x, y)| model.predict(x).unwrap() == y)
            .count();
        hits as f64 / samples.len() as f64
    }

    #[test]
    fn hinge_separates_toy_set() {
        let model = train_hinge_sgd(&separable(), &HingeSgd::default(), 7).unwrap();
        assert_eq!(training_accuracy(&model, &separable()), 1.0);
        assert_eq!(model.predict(1.0).unwrap(), Normal);
        assert_eq!(model.predict(0.05).unwrap(), Palsy);
        assert!(model.weight > 0.0);
    }

    #[test]
    fn inverted_labels_flip_weight_sign() {
        let inverted: Vec<Sample> = separable()
            .into_iter()
            .map(|(x, y)| (x, y.flipped()))
            .collect();
        let model = train_hinge_sgd(&inverted, &HingeSgd::default(), 7).unwrap();
        assert!(model.weight < 0.0);
        assert_eq!(training_accuracy(&model, &inverted), 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let normals = vec![(0.9, Normal), (1.0, Normal)];
        assert!(matches!(
            train_hinge_sgd(&normals, &HingeSgd::default(), 0),
            Err(Error::EmptyClass(_))
        ));
        assert!(train_logistic(&normals, &Logistic::default()).is_err());
        assert!(train_knn(&normals, 1).is_err());
    }

    #[test]
    fn hinge_is_seed_deterministic() {
        let a = train_hinge_sgd(&separable(), &HingeSgd::default(), 42).unwrap();
        let b = train_hinge_sgd(&separable(), &HingeSgd::default(), 42).unwrap();
        assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn linear_boundary() {
        let m = LinearModel {
            weight: 1.0,
            bias: -0.5,
            kind: LinearKind::HingeSgd,
        };
        assert_eq!(m.decision(0.5), 0.0);
        assert_eq!(m.predict(0.5).unwrap(), Palsy);
        assert_eq!(m.predict(0.6).unwrap(), Normal);
        assert_eq!(m.predict(0.4).unwrap(), Palsy);
        assert!(matches!(m.predict(1.2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn knn_examples() {
        let m = train_knn(&[(0.1, Palsy), (0.9, Normal)], 1).unwrap();
        assert_eq!(m.predict(0.2).unwrap(), Palsy);
        assert_eq!(m.predict(0.8).unwrap(), Normal);
        // Equidistant: the earlier stored sample wins.
        assert_eq!(m.predict(0.5).unwrap(), Palsy);

        let data = vec![
            (0.1, Palsy),
            (0.95, Normal),
            (0.9, Normal),
            (0.2, Palsy),
            (0.85, Normal),
        ];
        let all = train_knn(&data, 5).unwrap();
        for bs in [0.0, 0.15, 0.5, 1.0] {
            assert_eq!(all.predict(bs).unwrap(), Normal);
        }
        assert!(train_knn(&data, 2).is_err());
        assert!(matches!(train_knn(&data, 7), Err(Error::TooFewItems(_))));
    }

    #[test]
    fn logistic_separates_and_falls_back_to_majority() {
        let model = train_logistic(&separable(), &Logistic::default()).unwrap();
        assert_eq!(training_accuracy(&model, &separable()), 1.0);

        let constant = vec![
            (0.5, Palsy),
            (0.5, Palsy),
            (0.5, Palsy),
            (0.5, Normal),
            (0.5, Normal),
        ];
        let model = train_logistic(&constant, &Logistic::default()).unwrap();
        assert_eq!(model.predict(0.5).unwrap(), Palsy);
        let constant: Vec<Sample> = constant
            .into_iter()
            .map(|(x, y)| (x, y.flipped()))
            .collect();
        let model = train_logistic(&constant, &Logistic::default()).unwrap();
        assert_eq!(model.predict(0.5).unwrap(), Normal);
    }

    #[test]
    fn text_round_trip() {
        let hinge =
            Detector::Linear(train_hinge_sgd(&separable(), &HingeSgd::default(), 1).unwrap());
        assert_eq!(Detector::from_text(&hinge.to_text()).unwrap(), hinge);
        let knn = Detector::Knn(train_knn(&separable(), 3).unwrap());
        let text = knn.to_text();
        assert!(text.starts_with("knn 3\n0.9 normal\n"));
        assert_eq!(Detector::from_text(&text).unwrap(), knn);
        assert!(Detector::from_text("svm 1 2").is_err());
        assert!(Detector::from_text("hinge 1").is_err());
    }

    proptest! {
        #[test]
        fn threshold_decision_on_separated_data(
            palsy in proptest::collection::vec(0.0f64..0.45, 1..20),
            normal in proptest::collection::vec(0.55f64..=1.0, 1..20),
            seed: u64,
        ) {
            let mut samples: Vec<Sample> = palsy.iter().map(|&x| (x, Palsy)).collect();
            samples.extend(normal.iter().map(|&x| (x, Normal)));
            let model = train_hinge_sgd(&samples, &HingeSgd::default(), seed).unwrap();
            // Predictions over a fine grid switch label at most once, Palsy below.
            let labels: Vec<SubjectLabel> =
                (0..=200).map(|i| model.predict(i as f64 / 200.0).unwrap()).collect();
            let switches = labels.windows(2).filter(|w| w[0] != w[1]).count();
            prop_assert!(switches <= 1);
            if switches == 1 {
                prop_assert_eq!(labels[0], Palsy);
            }
        }

        #[test]
        fn positive_rescaling_preserves_predictions(
            w in -50.0f64..50.0, b in -50.0f64..50.0, scale in 1e-3f64..1e3, bs in 0.0f64..=1.0,
        ) {
            let m = LinearModel { weight: w, bias: b, kind: LinearKind::HingeSgd };
            let scaled = LinearModel { weight: w * scale, bias: b * scale, ..m };
            let d = m.decision(bs);
            // Skip points whose decision value is lost to rounding at the boundary.
            prop_assume!(d.abs() > 1e-9);
            prop_assert_eq!(m.predict(bs).unwrap(), scaled.predict(bs).unwrap());
        }
    }
}
