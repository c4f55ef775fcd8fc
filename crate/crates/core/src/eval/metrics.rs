use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// Which metrics hit a zero denominator and were reported as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UndefinedFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub undefined: UndefinedFlags,
}

impl Metrics {
    pub fn values(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }
}

pub const METRIC_NAMES: [&str; 4] = ["accuracy", "precision", "recall", "f1"];

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

/// Binary metrics with `positive` as the positive class; every other class
/// counts as negative.
pub fn compute_metrics(predicted: &[usize], truth: &[usize], positive: usize) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut c = Confusion::default();
    let mut correct = 0;
    for (&p, &t) in predicted.iter().zip(truth) {
        correct += usize::from(p == t);
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let (precision, p_undef) = ratio(c.tp as f64, (c.tp + c.fp) as f64);
    let (recall, r_undef) = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
    let (half_f1, f_undef) = ratio(precision * recall, precision + recall);
    Ok(Metrics {
        accuracy: correct as f64 / predicted.len() as f64,
        precision,
        recall,
        f1: 2.0 * half_f1,
        confusion: c,
        undefined: UndefinedFlags {
            precision: p_undef,
            recall: r_undef,
            f1: f_undef,
        },
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
