//! Dataset types, synthetic generators, partitioners and file I/O.

mod generate;
pub(crate) mod io;
mod partition;

pub use generate::{gen_complementary, gen_multiview, gen_sequences, GeneratorSpec, SeqGeneratorSpec};
pub use io::{
    load_dataset, load_sequences, save_dataset, save_sequences, write_manifest, read_manifest, Manifest,
};
pub use partition::{
    partition_horizontal, partition_vertical, split_stratified, stratified_assignment, Partition, Split,
};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Raw feature matrix of one view, `N × d_k`. Never placed in a protocol message.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewMatrix(Matrix);

impl ViewMatrix {
    pub fn new(m: Matrix) -> Self {
        ViewMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> ViewMatrix {
        ViewMatrix(self.0.select_rows(idx))
    }
}

/// One-hot label matrix, stored as class indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    classes: Vec<usize>,
    num_classes: usize,
}

impl LabelMatrix {
    pub fn from_classes(classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some((i, &c)) = classes.iter().enumerate().find(|(_, &c)| c >= num_classes) {
            return Err(Error::Shape(format!(
                "label {c} at row {i} is out of range for {num_classes} classes"
            )));
        }
        Ok(LabelMatrix { classes, num_classes })
    }

    /// Accepts only exact one-hot rows.
    pub fn from_one_hot(m: &Matrix) -> Result<Self> {
        let mut classes = Vec::with_capacity(m.rows());
        for r in 0..m.rows() {
            let row = m.row(r);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || zeros != row.len() - 1 {
                return Err(Error::Shape(format!("label row {r} is not one-hot")));
            }
            classes.push(row.iter().position(|&v| v == 1.0).unwrap());
        }
        Ok(LabelMatrix {
            classes,
            num_classes: m.cols(),
        })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.classes.len(), self.num_classes);
        for (r, &c) in self.classes.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }

    pub fn select(&self, idx: &[usize]) -> LabelMatrix {
        LabelMatrix {
            classes: idx.iter().map(|&i| self.classes[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for &c in &self.classes {
            h[c] += 1;
        }
        h
    }
}

/// K views over a common set of N samples, plus their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: LabelMatrix,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewMatrix>, labels: LabelMatrix) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Shape("a dataset needs at least one view".into()));
        }
        for (k, v) in views.iter().enumerate() {
            if v.rows() != labels.len() {
                return Err(Error::Shape(format!(
                    "view {k} has {} rows but there are {} labels",
                    v.rows(),
                    labels.len()
                )));
            }
        }
        Ok(MultiViewDataset { views, labels })
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn view(&self, k: usize) -> &ViewMatrix {
        &self.views[k]
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.cols()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> MultiViewDataset {
        MultiViewDataset {
            views: self.views.iter().map(|v| v.select_rows(idx)).collect(),
            labels: self.labels.select(idx),
        }
    }

    /// Keeps only the views whose mask entry is true, in order.
    pub fn select_views(&self, mask: &[bool]) -> Result<MultiViewDataset> {
        if mask.len() != self.views.len() {
            return Err(Error::dims("select_views", self.views.len(), mask.len()));
        }
        let views: Vec<_> = self
            .views
            .iter()
            .zip(mask)
            .filter(|(_, &keep)| keep)
            .map(|(v, _)| v.clone())
            .collect();
        MultiViewDataset::new(views, self.labels.clone())
    }
}

/// Variable-length sequences of `step_dim`-dimensional vectors for one view.
/// Each sequence is stored as a `T × step_dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceDataset {
    step_dim: usize,
    sequences: Vec<Matrix>,
}

impl SequenceDataset {
    pub fn new(step_dim: usize, sequences: Vec<Matrix>) -> Result<Self> {
        for (i, s) in sequences.iter().enumerate() {
            if s.cols() != step_dim {
                return Err(Error::Shape(format!(
                    "sequence {i} has step dimension {} instead of {step_dim}",
                    s.cols()
                )));
            }
        }
        Ok(SequenceDataset { step_dim, sequences })
    }

    pub fn step_dim(&self) -> usize {
        self.step_dim
    }

    pub fn sequences(&self) -> &[Matrix] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> SequenceDataset {
        SequenceDataset {
            step_dim: self.step_dim,
            sequences: idx.iter().map(|&i| self.sequences[i].clone()).collect(),
        }
    }
}

/// K sequence views over common samples with shared labels (one client's `D^l_k`).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewSequences {
    views: Vec<SequenceDataset>,
    labels: LabelMatrix,
}

impl MultiViewSequences {
    pub fn new(views: Vec<SequenceDataset>, labels: LabelMatrix) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Shape("a sequence dataset needs at least one view".into()));
        }
        for (k, v) in views.iter().enumerate() {
            if v.len() != labels.len() {
                return Err(Error::Shape(format!(
                    "sequence view {k} has {} samples but there are {} labels",
                    v.len(),
                    labels.len()
                )));
            }
        }
        Ok(MultiViewSequences { views, labels })
    }

    pub fn views(&self) -> &[SequenceDataset] {
        &self.views
    }

    pub fn view(&self, k: usize) -> &SequenceDataset {
        &self.views[k]
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn select_rows(&self, idx: &[usize]) -> MultiViewSequences {
        MultiViewSequences {
            views: self.views.iter().map(|v| v.select(idx)).collect(),
            labels: self.labels.select(idx),
        }
    }

    /// Concatenates several clients' samples (in argument order).
    pub fn concat(parts: &[&MultiViewSequences]) -> Result<MultiViewSequences> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let k = first.num_views();
        let mut views = Vec::with_capacity(k);
        for v in 0..k {
            let dim = first.view(v).step_dim();
            let seqs = parts
                .iter()
                .flat_map(|p| p.view(v).sequences().iter().cloned())
                .collect();
            views.push(SequenceDataset::new(dim, seqs)?);
        }
        let classes = parts.iter().flat_map(|p| p.labels.classes().iter().copied()).collect();
        MultiViewSequences::new(views, LabelMatrix::from_classes(classes, first.labels.num_classes())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_round_trip_and_rejection() {
        let y = LabelMatrix::from_classes(vec![0, 2, 1], 3).unwrap();
        let m = y.to_matrix();
        assert_eq!(LabelMatrix::from_one_hot(&m).unwrap(), y);
        let bad = Matrix::from_rows(&[&[1.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(LabelMatrix::from_one_hot(&bad), Err(Error::Shape(_))));
        assert!(LabelMatrix::from_classes(vec![3], 3).is_err());
    }

    #[test]
    fn dataset_rejects_ragged_views() {
        let y = LabelMatrix::from_classes(vec![0, 1], 2).unwrap();
        let v = ViewMatrix::new(Matrix::zeros(3, 2));
        assert!(MultiViewDataset::new(vec![v], y).is_err());
    }
}
