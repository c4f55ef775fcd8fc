//! Seeded synthetic data generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{LabelMatrix, MultiViewDataset, MultiViewSequences, SequenceDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngSeed};

/// Parameters of the multi-view generators.
///
/// Samples live in a `C`-dimensional latent space: sample `i` sits at
/// `margin·e_{y_i}` plus unit Gaussian jitter. An informative view maps the
/// latent point through a seeded `C × d_k` linear map and adds `N(0, σ²)`
/// noise; an uninformative view is unit Gaussian noise.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub samples: usize,
    pub dims: Vec<usize>,
    pub classes: usize,
    pub noise: f64,
    pub margin: f64,
    pub informative: Vec<bool>,
    pub seed: RngSeed,
}

impl GeneratorSpec {
    pub fn new(samples: usize, dims: Vec<usize>, classes: usize, seed: u64) -> Self {
        let k = dims.len();
        GeneratorSpec {
            samples,
            dims,
            classes,
            noise: 0.5,
            margin: 4.0,
            informative: vec![true; k],
            seed: RngSeed(seed),
        }
    }

    pub fn num_views(&self) -> usize {
        self.dims.len()
    }

    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.samples < self.classes {
            return Err(Error::InvalidSpec(format!(
                "need N >= C >= 2, got N={}, C={}",
                self.samples, self.classes
            )));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidSpec("every view needs at least one feature".into()));
        }
        if self.informative.len() != self.dims.len() {
            return Err(Error::InvalidSpec(format!(
                "informative mask has {} entries for {} views",
                self.informative.len(),
                self.dims.len()
            )));
        }
        if !self.informative.iter().any(|&b| b) {
            return Err(Error::InvalidSpec("at least one view must be informative".into()));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidSpec(format!("noise must be >= 0, got {}", self.noise)));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidSpec(format!("margin must be >= 0, got {}", self.margin)));
        }
        Ok(())
    }
}

const LABEL_STREAM: u64 = 1;
const LATENT_STREAM: u64 = 2;
const MAP_STREAM: u64 = 3;
const NOISE_STREAM: u64 = 4;
const FOLD_STREAM: u64 = 5;

/// Exactly balanced class indices (`i mod C`), shuffled.
fn balanced_labels(n: usize, classes: usize, seed: RngSeed) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut seed.rng());
    labels
}

fn latent_points(labels: &[usize], classes: usize, margin: f64, seed: RngSeed) -> Matrix {
    let mut jitter = Matrix::gaussian(labels.len(), classes, seed);
    for (i, &y) in labels.iter().enumerate() {
        jitter[(i, y)] += margin;
    }
    jitter
}

fn view_map(classes: usize, dim: usize, seed: RngSeed) -> Matrix {
    Matrix::gaussian(classes, dim, seed).scale(1.0 / (classes as f64).sqrt())
}

pub fn gen_multiview(spec: &GeneratorSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let n = spec.samples;
    let c = spec.classes;
    let labels = balanced_labels(n, c, spec.seed.derive(LABEL_STREAM));
    let latent = latent_points(&labels, c, spec.margin, spec.seed.derive(LATENT_STREAM));

    let mut views = Vec::with_capacity(spec.num_views());
    for (k, (&d, &informative)) in spec.dims.iter().zip(&spec.informative).enumerate() {
        let noise = Matrix::gaussian(n, d, spec.seed.derive2(NOISE_STREAM, k as u64));
        let x = if informative {
            let map = view_map(c, d, spec.seed.derive2(MAP_STREAM, k as u64));
            latent.matmul(&map)?.add(&noise.scale(spec.noise))?
        } else {
            noise
        };
        views.push(ViewMatrix::new(x));
    }
    MultiViewDataset::new(views, LabelMatrix::from_classes(labels, c)?)
}

/// Binary dataset whose views complement each other: samples are dealt
/// (per class) into K folds, and view `k` carries the class signal only on
/// fold `k`. Everywhere else it is unit Gaussian noise, so a single view can
/// at best classify its own fold and guess on the rest.
pub fn gen_complementary(spec: &GeneratorSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    if spec.classes != 2 {
        return Err(Error::InvalidSpec(format!(
            "complementary data is binary, got C={}",
            spec.classes
        )));
    }
    let k_views = spec.num_views();
    if k_views < 2 {
        return Err(Error::InvalidSpec("complementary data needs K >= 2".into()));
    }
    let n = spec.samples;
    let labels = balanced_labels(n, 2, spec.seed.derive(LABEL_STREAM));
    let latent = latent_points(&labels, 2, spec.margin, spec.seed.derive(LATENT_STREAM));
    let folds = complementary_folds(&labels, k_views, spec.seed.derive(FOLD_STREAM));

    let mut views = Vec::with_capacity(k_views);
    for (k, &d) in spec.dims.iter().enumerate() {
        let map = view_map(2, d, spec.seed.derive2(MAP_STREAM, k as u64));
        let signal = latent.matmul(&map)?;
        let noise = Matrix::gaussian(n, d, spec.seed.derive2(NOISE_STREAM, k as u64));
        let x = Matrix::from_fn(n, d, |i, j| {
            if folds[i] == k {
                signal[(i, j)] + spec.noise * noise[(i, j)]
            } else {
                noise[(i, j)]
            }
        });
        views.push(ViewMatrix::new(x));
    }
    MultiViewDataset::new(views, LabelMatrix::from_classes(labels, 2)?)
}

/// Fold index per sample, dealt round-robin within each class after a
/// seeded shuffle.
pub(crate) fn complementary_folds(labels: &[usize], k: usize, seed: RngSeed) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut seed.rng());
    order.sort_by_key(|&i| labels[i]);
    let mut folds = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// Parameters of the sequence generator.
///
/// Step `t` of a length-`T` sequence in view `k` is
/// `((t+1)/T)·drift[k]·d_{k,y} + noise·ε_t`, where `d_{k,y}` is a seeded
/// unit-scale class direction. Views may differ in step dimension and drift
/// strength.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqGeneratorSpec {
    pub samples: usize,
    pub step_dims: Vec<usize>,
    pub min_len: usize,
    pub max_len: usize,
    pub classes: usize,
    pub drift: Vec<f64>,
    pub noise: f64,
    pub seed: RngSeed,
}

impl SeqGeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.samples < self.classes {
            return Err(Error::InvalidSpec(format!(
                "need N >= C >= 2, got N={}, C={}",
                self.samples, self.classes
            )));
        }
        if self.step_dims.is_empty() || self.step_dims.contains(&0) {
            return Err(Error::InvalidSpec("every view needs a positive step dimension".into()));
        }
        if self.drift.len() != self.step_dims.len() {
            return Err(Error::InvalidSpec(format!(
                "{} drift scales for {} views",
                self.drift.len(),
                self.step_dims.len()
            )));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::InvalidSpec(format!(
                "length range [{}, {}] must satisfy 1 <= min <= max",
                self.min_len, self.max_len
            )));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidSpec("noise must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn gen_sequences(spec: &SeqGeneratorSpec) -> Result<MultiViewSequences> {
    spec.validate()?;
    let n = spec.samples;
    let labels = balanced_labels(n, spec.classes, spec.seed.derive(LABEL_STREAM));

    let mut len_rng = spec.seed.derive(FOLD_STREAM).rng();
    let lengths: Vec<usize> = (0..n)
        .map(|_| len_rng.random_range(spec.min_len..=spec.max_len))
        .collect();

    let mut views = Vec::with_capacity(spec.step_dims.len());
    for (k, &p) in spec.step_dims.iter().enumerate() {
        let directions = Matrix::gaussian(spec.classes, p, spec.seed.derive2(MAP_STREAM, k as u64));
        let mut rng = spec.seed.derive2(NOISE_STREAM, k as u64).rng();
        let mut seqs = Vec::with_capacity(n);
        for (&y, &t_len) in labels.iter().zip(&lengths) {
            let mut s = Matrix::zeros(t_len, p);
            for t in 0..t_len {
                let ramp = (t + 1) as f64 / t_len as f64 * spec.drift[k];
                for j in 0..p {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    s[(t, j)] = ramp * directions[(y, j)] + spec.noise * eps;
                }
            }
            seqs.push(s);
        }
        views.push(SequenceDataset::new(p, seqs)?);
    }
    MultiViewSequences::new(views, LabelMatrix::from_classes(labels, spec.classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiview_is_deterministic() {
        let spec = GeneratorSpec::new(50, vec![3, 2], 2, 9);
        let a = gen_multiview(&spec).unwrap();
        let b = gen_multiview(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dims(), vec![3, 2]);
        assert_eq!(a.labels().histogram(), vec![25, 25]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = GeneratorSpec::new(50, vec![3, 2], 2, 9);
        spec.informative = vec![false, false];
        assert!(matches!(gen_multiview(&spec), Err(Error::InvalidSpec(_))));
        let spec = GeneratorSpec::new(50, vec![3], 2, 9);
        assert!(matches!(gen_complementary(&spec), Err(Error::InvalidSpec(_))));
        let spec = GeneratorSpec::new(1, vec![3], 2, 9);
        assert!(gen_multiview(&spec).is_err());
    }

    #[test]
    fn complementary_is_deterministic_and_folded() {
        let spec = GeneratorSpec::new(60, vec![2, 2, 2], 2, 3);
        assert_eq!(gen_complementary(&spec).unwrap(), gen_complementary(&spec).unwrap());
        let labels = balanced_labels(60, 2, RngSeed(1));
        let folds = complementary_folds(&labels, 3, RngSeed(2));
        for k in 0..3 {
            assert_eq!(folds.iter().filter(|&&f| f == k).count(), 20);
        }
    }

    #[test]
    fn sequences_respect_length_range() {
        let spec = SeqGeneratorSpec {
            samples: 30,
            step_dims: vec![3, 2],
            min_len: 10,
            max_len: 30,
            classes: 2,
            drift: vec![1.0, 0.5],
            noise: 0.3,
            seed: RngSeed(5),
        };
        let d = gen_sequences(&spec).unwrap();
        assert_eq!(d, gen_sequences(&spec).unwrap());
        for v in d.views() {
            for s in v.sequences() {
                assert!((10..=30).contains(&s.rows()));
            }
        }
        assert_eq!(d.view(1).step_dim(), 2);
    }
}
