use rand::seq::SliceRandom;

use super::{LabelMatrix, MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::numerics::RngSeed;

/// Assignment of sample indices to clients. Each client's indices are sorted
/// ascending so shards keep the original row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub clients: Vec<Vec<usize>>,
    pub histograms: Vec<Vec<usize>>,
}

/// Deals samples to `m` clients round-robin. In stratified mode the deal runs
/// over the samples grouped by class (each class shuffled), which keeps every
/// client within one sample of the global per-class share and within one
/// sample of `N/M` overall.
pub fn stratified_assignment(
    labels: &LabelMatrix,
    m: usize,
    stratified: bool,
    seed: RngSeed,
) -> Result<Partition> {
    let n = labels.len();
    if m == 0 || m > n {
        return Err(Error::InvalidSpec(format!("cannot split {n} samples across {m} clients")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng());
    if stratified {
        order.sort_by_key(|&i| labels.classes()[i]);
    }
    let mut clients = vec![Vec::with_capacity(n / m + 1); m];
    for (pos, &i) in order.iter().enumerate() {
        clients[pos % m].push(i);
    }
    for c in &mut clients {
        c.sort_unstable();
    }
    let histograms = clients.iter().map(|idx| labels.select(idx).histogram()).collect();
    Ok(Partition { clients, histograms })
}

pub fn partition_horizontal(
    data: &MultiViewDataset,
    m: usize,
    stratified: bool,
    seed: RngSeed,
) -> Result<Vec<MultiViewDataset>> {
    let p = stratified_assignment(data.labels(), m, stratified, seed)?;
    Ok(p.clients.iter().map(|idx| data.select_rows(idx)).collect())
}

/// One shard per view, each paired with the shared labels. Row order is
/// untouched, so shard rows share one ID space.
pub fn partition_vertical(data: &MultiViewDataset) -> Vec<(ViewMatrix, LabelMatrix)> {
    data.views()
        .iter()
        .map(|v| (v.clone(), data.labels().clone()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified train/validation/test split. Fractions must be positive and
/// sum to one; per class, `round(f·n_c)` samples go to train and validation
/// and the remainder to test.
pub fn split_stratified(labels: &LabelMatrix, fractions: [f64; 3], seed: RngSeed) -> Result<Split> {
    if fractions.iter().any(|&f| !(f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut rng = seed.rng();
    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..labels.num_classes() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels.classes()[i] == class).collect();
        idx.shuffle(&mut rng);
        let nc = idx.len();
        let n_train = ((fractions[0] * nc as f64).round() as usize).min(nc);
        let n_val = ((fractions[1] * nc as f64).round() as usize).min(nc - n_train);
        split.train.extend_from_slice(&idx[..n_train]);
        split.validation.extend_from_slice(&idx[n_train..n_train + n_val]);
        split.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_multiview, GeneratorSpec};
    use proptest::prelude::*;

    #[test]
    fn single_client_gets_everything() {
        let d = gen_multiview(&GeneratorSpec::new(20, vec![2], 2, 1)).unwrap();
        let parts = partition_horizontal(&d, 1, true, RngSeed(0)).unwrap();
        assert_eq!(parts, vec![d]);
    }

    #[test]
    fn equal_sizes_for_divisible_n() {
        let d = gen_multiview(&GeneratorSpec::new(100, vec![2], 2, 1)).unwrap();
        let parts = partition_horizontal(&d, 4, false, RngSeed(3)).unwrap();
        let sizes: Vec<_> = parts.iter().map(|p| p.num_samples()).collect();
        assert_eq!(sizes, vec![25, 25, 25, 25]);
    }

    #[test]
    fn stratified_60_40_histograms() {
        // Histogram oracle: each of 4 clients should hold 15 ± 1 of class 0
        // and 10 ± 1 of class 1.
        let classes: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let labels = LabelMatrix::from_classes(classes, 2).unwrap();
        let p = stratified_assignment(&labels, 4, true, RngSeed(11)).unwrap();
        for h in &p.histograms {
            assert!((14..=16).contains(&h[0]), "{h:?}");
            assert!((9..=11).contains(&h[1]), "{h:?}");
        }
    }

    #[test]
    fn vertical_shards_reassemble() {
        let d = gen_multiview(&GeneratorSpec::new(30, vec![3, 1, 2], 2, 4)).unwrap();
        let shards = partition_vertical(&d);
        assert_eq!(shards.len(), 3);
        for (k, (x, y)) in shards.iter().enumerate() {
            assert_eq!(x.cols(), d.dims()[k]);
            assert_eq!(y, d.labels());
        }
        let views = shards.into_iter().map(|(x, _)| x).collect();
        assert_eq!(MultiViewDataset::new(views, d.labels().clone()).unwrap(), d);
    }

    #[test]
    fn rejects_too_many_clients() {
        let labels = LabelMatrix::from_classes(vec![0, 1], 2).unwrap();
        assert!(stratified_assignment(&labels, 3, true, RngSeed(0)).is_err());
    }

    #[test]
    fn split_fractions() {
        let labels = LabelMatrix::from_classes((0..100).map(|i| i % 2).collect(), 2).unwrap();
        let s = split_stratified(&labels, [0.6, 0.2, 0.2], RngSeed(1)).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (60, 20, 20));
        assert!(split_stratified(&labels, [0.5, 0.5, 0.0], RngSeed(1)).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_covering_balanced(
            classes in proptest::collection::vec(0usize..3, 3..200),
            m in 1usize..6,
            stratified in any::<bool>(),
            seed in any::<u64>(),
        ) {
            prop_assume!(m <= classes.len());
            let labels = LabelMatrix::from_classes(classes.clone(), 3).unwrap();
            let p = stratified_assignment(&labels, m, stratified, RngSeed(seed)).unwrap();
            let mut all: Vec<usize> = p.clients.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..classes.len()).collect::<Vec<_>>());
            let n = classes.len() as f64;
            for c in &p.clients {
                prop_assert!((c.len() as f64 - n / m as f64).abs() <= 1.0);
            }
            let global = labels.histogram();
            let mut summed = vec![0; 3];
            for h in &p.histograms {
                for (s, v) in summed.iter_mut().zip(h) { *s += v; }
                if stratified {
                    for (cls, &cnt) in h.iter().enumerate() {
                        prop_assert!((cnt as f64 - global[cls] as f64 / m as f64).abs() <= 1.0);
                    }
                }
            }
            prop_assert_eq!(summed, global);
        }
    }
}
