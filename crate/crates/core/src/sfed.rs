//! Federated sequence encoders: per-view FedAvg over `M` clients, followed by
//! local feature extraction that feeds the horizontal protocol.
//!
//! The encoder maps each step through `tanh(U x_t + b)`, mean-pools over
//! time into an `E`-dimensional embedding `e`, and scores classes with
//! `V e + c`. Training minimizes mean softmax cross-entropy with plain SGD.

use rand::seq::SliceRandom;

use crate::data::{LabelMatrix, MultiViewDataset, MultiViewSequences, SequenceDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::fedcore::{
    run_rounds, weighted_average, ClientRole, Control, FedMessage, Payload, Protocol, RoundLog, ServerRole, Transport,
};
use crate::numerics::{Matrix, RngSeed};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderShape {
    pub input_dim: usize,
    pub embed_dim: usize,
    pub classes: usize,
}

impl EncoderShape {
    pub fn len(&self) -> usize {
        let (p, e, c) = (self.input_dim, self.embed_dim, self.classes);
        e * p + e + c * e + c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat parameter vector laid out as `[U (E×p), b (E), V (C×E), c (C)]`,
/// each block row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    shape: EncoderShape,
    w: Vec<f64>,
}

impl EncoderParams {
    pub fn new(shape: EncoderShape, w: Vec<f64>) -> Result<Self> {
        if w.len() != shape.len() {
            return Err(Error::dims("encoder parameters", shape.len(), w.len()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("encoder parameters must be finite".into()));
        }
        Ok(EncoderParams { shape, w })
    }

    pub fn zeros(shape: EncoderShape) -> Self {
        EncoderParams {
            shape,
            w: vec![0.0; shape.len()],
        }
    }

    /// Gaussian `U` and `V` scaled by fan-in, zero biases.
    pub fn init(shape: EncoderShape, seed: RngSeed) -> Self {
        let (p, e, c) = (shape.input_dim, shape.embed_dim, shape.classes);
        let u = Matrix::gaussian(e, p, seed.derive(1)).scale(1.0 / (p.max(1) as f64).sqrt());
        let v = Matrix::gaussian(c, e, seed.derive(2)).scale(1.0 / (e.max(1) as f64).sqrt());
        let mut w = Vec::with_capacity(shape.len());
        w.extend_from_slice(u.data());
        w.extend(std::iter::repeat_n(0.0, e));
        w.extend_from_slice(v.data());
        w.extend(std::iter::repeat_n(0.0, c));
        EncoderParams { shape, w }
    }

    pub fn shape(&self) -> EncoderShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    fn blocks(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (p, e, c) = (self.shape.input_dim, self.shape.embed_dim, self.shape.classes);
        let (u, rest) = self.w.split_at(e * p);
        let (b, rest) = rest.split_at(e);
        let (v, c_) = rest.split_at(c * e);
        debug_assert_eq!(c_.len(), c);
        (u, b, v, c_)
    }
}

/// Per-step activations kept for the backward pass.
struct Forward {
    hidden: Vec<Vec<f64>>,
    embedding: Vec<f64>,
    scores: Vec<f64>,
}

fn forward(params: &EncoderParams, seq: &Matrix, index: usize) -> Result<Forward> {
    let EncoderShape {
        input_dim: p,
        embed_dim: e,
        classes: c,
    } = params.shape;
    if seq.rows() == 0 {
        return Err(Error::EmptySequence { index });
    }
    if seq.cols() != p {
        return Err(Error::dims("encoder input", p, seq.cols()));
    }
    let (u, b, v, cb) = params.blocks();
    let mut hidden = Vec::with_capacity(seq.rows());
    let mut embedding = vec![0.0; e];
    for t in 0..seq.rows() {
        let x = seq.row(t);
        let h: Vec<f64> = (0..e)
            .map(|i| {
                let pre: f64 = u[i * p..(i + 1) * p].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[i];
                pre.tanh()
            })
            .collect();
        for (acc, hi) in embedding.iter_mut().zip(&h) {
            *acc += hi;
        }
        hidden.push(h);
    }
    let inv_t = 1.0 / seq.rows() as f64;
    embedding.iter_mut().for_each(|v| *v *= inv_t);
    let scores = (0..c)
        .map(|j| v[j * e..(j + 1) * e].iter().zip(&embedding).map(|(a, b)| a * b).sum::<f64>() + cb[j])
        .collect();
    Ok(Forward {
        hidden,
        embedding,
        scores,
    })
}

/// `(embedding, class scores)` for one sequence.
pub fn encoder_forward(params: &EncoderParams, seq: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = forward(params, seq, 0)?;
    Ok((f.embedding, f.scores))
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

/// Mean cross-entropy over `batch` and its exact gradient.
pub fn loss_and_grad(params: &EncoderParams, batch: &[(&Matrix, usize)]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let EncoderShape {
        input_dim: p,
        embed_dim: e,
        classes: c,
    } = params.shape;
    let (_, _, v, _) = params.blocks();
    let mut grad = vec![0.0; params.shape.len()];
    let (gu, rest) = grad.split_at_mut(e * p);
    let (gb, rest) = rest.split_at_mut(e);
    let (gv, gc) = rest.split_at_mut(c * e);
    let mut loss = 0.0;
    for (index, &(seq, y)) in batch.iter().enumerate() {
        if y >= c {
            return Err(Error::Shape(format!("label {y} out of range for {c} classes")));
        }
        let f = forward(params, seq, index)?;
        let prob = softmax(&f.scores);
        loss -= prob[y].max(f64::MIN_POSITIVE).ln();
        let ds: Vec<f64> = (0..c).map(|j| prob[j] - f64::from(u8::from(j == y))).collect();
        let mut de = vec![0.0; e];
        for j in 0..c {
            gc[j] += ds[j];
            for i in 0..e {
                gv[j * e + i] += ds[j] * f.embedding[i];
                de[i] += v[j * e + i] * ds[j];
            }
        }
        let inv_t = 1.0 / seq.rows() as f64;
        for (t, h) in f.hidden.iter().enumerate() {
            let x = seq.row(t);
            for i in 0..e {
                let dpre = de[i] * inv_t * (1.0 - h[i] * h[i]);
                gb[i] += dpre;
                for (g, &xj) in gu[i * p..(i + 1) * p].iter_mut().zip(x) {
                    *g += dpre * xj;
                }
            }
        }
    }
    let inv_n = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv_n);
    Ok((loss * inv_n, grad))
}

/// Mean loss over a whole dataset.
pub fn dataset_loss(params: &EncoderParams, data: &SequenceDataset, labels: &LabelMatrix) -> Result<f64> {
    let batch: Vec<(&Matrix, usize)> = data.sequences().iter().zip(labels.classes().iter().copied()).collect();
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (index, &(seq, y)) in batch.iter().enumerate() {
        let f = forward(params, seq, index)?;
        total -= softmax(&f.scores)[y].max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / batch.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub batch_size: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub rounds: u32,
    pub embed_dim: usize,
    pub seed: RngSeed,
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidHyperParams("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidHyperParams(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidHyperParams("embedding dimension must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            batch_size: 16,
            local_epochs: 1,
            learning_rate: 0.1,
            rounds: 20,
            embed_dim: 8,
            seed: RngSeed(0),
        }
    }
}

/// Shuffle order for (view, round, epoch); independent of the client so
/// clients holding the same data take the same steps.
fn epoch_seed(cfg: &TrainerConfig, view: usize, round: u32, epoch: usize) -> RngSeed {
    cfg.seed.derive2(view as u64, round as u64).derive(epoch as u64)
}

/// `local_epochs` passes of minibatch SGD over one client's view data.
pub fn local_training(
    data: &SequenceDataset,
    labels: &LabelMatrix,
    params: &EncoderParams,
    cfg: &TrainerConfig,
    view: usize,
    round: u32,
) -> Result<EncoderParams> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.len() != labels.len() {
        return Err(Error::dims("local_training", data.len(), labels.len()));
    }
    let mut w = params.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.local_epochs {
        order.sort_unstable();
        order.shuffle(&mut epoch_seed(cfg, view, round, epoch).rng());
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&Matrix, usize)> = chunk
                .iter()
                .map(|&i| (&data.sequences()[i], labels.classes()[i]))
                .collect();
            let (_, g) = loss_and_grad(&w, &batch)?;
            for (wi, gi) in w.w.iter_mut().zip(&g) {
                *wi -= cfg.learning_rate * gi;
            }
        }
    }
    Ok(w)
}

/// `Σ_l (N_l/N) w_l`.
pub fn fedavg_aggregate(w_list: &[&[f64]], counts: &[usize]) -> Result<Vec<f64>> {
    weighted_average(w_list, counts)
}

struct SClient<'a> {
    data: &'a SequenceDataset,
    labels: &'a LabelMatrix,
    shape: EncoderShape,
    cfg: &'a TrainerConfig,
}

impl ClientRole for SClient<'_> {
    fn step(&mut self, round: u32, broadcast: Option<&FedMessage>) -> Result<Payload> {
        match broadcast.map(|m| &m.payload) {
            Some(Payload::ParamVector { view, w }) => {
                let params = EncoderParams::new(self.shape, w.clone())?;
                let out = local_training(self.data, self.labels, &params, self.cfg, *view as usize, round)?;
                Ok(Payload::ParamVector { view: *view, w: out.w })
            }
            _ => Err(Error::Protocol("sequential client expected ParamVector".into())),
        }
    }
}

struct SServer {
    view: u32,
    params: EncoderParams,
    counts: Vec<usize>,
}

impl ServerRole for SServer {
    fn broadcast(&mut self, _round: u32) -> Result<Option<Payload>> {
        Ok(Some(Payload::ParamVector {
            view: self.view,
            w: self.params.w.clone(),
        }))
    }

    fn aggregate(&mut self, _round: u32, inbox: Vec<FedMessage>) -> Result<Control> {
        let mut vectors = Vec::with_capacity(inbox.len());
        for m in &inbox {
            match &m.payload {
                Payload::ParamVector { view, w } if *view == self.view => vectors.push(w.as_slice()),
                other => {
                    return Err(Error::Protocol(format!("unexpected {} from {}", other.kind(), m.sender)));
                }
            }
        }
        self.params = EncoderParams::new(self.params.shape, fedavg_aggregate(&vectors, &self.counts)?)?;
        Ok(Control::Continue)
    }
}

fn view_shapes(data: &MultiViewSequences, embed_dim: usize) -> Vec<EncoderShape> {
    data.views()
        .iter()
        .map(|v| EncoderShape {
            input_dim: v.step_dim(),
            embed_dim,
            classes: data.labels().num_classes(),
        })
        .collect()
}

/// Initial encoder of view `k`, shared by every training regime.
pub fn initial_params(shape: EncoderShape, cfg: &TrainerConfig, view: usize) -> EncoderParams {
    EncoderParams::init(shape, cfg.seed.derive2(0x53, view as u64))
}

#[derive(Debug)]
pub struct SfedFit {
    pub params: Vec<EncoderParams>,
    pub log: RoundLog,
}

/// FedAvg for every view in turn, `cfg.rounds` rounds each.
pub fn sfed_train(clients: &[MultiViewSequences], cfg: &TrainerConfig, transport: &dyn Transport) -> Result<SfedFit> {
    cfg.validate()?;
    let first = clients.first().ok_or(Error::MissingClient { expected: 1, actual: 0 })?;
    let shapes = view_shapes(first, cfg.embed_dim);
    for c in clients {
        if view_shapes(c, cfg.embed_dim) != shapes {
            return Err(Error::dims("sfed_train", format!("{shapes:?}"), "a client with different views"));
        }
    }
    let counts: Vec<usize> = clients.iter().map(MultiViewSequences::num_samples).collect();
    let mut params = Vec::with_capacity(shapes.len());
    let mut log = RoundLog::default();
    for (k, &shape) in shapes.iter().enumerate() {
        let mut server = SServer {
            view: k as u32,
            params: initial_params(shape, cfg, k),
            counts: counts.clone(),
        };
        let mut parties: Vec<SClient> = clients
            .iter()
            .map(|c| SClient {
                data: c.view(k),
                labels: c.labels(),
                shape,
                cfg,
            })
            .collect();
        log.extend(run_rounds(transport, Protocol::Sequential, &mut server, &mut parties, cfg.rounds)?);
        params.push(server.params);
    }
    Ok(SfedFit { params, log })
}

/// Trains every view's encoder on `data` alone for the same number of rounds
/// and epochs as [`sfed_train`], from the same initial weights.
pub fn train_encoders_alone(data: &MultiViewSequences, cfg: &TrainerConfig) -> Result<Vec<EncoderParams>> {
    cfg.validate()?;
    view_shapes(data, cfg.embed_dim)
        .into_iter()
        .enumerate()
        .map(|(k, shape)| {
            let mut w = initial_params(shape, cfg, k);
            for round in 1..=cfg.rounds {
                w = local_training(data.view(k), data.labels(), &w, cfg, k, round)?;
            }
            Ok(w)
        })
        .collect()
}

/// Embeds every sample of every view: one `N × E` feature matrix per view.
pub fn extract_features(params: &[EncoderParams], data: &MultiViewSequences) -> Result<MultiViewDataset> {
    if params.len() != data.num_views() {
        return Err(Error::dims("extract_features", data.num_views(), params.len()));
    }
    let mut views = Vec::with_capacity(params.len());
    for (p, v) in params.iter().zip(data.views()) {
        let e = p.shape.embed_dim;
        let mut x = Matrix::zeros(v.len(), e);
        for (i, seq) in v.sequences().iter().enumerate() {
            let f = forward(p, seq, i)?;
            x.row_mut(i).copy_from_slice(&f.embedding);
        }
        views.push(ViewMatrix::new(x));
    }
    MultiViewDataset::new(views, data.labels().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_sequences, SeqGeneratorSpec};
    use crate::fedcore::{InProcessTransport, MessageKind};

    fn shape() -> EncoderShape {
        EncoderShape {
            input_dim: 3,
            embed_dim: 4,
            classes: 2,
        }
    }

    fn seqs(seed: u64, n: usize) -> MultiViewSequences {
        gen_sequences(&SeqGeneratorSpec {
            samples: n,
            step_dims: vec![3, 2],
            min_len: 3,
            max_len: 8,
            classes: 2,
            drift: vec![1.5, 1.0],
            noise: 0.5,
            seed: RngSeed(seed),
        })
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let z = EncoderParams::zeros(shape());
        let mut w = z.as_slice().to_vec();
        let n = w.len();
        w[n - 2] = 0.3;
        w[n - 1] = -0.7;
        let biased = EncoderParams::new(shape(), w).unwrap();
        let seq = Matrix::gaussian(5, 3, RngSeed(1));
        let (e, s) = encoder_forward(&biased, &seq).unwrap();
        assert_eq!(e, vec![0.0; 4]);
        assert_eq!(s, vec![0.3, -0.7]);

        let p = EncoderParams::init(shape(), RngSeed(2));
        let one = Matrix::from_rows(&[&[0.5, -1.0, 2.0]]).unwrap();
        let (e, _) = encoder_forward(&p, &one).unwrap();
        let (u, b, _, _) = p.blocks();
        for i in 0..4 {
            let pre: f64 = (0..3).map(|j| u[i * 3 + j] * one[(0, j)]).sum::<f64>() + b[i];
            assert_eq!(e[i], pre.tanh());
        }

        let rev = Matrix::from_fn(5, 3, |r, c| seq[(4 - r, c)]);
        let (a, _) = encoder_forward(&p, &seq).unwrap();
        let (b, _) = encoder_forward(&p, &rev).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(matches!(encoder_forward(&p, &Matrix::zeros(0, 3)), Err(Error::EmptySequence { .. })));
    }

    #[test]
    fn loss_examples() {
        let z = EncoderParams::zeros(shape());
        let a = Matrix::gaussian(4, 3, RngSeed(1));
        let b = Matrix::gaussian(6, 3, RngSeed(2));
        let (l, _) = loss_and_grad(&z, &[(&a, 0), (&b, 1)]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(loss_and_grad(&z, &[]), Err(Error::EmptyBatch)));

        let p = EncoderParams::init(shape(), RngSeed(5));
        let (l1, g1) = loss_and_grad(&p, &[(&a, 0), (&b, 1)]).unwrap();
        let (l2, g2) = loss_and_grad(&p, &[(&a, 0), (&b, 1), (&a, 0), (&b, 1)]).unwrap();
        assert!((l1 - l2).abs() <= 1e-14 * l1.abs());
        for (x, y) in g1.iter().zip(&g2) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300) + 1e-17);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = EncoderParams::init(shape(), RngSeed(8));
        let batch_data: Vec<Matrix> = (0..3).map(|i| Matrix::gaussian(3 + i, 3, RngSeed(20 + i as u64))).collect();
        let batch: Vec<(&Matrix, usize)> = batch_data.iter().zip([0, 1, 1]).collect();
        let (_, g) = loss_and_grad(&p, &batch).unwrap();
        let h = 1e-5;
        for (i, &gi) in g.iter().enumerate() {
            let mut plus = p.clone();
            plus.w[i] += h;
            let mut minus = p.clone();
            minus.w[i] -= h;
            let fd = (loss_and_grad(&plus, &batch).unwrap().0 - loss_and_grad(&minus, &batch).unwrap().0) / (2.0 * h);
            assert!((fd - gi).abs() / fd.abs().max(gi.abs()).max(1e-3) < 1e-5, "{i}: {fd} vs {gi}");
        }
    }

    #[test]
    fn local_training_examples() {
        let d = seqs(1, 10);
        let cfg = TrainerConfig {
            local_epochs: 0,
            ..TrainerConfig::default()
        };
        let shape = EncoderShape {
            input_dim: 3,
            embed_dim: 8,
            classes: 2,
        };
        let p = EncoderParams::init(shape, RngSeed(1));
        assert_eq!(local_training(d.view(0), d.labels(), &p, &cfg, 0, 1).unwrap(), p);

        let cfg = TrainerConfig {
            local_epochs: 1,
            batch_size: 10,
            ..TrainerConfig::default()
        };
        let out = local_training(d.view(0), d.labels(), &p, &cfg, 0, 1).unwrap();
        let batch: Vec<(&Matrix, usize)> = d.view(0).sequences().iter().zip(d.labels().classes().iter().copied()).collect();
        let mut order: Vec<usize> = (0..10).collect();
        order.shuffle(&mut epoch_seed(&cfg, 0, 1, 0).rng());
        let shuffled: Vec<(&Matrix, usize)> = order.iter().map(|&i| batch[i]).collect();
        let (_, g) = loss_and_grad(&p, &shuffled).unwrap();
        let expected: Vec<f64> = p.as_slice().iter().zip(&g).map(|(w, g)| w - cfg.learning_rate * g).collect();
        assert_eq!(out.as_slice(), expected.as_slice());
    }

    #[test]
    fn local_training_reduces_loss() {
        for seed in 0..10 {
            let d = seqs(100 + seed, 40);
            let cfg = TrainerConfig {
                learning_rate: 0.01,
                local_epochs: 1,
                seed: RngSeed(seed),
                ..TrainerConfig::default()
            };
            let shape = view_shapes(&d, cfg.embed_dim)[0];
            let p = initial_params(shape, &cfg, 0);
            let before = dataset_loss(&p, d.view(0), d.labels()).unwrap();
            let out = local_training(d.view(0), d.labels(), &p, &cfg, 0, 1).unwrap();
            assert!(dataset_loss(&out, d.view(0), d.labels()).unwrap() < before);
        }
    }

    #[test]
    fn fedavg_examples() {
        assert_eq!(fedavg_aggregate(&[&[1.0, 2.0]], &[5]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(fedavg_aggregate(&[&[1.0, -2.0], &[-1.0, 2.0]], &[4, 4]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(fedavg_aggregate(&[&[0.0], &[4.0]], &[1, 3]).unwrap(), vec![3.0]);
        assert!(matches!(fedavg_aggregate(&[&[0.0], &[4.0, 1.0]], &[1, 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identical_clients_match_single_client() {
        let d = seqs(3, 12);
        let cfg = TrainerConfig {
            batch_size: 12,
            rounds: 4,
            ..TrainerConfig::default()
        };
        let fed = sfed_train(&[d.clone(), d.clone(), d.clone()], &cfg, &InProcessTransport::new()).unwrap();
        let alone = train_encoders_alone(&d, &cfg).unwrap();
        assert_eq!(fed.params, alone);
        assert_eq!(fed.log.kinds().into_iter().collect::<Vec<_>>(), vec![MessageKind::ParamVector]);
    }

    #[test]
    fn training_reduces_loss_and_views_are_independent() {
        let clients = [seqs(4, 30), seqs(5, 30)];
        let cfg = TrainerConfig {
            rounds: 5,
            ..TrainerConfig::default()
        };
        let fit = sfed_train(&clients, &cfg, &InProcessTransport::new()).unwrap();
        let pooled = MultiViewSequences::concat(&[&clients[0], &clients[1]]).unwrap();
        for k in 0..2 {
            let init = initial_params(fit.params[k].shape(), &cfg, k);
            let before = dataset_loss(&init, pooled.view(k), pooled.labels()).unwrap();
            let after = dataset_loss(&fit.params[k], pooled.view(k), pooled.labels()).unwrap();
            assert!(after < before, "view {k}: {after} >= {before}");
        }
        // Training view 0 on its own gives the same encoder: views share no state.
        let only0: Vec<MultiViewSequences> = clients
            .iter()
            .map(|c| MultiViewSequences::new(vec![c.view(0).clone()], c.labels().clone()).unwrap())
            .collect();
        let fit0 = sfed_train(&only0, &cfg, &InProcessTransport::new()).unwrap();
        assert_eq!(fit0.params[0], fit.params[0]);
    }

    #[test]
    fn extraction_examples() {
        let d = seqs(6, 9);
        let shapes = view_shapes(&d, 5);
        let zeros: Vec<EncoderParams> = shapes.iter().map(|&s| EncoderParams::zeros(s)).collect();
        let x = extract_features(&zeros, &d).unwrap();
        for v in x.views() {
            assert_eq!(v.matrix(), &Matrix::zeros(9, 5));
        }
        let bad = MultiViewSequences::new(
            vec![
                SequenceDataset::new(3, vec![Matrix::zeros(2, 3), Matrix::zeros(0, 3)]).unwrap(),
                SequenceDataset::new(2, vec![Matrix::zeros(1, 2), Matrix::zeros(1, 2)]).unwrap(),
            ],
            LabelMatrix::from_classes(vec![0, 1], 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(extract_features(&zeros, &bad), Err(Error::EmptySequence { index: 1 })));
    }
}
