//! Horizontal federation: each of `M` clients holds all `K` views of its own
//! samples. Clients optimize locally and send their transforms; the server
//! averages them with weights `N_l / N`.

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::fedcore::{
    run_rounds, weighted_average, ClientRole, Control, FedMessage, Payload, Protocol, RoundLog, ServerRole, Transport,
};
use crate::mvl::{self, init, HyperParams, MvlState, ViewSystem};
use crate::numerics::{orthonormal_init, Matrix, RngSeed};

#[derive(Clone, Debug, PartialEq)]
pub struct HfedConfig {
    pub hp: HyperParams,
    pub rounds: u32,
    /// Local iterations per round; `0` returns the broadcast unchanged.
    pub max_local: usize,
    /// Stop early once the aggregated transforms move less than this,
    /// relative; `0` disables it.
    pub drift_tol: f64,
}

impl HfedConfig {
    /// 20 rounds, 30 local iterations, no early stop.
    pub fn new(hp: HyperParams) -> Self {
        HfedConfig {
            hp,
            rounds: 20,
            max_local: 30,
            drift_tol: 0.0,
        }
    }
}

/// One client's local problem. Only `W_k^l` is ever sent.
pub struct HClient {
    data: MultiViewDataset,
    systems: Vec<ViewSystem>,
    y: Matrix,
    state: MvlState,
    hp: HyperParams,
    max_local: usize,
    local_iterations: Vec<usize>,
}

fn client_seed(seed: RngSeed, client: usize) -> RngSeed {
    seed.derive2(0x48, client as u64)
}

impl HClient {
    /// Starts from the server's transforms and orthonormal `Z_k^l`, `Z^l`.
    pub fn new(
        client: usize,
        data: MultiViewDataset,
        w_global: &[Matrix],
        hp: &HyperParams,
        max_local: usize,
        seed: RngSeed,
    ) -> Result<Self> {
        hp.validate(data.num_views())?;
        check_transforms(&data, w_global)?;
        let n = data.num_samples();
        let c = data.num_classes();
        let s = client_seed(seed, client);
        let zk = (0..data.num_views())
            .map(|k| orthonormal_init(n, c, init::zk_seed(s, k)))
            .collect::<Result<Vec<_>>>()?;
        let z = orthonormal_init(n, c, init::z_seed(s))?;
        let a = w_global.iter().map(|w| mvl::update_a(w, hp.epsilon)).collect();
        Ok(HClient {
            systems: data.views().iter().map(|v| ViewSystem::new(v.matrix())).collect(),
            y: data.labels().to_matrix(),
            data,
            state: MvlState {
                w: w_global.to_vec(),
                zk,
                z,
                a,
            },
            hp: hp.clone(),
            max_local,
            local_iterations: Vec::new(),
        })
    }

    pub fn num_samples(&self) -> usize {
        self.data.num_samples()
    }

    pub fn state(&self) -> &MvlState {
        &self.state
    }

    /// Local iterations used in each round so far.
    pub fn local_iterations(&self) -> &[usize] {
        &self.local_iterations
    }

    /// Adopts `w_global`, then repeats `Z_k` updates, the `Z` update and
    /// IRLS for every `W_k` until the local objective settles.
    pub fn client_step(&mut self, w_global: &[Matrix]) -> Result<Vec<Matrix>> {
        check_transforms(&self.data, w_global)?;
        self.state.w = w_global.to_vec();
        let hp = &self.hp;
        let mut prev = mvl::objective(&self.data, &self.state, hp)?;
        let mut used = 0;
        for _ in 0..self.max_local {
            used += 1;
            for (k, view) in self.data.views().iter().enumerate() {
                let xw = view.matrix().matmul(&self.state.w[k])?;
                self.state.zk[k] = mvl::update_zk(&xw, &self.state.z, hp.zeta[k])?;
            }
            self.state.z = mvl::update_z(&self.state.zk, &self.y, &hp.zeta, hp.eta)?;
            for (k, view) in self.data.views().iter().enumerate() {
                let out = mvl::irls_with_system(
                    view.matrix(),
                    &self.systems[k],
                    &self.state.zk[k],
                    Some(&self.state.w[k]),
                    hp.beta[k],
                    hp.epsilon,
                    hp.max_inner,
                    hp.tol,
                )?;
                self.state.w[k] = out.w_matrix;
                self.state.a[k] = out.a;
            }
            let f = mvl::objective(&self.data, &self.state, hp)?;
            let settled = hp.tol > 0.0 && (f - prev).abs() / prev.abs().max(1.0) < hp.tol;
            prev = f;
            if settled {
                break;
            }
        }
        self.local_iterations.push(used);
        Ok(self.state.w.clone())
    }
}

fn check_transforms(data: &MultiViewDataset, w: &[Matrix]) -> Result<()> {
    if w.len() != data.num_views() {
        return Err(Error::dims("hfed transforms", data.num_views(), w.len()));
    }
    for (v, m) in data.views().iter().zip(w) {
        if m.shape() != (v.cols(), data.num_classes()) {
            return Err(Error::dims(
                "hfed transforms",
                format!("{}x{}", v.cols(), data.num_classes()),
                format!("{:?}", m.shape()),
            ));
        }
    }
    Ok(())
}

impl ClientRole for HClient {
    fn step(&mut self, _round: u32, broadcast: Option<&FedMessage>) -> Result<Payload> {
        match broadcast.map(|m| &m.payload) {
            Some(Payload::TransformSet(w)) => Ok(Payload::TransformSet(self.client_step(w)?)),
            _ => Err(Error::Protocol("horizontal client expected TransformSet".into())),
        }
    }
}

/// Per-view `Σ_l (N_l/N) W_k^l`.
pub fn hfed_aggregate(w_sets: &[Vec<Matrix>], counts: &[usize]) -> Result<Vec<Matrix>> {
    if w_sets.is_empty() || w_sets.len() != counts.len() {
        return Err(Error::MissingClient {
            expected: counts.len().max(1),
            actual: w_sets.len(),
        });
    }
    let k = w_sets[0].len();
    let mut out = Vec::with_capacity(k);
    for view in 0..k {
        let mut mats = Vec::with_capacity(w_sets.len());
        for set in w_sets {
            let m = set
                .get(view)
                .ok_or_else(|| Error::dims("hfed_aggregate", format!("{k} views"), set.len()))?;
            if m.shape() != w_sets[0][view].shape() {
                return Err(Error::dims(
                    "hfed_aggregate",
                    format!("{:?}", w_sets[0][view].shape()),
                    format!("{:?}", m.shape()),
                ));
            }
            mats.push(m.data());
        }
        let (r, c) = w_sets[0][view].shape();
        out.push(Matrix::new(r, c, weighted_average(&mats, counts)?)?);
    }
    Ok(out)
}

pub struct HServer {
    w: Vec<Matrix>,
    counts: Vec<usize>,
    drift_tol: f64,
}

impl HServer {
    /// Random transforms from the same seed streams as the centralized trainer.
    pub fn new(dims: &[usize], classes: usize, counts: Vec<usize>, drift_tol: f64, seed: RngSeed) -> Self {
        let w = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| init::transform(d, classes, init::w_seed(seed, k)))
            .collect();
        HServer { w, counts, drift_tol }
    }

    pub fn w(&self) -> &[Matrix] {
        &self.w
    }
}

impl ServerRole for HServer {
    fn broadcast(&mut self, _round: u32) -> Result<Option<Payload>> {
        Ok(Some(Payload::TransformSet(self.w.clone())))
    }

    fn aggregate(&mut self, _round: u32, inbox: Vec<FedMessage>) -> Result<Control> {
        let sets = inbox
            .into_iter()
            .map(|m| match m.payload {
                Payload::TransformSet(w) => Ok(w),
                other => Err(Error::Protocol(format!("unexpected {} from {}", other.kind(), m.sender))),
            })
            .collect::<Result<Vec<_>>>()?;
        let w = hfed_aggregate(&sets, &self.counts)?;
        let mut moved = 0.0;
        let mut size = 0.0;
        for (new, old) in w.iter().zip(&self.w) {
            moved += new.dist_sq(old)?;
            size += old.frobenius_sq();
        }
        self.w = w;
        let drift = moved.sqrt() / size.sqrt().max(f64::MIN_POSITIVE);
        Ok(if self.drift_tol > 0.0 && drift < self.drift_tol {
            Control::Stop
        } else {
            Control::Continue
        })
    }
}

#[derive(Debug)]
pub struct HfedFit {
    pub w: Vec<Matrix>,
    pub log: RoundLog,
    /// Local iterations per round, per client.
    pub local_iterations: Vec<Vec<usize>>,
}

pub fn hfed_train(
    clients: &[MultiViewDataset],
    cfg: &HfedConfig,
    seed: RngSeed,
    transport: &dyn Transport,
) -> Result<HfedFit> {
    let first = clients.first().ok_or(Error::MissingClient { expected: 1, actual: 0 })?;
    let dims = first.dims();
    let c = first.num_classes();
    for d in clients {
        if d.dims() != dims || d.num_classes() != c {
            return Err(Error::dims("hfed_train", format!("{dims:?}"), format!("{:?}", d.dims())));
        }
        if d.num_samples() == 0 {
            return Err(Error::EmptyDataset);
        }
    }
    let counts = clients.iter().map(MultiViewDataset::num_samples).collect();
    let mut server = HServer::new(&dims, c, counts, cfg.drift_tol, seed);
    let mut parties = clients
        .iter()
        .enumerate()
        .map(|(l, d)| HClient::new(l, d.clone(), server.w(), &cfg.hp, cfg.max_local, seed))
        .collect::<Result<Vec<_>>>()?;
    let log = run_rounds(transport, Protocol::Horizontal, &mut server, &mut parties, cfg.rounds)?;
    Ok(HfedFit {
        w: server.w,
        log,
        local_iterations: parties.iter().map(|p| p.local_iterations.clone()).collect(),
    })
}

/// Local test phase on every client with the global transforms; no messages.
pub fn hfed_predict(
    test_sets: &[Vec<ViewMatrix>],
    w: &[Matrix],
    zeta: &[f64],
    tol: f64,
    max_outer: usize,
) -> Result<Vec<Matrix>> {
    test_sets
        .iter()
        .map(|views| mvl::predict_mvl(views, w, zeta, tol, max_outer))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_multiview, partition_horizontal, GeneratorSpec, LabelMatrix};
    use crate::fedcore::{InProcessTransport, MessageKind};

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let w = vec![vec![Matrix::gaussian(3, 2, RngSeed(1))]];
        assert_eq!(hfed_aggregate(&w, &[17]).unwrap(), w[0]);
        let sets = vec![vec![m(&[&[1.0]])], vec![m(&[&[5.0]])]];
        assert_eq!(hfed_aggregate(&sets, &[3, 1]).unwrap(), vec![m(&[&[2.0]])]);
        let same = vec![w[0].clone(); 3];
        assert_eq!(hfed_aggregate(&same, &[1, 5, 9]).unwrap(), w[0]);
        assert!(matches!(hfed_aggregate(&sets, &[3]), Err(Error::MissingClient { .. })));
    }

    #[test]
    fn zero_local_cap_returns_broadcast() {
        let d = gen_multiview(&GeneratorSpec::new(20, vec![3, 2], 2, 1)).unwrap();
        let server = HServer::new(&d.dims(), 2, vec![20], 0.0, RngSeed(4));
        let mut c = HClient::new(0, d, server.w(), &HyperParams::new(2), 0, RngSeed(4)).unwrap();
        let w = c.client_step(server.w()).unwrap();
        assert_eq!(w, server.w());
    }

    #[test]
    fn single_class_with_huge_eta_fits_labels() {
        let x = vec![ViewMatrix::new(Matrix::gaussian(12, 4, RngSeed(1)))];
        let y = LabelMatrix::from_classes(vec![1; 12], 2).unwrap();
        let d = MultiViewDataset::new(x, y.clone()).unwrap();
        let mut hp = HyperParams::uniform(1, 1e-6, 1.0, 1e8);
        hp.tol = 1e-12;
        let w0 = vec![Matrix::zeros(4, 2)];
        let mut c = HClient::new(0, d.clone(), &w0, &hp, 50, RngSeed(2)).unwrap();
        let w = c.client_step(&w0).unwrap();
        assert!(c.state().z.max_abs_diff(&y.to_matrix()).unwrap() < 1e-6);
        let lsq = mvl::irls_solve_w(d.view(0).matrix(), &y.to_matrix(), None, 1e-6, 1e-8, 50, 1e-14)
            .unwrap()
            .w_matrix;
        assert!(w[0].max_abs_diff(&lsq).unwrap() < 1e-3, "{:?} vs {:?}", w[0], lsq);
    }

    #[test]
    fn single_client_matches_reordered_centralized_loop() {
        let d = gen_multiview(&GeneratorSpec::new(30, vec![3, 2], 2, 8)).unwrap();
        let mut hp = HyperParams::new(2);
        hp.tol = 0.0;
        let cfg = HfedConfig {
            hp: hp.clone(),
            rounds: 1,
            max_local: 6,
            drift_tol: 0.0,
        };
        let fit = hfed_train(std::slice::from_ref(&d), &cfg, RngSeed(3), &InProcessTransport::new()).unwrap();

        // Z_k, then Z, then W, written out from the primitives.
        let s = client_seed(RngSeed(3), 0);
        let mut w: Vec<Matrix> = (0..2)
            .map(|k| init::transform(d.dims()[k], 2, init::w_seed(RngSeed(3), k)))
            .collect();
        let mut zk: Vec<Matrix> = (0..2).map(|k| orthonormal_init(30, 2, init::zk_seed(s, k)).unwrap()).collect();
        let mut z = orthonormal_init(30, 2, init::z_seed(s)).unwrap();
        let y = d.labels().to_matrix();
        for _ in 0..6 {
            for k in 0..2 {
                zk[k] = mvl::update_zk(&d.view(k).matrix().matmul(&w[k]).unwrap(), &z, 8.0).unwrap();
            }
            z = mvl::update_z(&zk, &y, &[8.0, 8.0], 8.0).unwrap();
            for k in 0..2 {
                w[k] = mvl::irls_solve_w(d.view(k).matrix(), &zk[k], Some(&w[k]), 4.0, 1e-8, 20, 0.0)
                    .unwrap()
                    .w_matrix;
            }
        }
        for (a, b) in fit.w.iter().zip(&w) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn train_log_and_determinism() {
        let d = gen_multiview(&GeneratorSpec::new(80, vec![3, 2, 2], 2, 2)).unwrap();
        let parts = partition_horizontal(&d, 4, true, RngSeed(1)).unwrap();
        let mut cfg = HfedConfig::new(HyperParams::new(3));
        cfg.rounds = 3;
        let a = hfed_train(&parts, &cfg, RngSeed(9), &InProcessTransport::new()).unwrap();
        let b = hfed_train(&parts, &cfg, RngSeed(9), &InProcessTransport::new()).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.log.fingerprint(), b.log.fingerprint());
        assert_eq!(a.log.kinds().into_iter().collect::<Vec<_>>(), vec![MessageKind::TransformSet]);
        assert_eq!(a.log.num_rounds(), 3);
    }

    #[test]
    fn predict_examples() {
        let x = ViewMatrix::new(Matrix::gaussian(5, 3, RngSeed(1)));
        let w = vec![Matrix::gaussian(3, 2, RngSeed(2))];
        let z = hfed_predict(&[vec![x.clone()]], &w, &[4.0], 1e-6, 10).unwrap();
        assert_eq!(z[0], x.matrix().matmul(&w[0]).unwrap());
        let empty = hfed_predict(&[vec![ViewMatrix::new(Matrix::zeros(0, 3))]], &w, &[4.0], 1e-6, 10).unwrap();
        assert_eq!(empty[0].shape(), (0, 2));
    }
}
