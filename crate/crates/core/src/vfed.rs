//! Vertical federation: client `k` holds view `k` of every sample, the
//! server holds the consensus `Z` and the shared labels `Y`.
//!
//! Each round the server broadcasts `Z`; every client runs its IRLS solve
//! for `W_k`, updates `Z_k` and returns `(ζ_k, Z_k)`; the server then
//! updates `Z`. This is the centralized block update re-sited, so the two
//! produce the same iterates.

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};
use crate::fedcore::{run_rounds, ClientRole, Control, FedMessage, Payload, Protocol, RoundLog, ServerRole, Transport};
use crate::mvl::{self, init, HyperParams, ViewSystem};
use crate::numerics::{orthonormal_init, Matrix, RngSeed};

/// One view's party. `X_k` never leaves this struct.
pub struct VClient {
    view: usize,
    x: ViewMatrix,
    sys: ViewSystem,
    w: Matrix,
    zk: Matrix,
    a: Vec<f64>,
    beta: f64,
    zeta: f64,
    epsilon: f64,
    max_inner: usize,
    tol: f64,
    history: Option<Vec<(Matrix, Matrix)>>,
}

impl VClient {
    /// Initializes `W_k` and `Z_k` from the same seed streams as the
    /// centralized trainer.
    pub fn new(view: usize, x: ViewMatrix, classes: usize, hp: &HyperParams, seed: RngSeed) -> Result<Self> {
        let w = init::transform(x.cols(), classes, init::w_seed(seed, view));
        let zk = orthonormal_init(x.rows(), classes, init::zk_seed(seed, view))?;
        let a = mvl::update_a(&w, hp.epsilon);
        Ok(VClient {
            view,
            sys: ViewSystem::new(x.matrix()),
            x,
            w,
            zk,
            a,
            beta: hp.beta[view],
            zeta: hp.zeta[view],
            epsilon: hp.epsilon,
            max_inner: hp.max_inner,
            tol: hp.tol,
            history: None,
        })
    }

    pub fn record_history(&mut self) {
        self.history = Some(Vec::new());
    }

    pub fn view(&self) -> usize {
        self.view
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn zk(&self) -> &Matrix {
        &self.zk
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// IRLS for `W_k` then the `Z_k` update against the server's `Z`.
    /// Returns what the client sends: `(ζ_k, Z_k)`.
    pub fn client_step(&mut self, z: &Matrix) -> Result<(f64, Matrix)> {
        if z.shape() != self.zk.shape() {
            return Err(Error::dims(
                "vfed client step",
                format!("{:?}", self.zk.shape()),
                format!("{:?}", z.shape()),
            ));
        }
        let (out, zk) = mvl::view_block_step(
            self.x.matrix(),
            &self.sys,
            &self.w,
            &self.zk,
            z,
            self.beta,
            self.zeta,
            self.epsilon,
            self.max_inner,
            self.tol,
        )?;
        self.w = out.w_matrix;
        self.a = out.a;
        self.zk = zk;
        if let Some(h) = &mut self.history {
            h.push((self.w.clone(), self.zk.clone()));
        }
        Ok((self.zeta, self.zk.clone()))
    }
}

impl ClientRole for VClient {
    fn step(&mut self, _round: u32, broadcast: Option<&FedMessage>) -> Result<Payload> {
        match broadcast.map(|m| &m.payload) {
            Some(Payload::ConsensusZ(z)) => {
                let (zeta, z) = self.client_step(z)?;
                Ok(Payload::PseudoLabel { zeta, z })
            }
            _ => Err(Error::Protocol("vertical client expected ConsensusZ".into())),
        }
    }
}

/// `Z = update_Z(Z_k…, Y, ζ…, η)` over the buffered client messages.
pub fn vfed_server_step(buffer: &[(f64, Matrix)], y: &Matrix, eta: f64, expected: usize) -> Result<Matrix> {
    if buffer.len() != expected {
        return Err(Error::MissingClient {
            expected,
            actual: buffer.len(),
        });
    }
    let zeta: Vec<f64> = buffer.iter().map(|(s, _)| *s).collect();
    let zk: Vec<Matrix> = buffer.iter().map(|(_, m)| m.clone()).collect();
    mvl::update_z(&zk, y, &zeta, eta)
}

fn unpack_pseudo_labels(inbox: Vec<FedMessage>, test: bool) -> Result<Vec<(f64, Matrix)>> {
    inbox
        .into_iter()
        .map(|m| match m.payload {
            Payload::PseudoLabel { zeta, z } if !test => Ok((zeta, z)),
            Payload::TestPseudoLabel { zeta, z } if test => Ok((zeta, z)),
            other => Err(Error::Protocol(format!("unexpected {} from {}", other.kind(), m.sender))),
        })
        .collect()
}

/// Holds `Z` and `Y`; never sees `X_k` or `W_k`.
pub struct VServer {
    z: Matrix,
    y: Matrix,
    eta: f64,
    tol: f64,
    views: usize,
    drifts: Vec<f64>,
    history: Option<Vec<Matrix>>,
}

impl VServer {
    pub fn new(y: Matrix, views: usize, hp: &HyperParams, seed: RngSeed) -> Result<Self> {
        let z = orthonormal_init(y.rows(), y.cols(), init::z_seed(seed))?;
        Ok(VServer {
            z,
            y,
            eta: hp.eta,
            tol: hp.tol,
            views,
            drifts: Vec::new(),
            history: None,
        })
    }

    pub fn record_history(&mut self) {
        self.history = Some(Vec::new());
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    /// Relative consensus drift of every completed round.
    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }
}

impl ServerRole for VServer {
    fn broadcast(&mut self, _round: u32) -> Result<Option<Payload>> {
        Ok(Some(Payload::ConsensusZ(self.z.clone())))
    }

    fn aggregate(&mut self, _round: u32, inbox: Vec<FedMessage>) -> Result<Control> {
        let buffer = unpack_pseudo_labels(inbox, false)?;
        let z = vfed_server_step(&buffer, &self.y, self.eta, self.views)?;
        let drift = mvl::consensus_drift(&self.z, &z)?;
        self.drifts.push(drift);
        self.z = z;
        if let Some(h) = &mut self.history {
            h.push(self.z.clone());
        }
        Ok(if self.tol > 0.0 && drift < self.tol {
            Control::Stop
        } else {
            Control::Continue
        })
    }
}

/// Per-round iterates, indexed `[round][view]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VfedHistory {
    pub w: Vec<Vec<Matrix>>,
    pub zk: Vec<Vec<Matrix>>,
    pub z: Vec<Matrix>,
}

#[derive(Debug)]
pub struct VfedFit {
    pub w: Vec<Matrix>,
    pub zk: Vec<Matrix>,
    pub z: Matrix,
    pub log: RoundLog,
    pub history: Option<VfedHistory>,
}

/// Runs up to `hp.max_outer` rounds, stopping early once the consensus drift
/// falls below `hp.tol`.
pub fn vfed_train(
    data: &MultiViewDataset,
    hp: &HyperParams,
    seed: RngSeed,
    transport: &dyn Transport,
    record_history: bool,
) -> Result<VfedFit> {
    let k = data.num_views();
    hp.validate(k)?;
    let c = data.num_classes();
    let mut clients = data
        .views()
        .iter()
        .enumerate()
        .map(|(v, x)| VClient::new(v, x.clone(), c, hp, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut server = VServer::new(data.labels().to_matrix(), k, hp, seed)?;
    if record_history {
        server.record_history();
        clients.iter_mut().for_each(VClient::record_history);
    }
    let log = run_rounds(transport, Protocol::Vertical, &mut server, &mut clients, hp.max_outer as u32)?;

    let history = server.history.take().map(|z| {
        let rounds = z.len();
        let mut h = VfedHistory {
            w: vec![Vec::with_capacity(k); rounds],
            zk: vec![Vec::with_capacity(k); rounds],
            z,
        };
        for client in &mut clients {
            for (r, (w, zk)) in client.history.take().unwrap_or_default().into_iter().enumerate() {
                h.w[r].push(w);
                h.zk[r].push(zk);
            }
        }
        h
    });
    Ok(VfedFit {
        w: clients.iter().map(|c| c.w.clone()).collect(),
        zk: clients.iter().map(|c| c.zk.clone()).collect(),
        z: server.z,
        log,
        history,
    })
}

struct VTestClient {
    xw: Matrix,
    zk: Matrix,
    zeta: f64,
}

impl ClientRole for VTestClient {
    fn step(&mut self, _round: u32, broadcast: Option<&FedMessage>) -> Result<Payload> {
        match broadcast.map(|m| &m.payload) {
            None => {}
            Some(Payload::TestConsensus(z)) => self.zk = mvl::update_zk(&self.xw, z, self.zeta)?,
            Some(other) => {
                return Err(Error::Protocol(format!("vertical test client got {}", other.kind())));
            }
        }
        Ok(Payload::TestPseudoLabel {
            zeta: self.zeta,
            z: self.zk.clone(),
        })
    }
}

/// Evaluates the test objective one round late: the `Z_k^test` that answer
/// `Z^(r)` arrive in round `r + 1`.
struct VTestServer {
    z: Option<Matrix>,
    prev: Option<f64>,
    tol: f64,
    max_outer: usize,
}

impl ServerRole for VTestServer {
    fn broadcast(&mut self, _round: u32) -> Result<Option<Payload>> {
        Ok(self.z.clone().map(Payload::TestConsensus))
    }

    fn aggregate(&mut self, round: u32, inbox: Vec<FedMessage>) -> Result<Control> {
        let buffer = unpack_pseudo_labels(inbox, true)?;
        let zeta: Vec<f64> = buffer.iter().map(|(s, _)| *s).collect();
        let zk: Vec<Matrix> = buffer.into_iter().map(|(_, m)| m).collect();
        if let Some(z) = &self.z {
            let r = round as usize - 1;
            let f = mvl::test_objective(&zk, z, &zeta)?;
            if mvl::test_converged(r, self.prev, f, self.tol) || r >= self.max_outer {
                return Ok(Control::Stop);
            }
            self.prev = Some(f);
        }
        self.z = Some(mvl::test_consensus(&zk, &zeta)?);
        Ok(Control::Continue)
    }
}

/// Federated test phase; returns `Z_test` and the message log.
pub fn vfed_predict(
    test: &[ViewMatrix],
    w: &[Matrix],
    zeta: &[f64],
    tol: f64,
    max_outer: usize,
    transport: &dyn Transport,
) -> Result<(Matrix, RoundLog)> {
    if test.len() != w.len() || w.len() != zeta.len() || w.is_empty() {
        return Err(Error::dims("vfed_predict", format!("{} views", w.len()), test.len()));
    }
    if let Some(z) = zeta.iter().find(|&&z| !(z > 0.0)) {
        return Err(Error::InvalidHyperParams(format!("zeta must be positive, got {z}")));
    }
    let mut clients = Vec::with_capacity(w.len());
    for ((x, wk), &s) in test.iter().zip(w).zip(zeta) {
        if x.cols() != wk.rows() {
            return Err(Error::dims("vfed_predict", format!("{} columns", wk.rows()), x.cols()));
        }
        let xw = x.matrix().matmul(wk)?;
        clients.push(VTestClient {
            zk: xw.clone(),
            xw,
            zeta: s,
        });
    }
    let max_outer = max_outer.max(1);
    let mut server = VTestServer {
        z: None,
        prev: None,
        tol,
        max_outer,
    };
    let log = run_rounds(transport, Protocol::Vertical, &mut server, &mut clients, max_outer as u32 + 1)?;
    let z = server.z.ok_or_else(|| Error::Protocol("test phase ended without a consensus".into()))?;
    Ok((z, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_multiview, GeneratorSpec};
    use crate::fedcore::{InProcessTransport, MessageKind};

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn server_step_examples() {
        let z = vfed_server_step(&[(1.0, m(&[&[1.0]]))], &m(&[&[0.0]]), 1.0, 1).unwrap();
        assert_eq!(z.data(), &[0.5]);
        let y = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let z = vfed_server_step(&[(2.0, y.clone()), (3.0, y.clone())], &y, 4.0, 2).unwrap();
        assert_eq!(z, y);
        assert!(matches!(
            vfed_server_step(&[(1.0, y.clone())], &y, 1.0, 2),
            Err(Error::MissingClient { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn server_step_matches_update_z() {
        let y = Matrix::gaussian(7, 3, RngSeed(1));
        let buffer: Vec<(f64, Matrix)> = (0..3).map(|k| (1.0 + k as f64, Matrix::gaussian(7, 3, RngSeed(10 + k)))).collect();
        let zk: Vec<Matrix> = buffer.iter().map(|(_, m)| m.clone()).collect();
        let direct = mvl::update_z(&zk, &y, &[1.0, 2.0, 3.0], 0.7).unwrap();
        assert_eq!(vfed_server_step(&buffer, &y, 0.7, 3).unwrap().to_bits(), direct.to_bits());
    }

    #[test]
    fn client_step_properties() {
        let data = gen_multiview(&GeneratorSpec::new(20, vec![3, 2], 2, 1)).unwrap();
        let mut hp = HyperParams::new(2);
        hp.zeta = vec![0.0, 2.0];
        let z = Matrix::gaussian(20, 2, RngSeed(9));
        let mut c = VClient::new(0, data.view(0).clone(), 2, &hp, RngSeed(3)).unwrap();
        let (_, zk) = c.client_step(&z).unwrap();
        let xw = data.view(0).matrix().matmul(c.w()).unwrap();
        assert_eq!(zk, xw);

        let mut a = VClient::new(1, data.view(1).clone(), 2, &hp, RngSeed(3)).unwrap();
        let mut b = VClient::new(1, data.view(1).clone(), 2, &hp, RngSeed(3)).unwrap();
        assert_eq!(a.client_step(&z).unwrap(), b.client_step(&z).unwrap());
        assert!(matches!(a.client_step(&Matrix::zeros(3, 2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn train_matches_centralized_and_uses_allowlisted_kinds() {
        let data = gen_multiview(&GeneratorSpec::new(40, vec![4, 3, 2], 2, 5)).unwrap();
        let mut hp = HyperParams::new(3);
        hp.max_outer = 10;
        hp.stop = mvl::StopRule::ConsensusDrift;
        let fit = vfed_train(&data, &hp, RngSeed(7), &InProcessTransport::new(), false).unwrap();
        let central = mvl::train_mvl(&data, &hp, RngSeed(7)).unwrap();
        assert_eq!(fit.z.to_bits(), central.state.z.to_bits());
        for k in 0..3 {
            assert_eq!(fit.w[k].to_bits(), central.state.w[k].to_bits());
        }
        assert_eq!(fit.log.num_rounds(), central.trace.len() - 1);
        let kinds: Vec<_> = fit.log.kinds().into_iter().collect();
        assert_eq!(kinds, vec![MessageKind::ConsensusZ, MessageKind::PseudoLabel]);
    }

    #[test]
    fn predict_examples() {
        let x = ViewMatrix::new(Matrix::gaussian(6, 3, RngSeed(1)));
        let w = Matrix::gaussian(3, 2, RngSeed(2));
        let t = InProcessTransport::new();
        let (z, _) = vfed_predict(std::slice::from_ref(&x), std::slice::from_ref(&w), &[3.0], 1e-6, 20, &t).unwrap();
        assert_eq!(z, x.matrix().matmul(&w).unwrap());

        let x2 = ViewMatrix::new(Matrix::gaussian(6, 4, RngSeed(3)));
        let w2 = Matrix::gaussian(4, 2, RngSeed(4));
        let (z, log) = vfed_predict(&[x.clone(), x2.clone()], &[w.clone(), w2.clone()], &[2.0, 2.0], 1e-6, 1, &t).unwrap();
        let mean = x.matrix().matmul(&w).unwrap().add(&x2.matrix().matmul(&w2).unwrap()).unwrap().scale(0.5);
        assert!(z.max_abs_diff(&mean).unwrap() < 1e-15);
        let kinds: Vec<_> = log.kinds().into_iter().collect();
        assert_eq!(kinds, vec![MessageKind::TestConsensus, MessageKind::TestPseudoLabel]);
    }

    #[test]
    fn predict_matches_centralized() {
        let views: Vec<ViewMatrix> = (0..3).map(|k| ViewMatrix::new(Matrix::gaussian(15, 2 + k, RngSeed(k as u64)))).collect();
        let w: Vec<Matrix> = (0..3).map(|k| Matrix::gaussian(2 + k, 3, RngSeed(50 + k as u64))).collect();
        let zeta = [1.0, 2.5, 7.0];
        for (tol, cap) in [(1e-6, 100), (0.0, 7), (1e-3, 3)] {
            let central = mvl::predict_mvl(&views, &w, &zeta, tol, cap).unwrap();
            let (fed, _) = vfed_predict(&views, &w, &zeta, tol, cap, &InProcessTransport::new()).unwrap();
            assert_eq!(fed.to_bits(), central.to_bits());
        }
    }
}
