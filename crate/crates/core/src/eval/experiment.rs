use super::config::{DataSource, Mode, RunConfig};
use super::metrics::{compute_metrics, Metrics};
use super::model::Model;
use super::report::MetricsReport;
use crate::data::{
    gen_complementary, gen_multiview, gen_sequences, load_dataset, load_sequences, read_manifest, split_stratified,
    stratified_assignment, GeneratorSpec, MultiViewDataset, MultiViewSequences, SeqGeneratorSpec, ViewMatrix,
};
use crate::error::{Error, Result};
use crate::fedcore::InProcessTransport;
use crate::hfed::{hfed_predict, hfed_train, HfedConfig};
use crate::mvl::{train_mvl, train_single_view, HyperParams, StopRule, TraceRow};
use crate::numerics::{Matrix, RngSeed};
use crate::sfed::{extract_features, sfed_train, train_encoders_alone, EncoderParams, TrainerConfig};
use crate::vfed::{vfed_predict, vfed_train};

const GEN_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;
const PARTITION_STREAM: u64 = 3;
const INIT_STREAM: u64 = 4;
const ENCODER_STREAM: u64 = 5;

/// Candidate values for `ζ = η` when grid search is on.
pub const ZETA_GRID: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Clone, Debug)]
pub struct RepeatOutcome {
    pub metrics: Metrics,
    /// `None` for modes without a single shared model.
    pub model: Option<Model>,
    pub trace: Vec<TraceRow>,
    /// Selected `(ζ, η)`.
    pub zeta_eta: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    pub repeats: Vec<RepeatOutcome>,
}

/// Input data of one repeat, before any split.
#[derive(Clone, Debug)]
pub enum Source {
    Views(MultiViewDataset),
    Clients(Vec<MultiViewSequences>),
}

#[derive(Clone, Debug)]
struct Splits<T> {
    train: T,
    val: T,
    test: T,
}

pub fn repeat_seed(cfg: &RunConfig, repeat: usize) -> RngSeed {
    RngSeed(cfg.seed.wrapping_add(repeat as u64))
}

fn informative(cfg: &RunConfig) -> Vec<bool> {
    cfg.informative.clone().unwrap_or_else(|| vec![true; cfg.dims.len()])
}

/// Generates or loads the data for one repeat. Generated data differs per
/// repeat; loaded data does not.
pub fn load_source(cfg: &RunConfig, seed: RngSeed) -> Result<Source> {
    let gen_seed = seed.derive(GEN_STREAM);
    let spec = || GeneratorSpec {
        samples: cfg.samples,
        dims: cfg.dims.clone(),
        classes: cfg.classes,
        noise: cfg.noise,
        margin: cfg.margin,
        informative: informative(cfg),
        seed: gen_seed,
    };
    match &cfg.data {
        DataSource::Multiview => Ok(Source::Views(gen_multiview(&spec())?)),
        DataSource::Complementary => Ok(Source::Views(gen_complementary(&spec())?)),
        DataSource::Sequences => {
            let all = gen_sequences(&SeqGeneratorSpec {
                samples: cfg.samples,
                step_dims: cfg.dims.clone(),
                min_len: cfg.min_len,
                max_len: cfg.max_len,
                classes: cfg.classes,
                drift: cfg.drift.clone(),
                noise: cfg.noise,
                seed: gen_seed,
            })?;
            let p = stratified_assignment(all.labels(), cfg.clients, true, seed.derive(PARTITION_STREAM))?;
            Ok(Source::Clients(p.clients.iter().map(|idx| all.select_rows(idx)).collect()))
        }
        DataSource::Path(dir) => match read_manifest(dir)?.get("kind") {
            Some("multiview") => Ok(Source::Views(load_dataset(dir)?)),
            Some("sequences") => Ok(Source::Clients(load_sequences(dir)?)),
            other => Err(Error::config(
                "data",
                format!("{} has unknown dataset kind {other:?}", dir.display()),
            )),
        },
    }
}

fn hyper_params(cfg: &RunConfig, views: usize, zeta: f64, eta: f64) -> HyperParams {
    let mut hp = HyperParams::uniform(views, cfg.beta, zeta, eta);
    hp.epsilon = cfg.epsilon;
    hp.tol = cfg.tol;
    hp.max_outer = cfg.max_outer;
    hp.max_inner = cfg.max_inner;
    hp.stop = StopRule::ConsensusDrift;
    hp
}

fn candidates(cfg: &RunConfig) -> Vec<(f64, f64)> {
    if cfg.grid {
        ZETA_GRID.iter().map(|&z| (z, z)).collect()
    } else {
        vec![(cfg.zeta, cfg.eta)]
    }
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len().max(1) as f64
}

/// Picks the candidate with the best validation accuracy; earlier candidates
/// win ties.
fn select<T>(cands: &[(f64, f64)], mut fit: impl FnMut(f64, f64) -> Result<(T, f64)>) -> Result<(T, (f64, f64))> {
    let mut best: Option<(T, f64, (f64, f64))> = None;
    for &(z, e) in cands {
        let (fitted, acc) = fit(z, e)?;
        if best.as_ref().is_none_or(|b| acc > b.1) {
            best = Some((fitted, acc, (z, e)));
        }
    }
    let (fitted, _, pick) = best.expect("at least one candidate");
    Ok((fitted, pick))
}

fn split_views(data: &MultiViewDataset, cfg: &RunConfig, seed: RngSeed) -> Result<Splits<MultiViewDataset>> {
    let s = split_stratified(data.labels(), cfg.split, seed)?;
    Ok(Splits {
        train: data.select_rows(&s.train),
        val: data.select_rows(&s.validation),
        test: data.select_rows(&s.test),
    })
}

fn split_sequences(
    data: &MultiViewSequences,
    cfg: &RunConfig,
    seed: RngSeed,
) -> Result<Splits<MultiViewSequences>> {
    let s = split_stratified(data.labels(), cfg.split, seed)?;
    Ok(Splits {
        train: data.select_rows(&s.train),
        val: data.select_rows(&s.validation),
        test: data.select_rows(&s.test),
    })
}

struct LinearFit {
    w: Vec<Matrix>,
    zeta: Vec<f64>,
    trace: Vec<TraceRow>,
}

impl LinearFit {
    fn model(&self, cfg: &RunConfig, mode: Mode, encoders: Vec<EncoderParams>) -> Model {
        Model {
            mode: mode.name().to_string(),
            w: self.w.clone(),
            zeta: self.zeta.clone(),
            tol: cfg.tol,
            max_outer: cfg.max_outer,
            views: if encoders.is_empty() { cfg.views.clone() } else { None },
            encoders,
        }
    }

    fn predict(&self, cfg: &RunConfig, mode: Mode, views: &[ViewMatrix]) -> Result<Vec<usize>> {
        let z = if mode == Mode::Vfed {
            vfed_predict(views, &self.w, &self.zeta, cfg.tol, cfg.max_outer, &InProcessTransport::new())?.0
        } else {
            crate::mvl::predict_mvl(views, &self.w, &self.zeta, cfg.tol, cfg.max_outer)?
        };
        Ok(z.row_argmax())
    }
}

/// Centralized or vertically federated fit on one training set.
fn fit_linear(
    cfg: &RunConfig,
    mode: Mode,
    train: &MultiViewDataset,
    zeta: f64,
    eta: f64,
    seed: RngSeed,
) -> Result<LinearFit> {
    let k = train.num_views();
    let hp = hyper_params(cfg, k, zeta, eta);
    match mode {
        Mode::SingleView => {
            let beta = cfg.beta * (1.0 + 1.0 / zeta + 1.0 / eta);
            let w = train_single_view(
                train.view(0),
                &train.labels().to_matrix(),
                beta,
                cfg.epsilon,
                cfg.max_outer.max(1) * cfg.max_inner,
                cfg.tol,
            )?;
            Ok(LinearFit {
                w: vec![w],
                zeta: hp.zeta,
                trace: Vec::new(),
            })
        }
        Mode::Vfed => {
            let fit = vfed_train(train, &hp, seed, &InProcessTransport::new(), false)?;
            Ok(LinearFit {
                w: fit.w,
                zeta: hp.zeta,
                trace: Vec::new(),
            })
        }
        _ => {
            let fit = train_mvl(train, &hp, seed)?;
            Ok(LinearFit {
                w: fit.state.w,
                zeta: hp.zeta,
                trace: fit.trace,
            })
        }
    }
}

fn run_central(cfg: &RunConfig, data: &MultiViewDataset, seed: RngSeed) -> Result<RepeatOutcome> {
    let data = match &cfg.views {
        Some(mask) => data.select_views(mask)?,
        None => data.clone(),
    };
    let s = split_views(&data, cfg, seed.derive(SPLIT_STREAM))?;
    let init = seed.derive(INIT_STREAM);
    let (fit, (zeta, eta)) = select(&candidates(cfg), |z, e| {
        let fit = fit_linear(cfg, cfg.mode, &s.train, z, e, init)?;
        let acc = accuracy(&fit.predict(cfg, cfg.mode, s.val.views())?, s.val.labels().classes());
        Ok((fit, acc))
    })?;
    let pred = fit.predict(cfg, cfg.mode, s.test.views())?;
    Ok(RepeatOutcome {
        metrics: compute_metrics(&pred, s.test.labels().classes(), cfg.positive_class)?,
        model: Some(fit.model(cfg, cfg.mode, Vec::new())),
        trace: fit.trace,
        zeta_eta: (zeta, eta),
    })
}

fn pooled_metrics(
    cfg: &RunConfig,
    preds: impl IntoIterator<Item = Vec<usize>>,
    sets: &[&MultiViewDataset],
) -> Result<Metrics> {
    let pred: Vec<usize> = preds.into_iter().flatten().collect();
    let truth: Vec<usize> = sets.iter().flat_map(|d| d.labels().classes().iter().copied()).collect();
    compute_metrics(&pred, &truth, cfg.positive_class)
}

/// H-FedMV over client splits; model selection uses pooled validation accuracy.
fn run_hfed(
    cfg: &RunConfig,
    clients: &[Splits<MultiViewDataset>],
    seed: RngSeed,
) -> Result<(LinearFit, Metrics, (f64, f64))> {
    let trains: Vec<MultiViewDataset> = clients.iter().map(|c| c.train.clone()).collect();
    let k = trains.first().ok_or(Error::MissingClient { expected: 1, actual: 0 })?.num_views();
    let predict = |fit: &LinearFit, sets: &[&MultiViewDataset]| -> Result<Vec<Vec<usize>>> {
        let views: Vec<Vec<ViewMatrix>> = sets.iter().map(|d| d.views().to_vec()).collect();
        Ok(hfed_predict(&views, &fit.w, &fit.zeta, cfg.tol, cfg.max_outer)?
            .iter()
            .map(Matrix::row_argmax)
            .collect())
    };
    let vals: Vec<&MultiViewDataset> = clients.iter().map(|c| &c.val).collect();
    let (fit, pick) = select(&candidates(cfg), |z, e| {
        let hcfg = HfedConfig {
            hp: hyper_params(cfg, k, z, e),
            rounds: cfg.rounds,
            max_local: cfg.max_local,
            drift_tol: 0.0,
        };
        let out = hfed_train(&trains, &hcfg, seed.derive(INIT_STREAM), &InProcessTransport::new())?;
        let fit = LinearFit {
            w: out.w,
            zeta: hcfg.hp.zeta,
            trace: Vec::new(),
        };
        let acc = pooled_metrics(cfg, predict(&fit, &vals)?, &vals)?.accuracy;
        Ok((fit, acc))
    })?;
    let tests: Vec<&MultiViewDataset> = clients.iter().map(|c| &c.test).collect();
    let metrics = pooled_metrics(cfg, predict(&fit, &tests)?, &tests)?;
    Ok((fit, metrics, pick))
}

/// Independent multi-view model per client, each tuned on its own validation
/// split; metrics pool every client's test predictions.
fn run_local(cfg: &RunConfig, clients: &[Splits<MultiViewDataset>], seed: RngSeed) -> Result<Metrics> {
    let mut preds = Vec::with_capacity(clients.len());
    for (l, c) in clients.iter().enumerate() {
        let init = seed.derive2(INIT_STREAM, l as u64);
        let (fit, _) = select(&candidates(cfg), |z, e| {
            let fit = fit_linear(cfg, Mode::Mvl, &c.train, z, e, init)?;
            let acc = accuracy(&fit.predict(cfg, Mode::Mvl, c.val.views())?, c.val.labels().classes());
            Ok((fit, acc))
        })?;
        preds.push(fit.predict(cfg, Mode::Mvl, c.test.views())?);
    }
    let tests: Vec<&MultiViewDataset> = clients.iter().map(|c| &c.test).collect();
    pooled_metrics(cfg, preds, &tests)
}

fn run_horizontal_views(cfg: &RunConfig, data: &MultiViewDataset, seed: RngSeed) -> Result<RepeatOutcome> {
    let data = match &cfg.views {
        Some(mask) => data.select_views(mask)?,
        None => data.clone(),
    };
    let p = stratified_assignment(data.labels(), cfg.clients, true, seed.derive(PARTITION_STREAM))?;
    let clients = p
        .clients
        .iter()
        .enumerate()
        .map(|(l, idx)| split_views(&data.select_rows(idx), cfg, seed.derive2(SPLIT_STREAM, l as u64)))
        .collect::<Result<Vec<_>>>()?;
    if cfg.mode == Mode::LocalMv {
        return Ok(RepeatOutcome {
            metrics: run_local(cfg, &clients, seed)?,
            model: None,
            trace: Vec::new(),
            zeta_eta: (cfg.zeta, cfg.eta),
        });
    }
    let (fit, metrics, pick) = run_hfed(cfg, &clients, seed)?;
    Ok(RepeatOutcome {
        metrics,
        model: Some(fit.model(cfg, Mode::Hfed, Vec::new())),
        trace: Vec::new(),
        zeta_eta: pick,
    })
}

fn trainer_config(cfg: &RunConfig, seed: RngSeed) -> TrainerConfig {
    TrainerConfig {
        batch_size: cfg.batch_size,
        local_epochs: cfg.local_epochs,
        learning_rate: cfg.learning_rate,
        rounds: cfg.rounds,
        embed_dim: cfg.embed_dim,
        seed: seed.derive(ENCODER_STREAM),
    }
}

fn embed(enc: &[EncoderParams], s: &Splits<MultiViewSequences>) -> Result<Splits<MultiViewDataset>> {
    Ok(Splits {
        train: extract_features(enc, &s.train)?,
        val: extract_features(enc, &s.val)?,
        test: extract_features(enc, &s.test)?,
    })
}

fn run_sequential(cfg: &RunConfig, clients: &[MultiViewSequences], seed: RngSeed) -> Result<RepeatOutcome> {
    let splits = clients
        .iter()
        .enumerate()
        .map(|(l, c)| split_sequences(c, cfg, seed.derive2(SPLIT_STREAM, l as u64)))
        .collect::<Result<Vec<_>>>()?;
    let tcfg = trainer_config(cfg, seed);
    let trains: Vec<MultiViewSequences> = splits.iter().map(|s| s.train.clone()).collect();
    let encoders: Vec<Vec<EncoderParams>> = match cfg.mode {
        Mode::Sfed => vec![sfed_train(&trains, &tcfg, &InProcessTransport::new())?.params; splits.len()],
        Mode::CentralSeqHfed => {
            let pooled = MultiViewSequences::concat(&trains.iter().collect::<Vec<_>>())?;
            vec![train_encoders_alone(&pooled, &tcfg)?; splits.len()]
        }
        _ => trains
            .iter()
            .map(|t| train_encoders_alone(t, &tcfg))
            .collect::<Result<_>>()?,
    };
    let features = splits
        .iter()
        .zip(&encoders)
        .map(|(s, e)| embed(e, s))
        .collect::<Result<Vec<_>>>()?;
    if cfg.mode == Mode::LocalSeqLocalMv {
        return Ok(RepeatOutcome {
            metrics: run_local(cfg, &features, seed)?,
            model: None,
            trace: Vec::new(),
            zeta_eta: (cfg.zeta, cfg.eta),
        });
    }
    let (fit, metrics, pick) = run_hfed(cfg, &features, seed)?;
    let model = match cfg.mode {
        Mode::Sfed | Mode::CentralSeqHfed => Some(fit.model(cfg, cfg.mode, encoders[0].clone())),
        _ => None,
    };
    Ok(RepeatOutcome {
        metrics,
        model,
        trace: Vec::new(),
        zeta_eta: pick,
    })
}

/// One repeat with seed `cfg.seed + repeat`.
pub fn run_repeat(cfg: &RunConfig, repeat: usize) -> Result<RepeatOutcome> {
    let seed = repeat_seed(cfg, repeat);
    match (load_source(cfg, seed)?, cfg.mode) {
        (Source::Clients(clients), m) if m.is_sequential() => run_sequential(cfg, &clients, seed),
        (Source::Views(data), Mode::Hfed | Mode::LocalMv) => run_horizontal_views(cfg, &data, seed),
        (Source::Views(data), m) if !m.is_sequential() => run_central(cfg, &data, seed),
        (_, m) => Err(Error::config("data", format!("dataset kind does not fit mode {m}"))),
    }
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let repeats = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.repeats)
            .map(|r| scope.spawn(move || run_repeat(cfg, r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut provenance: Vec<(String, String)> = cfg.to_manifest().entries.into_iter().collect();
    let seeds: Vec<String> = (0..cfg.repeats).map(|r| repeat_seed(cfg, r).0.to_string()).collect();
    provenance.push(("repeat_seeds".into(), seeds.join(",")));
    let varies = match cfg.data {
        DataSource::Path(_) => "split,init",
        _ => "data,split,init",
    };
    provenance.push(("varies_per_repeat".into(), varies.into()));
    if cfg.grid {
        let picks: Vec<String> = repeats.iter().map(|r| format!("{:?}", r.zeta_eta.0)).collect();
        provenance.push(("selected_zeta_eta".into(), picks.join(",")));
    }
    let metrics: Vec<Metrics> = repeats.iter().map(|r| r.metrics).collect();
    Ok(ExperimentOutput {
        report: MetricsReport::new(cfg.mode.name(), provenance, &metrics),
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            samples: 120,
            repeats: 2,
            max_outer: 20,
            rounds: 4,
            max_local: 5,
            ..RunConfig::default()
        }
    }

    #[test]
    fn every_multiview_mode_runs() {
        for mode in [Mode::Mvl, Mode::Vfed, Mode::Hfed, Mode::LocalMv] {
            let out = run_experiment(&small(mode)).unwrap();
            assert_eq!(out.report.repeats.len(), 2);
            assert!(out.report.mean("accuracy").unwrap() > 0.6, "{mode}");
        }
        let single = RunConfig {
            views: Some(vec![true, false, false]),
            ..small(Mode::SingleView)
        };
        run_experiment(&single).unwrap();
    }

    #[test]
    fn vfed_matches_mvl() {
        let a = run_experiment(&small(Mode::Mvl)).unwrap();
        let b = run_experiment(&small(Mode::Vfed)).unwrap();
        assert_eq!(a.report.repeats, b.report.repeats);
        for (x, y) in a.repeats.iter().zip(&b.repeats) {
            assert_eq!(x.model.as_ref().unwrap().w, y.model.as_ref().unwrap().w);
        }
    }

    #[test]
    fn sequence_modes_run() {
        for mode in [Mode::Sfed, Mode::LocalSeqHfed, Mode::LocalSeqLocalMv, Mode::CentralSeqHfed] {
            let cfg = RunConfig {
                data: DataSource::Sequences,
                dims: vec![3, 2],
                drift: vec![1.0, 1.0],
                samples: 80,
                clients: 2,
                repeats: 1,
                min_len: 4,
                max_len: 6,
                embed_dim: 4,
                ..small(mode)
            };
            let out = run_experiment(&cfg).unwrap();
            assert_eq!(out.repeats[0].model.is_some(), matches!(mode, Mode::Sfed | Mode::CentralSeqHfed));
        }
    }

    #[test]
    fn grid_records_selection() {
        let cfg = RunConfig {
            grid: true,
            repeats: 1,
            ..small(Mode::Mvl)
        };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.report.provenance.iter().any(|(k, _)| k == "selected_zeta_eta"));
        assert!(ZETA_GRID.contains(&out.repeats[0].zeta_eta.0));
    }

    #[test]
    fn mode_and_data_mismatch_is_config_error() {
        let cfg = RunConfig {
            data: DataSource::Sequences,
            ..small(Mode::Mvl)
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config { .. })));
    }
}
