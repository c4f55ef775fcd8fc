use fedmv::data::{gen_multiview, GeneratorSpec};
use fedmv::eval::config::CONFIG_KEYS;
use fedmv::eval::{run_experiment, DataSource, ExperimentOutput, Mode, RunConfig};
use fedmv::fedcore::InProcessTransport;
use fedmv::hfed::{hfed_train, HClient, HServer, HfedConfig};
use fedmv::mvl::HyperParams;
use fedmv::RngSeed;

fn base(mode: Mode) -> RunConfig {
    RunConfig {
        mode,
        samples: 200,
        repeats: 3,
        max_outer: 40,
        rounds: 5,
        max_local: 10,
        ..RunConfig::default()
    }
}

fn run(cfg: &RunConfig) -> ExperimentOutput {
    run_experiment(cfg).unwrap()
}

fn mask(on: &[usize]) -> Option<Vec<bool>> {
    Some((0..3).map(|k| on.contains(&k)).collect())
}

#[test]
fn one_view_mvl_matches_single_view() {
    for k in 0..3 {
        let cfg = RunConfig {
            views: mask(&[k]),
            repeats: 1,
            max_outer: 100,
            ..base(Mode::Mvl)
        };
        let mvl = run(&cfg);
        let single = run(&RunConfig {
            mode: Mode::SingleView,
            ..cfg
        });
        assert_eq!(mvl.report.repeats, single.report.repeats, "view {k}");
    }
}

#[test]
fn pairwise_is_masked_mvl() {
    let cfg = RunConfig {
        views: mask(&[0, 2]),
        ..base(Mode::Mvl)
    };
    let mvl = run(&cfg);
    let pair = run(&RunConfig {
        mode: Mode::Pairwise,
        ..cfg
    });
    assert_eq!(mvl.report.repeats, pair.report.repeats);
    for (a, b) in mvl.repeats.iter().zip(&pair.repeats) {
        assert_eq!(a.model.as_ref().unwrap().w, b.model.as_ref().unwrap().w);
    }
}

#[test]
fn vfed_report_equals_mvl_report() {
    for data in [DataSource::Multiview, DataSource::Complementary] {
        let mvl = run(&RunConfig {
            data: data.clone(),
            ..base(Mode::Mvl)
        });
        let vfed = run(&RunConfig {
            data,
            ..base(Mode::Vfed)
        });
        assert_eq!(mvl.report.repeats, vfed.report.repeats);
        let strip = |s: String| s.lines().filter(|l| !l.starts_with('#')).map(|l| l.replacen("vfed", "mvl", 1)).collect::<Vec<_>>();
        assert_eq!(strip(mvl.report.render_csv()), strip(vfed.report.render_csv()));
    }
}

#[test]
fn single_client_hfed_is_a_local_run() {
    let data = gen_multiview(&GeneratorSpec::new(80, vec![5, 3], 2, 7)).unwrap();
    let mut cfg = HfedConfig::new(HyperParams::new(2));
    cfg.rounds = 6;
    cfg.max_local = 4;
    let seed = RngSeed(11);
    let fed = hfed_train(std::slice::from_ref(&data), &cfg, seed, &InProcessTransport::new()).unwrap();

    let server = HServer::new(&data.dims(), 2, vec![80], 0.0, seed);
    let mut w = server.w().to_vec();
    let mut client = HClient::new(0, data, &w, &cfg.hp, cfg.max_local, seed).unwrap();
    for _ in 0..cfg.rounds {
        w = client.client_step(&w).unwrap();
    }
    assert_eq!(fed.w, w);
}

#[test]
fn one_repeat_has_zero_std() {
    let out = run(&RunConfig {
        repeats: 1,
        ..base(Mode::Mvl)
    });
    assert!(out.report.summary().iter().all(|r| r.std == 0.0));
}

#[test]
fn report_records_config_and_seeds() {
    let cfg = RunConfig {
        seed: 40,
        ..base(Mode::Hfed)
    };
    let out = run(&cfg);
    let keys: Vec<&str> = out.report.provenance.iter().map(|(k, _)| k.as_str()).collect();
    for key in CONFIG_KEYS.iter().filter(|k| !matches!(**k, "informative" | "views")) {
        assert!(keys.contains(key), "missing {key}");
    }
    let seeds = out.report.provenance.iter().find(|(k, _)| k == "repeat_seeds").unwrap();
    assert_eq!(seeds.1, "40,41,42");
}

#[test]
fn repeats_see_different_data() {
    let out = run(&base(Mode::Mvl));
    let ws: Vec<_> = out.repeats.iter().map(|r| r.model.as_ref().unwrap().w.clone()).collect();
    assert_ne!(ws[0], ws[1]);
}
