use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::Manifest;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Mvl,
    SingleView,
    Pairwise,
    Vfed,
    Hfed,
    LocalMv,
    Sfed,
    LocalSeqHfed,
    LocalSeqLocalMv,
    CentralSeqHfed,
}

impl Mode {
    pub const ALL: [Mode; 10] = [
        Mode::Mvl,
        Mode::SingleView,
        Mode::Pairwise,
        Mode::Vfed,
        Mode::Hfed,
        Mode::LocalMv,
        Mode::Sfed,
        Mode::LocalSeqHfed,
        Mode::LocalSeqLocalMv,
        Mode::CentralSeqHfed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Mvl => "mvl",
            Mode::SingleView => "single-view",
            Mode::Pairwise => "pairwise",
            Mode::Vfed => "vfed",
            Mode::Hfed => "hfed",
            Mode::LocalMv => "local-mv",
            Mode::Sfed => "sfed",
            Mode::LocalSeqHfed => "local-seq-hfed",
            Mode::LocalSeqLocalMv => "local-seq-localmv",
            Mode::CentralSeqHfed => "central-seq-hfed",
        }
    }

    pub fn is_sequential(self) -> bool {
        matches!(
            self,
            Mode::Sfed | Mode::LocalSeqHfed | Mode::LocalSeqLocalMv | Mode::CentralSeqHfed
        )
    }

    /// Modes whose data is split across `clients` sample-wise.
    pub fn is_horizontal(self) -> bool {
        self.is_sequential() || matches!(self, Mode::Hfed | Mode::LocalMv)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('-', "_") == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mode `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Path(PathBuf),
    Multiview,
    Complementary,
    Sequences,
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Path(p) => write!(f, "{}", p.display()),
            DataSource::Multiview => f.write_str("generate:multiview"),
            DataSource::Complementary => f.write_str("generate:complementary"),
            DataSource::Sequences => f.write_str("generate:sequences"),
        }
    }
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.strip_prefix("generate:") {
            Some("multiview") => Ok(DataSource::Multiview),
            Some("complementary") => Ok(DataSource::Complementary),
            Some("sequences") => Ok(DataSource::Sequences),
            Some(other) => Err(format!(
                "unknown generator `{other}` (expected multiview, complementary or sequences)"
            )),
            None if s.is_empty() => Err("empty data path".into()),
            None => Ok(DataSource::Path(PathBuf::from(s))),
        }
    }
}

/// Everything an experiment needs. Serializes to and from flat `key=value`
/// text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub data: DataSource,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub classes: usize,
    pub noise: f64,
    pub margin: f64,
    pub informative: Option<Vec<bool>>,
    pub min_len: usize,
    pub max_len: usize,
    pub drift: Vec<f64>,
    pub beta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub grid: bool,
    pub clients: usize,
    pub views: Option<Vec<bool>>,
    pub repeats: usize,
    pub split: [f64; 3],
    pub seed: u64,
    pub rounds: u32,
    pub max_local: usize,
    pub batch_size: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub embed_dim: usize,
    pub positive_class: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Mvl,
            data: DataSource::Multiview,
            samples: 600,
            dims: vec![8, 6, 4],
            classes: 2,
            noise: 0.5,
            margin: 4.0,
            informative: None,
            min_len: 10,
            max_len: 30,
            drift: vec![1.0, 1.0, 1.0],
            beta: 4.0,
            zeta: 8.0,
            eta: 8.0,
            epsilon: 1e-8,
            tol: 1e-6,
            max_outer: 100,
            max_inner: 20,
            grid: false,
            clients: 4,
            views: None,
            repeats: 10,
            split: [0.6, 0.2, 0.2],
            seed: 0,
            rounds: 20,
            max_local: 30,
            batch_size: 16,
            local_epochs: 1,
            learning_rate: 0.1,
            embed_dim: 8,
            positive_class: 1,
        }
    }
}

pub const CONFIG_KEYS: [&str; 31] = [
    "mode",
    "data",
    "samples",
    "dims",
    "classes",
    "noise",
    "margin",
    "informative",
    "min_len",
    "max_len",
    "drift",
    "beta",
    "zeta",
    "eta",
    "epsilon",
    "tol",
    "max_outer",
    "max_inner",
    "grid",
    "clients",
    "views",
    "repeats",
    "split",
    "seed",
    "rounds",
    "max_local",
    "batch_size",
    "local_epochs",
    "learning_rate",
    "embed_dim",
    "positive_class",
];

fn parse_one<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{raw}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    raw.split(',').map(|s| parse_one(key, s)).collect()
}

fn parse_mask(key: &str, raw: &str) -> Result<Vec<bool>> {
    raw.split(',')
        .map(|s| match s.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(Error::config(key, format!("mask entries must be 0 or 1, got `{other}`"))),
        })
        .collect()
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(Error::config(key, format!("expected true or false, got `{other}`"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn mask_string(m: &[bool]) -> String {
    m.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "mode" => self.mode = parse_one(key, raw)?,
            "data" => self.data = parse_one(key, raw)?,
            "samples" => self.samples = parse_one(key, raw)?,
            "dims" => self.dims = parse_list(key, raw)?,
            "classes" => self.classes = parse_one(key, raw)?,
            "noise" => self.noise = parse_one(key, raw)?,
            "margin" => self.margin = parse_one(key, raw)?,
            "informative" => self.informative = Some(parse_mask(key, raw)?),
            "min_len" => self.min_len = parse_one(key, raw)?,
            "max_len" => self.max_len = parse_one(key, raw)?,
            "drift" => self.drift = parse_list(key, raw)?,
            "beta" => self.beta = parse_one(key, raw)?,
            "zeta" => self.zeta = parse_one(key, raw)?,
            "eta" => self.eta = parse_one(key, raw)?,
            "epsilon" => self.epsilon = parse_one(key, raw)?,
            "tol" => self.tol = parse_one(key, raw)?,
            "max_outer" => self.max_outer = parse_one(key, raw)?,
            "max_inner" => self.max_inner = parse_one(key, raw)?,
            "grid" => self.grid = parse_bool(key, raw)?,
            "clients" => self.clients = parse_one(key, raw)?,
            "views" => self.views = Some(parse_mask(key, raw)?),
            "repeats" => self.repeats = parse_one(key, raw)?,
            "split" => {
                let v: Vec<f64> = parse_list(key, raw)?;
                self.split = v
                    .try_into()
                    .map_err(|_| Error::config(key, "expected three fractions"))?;
            }
            "seed" => self.seed = parse_one(key, raw)?,
            "rounds" => self.rounds = parse_one(key, raw)?,
            "max_local" => self.max_local = parse_one(key, raw)?,
            "batch_size" => self.batch_size = parse_one(key, raw)?,
            "local_epochs" => self.local_epochs = parse_one(key, raw)?,
            "learning_rate" => self.learning_rate = parse_one(key, raw)?,
            "embed_dim" => self.embed_dim = parse_one(key, raw)?,
            "positive_class" => self.positive_class = parse_one(key, raw)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Defaults overridden by every entry of `m`, then validated.
    pub fn from_manifest(m: &Manifest) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (k, v) in &m.entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.set("mode", self.mode);
        m.set("data", &self.data);
        m.set("samples", self.samples);
        m.set("dims", join(&self.dims));
        m.set("classes", self.classes);
        m.set("noise", format!("{:?}", self.noise));
        m.set("margin", format!("{:?}", self.margin));
        if let Some(mask) = &self.informative {
            m.set("informative", mask_string(mask));
        }
        m.set("min_len", self.min_len);
        m.set("max_len", self.max_len);
        m.set("drift", join_f64(&self.drift));
        m.set("beta", format!("{:?}", self.beta));
        m.set("zeta", format!("{:?}", self.zeta));
        m.set("eta", format!("{:?}", self.eta));
        m.set("epsilon", format!("{:?}", self.epsilon));
        m.set("tol", format!("{:?}", self.tol));
        m.set("max_outer", self.max_outer);
        m.set("max_inner", self.max_inner);
        m.set("grid", self.grid);
        m.set("clients", self.clients);
        if let Some(mask) = &self.views {
            m.set("views", mask_string(mask));
        }
        m.set("repeats", self.repeats);
        m.set("split", join_f64(&self.split));
        m.set("seed", self.seed);
        m.set("rounds", self.rounds);
        m.set("max_local", self.max_local);
        m.set("batch_size", self.batch_size);
        m.set("local_epochs", self.local_epochs);
        m.set("learning_rate", format!("{:?}", self.learning_rate));
        m.set("embed_dim", self.embed_dim);
        m.set("positive_class", self.positive_class);
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.split.iter().any(|&f| !(f > 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", "fractions must be positive and sum to 1"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if self.clients == 0 {
            return Err(Error::config("clients", "must be at least 1"));
        }
        if self.classes < 2 {
            return Err(Error::config("classes", "must be at least 2"));
        }
        if self.positive_class >= self.classes {
            return Err(Error::config("positive_class", "must be a valid class index"));
        }
        for (key, v) in [("beta", self.beta), ("zeta", self.zeta), ("eta", self.eta), ("epsilon", self.epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.tol) {
            return Err(Error::config("tol", "must lie in [0, 1)"));
        }
        if self.max_inner == 0 {
            return Err(Error::config("max_inner", "must be at least 1"));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::config("min_len", "need 1 <= min_len <= max_len"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::config("embed_dim", "must be at least 1"));
        }
        let generated_seq = self.data == DataSource::Sequences;
        let generated_mv = matches!(self.data, DataSource::Multiview | DataSource::Complementary);
        if self.mode.is_sequential() && generated_mv {
            return Err(Error::config("data", format!("mode {} needs sequence data", self.mode)));
        }
        if !self.mode.is_sequential() && generated_seq {
            return Err(Error::config("data", format!("mode {} needs multi-view data", self.mode)));
        }
        if generated_seq && self.drift.len() != self.dims.len() {
            return Err(Error::config("drift", "needs one entry per view in `dims`"));
        }
        if let Some(mask) = &self.informative {
            if mask.len() != self.dims.len() {
                return Err(Error::config("informative", "needs one entry per view in `dims`"));
            }
        }
        let selected = self.views.as_ref().map(|m| m.iter().filter(|&&b| b).count());
        match (self.mode, selected) {
            (Mode::SingleView, Some(1)) | (Mode::Pairwise, Some(2)) => {}
            (Mode::SingleView, _) => return Err(Error::config("views", "single-view mode needs exactly one view")),
            (Mode::Pairwise, _) => return Err(Error::config("views", "pairwise mode needs exactly two views")),
            (_, Some(0)) => return Err(Error::config("views", "select at least one view")),
            _ => {}
        }
        if self.mode.is_sequential() && self.views.is_some() {
            return Err(Error::config("views", "view masks apply to multi-view modes only"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn manifest_round_trip() {
        let mut cfg = RunConfig {
            mode: Mode::Pairwise,
            views: Some(vec![true, false, true]),
            grid: true,
            tol: 0.0,
            ..RunConfig::default()
        };
        cfg.drift = vec![0.5, 1.25, 2.0];
        let back = RunConfig::from_manifest(&cfg.to_manifest()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let m = Manifest::parse("mode=mvl\nsplit=0.5,0.5,0.5\n", Path::new("cfg")).unwrap();
        match RunConfig::from_manifest(&m) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "split"),
            other => panic!("{other:?}"),
        }
        let m = Manifest::parse("bogus=1\n", Path::new("cfg")).unwrap();
        assert!(matches!(RunConfig::from_manifest(&m), Err(Error::Config { field, .. }) if field == "bogus"));
        let m = Manifest::parse("mode=single-view\n", Path::new("cfg")).unwrap();
        assert!(matches!(RunConfig::from_manifest(&m), Err(Error::Config { field, .. }) if field == "views"));
        let m = Manifest::parse("repeats=0\n", Path::new("cfg")).unwrap();
        assert!(matches!(RunConfig::from_manifest(&m), Err(Error::Config { field, .. }) if field == "repeats"));
    }

    #[test]
    fn every_key_is_settable() {
        let defaults = RunConfig::default().to_manifest();
        for key in CONFIG_KEYS {
            if let Some(v) = defaults.get(key) {
                RunConfig::default().set(key, v).unwrap();
            }
        }
        assert!(defaults.entries.keys().all(|k| CONFIG_KEYS.contains(&k.as_str())));
    }
}
