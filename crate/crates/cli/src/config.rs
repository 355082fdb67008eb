//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Lists are comma separated.
//! [`ExperimentConfig::to_text`] writes every key, so a written config
//! parses back to the same value.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ngtorus::meanfield::{validate_grid, Convolution, Integrator, MAX_DT};
use ngtorus::microsim::{Initializer, PairSelection, Spin};
use ngtorus::Error as CoreError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    GenerateGraph,
    RunMicro,
    RunMeanfield,
    Correlation,
    Boundary,
    Shrink,
    CommittedSweep,
    TerminalCensus,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::GenerateGraph,
        Kind::RunMicro,
        Kind::RunMeanfield,
        Kind::Correlation,
        Kind::Boundary,
        Kind::Shrink,
        Kind::CommittedSweep,
        Kind::TerminalCensus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::GenerateGraph => "generate-graph",
            Kind::RunMicro => "run-micro",
            Kind::RunMeanfield => "run-meanfield",
            Kind::Correlation => "correlation",
            Kind::Boundary => "boundary",
            Kind::Shrink => "shrink",
            Kind::CommittedSweep => "committed-sweep",
            Kind::TerminalCensus => "terminal-census",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind `{s}`"))
    }
}

/// Which engine a kind that supports both should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Micro,
    Meanfield,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Micro => "micro",
            Engine::Meanfield => "meanfield",
        }
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "micro" => Ok(Engine::Micro),
            "meanfield" => Ok(Engine::Meanfield),
            _ => Err(format!("expected micro or meanfield, got `{s}`")),
        }
    }
}

/// Initial condition shared by both engines.
///
/// Text forms: `random:P` (A with probability `P`, else B), `disk:CX,CY,R`,
/// `stripe:X0,X1`, `uniform:A|B|AB`, `committed` (fraction `q` committed
/// to A, everyone else B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    Random { p_a: f64 },
    Disk { cx: f64, cy: f64, radius: f64 },
    Stripe { x0: f64, x1: f64 },
    Uniform(Spin),
    Committed,
}

impl InitSpec {
    pub fn micro(self, q: f64) -> Initializer {
        match self {
            InitSpec::Random { p_a } => Initializer::RandomAB { p_a },
            InitSpec::Disk { cx, cy, radius } => Initializer::Disk { cx, cy, radius },
            InitSpec::Stripe { x0, x1 } => Initializer::Stripe { x0, x1 },
            InitSpec::Uniform(s) => Initializer::Uniform(s),
            InitSpec::Committed => Initializer::Committed { q, opinion: Spin::A },
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitSpec::Random { p_a } => write!(f, "random:{p_a}"),
            InitSpec::Disk { cx, cy, radius } => write!(f, "disk:{cx},{cy},{radius}"),
            InitSpec::Stripe { x0, x1 } => write!(f, "stripe:{x0},{x1}"),
            InitSpec::Uniform(s) => write!(f, "uniform:{}", spin_name(s)),
            InitSpec::Committed => write!(f, "committed"),
        }
    }
}

fn spin_name(s: Spin) -> &'static str {
    match s {
        Spin::A => "A",
        Spin::B => "B",
        Spin::AB => "AB",
    }
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>, String> {
            args.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}` in `{s}`")))
                .collect()
        };
        let want = |k: usize| -> Result<Vec<f64>, String> {
            let v = nums()?;
            if v.len() == k {
                Ok(v)
            } else {
                Err(format!("`{name}` takes {k} numbers, got {}", v.len()))
            }
        };
        match name {
            "random" if args.is_empty() => Ok(InitSpec::Random { p_a: 0.5 }),
            "random" => Ok(InitSpec::Random { p_a: want(1)?[0] }),
            "disk" => {
                let v = want(3)?;
                Ok(InitSpec::Disk { cx: v[0], cy: v[1], radius: v[2] })
            }
            "stripe" => {
                let v = want(2)?;
                Ok(InitSpec::Stripe { x0: v[0], x1: v[1] })
            }
            "uniform" => match args {
                "A" => Ok(InitSpec::Uniform(Spin::A)),
                "B" => Ok(InitSpec::Uniform(Spin::B)),
                "AB" => Ok(InitSpec::Uniform(Spin::AB)),
                _ => Err(format!("uniform takes A, B or AB, got `{args}`")),
            },
            "committed" => Ok(InitSpec::Committed),
            _ => Err(format!("unknown initializer `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub engine: Engine,
    /// Agents.
    pub n: usize,
    pub radius: f64,
    /// Mean-field cells per axis.
    pub grid: usize,
    pub q: f64,
    pub alpha: f64,
    pub t_max: f64,
    pub dt: f64,
    pub sample_every: f64,
    pub seed: u64,
    pub replicas: u64,
    pub pair_selection: PairSelection,
    pub initializer: InitSpec,
    pub integrator: Integrator,
    pub convolution: Convolution,
    /// Mean degrees: micro twins for `shrink`, network densities for
    /// `committed-sweep`.
    pub degrees: Vec<f64>,
    /// Network sizes for `committed-sweep`.
    pub sizes: Vec<usize>,
    /// Committed fractions for `committed-sweep`.
    pub q_values: Vec<f64>,
    /// Times at which snapshots are written or analysed.
    pub snapshots: Vec<f64>,
    /// Correlation bin width; `r/2` when unset.
    pub bin_width: Option<f64>,
    pub n_samples: usize,
    /// Mean-field start from a field CSV dump instead of `initializer`.
    pub restart: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: Kind::RunMicro,
            engine: Engine::Micro,
            n: 10_000,
            radius: 0.02,
            grid: 256,
            q: 0.0,
            alpha: 0.9,
            t_max: 100.0,
            dt: 0.05,
            sample_every: 1.0,
            seed: 1,
            replicas: 1,
            pair_selection: PairSelection::Node,
            initializer: InitSpec::Random { p_a: 0.5 },
            integrator: Integrator::Euler,
            convolution: Convolution::Spectral,
            degrees: Vec::new(),
            sizes: Vec::new(),
            q_values: Vec::new(),
            snapshots: Vec::new(),
            bin_width: None,
            n_samples: 1_000_000,
            restart: None,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 24] = [
    "kind",
    "engine",
    "n",
    "radius",
    "grid",
    "q",
    "alpha",
    "t_max",
    "dt",
    "sample_every",
    "seed",
    "replicas",
    "pair_selection",
    "initializer",
    "integrator",
    "convolution",
    "degrees",
    "sizes",
    "q_values",
    "snapshots",
    "bin_width",
    "n_samples",
    "restart",
    "out",
];

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_num(key, x.trim())).collect()
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "kind" => self.kind = v.parse().map_err(|e: String| invalid(key, e))?,
            "engine" => self.engine = v.parse().map_err(|e: String| invalid(key, e))?,
            "n" => self.n = parse_num(key, v)?,
            "radius" => self.radius = parse_num(key, v)?,
            "grid" => self.grid = parse_num(key, v)?,
            "q" => self.q = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "sample_every" => self.sample_every = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "replicas" => self.replicas = parse_num(key, v)?,
            "pair_selection" => {
                self.pair_selection = match v {
                    "node" => PairSelection::Node,
                    "edge" => PairSelection::Edge,
                    _ => return Err(invalid(key, format!("expected node or edge, got `{v}`"))),
                }
            }
            "initializer" => self.initializer = v.parse().map_err(|e: String| invalid(key, e))?,
            "integrator" => {
                self.integrator = match v {
                    "euler" => Integrator::Euler,
                    "rk4" => Integrator::Rk4,
                    _ => return Err(invalid(key, format!("expected euler or rk4, got `{v}`"))),
                }
            }
            "convolution" => {
                self.convolution = match v {
                    "direct" => Convolution::Direct,
                    "spectral" => Convolution::Spectral,
                    _ => return Err(invalid(key, format!("expected direct or spectral, got `{v}`"))),
                }
            }
            "degrees" => self.degrees = parse_list(key, v)?,
            "sizes" => self.sizes = parse_list(key, v)?,
            "q_values" => self.q_values = parse_list(key, v)?,
            "snapshots" => self.snapshots = parse_list(key, v)?,
            "bin_width" => self.bin_width = if v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "n_samples" => self.n_samples = parse_num(key, v)?,
            "restart" => self.restart = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "out" => self.out = PathBuf::from(v),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a, I>(&mut self, overrides: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: 0, msg: format!("expected key=value, got `{kv}`") })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults. Does not validate.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: no + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let opt = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("kind", self.kind.name().into());
        put("engine", self.engine.name().into());
        put("n", self.n.to_string());
        put("radius", self.radius.to_string());
        put("grid", self.grid.to_string());
        put("q", self.q.to_string());
        put("alpha", self.alpha.to_string());
        put("t_max", self.t_max.to_string());
        put("dt", self.dt.to_string());
        put("sample_every", self.sample_every.to_string());
        put("seed", self.seed.to_string());
        put("replicas", self.replicas.to_string());
        put(
            "pair_selection",
            match self.pair_selection {
                PairSelection::Node => "node",
                PairSelection::Edge => "edge",
            }
            .into(),
        );
        put("initializer", self.initializer.to_string());
        put(
            "integrator",
            match self.integrator {
                Integrator::Euler => "euler",
                Integrator::Rk4 => "rk4",
            }
            .into(),
        );
        put(
            "convolution",
            match self.convolution {
                Convolution::Direct => "direct",
                Convolution::Spectral => "spectral",
            }
            .into(),
        );
        put("degrees", join(&self.degrees));
        put("sizes", join(&self.sizes));
        put("q_values", join(&self.q_values));
        put("snapshots", join(&self.snapshots));
        put("bin_width", opt(self.bin_width));
        put("n_samples", self.n_samples.to_string());
        put("restart", self.restart.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("out", self.out.display().to_string());
        s
    }

    pub fn uses_meanfield(&self) -> bool {
        match self.kind {
            Kind::RunMeanfield | Kind::Boundary | Kind::Shrink => true,
            Kind::Correlation | Kind::TerminalCensus => self.engine == Engine::Meanfield,
            _ => false,
        }
    }

    pub fn uses_micro(&self) -> bool {
        match self.kind {
            Kind::GenerateGraph | Kind::RunMicro | Kind::CommittedSweep => true,
            Kind::Shrink => !self.degrees.is_empty(),
            Kind::Correlation | Kind::TerminalCensus => self.engine == Engine::Micro,
            _ => false,
        }
    }

    /// Checks ranges and the requirements of the selected kind. Errors
    /// name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(invalid("radius", format!("must lie in (0, 0.5), got {}", self.radius)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(invalid("q", format!("committed fraction must lie in [0,1], got {}", self.q)));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(invalid("alpha", format!("must lie in (0.5, 1], got {}", self.alpha)));
        }
        positive("t_max", self.t_max)?;
        positive("sample_every", self.sample_every)?;
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid("dt", format!("must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas", "need at least one replica"));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "need at least one sample"));
        }
        if let Some(w) = self.bin_width {
            positive("bin_width", w)?;
        }
        self.validate_initializer()?;
        if self.snapshots.iter().any(|&t| !(t >= 0.0 && t <= self.t_max)) {
            return Err(invalid("snapshots", format!("times must lie in [0, t_max = {}]", self.t_max)));
        }
        if self.snapshots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("snapshots", "times must be strictly increasing"));
        }
        if self.uses_meanfield() && self.restart.is_none() {
            validate_grid(self.grid, self.radius, self.q).map_err(|e| match e {
                CoreError::InvalidParameter { name, reason } => {
                    invalid(if name == "m" { "grid" } else { name }, reason)
                }
                other => invalid("grid", other.to_string()),
            })?;
        }
        if self.uses_micro() && self.kind != Kind::CommittedSweep && self.n < 2 {
            return Err(invalid("n", format!("need at least 2 agents, got {}", self.n)));
        }
        match self.kind {
            Kind::Correlation if self.snapshots.len() < 2 => {
                Err(invalid("snapshots", "correlation needs at least two snapshot times"))
            }
            Kind::Boundary if self.snapshots.len() < 2 => {
                Err(invalid("snapshots", "boundary tracking needs at least two snapshot times"))
            }
            Kind::Shrink | Kind::Boundary if !matches!(self.initializer, InitSpec::Disk { .. }) && self.restart.is_none() => {
                Err(invalid("initializer", "needs a disk:CX,CY,R initial condition"))
            }
            Kind::Shrink if self.degrees.iter().any(|&k| !(k > 0.0)) => {
                Err(invalid("degrees", "mean degrees must be positive"))
            }
            Kind::CommittedSweep => self.validate_sweep(),
            _ => Ok(()),
        }
    }

    fn validate_initializer(&self) -> Result<(), ConfigError> {
        let key = "initializer";
        match self.initializer {
            InitSpec::Random { p_a } if !(0.0..=1.0).contains(&p_a) => {
                Err(invalid(key, format!("probability must lie in [0,1], got {p_a}")))
            }
            InitSpec::Disk { radius, .. } if !(radius > 0.0 && radius < 0.5) => {
                Err(invalid(key, format!("disk radius must lie in (0, 0.5), got {radius}")))
            }
            InitSpec::Stripe { x0, x1 } if !(0.0 <= x0 && x0 < x1 && x1 <= 1.0) => {
                Err(invalid(key, format!("stripe needs 0 <= x0 < x1 <= 1, got {x0}, {x1}")))
            }
            _ => Ok(()),
        }
    }

    fn validate_sweep(&self) -> Result<(), ConfigError> {
        if self.sizes.is_empty() {
            return Err(invalid("sizes", "committed-sweep needs at least one network size"));
        }
        if self.degrees.is_empty() {
            return Err(invalid("degrees", "committed-sweep needs at least one mean degree"));
        }
        if self.q_values.is_empty() {
            return Err(invalid("q_values", "committed-sweep needs at least one committed fraction"));
        }
        if let Some(q) = self.q_values.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
            return Err(invalid("q_values", format!("committed fractions must lie in (0, 1], got {q}")));
        }
        for &n in &self.sizes {
            for &k in &self.degrees {
                let r = sweep_radius(n, k);
                if n < 2 || !(r > 0.0 && r < 0.5) {
                    return Err(invalid("degrees", format!("mean degree {k} at n = {n} needs radius {r}, outside (0, 0.5)")));
                }
            }
        }
        Ok(())
    }
}

/// Radius giving expected mean degree `k` on `n` agents.
pub fn sweep_radius(n: usize, k: f64) -> f64 {
    (k / (std::f64::consts::PI * n as f64)).sqrt()
}

/// Agents giving expected mean degree `k` at radius `r`.
pub fn agents_for_degree(k: f64, r: f64) -> usize {
    (k / (std::f64::consts::PI * r * r)).round() as usize
}
