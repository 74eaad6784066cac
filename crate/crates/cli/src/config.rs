//! Experiment configuration files.
//!
//! Flat `key = value` lines grouped under `[section]` headers, one section
//! per experiment kind; `#` starts a comment. Lists are comma-separated,
//! and integer lists also accept half-open ranges such as `0..10`. Every
//! key is checked against the schema of its section before anything runs.
//!
//! ```text
//! [excess_risk]
//! n = 12
//! m = 500, 2000
//! seeds = 0..10
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use hoe::embed::{LossFunction, Space};

use crate::CliError;

/// Experiment kinds, named by their section header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ExcessRisk,
    BoundSweep,
    Rademacher,
    TreeComparison,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::ExcessRisk,
        ExperimentKind::BoundSweep,
        ExperimentKind::Rademacher,
        ExperimentKind::TreeComparison,
    ];

    pub fn section(self) -> &'static str {
        match self {
            Self::ExcessRisk => "excess_risk",
            Self::BoundSweep => "bound_sweep",
            Self::Rademacher => "rademacher",
            Self::TreeComparison => "tree_compare",
        }
    }

    /// Keys accepted in this section.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Self::ExcessRisk => &[
                "n", "d", "radius", "alpha", "loss", "m", "delta", "seeds", "spaces", "lipschitz",
                "reference_epochs", "reference_step_size",
                "epochs", "step_size", "batch_size", "init_scale", "max_step", "decay", "restarts",
                "tree", "tree_seed", "leaves", "weight_min", "weight_max",
            ],
            Self::BoundSweep => &["lipschitz", "radius", "mean_radius", "n", "m", "delta"],
            Self::Rademacher => &["n", "m", "mean_radius", "d", "draws", "opt_budget", "seeds"],
            Self::TreeComparison => &[
                "n", "d", "radius", "alpha", "seeds",
                "epochs", "step_size", "batch_size", "init_scale", "max_step", "decay", "restarts",
                "tree", "tree_seed", "leaves", "weight_min", "weight_max",
            ],
        }
    }

    fn from_section(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.section() == name)
    }
}

/// One `key = value` entry with its line number.
#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed but unvalidated file: section name to its entries.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

fn invalid(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("config line {line}: {msg}"))
}

pub fn parse_config(text: &str) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    let mut current: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let no = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| invalid(no, "unterminated section header"))?
                .trim()
                .to_string();
            if ExperimentKind::from_section(&name).is_none() {
                let known: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.section()).collect();
                return Err(invalid(no, format!("unknown section `{name}` (known: {})", known.join(", "))));
            }
            if raw.sections.contains_key(&name) {
                return Err(invalid(no, format!("section `{name}` appears twice")));
            }
            raw.sections.insert(name.clone(), (no, BTreeMap::new()));
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(no, format!("expected `key = value`, found `{line}`")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| invalid(no, "key outside of any [section]"))?;
        let entries = &mut raw.sections.get_mut(section).expect("section exists").1;
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(invalid(no, format!("duplicate key `{key}`")));
        }
        entries.insert(key, Entry { line: no, value: value.trim().to_string() });
    }
    Ok(raw)
}

/// Where the tree of an experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeSource {
    /// Uniform attachment with weights in `[weight_min, weight_max)`.
    Random { seed: u64, weight_min: f64, weight_max: f64 },
    /// Star whose leaf weights have pairwise distinct sums.
    Star { leaves: usize },
    File(PathBuf),
}

/// Optimiser settings echoed into [`hoe::embed::FitConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub epochs: usize,
    pub step_size: f64,
    pub batch_size: usize,
    pub init_scale: f64,
    pub max_step: f64,
    pub decay: bool,
    pub restarts: usize,
}

/// A validated experiment. Fields not used by a kind keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    /// Dimension; 0 means `n - 1` for the Rademacher check.
    pub d: usize,
    pub radius: Vec<f64>,
    /// Empty means "same as radius".
    pub mean_radius: Vec<f64>,
    pub m: Vec<usize>,
    pub delta: Vec<f64>,
    pub alpha: f64,
    pub lipschitz: f64,
    pub loss: LossFunction,
    pub spaces: Vec<Space>,
    pub seeds: Vec<u64>,
    pub tree: TreeSource,
    pub optimizer: OptimizerSettings,
    pub reference_epochs: usize,
    pub reference_step_size: f64,
    pub draws: usize,
    pub opt_budget: usize,
}

impl ExperimentConfig {
    /// Defaults for `kind`, before any key is applied.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: vec![12],
            d: 2,
            radius: vec![2.0],
            mean_radius: Vec::new(),
            m: vec![500, 2000],
            delta: vec![0.1],
            alpha: 0.4,
            lipschitz: 1.0,
            loss: LossFunction::Hinge,
            spaces: vec![Space::Hyperbolic],
            seeds: (0..10).collect(),
            tree: TreeSource::Random { seed: 0, weight_min: 1.0, weight_max: 2.0 },
            optimizer: OptimizerSettings {
                epochs: 100,
                step_size: 0.05,
                batch_size: 32,
                init_scale: 0.1,
                max_step: 0.5,
                decay: false,
                restarts: 3,
            },
            reference_epochs: 1000,
            reference_step_size: 0.5,
            draws: 200,
            opt_budget: 60,
        };
        match kind {
            ExperimentKind::ExcessRisk => base,
            ExperimentKind::BoundSweep => Self {
                radius: vec![1.0, 2.0, 3.0],
                n: vec![10],
                m: vec![1000],
                ..base
            },
            ExperimentKind::Rademacher => Self {
                n: vec![4, 6, 8],
                m: vec![50, 200],
                mean_radius: vec![0.5, 1.0],
                d: 0,
                seeds: vec![0],
                ..base
            },
            ExperimentKind::TreeComparison => Self {
                n: vec![9],
                radius: vec![4.0],
                seeds: vec![0],
                tree: TreeSource::Star { leaves: 8 },
                optimizer: OptimizerSettings { epochs: 1000, step_size: 0.5, restarts: 5, ..base.optimizer.clone() },
                ..base
            },
        }
    }

    /// Validate the `kind` section of `raw`.
    pub fn from_raw(raw: &RawConfig, kind: ExperimentKind) -> Result<Self, CliError> {
        let (_, entries) = raw
            .sections
            .get(kind.section())
            .ok_or_else(|| CliError::Validation(format!("config has no [{}] section", kind.section())))?;
        let allowed = kind.keys();
        for (key, e) in entries {
            if !allowed.contains(&key.as_str()) {
                return Err(invalid(e.line, format!("unknown key `{key}` for [{}] (allowed: {})", kind.section(), allowed.join(", "))));
            }
        }
        let mut cfg = Self::defaults(kind);
        let get = |k: &str| entries.get(k);

        if let Some(e) = get("n") {
            cfg.n = int_list(e)?;
        }
        if let Some(e) = get("d") {
            cfg.d = scalar(e)?;
        }
        if let Some(e) = get("radius") {
            cfg.radius = list(e)?;
        }
        if let Some(e) = get("mean_radius") {
            cfg.mean_radius = list(e)?;
        }
        if let Some(e) = get("m") {
            cfg.m = int_list(e)?;
        }
        if let Some(e) = get("delta") {
            cfg.delta = list(e)?;
        }
        if let Some(e) = get("alpha") {
            cfg.alpha = scalar(e)?;
        }
        if let Some(e) = get("lipschitz") {
            cfg.lipschitz = scalar(e)?;
        }
        if let Some(e) = get("loss") {
            cfg.loss = match e.value.as_str() {
                "hinge" => LossFunction::Hinge,
                "ramp" => LossFunction::Ramp,
                other => return Err(invalid(e.line, format!("loss must be hinge or ramp, found `{other}`"))),
            };
        }
        if let Some(e) = get("spaces") {
            cfg.spaces = e
                .value
                .split(',')
                .map(|s| parse_space(s.trim()).ok_or_else(|| invalid(e.line, format!("unknown space `{}`", s.trim()))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(e) = get("seeds") {
            cfg.seeds = int_list(e)?;
        }
        if let Some(e) = get("reference_epochs") {
            cfg.reference_epochs = scalar(e)?;
        }
        if let Some(e) = get("reference_step_size") {
            cfg.reference_step_size = scalar(e)?;
        }
        if let Some(e) = get("draws") {
            cfg.draws = scalar(e)?;
        }
        if let Some(e) = get("opt_budget") {
            cfg.opt_budget = scalar(e)?;
        }
        let opt = &mut cfg.optimizer;
        if let Some(e) = get("epochs") {
            opt.epochs = scalar(e)?;
        }
        if let Some(e) = get("step_size") {
            opt.step_size = scalar(e)?;
        }
        if let Some(e) = get("batch_size") {
            opt.batch_size = scalar(e)?;
        }
        if let Some(e) = get("init_scale") {
            opt.init_scale = scalar(e)?;
        }
        if let Some(e) = get("max_step") {
            opt.max_step = scalar(e)?;
        }
        if let Some(e) = get("decay") {
            opt.decay = scalar(e)?;
        }
        if let Some(e) = get("restarts") {
            opt.restarts = scalar(e)?;
        }
        cfg.tree = tree_source(&cfg.tree, &get)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that do not depend on how the config was built.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(format!("[{}] {msg}", self.kind.section())));
        let nonempty = [
            ("n", self.n.is_empty()),
            ("radius", self.radius.is_empty()),
            ("m", self.m.is_empty()),
            ("delta", self.delta.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("spaces", self.spaces.is_empty()),
        ];
        if let Some((k, _)) = nonempty.iter().find(|(_, empty)| *empty) {
            return fail(format!("`{k}` must not be empty"));
        }
        if self.radius.iter().chain(&self.mean_radius).any(|r| !(*r >= 0.0 && r.is_finite())) {
            return fail("radii must be finite and non-negative".into());
        }
        if self.delta.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return fail("delta must lie in (0, 1)".into());
        }
        if !(0.0..=0.5).contains(&self.alpha) {
            return fail(format!("alpha {} must lie in [0, 0.5]", self.alpha));
        }
        if !(self.lipschitz > 0.0) {
            return fail("lipschitz must be positive".into());
        }
        if self.m.contains(&0) {
            return fail("m must be positive".into());
        }
        match self.kind {
            ExperimentKind::ExcessRisk => {
                if self.n.len() != 1 || !(3..=20).contains(&self.n[0]) {
                    return fail("excess-risk needs a single n in 3..=20".into());
                }
                if self.radius.len() != 1 || self.d == 0 {
                    return fail("excess-risk needs a single radius and d >= 1".into());
                }
            }
            ExperimentKind::Rademacher => {
                if self.n.iter().any(|&n| !(3..=12).contains(&n)) {
                    return fail("rademacher needs 3 <= n <= 12".into());
                }
                if self.mean_radius.is_empty() || self.draws == 0 {
                    return fail("rademacher needs mean_radius values and draws >= 1".into());
                }
            }
            ExperimentKind::TreeComparison => {
                if self.radius.len() != 1 || self.d == 0 || self.optimizer.restarts < 3 {
                    return fail("tree-compare needs a single radius, d >= 1 and restarts >= 3".into());
                }
            }
            ExperimentKind::BoundSweep => {
                if self.n.iter().any(|&n| n < 2) {
                    return fail("bound sweep needs n >= 2".into());
                }
            }
        }
        if self.optimizer.batch_size == 0 || !(self.optimizer.step_size > 0.0) {
            return fail("batch_size and step_size must be positive".into());
        }
        Ok(())
    }
}

fn parse_space(s: &str) -> Option<Space> {
    match s {
        "hyperbolic" | "hoe" => Some(Space::Hyperbolic),
        "euclidean" | "eoe" => Some(Space::Euclidean),
        _ => None,
    }
}

fn scalar<T: std::str::FromStr>(e: &Entry) -> Result<T, CliError> {
    e.value
        .parse()
        .map_err(|_| invalid(e.line, format!("cannot parse `{}`", e.value)))
}

fn list<T: std::str::FromStr>(e: &Entry) -> Result<Vec<T>, CliError> {
    e.value
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| invalid(e.line, format!("cannot parse `{}`", s.trim()))))
        .collect()
}

/// Integer list with `a..b` ranges allowed.
fn int_list<T>(e: &Entry) -> Result<Vec<T>, CliError>
where
    T: std::str::FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for part in e.value.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let parse = |s: &str| s.trim().parse::<u64>().map_err(|_| invalid(e.line, format!("bad range `{part}`")));
            let (a, b) = (parse(a)?, parse(b)?);
            if a >= b {
                return Err(invalid(e.line, format!("empty range `{part}`")));
            }
            for v in a..b {
                out.push(T::try_from(v).map_err(|_| invalid(e.line, "value out of range"))?);
            }
        } else {
            out.push(part.parse().map_err(|_| invalid(e.line, format!("cannot parse `{part}`")))?);
        }
    }
    Ok(out)
}

fn tree_source<'a>(default: &TreeSource, get: &impl Fn(&str) -> Option<&'a Entry>) -> Result<TreeSource, CliError> {
    let kind = get("tree").map(|e| e.value.clone());
    let (mut seed, mut wmin, mut wmax) = match default {
        TreeSource::Random { seed, weight_min, weight_max } => (*seed, *weight_min, *weight_max),
        _ => (0, 1.0, 2.0),
    };
    if let Some(e) = get("tree_seed") {
        seed = scalar(e)?;
    }
    if let Some(e) = get("weight_min") {
        wmin = scalar(e)?;
    }
    if let Some(e) = get("weight_max") {
        wmax = scalar(e)?;
    }
    let leaves = match get("leaves") {
        Some(e) => Some(scalar::<usize>(e)?),
        None => None,
    };
    let source = match kind.as_deref() {
        Some("random") => TreeSource::Random { seed, weight_min: wmin, weight_max: wmax },
        Some("star") => TreeSource::Star { leaves: leaves.unwrap_or(8) },
        Some(path) => TreeSource::File(PathBuf::from(path)),
        None => match default {
            TreeSource::Random { .. } => TreeSource::Random { seed, weight_min: wmin, weight_max: wmax },
            TreeSource::Star { leaves: l } => TreeSource::Star { leaves: leaves.unwrap_or(*l) },
            other => other.clone(),
        },
    };
    if let TreeSource::Random { weight_min, weight_max, .. } = source {
        if !(weight_min > 0.0 && weight_max > weight_min) {
            return Err(CliError::Validation(format!(
                "weights need 0 < weight_min < weight_max, got {weight_min} and {weight_max}"
            )));
        }
    }
    if let TreeSource::Star { leaves } = source {
        if leaves < 2 {
            return Err(CliError::Validation("a star needs at least 2 leaves".into()));
        }
    }
    Ok(source)
}
