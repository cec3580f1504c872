//! Experiment configuration files.
//!
//! A configuration has three kinds of sections: `[run]`, `[environment]`
//! and one `[policies.<name>]` per policy. Every problem found is reported,
//! not just the first one.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicyParams, PolicySpec};

/// One problem in a configuration, located by its key path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_RUNS: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Nursery rows, main experiment schedule.
    Nursery,
    /// Nursery held-out rows, tuning schedule.
    NurseryValidation,
    SyntheticStationary,
    SyntheticSwitching,
    /// Tables given explicitly in the configuration.
    Synthetic,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Nursery,
        Preset::NurseryValidation,
        Preset::SyntheticStationary,
        Preset::SyntheticSwitching,
        Preset::Synthetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Nursery => "nursery",
            Preset::NurseryValidation => "nursery-validation",
            Preset::SyntheticStationary => "synthetic-stationary",
            Preset::SyntheticSwitching => "synthetic-switching",
            Preset::Synthetic => "synthetic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn uses_dataset(self) -> bool {
        matches!(self, Preset::Nursery | Preset::NurseryValidation)
    }

    /// Horizon used when none is configured.
    pub fn default_horizon(self) -> u64 {
        match self {
            Preset::NurseryValidation => crate::dataio::nursery::VALIDATION_ROWS as u64,
            _ => DEFAULT_HORIZON,
        }
    }

    /// Largest horizon the preset can serve, if bounded.
    pub fn max_horizon(self) -> Option<u64> {
        match self {
            Preset::Nursery => Some(crate::dataio::nursery::TRAIN_ROWS as u64),
            Preset::NurseryValidation => Some(crate::dataio::nursery::VALIDATION_ROWS as u64),
            _ => None,
        }
    }
}

/// Explicit tables of a `synthetic` environment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticTables {
    pub alphabet_sizes: Vec<usize>,
    pub action_count: usize,
    /// Uniform when absent.
    pub state_probabilities: Option<Vec<f64>>,
    /// One table per reward segment, `[state * A + action]`.
    pub reward_tables: Vec<Vec<f64>>,
    /// One vector per cost segment.
    pub cost_means: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentSection {
    pub preset: Preset,
    pub dataset: Option<PathBuf>,
    pub split_seed: u64,
    pub cost_sigma: Option<f64>,
    pub cost_min: Option<f64>,
    pub cost_max: Option<f64>,
    pub reward_change_points: Option<Vec<u64>>,
    pub cost_change_points: Option<Vec<u64>>,
    pub synthetic: Option<SyntheticTables>,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            preset: Preset::Nursery,
            dataset: None,
            split_seed: 0,
            cost_sigma: None,
            cost_min: None,
            cost_max: None,
            reward_change_points: None,
            cost_change_points: None,
            synthetic: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSection {
    pub horizon: Option<u64>,
    pub runs: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: None,
            runs: DEFAULT_RUNS,
            seed: 0,
            output: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub environment: EnvironmentSection,
    /// Sorted by kind, then label.
    pub policies: Vec<PolicySpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            environment: EnvironmentSection::default(),
            policies: default_policies(),
        }
    }
}

/// The seven benchmark policies with default parameters.
pub fn default_policies() -> Vec<PolicySpec> {
    PolicyKind::BENCHMARK.iter().map(|&k| PolicySpec::default_for(k)).collect()
}

impl ExperimentConfig {
    pub fn horizon(&self) -> u64 {
        self.run.horizon.unwrap_or(self.environment.preset.default_horizon())
    }

    /// Keeps only the policies with the given labels.
    pub fn select_policies(&mut self, labels: &[String]) -> Result<()> {
        let known: Vec<&str> = self.policies.iter().map(|p| p.label.as_str()).collect();
        let mut issues = Vec::new();
        let mut selected = Vec::new();
        for label in labels {
            if let Some(p) = self.policies.iter().find(|p| &p.label == label) {
                if !selected.contains(p) {
                    selected.push(p.clone());
                }
            } else if let Some(kind) = PolicyKind::from_name(label) {
                selected.push(PolicySpec::default_for(kind));
            } else {
                issues.push(ConfigIssue::new(
                    "--policy",
                    format!("unknown policy `{label}`; configured: {}; kinds: {}", known.join(", "), kind_names()),
                ));
            }
        }
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        sort_policies(&mut selected);
        self.policies = selected;
        Ok(())
    }

    /// Everything that determines the results, as compact JSON. The output
    /// directory and the dataset's location are left out; the dataset is
    /// identified by its own hash.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.run.output = None;
        copy.environment.dataset = None;
        serde_json::to_string(&copy).expect("configuration serializes")
    }
}

fn kind_names() -> String {
    PolicyKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
}

fn sort_policies(policies: &mut [PolicySpec]) {
    policies.sort_by(|a, b| (a.kind(), &a.label).cmp(&(b.kind(), &b.label)));
}

/// Reads and validates a configuration file. A relative dataset path is
/// taken relative to the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut cfg = parse_config(&text)?;
    if let Some(d) = &cfg.environment.dataset {
        if d.is_relative() {
            cfg.environment.dataset = Some(base.join(d));
        }
    }
    Ok(cfg)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let location = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "input".into());
        Error::Validation(vec![ConfigIssue::new(location, e.message().to_string())])
    })?;
    let mut walker = Walker::default();
    let cfg = walker.config(&table);
    let mut issues = walker.issues;
    issues.extend(validate_config(&cfg));
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(issues))
    }
}

#[derive(Default)]
struct Walker {
    issues: Vec<ConfigIssue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Walker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue::new(path, message));
    }

    fn unknown_keys(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.issue(join(path, key), format!("unknown key; expected one of: {}", allowed.join(", ")));
            }
        }
    }

    fn section<'a>(&mut self, table: &'a Table, key: &str) -> Option<&'a Table> {
        match table.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.issue(key, "expected a section");
                None
            }
        }
    }

    fn u64(&mut self, table: &Table, path: &str, key: &str) -> Option<u64> {
        let v = table.get(key)?;
        match v.as_integer() {
            Some(i) if i >= 0 => Some(i as u64),
            Some(_) => {
                self.issue(join(path, key), "must not be negative");
                None
            }
            None => {
                self.issue(join(path, key), "expected an integer");
                None
            }
        }
    }

    fn f64(&mut self, table: &Table, path: &str, key: &str) -> Option<f64> {
        let v = table.get(key)?;
        number(v).or_else(|| {
            self.issue(join(path, key), "expected a number");
            None
        })
    }

    fn string(&mut self, table: &Table, path: &str, key: &str) -> Option<String> {
        let v = table.get(key)?;
        v.as_str().map(str::to_string).or_else(|| {
            self.issue(join(path, key), "expected a string");
            None
        })
    }

    fn u64_list(&mut self, table: &Table, path: &str, key: &str) -> Option<Vec<u64>> {
        let v = table.get(key)?;
        let list = v
            .as_array()
            .and_then(|a| a.iter().map(|x| x.as_integer().filter(|&i| i >= 0).map(|i| i as u64)).collect());
        if list.is_none() {
            self.issue(join(path, key), "expected a list of non-negative integers");
        }
        list
    }

    fn f64_list(&mut self, table: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let v = table.get(key)?;
        let list = v.as_array().and_then(|a| a.iter().map(number).collect());
        if list.is_none() {
            self.issue(join(path, key), "expected a list of numbers");
        }
        list
    }

    fn f64_matrix(&mut self, table: &Table, path: &str, key: &str) -> Option<Vec<Vec<f64>>> {
        let v = table.get(key)?;
        let m = v.as_array().and_then(|rows| {
            rows.iter()
                .map(|r| r.as_array().and_then(|a| a.iter().map(number).collect()))
                .collect()
        });
        if m.is_none() {
            self.issue(join(path, key), "expected a list of lists of numbers");
        }
        m
    }

    fn config(&mut self, root: &Table) -> ExperimentConfig {
        self.unknown_keys(root, "", &["run", "environment", "policies"]);
        let mut cfg = ExperimentConfig::default();
        if let Some(run) = self.section(root, "run") {
            self.unknown_keys(run, "run", &["horizon", "runs", "seed", "output"]);
            cfg.run.horizon = self.u64(run, "run", "horizon");
            if let Some(r) = self.u64(run, "run", "runs") {
                cfg.run.runs = r;
            }
            if let Some(s) = self.u64(run, "run", "seed") {
                cfg.run.seed = s;
            }
            cfg.run.output = self.string(run, "run", "output").map(PathBuf::from);
        }
        if let Some(env) = self.section(root, "environment") {
            cfg.environment = self.environment(env);
        }
        if let Some(policies) = self.section(root, "policies") {
            cfg.policies = self.policies(policies);
        }
        cfg
    }

    fn environment(&mut self, env: &Table) -> EnvironmentSection {
        const P: &str = "environment";
        self.unknown_keys(
            env,
            P,
            &[
                "preset",
                "dataset",
                "split_seed",
                "cost_sigma",
                "cost_min",
                "cost_max",
                "reward_change_points",
                "cost_change_points",
                "alphabet_sizes",
                "action_count",
                "state_probabilities",
                "reward_tables",
                "cost_means",
            ],
        );
        let mut out = EnvironmentSection::default();
        if let Some(name) = self.string(env, P, "preset") {
            match Preset::from_name(&name) {
                Some(p) => out.preset = p,
                None => {
                    let valid: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                    self.issue(join(P, "preset"), format!("unknown preset `{name}`; valid: {}", valid.join(", ")));
                }
            }
        }
        out.dataset = self.string(env, P, "dataset").map(PathBuf::from);
        out.split_seed = self.u64(env, P, "split_seed").unwrap_or(0);
        out.cost_sigma = self.f64(env, P, "cost_sigma");
        out.cost_min = self.f64(env, P, "cost_min");
        out.cost_max = self.f64(env, P, "cost_max");
        out.reward_change_points = self.u64_list(env, P, "reward_change_points");
        out.cost_change_points = self.u64_list(env, P, "cost_change_points");

        let synthetic_keys = ["alphabet_sizes", "action_count", "state_probabilities", "reward_tables", "cost_means"];
        if out.preset == Preset::Synthetic {
            let sizes = self.u64_list(env, P, "alphabet_sizes");
            let actions = self.u64(env, P, "action_count");
            let probs = self.f64_list(env, P, "state_probabilities");
            let tables = self.f64_matrix(env, P, "reward_tables");
            let costs = self.f64_matrix(env, P, "cost_means");
            for (key, present) in [
                ("alphabet_sizes", sizes.is_some()),
                ("action_count", actions.is_some()),
                ("reward_tables", tables.is_some()),
                ("cost_means", costs.is_some()),
            ] {
                if !present && !env.contains_key(key) {
                    self.issue(join(P, key), "required by the synthetic preset");
                }
            }
            if let (Some(sizes), Some(actions), Some(tables), Some(costs)) = (sizes, actions, tables, costs) {
                out.synthetic = Some(SyntheticTables {
                    alphabet_sizes: sizes.into_iter().map(|s| s as usize).collect(),
                    action_count: actions as usize,
                    state_probabilities: probs,
                    reward_tables: tables,
                    cost_means: costs,
                });
            }
        } else {
            for key in synthetic_keys {
                if env.contains_key(key) {
                    self.issue(join(P, key), "only valid with preset = \"synthetic\"");
                }
            }
        }
        out
    }

    fn policies(&mut self, table: &Table) -> Vec<PolicySpec> {
        let mut out = Vec::new();
        for (label, value) in table {
            let path = format!("policies.{label}");
            let Value::Table(params) = value else {
                self.issue(path, "expected a section");
                continue;
            };
            let kind = match self.string(params, &path, "kind") {
                Some(k) => PolicyKind::from_name(&k).or_else(|| {
                    self.issue(join(&path, "kind"), format!("unknown policy kind `{k}`; valid: {}", kind_names()));
                    None
                }),
                None => PolicyKind::from_name(label).or_else(|| {
                    self.issue(
                        path.clone(),
                        format!("unknown policy `{label}`; valid names: {} (or set `kind`)", kind_names()),
                    );
                    None
                }),
            };
            let Some(kind) = kind else { continue };
            let mut p = PolicyParams::defaults(kind);
            self.params(params, &path, &mut p);
            out.push(PolicySpec::new(label.clone(), p));
        }
        sort_policies(&mut out);
        out
    }

    /// Overwrites the parameters present in `params`.
    fn params(&mut self, params: &Table, path: &str, p: &mut PolicyParams) {
        let keys: &[&str] = match p {
            PolicyParams::NccUcrl2 { window, delta } => {
                *window = self.u64(params, path, "window").unwrap_or(*window);
                *delta = self.f64(params, path, "delta").unwrap_or(*delta);
                &["kind", "window", "delta"]
            }
            PolicyParams::SimOos { delta } => {
                *delta = self.f64(params, path, "delta").unwrap_or(*delta);
                &["kind", "delta"]
            }
            PolicyParams::PsLinucb { alpha, omega, delta } => {
                *alpha = self.f64(params, path, "alpha").unwrap_or(*alpha);
                *omega = self.u64(params, path, "omega").map_or(*omega, |o| o as usize);
                *delta = self.f64(params, path, "delta").unwrap_or(*delta);
                &["kind", "alpha", "omega", "delta"]
            }
            PolicyParams::Linucb { alpha } | PolicyParams::Ucb1 { alpha } => {
                *alpha = self.f64(params, path, "alpha").unwrap_or(*alpha);
                &["kind", "alpha"]
            }
            PolicyParams::EpsGreedy { epsilon } => {
                *epsilon = self.f64(params, path, "epsilon").unwrap_or(*epsilon);
                &["kind", "epsilon"]
            }
            PolicyParams::Random | PolicyParams::Oracle => &["kind"],
        };
        self.unknown_keys(params, path, keys);
    }
}

/// `base` with the parameters in `overrides` replaced, under a new label.
pub fn override_policy(base: &PolicySpec, label: impl Into<String>, overrides: &Table) -> Result<PolicySpec> {
    let label = label.into();
    let mut walker = Walker::default();
    let mut params = base.params;
    walker.params(overrides, &format!("policies.{label}"), &mut params);
    let spec = PolicySpec::new(label, params);
    let mut issues = walker.issues;
    validate_policy(&spec, &mut |path: &str, msg: String| issues.push(ConfigIssue::new(path, msg)));
    if issues.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(issues))
    }
}

fn number(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

/// Checks every semantic constraint and lists all violations.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    let mut issue = |path: &str, msg: String| issues.push(ConfigIssue::new(path, msg));
    let env = &cfg.environment;
    let preset = env.preset;

    if cfg.run.runs == 0 {
        issue("run.runs", "must be at least 1".into());
    }
    let horizon = cfg.horizon();
    if horizon == 0 {
        issue("run.horizon", "must be at least 1".into());
    }
    if let Some(max) = preset.max_horizon() {
        if horizon > max {
            issue("run.horizon", format!("{horizon} exceeds the {max} rounds available to preset {}", preset.name()));
        }
    }
    if preset.uses_dataset() && env.dataset.is_none() {
        issue("environment.dataset", format!("required by preset {}", preset.name()));
    }
    if !preset.uses_dataset() {
        if env.dataset.is_some() {
            issue("environment.dataset", format!("not used by preset {}", preset.name()));
        }
        for (key, present) in [
            ("cost_min", env.cost_min.is_some()),
            ("cost_max", env.cost_max.is_some()),
        ] {
            if present {
                issue(&format!("environment.{key}"), format!("not used by preset {}", preset.name()));
            }
        }
    }
    if matches!(preset, Preset::SyntheticStationary | Preset::SyntheticSwitching) {
        for (key, present) in [
            ("reward_change_points", env.reward_change_points.is_some()),
            ("cost_change_points", env.cost_change_points.is_some()),
        ] {
            if present {
                issue(&format!("environment.{key}"), format!("fixed by preset {}", preset.name()));
            }
        }
    }
    if let Some(s) = env.cost_sigma {
        if !(s >= 0.0 && s.is_finite()) {
            issue("environment.cost_sigma", format!("{s} must be a non-negative number"));
        }
    }
    let (lo, hi) = (env.cost_min.unwrap_or(0.03), env.cost_max.unwrap_or(0.08));
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        issue("environment.cost_min", format!("cost range [{lo}, {hi}] must satisfy 0 <= min <= max <= 1"));
    }
    for (key, points) in [
        ("reward_change_points", &env.reward_change_points),
        ("cost_change_points", &env.cost_change_points),
    ] {
        if let Some(points) = points {
            if points.iter().any(|&p| p < 2) {
                issue(&format!("environment.{key}"), "change points must be rounds of at least 2".into());
            }
            if points.windows(2).any(|w| w[0] >= w[1]) {
                issue(&format!("environment.{key}"), "change points must increase strictly".into());
            }
        }
    }
    if let Some(tables) = &env.synthetic {
        validate_synthetic(tables, env, &mut issue);
    }

    if cfg.policies.is_empty() {
        issue("policies", "no policy configured".into());
    }
    for p in &cfg.policies {
        validate_policy(p, &mut issue);
    }
    issues
}

fn validate_policy(p: &PolicySpec, issue: &mut impl FnMut(&str, String)) {
    let path = format!("policies.{}", p.label);
    let unit_open = |d: f64| d > 0.0 && d < 1.0;
    match p.params {
        PolicyParams::NccUcrl2 { window, delta } => {
            if window == 0 {
                issue(&format!("{path}.window"), "must be at least 1".into());
            }
            if !unit_open(delta) {
                issue(&format!("{path}.delta"), format!("{delta} must lie in (0, 1)"));
            }
        }
        PolicyParams::SimOos { delta } => {
            if !unit_open(delta) {
                issue(&format!("{path}.delta"), format!("{delta} must lie in (0, 1)"));
            }
        }
        PolicyParams::PsLinucb { alpha, omega, delta } => {
            if !(alpha >= 0.0) {
                issue(&format!("{path}.alpha"), format!("{alpha} must be non-negative"));
            }
            if omega == 0 {
                issue(&format!("{path}.omega"), "must be at least 1".into());
            }
            if !(delta >= 0.0) {
                issue(&format!("{path}.delta"), format!("{delta} must be non-negative"));
            }
        }
        PolicyParams::Linucb { alpha } | PolicyParams::Ucb1 { alpha } => {
            if !(alpha >= 0.0) {
                issue(&format!("{path}.alpha"), format!("{alpha} must be non-negative"));
            }
        }
        PolicyParams::EpsGreedy { epsilon } => {
            if !(0.0..=1.0).contains(&epsilon) {
                issue(&format!("{path}.epsilon"), format!("{epsilon} must lie in [0, 1]"));
            }
        }
        PolicyParams::Random | PolicyParams::Oracle => {}
    }
}

fn validate_synthetic(t: &SyntheticTables, env: &EnvironmentSection, issue: &mut impl FnMut(&str, String)) {
    const P: &str = "environment";
    if t.alphabet_sizes.is_empty() || t.alphabet_sizes.contains(&0) {
        issue(&join(P, "alphabet_sizes"), "needs at least one feature, each with a non-empty alphabet".into());
        return;
    }
    if t.alphabet_sizes.len() > crate::feature_space::MAX_FEATURES {
        issue(&join(P, "alphabet_sizes"), format!("at most {} features", crate::feature_space::MAX_FEATURES));
        return;
    }
    let states: Option<usize> = t.alphabet_sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    let Some(states) = states.filter(|&s| s <= 1 << 20) else {
        issue(&join(P, "alphabet_sizes"), "too many state vectors".into());
        return;
    };
    if t.action_count == 0 {
        issue(&join(P, "action_count"), "must be at least 1".into());
        return;
    }
    if let Some(p) = &t.state_probabilities {
        if p.len() != states {
            issue(&join(P, "state_probabilities"), format!("{} entries for {states} state vectors", p.len()));
        } else if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            issue(&join(P, "state_probabilities"), "must be non-negative and sum to 1".into());
        }
    }
    let reward_segments = env.reward_change_points.as_ref().map_or(0, Vec::len) + 1;
    if t.reward_tables.len() != reward_segments {
        issue(
            &join(P, "reward_tables"),
            format!("{} tables for {reward_segments} reward segments", t.reward_tables.len()),
        );
    }
    for (k, table) in t.reward_tables.iter().enumerate() {
        if table.len() != states * t.action_count || table.iter().any(|x| !(0.0..=1.0).contains(x)) {
            issue(
                &format!("{P}.reward_tables[{k}]"),
                format!("needs {} means in [0, 1]", states * t.action_count),
            );
        }
    }
    let cost_segments = env.cost_change_points.as_ref().map_or(0, Vec::len) + 1;
    if t.cost_means.len() != cost_segments {
        issue(&join(P, "cost_means"), format!("{} vectors for {cost_segments} cost segments", t.cost_means.len()));
    }
    for (k, means) in t.cost_means.iter().enumerate() {
        if means.len() != t.alphabet_sizes.len() || means.iter().any(|x| !(0.0..=1.0).contains(x)) {
            issue(
                &format!("{P}.cost_means[{k}]"),
                format!("needs {} costs in [0, 1]", t.alphabet_sizes.len()),
            );
        }
    }
}
