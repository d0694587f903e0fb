//! The experiment configuration file.
//!
//! ```text
//! # comments run to end of line
//! mode = bench
//! seed = 7
//!
//! [grid]
//! p = 0.01, 0.05
//! k = 5, 10
//! c = 1
//! misclass = perfect, 0.98/0.95
//! ```
//!
//! Keys before the first section header may be any `[run]` or `[grid]` key.
//! Every other key must sit in its own section. See [`KEYS`].

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gtseq_core::estimators::EstimatorId;
use gtseq_core::model::{IndepErrorParams, TestAccuracy, TwoDiseaseModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Estimate,
    VerifyUnbiased,
    ScanProperness,
    Identify,
    Simulate,
    Bench,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Estimate,
        Mode::VerifyUnbiased,
        Mode::ScanProperness,
        Mode::Identify,
        Mode::Simulate,
        Mode::Bench,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Estimate => "estimate",
            Mode::VerifyUnbiased => "verify-unbiased",
            Mode::ScanProperness => "scan-properness",
            Mode::Identify => "identify",
            Mode::Simulate => "simulate",
            Mode::Bench => "bench",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(format!("unknown format `{s}` (expected csv or jsonl)")),
        }
    }
}

/// Test errors for the two-trait grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TwoTraitErrors {
    Perfect,
    Indep(IndepErrorParams),
}

/// The plan walked in `simulate` mode.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanChoice {
    Inverse,
    Fixed(u32),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub replicates: u64,
    /// Series truncation order.
    pub order: usize,
    pub format: Format,
    pub out: Option<PathBuf>,

    pub p: Vec<f64>,
    pub k: Vec<u32>,
    pub c: Vec<u32>,
    pub misclass: Vec<TestAccuracy>,
    pub p2: Vec<[f64; 3]>,
    pub misclass2: Vec<TwoTraitErrors>,

    pub estimators: Option<Vec<EstimatorId>>,
    pub y: Vec<u32>,
    pub z: Vec<[u32; 3]>,
    pub bound: u32,
    pub bound2: u32,
    pub tol: f64,
    pub tol_uncertified: f64,
    pub max_total: u32,
    pub plan: PlanChoice,
    pub step_cap: u64,
}

impl ExperimentConfig {
    /// A config with every optional key at its default and an empty grid.
    pub fn with_defaults(mode: Mode, seed: u64) -> Self {
        ExperimentConfig {
            mode,
            seed,
            replicates: 100_000,
            order: 64,
            format: Format::Csv,
            out: None,
            p: Vec::new(),
            k: Vec::new(),
            c: Vec::new(),
            misclass: vec![TestAccuracy::PERFECT],
            p2: Vec::new(),
            misclass2: vec![TwoTraitErrors::Perfect],
            estimators: None,
            y: (0..=10).collect(),
            z: vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]],
            bound: 1000,
            bound2: 30,
            tol: 1e-8,
            tol_uncertified: 1e-6,
            max_total: 5000,
            plan: PlanChoice::Inverse,
            step_cap: gtseq_core::plans::DEFAULT_STEP_CAP,
        }
    }

    /// The benchmark grid: `p` in {0.01, 0.05, 0.1}, `k` in {2, 5, 10}, `c`
    /// in {1, 5, 20}, with a perfect test and with `(pi0, pi1) = (0.98, 0.95)`.
    /// The two-trait cells are `(p, p, p/2)` for the same `p` values, with
    /// perfect tests.
    pub fn default_grid(mode: Mode, seed: u64) -> Self {
        let mut cfg = Self::with_defaults(mode, seed);
        cfg.p = vec![0.01, 0.05, 0.1];
        cfg.p2 = cfg.p.iter().map(|&p| [p, p, p / 2.0]).collect();
        cfg.k = vec![2, 5, 10];
        cfg.c = vec![1, 5, 20];
        cfg.misclass = vec![TestAccuracy::PERFECT, TestAccuracy::new(0.98, 0.95).expect("valid")];
        cfg
    }
}

/// A configuration problem, with the offending line when there is one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every accepted key and the section it belongs to.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "run"),
    ("seed", "run"),
    ("replicates", "run"),
    ("order", "run"),
    ("format", "run"),
    ("out", "run"),
    ("p", "grid"),
    ("k", "grid"),
    ("c", "grid"),
    ("misclass", "grid"),
    ("p2", "grid"),
    ("misclass2", "grid"),
    ("use", "estimators"),
    ("y", "estimate"),
    ("z", "estimate"),
    ("bound", "scan"),
    ("bound2", "scan"),
    ("tol", "verify"),
    ("tol_uncertified", "verify"),
    ("max_total", "verify"),
    ("plan", "simulate"),
    ("step_cap", "simulate"),
];

const SECTIONS: &[&str] = &["run", "grid", "estimators", "estimate", "scan", "verify", "simulate"];

struct Entry {
    line: usize,
    value: String,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut section: Option<String> = None;
    let mut entries: HashMap<&'static str, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ConfigError {
            line: Some(line),
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{content}`")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(err(format!("unknown section `[{name}]`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let &(name, home) = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| err(format!("unknown key `{key}`")))?;
        let allowed = match &section {
            None => home == "run" || home == "grid",
            Some(s) => s == home,
        };
        if !allowed {
            return Err(err(format!("key `{key}` belongs in section `[{home}]`")));
        }
        if value.is_empty() {
            return Err(err(format!("key `{key}` has no value")));
        }
        if let Some(prev) = entries.get(name) {
            return Err(err(format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        entries.insert(
            name,
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    build(&entries)
}

fn build(entries: &HashMap<&'static str, Entry>) -> Result<ExperimentConfig, ConfigError> {
    let missing = |key: &str| ConfigError {
        line: None,
        message: format!("missing required key `{key}`"),
    };
    // Present values are checked before absent ones so that errors point at
    // a line whenever they can.
    let mode: Option<Mode> = scalar(entries, "mode")?;
    let seed: Option<u64> = scalar(entries, "seed")?;
    let mut cfg = ExperimentConfig::with_defaults(mode.unwrap_or(Mode::Bench), seed.unwrap_or(0));

    if let Some(v) = scalar(entries, "replicates")? {
        cfg.replicates = v;
    }
    if let Some(v) = scalar::<usize>(entries, "order")? {
        check(entries, "order", v >= 1, "order must be >= 1")?;
        cfg.order = v;
    }
    if let Some(v) = scalar(entries, "format")? {
        cfg.format = v;
    }
    if let Some(e) = entries.get("out") {
        cfg.out = Some(PathBuf::from(&e.value));
    }

    cfg.k = list(entries, "k", parse_from_str::<u32>)?.unwrap_or_default();
    check(entries, "k", cfg.k.iter().all(|&k| k >= 1), "k must be >= 1")?;
    cfg.c = list(entries, "c", parse_from_str::<u32>)?.unwrap_or_default();
    check(entries, "c", cfg.c.iter().all(|&c| c >= 1), "c must be >= 1")?;

    cfg.p = list(entries, "p", parse_from_str::<f64>)?.unwrap_or_default();
    check(
        entries,
        "p",
        cfg.p.iter().all(|p| (0.0..1.0).contains(p)),
        "p must be in [0, 1)",
    )?;
    cfg.p2 = list(entries, "p2", parse_cells)?.unwrap_or_default();
    if let Some(v) = list(entries, "misclass", parse_accuracy)? {
        cfg.misclass = v;
    }
    if let Some(v) = list(entries, "misclass2", parse_two_trait_errors)? {
        cfg.misclass2 = v;
    }

    cfg.estimators = list(entries, "use", parse_from_str::<EstimatorId>)?;
    if let Some(v) = list(entries, "y", parse_from_str::<u32>)? {
        cfg.y = v;
    }
    if let Some(v) = list(entries, "z", parse_counts)? {
        cfg.z = v;
    }
    if let Some(v) = scalar(entries, "bound")? {
        cfg.bound = v;
    }
    if let Some(v) = scalar(entries, "bound2")? {
        cfg.bound2 = v;
    }
    for (key, slot) in [("tol", &mut cfg.tol), ("tol_uncertified", &mut cfg.tol_uncertified)] {
        if let Some(v) = scalar::<f64>(entries, key)? {
            check(entries, key, v > 0.0 && v.is_finite(), "tolerance must be positive")?;
            *slot = v;
        }
    }
    if let Some(v) = scalar(entries, "max_total")? {
        cfg.max_total = v;
    }
    if let Some(v) = scalar::<String>(entries, "plan")? {
        cfg.plan = parse_plan(&v).map_err(|m| at(entries, "plan", m))?;
    }
    if let Some(v) = scalar::<u64>(entries, "step_cap")? {
        check(entries, "step_cap", v >= 1, "step_cap must be >= 1")?;
        cfg.step_cap = v;
    }
    for key in ["mode", "seed", "k", "c"] {
        if !entries.contains_key(key) {
            return Err(missing(key));
        }
    }
    if cfg.p.is_empty() && cfg.p2.is_empty() {
        return Err(missing("p"));
    }
    Ok(cfg)
}

fn at(entries: &HashMap<&'static str, Entry>, key: &str, message: String) -> ConfigError {
    ConfigError {
        line: entries.get(key).map(|e| e.line),
        message,
    }
}

fn check(entries: &HashMap<&'static str, Entry>, key: &str, ok: bool, constraint: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        let value = entries.get(key).map(|e| e.value.as_str()).unwrap_or("");
        Err(at(entries, key, format!("{key} = {value}: {constraint}")))
    }
}

fn parse_from_str<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("`{s}`: {e}"))
}

fn scalar<T: FromStr>(entries: &HashMap<&'static str, Entry>, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    entries
        .get(key)
        .map(|e| parse_from_str(&e.value).map_err(|m| at(entries, key, format!("{key}: {m}"))))
        .transpose()
}

fn list<T>(
    entries: &HashMap<&'static str, Entry>,
    key: &str,
    item: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<Vec<T>>, ConfigError> {
    let Some(e) = entries.get(key) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for part in e.value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(at(entries, key, format!("{key}: empty list item")));
        }
        out.push(item(part).map_err(|m| at(entries, key, format!("{key}: {m}")))?);
    }
    Ok(Some(out))
}

fn slash_numbers<const N: usize, T: FromStr>(s: &str) -> Result<[T; N], String>
where
    T::Err: fmt::Display,
{
    let parts: Vec<&str> = s.split('/').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("`{s}`: expected {N} values separated by `/`"));
    }
    let values: Vec<T> = parts.iter().map(|p| parse_from_str(p)).collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|_| format!("`{s}`: expected {N} values"))
}

fn parse_cells(s: &str) -> Result<[f64; 3], String> {
    let p = slash_numbers::<3, f64>(s)?;
    TwoDiseaseModel::new(p, 1, 1, None).map_err(|e| e.to_string())?;
    Ok(p)
}

fn parse_counts(s: &str) -> Result<[u32; 3], String> {
    slash_numbers::<3, u32>(s)
}

fn parse_accuracy(s: &str) -> Result<TestAccuracy, String> {
    if s == "perfect" {
        return Ok(TestAccuracy::PERFECT);
    }
    let [pi0, pi1] = slash_numbers::<2, f64>(s)?;
    TestAccuracy::new(pi0, pi1).map_err(|e| e.to_string())
}

fn parse_two_trait_errors(s: &str) -> Result<TwoTraitErrors, String> {
    if s == "perfect" {
        return Ok(TwoTraitErrors::Perfect);
    }
    let rest = s
        .strip_prefix("indep:")
        .ok_or_else(|| format!("`{s}`: expected `perfect` or `indep:pi0_1/pi1_1/pi0_2/pi1_2`"))?;
    let [a, b, c, d] = slash_numbers::<4, f64>(rest)?;
    IndepErrorParams::new(a, b, c, d)
        .map(TwoTraitErrors::Indep)
        .map_err(|e| e.to_string())
}

fn parse_plan(s: &str) -> Result<PlanChoice, String> {
    if s == "inverse" {
        Ok(PlanChoice::Inverse)
    } else if let Some(n) = s.strip_prefix("fixed:") {
        Ok(PlanChoice::Fixed(parse_from_str(n.trim())?))
    } else if let Some(path) = s.strip_prefix("file:") {
        Ok(PlanChoice::File(PathBuf::from(path.trim())))
    } else {
        Err(format!("`{s}`: expected `inverse`, `fixed:<n>` or `file:<path>`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = bench\np = 0.05\nk = 10\nc = 5\nseed = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.mode, Mode::Bench);
        assert_eq!(cfg.order, 64);
        assert_eq!(cfg.replicates, 100_000);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.misclass, vec![TestAccuracy::PERFECT]);
    }

    #[test]
    fn k_zero_names_the_constraint() {
        let err = parse_config("mode = bench\np = 0.05\nk = 0\nc = 5\nseed = 1\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("k must be >= 1"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("mode = bench\nbogus = 1\n", 2, "unknown key"),
            ("mode = bench\n[nope]\n", 2, "unknown section"),
            ("mode = bench\njust text\n", 2, "key = value"),
            ("seed = 1\n[scan]\np = 0.1\n", 3, "belongs in section"),
            ("mode = bench\nmode = identify\n", 2, "duplicate"),
            ("mode = bench\np = 0.1, x\n", 2, "`x`"),
            ("mode = fly\n", 1, "unknown mode"),
            ("mode = bench\nmisclass = 0.5/0.5\n", 2, "not identifiable"),
            ("mode = bench\np2 = 0.1/0.2\n", 2, "3 values"),
        ];
        for (text, line, fragment) in cases {
            let err = parse_config(text).unwrap_err();
            assert_eq!(err.line, Some(line), "{text}: {err}");
            assert!(err.message.contains(fragment), "{text}: {err}");
        }
    }

    #[test]
    fn missing_keys() {
        let err = parse_config("mode = bench\nk = 1\nc = 1\np = 0.1\n").unwrap_err();
        assert_eq!(err.line, None);
        assert!(err.message.contains("`seed`"));
        let err = parse_config("mode = bench\nk = 1\nc = 1\nseed = 2\n").unwrap_err();
        assert!(err.message.contains("`p`"));
    }

    #[test]
    fn sections_comments_and_lists() {
        let text = "\
# header comment
mode = scan-properness   # trailing
seed = 3
[grid]
p = 0.01, 0.05, 0.1
k = 5, 10
c = 1
misclass = perfect, 0.98/0.95
p2 = 0.1/0.1/0.05
misclass2 = perfect, indep:0.98/0.95/0.97/0.9
[estimators]
use = ub_one_misclass, MLE-ONE
[scan]
bound = 50
[simulate]
plan = fixed:5
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.p, vec![0.01, 0.05, 0.1]);
        assert_eq!(cfg.k, vec![5, 10]);
        assert_eq!(cfg.misclass.len(), 2);
        assert_eq!(cfg.p2, vec![[0.1, 0.1, 0.05]]);
        assert!(matches!(cfg.misclass2[1], TwoTraitErrors::Indep(_)));
        assert_eq!(
            cfg.estimators,
            Some(vec![EstimatorId::UbOneMisclass, EstimatorId::MleOne])
        );
        assert_eq!(cfg.bound, 50);
        assert_eq!(cfg.plan, PlanChoice::Fixed(5));
    }
}
