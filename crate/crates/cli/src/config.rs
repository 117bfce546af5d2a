//! Run configuration: flat `key = value` text with dotted keys.
//!
//! Every key has a default. Resolved values are echoed, in [`KEYS`] order,
//! as a `# key = value` header at the top of each output file, and a file
//! that starts with such a header can be fed back as a config.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hyperwalk::geometry::CurvatureModel;
use hyperwalk::increments::{IncrementLaw, RadialProfile};
use hyperwalk::simulator::Mode;

/// First line of every output header.
pub const HEADER_MARK: &str = "# hyperwalk resolved configuration";

/// Known keys with their defaults. `auto` marks defaults derived from other keys.
pub const KEYS: &[(&str, &str)] = &[
    ("command", "auto"),
    ("seed", "0"),
    ("dim", "2"),
    ("curvature.kind", "hyperbolic"),
    ("curvature.k", "1"),
    ("curvature.k_min", "const:1"),
    ("curvature.k_max", "const:1"),
    ("law.kind", "elliptic"),
    ("law.a", "const:1"),
    ("law.b", "const:1"),
    ("law.m", "4"),
    ("law.lambda", "auto"),
    ("law.n", "1"),
    ("walk.steps", "1000"),
    ("walk.walks", "100"),
    ("walk.mode", "radial"),
    ("walk.stride", "auto"),
    ("walk.ball_radius", "5"),
    ("walk.burn_in", "auto"),
    ("walk.escape_radius", "none"),
    ("walk.start_radius", "0"),
    ("grid.start", "10"),
    ("grid.stop", "1000"),
    ("grid.count", "20"),
    ("grid.spacing", "log"),
    ("classify.theta", "0.5"),
    ("classify.r0", "auto"),
    ("classify.epsilon", "0.01"),
    ("mc.samples", "100000"),
    ("validate.tuples", "10000"),
    ("validate.samples", "1000000"),
    ("output.trajectory", "trajectory.csv"),
    ("output.summary", "summary.csv"),
    ("output.margins", "margins.csv"),
    ("output.moments", "moments.csv"),
    ("output.validate", "validate.csv"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Classify,
    Validate,
    Moments,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Classify => "classify",
            Self::Validate => "validate",
            Self::Moments => "moments",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Self::Simulate,
            "classify" => Self::Classify,
            "validate" => Self::Validate,
            "moments" => Self::Moments,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureSpec {
    Hyperbolic(f64),
    Euclidean,
    Pinched { k_min: RadialProfile, k_max: RadialProfile },
}

impl CurvatureSpec {
    /// Lower and upper curvature profiles; `None` for flat space.
    pub fn bounds(&self) -> Option<(RadialProfile, RadialProfile)> {
        match self {
            Self::Hyperbolic(k) => Some((RadialProfile::Constant(*k), RadialProfile::Constant(*k))),
            Self::Euclidean => None,
            Self::Pinched { k_min, k_max } => Some((k_min.clone(), k_max.clone())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkSpec {
    pub steps: u64,
    pub walks: u64,
    pub mode: Mode,
    pub stride: u64,
    pub ball_radius: f64,
    pub burn_in: u64,
    pub escape_radius: Option<f64>,
    pub start_radius: f64,
}

#[derive(Debug, Clone)]
pub struct Outputs {
    pub trajectory: String,
    pub summary: String,
    pub margins: String,
    pub moments: String,
    pub validate: String,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub dim: usize,
    pub curvature: CurvatureSpec,
    pub law: IncrementLaw,
    pub walk: WalkSpec,
    pub grid: Vec<f64>,
    pub theta: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub validate_tuples: usize,
    pub validate_samples: usize,
    pub outputs: Outputs,
    resolved: Vec<(&'static str, String)>,
}

/// A config problem, located by key and (when it came from the file) line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = std::result::Result<T, ConfigError>;

struct Entry {
    value: String,
    line: Option<usize>,
}

struct Reader {
    entries: HashMap<&'static str, Entry>,
    base_dir: PathBuf,
    resolved: Vec<(&'static str, String)>,
}

impl Reader {
    fn raw(&self, key: &'static str) -> &str {
        &self.entries[key].value
    }

    fn is_auto(&self, key: &'static str) -> bool {
        self.raw(key) == "auto"
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_owned(),
            line: self.entries.get(key).and_then(|e| e.line),
            message: message.into(),
        }
    }

    fn echo(&mut self, key: &'static str, value: impl fmt::Display) {
        self.resolved.push((key, value.to_string()));
    }

    fn float(&mut self, key: &'static str) -> Parsed<f64> {
        let v: f64 = self
            .raw(key)
            .parse()
            .map_err(|_| self.error(key, format!("expected a number, got '{}'", self.raw(key))))?;
        if !v.is_finite() {
            return Err(self.error(key, "must be finite"));
        }
        self.echo(key, v);
        Ok(v)
    }

    fn integer(&mut self, key: &'static str) -> Parsed<u64> {
        let v: u64 = self
            .raw(key)
            .parse()
            .map_err(|_| self.error(key, format!("expected a nonnegative integer, got '{}'", self.raw(key))))?;
        self.echo(key, v);
        Ok(v)
    }

    fn word(&mut self, key: &'static str, allowed: &[&str]) -> Parsed<String> {
        let v = self.raw(key).to_owned();
        if !allowed.contains(&v.as_str()) {
            return Err(self.error(key, format!("expected one of {}, got '{v}'", allowed.join(", "))));
        }
        self.echo(key, &v);
        Ok(v)
    }

    fn profile(&mut self, key: &'static str) -> Parsed<RadialProfile> {
        let text = self.raw(key).to_owned();
        let (profile, echo) = parse_profile(&text, &self.base_dir).map_err(|m| self.error(key, m))?;
        self.echo(key, echo);
        Ok(profile)
    }

    fn file_name(&mut self, key: &'static str) -> Parsed<String> {
        let v = self.raw(key).to_owned();
        let bare = !v.is_empty()
            && v != "."
            && v != ".."
            && !v.contains(['/', '\\'])
            && Path::new(&v).file_name().is_some_and(|f| f == v.as_str());
        if !bare {
            return Err(self.error(key, format!("must be a bare file name inside the output directory, got '{v}'")));
        }
        self.echo(key, &v);
        Ok(v)
    }
}

/// Parses a radial profile: `const:c`, `powerdecay:c,p` (`c·min(1, r^{-p})`),
/// `powergrowth:c,p` (`c·max(1, r)^p`), `affine:c0,c1` (`c0 + c1·r`),
/// `expdecay:c,rate` (`c·e^{-rate·r}`) or `table:path` (two columns `r, value`,
/// linear in between). Returns the profile and the text to echo, with table
/// paths made absolute.
pub fn parse_profile(text: &str, base_dir: &Path) -> std::result::Result<(RadialProfile, String), String> {
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| format!("expected kind:arguments, got '{text}'"))?;
    if kind == "table" {
        let path = base_dir.join(args);
        let path = path.canonicalize().unwrap_or(path);
        let body = fs::read_to_string(&path).map_err(|e| format!("cannot read profile table {}: {e}", path.display()))?;
        let profile = RadialProfile::table(parse_table(&body)?).map_err(|e| e.to_string())?;
        return Ok((profile, format!("table:{}", path.display())));
    }
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad number '{a}' in profile '{text}'")))
        .collect::<std::result::Result<_, _>>()?;
    let want = |n: usize| {
        if nums.len() == n {
            Ok(())
        } else {
            Err(format!("profile kind '{kind}' takes {n} argument(s), got {}", nums.len()))
        }
    };
    let profile = match kind {
        "const" => want(1).and_then(|_| RadialProfile::constant(nums[0]).map_err(|e| e.to_string())),
        "powerdecay" => want(2).and_then(|_| RadialProfile::power_decay(nums[0], nums[1]).map_err(|e| e.to_string())),
        "powergrowth" => want(2).and_then(|_| RadialProfile::power_growth(nums[0], nums[1]).map_err(|e| e.to_string())),
        "affine" => want(2).and_then(|_| RadialProfile::affine(nums[0], nums[1]).map_err(|e| e.to_string())),
        "expdecay" => want(2).and_then(|_| RadialProfile::exp_decay(nums[0], nums[1]).map_err(|e| e.to_string())),
        _ => Err(format!(
            "unknown profile kind '{kind}' (expected const, powerdecay, powergrowth, affine, expdecay or table)"
        )),
    }?;
    let echo = profile.to_string();
    Ok((profile, echo))
}

fn parse_table(body: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut points = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let parsed: Vec<f64> = cols.iter().filter_map(|c| c.parse().ok()).collect();
        if cols.len() != 2 || parsed.len() != 2 {
            return Err(format!("profile table line {}: expected two numbers, got '{line}'", i + 1));
        }
        points.push((parsed[0], parsed[1]));
    }
    Ok(points)
}

/// Returns the config text embedded in an output header, or the input itself
/// if it does not start with one.
pub fn strip_header(text: &str) -> String {
    if !text.starts_with(HEADER_MARK) {
        return text.to_owned();
    }
    text.lines()
        .skip(1)
        .map_while(|l| l.strip_prefix("# "))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reads a config file (or an output file's header) from disk.
pub fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(parse_config(&strip_header(&text), &base)?)
}

/// Parses and validates config text. Relative table paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Parsed<RunConfig> {
    let mut entries: HashMap<&'static str, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
            key: line.to_owned(),
            line: Some(n),
            message: "expected 'key = value'".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&(known, _)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(ConfigError {
                key: key.to_owned(),
                line: Some(n),
                message: "unknown key".into(),
            });
        };
        if let Some(prev) = entries.get(known) {
            return Err(ConfigError {
                key: key.to_owned(),
                line: Some(n),
                message: format!("duplicate key (first set on line {})", prev.line.unwrap_or(0)),
            });
        }
        entries.insert(known, Entry { value: value.to_owned(), line: Some(n) });
    }
    for (key, default) in KEYS {
        entries.entry(key).or_insert_with(|| Entry { value: (*default).to_owned(), line: None });
    }
    let mut r = Reader { entries, base_dir: base_dir.to_path_buf(), resolved: Vec::new() };

    let command = match r.raw("command") {
        "auto" => None,
        other => Some(Command::parse(other).ok_or_else(|| {
            r.error("command", format!("expected simulate, classify, validate or moments, got '{other}'"))
        })?),
    };
    r.echo("command", command.map_or("auto", Command::name));
    let seed = r.integer("seed")?;
    let dim = r.integer("dim")? as usize;
    if dim < 2 {
        return Err(r.error("dim", format!("dimension must be at least 2, got {dim}")));
    }

    let kind = r.word("curvature.kind", &["hyperbolic", "euclidean", "pinched"])?;
    let k = r.float("curvature.k")?;
    let k_min = r.profile("curvature.k_min")?;
    let k_max = r.profile("curvature.k_max")?;
    let curvature = match kind.as_str() {
        "hyperbolic" => {
            CurvatureModel::hyperbolic(k, dim).map_err(|e| r.error("curvature.k", e.to_string()))?;
            CurvatureSpec::Hyperbolic(k)
        }
        "euclidean" => CurvatureSpec::Euclidean,
        _ => {
            if !(k_min.inf() > 0.0) {
                return Err(r.error("curvature.k_min", "must be bounded below by a positive constant"));
            }
            CurvatureSpec::Pinched { k_min, k_max }
        }
    };

    let law_kind = r.word("law.kind", &["elliptic", "box", "heavytail", "inward"])?;
    let a = r.profile("law.a")?;
    let b = r.profile("law.b")?;
    let m = r.float("law.m")?;
    let lambda = if r.is_auto("law.lambda") {
        let p = RadialProfile::PowerGrowth { c: 1.0, p: 1.0 / (m - 1.0) };
        r.echo("law.lambda", &p);
        p
    } else {
        r.profile("law.lambda")?
    };
    let n = r.float("law.n")?;
    let law = match law_kind.as_str() {
        "elliptic" => IncrementLaw::elliptic(a, b, dim).map_err(|e| r.error("law.a", e.to_string()))?,
        "box" => IncrementLaw::boxed(a, b, dim).map_err(|e| r.error("law.a", e.to_string()))?,
        "heavytail" => {
            if !(m > 3.0) {
                return Err(r.error("law.m", format!("the heavy-tail law needs m > 3 so that d_tot has a finite second moment with room to spare, got {m}")));
            }
            IncrementLaw::heavy_tail_with(m, lambda, dim).map_err(|e| r.error("law.lambda", e.to_string()))?
        }
        _ => IncrementLaw::inward_biased(n, dim).map_err(|e| r.error("law.n", e.to_string()))?,
    };

    let steps = r.integer("walk.steps")?;
    let walks = r.integer("walk.walks")?;
    if steps == 0 {
        return Err(r.error("walk.steps", "must be at least 1"));
    }
    if walks == 0 {
        return Err(r.error("walk.walks", "must be at least 1"));
    }
    let mode = match r.word("walk.mode", &["radial", "ambient"])?.as_str() {
        "radial" => Mode::RadialOnly,
        _ => Mode::Ambient,
    };
    let stride = if r.is_auto("walk.stride") {
        let s = (steps / 1000).max(1);
        r.echo("walk.stride", s);
        s
    } else {
        let s = r.integer("walk.stride")?;
        if s == 0 {
            return Err(r.error("walk.stride", "must be at least 1"));
        }
        s
    };
    let ball_radius = r.float("walk.ball_radius")?;
    if !(ball_radius > 0.0) {
        return Err(r.error("walk.ball_radius", "must be positive"));
    }
    let burn_in = if r.is_auto("walk.burn_in") {
        r.echo("walk.burn_in", steps / 10);
        steps / 10
    } else {
        r.integer("walk.burn_in")?
    };
    let escape_radius = if r.raw("walk.escape_radius") == "none" {
        r.echo("walk.escape_radius", "none");
        None
    } else {
        let e = r.float("walk.escape_radius")?;
        if !(e > 0.0) {
            return Err(r.error("walk.escape_radius", "must be positive or 'none'"));
        }
        Some(e)
    };
    let start_radius = r.float("walk.start_radius")?;
    if start_radius < 0.0 {
        return Err(r.error("walk.start_radius", "must be nonnegative"));
    }

    let start = r.float("grid.start")?;
    let stop = r.float("grid.stop")?;
    let count = r.integer("grid.count")? as usize;
    let spacing = r.word("grid.spacing", &["log", "linear"])?;
    if start < 0.0 {
        return Err(r.error("grid.start", "must be nonnegative"));
    }
    if count == 0 {
        return Err(r.error("grid.count", "must be at least 1"));
    }
    if count > 1 && !(stop > start) {
        return Err(r.error("grid.stop", format!("must exceed grid.start = {start}")));
    }
    if spacing == "log" && !(start > 0.0) {
        return Err(r.error("grid.start", "log spacing needs a positive start"));
    }
    let grid = radius_grid(start, stop, count, spacing == "log");

    let theta = r.float("classify.theta")?;
    if !(theta > 0.0) {
        return Err(r.error("classify.theta", "must be positive"));
    }
    let r0 = if r.is_auto("classify.r0") {
        r.echo("classify.r0", start);
        start
    } else {
        r.float("classify.r0")?
    };
    let epsilon = r.float("classify.epsilon")?;
    if !(epsilon > 0.0) {
        return Err(r.error("classify.epsilon", "must be positive"));
    }
    let samples = r.integer("mc.samples")? as usize;
    if samples < 1000 {
        return Err(r.error("mc.samples", "must be at least 1000"));
    }
    let validate_tuples = r.integer("validate.tuples")? as usize;
    let validate_samples = r.integer("validate.samples")? as usize;
    if validate_tuples == 0 {
        return Err(r.error("validate.tuples", "must be at least 1"));
    }
    if validate_samples < 1000 {
        return Err(r.error("validate.samples", "must be at least 1000"));
    }
    let outputs = Outputs {
        trajectory: r.file_name("output.trajectory")?,
        summary: r.file_name("output.summary")?,
        margins: r.file_name("output.margins")?,
        moments: r.file_name("output.moments")?,
        validate: r.file_name("output.validate")?,
    };

    Ok(RunConfig {
        command,
        seed,
        dim,
        curvature,
        law,
        walk: WalkSpec { steps, walks, mode, stride, ball_radius, burn_in, escape_radius, start_radius },
        grid,
        theta,
        r0,
        epsilon,
        samples,
        validate_tuples,
        validate_samples,
        outputs,
        resolved: r.resolved,
    })
}

/// `count` radii from `start` to `stop`, evenly spaced in `r` or in `log r`.
pub fn radius_grid(start: f64, stop: f64, count: usize, log: bool) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| {
            let t = i as f64 / last;
            if i == 0 {
                start
            } else if i + 1 == count {
                stop
            } else if log {
                (start.ln() + (stop.ln() - start.ln()) * t).exp()
            } else {
                start + (stop - start) * t
            }
        })
        .collect()
}

impl RunConfig {
    /// Output header for a run of `command`: one `# key = value` line per key.
    pub fn header(&self, command: Command) -> String {
        let mut out = String::from(HEADER_MARK);
        out.push('\n');
        for (key, value) in &self.resolved {
            let value = match *key {
                "command" => command.name().to_owned(),
                "seed" => self.seed.to_string(),
                _ => value.clone(),
            };
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out
    }

    pub fn model(&self) -> Option<CurvatureModel> {
        match self.curvature {
            CurvatureSpec::Hyperbolic(k) => CurvatureModel::hyperbolic(k, self.dim).ok(),
            CurvatureSpec::Euclidean => CurvatureModel::euclidean(self.dim).ok(),
            CurvatureSpec::Pinched { .. } => None,
        }
    }
}
