//! Run configuration: a TOML document with a few fixed sections.
//!
//! ```toml
//! kind = "iterate"
//! seed = 7
//!
//! [schedule]
//! max_level = 14          # dyadic n_k = 2^k, or: periods = [1, 2, 6, 12]
//!
//! [potential]
//! values = [0.0]          # or members = [[...], [...]], or file = "w.txt"
//!
//! [lambda]
//! values = [1.0]
//!
//! [energy]
//! min = -4.0
//! max = 4.0
//! step = 0.01
//!
//! [overrides]
//! preset = "desk"         # or "default"
//! amp_exponent = 2.0
//!
//! [iterate]
//! depth = 3
//! radius = 10.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use limpet_core::construct::Overrides;
use limpet_core::{Family, Potential, Schedule};
use serde::Serialize;
use toml::{Table, Value};

/// Experiment kinds, one per subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bands,
    LyapunovCurve,
    MeasBounds,
    Start,
    Induction,
    Iterate,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Bands,
        Kind::LyapunovCurve,
        Kind::MeasBounds,
        Kind::Start,
        Kind::Induction,
        Kind::Iterate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Bands => "bands",
            Kind::LyapunovCurve => "lyapunov-curve",
            Kind::MeasBounds => "meas-bounds",
            Kind::Start => "start",
            Kind::Induction => "induction",
            Kind::Iterate => "iterate",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn allowed() -> String {
        Kind::ALL.map(Kind::name).join(", ")
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem with a config, tied to the dotted key it concerns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyWindow {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl EnergyWindow {
    pub fn grid(&self) -> Vec<f64> {
        limpet_core::construct::energy_grid(self.min, self.max, self.step)
    }
}

/// Settings of the `start` experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartSettings {
    /// Coupling window bound `M`.
    pub coupling_bound: f64,
    pub radius: f64,
    /// Number of start levels to build.
    pub levels: usize,
}

/// Settings of the `induction` experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InductionSettings {
    /// Target period `n_K`.
    pub period: usize,
    /// Assumed lower bounds on `L(E, lambda W)`, one per coupling; empty
    /// means derived from the grid.
    pub deltas: Vec<f64>,
    /// Energy at which the niceness census is taken.
    pub census_energy: f64,
}

/// Settings of the `iterate` experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterateSettings {
    pub depth: usize,
    pub radius: f64,
    pub eps_1: f64,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub kind: Kind,
    pub seed: u64,
    pub schedule: Schedule,
    pub family: Family,
    pub lambdas: Vec<f64>,
    pub energy: EnergyWindow,
    pub preset: String,
    pub overrides: Overrides,
    pub out_dir: Option<PathBuf>,
    pub start: StartSettings,
    pub induction: InductionSettings,
    pub iterate: IterateSettings,
    /// Interior energies per band for the norm-measure certificate.
    pub norm_samples: usize,
    /// The document the config was read from, after command-line overrides.
    pub source: Table,
}

const TOP_KEYS: [&str; 12] = [
    "kind",
    "seed",
    "out_dir",
    "schedule",
    "potential",
    "lambda",
    "energy",
    "overrides",
    "start",
    "induction",
    "iterate",
    "meas_bounds",
];

/// Parses and checks a config, reporting every violation found.
pub fn validate_config(text: &str) -> Result<RunConfig, Vec<Violation>> {
    validate_config_in(text, None, None)
}

/// Like [`validate_config`], with an expected kind (from the subcommand)
/// and a directory that relative `potential.file` paths resolve against.
pub fn validate_config_in(text: &str, kind: Option<Kind>, base: Option<&Path>) -> Result<RunConfig, Vec<Violation>> {
    let table: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(vec![Violation::new("<document>", format!("not valid TOML: {e}"))]),
    };
    validate_table(table, kind, base)
}

/// Sets `key` (dotted) to `value`, parsed as a TOML value when possible and
/// taken as a string otherwise.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), Violation> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(Violation::new(assignment, "expected KEY=VALUE"));
    };
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Violation::new(key, "empty key segment"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(Violation::new(key, format!("{p} is not a section"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

struct Checker {
    errors: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(Violation::new(field, message));
    }

    fn section<'a>(&mut self, table: &'a Table, name: &str) -> Option<&'a Table> {
        match table.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.push(name, "expected a section");
                None
            }
        }
    }

    fn unknown(&mut self, table: Option<&Table>, prefix: &str, known: &[&str]) {
        if let Some(t) = table {
            for k in t.keys() {
                if !known.contains(&k.as_str()) {
                    self.push(
                        &format!("{prefix}.{k}"),
                        format!("unknown key; expected one of {}", known.join(", ")),
                    );
                }
            }
        }
    }

    fn float(&mut self, table: Option<&Table>, prefix: &str, key: &str) -> Option<f64> {
        let field = format!("{prefix}.{key}");
        match table?.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.push(&field, "expected a number");
                None
            }
        }
    }

    fn uint(&mut self, table: Option<&Table>, prefix: &str, key: &str) -> Option<u64> {
        let field = format!("{prefix}.{key}");
        match table?.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.push(&field, "expected a non-negative integer");
                None
            }
        }
    }

    fn floats(&mut self, table: Option<&Table>, prefix: &str, key: &str) -> Option<Vec<f64>> {
        let field = format!("{prefix}.{key}");
        match table?.get(key)? {
            Value::Array(a) => {
                let out: Option<Vec<f64>> = a.iter().map(number).collect();
                if out.is_none() {
                    self.push(&field, "expected an array of numbers");
                }
                out
            }
            _ => {
                self.push(&field, "expected an array of numbers");
                None
            }
        }
    }

    fn positive(&mut self, field: &str, x: f64) -> bool {
        if x.is_finite() && x > 0.0 {
            true
        } else {
            self.push(field, format!("must be a positive finite number, got {x:?}"));
            false
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn validate_table(table: Table, expected: Option<Kind>, base: Option<&Path>) -> Result<RunConfig, Vec<Violation>> {
    let mut c = Checker { errors: Vec::new() };
    for k in table.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            c.push(k, format!("unknown key; expected one of {}", TOP_KEYS.join(", ")));
        }
    }

    // kind
    let kind = match table.get("kind") {
        Some(Value::String(s)) => match Kind::parse(s) {
            Some(k) => {
                if let Some(e) = expected.filter(|&e| e != k) {
                    c.push("kind", format!("config is for {k:?} but the command runs {}", e.name()));
                }
                Some(k)
            }
            None => {
                c.push(
                    "kind",
                    format!("unknown experiment kind {s:?}; allowed: {}", Kind::allowed()),
                );
                None
            }
        },
        Some(_) => {
            c.push("kind", format!("expected a string; allowed: {}", Kind::allowed()));
            None
        }
        None => {
            if expected.is_none() {
                c.push("kind", format!("missing; allowed: {}", Kind::allowed()));
            }
            expected
        }
    };

    let seed = match table.get("seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => {
            c.push("seed", "expected a non-negative integer");
            0
        }
    };
    let out_dir = match table.get("out_dir") {
        None => None,
        Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
        Some(_) => {
            c.push("out_dir", "expected a non-empty path string");
            None
        }
    };

    // schedule
    let sched_t = c.section(&table, "schedule");
    c.unknown(sched_t, "schedule", &["max_level", "periods"]);
    let schedule = match (
        sched_t.and_then(|t| t.get("max_level")),
        sched_t.and_then(|t| t.get("periods")),
    ) {
        (Some(_), Some(_)) => {
            c.push("schedule", "give either max_level or periods, not both");
            None
        }
        (None, Some(Value::Array(a))) => {
            let ps: Option<Vec<usize>> = a
                .iter()
                .map(|v| v.as_integer().filter(|&i| i > 0).map(|i| i as usize))
                .collect();
            match ps {
                None => {
                    c.push("schedule.periods", "expected an array of positive integers");
                    None
                }
                Some(ps) => match Schedule::new(ps) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        c.push("schedule.periods", e.to_string());
                        None
                    }
                },
            }
        }
        (None, Some(_)) => {
            c.push("schedule.periods", "expected an array of positive integers");
            None
        }
        (max, None) => {
            let level = match max {
                None => Some(14),
                Some(Value::Integer(i)) if (1..=40).contains(i) => Some(*i as u32),
                Some(_) => {
                    c.push("schedule.max_level", "expected an integer in 1..=40");
                    None
                }
            };
            level.map(Schedule::dyadic)
        }
    };

    // potential
    let pot_t = c.section(&table, "potential");
    c.unknown(pot_t, "potential", &["values", "members", "file"]);
    let family = read_family(&mut c, pot_t, base);
    if let (Some(f), Some(s)) = (&family, &schedule) {
        if s.level_of(f.period()).is_none() {
            c.push(
                "potential",
                format!("period {} is not one of the schedule periods", f.period()),
            );
        }
    }

    // lambda
    let lam_t = c.section(&table, "lambda");
    c.unknown(lam_t, "lambda", &["values"]);
    let lambdas = match c.floats(lam_t, "lambda", "values") {
        None => vec![1.0],
        Some(v) if v.is_empty() => {
            c.push("lambda.values", "must not be empty");
            v
        }
        Some(v) => {
            if v.iter().any(|x| !x.is_finite()) {
                c.push("lambda.values", "must be finite");
            }
            if kind == Some(Kind::Iterate) && v.iter().any(|&x| x == 0.0) {
                c.push("lambda.values", "coupling 0 is not allowed for iterate");
            }
            v
        }
    };

    // energy
    let en_t = c.section(&table, "energy");
    c.unknown(en_t, "energy", &["min", "max", "step"]);
    let energy = EnergyWindow {
        min: c.float(en_t, "energy", "min").unwrap_or(-4.0),
        max: c.float(en_t, "energy", "max").unwrap_or(4.0),
        step: c.float(en_t, "energy", "step").unwrap_or(0.01),
    };
    c.positive("energy.step", energy.step);
    if !(energy.min.is_finite() && energy.max.is_finite() && energy.min < energy.max) {
        c.push(
            "energy",
            format!("need finite min < max, got [{:?}, {:?}]", energy.min, energy.max),
        );
    } else if energy.step > 0.0 && (energy.max - energy.min) / energy.step > 1e8 {
        c.push("energy.step", "grid would exceed 1e8 points");
    }

    // overrides
    let ov_t = c.section(&table, "overrides");
    let (preset, overrides) = read_overrides(&mut c, ov_t, seed);

    // per-kind sections
    let st_t = c.section(&table, "start");
    c.unknown(st_t, "start", &["coupling_bound", "radius", "levels"]);
    let start = StartSettings {
        coupling_bound: c.float(st_t, "start", "coupling_bound").unwrap_or(1.0),
        radius: c.float(st_t, "start", "radius").unwrap_or(10.0),
        levels: c.uint(st_t, "start", "levels").unwrap_or(1) as usize,
    };
    if start.coupling_bound.is_nan() || start.coupling_bound < 1.0 {
        c.push("start.coupling_bound", "must be at least 1");
    }
    c.positive("start.radius", start.radius);
    if start.levels == 0 {
        c.push("start.levels", "must be at least 1");
    }

    let in_t = c.section(&table, "induction");
    c.unknown(in_t, "induction", &["period", "deltas", "census_energy"]);
    let induction = InductionSettings {
        period: c.uint(in_t, "induction", "period").unwrap_or(0) as usize,
        deltas: c.floats(in_t, "induction", "deltas").unwrap_or_default(),
        census_energy: c.float(in_t, "induction", "census_energy").unwrap_or(0.0),
    };
    if kind == Some(Kind::Induction) {
        match &family {
            _ if induction.period == 0 => c.push("induction.period", "required for induction"),
            Some(f) if induction.period % f.period() != 0 || induction.period <= f.period() => c.push(
                "induction.period",
                format!("must be a proper multiple of the potential period {}", f.period()),
            ),
            _ => {}
        }
        if !induction.deltas.is_empty() && induction.deltas.len() != lambdas.len() {
            c.push("induction.deltas", "must have one entry per coupling");
        }
        if induction.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            c.push("induction.deltas", "must be positive and finite");
        }
    }

    let it_t = c.section(&table, "iterate");
    c.unknown(it_t, "iterate", &["depth", "radius", "eps_1"]);
    let iterate = IterateSettings {
        depth: c.uint(it_t, "iterate", "depth").unwrap_or(3) as usize,
        radius: c.float(it_t, "iterate", "radius").unwrap_or(10.0),
        eps_1: c.float(it_t, "iterate", "eps_1").unwrap_or(1.0),
    };
    if iterate.depth == 0 {
        c.push("iterate.depth", "must be at least 1");
    }
    c.positive("iterate.radius", iterate.radius);
    if !(iterate.eps_1 > 0.0 && iterate.eps_1 <= 1.0) {
        c.push("iterate.eps_1", "must lie in (0, 1]");
    }

    let mb_t = c.section(&table, "meas_bounds");
    c.unknown(mb_t, "meas_bounds", &["samples_per_band"]);
    let norm_samples = c.uint(mb_t, "meas_bounds", "samples_per_band").unwrap_or(16) as usize;
    if norm_samples == 0 {
        c.push("meas_bounds.samples_per_band", "must be at least 1");
    }

    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    Ok(RunConfig {
        kind: kind.expect("checked"),
        seed,
        schedule: schedule.expect("checked"),
        family: family.expect("checked"),
        lambdas,
        energy,
        preset,
        overrides,
        out_dir,
        start,
        induction,
        iterate,
        norm_samples,
        source: table,
    })
}

fn read_family(c: &mut Checker, pot: Option<&Table>, base: Option<&Path>) -> Option<Family> {
    let Some(pot) = pot else {
        c.push("potential", "missing section; give values, members or file");
        return None;
    };
    let given = ["values", "members", "file"]
        .iter()
        .filter(|k| pot.contains_key(**k))
        .count();
    if given != 1 {
        c.push("potential", "give exactly one of values, members, file");
        return None;
    }
    let members: Vec<Potential> = if pot.contains_key("values") {
        let v = c.floats(Some(pot), "potential", "values")?;
        vec![potential(c, "potential.values", v)?]
    } else if let Some(m) = pot.get("members") {
        let Some(rows) = m.as_array().filter(|a| !a.is_empty()) else {
            c.push("potential.members", "expected a non-empty array of arrays of numbers");
            return None;
        };
        let mut out = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let field = format!("potential.members[{i}]");
            let vals: Option<Vec<f64>> = row.as_array().and_then(|a| a.iter().map(number).collect());
            match vals {
                Some(v) => out.push(potential(c, &field, v)?),
                None => {
                    c.push(&field, "expected an array of numbers");
                    return None;
                }
            }
        }
        out
    } else {
        let Some(path) = pot.get("file").and_then(Value::as_str) else {
            c.push("potential.file", "expected a path string");
            return None;
        };
        let path = match base {
            Some(b) if Path::new(path).is_relative() => b.join(path),
            _ => PathBuf::from(path),
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                c.push("potential.file", format!("cannot read {}: {e}", path.display()));
                return None;
            }
        };
        // blocks separated by blank lines, each in the two-line text form
        let mut out = Vec::new();
        for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
            match Potential::from_text(block) {
                Ok(p) => out.push(p),
                Err(e) => {
                    c.push("potential.file", format!("{}: {e}", path.display()));
                    return None;
                }
            }
        }
        out
    };
    match Family::new(members) {
        Ok(f) => Some(f),
        Err(e) => {
            c.push("potential", e.to_string());
            None
        }
    }
}

fn potential(c: &mut Checker, field: &str, values: Vec<f64>) -> Option<Potential> {
    match Potential::new(values) {
        Ok(p) => Some(p),
        Err(e) => {
            c.push(field, e.to_string());
            None
        }
    }
}

fn read_overrides(c: &mut Checker, ov: Option<&Table>, seed: u64) -> (String, Overrides) {
    let preset_name = match ov.and_then(|t| t.get("preset")) {
        None => "default".to_string(),
        Some(Value::String(s)) if s == "default" || s == "desk" => s.clone(),
        Some(_) => {
            c.push("overrides.preset", "expected \"default\" or \"desk\"");
            "default".to_string()
        }
    };
    let base = if preset_name == "desk" {
        Overrides::desk()
    } else {
        Overrides::default()
    };
    let mut merged = match Value::try_from(&base) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("overrides serialize to a table"),
    };
    if let Some(ov) = ov {
        for (k, v) in ov {
            if k == "preset" {
                continue;
            }
            let field = format!("overrides.{k}");
            if k == "seed" {
                c.push(&field, "set the top-level seed instead");
                continue;
            }
            // each key is checked alone so every bad key is reported
            let mut probe = merged.clone();
            if v.as_str() == Some("none") {
                probe.remove(k);
            } else {
                probe.insert(k.clone(), v.clone());
            }
            match probe.clone().try_into::<Overrides>() {
                Ok(_) => merged = probe,
                Err(e) => c.push(&field, e.message().trim().to_string()),
            }
        }
    }
    let mut overrides: Overrides = merged.try_into().unwrap_or(base);
    overrides.seed = seed;
    (preset_name, overrides)
}
