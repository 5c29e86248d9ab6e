//! Experiment execution and output files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use limpet_core::bands::{compute_bands, ids_band_increments, norm_measure_bound_for, NormGrid};
use limpet_core::cocycle::lyapunov_family;
use limpet_core::construct::{
    iterate_scheme, lemma_induction, lemma_start, niceness_census, InductionParams, InductionRequest,
};
use limpet_core::{Ball, Family};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Kind, RunConfig};
use crate::plot::{csv_field, render_csv, render_svg, Labels, Series};

pub const MANIFEST_NAME: &str = "manifest.json";

/// One emitted file and its SHA-256 digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// A numerical error met while running one item of an experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorEntry {
    pub item: String,
    pub message: String,
}

/// Outcome of one certificate check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: Kind,
    pub seed: u64,
    pub preset: String,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckEntry>,
    pub errors: Vec<ErrorEntry>,
    pub passed: bool,
}

impl RunManifest {
    /// 0 when every check passed and nothing failed numerically, else 1.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Setup problems that stop a run before any result is produced.
#[derive(Debug)]
pub enum RunError {
    Io { path: PathBuf, source: std::io::Error },
    Threads(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            RunError::Threads(m) => write!(f, "thread pool: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Collects output files, hashing each as it is written.
struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    checks: Vec<CheckEntry>,
    errors: Vec<ErrorEntry>,
}

impl Outputs {
    fn write(&mut self, name: &str, content: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|source| RunError::Io { path, source })?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(content)),
            bytes: content.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("results serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn plot(&mut self, stem: &str, series: &[Series], labels: &Labels) -> Result<(), RunError> {
        self.write(&format!("{stem}.svg"), render_svg(series, labels).as_bytes())?;
        self.write(&format!("{stem}.csv"), render_csv(series).as_bytes())
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckEntry {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn error(&mut self, item: impl Into<String>, err: impl std::fmt::Display) {
        self.errors.push(ErrorEntry {
            item: item.into(),
            message: err.to_string(),
        });
    }
}

/// Runs the experiment, writes its outputs into `out_dir` and the manifest
/// last. `threads` bounds the worker pool (`None`: one per core).
pub fn run(config: &RunConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunManifest, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Threads(e.to_string()))?;
    let mut out = Outputs {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
        checks: Vec::new(),
        errors: Vec::new(),
    };
    pool.install(|| match config.kind {
        Kind::Bands => bands(config, &mut out),
        Kind::LyapunovCurve => lyapunov_curve(config, &mut out),
        Kind::MeasBounds => meas_bounds(config, &mut out),
        Kind::Start => start(config, &mut out),
        Kind::Induction => induction(config, &mut out),
        Kind::Iterate => iterate(config, &mut out),
    })?;
    let passed = out.errors.is_empty() && out.checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        tool: "limpet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: config.kind,
        seed: config.seed,
        preset: config.preset.clone(),
        config: serde_json::to_value(&config.source).expect("toml tables convert to json"),
        files: out.files,
        checks: out.checks,
        errors: out.errors,
        passed,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = out_dir.join(MANIFEST_NAME);
    std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })?;
    Ok(manifest)
}

/// Re-hashes every file listed in the manifest in `dir`; returns the paths
/// whose content no longer matches.
pub fn verify_manifest(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| {
            std::fs::read(dir.join(&f.path))
                .map(|bytes| hex::encode(Sha256::digest(&bytes)) != f.sha256)
                .unwrap_or(true)
        })
        .map(|f| f.path.clone())
        .collect()
}

fn bands(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let mut csv = String::from("member,lambda,band_index,lo,hi,length,touches_prev,touches_next\n");
    let mut spectra = Vec::new();
    for (i, w) in config.family.members().iter().enumerate() {
        for &l in &config.lambdas {
            match compute_bands(w, l) {
                Ok(spec) => {
                    for (k, b) in spec.bands.iter().enumerate() {
                        let _ = writeln!(
                            csv,
                            "{i},{l:?},{k},{:?},{:?},{:?},{},{}",
                            b.lo,
                            b.hi,
                            b.length(),
                            b.touches_prev,
                            b.touches_next
                        );
                    }
                    spectra.push(serde_json::json!({ "member": i, "lambda": l, "spectrum": spec }));
                }
                Err(e) => out.error(format!("bands member {i} lambda {l:?}"), e),
            }
        }
    }
    out.write("bands.csv", csv.as_bytes())?;
    out.json("spectra.json", &spectra)
}

/// `ln((|E| + sqrt(E^2 - 4)) / 2)` outside `[-2, 2]`, zero inside.
fn free_lyapunov(e: f64) -> f64 {
    let a = e.abs();
    if a <= 2.0 {
        0.0
    } else {
        ((a + (a * a - 4.0).sqrt()) / 2.0).ln()
    }
}

fn lyapunov_curve(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let grid = config.energy.grid();
    let free = config
        .family
        .members()
        .iter()
        .all(|w| w.values().iter().all(|&x| x == 0.0));
    let mut csv = String::from("lambda,energy,lyapunov\n");
    let mut series = Vec::new();
    for &l in &config.lambdas {
        let values: Vec<Result<f64, String>> = grid
            .par_iter()
            .map(|&e| lyapunov_family(e, l, &config.family).map_err(|err| err.to_string()))
            .collect();
        let mut points = Vec::with_capacity(grid.len());
        let mut max_err = 0.0f64;
        for (&e, v) in grid.iter().zip(values) {
            match v {
                Ok(x) => {
                    let _ = writeln!(csv, "{l:?},{e:?},{x:?}");
                    points.push((e, x));
                    if free {
                        // the free operator scales: L(E, lambda * 0) = L(E, 0)
                        max_err = max_err.max((x - free_lyapunov(e)).abs());
                    }
                }
                Err(m) => out.error(format!("lyapunov lambda {l:?} energy {e:?}"), m),
            }
        }
        if free {
            out.check(
                format!("free closed form, lambda {l:?}"),
                max_err < 1e-6,
                format!("max error {max_err:e} (tolerance 1e-6)"),
            );
        }
        series.push(Series::new(format!("lambda = {l}"), points));
    }
    out.write("lyapunov.csv", csv.as_bytes())?;
    out.plot(
        "lyapunov_plot",
        &series,
        &Labels {
            title: "Lyapunov exponent".into(),
            x: "E".into(),
            y: "L(E)".into(),
        },
    )
}

#[derive(Serialize)]
struct MeasRow {
    member: usize,
    lambda: f64,
    period: usize,
    measure: f64,
    max_band_length: f64,
    band_bound: f64,
    band_ok: bool,
    ids_max_error: f64,
    ids_ok: bool,
    norm: limpet_core::bands::NormBoundReport,
}

fn meas_bounds(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let grid = NormGrid {
        samples_per_band: config.norm_samples,
        ..NormGrid::default()
    };
    for (i, w) in config.family.members().iter().enumerate() {
        for &l in &config.lambdas {
            let item = format!("member {i} lambda {l:?}");
            let lv = w.scaled(l);
            let spec = match compute_bands(w, l) {
                Ok(s) => s,
                Err(e) => {
                    out.error(item, e);
                    continue;
                }
            };
            let ids = match ids_band_increments(&lv) {
                Ok(x) => x,
                Err(e) => {
                    out.error(item, e);
                    continue;
                }
            };
            let n = w.period();
            let band_bound = 2.0 * PI / n as f64;
            let ids_max_error = ids.iter().map(|x| (x - 1.0 / n as f64).abs()).fold(0.0, f64::max);
            let norm = norm_measure_bound_for(&spec, &lv, &grid);
            let row = MeasRow {
                member: i,
                lambda: l,
                period: n,
                measure: spec.measure,
                max_band_length: spec.max_band_length(),
                band_bound,
                band_ok: spec.max_band_length() <= band_bound + 1e-9,
                ids_max_error,
                ids_ok: ids_max_error <= 1e-5,
                norm,
            };
            out.check(
                format!("band length, {item}"),
                row.band_ok,
                format!("{:?} <= {:?}", row.max_band_length, band_bound),
            );
            out.check(
                format!("ids increments, {item}"),
                row.ids_ok,
                format!("max error {ids_max_error:e}"),
            );
            out.check(
                format!("norm measure bound, {item}"),
                row.norm.passed(),
                format!(
                    "measure {:?} <= {:?} (trivial: {})",
                    row.norm.measured, row.norm.bound, row.norm.trivial
                ),
            );
            rows.push(row);
        }
    }
    let mut csv = String::from(
        "member,lambda,period,measure,max_band_length,band_bound,band_ok,ids_max_error,ids_ok,log_c,norm_bound,norm_trivial,norm_ok\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{:?},{},{:?},{:?},{:?},{},{:?},{},{:?},{:?},{},{}",
            r.member,
            r.lambda,
            r.period,
            r.measure,
            r.max_band_length,
            r.band_bound,
            r.band_ok,
            r.ids_max_error,
            r.ids_ok,
            r.norm.log_certified_c,
            r.norm.bound,
            r.norm.trivial,
            r.norm.passed()
        );
    }
    out.write("meas_bounds.csv", csv.as_bytes())?;
    out.json("meas_bounds.json", &rows)
}

fn start(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let fam = &config.family;
    let ball = match Ball::new(fam.members()[0].clone(), config.start.radius) {
        Ok(b) => b,
        Err(e) => {
            out.error("ball", e);
            return Ok(());
        }
    };
    let level = config.schedule.level_of(fam.period()).expect("validated");
    let outcome = match lemma_start(
        fam,
        &ball,
        level,
        &config.schedule,
        config.start.coupling_bound,
        config.start.levels,
        &config.overrides,
    ) {
        Ok(o) => o,
        Err(e) => {
            out.error("lemma_start", e);
            return Ok(());
        }
    };
    let mut levels =
        String::from("n_k,n_big,n1,n2,span,delta,family_size,drift,min_lyapunov,large_energy_min,joint_cover\n");
    let mut sel = String::from("n_big,member,lambda,j,opened,delta,component_counts\n");
    for lv in &outcome.levels {
        let r = &lv.report;
        let min = r.minimum.iter().map(|m| m.min).fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            levels,
            "{},{},{:?},{},{:?},{:?},{},{:?},{:?},{:?},{}",
            r.n_k,
            r.n_big,
            r.params.n1,
            r.params.n2,
            r.params.span,
            r.delta,
            r.family_size,
            r.drift.sup,
            min,
            r.large_energy_min,
            r.joint_cover.iter().all(|&c| c)
        );
        for (i, s) in r.selections.iter().enumerate() {
            for g in &s.per_lambda {
                let counts: Vec<String> = g.component_counts.iter().map(usize::to_string).collect();
                let _ = writeln!(
                    sel,
                    "{},{i},{:?},{},{},{:?},{}",
                    r.n_big,
                    g.lambda,
                    g.j.map_or(String::new(), |j| j.to_string()),
                    g.opened,
                    g.delta,
                    csv_field(&counts.join(" "))
                );
            }
        }
        out.check(
            format!("joint cover, n_K {}", r.n_big),
            r.joint_cover.iter().all(|&c| c),
            "shifted spectra have empty intersection at every sampled coupling",
        );
        out.check(
            format!("positive Lyapunov minimum, n_K {}", r.n_big),
            min > 0.0,
            format!("grid minimum {min:?}"),
        );
    }
    out.write("start_levels.csv", levels.as_bytes())?;
    out.write("start_selection.csv", sel.as_bytes())?;
    out.json("start.json", &outcome)
}

fn induction(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let fam = &config.family;
    let n_k = fam.period();
    let n_big = config.induction.period;
    let deltas = if config.induction.deltas.is_empty() {
        vec![None; config.lambdas.len()]
    } else {
        config.induction.deltas.iter().map(|&d| Some(d)).collect()
    };
    let request = InductionRequest {
        lambdas: config.lambdas.clone(),
        deltas,
        drift_energy_max: config.energy.min.abs().max(config.energy.max.abs()),
    };
    let (family, cert) = match lemma_induction(fam, n_k, n_big, &request, &config.overrides, None) {
        Ok(x) => x,
        Err(e) => {
            out.error("lemma_induction", e);
            return Ok(());
        }
    };
    let mut csv = String::from("lambda,member,measure,explicit_bound,weak_bound,certified,explicit_ok\n");
    for mc in &cert.measure_checks {
        for (i, m) in mc.measures.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{:?},{i},{m:?},{:?},{:?},{},{}",
                mc.lambda,
                mc.explicit_bound,
                mc.weak_bound,
                mc.certified,
                mc.explicit_ok.map_or(String::new(), |b| b.to_string())
            );
        }
    }
    out.check(
        "induction measures",
        cert.measures_ok(),
        "member measures within the explicit bound where certified",
    );
    out.write("induction_measures.csv", csv.as_bytes())?;
    out.json(
        "induction.json",
        &serde_json::json!({ "certificate": cert, "family": family }),
    )?;

    let params = match InductionParams::new(n_k, n_big, fam.len(), config.overrides.amp_exponent) {
        Ok(p) => p,
        Err(e) => {
            out.error("niceness census", e);
            return Ok(());
        }
    };
    let lambda = config.lambdas[0];
    match niceness_census(
        fam.members(),
        &params,
        config.induction.census_energy,
        lambda,
        config.overrides.angle_exponent,
    ) {
        Ok(census) => {
            out.check(
                "niceness census",
                census.holds(),
                format!("{} not very nice, bound {}", census.not_very_nice, census.bound),
            );
            out.write("niceness_census.csv", census.to_csv().as_bytes())?;
        }
        Err(e) => out.error("niceness census", e),
    }
    Ok(())
}

fn iterate(config: &RunConfig, out: &mut Outputs) -> Result<(), RunError> {
    let fam: &Family = &config.family;
    let ball = match Ball::new(fam.members()[0].clone(), config.iterate.radius) {
        Ok(b) => b,
        Err(e) => {
            out.error("ball", e);
            return Ok(());
        }
    };
    let probe = config.lambdas[0];
    let outcome = match iterate_scheme(
        &ball,
        fam,
        config.iterate.eps_1,
        config.iterate.depth,
        &config.schedule,
        probe,
        &config.overrides,
    ) {
        Ok(o) => o,
        Err(e) => {
            out.error("iterate_scheme", e);
            return Ok(());
        }
    };
    let mut stages = String::from(
        "stage,period,members,delta,eps,eps_next,radius,probe_lambda,probe_measure,probe_tolerance,measure_bound,lyap_drift,passed\n",
    );
    let mut measures = String::from("stage,lambda,member,measure,explicit_bound,weak_bound,certified,explicit_ok\n");
    let mut points = Vec::new();
    for s in &outcome.stages {
        let _ = writeln!(
            stages,
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            s.stage,
            s.period(),
            s.family.len(),
            s.delta,
            s.eps,
            s.eps_next,
            s.ball.radius,
            s.probe_lambda,
            s.probe_measure,
            s.probe_tolerance,
            s.measure_bound,
            s.lyap_drift,
            s.passed()
        );
        for mc in &s.joining.induction.measure_checks {
            for (i, m) in mc.measures.iter().enumerate() {
                let _ = writeln!(
                    measures,
                    "{},{:?},{i},{m:?},{:?},{:?},{},{}",
                    s.stage,
                    mc.lambda,
                    mc.explicit_bound,
                    mc.weak_bound,
                    mc.certified,
                    mc.explicit_ok.map_or(String::new(), |b| b.to_string())
                );
            }
        }
        out.check(format!("stage {}", s.stage), s.passed(), stage_detail(s));
        points.push((s.stage as f64, s.probe_measure));
    }
    if let Some(f) = &outcome.failure {
        out.error("iterate_scheme", f);
    }
    out.check(
        "probe measures strictly decreasing",
        outcome.strictly_decreasing(),
        format!("{:?}", outcome.probe_measures()),
    );
    out.write("stages.csv", stages.as_bytes())?;
    out.write("stage_measures.csv", measures.as_bytes())?;
    out.json("iterate.json", &outcome)?;
    out.plot(
        "measure_decay",
        &[Series::new(format!("lambda = {probe}"), points)],
        &Labels {
            title: "Spectrum measure of the ball center by stage".into(),
            x: "stage".into(),
            y: "measure".into(),
        },
    )
}

fn stage_detail(s: &limpet_core::construct::StageCertificate) -> String {
    let j = &s.joining;
    let mut failing = Vec::new();
    if !j.item_drift.pass {
        failing.push("drift");
    }
    if !j.item_lower_bound.pass {
        failing.push("lyapunov lower bound");
    }
    if !j.measure_ok() {
        failing.push("measure");
    }
    if !j.closure.pass {
        failing.push("closure");
    }
    if !j.family_in_ball {
        failing.push("family in ball");
    }
    if !j.induction.measures_ok() {
        failing.push("induction measures");
    }
    if failing.is_empty() {
        "all items hold".into()
    } else {
        format!("failing: {}", failing.join(", "))
    }
}
