// `!(x > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Scenario runner and report emitter for the `convexplap` binary.
//!
//! A scenario is one JSON object (scenario files hold one per line) naming a
//! command `kind` and its parameters. Running it yields a [`Report`] whose
//! numbers each carry the tolerance they were judged against. Reports are
//! deterministic for a fixed scenario, seed and tolerance scale; the only
//! varying field is the optional timestamp.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use convexplap::fields::{convexity_verdict, Convexity, ScalarField};
use convexplap::growth::{
    self, check_chain, classify, classify_batch, Envelope, Evidence, GeometryKind, GrowthKind, GrowthQuery,
    GrowthReport, ModelGeometry, TriStatus, TriVerdict,
};
use convexplap::plaplace::{counterexample_scan, flux_divergence_oracle, p_laplacian, PLaplaceParams};
use convexplap::radial::RadialFunction;
use convexplap::region::{BoxRegion, SamplePlan};
use convexplap::weakform::{subharmonic_verdict_with, TrialRecord, WeakStatus, WeakTestConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance of the operator-vs-oracle comparison in `plap_eval`.
const ORACLE_TOL: f64 = 1e-3;
/// Tolerance on a located sign-change radius.
const RADIUS_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn schema(e: impl std::fmt::Display) -> CliError {
    CliError::Schema(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    #[default]
    Euclidean,
    Hyperbolic,
}

impl Geometry {
    fn model(self, n: usize) -> Result<ModelGeometry, CliError> {
        let kind = match self {
            Geometry::Euclidean => GeometryKind::Euclidean,
            Geometry::Hyperbolic => GeometryKind::Hyperbolic,
        };
        ModelGeometry::new(n, kind).map_err(schema)
    }
}

/// Expected outcome of a verdict, for scenarios that assert one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Holds,
    Fails,
    Undetermined,
    NotHolds,
}

impl Expect {
    fn judge(self, status: TriStatus) -> Outcome {
        let ok = match self {
            Expect::Holds => status == TriStatus::Holds,
            Expect::Fails => status == TriStatus::Fails,
            Expect::Undetermined => status == TriStatus::Undetermined,
            Expect::NotHolds => status != TriStatus::Holds,
        };
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

fn tri(status: WeakStatus) -> TriStatus {
    match status {
        WeakStatus::Holds => TriStatus::Holds,
        WeakStatus::Fails => TriStatus::Fails,
        WeakStatus::Undetermined => TriStatus::Undetermined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub profile: String,
    pub n: usize,
    #[serde(default)]
    pub geom: Geometry,
    pub p: f64,
    pub q: f64,
}

impl GrowthSpec {
    pub fn query(&self) -> Result<GrowthQuery, CliError> {
        let profile = RadialFunction::parse(&self.profile).map_err(schema)?;
        GrowthQuery::new(profile, self.q, self.p, self.geom.model(self.n)?).map_err(schema)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleEntry {
    pub profile: String,
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_dim")]
    pub n: usize,
}

fn default_dim() -> usize {
    2
}
fn default_epsilon() -> f64 {
    convexplap::plaplace::DEFAULT_EPSILON
}
fn default_rmax() -> f64 {
    3.0
}
fn default_samples() -> usize {
    3000
}
fn default_trials() -> usize {
    100
}
fn default_region() -> String {
    "-2,2".into()
}

/// The default Liouville catalog: nonconstant convex profiles with
/// `q > p − 1`, and a constant.
pub fn liouville_catalog() -> Vec<LiouvilleEntry> {
    let e = |profile: &str, p, q| LiouvilleEntry {
        profile: profile.into(),
        p,
        q,
        n: 2,
    };
    vec![
        e("r^2 + 1", 2.0, 1.5),
        e("const:5", 2.0, 2.0),
        e("exp:1", 3.0, 2.5),
        e("r + 1", 1.5, 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    PlapEval {
        field: String,
        dim: usize,
        point: Vec<f64>,
        p: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    CounterexampleScan {
        n: usize,
        p: f64,
        #[serde(default = "default_rmax")]
        rmax: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    WeakformTest {
        field: String,
        #[serde(default = "default_dim")]
        dim: usize,
        p: f64,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default = "default_region")]
        region: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<Expect>,
    },
    GrowthClassify {
        #[serde(flatten)]
        query: GrowthSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_balanced: Option<Expect>,
    },
    GrowthChain {
        queries: Vec<GrowthSpec>,
    },
    LiouvilleDemo {
        #[serde(default = "liouville_catalog")]
        entries: Vec<LiouvilleEntry>,
    },
    FullSuite {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub command: Command,
}

impl Scenario {
    pub fn new(name: impl Into<String>, seed: u64, command: Command) -> Self {
        Self {
            name: name.into(),
            seed,
            command,
        }
    }

    pub fn from_json(line: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(line).map_err(schema)?;
        s.validate()?;
        Ok(s)
    }

    /// Parses every input the scenario names, so malformed specs are schema
    /// errors rather than runtime ones.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.command {
            Command::PlapEval {
                field,
                dim,
                point,
                p,
                epsilon,
            } => {
                let f = ScalarField::from_spec(field, *dim).map_err(schema)?;
                if point.len() != f.dim() {
                    return Err(schema(format!(
                        "point has {} coordinates, field has {dim}",
                        point.len()
                    )));
                }
                PLaplaceParams::new(*p, *epsilon).map_err(schema)?;
            }
            Command::CounterexampleScan { n, rmax, samples, .. } => {
                if *n == 0 || !(*rmax > 0.0) || *samples == 0 {
                    return Err(schema("counterexample_scan needs n > 0, rmax > 0 and samples > 0"));
                }
            }
            Command::WeakformTest {
                field,
                dim,
                p,
                trials,
                region,
                ..
            } => {
                ScalarField::from_spec(field, *dim).map_err(schema)?;
                BoxRegion::parse(region, *dim).map_err(schema)?;
                if !(*p > 0.0) || *trials == 0 {
                    return Err(schema("weakform_test needs p > 0 and trials > 0"));
                }
            }
            Command::GrowthClassify { query, .. } => {
                query.query()?;
            }
            Command::GrowthChain { queries } => {
                for q in queries {
                    q.query()?;
                }
            }
            Command::LiouvilleDemo { entries } => {
                for e in entries {
                    RadialFunction::parse(&e.profile).map_err(schema)?;
                    if e.n == 0 {
                        return Err(schema("liouville entry needs n > 0"));
                    }
                }
            }
            Command::FullSuite {} => {}
        }
        Ok(())
    }
}

/// Reads line-delimited scenarios; blank lines and `#` comments are skipped.
pub fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Schema(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let scenarios: Vec<Scenario> = read_lines(path)?;
    for s in &scenarios {
        s.validate()
            .map_err(|e| CliError::Schema(format!("scenario '{}': {e}", s.name)))?;
    }
    Ok(scenarios)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub tol_scale: f64,
    pub csv_dir: Option<PathBuf>,
    pub timestamp: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        Self {
            tol_scale: 1.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Undetermined,
    Error,
}

/// A number with the tolerance it was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub tolerance: f64,
}

fn qty(value: f64, tolerance: f64) -> Value {
    json!(Quantity { value, tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: Value,
}

impl Check {
    fn new(name: impl Into<String>, outcome: Outcome, detail: Value) -> Self {
        Self {
            name: name.into(),
            outcome,
            detail,
        }
    }

    fn error(name: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Self::new(name, Outcome::Error, json!({ "error": e.to_string() }))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub undetermined: usize,
    pub error: usize,
}

impl Summary {
    fn of(checks: &[Check]) -> Self {
        let mut s = Summary::default();
        for c in checks {
            match c.outcome {
                Outcome::Pass => s.pass += 1,
                Outcome::Fail => s.fail += 1,
                Outcome::Undetermined => s.undetermined += 1,
                Outcome::Error => s.error += 1,
            }
        }
        s
    }

    fn add(&mut self, other: Summary) {
        self.pass += other.pass;
        self.fail += other.fail;
        self.undetermined += other.undetermined;
        self.error += other.error;
    }

    /// 0 when nothing failed, 1 on failed checks, 3 on runtime errors.
    pub fn exit_code(&self) -> u8 {
        if self.error > 0 {
            3
        } else if self.fail > 0 {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub tol_scale: f64,
    pub checks: Vec<Check>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        self.summary.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub reports: Vec<Report>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> u8 {
        self.summary.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn now(opts: &RunOptions) -> Option<u64> {
    opts.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

/// Runs one scenario. Numeric failures inside a check are reported as that
/// check's `error` outcome; only unreadable input is an `Err`.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Report, CliError> {
    s.validate()?;
    let checks = match &s.command {
        Command::PlapEval {
            field,
            dim,
            point,
            p,
            epsilon,
        } => vec![plap_eval(field, *dim, point, *p, *epsilon, opts)?],
        Command::CounterexampleScan { n, p, rmax, samples } => {
            vec![scan_check(&s.name, *n, *p, *rmax, *samples, opts)?]
        }
        Command::WeakformTest {
            field,
            dim,
            p,
            trials,
            region,
            expect,
        } => vec![weakform_check(field, *dim, *p, *trials, region, *expect, s.seed, opts)?],
        Command::GrowthClassify { query, expect_balanced } => growth_checks(query, *expect_balanced)?,
        Command::GrowthChain { queries } => chain_suite(queries)?,
        Command::LiouvilleDemo { entries } => liouville_checks(entries, s.seed)?,
        Command::FullSuite {} => {
            let mut out = Vec::new();
            for sub in full_suite(s.seed) {
                let r = run_scenario(&sub, opts)?;
                out.extend(r.checks.into_iter().map(|mut c| {
                    c.name = format!("{}/{}", sub.name, c.name);
                    c
                }));
            }
            out
        }
    };
    Ok(Report {
        tool: "convexplap",
        version: VERSION,
        scenario: s.clone(),
        tol_scale: opts.tol_scale,
        summary: Summary::of(&checks),
        checks,
        timestamp: now(opts),
    })
}

/// Runs scenarios concurrently; reports are ordered by scenario name.
pub fn run_suite(scenarios: &[Scenario], opts: &RunOptions) -> Result<SuiteReport, CliError> {
    let mut reports = convexplap::par::map(scenarios, |s| run_scenario(s, opts))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    reports.sort_by(|a, b| a.scenario.name.cmp(&b.scenario.name));
    let mut summary = Summary::default();
    for r in &mut reports {
        r.timestamp = None;
        summary.add(r.summary);
    }
    Ok(SuiteReport {
        tool: "convexplap",
        version: VERSION,
        reports,
        summary,
        timestamp: now(opts),
    })
}

/// The built-in suite: the counter-example, convex and concave weak tests,
/// growth classifications and the Liouville demo.
pub fn full_suite(seed: u64) -> Vec<Scenario> {
    let weak = |name: &str, field: &str, p: f64, expect| {
        Scenario::new(
            name,
            seed,
            Command::WeakformTest {
                field: field.into(),
                dim: 2,
                p,
                trials: 100,
                region: default_region(),
                expect: Some(expect),
            },
        )
    };
    let growth = |name: &str, profile: &str, p: f64, q: f64, expect| {
        Scenario::new(
            name,
            seed,
            Command::GrowthClassify {
                query: GrowthSpec {
                    profile: profile.into(),
                    n: 2,
                    geom: Geometry::Euclidean,
                    p,
                    q,
                },
                expect_balanced: Some(expect),
            },
        )
    };
    let mut out = vec![
        Scenario::new(
            "counterexample-n2-p0.5",
            seed,
            Command::CounterexampleScan {
                n: 2,
                p: 0.5,
                rmax: 3.0,
                samples: default_samples(),
            },
        ),
        Scenario::new(
            "counterexample-n5-p0.25",
            seed,
            Command::CounterexampleScan {
                n: 5,
                p: 0.25,
                rmax: 3.0,
                samples: default_samples(),
            },
        ),
        weak("weak-exp-norm-p3", "exp_norm", 3.0, Expect::Holds),
        weak("weak-norm-p1.1", "norm", 1.1, Expect::Holds),
        weak(
            "weak-max-affine-p2",
            "max_affine:1,0,0;0,1,0;-1,-1,0",
            2.0,
            Expect::Holds,
        ),
        weak("weak-neg-exp-norm-sq-p2", "neg:exp_norm_sq", 2.0, Expect::Fails),
        growth("growth-exp-decay", "exp:-1", 2.0, 2.0, Expect::Holds),
        growth("growth-quadratic", "r^2 + 1", 2.0, 1.5, Expect::NotHolds),
        Scenario::new(
            "liouville",
            seed,
            Command::LiouvilleDemo {
                entries: liouville_catalog(),
            },
        ),
    ];
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

fn plap_eval(
    field: &str,
    dim: usize,
    point: &[f64],
    p: f64,
    epsilon: f64,
    opts: &RunOptions,
) -> Result<Check, CliError> {
    let f = ScalarField::from_spec(field, dim).map_err(schema)?;
    let params = PLaplaceParams::new(p, epsilon).map_err(schema)?;
    let name = "p_laplacian";
    let value = match p_laplacian(&f, point, params) {
        Ok(v) => v,
        Err(e) => return Ok(Check::error(name, e)),
    };
    let tol = |oracle: f64| ORACLE_TOL * opts.tol_scale * (1.0 + oracle.abs());
    let check = match flux_divergence_oracle(&f, point, params, 1e-4) {
        Ok(oracle) => {
            let outcome = if (value - oracle).abs() <= tol(oracle) {
                Outcome::Pass
            } else {
                Outcome::Fail
            };
            Check::new(
                name,
                outcome,
                json!({
                    "field": f.to_string(),
                    "point": point,
                    "p": p,
                    "epsilon": epsilon,
                    "value": qty(value, tol(oracle)),
                    "oracle": qty(oracle, tol(oracle)),
                }),
            )
        }
        Err(e) => Check::new(
            name,
            Outcome::Undetermined,
            json!({
                "field": f.to_string(),
                "point": point,
                "p": p,
                "epsilon": epsilon,
                "value": qty(value, f64::NAN),
                "oracle_error": e.to_string(),
            }),
        ),
    };
    Ok(check)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Writes `r,value,sign` rows; returns the file name.
fn write_scan_csv(dir: &Path, name: &str, rows: &[convexplap::plaplace::ScanRow]) -> Result<String, CliError> {
    fs::create_dir_all(dir)?;
    let file = format!("{name}.csv");
    let mut text = String::from("r,value,sign\n");
    for row in rows {
        text.push_str(&format!("{},{},{}\n", fmt_num(row.r), fmt_num(row.value), row.sign));
    }
    fs::write(dir.join(&file), text)?;
    Ok(file)
}

fn scan_check(name: &str, n: usize, p: f64, rmax: f64, samples: usize, opts: &RunOptions) -> Result<Check, CliError> {
    let scan = match counterexample_scan(n, p, rmax, samples) {
        Ok(s) => s,
        Err(e) => return Ok(Check::error("counterexample_scan", e)),
    };
    let tol = RADIUS_TOL * opts.tol_scale;
    let expected: Vec<f64> = scan.predicted.into_iter().filter(|r| *r <= rmax).collect();
    let located = scan.sign_changes.len() == expected.len()
        && scan
            .sign_changes
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a - b).abs() <= tol);
    // for p ≥ 1 the operator must be nonnegative everywhere
    let sign_ok = p < 1.0 || scan.rows.iter().all(|r| r.value >= 0.0);
    let csv = match &opts.csv_dir {
        Some(dir) => Some(write_scan_csv(dir, name, &scan.rows)?),
        None => None,
    };
    let negative = scan.rows.iter().filter(|r| r.sign < 0).count();
    Ok(Check::new(
        "counterexample_scan",
        if located && sign_ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        json!({
            "n": n,
            "p": p,
            "rmax": rmax,
            "samples": samples,
            "sign_change_radius": scan.sign_changes.iter().map(|r| qty(*r, tol)).collect::<Vec<_>>(),
            "predicted": scan.predicted.map(|r| qty(r, tol)),
            "negative_samples": negative,
            "csv": csv,
        }),
    ))
}

fn trial_json(t: &TrialRecord) -> Value {
    json!({
        "center": t.bump.center,
        "radius": t.bump.radius,
        "pairing": qty(t.pairing, t.tolerance),
        "scale": t.scale,
    })
}

#[allow(clippy::too_many_arguments)]
fn weakform_check(
    field: &str,
    dim: usize,
    p: f64,
    trials: usize,
    region: &str,
    expect: Option<Expect>,
    seed: u64,
    opts: &RunOptions,
) -> Result<Check, CliError> {
    let f = ScalarField::from_spec(field, dim).map_err(schema)?;
    let region = BoxRegion::parse(region, dim).map_err(schema)?;
    let config = WeakTestConfig {
        trials,
        seed,
        tol_scale: opts.tol_scale,
        ..WeakTestConfig::default()
    };
    let name = "subharmonic_verdict";
    let v = match subharmonic_verdict_with(&f, p, &region, &config) {
        Ok(v) => v,
        Err(e) => return Ok(Check::error(name, e)),
    };
    let status = tri(v.status);
    let outcome = match expect {
        Some(e) => e.judge(status),
        None => match status {
            TriStatus::Holds => Outcome::Pass,
            TriStatus::Fails => Outcome::Fail,
            TriStatus::Undetermined => Outcome::Undetermined,
        },
    };
    Ok(Check::new(
        name,
        outcome,
        json!({
            "field": f.to_string(),
            "p": p,
            "verdict": status,
            "expect": expect,
            "trials": v.trials,
            "errors": v.errors,
            "first_error": v.first_error,
            "worst": v.worst.as_ref().map(trial_json),
            "witness": v.witness.as_ref().map(trial_json),
        }),
    ))
}

fn envelope_json(env: &Option<Envelope>) -> Value {
    match env {
        Some(e) => json!({
            "alpha": qty(e.alpha, growth::ALPHA_TOL),
            "beta": qty(e.beta, growth::BETA_TOL),
            "gamma": e.gamma,
            "residual": qty(e.residual, growth::RESIDUAL_TOL),
            "log_c": e.log_c,
            "window_start": e.window_start,
        }),
        None => Value::Null,
    }
}

fn verdict_json(v: &TriVerdict) -> Value {
    let evidence = match &v.evidence {
        Evidence::Envelope {
            envelope,
            limit_alpha,
            reason,
        } => json!({
            "kind": "envelope",
            "envelope": envelope_json(envelope),
            "limit_alpha": limit_alpha.map(|a| qty(a, growth::ALPHA_TOL)),
            "reason": reason,
        }),
        Evidence::Series {
            terms,
            mean_log_ratio,
            power,
            mass_envelope,
            reason,
        } => json!({
            "kind": "series",
            "terms": terms,
            "mean_log_ratio": qty(*mean_log_ratio, growth::SERIES_RATIO_TOL),
            "power": power.map(|k| qty(k, growth::ALPHA_TOL)),
            "mass_envelope": envelope_json(mass_envelope),
            "reason": reason,
        }),
        Evidence::Witness { psi, envelope, reason } => json!({
            "kind": "witness",
            "psi": psi.map(|p| p.name()),
            "envelope": envelope_json(envelope),
            "reason": reason,
        }),
        Evidence::Degenerate { reason } => json!({ "kind": "degenerate", "reason": reason }),
    };
    json!({ "status": v.status, "evidence": evidence })
}

pub fn growth_report_json(r: &GrowthReport) -> Value {
    let mut criteria = serde_json::Map::new();
    for kind in GrowthKind::ALL {
        let key = serde_json::to_value(kind).expect("kind serializes");
        criteria.insert(key.as_str().expect("string").to_string(), verdict_json(r.get(kind)));
    }
    json!({
        "verdict": r.balanced,
        "criteria": criteria,
        "witness_psi": r.witness_psi.map(|p| p.name()),
        "chain_violations": check_chain(r),
    })
}

fn growth_checks(spec: &GrowthSpec, expect: Option<Expect>) -> Result<Vec<Check>, CliError> {
    let query = spec.query()?;
    let report = match classify(&query) {
        Ok(r) => r,
        Err(e) => return Ok(vec![Check::error("classify", e)]),
    };
    let mut detail = growth_report_json(&report);
    detail["query"] = json!(spec);
    let chain_ok = check_chain(&report).is_empty();
    let mut checks = vec![Check::new(
        "chain",
        if chain_ok { Outcome::Pass } else { Outcome::Fail },
        json!({ "violations": check_chain(&report) }),
    )];
    let outcome = match expect {
        Some(e) => e.judge(report.balanced),
        None => Outcome::Pass,
    };
    detail["expect_balanced"] = json!(expect);
    checks.push(Check::new("classify", outcome, detail));
    Ok(checks)
}

/// Classifies queries in parallel and checks the implication chain on each.
pub fn chain_suite(specs: &[GrowthSpec]) -> Result<Vec<Check>, CliError> {
    let queries = specs.iter().map(GrowthSpec::query).collect::<Result<Vec<_>, _>>()?;
    let reports = classify_batch(&queries);
    Ok(specs
        .iter()
        .zip(reports)
        .enumerate()
        .map(|(i, (spec, r))| {
            let name = format!("chain[{i}] {} n={} p={} q={}", spec.profile, spec.n, spec.p, spec.q);
            match r {
                Ok(report) => {
                    let violations = check_chain(&report);
                    Check::new(
                        name,
                        if violations.is_empty() {
                            Outcome::Pass
                        } else {
                            Outcome::Fail
                        },
                        growth_report_json(&report),
                    )
                }
                Err(e) => Check::error(name, e),
            }
        })
        .collect())
}

/// Necessary-condition consistency: nonconstant nonnegative convex profiles
/// with `q > p − 1` must not be reported balanced (and must fail the finite
/// test); constant profiles must be.
pub fn liouville_demo(entries: &[LiouvilleEntry], seed: u64) -> Result<Report, CliError> {
    let s = Scenario::new(
        "liouville",
        seed,
        Command::LiouvilleDemo {
            entries: entries.to_vec(),
        },
    );
    run_scenario(&s, &RunOptions::new())
}

fn liouville_checks(entries: &[LiouvilleEntry], seed: u64) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let name = format!("liouville[{i}] {} p={} q={} n={}", e.profile, e.p, e.q, e.n);
        let profile = RadialFunction::parse(&e.profile).map_err(schema)?;
        let mut problems = Vec::new();
        if !(e.q > e.p - 1.0 && e.p > 1.0) {
            problems.push(format!("needs q > p - 1 > 0 (p = {}, q = {})", e.p, e.q));
        }
        let field = ScalarField::radial(e.n, profile.clone());
        let region = BoxRegion::cube(-3.0, 3.0, e.n).map_err(schema)?;
        let sample = SamplePlan::new(region, 200, seed).points();
        match convexity_verdict(&field, &sample, 1e-9) {
            Ok(v) if v.status == Convexity::NotConvex => problems.push("profile is not convex on the sample".into()),
            Ok(_) => {}
            Err(err) => problems.push(format!("convexity check failed: {err}")),
        }
        let negative = (0..=100).any(|k| profile.value(0.1 * k as f64).is_ok_and(|v| v < 0.0));
        if negative {
            problems.push("profile is negative somewhere on [0, 10]".into());
        }
        if !problems.is_empty() {
            checks.push(Check::new(name, Outcome::Fail, json!({ "precondition": problems })));
            continue;
        }
        let query = match GrowthQuery::new(profile.clone(), e.q, e.p, ModelGeometry::euclidean(e.n)) {
            Ok(q) => q,
            Err(err) => return Err(schema(err)),
        };
        let report = match classify(&query) {
            Ok(r) => r,
            Err(err) => {
                checks.push(Check::error(name, err));
                continue;
            }
        };
        let constant = profile.is_constant();
        let ok = if constant {
            report.balanced == TriStatus::Holds
        } else {
            report.balanced != TriStatus::Holds && report.finite.status == TriStatus::Fails
        };
        let mut detail = growth_report_json(&report);
        detail["constant"] = json!(constant);
        detail["expected"] = json!(if constant {
            "balanced holds"
        } else {
            "balanced not holds, finite fails"
        });
        checks.push(Check::new(name, if ok { Outcome::Pass } else { Outcome::Fail }, detail));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_round_trips_through_json() {
        let s = Scenario::new(
            "scan",
            7,
            Command::CounterexampleScan {
                n: 2,
                p: 0.5,
                rmax: 3.0,
                samples: 300,
            },
        );
        let text = serde_json::to_string(&s).unwrap();
        assert!(
            text.starts_with(r#"{"name":"scan","seed":7,"kind":"counterexample_scan""#),
            "{text}"
        );
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_json(r#"{"name":"w","kind":"weakform_test","field":"exp_norm","p":3}"#).unwrap();
        match s.command {
            Command::WeakformTest {
                dim, trials, region, ..
            } => {
                assert_eq!((dim, trials, region.as_str()), (2, 100, "-2,2"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn schema_errors() {
        for bad in [
            r#"{"name":"x","kind":"nope"}"#,
            r#"{"name":"x","kind":"weakform_test","field":"bogus:1","p":2}"#,
            r#"{"name":"x","kind":"plap_eval","field":"exp_norm_sq","dim":2,"point":[1],"p":2}"#,
            r#"{"name":"x","kind":"growth_classify","profile":"r^2+1","n":2,"p":0.5,"q":1}"#,
            "not json",
        ] {
            let e = Scenario::from_json(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn counterexample_report() {
        let s = Scenario::new(
            "ce",
            0,
            Command::CounterexampleScan {
                n: 2,
                p: 0.5,
                rmax: 3.0,
                samples: 300,
            },
        );
        let r = run_scenario(&s, &RunOptions::new()).unwrap();
        assert_eq!(r.exit_code(), 0);
        let radius = &r.checks[0].detail["sign_change_radius"][0];
        assert!((radius["value"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(radius["tolerance"].as_f64().unwrap(), 1e-6);
    }

    #[test]
    fn degenerate_point_is_a_runtime_error() {
        let s = Scenario::new(
            "degenerate",
            0,
            Command::PlapEval {
                field: "quadratic:1".into(),
                dim: 2,
                point: vec![0.0, 0.0],
                p: 1.5,
                epsilon: 0.0,
            },
        );
        let r = run_scenario(&s, &RunOptions::new()).unwrap();
        assert_eq!(r.checks[0].outcome, Outcome::Error);
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn liouville_examples() {
        let r = liouville_demo(&liouville_catalog(), 0).unwrap();
        assert_eq!(r.summary.fail, 0, "{}", r.to_json());
        assert_eq!(r.summary.pass, 4);
    }

    #[test]
    fn growth_quadratic_is_not_balanced() {
        let s = Scenario::from_json(r#"{"name":"g","kind":"growth_classify","profile":"r^2+1","n":2,"p":2,"q":1.5,"expect_balanced":"not_holds"}"#)
            .unwrap();
        let r = run_scenario(&s, &RunOptions::new()).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.to_json());
        let detail = &r.checks[1].detail;
        assert_ne!(detail["verdict"], "Holds");
        assert_eq!(detail["criteria"]["finite"]["status"], "Fails");
        assert!(detail["criteria"]["finite"]["evidence"]["envelope"]["alpha"]["tolerance"].is_number());
    }
}
