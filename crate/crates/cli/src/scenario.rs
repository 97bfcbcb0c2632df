//! Scenario file schema and the checks shared by `run` and `validate`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use potlab_core::capacity::{BallGrowth, Parabolicity};
use potlab_core::grid::{GridSpec, Shape};
use potlab_core::harmonicnd::BoundaryData;
use potlab_core::quasi1d::RealFn;
use potlab_core::verdict::{Capacity, CapacityFact, SetDesc};
use potlab_core::weights1d::{
    ComponentSequence, Density, Exponent, Interval, OpenSet1D, RelClosed1D, SampleTable, SequenceTrim, Weight1D, WeightSpec,
};

use crate::output::Diagnostic;

pub const VERSION: u64 = 1;

pub type Built<T> = std::result::Result<T, Diagnostic>;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub body: Body,
    pub output: Output,
    /// Directory that relative paths in the file are resolved against.
    pub base: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Body {
    Decide1d(Decide1d),
    Extend1d(Extend1d),
    Quasi1d(Quasi1d),
    Fq(Fq),
    Capacity(CapacityRun),
    Parabolic(ParabolicRun),
    Solve(SolveRun),
    Experiment(ExperimentRun),
    Verdict(VerdictRun),
}

/// Every scenario kind, in dispatch order.
pub const KINDS: [&str; 9] = [
    "decide1d",
    "extend1d",
    "quasi1d",
    "fq",
    "capacity",
    "parabolic",
    "solve",
    "experiment",
    "verdict",
];

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Decide1d(_) => KINDS[0],
            Body::Extend1d(_) => KINDS[1],
            Body::Quasi1d(_) => KINDS[2],
            Body::Fq(_) => KINDS[3],
            Body::Capacity(_) => KINDS[4],
            Body::Parabolic(_) => KINDS[5],
            Body::Solve(_) => KINDS[6],
            Body::Experiment(_) => KINDS[7],
            Body::Verdict(_) => KINDS[8],
        }
    }
}

fn default_p() -> f64 {
    2.0
}

fn default_q() -> f64 {
    1.0
}

fn default_weight() -> String {
    "const 1".into()
}

fn default_samples() -> usize {
    9
}

/// Builds Ω and E on the line. Interval endpoints are strings such as
/// `"[1,2)"` so that they are read exactly as written.
pub fn line_sets(
    omega: &[String],
    sequence: Option<ComponentSequence>,
    e: &[String],
    trim: Option<SequenceTrim>,
) -> Built<(OpenSet1D, RelClosed1D)> {
    let om = OpenSet1D::new(intervals("omega", omega)?, sequence).map_err(|err| Diagnostic::new("omega", err.to_string()))?;
    let e = RelClosed1D::new(&om, intervals("e", e)?, trim).map_err(|err| Diagnostic::new("e", err.to_string()))?;
    Ok((om, e))
}

pub fn interval(field: &str, s: &str) -> Built<Interval> {
    s.parse().map_err(|e: potlab_core::Error| Diagnostic::new(field, e.to_string()))
}

fn intervals(field: &str, xs: &[String]) -> Built<Vec<Interval>> {
    xs.iter().enumerate().map(|(i, s)| interval(&format!("{field}[{i}]"), s)).collect()
}

pub fn exponent(p: f64) -> Built<Exponent> {
    Exponent::new(p).map_err(|e| Diagnostic::new("p", e.to_string()))
}

/// Parses `const c`, `pow a`, `exp k` or `table <path>`; table paths are
/// CSV files with a header row and columns `x, w`.
pub fn weight(spec: &str, p: Exponent, base: &Path) -> Built<Weight1D> {
    let d = |m: String| Diagnostic::new("weight", m);
    let density = match spec.parse::<WeightSpec>().map_err(|e| d(e.to_string()))? {
        WeightSpec::Density(density) => density,
        WeightSpec::Table(path) => {
            let path = base.join(path);
            if !path.is_file() {
                return Err(d(format!("weight table {} not found", path.display())));
            }
            Density::Table(Arc::new(read_table(&path).map_err(d)?))
        }
    };
    Weight1D::new(density, p).map_err(|e| d(e.to_string()))
}

fn read_table(path: &Path) -> std::result::Result<SampleTable, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let cell = |k: usize| -> std::result::Result<f64, String> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| format!("{} row {}: expected two numeric columns x, w", path.display(), i + 2))
        };
        xs.push(cell(0)?);
        ws.push(cell(1)?);
    }
    SampleTable::new(xs, ws).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApProbeSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_per_scale")]
    pub per_scale: usize,
}

fn default_per_scale() -> usize {
    16
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decide1d {
    pub omega: Vec<String>,
    #[serde(default)]
    pub sequence: Option<ComponentSequence>,
    #[serde(default)]
    pub e: Vec<String>,
    #[serde(default)]
    pub trim: Option<SequenceTrim>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_weight")]
    pub weight: String,
    /// Bound `M` with `0 ≤ u ≤ M` for the extension estimate.
    #[serde(default)]
    pub sup_norm: Option<f64>,
    #[serde(default)]
    pub ap_probe: Option<ApProbeSpec>,
    /// Intervals whose dual measure is reported.
    #[serde(default)]
    pub measure: Vec<String>,
    #[serde(default)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub interval: String,
    /// Two points `[x, u]` the piece passes through.
    #[serde(default)]
    pub through: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extend1d {
    pub omega: Vec<String>,
    #[serde(default)]
    pub sequence: Option<ComponentSequence>,
    #[serde(default)]
    pub e: Vec<String>,
    #[serde(default)]
    pub trim: Option<SequenceTrim>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_weight")]
    pub weight: String,
    pub pieces: Vec<PieceSpec>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub eval: Vec<f64>,
}

/// Polynomial `Σ coeffs[k] x^k`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn function(&self) -> RealFn {
        let c = self.coeffs.clone();
        Arc::new(move |x| c.iter().rev().fold(0.0, |acc, a| acc * x + a))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectSpec {
    pub interval: String,
    pub pivot: f64,
    #[serde(default)]
    pub pivot_value: Option<f64>,
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quasi1d {
    pub omega: Vec<String>,
    #[serde(default)]
    pub sequence: Option<ComponentSequence>,
    #[serde(default)]
    pub e: Vec<String>,
    #[serde(default)]
    pub trim: Option<SequenceTrim>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub u: Option<Poly>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub reflect: Option<ReflectSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fq {
    #[serde(default = "default_q")]
    pub q: f64,
    pub p: f64,
    /// Points to evaluate; empty means `x = 2^k` until the bound exceeds `until`.
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default = "default_until")]
    pub until: f64,
}

fn default_until() -> f64 {
    1e3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallCondenser {
    pub n: usize,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    #[serde(default)]
    pub tol_rel: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityRun {
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub ball_condenser: Option<BallCondenser>,
    pub p: f64,
    /// Grid spacings, coarse to fine.
    pub levels: Vec<f64>,
    #[serde(default)]
    pub solver: Solver,
}

impl CapacityRun {
    pub fn spec(&self) -> Built<GridSpec> {
        match (&self.grid, &self.ball_condenser) {
            (Some(g), None) => Ok(g.clone()),
            (None, Some(b)) => {
                if !(b.inner > 0.0 && b.outer > b.inner) {
                    return Err(Diagnostic::new("ball_condenser", "needs 0 < inner < outer"));
                }
                Ok(GridSpec::ball_condenser(b.n, b.inner, b.outer))
            }
            _ => Err(Diagnostic::new("grid", "give exactly one of `grid` and `ball_condenser`")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// `μ(B(0, r))`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthSpec {
    PowerLaw {
        #[serde(default = "default_q")]
        c: f64,
        d: f64,
    },
    LogPower {
        #[serde(default = "default_q")]
        c: f64,
        d: f64,
        k: f64,
    },
    /// Samples interpolated linearly in log-log coordinates and extended
    /// by the end slopes.
    Tabulated { r: Vec<f64>, mu: Vec<f64> },
}

impl GrowthSpec {
    pub fn build(&self) -> Built<BallGrowth> {
        Ok(match *self {
            GrowthSpec::PowerLaw { c, d } => BallGrowth::PowerLaw { c, d },
            GrowthSpec::LogPower { c, d, k } => BallGrowth::LogPower { c, d, k },
            GrowthSpec::Tabulated { ref r, ref mu } => {
                let ok = r.len() >= 2
                    && r.len() == mu.len()
                    && r.windows(2).all(|w| w[0] > 0.0 && w[1] > w[0])
                    && mu.iter().all(|m| *m > 0.0 && m.is_finite());
                if !ok {
                    return Err(Diagnostic::new(
                        "growth",
                        "tabulated growth needs at least two samples with increasing r > 0 and mu > 0",
                    ));
                }
                let lr: Vec<f64> = r.iter().map(|x| x.ln()).collect();
                let lm: Vec<f64> = mu.iter().map(|x| x.ln()).collect();
                BallGrowth::Closed(Arc::new(move |x: f64| {
                    let t = x.ln();
                    let n = lr.len();
                    let j = lr.partition_point(|&a| a <= t).clamp(1, n - 1);
                    let slope = (lm[j] - lm[j - 1]) / (lr[j] - lr[j - 1]);
                    (lm[j - 1] + slope * (t - lr[j - 1])).exp()
                }))
            }
        })
    }

    pub fn describe(&self) -> String {
        match self {
            GrowthSpec::PowerLaw { c, d } => format!("power_law c={c} d={d}"),
            GrowthSpec::LogPower { c, d, k } => format!("log_power c={c} d={d} k={k}"),
            GrowthSpec::Tabulated { r, .. } => format!("tabulated {} samples", r.len()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicRun {
    pub growth: OneOrMany<GrowthSpec>,
    pub p: OneOrMany<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QminSpec {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRun {
    pub grid: GridSpec,
    pub p: f64,
    pub boundary: BoundaryData,
    pub levels: Vec<f64>,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub harnack: Option<HarnackSpec>,
    #[serde(default)]
    pub qmin: Option<QminSpec>,
    /// Oscillation around a puncture along the chain of levels.
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRun {
    pub grid: GridSpec,
    pub e: Shape,
    pub p: f64,
    pub boundary: BoundaryData,
    pub levels: Vec<f64>,
    #[serde(default)]
    pub e_value: Option<f64>,
    #[serde(default)]
    pub solver: Solver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unweighted,
    Weighted,
    Superharmonic,
}

/// A declared capacity or a numeric refinement chain for one set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactSpec {
    pub subject: SetDesc,
    #[serde(default)]
    pub capacity: Option<Capacity>,
    #[serde(default)]
    pub chain: Option<Vec<(f64, f64)>>,
}

impl FactSpec {
    pub fn build(&self, field: &str) -> Built<CapacityFact> {
        match (&self.capacity, &self.chain) {
            (Some(c), None) => Ok(CapacityFact::declared(self.subject.clone(), *c)),
            (None, Some(chain)) => Ok(CapacityFact::numeric(self.subject.clone(), chain.clone())),
            _ => Err(Diagnostic::new(field, "a fact gives exactly one of `capacity` and `chain`")),
        }
    }
}

fn whole() -> SetDesc {
    SetDesc::Whole
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictCase {
    #[serde(default)]
    pub label: Option<String>,
    pub mode: Mode,
    pub n: usize,
    pub p: f64,
    #[serde(default = "whole")]
    pub omega: SetDesc,
    pub e: SetDesc,
    #[serde(default)]
    pub facts: Vec<FactSpec>,
    /// Ball growth of the weighted measure; `weighted` mode only.
    #[serde(default)]
    pub growth: Option<GrowthSpec>,
    /// Declared parabolicity instead of a growth function.
    #[serde(default)]
    pub parabolicity: Option<Parabolicity>,
    /// Lebesgue measure for `superharmonic` mode.
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub numeric_floor: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictRun {
    pub cases: Vec<VerdictCase>,
}

/// Parses scenario text. Syntax errors carry line and column, schema
/// errors the path of the offending field.
pub fn parse(text: &str, base: &Path) -> std::result::Result<Scenario, Vec<Diagnostic>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![Diagnostic::new(format!("line {}, column {}", e.line(), e.column()), e.to_string())])?;
    let Value::Object(mut map) = value else {
        return Err(vec![Diagnostic::new("", "scenario must be a JSON object")]);
    };
    let mut diags = Vec::new();
    match map.remove("version") {
        None => diags.push(Diagnostic::new("version", "missing field")),
        Some(v) if v.as_u64() == Some(VERSION) => {}
        Some(v) => diags.push(Diagnostic::new("version", format!("unsupported version {v}, expected {VERSION}"))),
    }
    let output = match map.remove("output") {
        None => Output::default(),
        Some(v) => serde_path_to_error::deserialize(v).unwrap_or_else(|e: serde_path_to_error::Error<serde_json::Error>| {
            diags.push(Diagnostic::new(format!("output.{}", e.path()), e.inner().to_string()));
            Output::default()
        }),
    };
    let body = match map.get("kind").and_then(Value::as_str) {
        None => {
            diags.push(Diagnostic::new("kind", format!("missing field, expected one of {}", KINDS.join(", "))));
            None
        }
        Some(k) if !KINDS.contains(&k) => {
            diags.push(Diagnostic::new("kind", format!("unknown kind {k:?}, expected one of {}", KINDS.join(", "))));
            None
        }
        Some(k) => {
            let k = k.to_string();
            map.remove("kind");
            let v = Value::Object(map);
            let body = match k.as_str() {
                "decide1d" => de(v).map(Body::Decide1d),
                "extend1d" => de(v).map(Body::Extend1d),
                "quasi1d" => de(v).map(Body::Quasi1d),
                "fq" => de(v).map(Body::Fq),
                "capacity" => de(v).map(Body::Capacity),
                "parabolic" => de(v).map(Body::Parabolic),
                "solve" => de(v).map(Body::Solve),
                "experiment" => de(v).map(Body::Experiment),
                _ => de(v).map(Body::Verdict),
            };
            body.map_err(|d| diags.push(d)).ok()
        }
    };
    match body {
        Some(body) if diags.is_empty() => Ok(Scenario {
            body,
            output,
            base: base.to_path_buf(),
        }),
        _ => Err(diags),
    }
}

fn de<T: serde::de::DeserializeOwned>(v: Value) -> Built<T> {
    serde_path_to_error::deserialize(v).map_err(|e: serde_path_to_error::Error<serde_json::Error>| {
        let path = e.path().to_string();
        Diagnostic::new(if path == "." { String::new() } else { path }, e.inner().to_string())
    })
}

pub fn check_levels(levels: &[f64]) -> Built<()> {
    if levels.is_empty() || levels.iter().any(|h| !(*h > 0.0)) || levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Diagnostic::new("levels", "grid spacings must be positive and strictly decreasing"));
    }
    Ok(())
}
