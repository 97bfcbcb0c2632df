//! Removability verdicts in ℝⁿ from capacity facts.
//!
//! Capacities are resolved from three kinds of evidence, in this order of
//! priority: structural rules (a short whitelist of facts that hold for
//! every admissible configuration), facts declared by the caller, and
//! numeric refinement chains. Numeric evidence never certifies zero
//! capacity, and supports positive capacity only above an explicit floor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::capacity::{null_capacity_trend, parabolicity, BallGrowth, Parabolicity, Trend, TrendOptions};
use crate::error::{Error, Result};

/// Subsets of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDesc {
    Empty,
    /// All of ℝⁿ.
    Whole,
    /// Finitely many points.
    Points { points: Vec<Vec<f64>> },
    /// A countably infinite family of points, described by a label.
    CountablePoints { label: String },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        open: bool,
    },
    /// Axis-aligned box; sides of length zero give segments and faces.
    #[serde(rename = "box")]
    Cuboid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        open: bool,
    },
    Complement { of: Box<SetDesc> },
    Union { parts: Vec<SetDesc> },
}

impl SetDesc {
    pub fn point(x: Vec<f64>) -> Self {
        SetDesc::Points { points: vec![x] }
    }

    pub fn open_ball(center: Vec<f64>, radius: f64) -> Self {
        SetDesc::Ball { center, radius, open: true }
    }

    pub fn closed_ball(center: Vec<f64>, radius: f64) -> Self {
        SetDesc::Ball { center, radius, open: false }
    }

    pub fn segment(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        SetDesc::Cuboid { lo, hi, open: false }
    }

    pub fn complement(of: SetDesc) -> Self {
        SetDesc::Complement { of: Box::new(of) }
    }

    /// Checks coordinates against the dimension.
    pub fn check(&self, n: usize) -> Result<()> {
        let bad = || Err(Error::InvalidInput(format!("set descriptor {self} does not live in ℝ^{n}")));
        match self {
            SetDesc::Points { points } => {
                if points.iter().any(|x| x.len() != n) {
                    return bad();
                }
            }
            SetDesc::Ball { center, radius, .. } => {
                if center.len() != n || !(*radius >= 0.0) {
                    return bad();
                }
            }
            SetDesc::Cuboid { lo, hi, .. } => {
                if lo.len() != n || hi.len() != n || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                    return bad();
                }
            }
            SetDesc::Complement { of } => of.check(n)?,
            SetDesc::Union { parts } => {
                for s in parts {
                    s.check(n)?;
                }
            }
            SetDesc::Empty | SetDesc::Whole | SetDesc::CountablePoints { .. } => {}
        }
        Ok(())
    }

    /// Canonical form: degenerate balls and boxes become points or the
    /// empty set, unions are flattened with their points merged first, and
    /// double complements cancel.
    pub fn simplify(&self) -> SetDesc {
        match self {
            SetDesc::Points { points } => {
                let mut pts: Vec<Vec<f64>> = Vec::new();
                for x in points {
                    if !pts.contains(x) {
                        pts.push(x.clone());
                    }
                }
                if pts.is_empty() {
                    SetDesc::Empty
                } else {
                    SetDesc::Points { points: pts }
                }
            }
            SetDesc::Ball { center, radius, open } if *radius == 0.0 => {
                if *open {
                    SetDesc::Empty
                } else {
                    SetDesc::point(center.clone())
                }
            }
            SetDesc::Cuboid { lo, hi, open } => {
                let thin = lo.iter().zip(hi).filter(|(a, b)| a == b).count();
                if *open && thin > 0 {
                    SetDesc::Empty
                } else if !*open && thin == lo.len() {
                    SetDesc::point(lo.clone())
                } else {
                    self.clone()
                }
            }
            SetDesc::Complement { of } => match of.simplify() {
                SetDesc::Whole => SetDesc::Empty,
                SetDesc::Empty => SetDesc::Whole,
                SetDesc::Complement { of } => *of,
                other => SetDesc::complement(other),
            },
            SetDesc::Union { parts } => {
                let mut points = Vec::new();
                let mut rest = Vec::new();
                let mut stack: Vec<SetDesc> = parts.iter().rev().map(|s| s.simplify()).collect();
                while let Some(s) = stack.pop() {
                    match s {
                        SetDesc::Empty => {}
                        SetDesc::Whole => return SetDesc::Whole,
                        SetDesc::Points { points: p } => points.extend(p),
                        SetDesc::Union { parts } => stack.extend(parts.into_iter().rev()),
                        other => {
                            if !rest.contains(&other) {
                                rest.push(other);
                            }
                        }
                    }
                }
                let mut out = Vec::new();
                if let pts @ SetDesc::Points { .. } = (SetDesc::Points { points }).simplify() {
                    out.push(pts);
                }
                out.extend(rest);
                match out.len() {
                    0 => SetDesc::Empty,
                    1 => out.pop().expect("one part"),
                    _ => SetDesc::Union { parts: out },
                }
            }
            other => other.clone(),
        }
    }

    fn parts(&self) -> Vec<&SetDesc> {
        match self {
            SetDesc::Union { parts } => parts.iter().collect(),
            SetDesc::Empty => Vec::new(),
            other => vec![other],
        }
    }

    /// Isolated points listed explicitly in the (simplified) set.
    pub fn atoms(&self) -> Vec<Vec<f64>> {
        self.simplify()
            .parts()
            .into_iter()
            .filter_map(|s| match s {
                SetDesc::Points { points } => Some(points.clone()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// The set with the atom `x` removed.
    pub fn without_point(&self, x: &[f64]) -> SetDesc {
        let s = self.simplify();
        let parts = s
            .parts()
            .into_iter()
            .map(|p| match p {
                SetDesc::Points { points } => SetDesc::Points {
                    points: points.iter().filter(|q| q.as_slice() != x).cloned().collect(),
                },
                other => other.clone(),
            })
            .collect();
        SetDesc::Union { parts }.simplify()
    }

    pub fn is_whole(&self) -> bool {
        self.simplify() == SetDesc::Whole
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self.simplify(), SetDesc::Points { points } if points.len() == 1)
    }

    /// ℝⁿ minus the set.
    pub fn complement_set(&self) -> SetDesc {
        SetDesc::complement(self.clone()).simplify()
    }

    fn is_bounded(&self) -> bool {
        match self {
            SetDesc::Empty | SetDesc::Points { .. } | SetDesc::Ball { .. } | SetDesc::Cuboid { .. } => true,
            SetDesc::Union { parts } => parts.iter().all(|s| s.is_bounded()),
            SetDesc::Whole | SetDesc::CountablePoints { .. } | SetDesc::Complement { .. } => false,
        }
    }
}

impl fmt::Display for SetDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &[f64]| x.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",");
        match self {
            SetDesc::Empty => f.write_str("∅"),
            SetDesc::Whole => f.write_str("R^n"),
            SetDesc::Points { points } => {
                let ps: Vec<String> = points.iter().map(|x| format!("({})", v(x))).collect();
                write!(f, "{{{}}}", ps.join(", "))
            }
            SetDesc::CountablePoints { label } => write!(f, "countable[{label}]"),
            SetDesc::Ball { center, radius, open } => {
                write!(f, "{}({}; {radius})", if *open { "B" } else { "closed B" }, v(center))
            }
            SetDesc::Cuboid { lo, hi, open } => {
                write!(f, "{}box[({}) .. ({})]", if *open { "open " } else { "" }, v(lo), v(hi))
            }
            SetDesc::Complement { of } => write!(f, "R^n \\ {of}"),
            SetDesc::Union { parts } => {
                let ps: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
                write!(f, "{}", ps.join(" ∪ "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capacity {
    Zero,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactStatus {
    Zero,
    Positive,
    /// `(h, value)` refinement chain of a capacity proxy.
    NumericTrend { chain: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Structural { rule: String },
    Declared,
    Numeric,
}

impl Provenance {
    fn rank(&self) -> u8 {
        match self {
            Provenance::Structural { .. } => 2,
            Provenance::Declared => 1,
            Provenance::Numeric => 0,
        }
    }

    /// Evidence strong enough to refute a clause.
    pub fn is_certain(&self) -> bool {
        self.rank() > 0
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Structural { rule } => write!(f, "structural:{rule}"),
            Provenance::Declared => f.write_str("declared"),
            Provenance::Numeric => f.write_str("numeric"),
        }
    }
}

/// A statement about the capacity of one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityFact {
    pub subject: SetDesc,
    pub status: FactStatus,
    pub provenance: Provenance,
}

impl CapacityFact {
    pub fn declared(subject: SetDesc, capacity: Capacity) -> Self {
        CapacityFact {
            subject,
            status: match capacity {
                Capacity::Zero => FactStatus::Zero,
                Capacity::Positive => FactStatus::Positive,
            },
            provenance: Provenance::Declared,
        }
    }

    pub fn numeric(subject: SetDesc, chain: Vec<(f64, f64)>) -> Self {
        CapacityFact {
            subject,
            status: FactStatus::NumericTrend { chain },
            provenance: Provenance::Numeric,
        }
    }
}

/// Dimension, exponent and weight class of a question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityContext {
    pub n: usize,
    pub p: f64,
    /// Lebesgue measure; enables the structural rules that depend on it.
    pub unweighted: bool,
    /// Smallest numeric capacity accepted as evidence of positivity. Without
    /// it numeric chains are never used.
    #[serde(default)]
    pub numeric_floor: Option<f64>,
}

impl CapacityContext {
    pub fn unweighted(n: usize, p: f64) -> Self {
        CapacityContext {
            n,
            p,
            unweighted: true,
            numeric_floor: None,
        }
    }

    pub fn weighted(n: usize, p: f64) -> Self {
        CapacityContext {
            unweighted: false,
            ..Self::unweighted(n, p)
        }
    }

    fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {}", self.n)));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Capacity of a set as far as the evidence goes.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub capacity: Option<Capacity>,
    pub provenance: Option<Provenance>,
    pub note: String,
}

impl Resolved {
    fn known(c: Capacity, p: Provenance, note: String) -> Self {
        Resolved {
            capacity: Some(c),
            provenance: Some(p),
            note,
        }
    }

    fn unknown(note: String) -> Self {
        Resolved {
            capacity: None,
            provenance: None,
            note,
        }
    }

    fn is(&self, c: Capacity) -> bool {
        self.capacity == Some(c)
    }

    fn certain(&self, c: Capacity) -> bool {
        self.is(c) && self.provenance.as_ref().is_some_and(|p| p.is_certain())
    }
}

/// Whitelisted capacity facts for a simplified set that is not a union.
pub fn structural_capacity(set: &SetDesc, ctx: &CapacityContext) -> Option<(Capacity, &'static str)> {
    let (n, p) = (ctx.n as f64, ctx.p);
    match set {
        SetDesc::Empty => Some((Capacity::Zero, "empty-set")),
        SetDesc::Whole => Some((Capacity::Positive, "nonempty-interior")),
        SetDesc::Points { .. } | SetDesc::CountablePoints { .. } if ctx.unweighted => Some(if p <= n {
            (Capacity::Zero, "countable-points-null-for-p-le-n")
        } else {
            (Capacity::Positive, "points-positive-for-p-gt-n")
        }),
        SetDesc::Ball { radius, .. } if *radius > 0.0 => Some((Capacity::Positive, "nonempty-interior")),
        SetDesc::Cuboid { lo, hi, .. } => {
            let k = lo.iter().zip(hi).filter(|(a, b)| a < b).count() as f64;
            if k == n {
                Some((Capacity::Positive, "nonempty-interior"))
            } else if ctx.unweighted && k >= 1.0 && p > n - k {
                Some((Capacity::Positive, "k-dimensional-set-positive-for-p-gt-n-minus-k"))
            } else {
                None
            }
        }
        SetDesc::Complement { of } if of.is_bounded() => Some((Capacity::Positive, "nonempty-interior")),
        _ => None,
    }
}

/// Resolves the capacity of `set` from structural rules, then declared
/// facts, then (for unions) its parts, then numeric chains.
pub fn resolve(set: &SetDesc, ctx: &CapacityContext, facts: &[CapacityFact]) -> Resolved {
    let s = set.simplify();
    if !matches!(s, SetDesc::Union { .. }) {
        if let Some((c, rule)) = structural_capacity(&s, ctx) {
            return Resolved::known(c, Provenance::Structural { rule: rule.into() }, format!("C({s}) {c:?} by {rule}"));
        }
    }
    for f in facts.iter().filter(|f| f.subject.simplify() == s) {
        match f.status {
            FactStatus::Zero => return Resolved::known(Capacity::Zero, Provenance::Declared, format!("C({s}) = 0 declared")),
            FactStatus::Positive => {
                return Resolved::known(Capacity::Positive, Provenance::Declared, format!("C({s}) > 0 declared"))
            }
            FactStatus::NumericTrend { .. } => {}
        }
    }
    if let SetDesc::Union { parts } = &s {
        let rs: Vec<Resolved> = parts.iter().map(|p| resolve(p, ctx, facts)).collect();
        if let Some(r) = rs.iter().filter(|r| r.is(Capacity::Positive)).max_by_key(|r| r.provenance.as_ref().map(|p| p.rank())) {
            return Resolved::known(
                Capacity::Positive,
                r.provenance.clone().expect("known"),
                format!("C({s}) > 0 since {}", r.note),
            );
        }
        if rs.iter().all(|r| r.is(Capacity::Zero)) {
            let weakest = rs.iter().filter_map(|r| r.provenance.clone()).min_by_key(|p| p.rank()).expect("nonempty union");
            let prov = match weakest {
                Provenance::Structural { .. } => Provenance::Structural {
                    rule: "countable-union-of-null-sets".into(),
                },
                other => other,
            };
            return Resolved::known(Capacity::Zero, prov, format!("C({s}) = 0 as a union of null sets"));
        }
    }
    for f in facts.iter().filter(|f| f.subject.simplify() == s) {
        if let FactStatus::NumericTrend { chain } = &f.status {
            let trend = null_capacity_trend(chain, &TrendOptions::default());
            let last = chain.last().map(|c| c.1).unwrap_or(0.0);
            if let (Trend::TrendPositive, Some(floor)) = (trend, ctx.numeric_floor) {
                if last >= floor {
                    return Resolved::known(
                        Capacity::Positive,
                        Provenance::Numeric,
                        format!("C({s}) > 0 from a stable numeric chain ending at {last} ≥ floor {floor}"),
                    );
                }
            }
            return Resolved {
                capacity: None,
                provenance: Some(Provenance::Numeric),
                note: format!("C({s}) undetermined: numeric chain reads {trend}, which cannot certify capacity"),
            };
        }
    }
    Resolved::unknown(format!("C({s}) undetermined: no structural rule or fact applies"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Removable {
    Yes,
    /// Removable only because every bounded solution is constant.
    YesDegenerate,
    No,
    Unknown,
}

impl fmt::Display for Removable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Removable::Yes => "yes",
            Removable::YesDegenerate => "yes_degenerate",
            Removable::No => "no",
            Removable::Unknown => "unknown",
        })
    }
}

pub const CLAUSE_ZERO: &str = "capacity-zero";
pub const CLAUSE_PARABOLIC_SINGLETON: &str = "parabolic-singleton";
pub const CLAUSE_PARABOLIC_ATOM: &str = "null-up-to-one-point-parabolic";
pub const CLAUSE_POSITIVE: &str = "positive-capacity";
pub const CLAUSE_UNDETERMINED: &str = "undetermined";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseVerdict {
    pub removable: Removable,
    pub clause: &'static str,
    pub facts_used: Vec<String>,
    pub provenance: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// The exceptional point of a degenerate verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl CaseVerdict {
    fn new(removable: Removable, clause: &'static str) -> Self {
        CaseVerdict {
            removable,
            clause,
            facts_used: Vec::new(),
            provenance: Vec::new(),
            notes: Vec::new(),
            x0: None,
        }
    }

    fn using(mut self, r: &Resolved) -> Self {
        self.facts_used.push(r.note.clone());
        if let Some(p) = &r.provenance {
            let p = p.to_string();
            if !self.provenance.contains(&p) {
                self.provenance.push(p);
            }
        }
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

fn check_inputs(ctx: &CapacityContext, sets: &[&SetDesc], facts: &[CapacityFact]) -> Result<()> {
    ctx.check()?;
    for s in sets {
        s.check(ctx.n)?;
    }
    for f in facts {
        f.subject.check(ctx.n)?;
        let consistent = matches!(
            (&f.status, &f.provenance),
            (FactStatus::Zero | FactStatus::Positive, Provenance::Declared) | (FactStatus::NumericTrend { .. }, Provenance::Numeric)
        );
        if !consistent {
            return Err(Error::InvalidInput(format!(
                "fact about {} must be declared zero/positive or a numeric chain; structural facts are derived",
                f.subject
            )));
        }
    }
    Ok(())
}

/// Removability for bounded solutions on unweighted ℝⁿ: removable exactly
/// when `C_p(E) = 0`, or degenerately when `p > n`, `Ω = ℝⁿ` and `E` is a
/// single point.
pub fn classify_unweighted(n: usize, p: f64, omega: &SetDesc, e: &SetDesc, facts: &[CapacityFact]) -> Result<CaseVerdict> {
    classify_unweighted_in(&CapacityContext::unweighted(n, p), omega, e, facts)
}

pub fn classify_unweighted_in(ctx: &CapacityContext, omega: &SetDesc, e: &SetDesc, facts: &[CapacityFact]) -> Result<CaseVerdict> {
    let ctx = CapacityContext { unweighted: true, ..*ctx };
    check_inputs(&ctx, &[omega, e], facts)?;
    let ce = resolve(e, &ctx, facts);
    if ce.is(Capacity::Zero) {
        return Ok(CaseVerdict::new(Removable::Yes, CLAUSE_ZERO).using(&ce));
    }
    if ctx.p > ctx.n as f64 && omega.is_whole() && e.is_singleton() {
        let mut v = CaseVerdict::new(Removable::YesDegenerate, CLAUSE_PARABOLIC_SINGLETON)
            .using(&ce)
            .note("p > n, Ω = R^n and E is a single point: bounded solutions on R^n minus a point are constant");
        v.x0 = e.atoms().pop();
        return Ok(v);
    }
    if ce.is(Capacity::Positive) {
        let why = if ctx.p <= ctx.n as f64 {
            "p ≤ n, so only null sets are removable"
        } else if !omega.is_whole() {
            "Ω ≠ R^n"
        } else {
            "E is not a single point"
        };
        return Ok(CaseVerdict::new(Removable::No, CLAUSE_POSITIVE).using(&ce).note(format!("degenerate case excluded: {why}")));
    }
    Ok(CaseVerdict::new(Removable::Unknown, CLAUSE_UNDETERMINED).using(&ce))
}

/// Where the p-parabolicity of `(ℝⁿ, μ)` comes from.
#[derive(Debug, Clone)]
pub enum ParabolicityInput {
    Growth(BallGrowth),
    Declared(Parabolicity),
}

fn parabolicity_evidence(input: &ParabolicityInput, p: f64) -> Result<(Parabolicity, Provenance, String)> {
    Ok(match input {
        ParabolicityInput::Declared(v) => (*v, Provenance::Declared, format!("{v:?} declared")),
        ParabolicityInput::Growth(g) => {
            let r = parabolicity(g, p)?;
            let prov = if matches!(g, BallGrowth::Closed(_)) {
                Provenance::Numeric
            } else {
                Provenance::Structural { rule: r.rule.into() }
            };
            (r.verdict, prov, format!("{:?} by {}", r.verdict, r.rule))
        }
    })
}

/// Removability for bounded solutions on weighted ℝⁿ: removable when
/// `C(E) = 0`, degenerately when some `x₀ ∈ E` has
/// `C(E ∖ {x₀}) = C(ℝⁿ ∖ Ω) = 0` and `(ℝⁿ, μ)` is p-parabolic.
pub fn classify_weighted(
    ctx: &CapacityContext,
    growth: &ParabolicityInput,
    omega: &SetDesc,
    e: &SetDesc,
    facts: &[CapacityFact],
) -> Result<CaseVerdict> {
    check_inputs(ctx, &[omega, e], facts)?;
    let ce = resolve(e, ctx, facts);
    if ce.is(Capacity::Zero) {
        return Ok(CaseVerdict::new(Removable::Yes, CLAUSE_ZERO).using(&ce));
    }
    let (par, par_prov, par_note) = parabolicity_evidence(growth, ctx.p)?;
    let par_resolved = Resolved {
        capacity: None,
        provenance: Some(par_prov.clone()),
        note: par_note,
    };
    let outside = resolve(&omega.complement_set(), ctx, facts);
    let parabolic_certain = par == Parabolicity::Parabolic && par_prov.is_certain();

    for x0 in e.atoms() {
        let rest = resolve(&e.without_point(&x0), ctx, facts);
        if rest.certain(Capacity::Zero) && outside.certain(Capacity::Zero) && parabolic_certain {
            let mut v = CaseVerdict::new(Removable::YesDegenerate, CLAUSE_PARABOLIC_ATOM)
                .using(&ce)
                .using(&rest)
                .using(&outside)
                .using(&par_resolved);
            v.x0 = Some(x0);
            return Ok(v);
        }
    }

    if !ce.is(Capacity::Positive) {
        return Ok(CaseVerdict::new(Removable::Unknown, CLAUSE_UNDETERMINED).using(&ce));
    }
    let v = CaseVerdict::new(Removable::No, CLAUSE_POSITIVE).using(&ce);
    if outside.certain(Capacity::Positive) {
        return Ok(v.using(&outside).note("the complement of Ω has positive capacity"));
    }
    if par == Parabolicity::Hyperbolic && par_prov.is_certain() {
        return Ok(v.using(&par_resolved).note("(R^n, μ) is p-hyperbolic"));
    }
    if let Some(reason) = every_point_removal_positive(e, ctx, facts) {
        return Ok(v.note(reason));
    }
    Ok(CaseVerdict::new(Removable::Unknown, CLAUSE_UNDETERMINED)
        .using(&ce)
        .using(&outside)
        .using(&par_resolved)
        .note("E has positive capacity but the exceptional clause is neither established nor refuted"))
}

/// Reason why `C(E ∖ {x}) > 0` for every `x ∈ E`, if one can be given.
fn every_point_removal_positive(e: &SetDesc, ctx: &CapacityContext, facts: &[CapacityFact]) -> Option<String> {
    let s = e.simplify();
    for part in s.parts() {
        if matches!(part, SetDesc::Points { .. } | SetDesc::CountablePoints { .. }) {
            continue;
        }
        // Balls, boxes and faces keep a sub-box of the same kind after a
        // point is removed.
        if let Some((Capacity::Positive, rule)) = structural_capacity(part, ctx) {
            return Some(format!("{part} stays positive after removing a point ({rule})"));
        }
    }
    let positive_atoms = e
        .atoms()
        .into_iter()
        .filter(|x| resolve(&SetDesc::point(x.clone()), ctx, facts).certain(Capacity::Positive))
        .count();
    (positive_atoms >= 2).then(|| format!("{positive_atoms} points of E have positive capacity"))
}

/// Senses of removability for superharmonic functions; all four are
/// equivalent to `C(E) = 0`, with the quasisuperharmonicity constant kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuperSense {
    BoundedSuperharmonic,
    BoundedQuasisuperharmonic,
    SuperharmonicBoundedBelow,
    QuasisuperharmonicBoundedBelow,
}

pub const SUPER_SENSES: [SuperSense; 4] = [
    SuperSense::BoundedSuperharmonic,
    SuperSense::BoundedQuasisuperharmonic,
    SuperSense::SuperharmonicBoundedBelow,
    SuperSense::QuasisuperharmonicBoundedBelow,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperVerdict {
    pub senses: Vec<(SuperSense, Removable)>,
    #[serde(flatten)]
    pub verdict: CaseVerdict,
}

/// Superharmonic removability: yes exactly when `C(E) = 0`, no exceptional
/// cases.
pub fn classify_superharmonic(ctx: &CapacityContext, e: &SetDesc, facts: &[CapacityFact]) -> Result<SuperVerdict> {
    check_inputs(ctx, &[e], facts)?;
    let ce = resolve(e, ctx, facts);
    let (r, clause) = match ce.capacity {
        Some(Capacity::Zero) => (Removable::Yes, CLAUSE_ZERO),
        Some(Capacity::Positive) => (Removable::No, CLAUSE_POSITIVE),
        None => (Removable::Unknown, CLAUSE_UNDETERMINED),
    };
    Ok(SuperVerdict {
        senses: SUPER_SENSES.iter().map(|&s| (s, r)).collect(),
        verdict: CaseVerdict::new(r, clause).using(&ce),
    })
}
