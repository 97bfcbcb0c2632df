//! Quasiharmonic functions on the unweighted line: odd reflection, the
//! growth of the quasiharmonicity constant, reflection-based extension
//! across `E`, and the `f_Q` lower bound for extensions of `u(t) = t`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic1d::{decide_removable_1d, DecideOptions, RemovabilityStatus, Verdict1D, WitnessCase};
use crate::weights1d::{ComponentId, Exponent, Interval, OpenSet1D, RelClosed1D, Weight1D};

/// A real function of one variable.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `Q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct QuasiConstant(f64);

impl QuasiConstant {
    pub fn new(q: f64) -> Result<Self> {
        if q >= 1.0 && q.is_finite() {
            Ok(QuasiConstant(q))
        } else {
            Err(Error::InvalidInput(format!("quasiharmonicity constant must be >= 1, got {q}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The original function lives right of the pivot.
    Right,
    Left,
}

/// Odd reflection `u*(pivot + t) = u(pivot + t)`, `u*(pivot - t) =
/// 2·pivot_value - u(pivot + t)` (mirrored for [`Side::Left`]).
#[derive(Clone)]
pub struct ReflectedFunction {
    pub base: RealFn,
    pub pivot: f64,
    pub pivot_value: f64,
    pub side: Side,
}

impl fmt::Debug for ReflectedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReflectedFunction")
            .field("pivot", &self.pivot)
            .field("pivot_value", &self.pivot_value)
            .field("side", &self.side)
            .finish()
    }
}

impl ReflectedFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let original = match self.side {
            Side::Right => x > self.pivot,
            Side::Left => x < self.pivot,
        };
        if x == self.pivot {
            self.pivot_value
        } else if original {
            (self.base)(x)
        } else {
            2.0 * self.pivot_value - (self.base)(2.0 * self.pivot - x)
        }
    }
}

/// Numerical one-sided limit of `u` at `x0`, approached from the side given
/// by `direction` (+1 from the right), sampling at `scale·2^{-k}`.
pub fn one_sided_limit(u: &dyn Fn(f64) -> f64, x0: f64, direction: f64, scale: f64) -> Result<f64> {
    let samples: Vec<f64> = (8..=40).map(|k| u(x0 + direction * scale * 2f64.powi(-k))).collect();
    let tail = &samples[samples.len() - 12..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let n = samples.len();
    let last = 2.0 * samples[n - 1] - samples[n - 2];
    let oscillation = hi - lo;
    if !oscillation.is_finite() || oscillation > 1e-6 * last.abs().max(1.0) {
        return Err(Error::LimitMissing {
            pivot: x0,
            oscillation,
        });
    }
    Ok(last)
}

/// Odd reflection of `u`, given on `domain` (one side of `pivot`).
/// Without `pivot_value` the one-sided limit at the pivot is probed.
pub fn reflect(u: RealFn, domain: &Interval, pivot: f64, pivot_value: Option<f64>) -> Result<ReflectedFunction> {
    let side = if domain.lo >= pivot {
        Side::Right
    } else if domain.hi <= pivot {
        Side::Left
    } else {
        return Err(Error::InvalidInput(format!("pivot {pivot} lies inside the domain {domain}")));
    };
    let pivot_value = match pivot_value {
        Some(v) => v,
        None => {
            let scale = if domain.is_bounded() { domain.length() } else { 1.0 };
            let dir = if side == Side::Right { 1.0 } else { -1.0 };
            one_sided_limit(&*u, pivot, dir, scale)?
        }
    };
    Ok(ReflectedFunction {
        base: u,
        pivot,
        pivot_value,
        side,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRule {
    /// `Q' = 2^p Q`.
    Martio,
    /// `Q' = max{2, 2^{p-1}} Q`.
    Uppman,
    /// `Q' = Q (2 - Q^{-1/p})^p`, valid for small `Q`.
    UppmanSmall,
}

/// `max{2, 2^{p-1}}`.
pub fn reflection_factor(p: Exponent) -> f64 {
    2f64.max(2f64.powf(p.get() - 1.0))
}

/// Range of `Q` in which the small-`Q` reflection bound applies.
pub fn uppman_threshold(p: Exponent) -> f64 {
    let p = p.get();
    (1.0 / (2.0 - 2f64.powf(1.0 / p))).max(1.0 / (2.0 - 2f64.powf(1.0 / p - 1.0)))
}

/// Quasiharmonicity constant after one odd reflection.
pub fn q_update(q: QuasiConstant, p: Exponent, rule: QRule) -> Result<QuasiConstant> {
    let qv = q.get();
    let out = match rule {
        QRule::Martio => 2f64.powf(p.get()) * qv,
        QRule::Uppman => reflection_factor(p) * qv,
        QRule::UppmanSmall => {
            let limit = uppman_threshold(p);
            if qv >= limit {
                return Err(Error::ConditionFailed(format!(
                    "small-Q reflection bound needs Q < {limit}, got Q = {qv}"
                )));
            }
            qv * (2.0 - qv.powf(-1.0 / p.get())).powf(p.get())
        }
    };
    QuasiConstant::new(out.max(qv))
}

/// `max{2, 2^{p-1}}^N · Q`.
pub fn q_after_reflections(q: QuasiConstant, p: Exponent, n: u32) -> QuasiConstant {
    QuasiConstant(reflection_factor(p).powi(n as i32) * q.get())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Step {
    pivot: f64,
    value: f64,
    /// Domain before this reflection.
    before: Interval,
}

/// Extension on one component of Ω: `u` on the remainder, then the chain
/// of reflections, or the constant extension from a half-line.
#[derive(Clone)]
pub struct ComponentExtension {
    pub component: Interval,
    pub remainder: Interval,
    steps: Vec<Step>,
    constant: Option<f64>,
    base: RealFn,
}

impl fmt::Debug for ComponentExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComponentExtension")
            .field("component", &self.component)
            .field("remainder", &self.remainder)
            .field("steps", &self.steps)
            .field("constant", &self.constant)
            .finish()
    }
}

impl ComponentExtension {
    pub fn reflections(&self) -> usize {
        self.steps.len()
    }

    fn eval_level(&self, level: usize, x: f64) -> f64 {
        if level == 0 {
            return (self.base)(x);
        }
        let s = &self.steps[level - 1];
        if s.before.contains(x) {
            self.eval_level(level - 1, x)
        } else if x == s.pivot {
            s.value
        } else {
            2.0 * s.value - self.eval_level(level - 1, 2.0 * s.pivot - x)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if let Some(c) = self.constant {
            if !self.remainder.contains(x) {
                return c;
            }
        }
        self.eval_level(self.steps.len(), x)
    }
}

/// Reflection-based extension of a bounded quasiharmonic function.
#[derive(Debug, Clone)]
pub struct QuasiExtension {
    pub components: Vec<ComponentExtension>,
    /// `⌈log₂ C⌉` for the measured ratio `C`.
    pub n: u32,
    /// Largest number of reflections used in one component.
    pub reflections_used: u32,
    pub q_prime: QuasiConstant,
    pub ratio: f64,
}

impl QuasiExtension {
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.components
            .iter()
            .find(|c| c.component.contains(x))
            .map(|c| c.eval(x))
            .ok_or_else(|| Error::InvalidInput(format!("{x} lies outside Ω")))
    }
}

/// `⌈log₂ C⌉`, zero for `C ≤ 1`.
pub fn reflections_needed(ratio: f64) -> u32 {
    if ratio <= 1.0 {
        0
    } else {
        let n = ratio.log2().ceil();
        // Guard against log2 rounding just above an exact power of two.
        if 2f64.powf(n - 1.0) >= ratio {
            (n - 1.0) as u32
        } else {
            n as u32
        }
    }
}

fn extend_component(component: Interval, remainder: Interval, u: &RealFn) -> Result<ComponentExtension> {
    let mut ext = ComponentExtension {
        component,
        remainder,
        steps: Vec::new(),
        constant: None,
        base: u.clone(),
    };
    if remainder == component {
        return Ok(ext);
    }
    if !remainder.is_bounded() {
        // Bounded quasiharmonic functions on a half-line are constant.
        let (edge, dir) = if remainder.lo.is_finite() {
            (remainder.lo, 1.0)
        } else {
            (remainder.hi, -1.0)
        };
        let c = one_sided_limit(&**u, edge, dir, 1.0)?;
        let far = (1..=12).map(|k| u(edge + dir * 2f64.powi(k)));
        if far.into_iter().any(|v| (v - c).abs() > 1e-8 * c.abs().max(1.0)) {
            return Err(Error::InvalidInput(
                "a bounded quasiharmonic function on a half-line is constant; the given u is not".into(),
            ));
        }
        ext.constant = Some(c);
        return Ok(ext);
    }
    let scale = remainder.length();
    let mut lv = Some(one_sided_limit(&**u, remainder.lo, 1.0, scale)?);
    let mut rv = Some(one_sided_limit(&**u, remainder.hi, -1.0, scale)?);
    let mut j = remainder;
    while j.lo > component.lo || j.hi < component.hi {
        let rem_left = j.lo - component.lo;
        let rem_right = component.hi - j.hi;
        let len = j.length();
        let before = j;
        if rem_left >= rem_right {
            let v = lv.expect("left limit");
            ext.steps.push(Step { pivot: j.lo, value: v, before });
            if len < rem_left {
                lv = rv.map(|r| 2.0 * v - r);
                j = Interval::open(j.lo - len, j.hi);
            } else {
                lv = None;
                j = Interval::open(component.lo, j.hi);
            }
        } else {
            let v = rv.expect("right limit");
            ext.steps.push(Step { pivot: j.hi, value: v, before });
            if len < rem_right {
                rv = lv.map(|l| 2.0 * v - l);
                j = Interval::open(j.lo, j.hi + len);
            } else {
                rv = None;
                j = Interval::open(j.lo, component.hi);
            }
        }
    }
    Ok(ext)
}

/// Extends a bounded `Q`-quasiharmonic `u` on `Ω ∖ E` (unweighted line) by
/// repeated odd reflection about the endpoints of the remainder.
pub fn extend_quasi_1d(omega: &OpenSet1D, e: &RelClosed1D, u: RealFn, q: QuasiConstant, p: Exponent) -> Result<QuasiExtension> {
    let verdict = decide_removable_1d(omega, e, &Weight1D::unweighted(p), &DecideOptions::default())?;
    if verdict.status != RemovabilityStatus::Removable {
        return Err(Error::NotRemovable(format!("{:?} ({})", verdict.status, verdict.clause)));
    }
    let ratio = verdict.constant.expect("removable carries a constant");
    let n = reflections_needed(ratio);
    let mut components = Vec::new();
    for (id, comp) in omega.enumerate(crate::weights1d::DEFAULT_TRUNCATION) {
        let gap = e.gaps_in(omega, id).into_iter().next().expect("connected remainder");
        components.push(extend_component(comp, gap, &u)?);
    }
    let reflections_used = components.iter().map(|c| c.reflections() as u32).max().unwrap_or(0);
    Ok(QuasiExtension {
        components,
        n,
        reflections_used,
        q_prime: q_after_reflections(q, p, reflections_used),
        ratio,
    })
}

/// Result of the `f_Q` root search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FqBound {
    Bound(f64),
    Infeasible,
}

impl FqBound {
    pub fn value(self) -> Option<f64> {
        match self {
            FqBound::Bound(v) => Some(v),
            FqBound::Infeasible => None,
        }
    }
}

/// Smallest `a ≥ 1` with `a^p Q ≥ x^{p-1} + (a-1)^p (1 - 1/x)^{1-p}`: every
/// `Q`-quasiharmonic extension `U` of `u(t) = t` from `(0,1)` to `(0,x)`
/// has `U(x) ≥ f_Q(x)`.
pub fn f_q_bound(q: QuasiConstant, p: Exponent, x: f64) -> Result<FqBound> {
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!("f_Q needs x > 1, got {x}")));
    }
    let (qv, pv) = (q.get(), p.get());
    let c = (1.0 - 1.0 / x).powf(1.0 - pv);
    let rhs0 = x.powf(pv - 1.0);
    let g = |a: f64| qv * a.powf(pv) - rhs0 - (a - 1.0).powf(pv) * c;
    if g(1.0) >= 0.0 {
        return Ok(FqBound::Bound(1.0));
    }
    // g' vanishes exactly where a/(a-1) = m; for m > 1 that stationary point
    // is the maximum of g on [1, ∞) and the crossing lies left of it.
    let m = x / ((x - 1.0) * qv.powf(1.0 / (pv - 1.0)));
    let hi = if m > 1.0 {
        let peak = m / (m - 1.0);
        let gp = g(peak);
        let feas = 1e-12 * (qv * peak.powf(pv) + rhs0);
        if gp < -feas {
            return Ok(FqBound::Infeasible);
        }
        if gp <= feas {
            return Ok(FqBound::Bound(peak));
        }
        peak
    } else {
        let mut hi = (2.0 * x).max(64.0);
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > 2f64.powi(40) {
                return Ok(FqBound::Infeasible);
            }
        }
        hi
    };
    let (mut lo, mut hi) = (1.0, hi);
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(FqBound::Bound(hi))
}

/// Quasiharmonic removability verdict with its supporting numbers.
#[derive(Debug, Clone)]
pub struct QuasiVerdict {
    pub verdict: Verdict1D,
    /// Reflections needed when removable.
    pub n: Option<u32>,
    /// `(x, f_Q(x))` pairs showing that every quasiharmonic extension of the
    /// witness is unbounded.
    pub certificate: Vec<(f64, f64)>,
    pub q: QuasiConstant,
}

pub const CLAUSE_CONSTANCY: &str = "split-component-constancy-propagation";

/// Bounded quasiharmonic removability on unweighted ℝ. The decision surface
/// is the same as for harmonic functions; non-removability is certified by
/// the growth of `f_Q` at the given `Q`.
pub fn decide_removable_quasi_1d(omega: &OpenSet1D, e: &RelClosed1D, p: Exponent, q: QuasiConstant) -> Result<QuasiVerdict> {
    let mut verdict = decide_removable_1d(omega, e, &Weight1D::unweighted(p), &DecideOptions::default())?;
    let mut out = QuasiVerdict {
        n: None,
        certificate: Vec::new(),
        q,
        verdict: verdict.clone(),
    };
    match verdict.status {
        RemovabilityStatus::Removable => {
            out.n = verdict.constant.map(reflections_needed);
        }
        RemovabilityStatus::NonRemovableDisconnected => {
            verdict.clause = CLAUSE_CONSTANCY;
            out.verdict = verdict;
        }
        RemovabilityStatus::NonRemovableUnbounded => {
            let case = verdict.witness.as_ref().map(|w| w.case);
            if case == Some(WitnessCase::RatioSequence) {
                for row in &verdict.lebesgue.rows {
                    if matches!(row.id, ComponentId::Sequence(_)) && row.ratio > 1.0 {
                        if let Some(b) = f_q_bound(q, p, row.ratio)?.value() {
                            out.certificate.push((row.ratio, b));
                        }
                    }
                }
            } else {
                let mut k = 1;
                loop {
                    let x = 2f64.powi(k);
                    let b = f_q_bound(q, p, x)?.value().unwrap_or(f64::NAN);
                    out.certificate.push((x, b));
                    if !(b <= 1e3) || k >= 60 {
                        break;
                    }
                    k += 1;
                }
            }
        }
        RemovabilityStatus::WeaklyRemovableOnly => {}
    }
    Ok(out)
}
