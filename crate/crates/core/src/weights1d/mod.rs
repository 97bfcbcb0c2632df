//! One-dimensional weights: the dual measure `dν = w^{1/(1-p)} dx`, the
//! Muckenhoupt `A_p` probe, and the Lebesgue / ν component ratios that
//! decide bounded removability on the line.

mod sets;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};
use crate::quadrature::{self, Estimate, QuadOptions};

pub use sets::{gaps, ComponentId, ComponentSequence, Interval, OpenSet1D, RelClosed1D, SequenceTrim};

/// Sequence components materialized when a countable family is tabulated.
pub const DEFAULT_TRUNCATION: usize = 64;

/// The exponent `1 < p < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p > 1.0 && p.is_finite() {
            Ok(Exponent(p))
        } else {
            Err(Error::InvalidInput(format!("exponent must satisfy 1 < p < inf, got {p}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `p' = p/(p-1)`.
    pub fn dual(self) -> f64 {
        self.0 / (self.0 - 1.0)
    }

    /// Exponent of the dual density, `1/(1-p)`.
    pub fn dual_power(self) -> f64 {
        1.0 / (1.0 - self.0)
    }
}

/// Two-column sample table interpolated piecewise constantly: sample `i`
/// owns the cell between the midpoints to its neighbours, and the end
/// samples extend to ±∞.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl SampleTable {
    pub fn new(xs: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ws.len() {
            return Err(Error::InvalidInput("weight table needs matching nonempty columns".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("weight table x column must be strictly increasing".into()));
        }
        if ws.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weight table values must be positive".into()));
        }
        Ok(SampleTable { xs, ws })
    }

    fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (self.xs[i - 1] + self.xs[i])
        };
        let hi = if i + 1 == self.xs.len() {
            f64::INFINITY
        } else {
            0.5 * (self.xs[i] + self.xs[i + 1])
        };
        (lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        // First sample whose cell upper bound exceeds x.
        let i = self
            .xs
            .windows(2)
            .position(|w| x < 0.5 * (w[0] + w[1]))
            .unwrap_or(self.xs.len() - 1);
        self.ws[i]
    }

    /// Exact integral of `w^power` over `[a, b]` for the interpolant.
    pub fn integrate_power(&self, a: f64, b: f64, power: f64) -> f64 {
        (0..self.xs.len())
            .map(|i| {
                let (lo, hi) = self.cell_bounds(i);
                let overlap = (b.min(hi) - a.max(lo)).max(0.0);
                if overlap > 0.0 {
                    overlap * self.ws[i].powf(power)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Closed-form or tabulated positive density.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// `w ≡ c`.
    Const(f64),
    /// `w(x) = |x|^α`.
    Pow(f64),
    /// `w(x) = e^{kx}`.
    Exp(f64),
    Table(Arc<SampleTable>),
}

/// Textual weight specification: `const c`, `pow alpha`, `exp k`,
/// `table <path>`. Tables are loaded by the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Density(Density),
    Table(String),
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let kind = it.next().unwrap_or("");
        let rest: Vec<&str> = it.collect();
        let number = |name: &str| -> Result<f64> {
            match rest.as_slice() {
                [v] => v
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidInput(format!("weight `{name}` needs a finite number, got {v:?}"))),
                _ => Err(Error::InvalidInput(format!("weight `{name}` takes exactly one argument"))),
            }
        };
        match kind {
            "const" => {
                let c = number("const")?;
                if c <= 0.0 {
                    return Err(Error::InvalidInput("constant weight must be positive".into()));
                }
                Ok(WeightSpec::Density(Density::Const(c)))
            }
            "pow" => Ok(WeightSpec::Density(Density::Pow(number("pow")?))),
            "exp" => Ok(WeightSpec::Density(Density::Exp(number("exp")?))),
            "table" => match rest.as_slice() {
                [path] => Ok(WeightSpec::Table((*path).to_string())),
                _ => Err(Error::InvalidInput("weight `table` takes exactly one path".into())),
            },
            other => Err(Error::InvalidInput(format!(
                "unknown weight kind {other:?} (expected const, pow, exp or table)"
            ))),
        }
    }
}

/// A positive weight on the line together with its exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight1D {
    density: Density,
    p: Exponent,
    quad: QuadOpts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QuadOpts(QuadOptions);

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts(QuadOptions::default())
    }
}

impl Weight1D {
    pub fn new(density: Density, p: Exponent) -> Result<Self> {
        match &density {
            Density::Const(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidInput("constant weight must be positive".into()))
            }
            Density::Pow(a) | Density::Exp(a) if !a.is_finite() => {
                return Err(Error::InvalidInput("weight parameter must be finite".into()))
            }
            _ => {}
        }
        Ok(Weight1D {
            density,
            p,
            quad: QuadOpts::default(),
        })
    }

    pub fn unweighted(p: Exponent) -> Self {
        Weight1D::new(Density::Const(1.0), p).expect("valid")
    }

    pub fn with_quadrature(mut self, opts: QuadOptions) -> Self {
        self.quad = QuadOpts(opts);
        self
    }

    pub fn quadrature(&self) -> &QuadOptions {
        &self.quad.0
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.density, Density::Const(_)) || matches!(self.density, Density::Pow(a) if a == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.density {
            Density::Const(c) => *c,
            Density::Pow(a) => x.abs().powf(*a),
            Density::Exp(k) => (k * x).exp(),
            Density::Table(t) => t.eval(x),
        }
    }

    /// Density of the dual measure, `w(x)^{1/(1-p)}`.
    pub fn dual_density(&self, x: f64) -> f64 {
        match &self.density {
            Density::Const(c) => c.powf(self.p.dual_power()),
            Density::Pow(a) => x.abs().powf(a * self.p.dual_power()),
            Density::Exp(k) => (k * self.p.dual_power() * x).exp(),
            Density::Table(t) => t.eval(x).powf(self.p.dual_power()),
        }
    }

    fn singular_points(&self) -> &'static [f64] {
        match self.density {
            Density::Pow(a) if a != 0.0 => &[0.0],
            _ => &[],
        }
    }

    fn integrate_power(&self, a: f64, b: f64, dual: bool) -> Result<Estimate> {
        if let Density::Table(t) = &self.density {
            let power = if dual { self.p.dual_power() } else { 1.0 };
            let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
            return Ok(Estimate {
                value: sign * t.integrate_power(lo, hi, power),
                error: 0.0,
            });
        }
        let est = if dual {
            quadrature::integrate(&|x| self.dual_density(x), a, b, self.singular_points(), &self.quad.0)
        } else {
            quadrature::integrate(&|x| self.eval(x), a, b, self.singular_points(), &self.quad.0)
        }?;
        if !est.value.is_finite() {
            return Err(Error::NonIntegrable {
                lo: a,
                hi: b,
                reason: "integral overflows".into(),
            });
        }
        Ok(est)
    }

    /// `∫_a^b w dx` over a bounded interval.
    pub fn mu(&self, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_power(a, b, false)
    }

    /// Signed dual measure `∫_a^b w^{1/(1-p)} dx` between finite points.
    pub fn nu_between(&self, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_power(a, b, true)
    }
}

impl fmt::Display for Weight1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.density {
            Density::Const(c) => write!(f, "const {c}"),
            Density::Pow(a) => write!(f, "pow {a}"),
            Density::Exp(k) => write!(f, "exp {k}"),
            Density::Table(t) => write!(f, "table[{} samples]", t.xs.len()),
        }?;
        write!(f, " (p = {})", self.p.get())
    }
}

/// The measure `dν = w^{1/(1-p)} dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMeasure<'a> {
    pub weight: &'a Weight1D,
}

impl DualMeasure<'_> {
    pub fn measure(&self, i: &Interval) -> Result<Estimate> {
        nu_measure(self.weight, i)
    }
}

/// `ν(I)`; `+∞` exactly when `I` is unbounded.
pub fn nu_measure(w: &Weight1D, i: &Interval) -> Result<Estimate> {
    if i.is_empty() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if !i.is_bounded() {
        return Ok(Estimate {
            value: f64::INFINITY,
            error: 0.0,
        });
    }
    w.nu_between(i.lo, i.hi)
}

/// Family of bounded intervals over which the `A_p` supremum is probed.
#[derive(Debug, Clone, PartialEq)]
pub struct ApProbe {
    pub intervals: Vec<(f64, f64)>,
    pub description: String,
}

impl ApProbe {
    pub fn new(intervals: Vec<(f64, f64)>, description: impl Into<String>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInput("A_p probe is empty".into()));
        }
        if intervals.iter().any(|(a, b)| !(a < b && a.is_finite() && b.is_finite())) {
            return Err(Error::InvalidInput("A_p probe intervals must be bounded and nonempty".into()));
        }
        Ok(ApProbe {
            intervals,
            description: description.into(),
        })
    }

    /// Dyadic intervals of length `2^k`, `k ∈ [-20, 20]` clipped to the box
    /// width, centred on the lattice `2^{k-1} ℤ` inside `[lo, hi]` (at most
    /// `per_scale` centres per scale), plus intervals anchored at the
    /// weight's singular points.
    pub fn dyadic(w: &Weight1D, lo: f64, hi: f64, per_scale: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || per_scale == 0 {
            return Err(Error::InvalidInput("A_p probe box must be bounded and nonempty".into()));
        }
        let width = hi - lo;
        let kmax = (width.log2().floor() as i32).min(20);
        let mut intervals = Vec::new();
        for k in -20..=kmax {
            let len = 2f64.powi(k);
            let step = 0.5 * len;
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            let count = (last - first + 1).max(0) as usize;
            let take = count.min(per_scale);
            for t in 0..take {
                let m = if take > 1 {
                    first + ((t * (count - 1)) / (take - 1)) as i64
                } else {
                    first + (count as i64 - 1) / 2
                };
                let c = m as f64 * step;
                intervals.push((c - 0.5 * len, c + 0.5 * len));
            }
            for &s in w.singular_points() {
                intervals.extend([(s - len, s + len), (s, s + len), (s - len, s)]);
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        intervals.dedup();
        let n = intervals.len();
        ApProbe::new(
            intervals,
            format!("{n} dyadic intervals, scales 2^-20..2^{kmax}, box [{lo}, {hi}]"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApEstimate {
    /// Lower bound for the `A_p` constant.
    pub value: f64,
    pub worst: (f64, f64),
    pub probe: String,
}

/// `(⨍_I w)(⨍_I w^{1/(1-p)})^{p-1}` for one bounded interval.
pub fn ap_ratio(w: &Weight1D, a: f64, b: f64) -> Result<f64> {
    let len = b - a;
    let avg_w = w.mu(a, b)?.value / len;
    let avg_dual = w.nu_between(a, b)?.value / len;
    Ok(avg_w * avg_dual.powf(w.p().get() - 1.0))
}

/// Supremum of the `A_p` ratio over the probe, a certified lower bound for
/// the `A_p` constant.
pub fn ap_constant(w: &Weight1D, probe: &ApProbe, policy: ExecPolicy) -> Result<ApEstimate> {
    let values = exec::map_slice(policy, &probe.intervals, |&(a, b)| ap_ratio(w, a, b));
    let mut best = (f64::NEG_INFINITY, probe.intervals[0]);
    for (v, iv) in values.into_iter().zip(&probe.intervals) {
        let v = v?;
        if v > best.0 {
            best = (v, *iv);
        }
    }
    Ok(ApEstimate {
        value: best.0,
        worst: best.1,
        probe: probe.description.clone(),
    })
}

/// One row of a component ratio table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRatio {
    pub id: ComponentId,
    pub component: Interval,
    pub whole: f64,
    pub remainder: f64,
    pub ratio: f64,
    pub connected: bool,
}

/// Behaviour of the ratio over the infinite tail of a component sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailBehavior {
    /// Ratios grow without bound along the sequence.
    Unbounded,
    /// Sup over the tabulated members; exact for the Lebesgue ratio.
    Bounded(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    /// Supremum of the component ratios (may be `+∞`).
    pub value: f64,
    /// Component attaining the supremum; `None` when it escapes along the sequence tail.
    pub worst: Option<ComponentId>,
    pub rows: Vec<ComponentRatio>,
    pub tail: Option<TailBehavior>,
}

impl RatioReport {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `|I| / |I∖E|` with the convention `∞/∞ = 1`.
pub fn component_ratio(whole: f64, remainder: f64) -> f64 {
    match (whole.is_infinite(), remainder.is_infinite()) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ if remainder <= 0.0 => f64::INFINITY,
        _ => whole / remainder,
    }
}

fn assemble(rows: Vec<ComponentRatio>, tail: Option<TailBehavior>) -> RatioReport {
    let mut value = f64::NEG_INFINITY;
    let mut worst = None;
    for r in &rows {
        if r.ratio > value {
            value = r.ratio;
            worst = Some(r.id);
        }
    }
    match tail {
        Some(TailBehavior::Unbounded) => {
            value = f64::INFINITY;
            if rows.iter().all(|r| r.ratio.is_finite()) {
                worst = None;
            }
        }
        Some(TailBehavior::Bounded(b)) if b > value => value = b,
        _ => {}
    }
    RatioReport {
        value,
        worst,
        rows,
        tail,
    }
}

/// `sup_I |I| / |I∖E|` over the components of `Ω`.
pub fn lebesgue_ratio(omega: &OpenSet1D, e: &RelClosed1D) -> RatioReport {
    lebesgue_ratio_truncated(omega, e, DEFAULT_TRUNCATION)
}

pub fn lebesgue_ratio_truncated(omega: &OpenSet1D, e: &RelClosed1D, truncation: usize) -> RatioReport {
    let rows: Vec<ComponentRatio> = omega
        .enumerate(truncation)
        .into_iter()
        .map(|(id, comp)| {
            let g = e.gaps_in(omega, id);
            let whole = comp.length();
            let remainder: f64 = g.iter().map(Interval::length).sum();
            ComponentRatio {
                id,
                component: comp,
                whole,
                remainder,
                ratio: component_ratio(whole, remainder),
                connected: g.len() == 1,
            }
        })
        .collect();
    let tail = omega.sequence().map(|_| match e.trim() {
        Some(t) if t.decay > 0.0 => TailBehavior::Unbounded,
        Some(t) => TailBehavior::Bounded(1.0 / t.fraction),
        None => TailBehavior::Bounded(1.0),
    });
    assemble(rows, tail)
}

/// `sup_I ν(I) / ν(I∖E)`; identical conventions to [`lebesgue_ratio`].
///
/// Along a component sequence whose Lebesgue ratios are unbounded, the
/// ν-ratios are unbounded as well for every `A_p` weight; otherwise the tail
/// is the supremum over the tabulated members.
pub fn nu_ratio(omega: &OpenSet1D, e: &RelClosed1D, w: &Weight1D, policy: ExecPolicy) -> Result<RatioReport> {
    nu_ratio_truncated(omega, e, w, DEFAULT_TRUNCATION, policy)
}

pub fn nu_ratio_truncated(
    omega: &OpenSet1D,
    e: &RelClosed1D,
    w: &Weight1D,
    truncation: usize,
    policy: ExecPolicy,
) -> Result<RatioReport> {
    let comps = omega.enumerate(truncation);
    let rows = exec::map_slice(policy, &comps, |&(id, comp)| -> Result<ComponentRatio> {
        let g = e.gaps_in(omega, id);
        let whole = nu_measure(w, &comp)?.value;
        let mut remainder = 0.0;
        for gap in &g {
            remainder += nu_measure(w, gap)?.value;
        }
        Ok(ComponentRatio {
            id,
            component: comp,
            whole,
            remainder,
            ratio: component_ratio(whole, remainder),
            connected: g.len() == 1,
        })
    });
    let rows: Vec<ComponentRatio> = rows.into_iter().collect::<Result<_>>()?;
    let tail = omega.sequence().map(|_| match e.trim() {
        Some(t) if t.decay > 0.0 => TailBehavior::Unbounded,
        _ => TailBehavior::Bounded(
            rows.iter()
                .filter(|r| matches!(r.id, ComponentId::Sequence(_)))
                .map(|r| r.ratio)
                .fold(f64::NEG_INFINITY, f64::max),
        ),
    });
    Ok(assemble(rows, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p2() -> Exponent {
        Exponent::new(2.0).unwrap()
    }

    fn sqrt_weight() -> Weight1D {
        Weight1D::new(Density::Pow(0.5), p2()).unwrap()
    }

    fn iv(s: &str) -> Interval {
        s.parse().unwrap()
    }

    #[test]
    fn exponent_bounds_and_dual() {
        assert!(Exponent::new(1.0).is_err());
        assert!(Exponent::new(f64::INFINITY).is_err());
        let p = Exponent::new(3.0).unwrap();
        assert_relative_eq!(1.0 / p.get() + 1.0 / p.dual(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn nu_measure_examples() {
        let one = Weight1D::unweighted(p2());
        assert_relative_eq!(nu_measure(&one, &iv("(0,1)")).unwrap().value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(nu_measure(&sqrt_weight(), &iv("(0,1)")).unwrap().value, 2.0, epsilon = 1e-9);
        assert_eq!(nu_measure(&one, &iv("(0,inf)")).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn non_admissible_power_is_rejected() {
        // |x|^{-1/(p-1)} with alpha = p - 1 is not integrable at 0.
        let w = Weight1D::new(Density::Pow(1.0), p2()).unwrap();
        assert!(matches!(
            nu_measure(&w, &iv("(0,1)")),
            Err(Error::NonIntegrable { .. })
        ));
    }

    #[test]
    fn ap_examples() {
        let one = Weight1D::unweighted(p2());
        let probe = ApProbe::new(vec![(0.0, 1.0), (-3.0, 7.0)], "two").unwrap();
        assert_relative_eq!(ap_constant(&one, &probe, ExecPolicy::Sequential).unwrap().value, 1.0, epsilon = 1e-12);

        let probe = ApProbe::new(vec![(0.0, 1.0)], "unit").unwrap();
        let v = ap_constant(&sqrt_weight(), &probe, ExecPolicy::Sequential).unwrap().value;
        assert_relative_eq!(v, 4.0 / 3.0, epsilon = 1e-9);

        let e = Weight1D::new(Density::Exp(1.0), p2()).unwrap();
        let v = ap_constant(&e, &probe, ExecPolicy::Sequential).unwrap().value;
        let expect = (1f64.exp() - 1.0) * (1.0 - (-1f64).exp());
        assert_relative_eq!(v, expect, epsilon = 1e-12);
    }

    #[test]
    fn dyadic_probe_finds_power_weight_constant() {
        let w = sqrt_weight();
        let probe = ApProbe::dyadic(&w, -1.0, 1.0, 16).unwrap();
        let est = ap_constant(&w, &probe, ExecPolicy::Parallel).unwrap();
        assert!(est.value >= 4.0 / 3.0 - 1e-9, "{est:?}");
    }

    #[test]
    fn table_weight_integrates_exactly() {
        let t = SampleTable::new(vec![0.0, 1.0, 2.0], vec![1.0, 4.0, 9.0]).unwrap();
        let w = Weight1D::new(Density::Table(Arc::new(t)), p2()).unwrap();
        // cells: (-inf,0.5] -> 1, (0.5,1.5] -> 4, (1.5,inf) -> 9
        assert_relative_eq!(w.mu(0.0, 2.0).unwrap().value, 0.5 + 4.0 + 4.5, epsilon = 1e-14);
        assert_relative_eq!(w.nu_between(0.0, 2.0).unwrap().value, 0.5 + 0.25 + 0.5 / 9.0, epsilon = 1e-14);
        assert_eq!(w.eval(1.2), 4.0);
        assert!(SampleTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SampleTable::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn weight_grammar() {
        assert_eq!("const 2".parse::<WeightSpec>().unwrap(), WeightSpec::Density(Density::Const(2.0)));
        assert_eq!("pow 0.5".parse::<WeightSpec>().unwrap(), WeightSpec::Density(Density::Pow(0.5)));
        assert_eq!("exp -1".parse::<WeightSpec>().unwrap(), WeightSpec::Density(Density::Exp(-1.0)));
        assert_eq!("table w.csv".parse::<WeightSpec>().unwrap(), WeightSpec::Table("w.csv".into()));
        assert!("const -1".parse::<WeightSpec>().is_err());
        assert!("gauss 1".parse::<WeightSpec>().is_err());
        assert!("pow".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn lebesgue_ratio_examples() {
        let om = OpenSet1D::single(iv("(0,2)")).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("[1,2)")], None).unwrap();
        let r = lebesgue_ratio(&om, &e);
        assert_eq!(r.value, 2.0);
        assert_eq!(r.worst, Some(ComponentId::Finite(0)));

        let om = OpenSet1D::single(Interval::real_line()).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("[0,inf)")], None).unwrap();
        assert_eq!(lebesgue_ratio(&om, &e).value, 1.0);

        let seq = ComponentSequence { offset: 0.0, stride: 1.0, length: 1.0 };
        let om = OpenSet1D::new(vec![], Some(seq)).unwrap();
        let e = RelClosed1D::new(&om, vec![], Some(SequenceTrim { fraction: 1.0, decay: 1.0 })).unwrap();
        let r = lebesgue_ratio(&om, &e);
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.worst, None);
        // tabulated ratios equal j
        for row in &r.rows {
            if let ComponentId::Sequence(j) = row.id {
                assert_relative_eq!(row.ratio, j as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn nu_ratio_examples() {
        let om = OpenSet1D::single(iv("(0,2)")).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("[1,2)")], None).unwrap();
        let r = nu_ratio(&om, &e, &sqrt_weight(), ExecPolicy::Sequential).unwrap();
        assert_relative_eq!(r.value, 2f64.sqrt(), epsilon = 1e-9);

        let one = Weight1D::unweighted(p2());
        let r = nu_ratio(&om, &e, &one, ExecPolicy::Sequential).unwrap();
        assert_relative_eq!(r.value, lebesgue_ratio(&om, &e).value, epsilon = 1e-12);

        let om = OpenSet1D::single(Interval::real_line()).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("[0,inf)")], None).unwrap();
        let r = nu_ratio(&om, &e, &sqrt_weight(), ExecPolicy::Sequential).unwrap();
        assert_eq!(r.value, 1.0);
    }
}
