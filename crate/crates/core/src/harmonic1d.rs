//! Exact one-dimensional A-harmonic functions. On an interval every such
//! function is `u(x) = b + a·ν([basepoint, x])` for the dual measure ν of
//! the effective weight, so extensions, fits and removability reduce to
//! ν-measure bookkeeping.

use thiserror::Error as ThisError;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::weights1d::{
    lebesgue_ratio_truncated, nu_ratio_truncated, ComponentId, Interval, OpenSet1D, RatioReport, RelClosed1D,
    TailBehavior, Weight1D, DEFAULT_TRUNCATION,
};

/// `u(x) = b + a·∫_{basepoint}^{x} w^{1/(1-p)} dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineInNu {
    pub a: f64,
    pub b: f64,
    pub basepoint: f64,
    pub weight: Weight1D,
}

impl AffineInNu {
    pub fn constant(value: f64, weight: Weight1D) -> Self {
        AffineInNu {
            a: 0.0,
            b: value,
            basepoint: 0.0,
            weight,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.a == 0.0
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_affine(self, x)
    }
}

pub fn eval_affine(f: &AffineInNu, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("cannot evaluate at {x}")));
    }
    if f.a == 0.0 {
        return Ok(f.b);
    }
    Ok(f.b + f.a * f.weight.nu_between(f.basepoint, x)?.value)
}

/// The unique member of the family through `(x1, u1)` and `(x2, u2)`.
pub fn fit_two_points(w: &Weight1D, interval: &Interval, (x1, u1): (f64, f64), (x2, u2): (f64, f64)) -> Result<AffineInNu> {
    let inside = |x: f64| x.is_finite() && x >= interval.lo && x <= interval.hi;
    if !inside(x1) || !inside(x2) {
        return Err(Error::InvalidInput(format!("fit points {x1}, {x2} must lie in {interval}")));
    }
    if x1 == x2 {
        return Err(Error::InvalidInput("fit points must differ".into()));
    }
    let nu = w.nu_between(x1, x2)?;
    if nu.value.abs() <= w.quadrature().abs_tol.max(nu.error) {
        return Err(Error::DegenerateInterval(x1.min(x2), x1.max(x2)));
    }
    Ok(AffineInNu {
        a: (u2 - u1) / nu.value,
        b: u1,
        basepoint: x1,
        weight: w.clone(),
    })
}

/// One [`AffineInNu`] per interval; evaluated only on its own interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseHarmonic1D {
    pub pieces: Vec<(Interval, AffineInNu)>,
}

impl PiecewiseHarmonic1D {
    pub fn new(pieces: Vec<(Interval, AffineInNu)>) -> Self {
        PiecewiseHarmonic1D { pieces }
    }

    pub fn piece_at(&self, x: f64) -> Option<&(Interval, AffineInNu)> {
        self.pieces.iter().find(|(iv, _)| iv.contains(x))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.piece_at(x) {
            Some((_, f)) => f.eval(x),
            None => Err(Error::InvalidInput(format!("{x} lies outside the function's domain"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum ExtensionError {
    /// `I ∖ E` is disconnected for this component; `witness` (the indicator
    /// of one component of `I ∖ E`) is harmonic on `Ω ∖ E` with no
    /// harmonic extension.
    #[error("component {component} minus the singular set is disconnected")]
    Disconnected {
        component: ComponentId,
        witness: Box<PiecewiseHarmonic1D>,
    },
    #[error(transparent)]
    Numeric(#[from] Error),
}

fn interior_point(iv: &Interval) -> f64 {
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => 0.5 * (iv.lo + iv.hi),
        (true, false) => iv.lo + 1.0,
        (false, true) => iv.hi - 1.0,
        (false, false) => 0.0,
    }
}

/// Indicator of the first component of `I ∖ E`, zero on every other
/// component of `Ω ∖ E` (sequence members up to `truncation`).
fn indicator_witness(omega: &OpenSet1D, e: &RelClosed1D, w: &Weight1D, split: ComponentId, truncation: usize) -> PiecewiseHarmonic1D {
    let mut pieces = Vec::new();
    for (id, _) in omega.enumerate(truncation) {
        for (k, g) in e.gaps_in(omega, id).into_iter().enumerate() {
            let value = if id == split && k == 0 { 1.0 } else { 0.0 };
            pieces.push((g, AffineInNu::constant(value, w.clone())));
        }
    }
    PiecewiseHarmonic1D::new(pieces)
}

fn first_disconnected(omega: &OpenSet1D, e: &RelClosed1D) -> Option<ComponentId> {
    // Sequence members have a single left remainder and are always connected.
    omega
        .enumerate(0)
        .into_iter()
        .map(|(id, _)| id)
        .find(|&id| e.gaps_in(omega, id).len() > 1)
}

/// Extends a function harmonic on `Ω ∖ E` (one piece per component of
/// `Ω ∖ E`) to `Ω` by keeping each piece's `(a, b)` on its whole component.
pub fn weak_extend(omega: &OpenSet1D, e: &RelClosed1D, u: &PiecewiseHarmonic1D) -> std::result::Result<PiecewiseHarmonic1D, ExtensionError> {
    let weight = u.pieces.first().map(|(_, f)| f.weight.clone());
    if let Some(id) = first_disconnected(omega, e) {
        let w = weight.ok_or_else(|| Error::InvalidInput("function has no pieces".into()))?;
        return Err(ExtensionError::Disconnected {
            component: id,
            witness: Box::new(indicator_witness(omega, e, &w, id, DEFAULT_TRUNCATION)),
        });
    }
    let mut out: Vec<(ComponentId, Interval, AffineInNu)> = Vec::new();
    for (piece_iv, f) in &u.pieces {
        let x = interior_point(piece_iv);
        let id = omega
            .locate(x)
            .ok_or_else(|| Error::InvalidInput(format!("piece {piece_iv} is not inside Ω")))?;
        let gap = e
            .gaps_in(omega, id)
            .into_iter()
            .next()
            .expect("connected remainder");
        if !gap.contains_interval(piece_iv) {
            return Err(Error::InvalidInput(format!("piece {piece_iv} is not inside Ω ∖ E = … {gap} …")).into());
        }
        if out.iter().any(|(other, _, _)| *other == id) {
            return Err(Error::InvalidInput(format!("two pieces given on component {id}")).into());
        }
        let comp = omega.component(id).expect("located");
        out.push((id, comp, f.clone()));
    }
    for (id, comp) in omega.enumerate(0) {
        if !out.iter().any(|(other, _, _)| *other == id) {
            return Err(Error::InvalidInput(format!("no piece given on component {comp}")).into());
        }
    }
    Ok(PiecewiseHarmonic1D::new(out.into_iter().map(|(_, iv, f)| (iv, f)).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RemovabilityStatus {
    Removable,
    WeaklyRemovableOnly,
    NonRemovableDisconnected,
    NonRemovableUnbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum WitnessCase {
    /// Indicator of one component of a split `I ∖ E`.
    Indicator,
    /// A component with `ν(I ∖ E) < ∞ = ν(I)`.
    UnboundedComponent,
    /// Components with `ν(I_j) > j·ν(I_j ∖ E)`.
    RatioSequence,
}

/// Bounded harmonic function on `Ω ∖ E` certifying non-removability.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness1D {
    pub case: WitnessCase,
    /// The function on `Ω ∖ E`.
    pub function: PiecewiseHarmonic1D,
    /// Its unique extension to `Ω`, when one exists.
    pub extension: Option<PiecewiseHarmonic1D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict1D {
    pub status: RemovabilityStatus,
    pub constant: Option<f64>,
    pub witness: Option<Witness1D>,
    pub clause: &'static str,
    pub lebesgue: RatioReport,
}

pub const CLAUSE_REMOVABLE: &str = "connected-remainders-bounded-ratio";
pub const CLAUSE_SPLIT: &str = "split-component";
pub const CLAUSE_UNBOUNDED_COMPONENT: &str = "unbounded-component-bounded-remainder";
pub const CLAUSE_RATIO_SEQUENCE: &str = "unbounded-ratio-sequence";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    /// Sequence members materialized in tables and witnesses.
    pub truncation: usize,
    pub policy: ExecPolicy,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            truncation: DEFAULT_TRUNCATION,
            policy: ExecPolicy::default(),
        }
    }
}

/// Affine-in-ν function on `gap` with the given limits at its endpoints.
fn endpoint_fit(w: &Weight1D, gap: &Interval, left: f64, right: f64) -> Result<AffineInNu> {
    let nu = w.nu_between(gap.lo, gap.hi)?.value;
    if nu <= 0.0 {
        return Err(Error::DegenerateInterval(gap.lo, gap.hi));
    }
    Ok(AffineInNu {
        a: (right - left) / nu,
        b: left,
        basepoint: gap.lo,
        weight: w.clone(),
    })
}

/// Harmonic function on `Ω ∖ E` that is `shape(id, gap)` on the chosen
/// components and zero elsewhere, with its extension.
fn build_witness<F>(omega: &OpenSet1D, e: &RelClosed1D, w: &Weight1D, truncation: usize, case: WitnessCase, mut shape: F) -> Result<Witness1D>
where
    F: FnMut(ComponentId, &Interval) -> Result<Option<AffineInNu>>,
{
    let mut function = Vec::new();
    let mut extension = Vec::new();
    for (id, comp) in omega.enumerate(truncation) {
        let gap = e.gaps_in(omega, id).into_iter().next().expect("connected remainder");
        let f = shape(id, &gap)?.unwrap_or_else(|| AffineInNu::constant(0.0, w.clone()));
        function.push((gap, f.clone()));
        extension.push((comp, f));
    }
    Ok(Witness1D {
        case,
        function: PiecewiseHarmonic1D::new(function),
        extension: Some(PiecewiseHarmonic1D::new(extension)),
    })
}

/// Bounded removability on weighted ℝ: removable iff every `I ∖ E` is
/// connected and `|I| ≤ C |I ∖ E|` for one constant `C`.
pub fn decide_removable_1d(omega: &OpenSet1D, e: &RelClosed1D, w: &Weight1D, opts: &DecideOptions) -> Result<Verdict1D> {
    let lebesgue = lebesgue_ratio_truncated(omega, e, opts.truncation);
    if let Some(id) = first_disconnected(omega, e) {
        return Ok(Verdict1D {
            status: RemovabilityStatus::NonRemovableDisconnected,
            constant: None,
            witness: Some(Witness1D {
                case: WitnessCase::Indicator,
                function: indicator_witness(omega, e, w, id, opts.truncation),
                extension: None,
            }),
            clause: CLAUSE_SPLIT,
            lebesgue,
        });
    }
    if lebesgue.is_finite() {
        return Ok(Verdict1D {
            status: RemovabilityStatus::Removable,
            constant: Some(lebesgue.value),
            witness: None,
            clause: CLAUSE_REMOVABLE,
            lebesgue,
        });
    }
    // Case 1: an unbounded component whose remainder is bounded
    // (ν and Lebesgue agree on boundedness).
    let case1 = lebesgue
        .rows
        .iter()
        .find(|r| r.whole.is_infinite() && r.remainder.is_finite())
        .map(|r| r.id);
    let witness = if let Some(target) = case1 {
        build_witness(omega, e, w, opts.truncation, WitnessCase::UnboundedComponent, |id, gap| {
            if id == target {
                endpoint_fit(w, gap, -1.0, 1.0).map(Some)
            } else {
                Ok(None)
            }
        })?
    } else {
        debug_assert_eq!(lebesgue.tail, Some(TailBehavior::Unbounded));
        build_witness(omega, e, w, opts.truncation, WitnessCase::RatioSequence, |id, gap| match id {
            ComponentId::Sequence(_) => endpoint_fit(w, gap, 0.0, 1.0).map(Some),
            ComponentId::Finite(_) => Ok(None),
        })?
    };
    Ok(Verdict1D {
        status: RemovabilityStatus::NonRemovableUnbounded,
        constant: None,
        clause: if case1.is_some() {
            CLAUSE_UNBOUNDED_COMPONENT
        } else {
            CLAUSE_RATIO_SEQUENCE
        },
        witness: Some(witness),
        lebesgue,
    })
}

/// Sup-norm bound `C′·M` for the extension of any harmonic `u` on `Ω ∖ E`
/// with `0 ≤ u ≤ M`, where `C′` is the ν-ratio.
pub fn bounded_extension_bound(omega: &OpenSet1D, e: &RelClosed1D, w: &Weight1D, sup_norm: f64, opts: &DecideOptions) -> Result<f64> {
    let verdict = decide_removable_1d(omega, e, w, opts)?;
    if verdict.status != RemovabilityStatus::Removable {
        return Err(Error::NotRemovable(format!("{:?} ({})", verdict.status, verdict.clause)));
    }
    let cprime = nu_ratio_truncated(omega, e, w, opts.truncation, opts.policy)?;
    Ok(cprime.value * sup_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights1d::{ComponentSequence, Density, Exponent, SequenceTrim};
    use approx::assert_relative_eq;

    fn p2() -> Exponent {
        Exponent::new(2.0).unwrap()
    }
    fn one() -> Weight1D {
        Weight1D::unweighted(p2())
    }
    fn sqrt_w() -> Weight1D {
        Weight1D::new(Density::Pow(0.5), p2()).unwrap()
    }
    fn iv(s: &str) -> Interval {
        s.parse().unwrap()
    }
    fn setup(omega: &[&str], e: &[&str]) -> (OpenSet1D, RelClosed1D) {
        let om = OpenSet1D::new(omega.iter().map(|s| iv(s)).collect(), None).unwrap();
        let e = RelClosed1D::new(&om, e.iter().map(|s| iv(s)).collect(), None).unwrap();
        (om, e)
    }

    #[test]
    fn eval_examples() {
        let f = AffineInNu { a: 1.0, b: 0.0, basepoint: 0.0, weight: one() };
        assert_relative_eq!(eval_affine(&f, 3.0).unwrap(), 3.0, epsilon = 1e-14);
        let f = AffineInNu { a: 1.0, b: 0.0, basepoint: 0.0, weight: sqrt_w() };
        assert_relative_eq!(eval_affine(&f, 1.0).unwrap(), 2.0, epsilon = 1e-9);
        let f = AffineInNu::constant(7.0, sqrt_w());
        assert_eq!(eval_affine(&f, -123.4).unwrap(), 7.0);
        assert!(eval_affine(&f, f64::NAN).is_err());
    }

    #[test]
    fn fit_examples() {
        let i = iv("(0,5)");
        let f = fit_two_points(&one(), &i, (1.0, 2.0), (4.0, 4.0)).unwrap();
        assert_relative_eq!(f.a, 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(f.eval(0.0).unwrap(), 4.0 / 3.0, epsilon = 1e-14);
        let f = fit_two_points(&one(), &i, (0.0, 5.0), (1.0, 5.0)).unwrap();
        assert!(f.is_constant());
        let f = fit_two_points(&sqrt_w(), &iv("(0,1)"), (0.0, 0.0), (1.0, 2.0)).unwrap();
        assert_relative_eq!(f.a, 1.0, epsilon = 1e-9);
        assert_eq!(f.b, 0.0);
        assert!(fit_two_points(&one(), &i, (1.0, 0.0), (1.0, 1.0)).is_err());
        assert!(fit_two_points(&one(), &i, (1.0, 0.0), (7.0, 1.0)).is_err());
    }

    #[test]
    fn fit_rejects_vanishing_dual_measure() {
        let f = fit_two_points(&one(), &iv("(0,1)"), (0.5, 0.0), (0.5 + 1e-12, 1.0));
        assert!(matches!(f, Err(Error::DegenerateInterval(..))));
    }

    #[test]
    fn weak_extend_examples() {
        let (om, e) = setup(&["(0,2)"], &["[1,2)"]);
        let u = PiecewiseHarmonic1D::new(vec![(iv("(0,1)"), AffineInNu { a: 1.0, b: 0.0, basepoint: 0.0, weight: one() })]);
        let ext = weak_extend(&om, &e, &u).unwrap();
        assert_relative_eq!(ext.eval(1.5).unwrap(), 1.5, epsilon = 1e-14);

        let (om, e) = setup(&["(-1,1)"], &["[-0.5,0]"]);
        let u = PiecewiseHarmonic1D::new(vec![
            (iv("(-1,-0.5)"), AffineInNu::constant(0.0, one())),
            (iv("(0,1)"), AffineInNu::constant(0.0, one())),
        ]);
        match weak_extend(&om, &e, &u) {
            Err(ExtensionError::Disconnected { component, witness }) => {
                assert_eq!(component, ComponentId::Finite(0));
                // indicator of the first remainder component
                assert_eq!(witness.eval(-0.75).unwrap(), 1.0);
                assert_eq!(witness.eval(0.5).unwrap(), 0.0);
            }
            other => panic!("{other:?}"),
        }

        let (om, e) = setup(&["(-inf,inf)"], &["(-inf,0]", "[1,inf)"]);
        let u = PiecewiseHarmonic1D::new(vec![(iv("(0,1)"), AffineInNu { a: 1.0, b: 0.0, basepoint: 0.0, weight: one() })]);
        let ext = weak_extend(&om, &e, &u).unwrap();
        assert_relative_eq!(ext.eval(-40.0).unwrap(), -40.0, epsilon = 1e-12);
        assert_relative_eq!(ext.eval(1e3).unwrap(), 1e3, epsilon = 1e-9);
    }

    #[test]
    fn weak_extend_requires_every_component() {
        let (om, e) = setup(&["(0,1)", "(2,3)"], &[]);
        let u = PiecewiseHarmonic1D::new(vec![(iv("(0,1)"), AffineInNu::constant(1.0, one()))]);
        assert!(matches!(weak_extend(&om, &e, &u), Err(ExtensionError::Numeric(_))));
    }

    #[test]
    fn decide_examples() {
        let opts = DecideOptions::default();
        let (om, e) = setup(&["(0,2)"], &["[1,2)"]);
        let v = decide_removable_1d(&om, &e, &one(), &opts).unwrap();
        assert_eq!(v.status, RemovabilityStatus::Removable);
        assert_eq!(v.constant, Some(2.0));

        let (om, e) = setup(&["(-inf,inf)"], &["[0,inf)"]);
        let v = decide_removable_1d(&om, &e, &one(), &opts).unwrap();
        assert_eq!(v.status, RemovabilityStatus::Removable);
        assert_eq!(v.constant, Some(1.0));

        let seq = ComponentSequence { offset: 0.0, stride: 1.0, length: 1.0 };
        let om = OpenSet1D::new(vec![], Some(seq)).unwrap();
        let e = RelClosed1D::new(&om, vec![], Some(SequenceTrim { fraction: 1.0, decay: 1.0 })).unwrap();
        let v = decide_removable_1d(&om, &e, &one(), &opts).unwrap();
        assert_eq!(v.status, RemovabilityStatus::NonRemovableUnbounded);
        assert_eq!(v.clause, CLAUSE_RATIO_SEQUENCE);
        let w = v.witness.unwrap();
        assert_eq!(w.case, WitnessCase::RatioSequence);
        // sup - inf of the extension on I_j equals j
        let ext = w.extension.unwrap();
        for j in [2usize, 10, 50] {
            let x_lo = j as f64 + 1e-9;
            let x_hi = j as f64 + 1.0 - 1e-9;
            let osc = ext.eval(x_hi).unwrap() - ext.eval(x_lo).unwrap();
            assert_relative_eq!(osc, j as f64, epsilon = 1e-6);
        }
    }

    #[test]
    fn split_component_is_not_removable() {
        let (om, e) = setup(&["(-1,1)"], &["[-0.5,0]"]);
        let v = decide_removable_1d(&om, &e, &one(), &DecideOptions::default()).unwrap();
        assert_eq!(v.status, RemovabilityStatus::NonRemovableDisconnected);
        assert!(v.witness.unwrap().extension.is_none());
    }

    #[test]
    fn extension_bounds() {
        let opts = DecideOptions::default();
        let (om, e) = setup(&["(0,2)"], &["[1,2)"]);
        assert_relative_eq!(bounded_extension_bound(&om, &e, &one(), 1.0, &opts).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(bounded_extension_bound(&om, &e, &sqrt_w(), 1.0, &opts).unwrap(), 2f64.sqrt(), epsilon = 1e-9);
        let (om, e) = setup(&["(-inf,inf)"], &["[0,inf)"]);
        assert_eq!(bounded_extension_bound(&om, &e, &one(), 1.0, &opts).unwrap(), 1.0);
        let (om, e) = setup(&["(-inf,inf)"], &["(-inf,0]", "[1,inf)"]);
        assert!(matches!(
            bounded_extension_bound(&om, &e, &one(), 1.0, &opts),
            Err(Error::NotRemovable(_))
        ));
    }
}
