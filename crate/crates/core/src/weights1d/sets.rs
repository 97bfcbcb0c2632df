//! Finite descriptions of open sets of the line and relatively closed
//! singular sets inside them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An interval of the real line; infinite endpoints are always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: lo.is_finite(),
            hi_closed: hi.is_finite(),
        }
    }

    pub fn point(x: f64) -> Self {
        Interval::closed(x, x)
    }

    pub fn real_line() -> Self {
        Interval::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_open(&self) -> bool {
        !self.lo_closed && !self.hi_closed
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    /// Lebesgue measure (possibly infinite).
    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// `other ⊂ self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        if other.is_empty() {
            return true;
        }
        let lo_ok = other.lo > self.lo || (other.lo == self.lo && (self.lo_closed || !other.lo_closed));
        let hi_ok = other.hi < self.hi || (other.hi == self.hi && (self.hi_closed || !other.hi_closed));
        lo_ok && hi_ok
    }

    fn validate(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() {
            return Err(Error::InvalidInput("interval endpoint is NaN".into()));
        }
        if (self.lo_closed && !self.lo.is_finite()) || (self.hi_closed && !self.hi.is_finite()) {
            return Err(Error::InvalidInput(format!("{self}: infinite endpoints must be open")));
        }
        if self.is_empty() {
            return Err(Error::InvalidInput(format!("{self} is empty")));
        }
        Ok(())
    }
}

fn fmt_endpoint(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi && self.lo_closed && self.hi_closed {
            return write!(f, "{{{}}}", fmt_endpoint(self.lo));
        }
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_endpoint(self.lo),
            fmt_endpoint(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

fn parse_endpoint(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad interval endpoint {t:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidInput(format!("bad interval endpoint {t:?}")))
            }
        }
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses `(a,b)`, `[a,b)`, `(a,b]`, `[a,b]` and the point form `{a}`;
    /// endpoints may be `inf`/`-inf`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let x = parse_endpoint(inner)?;
            if !x.is_finite() {
                return Err(Error::InvalidInput(format!("point {t:?} must be finite")));
            }
            return Ok(Interval::point(x));
        }
        let lo_closed = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(Error::InvalidInput(format!("interval {t:?} must start with ( or ["))),
        };
        let hi_closed = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(Error::InvalidInput(format!("interval {t:?} must end with ) or ]"))),
        };
        let body = &t[1..t.len() - 1];
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| Error::InvalidInput(format!("interval {t:?} needs two endpoints")))?;
        let iv = Interval {
            lo: parse_endpoint(a)?,
            hi: parse_endpoint(b)?,
            lo_closed,
            hi_closed,
        };
        iv.validate()?;
        Ok(iv)
    }
}

/// Countable family of equal open intervals `I_j = (offset + stride·j,
/// offset + stride·j + length)`, `j = 1, 2, …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSequence {
    pub offset: f64,
    pub stride: f64,
    pub length: f64,
}

impl ComponentSequence {
    pub fn component(&self, j: usize) -> Interval {
        let lo = self.offset + self.stride * j as f64;
        Interval::open(lo, lo + self.length)
    }
}

/// Singular part of the sequence components: `I_j ∖ E_j` is the left piece
/// of `I_j` of length `length · fraction · j^{-decay}`, and `E_j` is the
/// remaining right piece `[lo_j + gap, hi_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrim {
    pub fraction: f64,
    pub decay: f64,
}

impl SequenceTrim {
    pub fn gap_fraction(&self, j: usize) -> f64 {
        self.fraction * (j as f64).powf(-self.decay)
    }
}

/// Identifies a component of an [`OpenSet1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentId {
    Finite(usize),
    Sequence(usize),
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentId::Finite(i) => write!(f, "#{i}"),
            ComponentId::Sequence(j) => write!(f, "seq[{j}]"),
        }
    }
}

/// Open subset of the line: finitely many sorted disjoint open intervals,
/// optionally followed by a [`ComponentSequence`] to the right of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSet1D {
    components: Vec<Interval>,
    sequence: Option<ComponentSequence>,
}

impl OpenSet1D {
    pub fn new(mut components: Vec<Interval>, sequence: Option<ComponentSequence>) -> Result<Self> {
        for c in &components {
            c.validate()?;
            if !c.is_open() || c.lo == c.hi {
                return Err(Error::InvalidInput(format!("component {c} is not a nonempty open interval")));
            }
        }
        components.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in components.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidInput(format!(
                    "components {} and {} overlap",
                    w[0], w[1]
                )));
            }
        }
        if let Some(s) = &sequence {
            if !(s.length > 0.0 && s.stride >= s.length && s.offset.is_finite()) {
                return Err(Error::InvalidInput(
                    "sequence needs length > 0 and stride >= length".into(),
                ));
            }
            let first = s.component(1);
            if let Some(last) = components.last() {
                if last.hi > first.lo {
                    return Err(Error::InvalidInput(
                        "finite components must lie left of the sequence".into(),
                    ));
                }
            }
        }
        if components.is_empty() && sequence.is_none() {
            return Err(Error::InvalidInput("open set has no components".into()));
        }
        Ok(OpenSet1D {
            components,
            sequence,
        })
    }

    pub fn single(i: Interval) -> Result<Self> {
        OpenSet1D::new(vec![i], None)
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn sequence(&self) -> Option<&ComponentSequence> {
        self.sequence.as_ref()
    }

    pub fn component(&self, id: ComponentId) -> Option<Interval> {
        match id {
            ComponentId::Finite(i) => self.components.get(i).copied(),
            ComponentId::Sequence(j) if j >= 1 => self.sequence.map(|s| s.component(j)),
            ComponentId::Sequence(_) => None,
        }
    }

    /// The component containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<ComponentId> {
        if let Some(i) = self.components.iter().position(|c| c.contains(x)) {
            return Some(ComponentId::Finite(i));
        }
        let s = self.sequence?;
        let j = ((x - s.offset) / s.stride).floor();
        if j >= 1.0 && j < usize::MAX as f64 {
            let j = j as usize;
            if s.component(j).contains(x) {
                return Some(ComponentId::Sequence(j));
            }
        }
        None
    }

    /// Finite components followed by the first `truncation` sequence members.
    pub fn enumerate(&self, truncation: usize) -> Vec<(ComponentId, Interval)> {
        let mut out: Vec<_> = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| (ComponentId::Finite(i), *c))
            .collect();
        if let Some(s) = &self.sequence {
            out.extend((1..=truncation).map(|j| (ComponentId::Sequence(j), s.component(j))));
        }
        out
    }

    /// Smallest box containing every finite endpoint.
    pub fn finite_hull(&self) -> Option<(f64, f64)> {
        let mut pts: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| [c.lo, c.hi])
            .filter(|x| x.is_finite())
            .collect();
        if let Some(s) = &self.sequence {
            let c = s.component(1);
            pts.extend([c.lo, c.hi]);
        }
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Relatively closed subset `E` of an [`OpenSet1D`], stored per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelClosed1D {
    pieces: Vec<Vec<Interval>>,
    trim: Option<SequenceTrim>,
}

impl RelClosed1D {
    /// Assigns each piece to the component of `omega` containing it.
    pub fn new(omega: &OpenSet1D, pieces: Vec<Interval>, trim: Option<SequenceTrim>) -> Result<Self> {
        let mut per = vec![Vec::new(); omega.components.len()];
        for piece in pieces {
            piece.validate()?;
            let idx = omega
                .components
                .iter()
                .position(|c| c.contains_interval(&piece))
                .ok_or_else(|| {
                    Error::InvalidInput(format!("E ⊄ Ω: piece {piece} lies in no finite component"))
                })?;
            let comp = omega.components[idx];
            // Relatively closed: an open endpoint must sit on the boundary of the component.
            if !piece.lo_closed && piece.lo != comp.lo {
                return Err(Error::InvalidInput(format!(
                    "E is not relatively closed: {piece} is open at an interior point of {comp}"
                )));
            }
            if !piece.hi_closed && piece.hi != comp.hi {
                return Err(Error::InvalidInput(format!(
                    "E is not relatively closed: {piece} is open at an interior point of {comp}"
                )));
            }
            per[idx].push(piece);
        }
        for (i, ps) in per.iter_mut().enumerate() {
            ps.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            if gaps(&omega.components[i], ps).is_empty() {
                return Err(Error::InvalidInput(format!(
                    "component {} is contained in E",
                    omega.components[i]
                )));
            }
        }
        if let Some(t) = &trim {
            if omega.sequence.is_none() {
                return Err(Error::InvalidInput("sequence trim given without a sequence".into()));
            }
            if !(t.fraction > 0.0 && t.fraction <= 1.0 && t.decay >= 0.0) {
                return Err(Error::InvalidInput(
                    "sequence trim needs 0 < fraction <= 1 and decay >= 0".into(),
                ));
            }
        }
        Ok(RelClosed1D { pieces: per, trim })
    }

    pub fn empty(omega: &OpenSet1D) -> Self {
        RelClosed1D {
            pieces: vec![Vec::new(); omega.components.len()],
            trim: None,
        }
    }

    pub fn trim(&self) -> Option<&SequenceTrim> {
        self.trim.as_ref()
    }

    /// Pieces of `E` inside the given component.
    pub fn pieces_in(&self, omega: &OpenSet1D, id: ComponentId) -> Vec<Interval> {
        match id {
            ComponentId::Finite(i) => self.pieces.get(i).cloned().unwrap_or_default(),
            ComponentId::Sequence(j) => {
                let (Some(s), Some(t)) = (omega.sequence, self.trim) else {
                    return Vec::new();
                };
                let c = s.component(j);
                let cut = c.lo + s.length * t.gap_fraction(j);
                if cut >= c.hi {
                    Vec::new()
                } else {
                    vec![Interval {
                        lo: cut,
                        hi: c.hi,
                        lo_closed: true,
                        hi_closed: false,
                    }]
                }
            }
        }
    }

    /// Components of `I ∖ E` for the component `id`.
    pub fn gaps_in(&self, omega: &OpenSet1D, id: ComponentId) -> Vec<Interval> {
        match omega.component(id) {
            Some(c) => gaps(&c, &self.pieces_in(omega, id)),
            None => Vec::new(),
        }
    }

    pub fn contains(&self, omega: &OpenSet1D, x: f64) -> bool {
        omega
            .locate(x)
            .is_some_and(|id| self.pieces_in(omega, id).iter().any(|p| p.contains(x)))
    }
}

/// Open components of `comp ∖ ⋃ pieces`, for pieces sorted by left endpoint
/// and closed at every endpoint interior to `comp`.
pub fn gaps(comp: &Interval, pieces: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut cursor = comp.lo;
    for p in pieces {
        if p.lo > cursor {
            out.push(Interval::open(cursor, p.lo));
        }
        cursor = cursor.max(p.hi);
    }
    if comp.hi > cursor {
        out.push(Interval::open(cursor, comp.hi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(s: &str) -> Interval {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(iv("[1,2)"), Interval { lo: 1.0, hi: 2.0, lo_closed: true, hi_closed: false });
        assert_eq!(iv("(-inf, 0]").lo, f64::NEG_INFINITY);
        assert_eq!(iv("{3}"), Interval::point(3.0));
        assert_eq!(iv("(0,2)").to_string(), "(0,2)");
        assert!("[-inf,0]".parse::<Interval>().is_err());
        assert!("(2,1)".parse::<Interval>().is_err());
        assert!("0,1".parse::<Interval>().is_err());
    }

    #[test]
    fn gaps_of_point_and_half_lines() {
        let om = OpenSet1D::single(Interval::real_line()).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("(-inf,0]"), iv("[1,inf)")], None).unwrap();
        assert_eq!(e.gaps_in(&om, ComponentId::Finite(0)), vec![Interval::open(0.0, 1.0)]);

        let om = OpenSet1D::single(iv("(0,2)")).unwrap();
        let e = RelClosed1D::new(&om, vec![iv("{1}")], None).unwrap();
        assert_eq!(e.gaps_in(&om, ComponentId::Finite(0)).len(), 2);
    }

    #[test]
    fn rejects_bad_singular_sets() {
        let om = OpenSet1D::single(iv("(0,2)")).unwrap();
        assert!(RelClosed1D::new(&om, vec![iv("[1,3]")], None).is_err());
        assert!(RelClosed1D::new(&om, vec![iv("(1,2)")], None).is_err());
        assert!(RelClosed1D::new(&om, vec![iv("(0,2)")], None).is_err());
        assert!(RelClosed1D::new(&om, vec![iv("[1,2)")], None).is_ok());
    }

    #[test]
    fn rejects_overlapping_components() {
        assert!(OpenSet1D::new(vec![iv("(0,2)"), iv("(1,3)")], None).is_err());
        assert!(OpenSet1D::new(vec![iv("(0,1)"), iv("(1,3)")], None).is_ok());
    }

    #[test]
    fn sequence_components_and_trim() {
        let seq = ComponentSequence { offset: 0.0, stride: 1.0, length: 1.0 };
        let om = OpenSet1D::new(vec![], Some(seq)).unwrap();
        let e = RelClosed1D::new(&om, vec![], Some(SequenceTrim { fraction: 1.0, decay: 1.0 })).unwrap();
        assert!(e.pieces_in(&om, ComponentId::Sequence(1)).is_empty());
        let g = e.gaps_in(&om, ComponentId::Sequence(4));
        assert_eq!(g, vec![Interval::open(4.0, 4.25)]);
        assert_eq!(om.locate(7.5), Some(ComponentId::Sequence(7)));
        assert!(e.contains(&om, 7.5));
        assert!(!e.contains(&om, 7.1));
    }
}
