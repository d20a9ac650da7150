//! State-space regions and safety specifications.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::polynomial::RatPoly;
use crate::rational::{norm2, to_f64, Rat};

/// Grid resolution used when disjointness can only be checked by sampling.
const DISJOINT_GRID: usize = 21;

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `Σ x[i]² ≤ r2`
    Ball { r2: Rat },
    /// `Σ x[i]² ≥ r2`
    BallComplement { r2: Rat },
    /// `{x : g(x) ≥ 0 for every g}`; `bounds` is an optional bounding box
    /// used for sampling.
    SemiAlgebraic { ineqs: Vec<RatPoly>, bounds: Option<Vec<(Rat, Rat)>> },
    FullSpace,
}

impl Region {
    pub fn ball(r2: Rat) -> Result<Self> {
        if !r2.is_positive() {
            return Err(Error::InvalidRegion("ball radius must be positive".into()));
        }
        Ok(Region::Ball { r2 })
    }

    pub fn ball_complement(r2: Rat) -> Result<Self> {
        if !r2.is_positive() {
            return Err(Error::InvalidRegion("ball radius must be positive".into()));
        }
        Ok(Region::BallComplement { r2 })
    }

    pub fn semialgebraic(ineqs: Vec<RatPoly>, bounds: Option<Vec<(Rat, Rat)>>) -> Result<Self> {
        if let Some(b) = &bounds {
            if b.iter().any(|(lo, hi)| lo > hi) {
                return Err(Error::InvalidRegion("bounding box with lo > hi".into()));
            }
        }
        let n = ineqs.first().map(RatPoly::nvars);
        if let Some(n) = n {
            if ineqs.iter().any(|g| g.nvars() != n) {
                return Err(Error::InvalidRegion("inequalities disagree on dimension".into()));
            }
            if bounds.as_ref().is_some_and(|b| b.len() != n) {
                return Err(Error::InvalidRegion("bounding box dimension mismatch".into()));
            }
        }
        Ok(Region::SemiAlgebraic { ineqs, bounds })
    }

    /// Checks that the region is usable in dimension `n`.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match self {
            Region::SemiAlgebraic { ineqs, bounds } => {
                if ineqs.iter().any(|g| g.nvars() != n) || bounds.as_ref().is_some_and(|b| b.len() != n) {
                    return Err(Error::Dimension(format!("region is not {n}-dimensional")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Exact membership for rational points.
    pub fn contains(&self, x: &[Rat]) -> Result<bool> {
        self.check_dimension(x.len())?;
        Ok(match self {
            Region::Ball { r2 } => norm2(x) <= *r2,
            Region::BallComplement { r2 } => norm2(x) >= *r2,
            Region::SemiAlgebraic { ineqs, .. } => {
                for g in ineqs {
                    if g.eval(x)?.is_negative() {
                        return Ok(false);
                    }
                }
                true
            }
            Region::FullSpace => true,
        })
    }

    pub fn contains_f64(&self, x: &[f64]) -> bool {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            Region::Ball { r2 } => n2 <= to_f64(r2),
            Region::BallComplement { r2 } => n2 >= to_f64(r2),
            Region::SemiAlgebraic { ineqs, .. } => {
                ineqs.iter().all(|g| g.to_float().eval(x).map(|v| v >= 0.0).unwrap_or(false))
            }
            Region::FullSpace => true,
        }
    }

    /// Axis-aligned box containing the region, when one is known.
    pub fn bounding_box(&self, n: usize) -> Option<Vec<(f64, f64)>> {
        match self {
            Region::Ball { r2 } => {
                let r = to_f64(r2).sqrt();
                Some(vec![(-r, r); n])
            }
            Region::SemiAlgebraic { bounds: Some(b), .. } => {
                Some(b.iter().map(|(lo, hi)| (to_f64(lo), to_f64(hi))).collect())
            }
            _ => None,
        }
    }

    pub fn inequalities(&self) -> &[RatPoly] {
        match self {
            Region::SemiAlgebraic { ineqs, .. } => ineqs,
            _ => &[],
        }
    }
}

/// Uniform grid with `per_axis` points per coordinate (corners included).
pub fn grid_points(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(2);
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).collect())
        .collect();
    let mut out = vec![Vec::with_capacity(bounds.len())];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// `Safe(X0, Xu)` within the state set `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetySpec {
    pub state: Region,
    pub initial: Region,
    pub unsafe_set: Region,
    /// Set when the loader negated a single-inequality unsafe set to make it
    /// disjoint from the initial set.
    pub flipped: bool,
}

impl SafetySpec {
    pub fn new(state: Region, initial: Region, unsafe_set: Region) -> Self {
        Self { state, initial, unsafe_set, flipped: false }
    }

    /// `X = ℝⁿ`, `X0 = {‖x‖² ≤ r0}`, `Xu = {‖x‖² ≥ ru}`.
    pub fn balls(r0: Rat, ru: Rat) -> Result<Self> {
        Ok(Self::new(Region::FullSpace, Region::ball(r0)?, Region::ball_complement(ru)?))
    }

    /// `(r0, ru)` when the spec is the ball / ball-complement shape.
    pub fn ball_radii(&self) -> Option<(&Rat, &Rat)> {
        match (&self.initial, &self.unsafe_set) {
            (Region::Ball { r2: r0 }, Region::BallComplement { r2: ru }) => Some((r0, ru)),
            _ => None,
        }
    }

    /// Requires `X0 ∩ Xu = ∅`: exact for ball / ball-complement pairs, by
    /// grid sampling of the initial set's bounding box otherwise.
    pub fn check_disjoint(&self, n: usize) -> Result<()> {
        self.state.check_dimension(n)?;
        self.initial.check_dimension(n)?;
        self.unsafe_set.check_dimension(n)?;
        match (&self.initial, &self.unsafe_set) {
            (Region::Ball { r2: r0 }, Region::BallComplement { r2: ru }) => {
                if r0 < ru {
                    Ok(())
                } else {
                    Err(Error::OverlappingSpec(format!("initial radius² {r0} ≥ unsafe radius² {ru}")))
                }
            }
            (Region::Ball { .. }, Region::Ball { .. }) => {
                Err(Error::OverlappingSpec("two balls around the origin always intersect".into()))
            }
            (_, Region::FullSpace) | (Region::FullSpace, _) => {
                Err(Error::OverlappingSpec("a full-space set meets every other set".into()))
            }
            _ => match self.sample_overlap(n) {
                Some(x) => Err(Error::OverlappingSpec(format!("sample point {x:?} lies in both sets"))),
                None => Ok(()),
            },
        }
    }

    fn sample_overlap(&self, n: usize) -> Option<Vec<f64>> {
        let bounds = self.initial.bounding_box(n).or_else(|| self.state.bounding_box(n))?;
        grid_points(&bounds, DISJOINT_GRID)
            .into_iter()
            .find(|x| self.initial.contains_f64(x) && self.unsafe_set.contains_f64(x) && self.state.contains_f64(x))
    }

    /// Validates disjointness, negating a single-inequality unsafe set when
    /// that is what it takes. The flip is logged and recorded in `flipped`.
    pub fn with_auto_flip(mut self, n: usize) -> Result<Self> {
        match self.check_disjoint(n) {
            Ok(()) => Ok(self),
            Err(err @ Error::OverlappingSpec(_)) => {
                let Region::SemiAlgebraic { ineqs, bounds } = &self.unsafe_set else {
                    return Err(err);
                };
                if ineqs.len() != 1 {
                    return Err(err);
                }
                let candidate = Region::SemiAlgebraic { ineqs: vec![-&ineqs[0]], bounds: bounds.clone() };
                let original = std::mem::replace(&mut self.unsafe_set, candidate);
                if self.check_disjoint(n).is_ok() {
                    log::warn!(
                        "unsafe set {{{} ≥ 0}} intersects the initial set; using the flipped set {{{} ≥ 0}}",
                        original.inequalities()[0],
                        self.unsafe_set.inequalities()[0]
                    );
                    self.flipped = true;
                    Ok(self)
                } else {
                    Err(err)
                }
            }
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::RatPoly;
    use crate::rational::{rat, ratio};

    #[test]
    fn ball_membership_examples() {
        let b = Region::ball(ratio(1, 64)).unwrap();
        assert!(b.contains(&[ratio(1, 8), rat(0), rat(0), rat(0)]).unwrap());
        let u = Region::ball_complement(rat(1)).unwrap();
        assert!(u.contains(&[rat(0), rat(0), rat(0), rat(1)]).unwrap());
        assert!(Region::FullSpace.contains(&[rat(5), rat(-7)]).unwrap());
        assert!(Region::ball(rat(0)).is_err());
    }

    #[test]
    fn semialgebraic_dimension_mismatch() {
        let g = RatPoly::var(2, 0);
        let r = Region::semialgebraic(vec![g], None).unwrap();
        assert!(r.contains(&[rat(1)]).is_err());
        assert!(r.contains(&[rat(1), rat(-4)]).unwrap());
        assert!(!r.contains(&[rat(-1), rat(4)]).unwrap());
    }

    #[test]
    fn disjointness_checks() {
        assert!(SafetySpec::balls(rat(4), rat(9)).unwrap().check_disjoint(3).is_ok());
        assert!(SafetySpec::balls(rat(9), rat(9)).unwrap().check_disjoint(3).is_err());
    }

    #[test]
    fn grid_has_corners() {
        let g = grid_points(&[(0.0, 1.0), (2.0, 3.0)], 3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, 2.0]) && g.contains(&vec![1.0, 3.0]));
    }
}
