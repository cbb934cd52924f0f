use crate::error::{Error, Result};

/// Uniform sample grid `lo, lo + h, ..., hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    lo: f64,
    hi: f64,
    points: Vec<f64>,
}

impl SampleGrid {
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Argument(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if count < 2 {
            return Err(Error::Argument(format!("grid needs at least 2 points, got {count}")));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let points = (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + i as f64 * step })
            .collect();
        Ok(SampleGrid { lo, hi, points })
    }

    /// A grid over explicit points (used for spot checks).
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Argument("grid points must be finite and nonempty".into()));
        }
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(SampleGrid { lo, hi, points })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Nonzero grid points plus the ladder `±2^k` (`k >= -3`) that stays within the grid's range.
    pub fn with_ladder(&self) -> Vec<f64> {
        let reach = self.max_abs();
        let mut out: Vec<f64> = self.points.iter().copied().filter(|x| *x != 0.0).collect();
        for k in -3..=10 {
            let u = 2f64.powi(k);
            if u > reach {
                break;
            }
            if self.lo <= -u {
                out.push(-u);
            }
            if self.hi >= u {
                out.push(u);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_hits_integers() {
        let g = SampleGrid::uniform(-10.0, 10.0, 41).unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g.points()[0], -10.0);
        assert_eq!(g.points()[20], 0.0);
        assert_eq!(g.points()[22], 1.0);
        assert_eq!(g.points()[40], 10.0);
    }

    #[test]
    fn invalid_grids() {
        assert!(SampleGrid::uniform(1.0, 1.0, 5).is_err());
        assert!(SampleGrid::uniform(0.0, 1.0, 1).is_err());
        assert!(SampleGrid::uniform(f64::NAN, 1.0, 3).is_err());
        assert!(SampleGrid::from_points(vec![]).is_err());
    }

    #[test]
    fn ladder_respects_range() {
        let g = SampleGrid::uniform(0.0, 3.0, 4).unwrap();
        let s = g.with_ladder();
        assert!(s.iter().all(|x| *x > 0.0 && *x <= 3.0));
        assert!(s.contains(&0.125) && s.contains(&2.0));
    }
}
