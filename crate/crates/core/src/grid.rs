//! Dense row-major 2-D real grids and their support sets.
//!
//! A [`Grid`] holds an image, a mask, a gradient, an attribution map or a
//! curvature map; the pipeline shares one representation for all of them.
//! Grids are immutable-by-convention: operations build new grids, so a grid
//! can be shared read-only across worker threads.

use crate::error::{Error, Result};

/// Dense h×w grid of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Grid {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Grid {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected_h: height,
                expected_w: width,
                got_h: values.len(),
                got_w: 1,
            });
        }
        Ok(Grid {
            height,
            width,
            values,
        })
    }

    /// Convenience constructor from row slices; rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(height * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::ShapeMismatch {
                    expected_h: height,
                    expected_w: width,
                    got_h: height,
                    got_w: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Grid {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_h: self.height,
                expected_w: self.width,
                got_h: other.height,
                got_w: other.width,
            })
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Grid) -> Result<Grid> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Grid {
            height: self.height,
            width: self.width,
            values,
        })
    }

    /// Number of entries that are exactly nonzero.
    ///
    /// Zeros in this pipeline are produced by assignment (background pixels,
    /// projections), never by arithmetic cancellation, so the comparison is
    /// exact with no tolerance.
    pub fn norm_l0(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Sum of absolute values.
    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Grid) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn support(&self) -> Support {
        let member: Vec<bool> = self.values.iter().map(|v| *v != 0.0).collect();
        let count = member.iter().filter(|m| **m).count();
        Support {
            height: self.height,
            width: self.width,
            member,
            count,
        }
    }
}

/// Boolean membership map of the nonzero entries of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    height: usize,
    width: usize,
    member: Vec<bool>,
    count: usize,
}

impl Support {
    pub fn full(height: usize, width: usize) -> Self {
        Support {
            height,
            width,
            member: vec![true; height * width],
            count: height * width,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Number of member pixels.
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.member[idx]
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    /// Flat indices of member pixels, in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.then_some(i))
    }

    pub fn matches_grid(&self, grid: &Grid) -> bool {
        self.height == grid.height() && self.width == grid.width()
    }

    pub(crate) fn check_matches(&self, grid: &Grid) -> Result<()> {
        if self.matches_grid(grid) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_h: self.height,
                expected_w: self.width,
                got_h: grid.height(),
                got_w: grid.width(),
            })
        }
    }

    /// Zero every non-member entry of `grid` in place.
    pub fn zero_outside(&self, grid: &mut Grid) {
        for (v, m) in grid.values_mut().iter_mut().zip(&self.member) {
            if !m {
                *v = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hadamard_identity_and_annihilator() {
        let x = Grid::from_rows(&[&[0.2, 0.4], &[0.6, 0.8]]).unwrap();
        let ones = Grid::constant(2, 2, 1.0);
        let zeros = Grid::zeros(2, 2);
        assert_eq!(x.hadamard(&ones).unwrap(), x);
        assert_eq!(x.hadamard(&zeros).unwrap(), zeros);
    }

    #[test]
    fn hadamard_elementwise() {
        let a = Grid::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Grid::from_rows(&[&[0.5, 0.0], &[1.0, 0.25]]).unwrap();
        let expected = Grid::from_rows(&[&[0.5, 0.0], &[3.0, 1.0]]).unwrap();
        assert_eq!(a.hadamard(&b).unwrap(), expected);
    }

    #[test]
    fn hadamard_shape_mismatch_rejected() {
        let a = Grid::zeros(2, 2);
        let b = Grid::zeros(2, 3);
        assert!(a.hadamard(&b).is_err());
    }

    #[test]
    fn l0_counts() {
        assert_eq!(Grid::zeros(4, 4).norm_l0(), 0);
        assert_eq!(Grid::constant(4, 4, 1.0).norm_l0(), 16);
        let g = Grid::from_rows(&[&[0.0, 0.3], &[0.7, 0.0]]).unwrap();
        assert_eq!(g.norm_l0(), 2);
    }

    #[test]
    fn l1_sums_absolute_values() {
        assert_eq!(Grid::zeros(3, 3).norm_l1(), 0.0);
        let g = Grid::from_rows(&[&[0.5, -0.5]]).unwrap();
        assert_eq!(g.norm_l1(), 1.0);
        let id = Grid::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(id.norm_l1(), 2.0);
    }

    #[test]
    fn support_membership() {
        assert_eq!(Grid::zeros(2, 2).support().count(), 0);
        assert_eq!(Grid::constant(2, 2, 1.0).support().count(), 4);
        let g = Grid::from_rows(&[&[0.0, 0.2], &[0.0, 0.0]]).unwrap();
        let s = g.support();
        assert_eq!(s.count(), 1);
        assert!(s.contains(1));
        assert!(!s.contains(0));
        assert!(!s.contains(2));
        assert!(!s.contains(3));
    }

    fn grid_strategy() -> impl Strategy<Value = Grid> {
        (1usize..6, 1usize..6).prop_flat_map(|(h, w)| {
            proptest::collection::vec(
                prop_oneof![3 => Just(0.0), 5 => -2.0..2.0f64],
                h * w,
            )
            .prop_map(move |values| Grid::from_values(h, w, values).unwrap())
        })
    }

    proptest! {
        #[test]
        fn l0_equals_support_count(g in grid_strategy()) {
            prop_assert_eq!(g.norm_l0(), g.support().count());
        }

        #[test]
        fn hadamard_commutes_and_shrinks_support(
            (a, b) in (1usize..5, 1usize..5).prop_flat_map(|(h, w)| {
                let make = move || proptest::collection::vec(
                    prop_oneof![1 => Just(0.0), 2 => -2.0..2.0f64], h * w)
                    .prop_map(move |v| Grid::from_values(h, w, v).unwrap());
                (make(), make())
            })
        ) {
            let ab = a.hadamard(&b).unwrap();
            let ba = b.hadamard(&a).unwrap();
            prop_assert_eq!(&ab, &ba);
            let sa = a.support();
            let sb = b.support();
            for i in ab.support().indices() {
                prop_assert!(sa.contains(i) && sb.contains(i));
            }
        }
    }
}
