//! Euclidean projections onto the constraint sets.
//!
//! All three projections zero every out-of-support entry first (the support
//! constraint participates in each set), then handle the sparsity or box
//! part on the surviving entries.

use crate::error::Result;
use crate::grid::{Grid, Support};

use super::TopKRule;

/// Indices of the `k` in-support entries ranked largest under `rule`,
/// ties broken toward the earlier row-major index.
fn top_k_indices(values: &[f64], support: &Support, k: usize, rule: TopKRule) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..values.len()).filter(|i| support.contains(*i)).collect();
    let key = |i: usize| -> f64 {
        match rule {
            TopKRule::Magnitude => values[i].abs(),
            TopKRule::Value => values[i],
        }
    };
    // Stable sort keeps row-major order among equal keys.
    candidates.sort_by(|a, b| key(*b).total_cmp(&key(*a)));
    candidates.truncate(k);
    candidates
}

/// Keep the `alpha0` in-support entries of largest magnitude (or largest
/// value, under [`TopKRule::Value`]) verbatim; zero everything else.
pub fn project_l0(v: &Grid, alpha0: usize, support: &Support, rule: TopKRule) -> Result<Grid> {
    support.check_matches(v)?;
    let keep = top_k_indices(v.values(), support, alpha0, rule);
    let mut out = Grid::zeros(v.height(), v.width());
    for i in keep {
        out.values_mut()[i] = v.values()[i];
    }
    Ok(out)
}

/// Euclidean projection onto {‖m‖₁ ≤ alpha1} ∩ support.
///
/// Out-of-support entries are zeroed first. If the remaining ℓ1 mass is
/// within the budget the grid is returned unchanged; otherwise the
/// sort-based simplex projection finds the threshold θ and shrinks every
/// entry toward zero by θ, preserving signs.
pub fn project_l1(v: &Grid, alpha1: f64, support: &Support) -> Result<Grid> {
    support.check_matches(v)?;
    let mut out = v.clone();
    support.zero_outside(&mut out);
    if alpha1 <= 0.0 {
        out.values_mut().iter_mut().for_each(|x| *x = 0.0);
        return Ok(out);
    }
    if out.norm_l1() <= alpha1 {
        return Ok(out);
    }

    let mut magnitudes: Vec<f64> = out
        .values()
        .iter()
        .filter(|x| **x != 0.0)
        .map(|x| x.abs())
        .collect();
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, mu) in magnitudes.iter().enumerate() {
        cumsum += mu;
        let candidate = (cumsum - alpha1) / (j + 1) as f64;
        if mu - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in out.values_mut() {
        let shrunk = (x.abs() - theta).max(0.0);
        *x = x.signum() * shrunk;
        if shrunk == 0.0 {
            *x = 0.0; // avoid -0.0 from signum
        }
    }
    Ok(out)
}

/// Clamp in-support entries to [0, 1]; zero the rest.
pub fn project_box(v: &Grid, support: &Support) -> Result<Grid> {
    support.check_matches(v)?;
    let mut out = v.clone();
    for (i, x) in out.values_mut().iter_mut().enumerate() {
        *x = if support.contains(i) {
            x.clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    Ok(out)
}

/// The ℓ1 budget matching an ℓ0 budget of `alpha0`: the sum of the `alpha0`
/// largest in-support entries (by value) of m + u1.
pub fn alpha1_from_state(m: &Grid, u1: &Grid, alpha0: usize, support: &Support) -> Result<f64> {
    m.check_same_shape(u1)?;
    support.check_matches(m)?;
    let sums: Vec<f64> = m
        .values()
        .iter()
        .zip(u1.values())
        .map(|(a, b)| a + b)
        .collect();
    let keep = top_k_indices(&sums, support, alpha0, TopKRule::Value);
    Ok(keep.into_iter().map(|i| sums[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn full(h: usize, w: usize) -> Support {
        Support::full(h, w)
    }

    #[test]
    fn l0_keeps_top_k_by_magnitude() {
        let v = Grid::from_rows(&[&[0.9, 0.1, 0.5, 0.3]]).unwrap();
        let out = project_l0(&v, 2, &full(1, 4), TopKRule::Magnitude).unwrap();
        assert_eq!(out.values(), &[0.9, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn l0_respects_support_first() {
        let v = Grid::from_rows(&[&[0.9, 0.1, 0.5, 0.3]]).unwrap();
        let mask = Grid::from_rows(&[&[0.0, 1.0, 1.0, 1.0]]).unwrap();
        let out = project_l0(&v, 2, &mask.support(), TopKRule::Magnitude).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 0.5, 0.3]);
    }

    #[test]
    fn l0_large_budget_keeps_support() {
        let v = Grid::from_rows(&[&[0.9, -0.1]]).unwrap();
        let out = project_l0(&v, 10, &full(1, 2), TopKRule::Magnitude).unwrap();
        assert_eq!(out.values(), v.values());
    }

    #[test]
    fn l0_ties_prefer_earlier_index() {
        let v = Grid::from_rows(&[&[0.5, 0.5, 0.5]]).unwrap();
        let out = project_l0(&v, 2, &full(1, 3), TopKRule::Magnitude).unwrap();
        assert_eq!(out.values(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn l1_shrinks_with_threshold() {
        let v = Grid::from_rows(&[&[0.5, 0.2, 0.9]]).unwrap();
        let out = project_l1(&v, 1.0, &full(1, 3)).unwrap();
        assert_relative_eq!(out.values()[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(out.values()[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(out.values()[2], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn l1_interior_point_unchanged() {
        let v = Grid::from_rows(&[&[0.2, -0.3, 0.1]]).unwrap();
        let out = project_l1(&v, 1.0, &full(1, 3)).unwrap();
        assert_eq!(out.values(), v.values());
    }

    #[test]
    fn l1_axis_case() {
        let v = Grid::from_rows(&[&[2.0, 0.0]]).unwrap();
        let out = project_l1(&v, 1.0, &full(1, 2)).unwrap();
        assert_eq!(out.values(), &[1.0, 0.0]);
    }

    #[test]
    fn box_clamps_and_zeroes() {
        let v = Grid::from_rows(&[&[-0.2, 0.5, 1.3]]).unwrap();
        let out = project_box(&v, &full(1, 3)).unwrap();
        assert_eq!(out.values(), &[0.0, 0.5, 1.0]);

        let in_range = Grid::from_rows(&[&[0.0, 0.5, 1.0]]).unwrap();
        assert_eq!(
            project_box(&in_range, &full(1, 3)).unwrap().values(),
            in_range.values()
        );

        let mask = Grid::from_rows(&[&[1.0, 0.0, 1.0]]).unwrap();
        let out = project_box(&v, &mask.support()).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn alpha1_rule_sums_top_values() {
        let m = Grid::from_rows(&[&[0.9, 0.1, 0.5]]).unwrap();
        let u = Grid::zeros(1, 3);
        assert_relative_eq!(
            alpha1_from_state(&m, &u, 2, &full(1, 3)).unwrap(),
            1.4,
            epsilon = 1e-12
        );

        let equal = Grid::constant(1, 5, 0.2);
        assert_relative_eq!(
            alpha1_from_state(&equal, &Grid::zeros(1, 5), 3, &full(1, 5)).unwrap(),
            0.6,
            epsilon = 1e-12
        );

        // Budget beyond the support size: full in-support sum.
        let mask = Grid::from_rows(&[&[1.0, 1.0, 0.0]]).unwrap();
        assert_relative_eq!(
            alpha1_from_state(&m, &u, 9, &mask.support()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }
}
