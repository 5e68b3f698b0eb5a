//! Anisotropic total variation and its subgradient.

use crate::grid::Grid;

/// Sum of absolute differences between adjacent rows plus adjacent columns
/// (no wraparound).
pub fn tv_value(m: &Grid) -> f64 {
    let (h, w) = m.shape();
    let v = m.values();
    let mut total = 0.0;
    for row in 1..h {
        for col in 0..w {
            total += (v[row * w + col] - v[(row - 1) * w + col]).abs();
        }
    }
    for row in 0..h {
        for col in 1..w {
            total += (v[row * w + col] - v[row * w + col - 1]).abs();
        }
    }
    total
}

/// A member of the subdifferential of [`tv_value`] at `m`, using the
/// convention sign(0) = 0. Each pair term |b − a| contributes sign(b − a)
/// to b's entry and −sign(b − a) to a's.
pub fn tv_subgradient(m: &Grid) -> Grid {
    let (h, w) = m.shape();
    let v = m.values();
    let mut g = Grid::zeros(h, w);
    let out = g.values_mut();
    let sign = |x: f64| -> f64 {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    for row in 1..h {
        for col in 0..w {
            let s = sign(v[row * w + col] - v[(row - 1) * w + col]);
            out[row * w + col] += s;
            out[(row - 1) * w + col] -= s;
        }
    }
    for row in 0..h {
        for col in 1..w {
            let s = sign(v[row * w + col] - v[row * w + col - 1]);
            out[row * w + col] += s;
            out[row * w + col - 1] -= s;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    #[test]
    fn constant_grid_has_zero_tv() {
        assert_eq!(tv_value(&Grid::constant(4, 5, 0.7)), 0.0);
    }

    #[test]
    fn checkerboard_2x2() {
        let g = Grid::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(tv_value(&g), 4.0);
    }

    #[test]
    fn single_row() {
        let g = Grid::from_rows(&[&[0.0, 1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(tv_value(&g), 2.0);
    }

    #[test]
    fn subgradient_of_constant_is_zero() {
        let g = tv_subgradient(&Grid::constant(3, 3, 0.4));
        assert!(g.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn subgradient_single_pair() {
        let g = Grid::from_rows(&[&[0.0, 1.0]]).unwrap();
        let sub = tv_subgradient(&g);
        assert_eq!(sub.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn subgradient_matches_finite_differences_away_from_kinks() {
        // All-distinct neighbor values keep every pair term differentiable.
        let mut rng = Prng::seeded(42);
        for _ in 0..20 {
            let g = Grid::from_values(
                5,
                4,
                (0..20).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            )
            .unwrap();
            let sub = tv_subgradient(&g);
            let h = 1e-6;
            for i in 0..20 {
                let mut plus = g.clone();
                plus.values_mut()[i] += h;
                let mut minus = g.clone();
                minus.values_mut()[i] -= h;
                let fd = (tv_value(&plus) - tv_value(&minus)) / (2.0 * h);
                let a = sub.values()[i];
                // Entries where sign contributions cancel to exactly zero
                // are compared absolutely against the FD noise floor.
                if a == 0.0 {
                    assert!(fd.abs() < 1e-7, "entry {i}: fd {fd} at a zero entry");
                } else {
                    let denom = fd.abs().max(a.abs());
                    assert!(
                        ((fd - a) / denom).abs() < 1e-4,
                        "entry {i}: {a} vs fd {fd}"
                    );
                }
            }
        }
    }
}
