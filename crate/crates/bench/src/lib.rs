//! Shared fixtures for the benchmark targets.

use ssplain_core::grid::Grid;
use ssplain_core::model::{lenet_specs, Classifier};
use ssplain_core::rng::Prng;

/// Digit-sized reference model with random weights.
pub fn bench_model() -> Classifier {
    Classifier::new((28, 28), 10, &lenet_specs(10), 7).expect("valid reference architecture")
}

/// Digit-like sparse 28×28 image: a thick diagonal stroke.
pub fn bench_image() -> Grid {
    let mut rng = Prng::seeded(11);
    let mut img = Grid::zeros(28, 28);
    for i in 3..25 {
        for d in 0..3 {
            let j = (i + d).min(27);
            img.set(i, j, rng.uniform(0.3, 1.0));
        }
    }
    img
}
