// Temporary diagnostic: consensus residual under different inner-solver
// moment policies.
use ssplain_core::grid::Grid;
use ssplain_core::model::{load_weights, Classifier, Dataset};
use ssplain_core::ssplain::{
    alpha1_from_state, project_box, project_l0, tv_subgradient, SsplainConfig, TopKRule,
};

struct Variant {
    label: &'static str,
    inner_steps: usize,
    lambda: f64,
    persistent: bool,
    scaled_dual: bool,
}

fn run_admm(
    model: &Classifier,
    x: &Grid,
    target: usize,
    v: &Variant,
) -> (f64, Grid, Grid) {
    let rho = 0.01;
    let lr = 0.1;
    let iters = 20;
    let support = x.support();
    let alpha0 = ((0.25 * x.norm_l0() as f64).round() as usize).max(1);
    let n = x.len();

    let mut m = x.clone();
    let max = m.max_abs();
    m.values_mut().iter_mut().for_each(|v| *v /= max);
    let mut m1 = project_l0(&m, alpha0, &support, TopKRule::Magnitude).unwrap();
    let mut m2 = project_box(&m, &support).unwrap();
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];

    let mut mom1 = vec![0.0; n];
    let mut mom2 = vec![0.0; n];
    let mut step_count = 0usize;

    for _k in 0..iters {
        if !v.persistent {
            mom1.iter_mut().for_each(|x| *x = 0.0);
            mom2.iter_mut().for_each(|x| *x = 0.0);
            step_count = 0;
        }
        for _t in 0..v.inner_steps {
            step_count += 1;
            let masked = x.hadamard(&m).unwrap();
            let (_, grad_at) = model.loss_and_input_gradient(&masked, target).unwrap();
            let tv = tv_subgradient(&m);
            let mv = m.values_mut();
            for i in 0..n {
                let g = x.values()[i] * grad_at.values()[i]
                    + v.lambda * tv.values()[i]
                    + rho * (mv[i] - m1.values()[i] + u1[i])
                    + rho * (mv[i] - m2.values()[i] + u2[i]);
                mom1[i] = 0.9 * mom1[i] + 0.1 * g;
                mom2[i] = 0.999 * mom2[i] + 0.001 * g * g;
                let bc1 = 1.0 - 0.9f64.powi(step_count as i32);
                let bc2 = 1.0 - 0.999f64.powi(step_count as i32);
                mv[i] -= lr * (mom1[i] / bc1) / ((mom2[i] / bc2).sqrt() + 1e-8);
            }
        }
        support.zero_outside(&mut m);

        let mut v1 = m.clone();
        for (a, b) in v1.values_mut().iter_mut().zip(&u1) {
            *a += b;
        }
        let _ = alpha1_from_state(&m, &Grid::zeros(28, 28), alpha0, &support);
        m1 = project_l0(&v1, alpha0, &support, if v.scaled_dual { TopKRule::Value } else { TopKRule::Magnitude }).unwrap();
        let mut v2 = m.clone();
        for (a, b) in v2.values_mut().iter_mut().zip(&u2) {
            *a += b;
        }
        m2 = project_box(&v2, &support).unwrap();
        let dual_step = if v.scaled_dual { 1.0 } else { rho };
        for i in 0..n {
            u1[i] += dual_step * (m.values()[i] - m1.values()[i]);
            u2[i] += dual_step * (m.values()[i] - m2.values()[i]);
        }
    }

    let diff: f64 = m
        .values()
        .iter()
        .zip(m1.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    (diff / m.norm_l2(), m, m1)
}

fn tail_structure(m: &Grid, m1: &Grid) {
    let mut tail: Vec<f64> = m
        .values()
        .iter()
        .zip(m1.values())
        .filter(|(_, b)| **b == 0.0)
        .map(|(a, _)| *a)
        .collect();
    tail.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let over: usize = tail.iter().filter(|v| v.abs() > 0.05).count();
    let neg: usize = tail.iter().filter(|v| **v < -0.01).count();
    println!(
        "   tail n={} over0.05={} neg={} top8={:?}",
        tail.len(),
        over,
        neg,
        tail.iter().take(8).map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
}

fn main() {
    let model = load_weights("data/cache/mnist-lenet-v1.json").unwrap();
    let data = Dataset::from_idx(
        "data/mnist/t10k-images-idx3-ubyte",
        "data/mnist/t10k-labels-idx1-ubyte",
        10,
    )
    .unwrap()
    .take(16)
    .unwrap();

    let variants = [
        Variant { label: "scaled+value fresh 50", inner_steps: 50, lambda: 1e-3, persistent: false, scaled_dual: true },
        Variant { label: "rho-dual fresh 10", inner_steps: 10, lambda: 1e-3, persistent: false, scaled_dual: false },
    ];
    for v in &variants {
        let mut under = 0;
        let mut mean = 0.0;
        for i in 0..data.len() {
            let (ratio, m, m1) = run_admm(&model, data.image(i), data.label(i), v);
            mean += ratio;
            if ratio < 0.1 {
                under += 1;
            }
            if i < 3 {
                println!("  img {i} ratio {ratio:.3}");
                tail_structure(&m, &m1);
            }
        }
        println!(
            "{:<22} mean {:.3} under-0.1 {}/{}",
            v.label,
            mean / data.len() as f64,
            under,
            data.len()
        );
    }
}
