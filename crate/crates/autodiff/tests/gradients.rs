//! Finite-difference checks for every differentiable op, plus the
//! structural properties the models rely on.

use std::rc::Rc;

use gssl_autodiff::{Activation, AutodiffError, SparseMatrix, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn random_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::from_fn(r, c, |_, _| rng.random_range(-1.5..1.5))
}

/// Builds `f(inputs)` on a fresh tape, returning the scalar loss.
type Build = dyn Fn(&mut Tape, &[Var]) -> Var;

fn eval(build: &Build, inputs: &[Tensor]) -> f64 {
    let mut t = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| t.variable(x.clone())).collect();
    let out = build(&mut t, &vars);
    t.value(out).item()
}

/// Largest norm-relative error between autodiff and central differences.
fn max_rel_error(build: &Build, inputs: &[Tensor]) -> f64 {
    let mut t = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| t.variable(x.clone())).collect();
    let out = build(&mut t, &vars);
    let grads = t.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (k, x) in inputs.iter().enumerate() {
        let analytic = grads
            .get(vars[k])
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(x.rows(), x.cols()));
        let mut numeric = Tensor::zeros(x.rows(), x.cols());
        for i in 0..x.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += H;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= H;
            numeric.data_mut()[i] = (eval(build, &plus) - eval(build, &minus)) / (2.0 * H);
        }
        let diff: f64 = analytic
            .data()
            .iter()
            .zip(numeric.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = norm(&analytic).max(norm(&numeric)).max(1e-8);
        worst = worst.max(diff / scale);
    }
    worst
}

fn norm(t: &Tensor) -> f64 {
    t.data().iter().map(|v| v * v).sum::<f64>().sqrt()
}

// A fixed random weighting turns any tensor output into a scalar whose
// gradient exercises every entry.
fn weighted_sum(t: &mut Tape, x: Var, seed: u64) -> Var {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, c) = t.value(x).shape();
    let w = random_tensor(&mut rng, r, c);
    let p = t.mul_const(x, Rc::new(w)).unwrap();
    t.sum(p)
}

#[test]
fn matmul_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inputs = [random_tensor(&mut rng, 3, 4), random_tensor(&mut rng, 4, 2)];
    let err = max_rel_error(
        &|t, v| {
            let c = t.matmul(v[0], v[1]).unwrap();
            t.sum(c)
        },
        &inputs,
    );
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn matmul_identity_is_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_tensor(&mut rng, 4, 3);
    assert_eq!(a.matmul(&Tensor::identity(3)).unwrap(), a);
}

#[test]
fn elementwise_and_broadcast_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inputs = [
        random_tensor(&mut rng, 4, 3),
        random_tensor(&mut rng, 4, 3),
        random_tensor(&mut rng, 1, 3),
    ];
    let err = max_rel_error(
        &|t, v| {
            let a = t.mul(v[0], v[1]).unwrap();
            let b = t.sub(a, v[1]).unwrap();
            let c = t.add_row(b, v[2]).unwrap();
            let d = t.exp(c);
            let e = t.scale(d, 0.3);
            let f = t.add_scalar(e, 1.0);
            let g = t.add(f, v[0]).unwrap();
            let h = t.log_sigmoid(g);
            weighted_sum(t, h, 3)
        },
        &inputs,
    );
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn activation_gradients_away_from_kinks() {
    for kind in [
        Activation::Relu,
        Activation::Elu,
        Activation::LeakyRelu(0.2),
        Activation::Sigmoid,
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // keep every entry at least 0.05 from the kink at 0
        let x = Tensor::from_fn(5, 4, |_, _| {
            let v: f64 = rng.random_range(0.05..2.0);
            if rng.random::<bool>() {
                v
            } else {
                -v
            }
        });
        let err = max_rel_error(
            &move |t, v| {
                let y = t.activation(v[0], kind).unwrap();
                weighted_sum(t, y, 9)
            },
            &[x],
        );
        assert!(err < 1e-4, "{kind:?}: rel err {err}");
    }
}

#[test]
fn log_softmax_gradient_and_normalisation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_tensor(&mut rng, 6, 5);
    let err = max_rel_error(
        &|t, v| {
            let y = t.log_softmax_rows(v[0]).unwrap();
            weighted_sum(t, y, 4)
        },
        &[x.clone()],
    );
    assert!(err < 1e-4, "rel err {err}");

    let mut t = Tape::new();
    let v = t.constant(x);
    let y = t.log_softmax_rows(v).unwrap();
    for i in 0..6 {
        let s: f64 = t.value(y).row(i).iter().map(|v| v.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn log_softmax_uniform_and_shift_invariant() {
    let mut t = Tape::new();
    let k = 7;
    let u = t.constant(Tensor::full(1, k, 0.3));
    let y = t.log_softmax_rows(u).unwrap();
    for &v in t.value(y).data() {
        assert!((v - (1.0 / k as f64).ln()).abs() < 1e-15);
    }
    let a = t.constant(Tensor::from_rows(&[[0.1, -2.0, 3.0]]));
    let b = t.constant(Tensor::from_rows(&[[100.1, 98.0, 103.0]]));
    let ya = t.log_softmax_rows(a).unwrap();
    let yb = t.log_softmax_rows(b).unwrap();
    for (p, q) in t.value(ya).data().iter().zip(t.value(yb).data()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn gather_pick_concat_sumcols_replace_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let inputs = [random_tensor(&mut rng, 4, 3), random_tensor(&mut rng, 4, 2)];
    let err = max_rel_error(
        &|t, v| {
            let g = t.gather_rows(v[0], Rc::new(vec![3, 0, 3, 1])).unwrap();
            let c = t.concat_cols(&[g, v[1]]).unwrap();
            let ct = t.transpose(c);
            let c = t.transpose(ct);
            let r = t
                .replace_rows(c, Rc::new(vec![false, true, false, false]), &Tensor::zeros(4, 5))
                .unwrap();
            let p = t.pick_elements(r, Rc::new(vec![(0, 1), (2, 4), (0, 1), (3, 0)])).unwrap();
            let sc = t.sum_cols(r);
            let e = t.exp(sc);
            let a = weighted_sum(t, p, 1);
            let b = weighted_sum(t, e, 2);
            t.add(a, b).unwrap()
        },
        &inputs,
    );
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn segment_softmax_and_edge_aggregate_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let src = Rc::new(vec![0, 1, 2, 1, 3, 0, 3]);
    let dst = Rc::new(vec![0, 0, 0, 1, 1, 2, 3]);
    let inputs = [random_tensor(&mut rng, 7, 1), random_tensor(&mut rng, 4, 3)];
    let err = max_rel_error(
        &move |t, v| {
            let a = t.segment_softmax(v[0], dst.clone(), 4).unwrap();
            let o = t.edge_aggregate(a, v[1], src.clone(), dst.clone()).unwrap();
            weighted_sum(t, o, 8)
        },
        &inputs,
    );
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn sparse_matmul_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let s = Rc::new(
        SparseMatrix::from_triplets(3, 4, [(0, 1, 0.5), (1, 3, -1.0), (2, 0, 2.0), (2, 3, 0.25)])
            .unwrap(),
    );
    let err = max_rel_error(
        &move |t, v| {
            let o = t.sparse_matmul(s.clone(), v[0]).unwrap();
            weighted_sum(t, o, 3)
        },
        &[random_tensor(&mut rng, 4, 2)],
    );
    assert!(err < 1e-4, "rel err {err}");
}

#[test]
fn sparse_two_node_average() {
    let s = SparseMatrix::from_triplets(2, 2, [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)])
        .unwrap();
    let x = Tensor::from_rows(&[[1.0, 4.0], [3.0, 0.0]]);
    let y = s.matmul_dense(&x).unwrap();
    assert_eq!(y.data(), &[2.0, 2.0, 2.0, 2.0]);
}

#[test]
fn sparse_shape_mismatch() {
    let mut t = Tape::new();
    let x = t.constant(Tensor::zeros(3, 2));
    let s = Rc::new(SparseMatrix::empty(2, 2));
    assert!(matches!(
        t.sparse_matmul(s, x),
        Err(AutodiffError::Shape { .. })
    ));
}

#[test]
fn dropout_zero_fraction_within_three_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rate = 0.3;
    let n = 100_000;
    let mut t = Tape::new();
    let x = t.constant(Tensor::full(n, 1, 1.0));
    let y = t.dropout(x, rate, true, &mut rng).unwrap();
    let zeros = t.value(y).data().iter().filter(|&&v| v == 0.0).count() as f64;
    let sigma = (n as f64 * rate * (1.0 - rate)).sqrt();
    assert!((zeros - n as f64 * rate).abs() < 3.0 * sigma);
    for &v in t.value(y).data() {
        assert!(v == 0.0 || (v - 1.0 / 0.7).abs() < 1e-12);
    }
}

#[test]
fn forward_backward_bit_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut t = Tape::new();
        let x = t.variable(random_tensor(&mut rng, 8, 4));
        let w = t.variable(random_tensor(&mut rng, 4, 3));
        let d = t.dropout(x, 0.5, true, &mut rng).unwrap();
        let h = t.matmul(d, w).unwrap();
        let l = t.log_softmax_rows(h).unwrap();
        let s = t.sum(l);
        let g = t.backward(s).unwrap();
        (t.value(s).item().to_bits(), g.get(w).unwrap().clone())
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn sparse_product_equals_dense(seed in 0u64..1000, density in 0.05f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                if rng.random::<f64>() < density {
                    trip.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let s = SparseMatrix::from_triplets(10, 10, trip).unwrap();
        let x = random_tensor(&mut rng, 10, 3);
        let sparse = s.matmul_dense(&x).unwrap();
        let dense = s.to_dense().matmul(&x).unwrap();
        for (a, b) in sparse.data().iter().zip(dense.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn segment_softmax_segments_normalise(seed in 0u64..1000, edges in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let seg: Vec<usize> = (0..edges).map(|_| rng.random_range(0..n)).collect();
        let scores = Tensor::from_fn(edges, 1, |_, _| rng.random_range(-5.0..5.0));
        let mut t = Tape::new();
        let s = t.constant(scores);
        let y = t.segment_softmax(s, Rc::new(seg.clone()), n).unwrap();
        let mut sums = vec![0.0; n];
        for (e, &g) in seg.iter().enumerate() {
            let v = t.value(y).data()[e];
            prop_assert!(v > 0.0);
            sums[g] += v;
        }
        for g in 0..n {
            if seg.contains(&g) {
                prop_assert!((sums[g] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_softmax_rows_normalise(seed in 0u64..1000, k in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tape::new();
        let x = t.constant(Tensor::from_fn(4, k, |_, _| rng.random_range(-30.0..30.0)));
        let y = t.log_softmax_rows(x).unwrap();
        for i in 0..4 {
            let s: f64 = t.value(y).row(i).iter().map(|v| v.exp()).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
