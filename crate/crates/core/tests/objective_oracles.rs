use std::rc::Rc;

use gssl_autodiff::{log_sigmoid, SparseMatrix, Tape, Tensor};
use gssl_core::data::{Dataset, EdgeBatch, SparseGraph};
use gssl_core::objective::{
    expected_edge_loglik, expected_pairs_loglik, kl_term, lsm_pairwise_logits, sbm_edge_logprob, total_loss,
    EdgeHead, LabelContext, LsmHead, ObjectiveInputs, Reduction, SbmParams,
};
use gssl_core::params::ParamSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_rows(r: &mut ChaCha8Rng, n: usize, k: usize) -> Tensor {
    let mut t = Tensor::from_fn(n, k, |_, _| r.random_range(0.05..1.0));
    for i in 0..n {
        let s: f64 = t.row(i).iter().sum();
        for v in t.row_mut(i) {
            *v /= s;
        }
    }
    t
}

fn lsm_head(params: &mut ParamSet, d: usize, k: usize, symmetric: bool, r: &mut ChaCha8Rng) -> LsmHead {
    let h = LsmHead::new(params, "lsm", (d, 8, k), symmetric, r);
    params.get_mut(h.bias).value = Tensor::scalar(r.random_range(-1.0..1.0));
    h
}

fn naive_logit(u: &Tensor, w: &Tensor, b: f64, k: usize, xi: &[f64], a: usize, xj: &[f64], bb: usize) -> f64 {
    let ux = |x: &[f64]| -> Vec<f64> {
        (0..u.rows()).map(|r| u.row(r).iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    };
    let mut z = ux(xi);
    z.extend((0..k).map(|c| if c == a { 1.0 } else { 0.0 }));
    z.extend(ux(xj));
    z.extend((0..k).map(|c| if c == bb { 1.0 } else { 0.0 }));
    z.iter().zip(w.data()).map(|(p, q)| p * q).sum::<f64>() + b
}

#[test]
fn lsm_decomposition_matches_concatenation() {
    let mut r = rng(1);
    let (d, k) = (5, 3);
    let mut params = ParamSet::new();
    let h = lsm_head(&mut params, d, k, false, &mut r);
    let xi: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let xj: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let (u, w, b) = (&params.get(h.u).value, &params.get(h.w).value, params.get(h.bias).value.item());
    let table = lsm_pairwise_logits(u, w, b, k, &xi, &xj);
    for a in 0..k {
        for bb in 0..k {
            let want = naive_logit(u, w, b, k, &xi, a, &xj, bb);
            assert!((table.get(a, bb) - want).abs() < 1e-12);
        }
    }
}

/// Direct double sum over the label table.
fn explicit_expectation(head: &EdgeHead, params: &ParamSet, x: &Tensor, beliefs: &Tensor, (i, j): (usize, usize), present: bool) -> f64 {
    let k = beliefs.cols();
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            let lp = match head {
                EdgeHead::Sbm(p) => sbm_edge_logprob(p, a == b, present),
                EdgeHead::Lsm(h) => {
                    let (u, w, bias) = (&params.get(h.u).value, &params.get(h.w).value, params.get(h.bias).value.item());
                    let fwd = lsm_pairwise_logits(u, w, bias, k, x.row(i), x.row(j)).get(a, b);
                    let logit = if h.symmetric {
                        0.5 * (fwd + lsm_pairwise_logits(u, w, bias, k, x.row(j), x.row(i)).get(b, a))
                    } else {
                        fwd
                    };
                    log_sigmoid(if present { logit } else { -logit })
                }
            };
            total += beliefs.get(i, a) * beliefs.get(j, b) * lp;
        }
    }
    total
}

fn tape_expectation(head: &EdgeHead, params: &ParamSet, x: &Tensor, beliefs: &Tensor, pair: (usize, usize), present: bool) -> f64 {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let r = tape.constant(beliefs.clone());
    let xs = Rc::new(SparseMatrix::from_dense(x));
    let v = expected_edge_loglik(&mut tape, head, &bound, &xs, pair, r, present).unwrap();
    tape.value(v).item()
}

#[test]
fn tape_expectation_matches_double_sum() {
    let mut r = rng(2);
    let (n, d, k) = (4, 3, 3);
    let x = Tensor::from_fn(n, d, |_, _| r.random_range(-1.0..1.0));
    let beliefs = random_rows(&mut r, n, k);
    for symmetric in [false, true] {
        let mut params = ParamSet::new();
        let h = EdgeHead::Lsm(lsm_head(&mut params, d, k, symmetric, &mut r));
        for present in [true, false] {
            for pair in [(0, 1), (1, 3), (0, 2)] {
                let got = tape_expectation(&h, &params, &x, &beliefs, pair, present);
                let want = explicit_expectation(&h, &params, &x, &beliefs, pair, present);
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
    }
    let params = ParamSet::new();
    let h = EdgeHead::Sbm(SbmParams::new(0.7, 0.2).unwrap());
    for present in [true, false] {
        let got = tape_expectation(&h, &params, &x, &beliefs, (2, 3), present);
        let want = explicit_expectation(&h, &params, &x, &beliefs, (2, 3), present);
        assert!((got - want).abs() < 1e-12);
    }
}

fn sample(r: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let mut u: f64 = r.random();
    for (c, p) in row.iter().enumerate() {
        if u < *p {
            return c;
        }
        u -= p;
    }
    row.len() - 1
}

#[test]
fn expectation_agrees_with_monte_carlo() {
    let mut r = rng(3);
    let (n, d, k) = (3, 4, 2);
    let x = Tensor::from_fn(n, d, |_, _| r.random_range(-1.0..1.0));
    let beliefs = random_rows(&mut r, n, k);
    let mut params = ParamSet::new();
    let lsm = lsm_head(&mut params, d, k, false, &mut r);
    let (u, w, b) = (params.get(lsm.u).value.clone(), params.get(lsm.w).value.clone(), params.get(lsm.bias).value.item());
    let table = lsm_pairwise_logits(&u, &w, b, k, x.row(0), x.row(2));
    let closed = tape_expectation(&EdgeHead::Lsm(lsm), &params, &x, &beliefs, (0, 2), true);

    let draws = 100_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let a = sample(&mut r, beliefs.row(0));
        let bb = sample(&mut r, beliefs.row(2));
        let v = log_sigmoid(table.get(a, bb));
        s += v;
        s2 += v * v;
    }
    let mean = s / draws as f64;
    let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
    assert!((closed - mean).abs() <= 3.0 * se + 1e-12, "{closed} vs {mean} ± {se}");
}

#[test]
fn expectation_is_linear_in_each_belief_row() {
    let mut r = rng(4);
    let (n, d, k) = (3, 2, 3);
    let x = Tensor::from_fn(n, d, |_, _| r.random_range(-1.0..1.0));
    let mut params = ParamSet::new();
    let h = EdgeHead::Lsm(lsm_head(&mut params, d, k, false, &mut r));
    let base = random_rows(&mut r, n, k);
    let other = random_rows(&mut r, n, k);
    let mix = |t: f64| {
        let mut m = base.clone();
        for c in 0..k {
            m.set(1, c, t * other.get(1, c) + (1.0 - t) * base.get(1, c));
        }
        m
    };
    let f = |b: &Tensor| tape_expectation(&h, &params, &x, b, (1, 2), false);
    let t = 0.3;
    let lhs = f(&mix(t));
    let rhs = t * f(&mix(1.0)) + (1.0 - t) * f(&mix(0.0));
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn equal_sbm_probabilities_decouple_beliefs() {
    let mut r = rng(5);
    let beliefs = random_rows(&mut r, 4, 3);
    let params = ParamSet::new();
    let h = EdgeHead::Sbm(SbmParams::new(0.4, 0.4).unwrap());
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let rv = tape.variable(beliefs);
    let xs = Rc::new(SparseMatrix::empty(4, 1));
    let pos = expected_pairs_loglik(&mut tape, &h, &bound, &xs, &[(0, 1), (2, 3)], rv, true).unwrap();
    let neg = expected_pairs_loglik(&mut tape, &h, &bound, &xs, &[(0, 2)], rv, false).unwrap();
    let s = tape.add(pos, neg).unwrap();
    let grads = tape.backward(s).unwrap();
    assert!(grads.get(rv).unwrap().data().iter().all(|g| g.abs() < 1e-15));
}

#[test]
fn kl_of_one_hot_against_uniform_is_log_k() {
    let k = 7;
    let mut lq = Tensor::full(2, k, f64::NEG_INFINITY);
    lq.set(0, 3, 0.0);
    lq.set(1, 0, 0.0);
    let lp = Tensor::full(2, k, -(k as f64).ln());
    let mut tape = Tape::new();
    // exp(-inf) * (-inf - c) is NaN; clamp the zero-mass entries instead
    let lq = tape.constant(lq.map(|v| v.max(-800.0)));
    let lp = tape.constant(lp);
    let v = kl_term(&mut tape, lq, lp, &Rc::new(vec![0, 1])).unwrap();
    assert!((tape.value(v).item() - 2.0 * (k as f64).ln()).abs() < 1e-12);
}

#[test]
fn kl_matches_direct_sum() {
    let mut r = rng(6);
    let q = random_rows(&mut r, 3, 4);
    let p = random_rows(&mut r, 3, 4);
    let mut want = 0.0;
    for i in [0, 2] {
        for c in 0..4 {
            want += q.get(i, c) * (q.get(i, c) / p.get(i, c)).ln();
        }
    }
    let mut tape = Tape::new();
    let lq = tape.constant(q.map(f64::ln));
    let lp = tape.constant(p.map(f64::ln));
    let v = kl_term(&mut tape, lq, lp, &Rc::new(vec![0, 2])).unwrap();
    assert!((tape.value(v).item() - want).abs() < 1e-12);
}

/// Five nodes, two observed, every pair in the batch.
fn tiny_problem(r: &mut ChaCha8Rng, k: usize) -> (Dataset, Tensor, Tensor) {
    let n = 5;
    let (g, _) = SparseGraph::from_pairs(n, [(0, 1), (1, 2), (3, 4), (0, 4)]);
    let x = Tensor::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
    let labels = (0..n).map(|i| i % k).collect();
    let ds = Dataset::new(x, labels, k, g, vec![0, 3], vec![1], vec![2, 4]).unwrap();
    let lq = random_rows(r, n, k).map(f64::ln);
    let lp = random_rows(r, n, k).map(f64::ln);
    (ds, lq, lp)
}

struct Exact {
    elbo: f64,
    log_evidence: f64,
}

fn enumerate(ds: &Dataset, head: &EdgeHead, params: &ParamSet, lq: &Tensor, lp: &Tensor) -> Exact {
    let k = ds.num_classes;
    let missing = ds.missing_nodes();
    let batch = EdgeBatch::all_pairs(&ds.graph);
    let mut elbo = 0.0;
    let mut evidence = 0.0;
    let mut y = ds.labels.clone();
    for code in 0..k.pow(missing.len() as u32) {
        let mut c = code;
        for &i in &missing {
            y[i] = c % k;
            c /= k;
        }
        let hard = Tensor::from_fn(ds.num_nodes(), k, |i, a| if y[i] == a { 1.0 } else { 0.0 });
        let mut log_graph = 0.0;
        for (pairs, present) in [(&batch.positives, true), (&batch.negatives, false)] {
            for &pair in pairs.iter() {
                log_graph += explicit_expectation(head, params, &ds.features, &hard, pair, present);
            }
        }
        let log_prior: f64 = (0..ds.num_nodes()).map(|i| lp.get(i, y[i])).sum();
        let log_q: f64 = missing.iter().map(|&i| lq.get(i, y[i])).sum();
        elbo += log_q.exp() * (log_graph + log_prior - log_q);
        evidence += (log_graph + log_prior).exp();
    }
    Exact {
        elbo,
        log_evidence: evidence.ln(),
    }
}

fn tape_elbo(ds: &Dataset, head: &EdgeHead, params: &ParamSet, lq: &Tensor, lp: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let q = tape.constant(lq.clone());
    let p = tape.constant(lp.clone());
    let features = Rc::new(SparseMatrix::from_dense(&ds.features));
    let labels = LabelContext::new(ds);
    let batch = EdgeBatch::all_pairs(&ds.graph);
    let io = ObjectiveInputs {
        head,
        bound: &bound,
        features: &features,
        labels: &labels,
        batch: &batch,
        eta: 0.0,
        reduction: Reduction::Sum,
    };
    let (_, b) = total_loss(&mut tape, q, p, &io).unwrap();
    -b.negative_elbo()
}

#[test]
fn elbo_matches_enumeration_and_bounds_evidence() {
    let mut r = rng(7);
    for k in [2, 3] {
        let (ds, lq, lp) = tiny_problem(&mut r, k);
        let mut params = ParamSet::new();
        let lsm = EdgeHead::Lsm(lsm_head(&mut params, 3, k, false, &mut r));
        for (head, params) in [(lsm, &params), (EdgeHead::Sbm(SbmParams::new(0.8, 0.3).unwrap()), &ParamSet::new())] {
            let exact = enumerate(&ds, &head, params, &lq, &lp);
            let got = tape_elbo(&ds, &head, params, &lq, &lp);
            assert!((got - exact.elbo).abs() < 1e-10, "{got} vs {}", exact.elbo);
            assert!(got <= exact.log_evidence + 1e-12);
        }
    }
}

#[test]
fn uniform_posterior_and_prior_give_m_log_k_entropy_terms() {
    // q = p = uniform: kl vanishes and the prior term is |observed| log K
    let mut r = rng(8);
    let k = 3;
    let (ds, _, _) = tiny_problem(&mut r, k);
    let uniform = Tensor::full(ds.num_nodes(), k, -(k as f64).ln());
    let mut tape = Tape::new();
    let params = ParamSet::new();
    let bound = params.bind(&mut tape);
    let q = tape.constant(uniform.clone());
    let p = tape.constant(uniform);
    let features = Rc::new(SparseMatrix::from_dense(&ds.features));
    let labels = LabelContext::new(&ds);
    let batch = EdgeBatch::all_pairs(&ds.graph);
    let head = EdgeHead::Sbm(SbmParams::new(0.5, 0.5).unwrap());
    let io = ObjectiveInputs {
        head: &head,
        bound: &bound,
        features: &features,
        labels: &labels,
        batch: &batch,
        eta: 2.0,
        reduction: Reduction::Sum,
    };
    let (_, b) = total_loss(&mut tape, q, p, &io).unwrap();
    let logk = (k as f64).ln();
    assert!(b.kl.abs() < 1e-12);
    assert!((b.prior - 2.0 * logk).abs() < 1e-12);
    assert!((b.supervised - 2.0 * logk).abs() < 1e-12);
    assert!((b.recon - 10.0 * 2f64.ln()).abs() < 1e-12);
    assert!((b.total - (b.recon + b.kl + b.prior + 2.0 * b.supervised)).abs() < 1e-12);
}

#[test]
fn mean_reduction_divides_by_counts() {
    let mut r = rng(9);
    let (ds, lq, lp) = tiny_problem(&mut r, 2);
    let head = EdgeHead::Sbm(SbmParams::new(0.9, 0.1).unwrap());
    let run = |reduction| {
        let mut tape = Tape::new();
        let params = ParamSet::new();
        let bound = params.bind(&mut tape);
        let q = tape.constant(lq.clone());
        let p = tape.constant(lp.clone());
        let features = Rc::new(SparseMatrix::from_dense(&ds.features));
        let labels = LabelContext::new(&ds);
        let batch = EdgeBatch::all_pairs(&ds.graph);
        let io = ObjectiveInputs {
            head: &head,
            bound: &bound,
            features: &features,
            labels: &labels,
            batch: &batch,
            eta: 1.0,
            reduction,
        };
        total_loss(&mut tape, q, p, &io).unwrap().1
    };
    let (s, m) = (run(Reduction::Sum), run(Reduction::Mean));
    assert!((s.recon / 10.0 - m.recon).abs() < 1e-12);
    assert!((s.kl / 3.0 - m.kl).abs() < 1e-12);
    assert!((s.prior / 2.0 - m.prior).abs() < 1e-12);
    assert!((s.supervised / 2.0 - m.supervised).abs() < 1e-12);
}
