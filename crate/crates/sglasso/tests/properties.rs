//! Randomized invariants over the numeric kernels: factorizations that
//! reconstruct, proxes that certify their own optimality, losses with the
//! right sign, and a solver whose reported support means what it says.

use proptest::prelude::*;
use sglasso::mat::{cholesky, log_det, sample_covariance, sym_eigen, Matrix, SymMatrix};
use sglasso::metrics::{confusion, f1_score, kl_loss, GraphModel};
use sglasso::penalty::{
    degree_penalty_matrix, l11_norm, prox_soft_threshold, prox_sq_l1, weighted_degrees, PenaltySpec,
};
use sglasso::solver::{solve, SolverConfig};

fn spd_from(entries: &[f64], p: usize) -> SymMatrix {
    let b = Matrix::from_fn(p, p, |i, j| entries[i * p + j]);
    let bbt = b.matmul(&b.transpose());
    SymMatrix::from_fn(p, |i, j| {
        bbt[(i, j)] / p as f64 + if i == j { 0.8 } else { 0.0 }
    })
}

fn spd_strategy(max_p: usize) -> impl Strategy<Value = SymMatrix> {
    (2..=max_p).prop_flat_map(|p| {
        prop::collection::vec(-1.0..1.0f64, p * p).prop_map(move |e| spd_from(&e, p))
    })
}

fn sym_pair_strategy(max_p: usize) -> impl Strategy<Value = (SymMatrix, SymMatrix)> {
    (2..=max_p).prop_flat_map(|p| {
        let n = p * (p + 1) / 2;
        prop::collection::vec(-2.0..2.0f64, 2 * n).prop_map(move |e| {
            let build = |vals: &[f64]| {
                let mut k = 0;
                let mut m = SymMatrix::zeros(p);
                for i in 0..p {
                    for j in 0..=i {
                        m.set(i, j, vals[k]);
                        k += 1;
                    }
                }
                m
            };
            (build(&e[..n]), build(&e[n..]))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn cholesky_reconstructs(m in spd_strategy(10)) {
        let l = cholesky(&m).unwrap();
        let rebuilt = l.matmul(&l.transpose());
        let p = m.dim();
        let mut err = 0.0f64;
        for i in 0..p {
            for j in 0..p {
                err = err.max((rebuilt[(i, j)] - m[(i, j)]).abs());
            }
        }
        prop_assert!(err <= 1e-12 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn eigenvalues_agree_with_log_det(m in spd_strategy(8)) {
        let (vals, _) = sym_eigen(&m);
        let sum_logs: f64 = vals.iter().map(|v| v.ln()).sum();
        let ld = log_det(&m).unwrap();
        prop_assert!((ld - sum_logs).abs() <= 1e-8 * ld.abs().max(1.0));
    }

    #[test]
    fn sample_covariance_is_psd(
        p in 2usize..8,
        raw in prop::collection::vec(-3.0..3.0f64, 8 * 30),
        n in 2usize..30,
    ) {
        let data = Matrix::from_fn(n, p, |i, j| raw[i * p + j]);
        let s = sample_covariance(&data);
        let (vals, _) = sym_eigen(&s);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10, "min eigenvalue {min}");
    }

    #[test]
    fn degree_weight_identity((omega0, omega) in sym_pair_strategy(10)) {
        let p = omega.dim();
        let d = weighted_degrees(&omega0);
        let dp = degree_penalty_matrix(&omega0);
        let had = SymMatrix::from_fn(p, |i, j| dp[(i, j)] * omega[(i, j)]);
        let left = 2.0 * l11_norm(&had);
        let mut right = 0.0;
        for i in 0..p {
            for j in 0..p {
                right += (d.d[i] + d.d[j]) * omega[(i, j)].abs();
            }
        }
        prop_assert!((left - right).abs() <= 1e-12 * right.abs().max(1.0));
    }

    #[test]
    fn prox_sq_l1_certifies_optimality(
        v in prop::collection::vec(-4.0..4.0f64, 1..8),
        c in 0.01..3.0f64,
    ) {
        let x = prox_sq_l1(&v, c);
        let s: f64 = x.iter().map(|xi| xi.abs()).sum();
        for k in 0..v.len() {
            if x[k] != 0.0 {
                // Interior stationarity: x_k - v_k + 2cS·sign(x_k) = 0.
                let g = x[k] - v[k] + 2.0 * c * s * x[k].signum();
                prop_assert!(g.abs() <= 1e-8, "coord {k} gradient {g}");
            } else {
                // Subgradient condition at zero: |v_k| ≤ 2cS.
                prop_assert!(v[k].abs() <= 2.0 * c * s + 1e-8, "coord {k}");
            }
        }
    }

    #[test]
    fn proxes_are_nonexpansive(
        len in 1usize..8,
        raw in prop::collection::vec(-4.0..4.0f64, 16),
        c in 0.01..3.0f64,
    ) {
        let v1 = &raw[..len];
        let v2 = &raw[8..8 + len];
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let w = vec![1.0; len];
        let s1 = prox_soft_threshold(v1, c, &w);
        let s2 = prox_soft_threshold(v2, c, &w);
        prop_assert!(dist(&s1, &s2) <= dist(v1, v2) + 1e-12);
        let q1 = prox_sq_l1(v1, c);
        let q2 = prox_sq_l1(v2, c);
        prop_assert!(dist(&q1, &q2) <= dist(v1, v2) + 1e-12);
    }

    #[test]
    fn soft_threshold_zeros_are_exact(
        v in prop::collection::vec(-2.0..2.0f64, 1..8),
        c in 0.01..3.0f64,
    ) {
        let w: Vec<f64> = v.iter().map(|x| x.abs() + 0.1).collect();
        for (k, out) in prox_soft_threshold(&v, c, &w).iter().enumerate() {
            if out.abs() < 1e-12 {
                prop_assert!(*out == 0.0, "coord {k} is {out:?}");
            }
        }
        for (k, out) in prox_sq_l1(&v, c).iter().enumerate() {
            if out.abs() < 1e-12 {
                prop_assert!(*out == 0.0, "coord {k} is {out:?}");
            }
        }
    }

    #[test]
    fn kl_loss_separates_matrices(pair in (2usize..6).prop_flat_map(|p| {
        (prop::collection::vec(-1.0..1.0f64, p * p), prop::collection::vec(-1.0..1.0f64, p * p))
            .prop_map(move |(e1, e2)| (spd_from(&e1, p), spd_from(&e2, p)))
    })) {
        let (a, b) = pair;
        let kl = kl_loss(&a, &b).unwrap();
        prop_assert!(kl >= -1e-12, "kl {kl}");
        prop_assert!(kl_loss(&a, &a).unwrap().abs() <= 1e-10);
        if a.sub(&b).frobenius_norm() >= 1e-2 {
            prop_assert!(kl >= 1e-9, "kl {kl} at distance {}", a.sub(&b).frobenius_norm());
        }
    }

    #[test]
    fn f1_stays_in_unit_interval(
        p in 2usize..8,
        bits in prop::collection::vec(any::<bool>(), 2 * 8 * 7 / 2),
    ) {
        let n_pairs = p * (p - 1) / 2;
        let mut est = GraphModel::new(p);
        let mut truth = GraphModel::new(p);
        let mut k = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                if bits[k] {
                    est.add_edge(i, j);
                }
                if bits[n_pairs + k] {
                    truth.add_edge(i, j);
                }
                k += 1;
            }
        }
        let c = confusion(&est, &truth).unwrap();
        prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn, n_pairs);
        let f1 = f1_score(&c);
        prop_assert!((0.0..=1.0).contains(&f1), "f1 {f1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn solve_reports_an_honest_support(
        entries in prop::collection::vec(-1.0..1.0f64, 25),
        lambda in 0.05..0.5f64,
        flat in any::<bool>(),
    ) {
        let sigma = spd_from(&entries, 5);
        let spec = if flat { PenaltySpec::l11() } else { PenaltySpec::l12_sq() };
        let cfg = SolverConfig::default();
        let est = solve(&sigma, lambda, &spec, &cfg).unwrap();
        prop_assert!(est.converged);
        for i in 0..5 {
            prop_assert!(est.omega[(i, i)] > 0.0);
            prop_assert!(est.support.get(i, i));
        }
        // A false entry certifies an exact zero in the sparse iterate, so the
        // dense iterate can differ from zero there only by the primal gap.
        let gap = 1e-6 * est.omega.frobenius_norm().max(1.0);
        for i in 0..5 {
            for j in 0..i {
                if !est.support.get(i, j) {
                    prop_assert!(est.omega[(i, j)].abs() <= gap);
                }
            }
        }
        // Residuals contract once past burn-in.
        let hist = &est.residual_history;
        let tail = &hist[hist.len() / 2..];
        for w in tail.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-14, "tail rose: {} -> {}", w[0], w[1]);
        }
    }
}
