use crate::error::{Error, Result};
use crate::mat::SymMatrix;

/// Which penalty the estimator applies to the precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    /// Entrywise absolute-value penalty Σ|Ω_ij|.
    L11,
    /// Squared mixed norm Σ_j (Σ_i |Ω_ij|)²; couples entries within a column.
    L12Sq,
    /// Entrywise weighted absolute penalty Σ w_ij |Ω_ij|.
    WeightedL11(SymMatrix),
    /// lambda1·L11 + lambda2·L12Sq under one outer λ.
    Combined { lambda1: f64, lambda2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub penalize_diagonal: bool,
}

impl PenaltySpec {
    pub fn l11() -> Self {
        PenaltySpec {
            kind: PenaltyKind::L11,
            penalize_diagonal: true,
        }
    }

    pub fn l12_sq() -> Self {
        PenaltySpec {
            kind: PenaltyKind::L12Sq,
            penalize_diagonal: true,
        }
    }

    pub fn weighted_l11(weights: SymMatrix) -> Result<Self> {
        if weights.as_slice().iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument(
                "weighted penalty needs non-negative weights".into(),
            ));
        }
        Ok(PenaltySpec {
            kind: PenaltyKind::WeightedL11(weights),
            penalize_diagonal: true,
        })
    }

    pub fn combined(lambda1: f64, lambda2: f64) -> Result<Self> {
        if lambda1 < 0.0 || lambda2 < 0.0 || (lambda1 == 0.0 && lambda2 == 0.0) {
            return Err(Error::InvalidArgument(
                "combined penalty needs lambda1, lambda2 ≥ 0 with at least one positive".into(),
            ));
        }
        Ok(PenaltySpec {
            kind: PenaltyKind::Combined { lambda1, lambda2 },
            penalize_diagonal: true,
        })
    }

    pub fn without_diagonal_penalty(mut self) -> Self {
        self.penalize_diagonal = false;
        self
    }
}

/// Weighted degrees d_j = Σ_k |Ω_jk| of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    pub d: Vec<f64>,
}

pub fn l11_norm(m: &SymMatrix) -> f64 {
    m.as_slice().iter().map(|x| x.abs()).sum()
}

pub fn l12_sq_norm(m: &SymMatrix) -> f64 {
    let p = m.dim();
    (0..p)
        .map(|j| {
            let col: f64 = (0..p).map(|i| m[(i, j)].abs()).sum();
            col * col
        })
        .sum()
}

pub fn weighted_degrees(m: &SymMatrix) -> DegreeVector {
    let p = m.dim();
    DegreeVector {
        d: (0..p)
            .map(|j| (0..p).map(|i| m[(i, j)].abs()).sum())
            .collect(),
    }
}

/// Symmetric weight matrix with (i,j) entry (d_i + d_j)/2 built from the
/// degrees of `omega0`, so that applying it entrywise with a factor 2 equals
/// Σ_ij (d_i + d_j)|Ω_ij|.
pub fn degree_penalty_matrix(omega0: &SymMatrix) -> SymMatrix {
    let d = weighted_degrees(omega0).d;
    SymMatrix::from_fn(omega0.dim(), |i, j| 0.5 * (d[i] + d[j]))
}

/// λ times the penalty named by `spec`, with diagonal entries excluded from
/// every sum when penalize_diagonal is false.
pub fn penalty_value(spec: &PenaltySpec, m: &SymMatrix, lambda: f64) -> f64 {
    let p = m.dim();
    let skip_diag = !spec.penalize_diagonal;
    let l11 = || -> f64 {
        let mut s = 0.0;
        for i in 0..p {
            for j in 0..p {
                if skip_diag && i == j {
                    continue;
                }
                s += m[(i, j)].abs();
            }
        }
        s
    };
    let l12sq = || -> f64 {
        let mut s = 0.0;
        for j in 0..p {
            let mut col = 0.0;
            for i in 0..p {
                if skip_diag && i == j {
                    continue;
                }
                col += m[(i, j)].abs();
            }
            s += col * col;
        }
        s
    };
    let base = match &spec.kind {
        PenaltyKind::L11 => l11(),
        PenaltyKind::L12Sq => l12sq(),
        PenaltyKind::WeightedL11(w) => {
            let mut s = 0.0;
            for i in 0..p {
                for j in 0..p {
                    if skip_diag && i == j {
                        continue;
                    }
                    s += w[(i, j)] * m[(i, j)].abs();
                }
            }
            s
        }
        PenaltyKind::Combined { lambda1, lambda2 } => lambda1 * l11() + lambda2 * l12sq(),
    };
    lambda * base
}

/// Componentwise sign(v_i)·max(|v_i| − t·w_i, 0).
pub fn prox_soft_threshold(v: &[f64], t: f64, weights: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), weights.len());
    v.iter()
        .zip(weights)
        .map(|(&x, &w)| {
            let shrunk = x.abs() - t * w;
            if shrunk > 0.0 {
                x.signum() * shrunk
            } else {
                0.0
            }
        })
        .collect()
}

/// argmin_x c·(Σ|x_i|)² + ½‖x − v‖².
///
/// The minimizer is a soft threshold of v at the level τ solving
/// τ = 2c·Σ_{i∈S}(|v_i| − τ) on the surviving support S: sort |v|
/// descending, form cumulative sums S_k, test τ_k = 2c·S_k/(1 + 2c·k),
/// keep the largest k with |v|_(k) > τ_k. Ties in |v| stay in index order.
pub fn prox_sq_l1(v: &[f64], c: f64) -> Vec<f64> {
    assert!(c >= 0.0, "prox_sq_l1 needs c ≥ 0");
    if c == 0.0 || v.is_empty() {
        return v.to_vec();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().partial_cmp(&v[a].abs()).unwrap().then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        let a = v[idx].abs();
        cum += a;
        let cand = 2.0 * c * cum / (1.0 + 2.0 * c * (k + 1) as f64);
        if a > cand {
            tau = cand;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| {
            let shrunk = x.abs() - tau;
            if shrunk > 0.0 {
                x.signum() * shrunk
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Five-node star: unit diagonal, first row/column 1/√5 off-diagonal.
    fn star5() -> SymMatrix {
        let a = 1.0 / 5.0f64.sqrt();
        SymMatrix::from_fn(5, |i, j| {
            if i == j {
                1.0
            } else if i == 0 || j == 0 {
                a
            } else {
                0.0
            }
        })
    }

    /// Five-node path: unit diagonal, 1/√5 on the first off-diagonal.
    fn path5() -> SymMatrix {
        let a = 1.0 / 5.0f64.sqrt();
        SymMatrix::from_fn(5, |i, j| {
            if i == j {
                1.0
            } else if i.abs_diff(j) == 1 {
                a
            } else {
                0.0
            }
        })
    }

    #[test]
    fn l11_cannot_separate_star_from_path() {
        let expect = 8.0 / 5.0f64.sqrt() + 5.0;
        assert_abs_diff_eq!(l11_norm(&star5()), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(l11_norm(&path5()), expect, epsilon = 1e-12);
        assert_eq!(l11_norm(&SymMatrix::zeros(3)), 0.0);
    }

    #[test]
    fn l12_sq_separates_star_from_path() {
        let a = 1.0 / 5.0f64.sqrt();
        let star = (1.0 + 4.0 * a).powi(2) + 4.0 * (1.0 + a).powi(2);
        let path = 2.0 * (1.0 + a).powi(2) + 3.0 * (1.0 + 2.0 * a).powi(2);
        assert_abs_diff_eq!(l12_sq_norm(&star5()), star, epsilon = 1e-12);
        assert_abs_diff_eq!(l12_sq_norm(&path5()), path, epsilon = 1e-12);
        assert!(l12_sq_norm(&star5()) - l12_sq_norm(&path5()) >= 1.0);
        assert_abs_diff_eq!(l12_sq_norm(&SymMatrix::identity(7)), 7.0, epsilon = 1e-14);
    }

    #[test]
    fn degrees_of_star() {
        let a = 1.0 / 5.0f64.sqrt();
        let d = weighted_degrees(&star5()).d;
        assert_abs_diff_eq!(d[0], 1.0 + 4.0 * a, epsilon = 1e-12);
        for dj in &d[1..] {
            assert_abs_diff_eq!(*dj, 1.0 + a, epsilon = 1e-12);
        }
        assert_eq!(weighted_degrees(&SymMatrix::identity(3)).d, vec![1.0; 3]);
        assert_eq!(weighted_degrees(&SymMatrix::zeros(2)).d, vec![0.0; 2]);
    }

    #[test]
    fn degree_penalty_matrix_halved_pair_sums() {
        let m = degree_penalty_matrix(&SymMatrix::identity(2));
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(m[(i, j)], 1.0, epsilon = 1e-14);
            }
        }
        let a = 1.0 / 5.0f64.sqrt();
        let dm = degree_penalty_matrix(&star5());
        assert_abs_diff_eq!(
            dm[(0, 1)],
            0.5 * ((1.0 + 4.0 * a) + (1.0 + a)),
            epsilon = 1e-12
        );
        assert_eq!(
            degree_penalty_matrix(&SymMatrix::zeros(4)),
            SymMatrix::zeros(4)
        );
    }

    #[test]
    fn penalty_values() {
        // (d_i + d_j) weights on the identity: the two diagonal entries each
        // carry weight 2, so the total is 4, matching 2·Σ_j d_j|I_jj|.
        let w = degree_penalty_matrix(&SymMatrix::identity(2)).scale(2.0);
        let spec = PenaltySpec::weighted_l11(w).unwrap();
        assert_abs_diff_eq!(
            penalty_value(&spec, &SymMatrix::identity(2), 1.0),
            4.0,
            epsilon = 1e-14
        );

        let spec = PenaltySpec::l12_sq();
        assert_abs_diff_eq!(
            penalty_value(&spec, &path5(), 2.0),
            2.0 * l12_sq_norm(&path5()),
            epsilon = 1e-12
        );

        let spec = PenaltySpec::l11().without_diagonal_penalty();
        assert_eq!(penalty_value(&spec, &SymMatrix::identity(3), 5.0), 0.0);
    }

    #[test]
    fn degree_split_identity_on_random_matrices() {
        use rand::Rng;
        let mut gen = crate::rng::RngStream::new(11, 0).generator();
        for _ in 0..50 {
            let p = gen.gen_range(1..=10);
            let omega0 = SymMatrix::from_fn(p, |_, _| gen.gen_range(-1.0..1.0));
            let omega = SymMatrix::from_fn(p, |_, _| gen.gen_range(-1.0..1.0));
            let d = weighted_degrees(&omega0).d;
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for i in 0..p {
                for j in 0..p {
                    lhs += 2.0 * d[j] * omega[(i, j)].abs();
                    rhs += (d[i] + d[j]) * omega[(i, j)].abs();
                }
            }
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(prox_soft_threshold(&[0.5], 1.0, &[1.0]), vec![0.0]);
        assert_eq!(
            prox_soft_threshold(&[3.0, -2.0], 1.0, &[1.0, 1.0]),
            vec![2.0, -1.0]
        );
        assert_eq!(prox_soft_threshold(&[3.0], 1.0, &[0.0]), vec![3.0]);
    }

    #[test]
    fn sq_l1_prox_hand_case() {
        // (3,1) at c=0.5: survivor set is {3} with τ = 1.5; the zero-subgradient
        // condition holds at (1.5, 0) with s₂ = 2/3.
        let x = prox_sq_l1(&[3.0, 1.0], 0.5);
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn sq_l1_prox_no_penalty_and_symmetry() {
        let v = vec![1.0, -2.0, 0.3];
        assert_eq!(prox_sq_l1(&v, 0.0), v);
        let x = prox_sq_l1(&[1.0; 6], 0.7);
        for &xi in &x {
            assert_abs_diff_eq!(xi, x[0], epsilon = 1e-14);
        }
        assert!(x[0] > 0.0, "squared-L1 never fully zeroes a nonzero vector");
    }

    #[test]
    fn sq_l1_prox_signs_preserved() {
        let x = prox_sq_l1(&[-3.0, 2.0, -0.1], 0.2);
        assert!(x[0] < 0.0 && x[1] > 0.0);
    }
}
