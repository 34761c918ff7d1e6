use crate::error::{Error, Result};
use crate::mat::{inverse, log_det, SymBoolMatrix, SymMatrix};
use crate::solver::PrecisionEstimate;
use serde::{Deserialize, Serialize};

/// Undirected graph on p nodes; the diagonal of `adj` is always false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphModel {
    pub p: usize,
    pub adj: SymBoolMatrix,
}

impl GraphModel {
    pub fn new(p: usize) -> Self {
        GraphModel {
            p,
            adj: SymBoolMatrix::new(p),
        }
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "no self-loops");
        self.adj.set(i, j, true);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj.get(i, j)
    }

    pub fn edge_count(&self) -> usize {
        let mut n = 0;
        for i in 0..self.p {
            for j in 0..i {
                if self.adj.get(i, j) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Sorted (i, j) pairs with i < j.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.p {
            for j in (i + 1)..self.p {
                if self.adj.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.p).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count() == self.p * (self.p - 1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kl: f64,
    pub frobenius: f64,
    pub confusion: ConfusionCounts,
    pub f1: f64,
    pub lambda_used: f64,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "lambda,kl,frobenius,tp,fp,fn,tn,f1"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.lambda_used,
            self.kl,
            self.frobenius,
            self.confusion.tp,
            self.confusion.fp,
            self.confusion.fn_,
            self.confusion.tn,
            self.f1
        )
    }
}

/// log det Ω₀ − log det Ω̂ + tr(Ω̂ Ω₀⁻¹) − p. Zero iff the arguments match.
pub fn kl_loss(omega_hat: &SymMatrix, omega0: &SymMatrix) -> Result<f64> {
    if omega_hat.dim() != omega0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "kl_loss got {}x{} and {}x{}",
            omega_hat.dim(),
            omega_hat.dim(),
            omega0.dim(),
            omega0.dim()
        )));
    }
    let p = omega0.dim() as f64;
    let inv0 = inverse(omega0)?;
    Ok(log_det(omega0)? - log_det(omega_hat)? + omega_hat.trace_product(&inv0) - p)
}

pub fn frobenius_loss(omega_hat: &SymMatrix, omega0: &SymMatrix) -> f64 {
    omega_hat.sub(omega0).frobenius_norm()
}

/// Reads the off-diagonal support pattern as a graph.
pub fn support_graph(est: &PrecisionEstimate) -> GraphModel {
    let p = est.omega.dim();
    let mut g = GraphModel::new(p);
    for i in 0..p {
        for j in 0..i {
            if est.support.get(i, j) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Counts over unordered off-diagonal pairs, "positive" meaning edge present.
pub fn confusion(est_graph: &GraphModel, true_graph: &GraphModel) -> Result<ConfusionCounts> {
    if est_graph.p != true_graph.p {
        return Err(Error::DimensionMismatch(format!(
            "confusion got graphs on {} and {} nodes",
            est_graph.p, true_graph.p
        )));
    }
    let mut c = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for i in 0..est_graph.p {
        for j in 0..i {
            match (est_graph.adj.get(i, j), true_graph.adj.get(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// 2TP/(2TP + FP + FN); exact agreement on an empty graph scores 1.
pub fn f1_score(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    }
}

/// Fraction of positions where `losses_a` is strictly smaller; ties count
/// as not-better.
pub fn dominance_fraction(losses_a: &[f64], losses_b: &[f64]) -> Result<f64> {
    if losses_a.len() != losses_b.len() {
        return Err(Error::DimensionMismatch(format!(
            "dominance_fraction got lengths {} and {}",
            losses_a.len(),
            losses_b.len()
        )));
    }
    if losses_a.is_empty() {
        return Err(Error::InvalidArgument(
            "dominance_fraction needs at least one pair".into(),
        ));
    }
    let wins = losses_a.iter().zip(losses_b).filter(|(a, b)| a < b).count();
    Ok(wins as f64 / losses_a.len() as f64)
}
