use crate::error::{Error, Result};
use crate::mat::{inverse, log_det, sample_covariance, sample_mvn, spd_check, Matrix, SymMatrix};
use crate::metrics::{
    confusion, dominance_fraction, f1_score, frobenius_loss, kl_loss, support_graph, GraphModel,
};
use crate::penalty::{weighted_degrees, PenaltyKind, PenaltySpec};
use crate::rng::RngStream;
use crate::solver::{solve, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A ground-truth graphical model: the graph, its precision matrix, and a
/// display name. Construction verifies positive definiteness and that the
/// off-diagonal support matches the graph exactly.
#[derive(Debug, Clone)]
pub struct TrueModel {
    pub id: String,
    pub p: usize,
    pub graph: GraphModel,
    pub omega0: SymMatrix,
    pub description: String,
}

impl TrueModel {
    pub fn new(
        id: impl Into<String>,
        graph: GraphModel,
        omega0: SymMatrix,
        description: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        let p = graph.p;
        if omega0.dim() != p {
            return Err(Error::DimensionMismatch(format!(
                "model {id}: graph on {p} nodes but matrix is {}x{}",
                omega0.dim(),
                omega0.dim()
            )));
        }
        let check = spd_check(&omega0);
        if !check.is_pd || check.min_eigenvalue <= 1e-6 {
            return Err(Error::NotPositiveDefinite(format!(
                "model {id}: min eigenvalue {:.3e}",
                check.min_eigenvalue
            )));
        }
        for i in 0..p {
            for j in 0..i {
                let linked = omega0[(i, j)] != 0.0;
                if linked != graph.has_edge(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "model {id}: entry ({i},{j}) disagrees with the graph"
                    )));
                }
            }
        }
        Ok(TrueModel {
            id,
            p,
            graph,
            omega0,
            description: description.into(),
        })
    }

    /// Precision matrix under the registry convention: diagonal 1, linked
    /// pairs 0.2, everything else 0.
    fn from_edges(id: &str, p: usize, edges: &[(usize, usize)], description: &str) -> Result<Self> {
        let mut graph = GraphModel::new(p);
        for &(i, j) in edges {
            graph.add_edge(i, j);
        }
        let omega0 = SymMatrix::from_fn(p, |i, j| {
            if i == j {
                1.0
            } else if graph.has_edge(i, j) {
                0.2
            } else {
                0.0
            }
        });
        TrueModel::new(id, graph, omega0, description)
    }

    fn from_matrix(id: &str, omega0: SymMatrix, description: &str) -> Result<Self> {
        let p = omega0.dim();
        let mut graph = GraphModel::new(p);
        for i in 0..p {
            for j in 0..i {
                if omega0[(i, j)] != 0.0 {
                    graph.add_edge(i, j);
                }
            }
        }
        TrueModel::new(id, graph, omega0, description)
    }
}

pub fn model_ids() -> Vec<&'static str> {
    vec![
        "STAR5",
        "PATH5",
        "AR1_4_HALF",
        "CYCLE5",
        "P5_A",
        "P5_B",
        "P5_C",
        "P5_D",
        "P5_E",
        "P10_A",
        "P10_B",
        "P10_C",
        "P10_D",
        "P10_E",
        "CORE_PERIPHERY10",
    ]
}

/// Looks up a model by identifier (case-insensitive). STAR5, PATH5, and
/// AR1_4_HALF carry their exact printed matrices; the rest follow the
/// 0.2-per-link convention.
pub fn model_registry(id: &str) -> Result<TrueModel> {
    let key = id.trim().to_ascii_uppercase();
    let r5 = 1.0 / 5f64.sqrt();
    match key.as_str() {
        "STAR5" => {
            let omega0 = SymMatrix::from_fn(5, |i, j| {
                if i == j {
                    1.0
                } else if i == 0 || j == 0 {
                    r5
                } else {
                    0.0
                }
            });
            TrueModel::from_matrix(
                "STAR5",
                omega0,
                "star centered at node 1, couplings 1/sqrt(5)",
            )
        }
        "PATH5" => {
            let omega0 = SymMatrix::from_fn(5, |i, j| {
                if i == j {
                    1.0
                } else if i.abs_diff(j) == 1 {
                    r5
                } else {
                    0.0
                }
            });
            TrueModel::from_matrix(
                "PATH5",
                omega0,
                "first-order autoregression path, couplings 1/sqrt(5)",
            )
        }
        "AR1_4_HALF" => {
            let omega0 = SymMatrix::from_fn(4, |i, j| {
                if i == j {
                    1.0
                } else if i.abs_diff(j) == 1 {
                    0.5
                } else {
                    0.0
                }
            });
            TrueModel::from_matrix(
                "AR1_4_HALF",
                omega0,
                "tridiagonal with 0.5 couplings on 4 nodes",
            )
        }
        "CYCLE5" => TrueModel::from_edges(
            "CYCLE5",
            5,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
            "single cycle through all 5 nodes",
        ),
        "P5_A" => TrueModel::from_edges(
            "P5_A",
            5,
            &[(0, 1), (1, 3), (3, 4), (4, 0)],
            "4-cycle on nodes {1,2,4,5} with node 3 isolated",
        ),
        "P5_B" => TrueModel::from_edges(
            "P5_B",
            5,
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
            "path through all 5 nodes",
        ),
        "P5_C" => TrueModel::from_edges(
            "P5_C",
            5,
            &[(0, 1), (0, 2), (0, 3), (3, 4)],
            "hub at node 1 with a pendant edge 4-5",
        ),
        "P5_D" => TrueModel::from_edges(
            "P5_D",
            5,
            &[(0, 1), (0, 2), (1, 2), (3, 4)],
            "triangle {1,2,3} plus the disjoint edge (4,5)",
        ),
        "P5_E" => TrueModel::from_edges(
            "P5_E",
            5,
            &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)],
            "complete bipartite {1,2} x {3,4,5}",
        ),
        "P10_A" => TrueModel::from_edges(
            "P10_A",
            10,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 0),
                (5, 6),
                (6, 7),
                (7, 8),
                (8, 9),
                (9, 5),
            ],
            "two disjoint 5-cycles",
        ),
        "P10_B" => TrueModel::from_edges(
            "P10_B",
            10,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 7),
                (7, 8),
                (8, 9),
            ],
            "path through all 10 nodes",
        ),
        "P10_C" => TrueModel::from_edges(
            "P10_C",
            10,
            &[
                (0, 1),
                (0, 2),
                (1, 3),
                (1, 4),
                (2, 5),
                (2, 6),
                (3, 7),
                (3, 8),
                (4, 9),
            ],
            "rooted tree of depth 3",
        ),
        "P10_D" => TrueModel::from_edges(
            "P10_D",
            10,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (5, 6),
                (6, 7),
                (7, 8),
                (8, 9),
                (0, 5),
                (1, 6),
                (2, 7),
                (3, 8),
                (4, 9),
            ],
            "2x5 ladder",
        ),
        "P10_E" => TrueModel::from_edges(
            "P10_E",
            10,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (0, 5),
                (0, 6),
                (0, 7),
                (0, 8),
                (0, 9),
            ],
            "star centered at node 1",
        ),
        "CORE_PERIPHERY10" => {
            let mut edges = vec![(0, 1), (0, 2), (1, 2)];
            for peri in 3..10 {
                for core in 0..3 {
                    edges.push((core, peri));
                }
            }
            TrueModel::from_edges(
                "CORE_PERIPHERY10",
                10,
                &edges,
                "mutually linked core {1,2,3}; nodes 4..10 linked to every core node",
            )
        }
        _ => Err(Error::UnknownModel(id.trim().to_string())),
    }
}

/// T i.i.d. Gaussian rows with covariance Ω₀⁻¹.
pub fn generate_dataset(model: &TrueModel, t: usize, rng: &RngStream) -> Result<Matrix> {
    if t < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observations, got {t}"
        )));
    }
    let sigma0 = inverse(&model.omega0)?;
    sample_mvn(&sigma0, t, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda_grid: Vec<f64>,
    pub cv_scores: Vec<f64>,
    pub best_lambda: f64,
    /// Grid values dropped because the solver failed to converge on a fold.
    pub excluded: Vec<f64>,
}

fn validate_grid(lambda_grid: &[f64]) -> Result<()> {
    if lambda_grid.is_empty() {
        return Err(Error::EmptyCvGrid);
    }
    for w in lambda_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(
                "lambda grid must be strictly increasing".into(),
            ));
        }
    }
    if lambda_grid[0] < 0.0 {
        return Err(Error::InvalidArgument("lambda must be ≥ 0".into()));
    }
    Ok(())
}

pub fn default_lambda_grid() -> Vec<f64> {
    log_spaced_grid(0.005, 1.0, 40)
}

pub fn log_spaced_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (llo + (lhi - llo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn rows_subset(data: &Matrix, range: std::ops::Range<usize>) -> Matrix {
    Matrix::from_fn(range.len(), data.cols(), |i, j| data[(range.start + i, j)])
}

/// Two-fold cross-validation on contiguous halves. Each fold fits on one
/// half and scores −log det Ω̂ + tr(Ω̂ Σ_val) against the other; the two
/// scores are averaged and the smallest λ attaining the minimum wins. The
/// validation log-det constant is dropped so short singular folds still
/// score: it does not depend on λ.
pub fn cross_validate(
    data: &Matrix,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<CvResult> {
    cross_validate_opts(data, spec, lambda_grid, cfg, None)
}

/// As `cross_validate`, with an optional seeded row shuffle before the
/// contiguous split.
pub fn cross_validate_opts(
    data: &Matrix,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
    shuffle: Option<&RngStream>,
) -> Result<CvResult> {
    let t = data.rows();
    if t < 4 {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs at least 4 rows, got {t}"
        )));
    }
    validate_grid(lambda_grid)?;

    let working;
    let data = match shuffle {
        None => data,
        Some(stream) => {
            use rand::seq::SliceRandom;
            let mut order: Vec<usize> = (0..t).collect();
            order.shuffle(&mut stream.generator());
            working = Matrix::from_fn(t, data.cols(), |i, j| data[(order[i], j)]);
            &working
        }
    };

    let half = t / 2;
    let first = rows_subset(data, 0..half);
    let second = rows_subset(data, half..t);
    let folds = [
        (sample_covariance(&first), sample_covariance(&second)),
        (sample_covariance(&second), sample_covariance(&first)),
    ];

    let mut cv_scores = Vec::with_capacity(lambda_grid.len());
    let mut excluded = Vec::new();
    for &lambda in lambda_grid {
        let mut total = 0.0;
        let mut ok = true;
        for (train, val) in &folds {
            match solve(train, lambda, spec, cfg) {
                Ok(est) if est.converged => {
                    total += -log_det(&est.omega)? + est.omega.trace_product(val);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            cv_scores.push(total / 2.0);
        } else {
            cv_scores.push(f64::INFINITY);
            excluded.push(lambda);
        }
    }

    let best_idx = select_best(&cv_scores)?;
    Ok(CvResult {
        lambda_grid: lambda_grid.to_vec(),
        cv_scores,
        best_lambda: lambda_grid[best_idx],
        excluded,
    })
}

/// Index of the smallest finite score; earlier (smaller-λ) entries win ties.
fn select_best(cv_scores: &[f64]) -> Result<usize> {
    let mut best = None;
    for (k, &score) in cv_scores.iter().enumerate() {
        if score.is_finite() {
            let better = match best {
                None => true,
                Some((_, s)) => score < s,
            };
            if better {
                best = Some((k, score));
            }
        }
    }
    best.map(|(k, _)| k).ok_or(Error::EmptyCvGrid)
}

/// Sum in a fixed binary-tree order so results do not depend on how work was
/// scheduled across threads.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error (sample standard deviation over √n); a single
/// observation gets standard error 0.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

pub fn estimator_kind(spec: &PenaltySpec) -> &'static str {
    match &spec.kind {
        PenaltyKind::L11 => "glasso",
        PenaltyKind::L12Sq => "sglasso",
        PenaltyKind::WeightedL11(_) => "weighted_glasso",
        PenaltyKind::Combined { .. } => "combined",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub model_id: String,
    pub estimator_kind: String,
    pub t: usize,
    pub reps: usize,
    pub best_lambda_mean: f64,
    pub best_lambda_se: f64,
    pub kl_mean: f64,
    pub kl_se: f64,
    pub frobenius_mean: f64,
    pub frobenius_se: f64,
    pub f1_mean: f64,
    pub f1_se: f64,
    pub nonconverged_count: usize,
}

impl McSummary {
    pub fn csv_header() -> &'static str {
        "model_id,estimator,T,reps,nonconverged,best_lambda_mean,best_lambda_se,kl_mean,kl_se,frobenius_mean,frobenius_se,f1_mean,f1_se"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model_id,
            self.estimator_kind,
            self.t,
            self.reps,
            self.nonconverged_count,
            self.best_lambda_mean,
            self.best_lambda_se,
            self.kl_mean,
            self.kl_se,
            self.frobenius_mean,
            self.frobenius_se,
            self.f1_mean,
            self.f1_se
        )
    }
}

struct RepOutcome {
    best_lambda: f64,
    kl: f64,
    frobenius: f64,
    f1: f64,
}

fn run_replication(
    model: &TrueModel,
    t: usize,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
    stream: &RngStream,
) -> Result<RepOutcome> {
    let data = generate_dataset(model, t, stream)?;
    let cv = cross_validate(&data, spec, lambda_grid, cfg)?;
    let sigma_hat = sample_covariance(&data);
    let est = solve(&sigma_hat, cv.best_lambda, spec, cfg)?;
    if !est.converged {
        return Err(Error::NonConvergence {
            iterations: est.iterations,
        });
    }
    let graph = support_graph(&est);
    let c = confusion(&graph, &model.graph)?;
    Ok(RepOutcome {
        best_lambda: cv.best_lambda,
        kl: kl_loss(&est.omega, &model.omega0)?,
        frobenius: frobenius_loss(&est.omega, &model.omega0),
        f1: f1_score(&c),
    })
}

/// Replicated end-to-end experiment: draw a dataset per replication (stream
/// r of the master seed), tune λ by cross-validation, refit on the full
/// sample, and score against the truth. Failed replications are counted and
/// left out of the aggregates.
pub fn monte_carlo(
    model: &TrueModel,
    t: usize,
    reps: usize,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    master_seed: u64,
) -> Result<McSummary> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be ≥ 1".into()));
    }
    validate_grid(lambda_grid)?;
    let cfg = SolverConfig::default();
    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            run_replication(
                model,
                t,
                spec,
                lambda_grid,
                &cfg,
                &RngStream::new(master_seed, r as u64),
            )
        })
        .collect();

    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let nonconverged_count = reps - ok.len();
    let collect = |f: fn(&RepOutcome) -> f64| -> Vec<f64> { ok.iter().map(|&o| f(o)).collect() };
    let (best_lambda_mean, best_lambda_se) = mean_se(&collect(|o| o.best_lambda));
    let (kl_mean, kl_se) = mean_se(&collect(|o| o.kl));
    let (frobenius_mean, frobenius_se) = mean_se(&collect(|o| o.frobenius));
    let (f1_mean, f1_se) = mean_se(&collect(|o| o.f1));
    Ok(McSummary {
        model_id: model.id.clone(),
        estimator_kind: estimator_kind(spec).to_string(),
        t,
        reps,
        best_lambda_mean,
        best_lambda_se,
        kl_mean,
        kl_se,
        frobenius_mean,
        frobenius_se,
        f1_mean,
        f1_se,
        nonconverged_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model_id: String,
    pub estimator_a: String,
    pub estimator_b: String,
    pub t: usize,
    pub reps: usize,
    pub min_kl_mean_a: f64,
    pub min_frobenius_mean_a: f64,
    pub min_kl_mean_b: f64,
    pub min_frobenius_mean_b: f64,
    /// Fraction of paired replications where estimator A's minimum KL beat
    /// estimator B's.
    pub kl_dominance_a: f64,
    pub frobenius_dominance_a: f64,
    pub nonconverged_count: usize,
}

impl SweepSummary {
    pub fn csv_header() -> &'static str {
        "model_id,estimator_a,estimator_b,T,reps,nonconverged,min_kl_mean_a,min_frobenius_mean_a,min_kl_mean_b,min_frobenius_mean_b,kl_dominance_a,frobenius_dominance_a"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model_id,
            self.estimator_a,
            self.estimator_b,
            self.t,
            self.reps,
            self.nonconverged_count,
            self.min_kl_mean_a,
            self.min_frobenius_mean_a,
            self.min_kl_mean_b,
            self.min_frobenius_mean_b,
            self.kl_dominance_a,
            self.frobenius_dominance_a
        )
    }
}

struct SweepOutcome {
    min_kl_a: f64,
    min_frob_a: f64,
    min_kl_b: f64,
    min_frob_b: f64,
}

fn sweep_min_losses(
    sigma_hat: &SymMatrix,
    omega0: &SymMatrix,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let mut best_kl = f64::INFINITY;
    let mut best_frob = f64::INFINITY;
    for &lambda in lambda_grid {
        let est = match solve(sigma_hat, lambda, spec, cfg) {
            Ok(est) if est.converged => est,
            _ => continue,
        };
        best_kl = best_kl.min(kl_loss(&est.omega, omega0)?);
        best_frob = best_frob.min(frobenius_loss(&est.omega, omega0));
    }
    if best_kl.is_finite() {
        Ok((best_kl, best_frob))
    } else {
        Err(Error::NonConvergence { iterations: 0 })
    }
}

/// Oracle λ-sweep comparison: per replication both estimators see the same
/// dataset, each minimizes its loss over the whole grid against the truth
/// (no tuning step), and A-beats-B fractions are taken over the pairs.
pub fn lambda_sweep_min_losses(
    model: &TrueModel,
    t: usize,
    reps: usize,
    spec_a: &PenaltySpec,
    spec_b: &PenaltySpec,
    lambda_grid: &[f64],
    master_seed: u64,
) -> Result<SweepSummary> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be ≥ 1".into()));
    }
    validate_grid(lambda_grid)?;
    let cfg = SolverConfig::default();
    let outcomes: Vec<Result<SweepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let stream = RngStream::new(master_seed, r as u64);
            let data = generate_dataset(model, t, &stream)?;
            let sigma_hat = sample_covariance(&data);
            let (min_kl_a, min_frob_a) =
                sweep_min_losses(&sigma_hat, &model.omega0, spec_a, lambda_grid, &cfg)?;
            let (min_kl_b, min_frob_b) =
                sweep_min_losses(&sigma_hat, &model.omega0, spec_b, lambda_grid, &cfg)?;
            Ok(SweepOutcome {
                min_kl_a,
                min_frob_a,
                min_kl_b,
                min_frob_b,
            })
        })
        .collect();

    let ok: Vec<&SweepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let nonconverged_count = reps - ok.len();
    if ok.is_empty() {
        return Err(Error::NonConvergence { iterations: 0 });
    }
    let kl_a: Vec<f64> = ok.iter().map(|o| o.min_kl_a).collect();
    let kl_b: Vec<f64> = ok.iter().map(|o| o.min_kl_b).collect();
    let frob_a: Vec<f64> = ok.iter().map(|o| o.min_frob_a).collect();
    let frob_b: Vec<f64> = ok.iter().map(|o| o.min_frob_b).collect();
    Ok(SweepSummary {
        model_id: model.id.clone(),
        estimator_a: estimator_kind(spec_a).to_string(),
        estimator_b: estimator_kind(spec_b).to_string(),
        t,
        reps,
        min_kl_mean_a: mean_se(&kl_a).0,
        min_frobenius_mean_a: mean_se(&frob_a).0,
        min_kl_mean_b: mean_se(&kl_b).0,
        min_frobenius_mean_b: mean_se(&frob_b).0,
        kl_dominance_a: dominance_fraction(&kl_a, &kl_b)?,
        frobenius_dominance_a: dominance_fraction(&frob_a, &frob_b)?,
        nonconverged_count,
    })
}

/// The unordered non-edge pair with the largest weighted-degree sum
/// d_i + d_j; ties resolve to the first hit scanning the adjacency matrix
/// column by column.
pub fn recovery_target_pair(model: &TrueModel) -> Result<(usize, usize)> {
    if model.graph.is_complete() {
        return Err(Error::InvalidArgument(format!(
            "model {} has a complete graph: no zero to recover",
            model.id
        )));
    }
    let d = weighted_degrees(&model.omega0);
    let p = model.p;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..p {
        for i in 0..p {
            if i != j && !model.graph.has_edge(i, j) {
                best_score = best_score.max(d.d[i] + d.d[j]);
            }
        }
    }
    for j in 0..p {
        for i in 0..p {
            if i != j && !model.graph.has_edge(i, j) && d.d[i] + d.d[j] == best_score {
                return Ok((i.min(j), i.max(j)));
            }
        }
    }
    unreachable!("a non-edge exists, so a maximum exists");
}

/// Per grid point, the fraction of replications whose fitted support puts an
/// exact zero on the target pair. Fits go straight to the full dataset at
/// each λ; no tuning is involved.
pub fn recovery_probability(
    model: &TrueModel,
    t: usize,
    lambda_grid: &[f64],
    reps: usize,
    spec: &PenaltySpec,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be ≥ 1".into()));
    }
    validate_grid(lambda_grid)?;
    let (ti, tj) = recovery_target_pair(model)?;
    let cfg = SolverConfig::default();
    // Per replication: one bool per grid point, None where the fit failed.
    let per_rep: Vec<Result<Vec<Option<bool>>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let stream = RngStream::new(master_seed, r as u64);
            let data = generate_dataset(model, t, &stream)?;
            let sigma_hat = sample_covariance(&data);
            Ok(lambda_grid
                .iter()
                .map(|&lambda| match solve(&sigma_hat, lambda, spec, &cfg) {
                    Ok(est) if est.converged => Some(!est.support.get(ti, tj)),
                    _ => None,
                })
                .collect())
        })
        .collect();

    let mut probs = Vec::with_capacity(lambda_grid.len());
    for k in 0..lambda_grid.len() {
        let mut zeros = 0usize;
        let mut total = 0usize;
        for row in per_rep.iter().flatten() {
            if let Some(excluded) = row[k] {
                total += 1;
                if excluded {
                    zeros += 1;
                }
            }
        }
        probs.push(if total == 0 {
            f64::NAN
        } else {
            zeros as f64 / total as f64
        });
    }
    Ok(probs)
}

/// CSV with one row per grid point: lambda, prob_sglasso, prob_glasso.
pub fn recovery_csv(lambda_grid: &[f64], prob_sglasso: &[f64], prob_glasso: &[f64]) -> String {
    assert_eq!(lambda_grid.len(), prob_sglasso.len());
    assert_eq!(lambda_grid.len(), prob_glasso.len());
    let mut out = String::from("lambda,prob_sglasso,prob_glasso\n");
    for k in 0..lambda_grid.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            lambda_grid[k], prob_sglasso[k], prob_glasso[k]
        ));
    }
    out
}
