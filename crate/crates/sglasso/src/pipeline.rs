use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{cholesky, demean_columns, sample_covariance, Matrix};
use crate::metrics::{support_graph, GraphModel};
use crate::penalty::PenaltySpec;
use crate::rng::RngStream;
use crate::sim::cross_validate_opts;
use crate::solver::{solve, PrecisionEstimate, SolverConfig};

/// The bundled firm-investment panel: 10 firms, 20 years (1935-1954), in
/// the classic public edition with General Motors, U.S. Steel, and General
/// Electric as firms 1-3.
pub const GRUNFELD_CSV: &str = include_str!("../data/grunfeld.csv");

const LONG_HEADER: &str = "firm_id,firm_name,year,invest,value,capital";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelFormat {
    LongCsv,
    WideCsv,
}

/// A complete balanced panel: per-firm yearly investment, market value, and
/// capital stock, each stored as a T×p matrix with firms in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    pub firms: Vec<String>,
    pub years: Vec<i64>,
    pub invest: Matrix,
    pub value: Matrix,
    pub capital: Matrix,
}

impl PanelData {
    pub fn new(
        firms: Vec<String>,
        years: Vec<i64>,
        invest: Matrix,
        value: Matrix,
        capital: Matrix,
    ) -> Result<Self> {
        let p = firms.len();
        let t = years.len();
        if p < 2 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 firms, got {p}"
            )));
        }
        if t < 4 {
            return Err(Error::InvalidPanel(format!(
                "need at least 4 years, got {t}"
            )));
        }
        if !years.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidPanel(
                "years must be strictly increasing".into(),
            ));
        }
        for (name, m) in [
            ("invest", &invest),
            ("value", &value),
            ("capital", &capital),
        ] {
            if m.rows() != t || m.cols() != p {
                return Err(Error::InvalidPanel(format!(
                    "{name} block is {}x{}, expected {t}x{p}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for f in &firms {
            if !seen.insert(f) {
                return Err(Error::InvalidPanel(format!("duplicate firm name {f:?}")));
            }
        }
        Ok(PanelData {
            firms,
            years,
            invest,
            value,
            capital,
        })
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }
}

fn parse_err(row: usize, message: String) -> Error {
    Error::Parse {
        location: format!("row {}", row + 1),
        message,
    }
}

fn parse_num(cell: &str, row: usize, col: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::Parse {
        location: format!("row {}, column {}", row + 1, col + 1),
        message: format!("expected a number, found {cell:?}"),
    })
}

fn parse_long(text: &str) -> Result<PanelData> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    if header.trim() != LONG_HEADER {
        return Err(parse_err(
            0,
            format!("expected header {LONG_HEADER:?}, found {:?}", header.trim()),
        ));
    }

    let mut firms: Vec<String> = Vec::new();
    let mut firm_index: HashMap<String, usize> = HashMap::new();
    // Per firm, the rows in file order: (year, invest, value, capital).
    let mut rows: Vec<Vec<(i64, f64, f64, f64)>> = Vec::new();

    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(parse_err(
                lineno,
                format!("expected 6 columns, found {}", cells.len()),
            ));
        }
        let name = cells[1].trim().to_string();
        let year: i64 = cells[2].trim().parse().map_err(|_| Error::Parse {
            location: format!("row {}, column 3", lineno + 1),
            message: format!("expected a year, found {:?}", cells[2]),
        })?;
        let iv = parse_num(cells[3], lineno, 3)?;
        let fv = parse_num(cells[4], lineno, 4)?;
        let cv = parse_num(cells[5], lineno, 5)?;
        let idx = *firm_index.entry(name.clone()).or_insert_with(|| {
            firms.push(name);
            rows.push(Vec::new());
            firms.len() - 1
        });
        if rows[idx].iter().any(|r| r.0 == year) {
            return Err(Error::InvalidPanel(format!(
                "duplicate cell for firm {:?}, year {year}",
                firms[idx]
            )));
        }
        rows[idx].push((year, iv, fv, cv));
    }
    if firms.is_empty() {
        return Err(Error::InvalidPanel("no data rows".into()));
    }

    // The first firm's years define the grid; every firm must match it.
    let years: Vec<i64> = rows[0].iter().map(|r| r.0).collect();
    for (f, firm_rows) in rows.iter().enumerate() {
        for &y in &years {
            if !firm_rows.iter().any(|r| r.0 == y) {
                return Err(Error::InvalidPanel(format!(
                    "firm {:?} is missing year {y}",
                    firms[f]
                )));
            }
        }
        if firm_rows.len() != years.len() {
            let extra = firm_rows
                .iter()
                .find(|r| !years.contains(&r.0))
                .map(|r| r.0)
                .unwrap_or_default();
            return Err(Error::InvalidPanel(format!(
                "firm {:?} has year {extra} not present for firm {:?}",
                firms[f], firms[0]
            )));
        }
    }

    let t = years.len();
    let p = firms.len();
    let year_pos: HashMap<i64, usize> = years.iter().enumerate().map(|(i, &y)| (y, i)).collect();
    let mut invest = Matrix::zeros(t, p);
    let mut value = Matrix::zeros(t, p);
    let mut capital = Matrix::zeros(t, p);
    for (f, firm_rows) in rows.iter().enumerate() {
        for &(y, iv, fv, cv) in firm_rows {
            let r = year_pos[&y];
            invest[(r, f)] = iv;
            value[(r, f)] = fv;
            capital[(r, f)] = cv;
        }
    }
    PanelData::new(firms, years, invest, value, capital)
}

fn parse_wide(text: &str) -> Result<PanelData> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    let cells: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    if cells.first() != Some(&"year") {
        return Err(parse_err(0, "first column must be `year`".into()));
    }
    let mut blocks: [Vec<String>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for cell in &cells[1..] {
        let (prefix, firm) = cell
            .split_once(':')
            .ok_or_else(|| parse_err(0, format!("expected `block:firm`, found {cell:?}")))?;
        let slot = match prefix {
            "invest" => 0,
            "value" => 1,
            "capital" => 2,
            other => {
                return Err(parse_err(0, format!("unknown block {other:?}")));
            }
        };
        blocks[slot].push(firm.to_string());
    }
    let firms = blocks[0].clone();
    if blocks[1] != firms || blocks[2] != firms {
        return Err(Error::InvalidPanel(
            "invest/value/capital blocks must list the same firms in the same order".into(),
        ));
    }
    let p = firms.len();

    let mut years = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 1 + 3 * p {
            return Err(parse_err(
                lineno,
                format!("expected {} columns, found {}", 1 + 3 * p, cells.len()),
            ));
        }
        let year: i64 = cells[0].trim().parse().map_err(|_| Error::Parse {
            location: format!("row {}, column 1", lineno + 1),
            message: format!("expected a year, found {:?}", cells[0]),
        })?;
        years.push(year);
        let mut row = Vec::with_capacity(3 * p);
        for (k, cell) in cells[1..].iter().enumerate() {
            row.push(parse_num(cell, lineno, k + 1)?);
        }
        data.push(row);
    }
    let t = years.len();
    let block = |offset: usize| Matrix::from_fn(t, p, |r, f| data[r][offset * p + f]);
    PanelData::new(firms, years, block(0), block(1), block(2))
}

pub fn parse_panel(text: &str, format: PanelFormat) -> Result<PanelData> {
    match format {
        PanelFormat::LongCsv => parse_long(text),
        PanelFormat::WideCsv => parse_wide(text),
    }
}

pub fn load_panel(path: &Path, format: PanelFormat) -> Result<PanelData> {
    let text = std::fs::read_to_string(path)?;
    parse_panel(&text, format)
}

pub fn panel_to_long_csv(panel: &PanelData) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for (f, name) in panel.firms.iter().enumerate() {
        for (r, &year) in panel.years.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                f + 1,
                name,
                year,
                panel.invest[(r, f)],
                panel.value[(r, f)],
                panel.capital[(r, f)]
            ));
        }
    }
    out
}

pub fn panel_to_wide_csv(panel: &PanelData) -> String {
    let mut header = String::from("year");
    for block in ["invest", "value", "capital"] {
        for name in &panel.firms {
            header.push_str(&format!(",{block}:{name}"));
        }
    }
    let mut out = header;
    out.push('\n');
    for (r, &year) in panel.years.iter().enumerate() {
        out.push_str(&year.to_string());
        for block in [&panel.invest, &panel.value, &panel.capital] {
            for f in 0..panel.n_firms() {
                out.push_str(&format!(",{}", block[(r, f)]));
            }
        }
        out.push('\n');
    }
    out
}

/// Per-firm OLS of investment on (1, value, capital): coefficient rows and
/// the T×p residual matrix.
#[derive(Debug, Clone)]
pub struct FirstStageResult {
    pub betas: Matrix,
    pub residuals: Matrix,
}

/// Solves the 3×3 normal equations by Cholesky substitution.
fn solve_normal(l: &Matrix, rhs: [f64; 3]) -> [f64; 3] {
    let n = 3;
    let mut y = [0.0; 3];
    for i in 0..n {
        let mut s = rhs[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = [0.0; 3];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= l[(j, i)] * x[j];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

pub fn first_stage_ols(panel: &PanelData) -> Result<FirstStageResult> {
    let t = panel.n_years();
    let p = panel.n_firms();
    let mut betas = Matrix::zeros(p, 3);
    let mut residuals = Matrix::zeros(t, p);
    for f in 0..p {
        let design: Vec<[f64; 3]> = (0..t)
            .map(|r| [1.0, panel.value[(r, f)], panel.capital[(r, f)]])
            .collect();
        let xtx = crate::mat::SymMatrix::from_fn(3, |a, b| {
            design.iter().map(|row| row[a] * row[b]).sum()
        });
        let mut xty = [0.0; 3];
        for (r, row) in design.iter().enumerate() {
            for (a, x) in xty.iter_mut().enumerate() {
                *x += row[a] * panel.invest[(r, f)];
            }
        }
        let l = cholesky(&xtx).map_err(|_| Error::RankDeficient {
            firm: panel.firms[f].clone(),
        })?;
        // A numerically positive but rounding-level pivot is still rank
        // deficiency; judge each pivot against its own column scale.
        for k in 0..3 {
            if l[(k, k)] * l[(k, k)] <= 1e-12 * xtx[(k, k)] {
                return Err(Error::RankDeficient {
                    firm: panel.firms[f].clone(),
                });
            }
        }
        let beta = solve_normal(&l, xty);
        for (a, b) in beta.iter().enumerate() {
            betas[(f, a)] = *b;
        }
        for (r, row) in design.iter().enumerate() {
            let fitted: f64 = (0..3).map(|a| beta[a] * row[a]).sum();
            residuals[(r, f)] = panel.invest[(r, f)] - fitted;
        }
    }
    Ok(FirstStageResult { betas, residuals })
}

/// One full estimation run: the selected penalty level, the fit, its graph,
/// and a descriptive list of hub nodes (degree ≥ p/2).
#[derive(Debug, Clone)]
pub struct RunReport {
    pub chosen_lambda: f64,
    pub estimate: PrecisionEstimate,
    pub graph: GraphModel,
    pub core_nodes: Vec<usize>,
}

/// Demeans the residual columns, cross-validates the penalty level on the
/// grid, then fits the full sample at the winner.
pub fn estimate_graph(
    residuals: &Matrix,
    spec: &PenaltySpec,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
    shuffle: Option<&RngStream>,
) -> Result<RunReport> {
    let mut demeaned = residuals.clone();
    demean_columns(&mut demeaned);
    let cv = cross_validate_opts(&demeaned, spec, lambda_grid, cfg, shuffle)?;
    let sigma = sample_covariance(&demeaned);
    let estimate = solve(&sigma, cv.best_lambda, spec, cfg)?;
    let graph = support_graph(&estimate);
    let p = graph.p;
    let core_nodes = (0..p).filter(|&i| 2 * graph.degree(i) >= p).collect();
    Ok(RunReport {
        chosen_lambda: cv.best_lambda,
        estimate,
        graph,
        core_nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    JsonAdjacency,
    EdgeCsv,
}

/// DOT rendering: every node listed (isolated ones included), then each
/// unordered edge once; stable order, 1-based names.
pub fn graph_to_dot(graph: &GraphModel, labels: Option<&[String]>) -> String {
    let mut out = String::from("graph g {\n");
    for i in 0..graph.p {
        match labels.and_then(|l| l.get(i)) {
            Some(label) => out.push_str(&format!("  n{} [label=\"{}\"];\n", i + 1, label)),
            None => out.push_str(&format!("  n{};\n", i + 1)),
        }
    }
    for (i, j) in graph.edges() {
        out.push_str(&format!("  n{} -- n{};\n", i + 1, j + 1));
    }
    out.push_str("}\n");
    out
}

pub fn graph_from_dot(text: &str) -> Result<GraphModel> {
    let mut p = 0usize;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let node = |tok: &str| -> Result<usize> {
        tok.strip_prefix('n')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Parse {
                location: "dot".into(),
                message: format!("bad node token {tok:?}"),
            })
    };
    for raw in text.lines() {
        let line = raw.trim().trim_end_matches(';');
        if line.is_empty() || line.starts_with("graph") || line == "}" {
            continue;
        }
        if let Some((a, b)) = line.split_once("--") {
            edges.push((node(a.trim())? - 1, node(b.trim())? - 1));
        } else {
            let tok = line.split_whitespace().next().unwrap_or("");
            p = p.max(node(tok)?);
        }
    }
    let mut graph = GraphModel::new(p);
    for (i, j) in edges {
        if i >= p || j >= p {
            return Err(Error::Parse {
                location: "dot".into(),
                message: format!("edge ({},{}) beyond the node list", i + 1, j + 1),
            });
        }
        graph.add_edge(i, j);
    }
    Ok(graph)
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    p: usize,
    adjacency: Vec<Vec<bool>>,
}

pub fn graph_to_json(graph: &GraphModel) -> String {
    let adjacency = (0..graph.p)
        .map(|i| {
            (0..graph.p)
                .map(|j| i != j && graph.has_edge(i, j))
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&GraphJson {
        p: graph.p,
        adjacency,
    })
    .expect("graph serialization cannot fail")
}

pub fn graph_from_json(text: &str) -> Result<GraphModel> {
    let parsed: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: "json".into(),
        message: e.to_string(),
    })?;
    if parsed.adjacency.len() != parsed.p
        || parsed.adjacency.iter().any(|row| row.len() != parsed.p)
    {
        return Err(Error::Parse {
            location: "json".into(),
            message: "adjacency must be p×p".into(),
        });
    }
    for i in 0..parsed.p {
        for j in 0..parsed.p {
            if parsed.adjacency[i][j] != parsed.adjacency[j][i] {
                return Err(Error::Parse {
                    location: "json".into(),
                    message: format!("adjacency not symmetric at ({i},{j})"),
                });
            }
        }
    }
    let mut graph = GraphModel::new(parsed.p);
    for i in 0..parsed.p {
        for j in 0..i {
            if parsed.adjacency[i][j] {
                graph.add_edge(i, j);
            }
        }
    }
    Ok(graph)
}

/// Each unordered pair once, i < j, 1-based.
pub fn graph_to_edge_csv(graph: &GraphModel) -> String {
    let mut out = String::from("i,j\n");
    for (i, j) in graph.edges() {
        out.push_str(&format!("{},{}\n", i + 1, j + 1));
    }
    out
}

/// The edge list does not carry the node count, so it is supplied.
pub fn graph_from_edge_csv(text: &str, p: usize) -> Result<GraphModel> {
    let mut graph = GraphModel::new(p);
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "i,j" {
                return Err(parse_err(
                    0,
                    format!("expected header `i,j`, found {line:?}"),
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err(lineno, "expected two columns".into()))?;
        let i: usize = a
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node index {a:?}")))?;
        let j: usize = b
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node index {b:?}")))?;
        if i < 1 || j < 1 || i > p || j > p || i == j {
            return Err(parse_err(
                lineno,
                format!("invalid edge ({i},{j}) for p={p}"),
            ));
        }
        graph.add_edge(i - 1, j - 1);
    }
    Ok(graph)
}

pub fn export_graph(
    graph: &GraphModel,
    path: &Path,
    format: GraphFormat,
    labels: Option<&[String]>,
) -> Result<()> {
    let text = match format {
        GraphFormat::Dot => graph_to_dot(graph, labels),
        GraphFormat::JsonAdjacency => graph_to_json(graph),
        GraphFormat::EdgeCsv => graph_to_edge_csv(graph),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::sample_mvn;
    use crate::sim::{log_spaced_grid, model_registry};
    use approx::assert_abs_diff_eq;

    fn fixture() -> PanelData {
        parse_panel(GRUNFELD_CSV, PanelFormat::LongCsv).unwrap()
    }

    #[test]
    fn fixture_dimensions_and_order() {
        let panel = fixture();
        assert_eq!(panel.n_firms(), 10);
        assert_eq!(panel.n_years(), 20);
        assert_eq!(panel.firms[0], "General Motors");
        assert_eq!(panel.firms[1], "US Steel");
        assert_eq!(panel.firms[2], "General Electric");
        assert_eq!(panel.years[0], 1935);
        assert_eq!(panel.years[19], 1954);
        assert_abs_diff_eq!(panel.invest[(0, 0)], 317.6);
        assert_abs_diff_eq!(panel.capital[(19, 9)], 14.33);
    }

    #[test]
    fn missing_year_is_named() {
        let filtered: Vec<&str> = GRUNFELD_CSV
            .lines()
            .filter(|l| !(l.starts_with("3,") && l.contains(",1943,")))
            .collect();
        let err = parse_panel(&filtered.join("\n"), PanelFormat::LongCsv).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("1943"), "{text}");
        assert!(text.contains("General Electric"), "{text}");
    }

    #[test]
    fn duplicate_cell_rejected() {
        let mut text = GRUNFELD_CSV.to_string();
        text.push_str("1,General Motors,1935,1.0,2.0,3.0\n");
        let err = parse_panel(&text, PanelFormat::LongCsv).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn bad_number_is_located() {
        let text = "firm_id,firm_name,year,invest,value,capital\n1,A,1935,1.0,x,3.0\n";
        let err = parse_panel(text, PanelFormat::LongCsv).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn wide_and_long_agree() {
        let panel = fixture();
        let wide = panel_to_wide_csv(&panel);
        let from_wide = parse_panel(&wide, PanelFormat::WideCsv).unwrap();
        assert_eq!(panel, from_wide);
        let long = panel_to_long_csv(&panel);
        let from_long = parse_panel(&long, PanelFormat::LongCsv).unwrap();
        assert_eq!(panel, from_long);
    }

    #[test]
    fn short_panel_rejected() {
        let mut rows = String::from(LONG_HEADER);
        rows.push('\n');
        for firm in ["A", "B"] {
            for year in [1990, 1991, 1992] {
                rows.push_str(&format!("0,{firm},{year},1.0,2.0,3.0\n"));
            }
        }
        let err = parse_panel(&rows, PanelFormat::LongCsv).unwrap_err();
        assert!(err.to_string().contains("4 years"), "{err}");
    }

    #[test]
    fn exact_linear_panel_has_zero_residuals() {
        let t = 8;
        let years: Vec<i64> = (1980..1980 + t as i64).collect();
        let value = Matrix::from_fn(t, 2, |r, f| (r + f + 1) as f64);
        let capital = Matrix::from_fn(t, 2, |r, f| ((r * r) as f64) * 0.5 + f as f64);
        let invest = Matrix::from_fn(t, 2, |r, f| {
            2.0 + 3.0 * value[(r, f)] - 1.5 * capital[(r, f)]
        });
        let panel =
            PanelData::new(vec!["A".into(), "B".into()], years, invest, value, capital).unwrap();
        let fit = first_stage_ols(&panel).unwrap();
        for r in 0..t {
            for f in 0..2 {
                assert_abs_diff_eq!(fit.residuals[(r, f)], 0.0, epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(fit.betas[(0, 0)], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.betas[(1, 1)], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.betas[(1, 2)], -1.5, epsilon = 1e-9);
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let panel = fixture();
        let fit = first_stage_ols(&panel).unwrap();
        let t = panel.n_years();
        for f in 0..panel.n_firms() {
            let mut dot1 = 0.0;
            let mut dot_f = 0.0;
            let mut dot_c = 0.0;
            for r in 0..t {
                dot1 += fit.residuals[(r, f)];
                dot_f += fit.residuals[(r, f)] * panel.value[(r, f)];
                dot_c += fit.residuals[(r, f)] * panel.capital[(r, f)];
            }
            // Raw dollar scale: compare against the regressor norms.
            let scale: f64 = (0..t)
                .map(|r| panel.value[(r, f)].powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dot1.abs() <= 1e-8 * scale.max(1.0), "firm {f}: {dot1}");
            assert!(
                dot_f.abs() <= 1e-8 * scale.max(1.0) * scale,
                "firm {f}: {dot_f}"
            );
            assert!(
                dot_c.abs() <= 1e-8 * scale.max(1.0) * scale,
                "firm {f}: {dot_c}"
            );
        }
    }

    #[test]
    fn duplicated_regressor_is_rank_deficient() {
        let panel = fixture();
        let clone = PanelData::new(
            panel.firms.clone(),
            panel.years.clone(),
            panel.invest.clone(),
            panel.capital.clone(),
            panel.capital.clone(),
        )
        .unwrap();
        match first_stage_ols(&clone) {
            Err(Error::RankDeficient { firm }) => assert_eq!(firm, "General Motors"),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn intercept_shift_leaves_residual_covariance() {
        let panel = fixture();
        let base = first_stage_ols(&panel).unwrap();
        let mut shifted = panel.clone();
        let t = panel.n_years();
        for r in 0..t {
            shifted.invest[(r, 4)] += 1000.0;
        }
        let moved = first_stage_ols(&shifted).unwrap();
        let mut a = base.residuals.clone();
        let mut b = moved.residuals.clone();
        demean_columns(&mut a);
        demean_columns(&mut b);
        let ca = sample_covariance(&a);
        let cb = sample_covariance(&b);
        let scale = ca.frobenius_norm();
        assert!(ca.sub(&cb).frobenius_norm() <= 1e-10 * scale);
    }

    #[test]
    fn estimate_graph_is_deterministic_and_consistent() {
        let model = model_registry("AR1_4_HALF").unwrap();
        let data = sample_mvn(
            &crate::mat::inverse(&model.omega0).unwrap(),
            60,
            &RngStream::new(70, 0),
        )
        .unwrap();
        let spec = PenaltySpec::l12_sq();
        let grid = log_spaced_grid(0.02, 0.8, 8);
        let cfg = SolverConfig::default();
        let a = estimate_graph(&data, &spec, &grid, &cfg, None).unwrap();
        let b = estimate_graph(&data, &spec, &grid, &cfg, None).unwrap();
        assert_eq!(a.chosen_lambda, b.chosen_lambda);
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.estimate.omega.as_slice(), b.estimate.omega.as_slice());
        // The reported graph is the fit's support.
        assert_eq!(a.graph.edges(), support_graph(&a.estimate).edges());
        for &n in &a.core_nodes {
            assert!(2 * a.graph.degree(n) >= a.graph.p);
        }
    }

    #[test]
    fn graph_formats_round_trip() {
        let mut graph = GraphModel::new(5);
        graph.add_edge(0, 1);
        graph.add_edge(1, 3);
        // Node 5 stays isolated to exercise the p bookkeeping.
        let dot = graph_to_dot(&graph, None);
        assert_eq!(graph_from_dot(&dot).unwrap().edges(), graph.edges());
        assert_eq!(graph_from_dot(&dot).unwrap().p, 5);

        let json = graph_to_json(&graph);
        let back = graph_from_json(&json).unwrap();
        assert_eq!(back.p, 5);
        assert_eq!(back.edges(), graph.edges());

        let csv = graph_to_edge_csv(&graph);
        assert_eq!(csv, "i,j\n1,2\n2,4\n");
        let back = graph_from_edge_csv(&csv, 5).unwrap();
        assert_eq!(back.edges(), graph.edges());
        assert_eq!(back.p, 5);
    }

    #[test]
    fn empty_graph_dot_lists_isolated_nodes() {
        let graph = GraphModel::new(3);
        let dot = graph_to_dot(&graph, None);
        assert_eq!(dot, "graph g {\n  n1;\n  n2;\n  n3;\n}\n");
        let labeled = graph_to_dot(&graph, Some(&["A".into(), "B".into(), "C".into()]));
        assert!(labeled.contains("n2 [label=\"B\"];"));
        assert_eq!(graph_from_dot(&labeled).unwrap().p, 3);
    }

    #[test]
    fn edge_csv_rejects_out_of_range() {
        assert!(graph_from_edge_csv("i,j\n1,9\n", 5).is_err());
        assert!(graph_from_edge_csv("i,j\n0,2\n", 5).is_err());
        assert!(graph_from_edge_csv("wrong\n", 5).is_err());
    }
}
