//! Undirected weighted graphs, Laplacians and the orthonormal spectral
//! transform `T = [1/√N·1, R]` that diagonalises the Laplacian.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// An undirected graph given by a symmetric nonnegative adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

impl Graph {
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::Validation(format!(
                "adjacency must be square, got {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        let n = adjacency.nrows();
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Validation(format!("invalid weight {w} on ({i}, {j})")));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::Validation(format!("asymmetric weight on ({i}, {j})")));
                }
            }
        }
        Ok(Graph { adjacency })
    }

    /// Builds a graph on `n` nodes from `(i, j, weight)` triples.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Validation(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        Graph::new(a)
    }

    /// Parses an edge list: one `i j weight` line per edge, 0-based indices,
    /// `#` starts a comment. The node count is the largest index plus one.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `i j weight`, got {:?}", lineno + 1, line)));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let i: usize = fields[0].parse().map_err(|_| bad("node index"))?;
            let j: usize = fields[1].parse().map_err(|_| bad("node index"))?;
            let w: f64 = fields[2].parse().map_err(|_| bad("weight"))?;
            edges.push((i, j, w));
        }
        let n = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        Graph::from_edges(n, &edges)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Graph::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    /// Spanning tree plus extra edges with probability `p`; weights in [0.5, 1.5).
    pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 1..n {
            let j = rng.gen_range(0..i);
            edges.push((i, j, rng.gen_range(0.5..1.5)));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p && !edges.iter().any(|&(a, b, _)| (a, b) == (j, i) || (a, b) == (i, j)) {
                    edges.push((i, j, rng.gen_range(0.5..1.5)));
                }
            }
        }
        Graph::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && self.adjacency[(i, j)] > 0.0 {
                    *s = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// The five-node example network: node 0 joined to every other node, plus
/// the cycle 1-2-3-4-1. Laplacian eigenvalues are {0, 3, 3, 5, 5}.
pub fn example_graph() -> Graph {
    let edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 4), (2, 3), (3, 4)];
    let edges: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    Graph::from_edges(5, &edges).expect("static graph is valid")
}

/// `L = Diag(A·1) − A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let a = g.adjacency();
    let n = g.n();
    let mut l = -a.clone();
    for i in 0..n {
        // Summing the same row keeps L·1 = 0 up to a single rounding.
        l[(i, i)] = a.row(i).iter().sum();
    }
    l
}

/// Ascending eigenvalues and orthonormal eigenvectors of a Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors; column 0 is `1/√N·1` for a connected graph.
    pub transform: DMatrix<f64>,
}

impl Spectrum {
    pub fn of_graph(g: &Graph) -> Result<Self> {
        spectrum(&laplacian(g))
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    fn zero_tol(&self) -> f64 {
        1e-9 * self.lambda_max().abs().max(1.0)
    }

    pub fn is_connected(&self) -> bool {
        self.n() >= 2 && self.lambda2() > self.zero_tol()
    }

    pub fn zero_multiplicity(&self) -> usize {
        let tol = self.zero_tol();
        self.eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }

    /// Nonzero eigenvalues with repeats removed, ascending.
    pub fn distinct_modes(&self) -> Vec<f64> {
        let tol = self.zero_tol();
        let mut out: Vec<f64> = Vec::new();
        for &l in self.eigenvalues.iter().filter(|l| l.abs() > tol) {
            if out.last().is_none_or(|&p| l - p > tol) {
                out.push(l);
            }
        }
        out
    }

    /// `R`: the eigenvectors after the first.
    pub fn r(&self) -> DMatrix<f64> {
        self.transform.columns(1, self.n().saturating_sub(1)).into_owned()
    }

    /// `‖Rᵀq‖`, the distance of `q` from the consensus direction.
    pub fn disagreement_norm(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: q.len() });
        }
        let q = DVector::from_column_slice(q);
        Ok((self.r().transpose() * q).norm())
    }

    /// Modal coordinates `z = Tᵀx`.
    pub fn to_modal(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: x.len() });
        }
        Ok((self.transform.transpose() * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    /// Agent coordinates `x = Tz`.
    pub fn from_modal(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: z.len() });
        }
        Ok((&self.transform * DVector::from_column_slice(z)).as_slice().to_vec())
    }
}

/// Eigen-decomposition of a symmetric positive semi-definite matrix by cyclic
/// Jacobi rotations.
pub fn spectrum(l: &DMatrix<f64>) -> Result<Spectrum> {
    if !l.is_square() {
        return Err(Error::Validation("matrix must be square".into()));
    }
    let n = l.nrows();
    let scale = l.norm().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (l[(i, j)] - l[(j, i)]).abs() > 1e-12 * scale || !l[(i, j)].is_finite() {
                return Err(Error::Validation(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let (values, vectors) = jacobi_eigen(l)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut transform = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut v = vectors.column(i).into_owned();
        fix_sign(&mut v);
        transform.set_column(c, &v);
    }

    let zero_tol = 1e-12 * scale;
    for l in eigenvalues.iter_mut() {
        if l.abs() <= zero_tol {
            *l = 0.0;
        }
    }
    // Exact consensus direction when the zero eigenvalue is simple and the
    // matrix annihilates the ones vector (true for any Laplacian).
    let simple_zero = n >= 1 && eigenvalues[0] == 0.0 && (n == 1 || eigenvalues[1] > 1e-9 * scale);
    let row_sums_vanish = (0..n).all(|i| l.row(i).sum().abs() <= 1e-12 * scale);
    if simple_zero && row_sums_vanish {
        transform.set_column(0, &DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    }
    Ok(Spectrum { eigenvalues, transform })
}

/// Largest-magnitude entry positive; ties go to the first such entry.
fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let target = JACOBI_TOL * m.norm();

    let off = |a: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= target {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if off(&a) <= target {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }
    Err(Error::NoConvergence(format!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")))
}
