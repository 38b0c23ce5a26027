//! Exact discrete optimal transport and the mixture Wasserstein distance.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dims, invalid, Error, Result};
use crate::frechet::{frechet_distance, GaussianMoments};
use crate::gmm::GmmModel;
use crate::metrics::{MetricDetail, MetricId, MetricResult};

/// Allowed gap between the two marginal totals.
pub const MARGINAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `c_a × c_b` flows; row sums match `a`, column sums match `b`.
    pub matrix: DMatrix<f64>,
    pub cost: f64,
}

/// Squared 2-Wasserstein distance between two Gaussians.
pub fn gaussian_w2_sq(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64> {
    Ok(frechet_distance(a, b)?.value)
}

fn check_simplex(w: &[f64], name: &str) -> Result<f64> {
    if w.is_empty() {
        return Err(invalid(format!("{name} weights are empty")));
    }
    if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(invalid(format!("{name} weights must be finite and non-negative")));
    }
    Ok(w.iter().sum())
}

/// Minimizes `Σ wᵢⱼ costᵢⱼ` over plans with marginals `a` and `b`, using the
/// transportation simplex (spanning-tree bases, dual potentials).
pub fn discrete_ot(cost: &DMatrix<f64>, a: &[f64], b: &[f64]) -> Result<TransportPlan> {
    let (m, n) = cost.shape();
    check_dims(m, a.len())?;
    check_dims(n, b.len())?;
    if cost.iter().any(|&c| !c.is_finite() || c < 0.0) {
        return Err(invalid("transport costs must be finite and non-negative"));
    }
    let sa = check_simplex(a, "source")?;
    let sb = check_simplex(b, "target")?;
    if (sa - sb).abs() > MARGINAL_TOL {
        return Err(Error::Infeasible(format!(
            "marginal totals differ: {sa} vs {sb}"
        )));
    }

    let mut tree = Basis::northwest(a, b);
    let scale = cost.iter().fold(0.0f64, |acc, &c| acc.max(c)).max(1.0);
    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    for _ in 0..max_pivots {
        let (u, v) = tree.potentials(cost);
        let mut entering = None;
        let mut best = -1e-12 * scale;
        for i in 0..m {
            for j in 0..n {
                let r = cost[(i, j)] - u[i] - v[j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
        }
        let Some((i, j)) = entering else {
            return Ok(tree.into_plan(cost));
        };
        tree.pivot(i, j);
    }
    Err(Error::Infeasible("transport simplex did not terminate".into()))
}

/// A basic feasible solution: `m + n − 1` cells forming a spanning tree of
/// the bipartite row/column graph.
struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize, f64)>,
}

impl Basis {
    fn northwest(a: &[f64], b: &[f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let last = i == m - 1 && j == n - 1;
            let x = if last { ra[i].max(0.0) } else { ra[i].min(rb[j]).max(0.0) };
            cells.push((i, j, x));
            if last {
                break;
            }
            ra[i] -= x;
            rb[j] -= x;
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cells }
    }

    /// Node ids: rows `0..m`, columns `m..m+n`. Returns adjacency as
    /// `(neighbour, cell index)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j, _)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    /// Duals with `u₀ = 0` and `uᵢ + vⱼ = cᵢⱼ` on basic cells.
    fn potentials(&self, cost: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0]);
        while let Some(node) = queue.pop_front() {
            for &(next, k) in &adj[node] {
                if pot[next].is_nan() {
                    let (i, j, _) = self.cells[k];
                    pot[next] = cost[(i, j)] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Brings cell `(i, j)` into the basis and drops the blocking cell.
    fn pivot(&mut self, i: usize, j: usize) {
        let adj = self.adjacency();
        let start = i;
        let goal = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        // Path from goal back to start; the edge touching the goal column is
        // the first to lose flow, then signs alternate.
        let mut path = Vec::new();
        let mut node = goal;
        while let Some((prev, k)) = parent[node] {
            path.push(k);
            node = prev;
        }
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                let x = self.cells[k].2;
                if x < theta || (x == theta && k < leave) {
                    theta = x;
                    leave = k;
                }
            }
        }
        for (step, &k) in path.iter().enumerate() {
            if step % 2 == 0 {
                self.cells[k].2 -= theta;
            } else {
                self.cells[k].2 += theta;
            }
        }
        self.cells[leave] = (i, j, theta);
    }

    fn into_plan(self, cost: &DMatrix<f64>) -> TransportPlan {
        let mut matrix = DMatrix::zeros(self.m, self.n);
        let mut total = 0.0;
        for (i, j, x) in self.cells {
            let x = x.max(0.0);
            matrix[(i, j)] = x;
            total += x * cost[(i, j)];
        }
        TransportPlan {
            matrix,
            cost: total,
        }
    }
}

/// Component-pair squared W₂ costs.
pub fn component_costs(p: &GmmModel, q: &GmmModel) -> Result<DMatrix<f64>> {
    check_dims(p.dim(), q.dim())?;
    let (cp, cq) = (p.components(), q.components());
    let entries: Vec<f64> = (0..cp * cq)
        .into_par_iter()
        .map(|idx| gaussian_w2_sq(&p.component(idx / cq), &q.component(idx % cq)))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_slice(cp, cq, &entries))
}

/// The optimal plan between mixture weights under [`component_costs`].
pub fn mw2_plan(p: &GmmModel, q: &GmmModel) -> Result<TransportPlan> {
    let cost = component_costs(p, q)?;
    discrete_ot(&cost, &p.weights, &q.weights)
}

/// Squared mixture Wasserstein distance as a bare number.
pub fn mw2_value(p: &GmmModel, q: &GmmModel) -> Result<f64> {
    Ok(mw2_plan(p, q)?.cost)
}

/// Squared mixture Wasserstein distance between two fitted mixtures.
pub fn mw2_sq(p: &GmmModel, q: &GmmModel) -> Result<MetricResult> {
    let start = Instant::now();
    let value = mw2_value(p, q)?;
    Ok(MetricResult {
        metric: MetricId::Mw2,
        value,
        n_real: 0,
        n_gen: 0,
        seed: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        detail: MetricDetail::Mixture {
            components_real: p.components(),
            components_gen: q.components(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn gauss1(mu: f64, var: f64) -> (DVector<f64>, DMatrix<f64>) {
        (DVector::from_element(1, mu), DMatrix::from_element(1, 1, var))
    }

    fn mixture(parts: &[(f64, f64, f64)]) -> GmmModel {
        let (w, (m, s)): (Vec<_>, (Vec<_>, Vec<_>)) = parts
            .iter()
            .map(|&(w, mu, var)| (w, gauss1(mu, var)))
            .unzip();
        GmmModel::new(w, m, s).unwrap()
    }

    #[test]
    fn zero_diagonal_cost() {
        let cost = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let a = [0.2, 0.3, 0.5];
        let plan = discrete_ot(&cost, &a, &a).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.matrix, DMatrix::from_diagonal(&DVector::from_row_slice(&a)));
    }

    #[test]
    fn two_by_two_swap() {
        let cost = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let plan = discrete_ot(&cost, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn antidiagonal_optimum() {
        let cost = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 5.0]);
        let plan = discrete_ot(&cost, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_marginals() {
        let cost = DMatrix::zeros(2, 2);
        let err = discrete_ot(&cost, &[0.5, 0.5], &[0.5, 0.6]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(discrete_ot(&cost, &[1.5, -0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn gaussian_w2_examples() {
        let (m0, s) = gauss1(0.0, 1.0);
        let (m3, _) = gauss1(3.0, 1.0);
        let a = GaussianMoments::new(m0, s.clone(), 0).unwrap();
        let b = GaussianMoments::new(m3, s, 0).unwrap();
        assert_eq!(gaussian_w2_sq(&a, &a).unwrap(), 0.0);
        assert!((gaussian_w2_sq(&a, &b).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_narrow_mixture_costs_one() {
        for eps in [1e-1, 1e-2, 1e-4] {
            let v = eps * eps;
            let p = mixture(&[(0.5, 0.0, v), (0.5, 10.0, v)]);
            let q = mixture(&[(0.5, 1.0, v), (0.5, 11.0, v)]);
            let d = mw2_sq(&p, &q).unwrap().value;
            assert!((d - 1.0).abs() < 1e-9, "eps {eps}: {d}");
        }
    }

    #[test]
    fn identical_mixtures_are_zero() {
        let p = mixture(&[(0.3, 0.0, 1.0), (0.7, 4.0, 2.0)]);
        assert!(mw2_sq(&p, &p).unwrap().value.abs() <= 1e-10);
    }

    #[test]
    fn single_components_reduce_to_w2() {
        let p = mixture(&[(1.0, 0.0, 1.0)]);
        let q = mixture(&[(1.0, 2.0, 4.0)]);
        let want = gaussian_w2_sq(&p.component(0), &q.component(0)).unwrap();
        assert_eq!(mw2_value(&p, &q).unwrap(), want);
    }

    #[test]
    fn degenerate_northwest_start() {
        // Equal partial sums force zero-flow basic cells.
        let cost = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0]);
        let a = [0.25, 0.25, 0.5];
        let b = [0.25, 0.25, 0.5];
        let plan = discrete_ot(&cost, &a, &b).unwrap();
        for i in 0..3 {
            assert!((plan.matrix.row(i).sum() - a[i]).abs() < 1e-12);
            assert!((plan.matrix.column(i).sum() - b[i]).abs() < 1e-12);
        }
        // diag(.25 on (0,1),(1,0)) + (2,2): 0.25 + 0.25 + 2.5
        assert!((plan.cost - 3.0).abs() < 1e-12);
    }
}
