//! Markov clustering: alternate expansion (squaring the flow matrix) and
//! inflation (entrywise power, column renormalization) until the flow settles
//! on attractors, then read clusters off the support of the limit.

use serde::{Deserialize, Serialize};

use super::markov::MarkovMatrix;
use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MclParams {
    pub inflation: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Entries below this value are dropped after each inflation.
    pub prune: f64,
}

impl Default for MclParams {
    fn default() -> Self {
        Self { inflation: 2.0, max_iter: 200, tol: 1e-6, prune: 1e-5 }
    }
}

impl MclParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inflation > 1.0 && self.inflation.is_finite()) {
            return Err(Error::InvalidArgument(format!("inflation {} must exceed 1", self.inflation)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(0.0..1.0).contains(&self.prune) {
            return Err(Error::InvalidArgument("tol must be positive and prune in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Column-sparse flow matrix; column `j` lists `(row, value)` sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix<T> {
    n: usize,
    columns: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> FlowMatrix<T> {
    fn from_markov(m: &MarkovMatrix<T>) -> Self {
        let n = m.n();
        let dense = m.matrix();
        let columns = (0..n)
            .map(|j| (0..n).filter(|&i| dense[(i, j)] > T::zero()).map(|i| (i as u32, dense[(i, j)])).collect())
            .collect();
        Self { n, columns }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column_sums(&self) -> Vec<T> {
        self.columns.iter().map(|c| c.iter().map(|&(_, v)| v).sum()).collect()
    }

    pub fn min_entry(&self) -> T {
        self.columns.iter().flatten().fold(T::infinity(), |acc, &(_, v)| acc.min(v))
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.n);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[(i as usize, j)] = v;
            }
        }
        m
    }

    pub fn to_markov(&self) -> Result<MarkovMatrix<T>> {
        MarkovMatrix::new(self.to_dense())
    }

    fn column_major(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n * self.n];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                d[j * self.n + i as usize] = v;
            }
        }
        d
    }

    fn expand_inflate(&self, inflation: T, prune: T, acc: &mut [T], touched: &mut Vec<u32>) -> Self {
        let n = self.n;
        let finish = |mut out: Vec<(u32, T)>| {
            out.iter_mut().for_each(|(_, v)| *v = inflate(*v, inflation));
            normalize(&mut out);
            let max = out.iter().fold(T::zero(), |m, &(_, v)| m.max(v));
            out.retain(|&(_, v)| v >= prune || v == max);
            normalize(&mut out);
            out
        };
        let mut columns = Vec::with_capacity(n);
        if self.nnz() * 4 > n * n {
            // mostly-full early iterations: blocked dense product, same summation order
            let d = self.column_major();
            let mut block = vec![T::zero(); DENSE_BLOCK * n];
            for j0 in (0..n).step_by(DENSE_BLOCK) {
                let width = DENSE_BLOCK.min(n - j0);
                block.iter_mut().for_each(|v| *v = T::zero());
                for k in 0..n {
                    let src = &d[k * n..(k + 1) * n];
                    for jj in 0..width {
                        let w = d[(j0 + jj) * n + k];
                        if w != T::zero() {
                            for (a, &v) in block[jj * n..(jj + 1) * n].iter_mut().zip(src) {
                                *a += v * w;
                            }
                        }
                    }
                }
                for jj in 0..width {
                    let col = &block[jj * n..(jj + 1) * n];
                    columns.push(finish(
                        (0..n).filter(|&i| col[i] != T::zero()).map(|i| (i as u32, col[i])).collect(),
                    ));
                }
            }
            return Self { n, columns };
        }
        for col in &self.columns {
            for &(k, w) in col {
                for &(i, v) in &self.columns[k as usize] {
                    let slot = &mut acc[i as usize];
                    if *slot == T::zero() {
                        touched.push(i);
                    }
                    *slot += v * w;
                }
            }
            touched.sort_unstable();
            let out = touched.iter().map(|&i| (i, std::mem::replace(&mut acc[i as usize], T::zero()))).collect();
            touched.clear();
            columns.push(finish(out));
        }
        Self { n, columns }
    }

    fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (a, b) in self.columns.iter().zip(&other.columns) {
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let d = match (a.get(p), b.get(q)) {
                    (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                        p += 1;
                        q += 1;
                        va - vb
                    }
                    (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                        p += 1;
                        va
                    }
                    (Some(&(_, va)), None) => {
                        p += 1;
                        va
                    }
                    (_, Some(&(_, vb))) => {
                        q += 1;
                        vb
                    }
                    (None, None) => unreachable!(),
                };
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Connected components of the support: every column joins the rows it
    /// sends mass to, so attractors sharing columns merge.
    fn clusters(&self) -> ClusterAssignment {
        let mut uf = UnionFind::new(self.n);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, _) in col {
                uf.union(i as usize, j);
            }
        }
        let roots: Vec<usize> = (0..self.n).map(|i| uf.find(i)).collect();
        ClusterAssignment::from_raw_labels(&roots)
    }
}

const DENSE_BLOCK: usize = 16;

fn inflate<T: Scalar>(v: T, r: T) -> T {
    if r == T::lit(2.0) {
        v * v
    } else {
        v.powf(r)
    }
}

fn normalize<T: Scalar>(col: &mut [(u32, T)]) {
    let sum: T = col.iter().map(|&(_, v)| v).sum();
    if sum > T::zero() {
        col.iter_mut().for_each(|(_, v)| *v /= sum);
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so labels do not depend on union order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[derive(Debug, Clone)]
pub struct MclOutcome<T> {
    pub assignment: ClusterAssignment,
    pub converged: bool,
    pub iterations: usize,
    pub limit: FlowMatrix<T>,
}

pub fn mcl<T: Scalar>(m: &MarkovMatrix<T>, params: &MclParams) -> Result<MclOutcome<T>> {
    mcl_observed(m, params, |_, _| {})
}

/// Like [`mcl`], calling `observer(iteration, flow)` after every inflation.
///
/// Non-convergence is not an error: the best-effort assignment comes back with
/// `converged == false`.
pub fn mcl_observed<T: Scalar>(
    m: &MarkovMatrix<T>,
    params: &MclParams,
    mut observer: impl FnMut(usize, &FlowMatrix<T>),
) -> Result<MclOutcome<T>> {
    params.validate()?;
    let inflation = T::lit(params.inflation);
    let prune = T::lit(params.prune);
    let tol = T::lit(params.tol);
    let mut flow = FlowMatrix::from_markov(m);
    let mut acc = vec![T::zero(); flow.n];
    let mut touched = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        let next = flow.expand_inflate(inflation, prune, &mut acc, &mut touched);
        iterations += 1;
        observer(iterations, &next);
        let delta = next.max_abs_diff(&flow);
        flow = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(MclOutcome { assignment: flow.clusters(), converged, iterations, limit: flow })
}
