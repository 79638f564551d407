//! Compressed sparse rows, matrix-vector products and a profile Cholesky
//! factorization under reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed row form with sorted, unique columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets; duplicates
    /// are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::Assembly(format!("entry ({i}, {j}) outside a {n} x {n} matrix")));
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, cols, vals })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |p| v[p])
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.get(i, i)))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(j, a)| a * x[*j]).sum::<f64>()
            }),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                d[(i, *j)] = *a;
            }
        }
        d
    }

    /// `max |A - A^T| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(*j, i)).abs());
            }
        }
        worst / scale
    }

    #[cfg(test)]
    /// Largest row-wise profile width `i - min_j` under the permutation.
    fn bandwidth(&self, perm_inv: &[usize]) -> usize {
        (0..self.n)
            .map(|i| {
                let pi = perm_inv[i];
                let (c, _) = self.row(i);
                c.iter().map(|j| pi.saturating_sub(perm_inv[*j])).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree = |i: usize| a.row(i).0.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree(i), i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral_node(a, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut next: Vec<usize> = a.row(i).0.iter().copied().filter(|j| !visited[*j]).collect();
            next.sort_by_key(|&j| (degree(j), j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// A pseudo-peripheral node of the component containing `seed`.
fn peripheral_node(a: &CsrMatrix, seed: usize) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    loop {
        let (far, depth) = farthest(a, node);
        if depth <= ecc {
            return node;
        }
        node = far;
        ecc = depth;
    }
}

fn farthest(a: &CsrMatrix, start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; a.nrows()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(i) = queue.pop_front() {
        let d = dist[i];
        if d > best.1 || (d == best.1 && a.row(i).0.len() < a.row(best.0).0.len()) {
            best = (i, d);
        }
        for &j in a.row(i).0 {
            if dist[j] == usize::MAX {
                dist[j] = d + 1;
                queue.push_back(j);
            }
        }
    }
    best
}

/// `A = L L^T` stored by rows of the permuted matrix, each row from its
/// first structural nonzero to the diagonal.
#[derive(Clone, Debug)]
pub struct ProfileCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl ProfileCholesky {
    /// Factors a symmetric positive definite matrix; only the lower triangle
    /// under the fill-reducing ordering is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for &j in a.row(old).0 {
                let pj = inv[j];
                if pj < i {
                    first[i] = first[i].min(pj);
                }
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            let (c, v) = a.row(old);
            for (j, x) in c.iter().zip(v) {
                let pj = inv[*j];
                if pj <= i {
                    values[start[i] + pj - first[i]] = *x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let m0 = fi.max(fj);
                let row_i = &values[start[i] + m0 - fi..start[i] + j - fi];
                let row_j = &values[start[j] + m0 - fj..start[j] + j - fj];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let aij = values[start[i] + j - fi] - dot;
                if j < i {
                    values[start[i] + j - fi] = aij / values[start[j + 1] - 1];
                } else if aij > 0.0 && aij.is_finite() {
                    values[start[i + 1] - 1] = aij.sqrt();
                } else {
                    return Err(Error::Solve(format!(
                        "Cholesky pivot {aij:.3e} at row {} is not positive",
                        perm[i]
                    )));
                }
            }
        }
        Ok(Self {
            perm,
            first,
            start,
            values,
        })
    }

    pub fn profile_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1] - 1];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / self.values[self.start[i + 1] - 1];
        }
        for i in (0..n).rev() {
            y[i] /= self.values[self.start[i + 1] - 1];
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.values[self.start[i]..self.start[i + 1] - 1];
            for (l, x) in row.iter().zip(&mut y[fi..i]) {
                *x -= l * yi;
            }
        }
        let mut x = DVector::zeros(n);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients; stops when
/// `||b - A x|| <= tol ||b||`.
pub fn conjugate_gradients(a: &CsrMatrix, b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    let diag = a.diagonal();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Solve("conjugate gradients need a positive diagonal".into()));
    }
    let bnorm = b.norm();
    let mut x = DVector::zeros(b.len());
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= tol * bnorm {
            return Ok(x);
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    Err(Error::Solve(format!(
        "conjugate gradients did not converge in {max_iter} iterations: relative residual {:.3e}",
        r.norm() / bnorm
    )))
}
