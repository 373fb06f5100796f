//! Small dense vector helpers on `&[f64]`.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| x * k).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Columns `p_i - p_0` as a `d × k` matrix.
pub fn edge_matrix(verts: &[Vec<f64>]) -> DMatrix<f64> {
    let d = verts[0].len();
    let k = verts.len() - 1;
    DMatrix::from_fn(d, k, |r, c| verts[c + 1][r] - verts[0][r])
}

/// k-dimensional volume of the simplex spanned by `verts` (k + 1 points).
pub fn simplex_volume(verts: &[Vec<f64>]) -> f64 {
    let k = verts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let e = edge_matrix(verts);
    let gram = e.transpose() * &e;
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k)
}

/// Volume relative to the product of edge lengths from vertex 0; zero for
/// degenerate simplices and at most 1 / k!.
pub fn relative_volume(verts: &[Vec<f64>]) -> f64 {
    let k = verts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let mut prod = 1.0;
    for v in &verts[1..] {
        let l = dist(v, &verts[0]);
        if l == 0.0 {
            return 0.0;
        }
        prod *= l;
    }
    simplex_volume(verts) / prod
}

pub fn is_degenerate(verts: &[Vec<f64>]) -> bool {
    verts.len() > 1 && relative_volume(verts) <= 1e-10
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Operator norm of the affine map sending simplex `src` to `dst`, measured
/// on the tangent space of `src`.
pub fn affine_operator_norm(src: &[Vec<f64>], dst: &[Vec<f64>]) -> f64 {
    let k = src.len() - 1;
    if k == 0 {
        return 0.0;
    }
    let e = edge_matrix(src);
    let f = edge_matrix(dst);
    let b = e.transpose() * &e;
    let a = f.transpose() * &f;
    let Some(chol) = b.cholesky() else {
        return f64::INFINITY;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let m = &linv * a * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigenvalues();
    eig.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Solve the square system `a x = b`; `None` when singular.
pub fn solve(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}
