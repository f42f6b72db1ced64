//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Largest absolute entry of `a - aᵀ`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Largest absolute entry of `a - a†`.
pub fn anti_hermiticity(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn sym_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).first().copied().unwrap_or(0.0)
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn herm_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Real representation `[[Re A, -Im A], [Im A, Re A]]` of a complex matrix.
pub fn realify(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(symmetrize(a))
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(chol.inverse())
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Extracts the principal submatrix on `idx`.
pub fn principal_submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Orthonormal basis (as columns) of the span of `vecs`, by modified
/// Gram–Schmidt with one reorthogonalization pass. A vector is dropped when
/// its residual falls below `rel_tol` times its own norm.
pub fn orthonormal_span(vecs: &[&DVector<f64>], rel_tol: f64) -> DMatrix<f64> {
    let n = vecs.first().map_or(0, |v| v.len());
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vecs {
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = (*v).clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let rn = r.norm();
        if rn > rel_tol * norm {
            basis.push(r / rn);
        }
    }
    if basis.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&basis)
}

/// Partitions indices `0..n` into groups that never couple through a nonzero
/// entry of any matrix in `mats`. Each group is returned sorted.
pub fn decoupled_blocks(n: usize, mats: &[&DMatrix<f64>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for m in mats {
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Uniform-grid trapezoid weights.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Finite-difference weights for the `order`-th derivative at zero on the
/// given offsets (Fornberg's recursion).
pub fn fornberg_weights(order: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    assert!(n > order, "need more stencil points than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fornberg_reproduces_classic_stencils() {
        let w = fornberg_weights(2, &[-1.0, 0.0, 1.0]);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], -2.0, epsilon = 1e-14);
        let w = fornberg_weights(1, &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_relative_eq!(w[0], 1.0 / 12.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], -2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn block_partition_finds_x_and_p_halves() {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(2, 3)] = 2.0;
        let blocks = decoupled_blocks(4, &[&m]);
        assert_eq!(blocks, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn realify_preserves_products() {
        let a = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, 1.0), Complex64::new(2.0, -1.0),
        ]);
        let b = a.adjoint();
        let lhs = realify(&(&a * &b));
        let rhs = realify(&a) * realify(&b);
        assert!((lhs - rhs).abs().max() < 1e-14);
    }
}
