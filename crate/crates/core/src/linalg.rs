//! Dense Gaussian elimination over [`Scalar`].
//!
//! Pivots are chosen on the coefficient block only, so an exact matrix with
//! a float right-hand side still gets exact rank decisions.

use crate::scalar::Scalar;

pub type Matrix = Vec<Vec<Scalar>>;

/// Reduced row echelon form of `a`, applying the same row operations to the
/// columns of `rhs` (one `Vec` per row, any width). Returns pivot columns.
pub fn rref_with(a: &mut Matrix, rhs: &mut [Vec<Scalar>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let exact = a.iter().flatten().all(Scalar::is_exact);
    let scale = a
        .iter()
        .flatten()
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let pick = if exact {
            (r..rows).find(|&i| !a[i][c].is_exact_zero())
        } else {
            (r..rows)
                .filter(|&i| a[i][c].to_f64().abs() > 1e-12 * scale)
                .max_by(|&i, &j| {
                    a[i][c]
                        .to_f64()
                        .abs()
                        .partial_cmp(&a[j][c].to_f64().abs())
                        .unwrap()
                })
        };
        let Some(p) = pick else { continue };
        a.swap(r, p);
        rhs.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for x in rhs[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i == r || a[i][c].is_exact_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for k in 0..cols {
                if !a[r][k].is_exact_zero() {
                    a[i][k] = &a[i][k] - &(&f * &a[r][k]);
                }
            }
            a[i][c] = Scalar::zero();
            for k in 0..rhs[i].len() {
                rhs[i][k] = &rhs[i][k] - &(&f * &rhs[r][k]);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &Matrix) -> usize {
    let mut m = a.clone();
    let mut rhs = vec![Vec::new(); m.len()];
    rref_with(&mut m, &mut rhs).len()
}

/// Solves a square nonsingular system; `None` when singular.
pub fn solve(a: &Matrix, b: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = a.len();
    let mut m = a.clone();
    let mut rhs: Vec<Vec<Scalar>> = b.iter().map(|x| vec![x.clone()]).collect();
    let piv = rref_with(&mut m, &mut rhs);
    if piv.len() < n {
        return None;
    }
    Some(rhs.into_iter().map(|mut r| r.remove(0)).collect())
}

pub fn determinant(a: &Matrix) -> Scalar {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Scalar::one();
    for c in 0..n {
        let exact = (c..n).all(|i| m[i][c].is_exact());
        let p = if exact {
            (c..n).find(|&i| !m[i][c].is_exact_zero()).unwrap_or(c)
        } else {
            (c..n)
                .max_by(|&i, &j| m[i][c].to_f64().abs().total_cmp(&m[j][c].to_f64().abs()))
                .unwrap()
        };
        if m[p][c].is_exact_zero() {
            return Scalar::zero();
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det = &det * &m[c][c];
        for i in c + 1..n {
            let f = &m[i][c] / &m[c][c];
            for k in c..n {
                m[i][k] = &m[i][k] - &(&f * &m[c][k]);
            }
        }
    }
    det
}

#[derive(Clone, Debug)]
pub struct LeastNorm {
    pub solution: Vec<Scalar>,
    pub rank: usize,
    /// Largest |entry| of the reduced right-hand side in the zero rows;
    /// zero for a consistent system.
    pub inconsistency: f64,
    pub consistent: bool,
}

/// Minimum Euclidean-norm solution of `a x = b`. Inconsistent systems are
/// reported, with the solution of the consistent part still returned.
pub fn least_norm(a: &Matrix, b: &[Scalar]) -> LeastNorm {
    let mut m = a.clone();
    let mut rhs: Vec<Vec<Scalar>> = b.iter().map(|x| vec![x.clone()]).collect();
    let piv = rref_with(&mut m, &mut rhs);
    let r = piv.len();
    let tail: Vec<&Scalar> = rhs[r..].iter().map(|row| &row[0]).collect();
    let inconsistency = tail.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    let consistent = tail.iter().all(|x| x.is_zero()) && inconsistency <= 1e-9;
    let cols = a.first().map_or(0, Vec::len);
    if r == 0 {
        return LeastNorm {
            solution: vec![Scalar::zero(); cols],
            rank: 0,
            inconsistency,
            consistent,
        };
    }
    // x = R^T y with (R R^T) y = r'
    let rows = &m[..r];
    let gram: Matrix = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| sparse_dot(&rows[i], &rows[j]))
                .collect()
        })
        .collect();
    let rhs_r: Vec<Scalar> = rhs[..r].iter().map(|row| row[0].clone()).collect();
    let y = solve(&gram, &rhs_r).expect("Gram matrix of independent rows is nonsingular");
    let mut x = vec![Scalar::zero(); cols];
    for (i, yi) in y.iter().enumerate() {
        for (k, a) in rows[i].iter().enumerate() {
            if !a.is_exact_zero() {
                x[k] = &x[k] + &(a * yi);
            }
        }
    }
    LeastNorm {
        solution: x,
        rank: r,
        inconsistency,
        consistent,
    }
}

fn sparse_dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_exact_zero() && !y.is_exact_zero() {
            acc = acc + x * y;
        }
    }
    acc
}

/// Basis of the null space of `a`, read off the reduced echelon form.
pub fn nullspace(a: &Matrix) -> Vec<Vec<Scalar>> {
    let cols = a.first().map_or(0, Vec::len);
    let mut m = a.clone();
    let mut rhs = vec![Vec::new(); m.len()];
    let piv = rref_with(&mut m, &mut rhs);
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !piv.contains(c)) {
        let mut v = vec![Scalar::zero(); cols];
        v[free] = Scalar::one();
        for (row, &pc) in piv.iter().enumerate() {
            v[pc] = -&m[row][free];
        }
        basis.push(v);
    }
    basis
}

pub fn mat_vec(a: &Matrix, x: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|row| sparse_dot(row, x)).collect()
}

/// Smallest eigenvalue of a symmetric f64 matrix given row-major.
pub fn min_sym_eigenvalue(m: &[f64], n: usize) -> f64 {
    match n {
        0 => f64::INFINITY,
        1 => m[0],
        2 => {
            let (a, b, d) = (m[0], m[1], m[3]);
            let tr = a + d;
            let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
            0.5 * (tr - disc)
        }
        _ => {
            let mat = nalgebra::DMatrix::from_row_slice(n, n, m);
            mat.symmetric_eigenvalues().min()
        }
    }
}

/// Smallest `λ` with `det(a - λ b) = 0` for symmetric `a` and positive
/// definite `b` (row-major); `None` when `b` is not positive definite.
pub fn min_generalized_eigenvalue(a: &[f64], b: &[f64], n: usize) -> Option<f64> {
    let bm = nalgebra::DMatrix::from_row_slice(n, n, b);
    let l = bm.cholesky()?.l();
    let linv = l.try_inverse()?;
    let am = nalgebra::DMatrix::from_row_slice(n, n, a);
    let c = &linv * am * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Some(c.symmetric_eigenvalues().min())
}

/// Inverse of a small dense f64 matrix; `None` if singular.
pub fn invert_f64(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mat = nalgebra::DMatrix::from_row_slice(n, n, m);
    let inv = mat.try_inverse()?;
    Some(inv.transpose().as_slice().to_vec())
}

pub fn det_f64(m: &[f64], n: usize) -> f64 {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => nalgebra::DMatrix::from_row_slice(n, n, m).determinant(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        Scalar::int(n)
    }

    #[test]
    fn exact_solve_and_det() {
        let a = vec![vec![q(2), q(1)], vec![q(1), q(3)]];
        let x = solve(&a, &[q(3), q(5)]).unwrap();
        assert_eq!(x, vec![Scalar::ratio(4, 5), Scalar::ratio(7, 5)]);
        assert_eq!(determinant(&a), q(5));
        let sing = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(solve(&sing, &[q(1), q(1)]).is_none());
        assert_eq!(determinant(&sing), q(0));
    }

    #[test]
    fn least_norm_underdetermined() {
        // x + y = 2 -> least-norm (1, 1)
        let a = vec![vec![q(1), q(1)]];
        let ln = least_norm(&a, &[q(2)]);
        assert!(ln.consistent);
        assert_eq!(ln.solution, vec![q(1), q(1)]);
        // duplicated row, still consistent
        let a = vec![vec![q(1), q(1)], vec![q(2), q(2)]];
        let ln = least_norm(&a, &[q(2), q(4)]);
        assert!(ln.consistent);
        assert_eq!(ln.rank, 1);
        let ln = least_norm(&a, &[q(2), q(5)]);
        assert!(!ln.consistent);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let a = vec![vec![q(1), q(2), q(3)], vec![q(0), q(1), q(1)]];
        let ns = nullspace(&a);
        assert_eq!(ns.len(), 1);
        for v in &ns {
            assert!(mat_vec(&a, v).iter().all(Scalar::is_exact_zero));
        }
    }

    #[test]
    fn small_eigen() {
        let m = [2.0, 1.0, 1.0, 2.0];
        assert!((min_sym_eigenvalue(&m, 2) - 1.0).abs() < 1e-14);
        let m3 = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.5];
        assert!((min_sym_eigenvalue(&m3, 3) - 0.5).abs() < 1e-12);
    }
}
