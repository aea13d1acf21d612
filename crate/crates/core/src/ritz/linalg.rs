//! Dense symmetric linear algebra at arbitrary precision: Cholesky
//! factorization, triangular solves and cyclic Jacobi diagonalization.

use rug::Float;

/// Square row-major matrix of `Float`s sharing one precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<Float>,
}

impl Matrix {
    pub fn zeros(n: usize, bits: u32) -> Self {
        Matrix {
            n,
            data: vec![Float::new(bits); n * n],
        }
    }

    pub fn identity(n: usize, bits: u32) -> Self {
        let mut m = Self::zeros(n, bits);
        for i in 0..n {
            m[(i, i)] = Float::with_val(bits, 1);
        }
        m
    }

    pub fn from_fn(n: usize, bits: u32, mut f: impl FnMut(usize, usize) -> Float) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(Float::with_val(bits, f(i, j)));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> u32 {
        self.data.first().map_or(64, Float::prec)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn frobenius_norm(&self) -> Float {
        let mut acc = Float::new(self.bits());
        for x in &self.data {
            acc += Float::with_val(acc.prec(), x.square_ref());
        }
        acc.sqrt()
    }

    pub fn mul_vec(&self, v: &[Float]) -> Vec<Float> {
        let bits = self.bits();
        (0..self.n)
            .map(|i| {
                let mut acc = Float::new(bits);
                for (j, vj) in v.iter().enumerate() {
                    acc += Float::with_val(bits, &self[(i, j)] * vj);
                }
                acc
            })
            .collect()
    }

    /// v^T A v.
    pub fn quadratic_form(&self, v: &[Float]) -> Float {
        let av = self.mul_vec(v);
        dot(v, &av)
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)].to_f64()).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot(a: &[Float], b: &[Float]) -> Float {
    let bits = a.first().map_or(64, Float::prec);
    let mut acc = Float::new(bits);
    for (x, y) in a.iter().zip(b) {
        acc += Float::with_val(bits, x * y);
    }
    acc
}

pub fn norm(a: &[Float]) -> Float {
    dot(a, a).sqrt()
}

/// Lower-triangular L with A = L L^T, or the index of the first
/// non-positive pivot.
pub fn cholesky(a: &Matrix) -> Result<Matrix, usize> {
    let n = a.dim();
    let bits = a.bits();
    let mut l = Matrix::zeros(n, bits);
    for j in 0..n {
        let mut d = a[(j, j)].clone();
        for k in 0..j {
            d -= Float::with_val(bits, l[(j, k)].square_ref());
        }
        if !(d > 0) {
            return Err(j);
        }
        let d = d.sqrt();
        for i in j + 1..n {
            let mut s = a[(i, j)].clone();
            for k in 0..j {
                s -= Float::with_val(bits, &l[(i, k)] * &l[(j, k)]);
            }
            l[(i, j)] = s / &d;
        }
        l[(j, j)] = d;
    }
    Ok(l)
}

/// Solves L x = b for lower-triangular L.
pub fn forward_substitute(l: &Matrix, b: &[Float]) -> Vec<Float> {
    let bits = l.bits();
    let mut x: Vec<Float> = Vec::with_capacity(b.len());
    for i in 0..l.dim() {
        let mut s = Float::with_val(bits, &b[i]);
        for (k, xk) in x.iter().enumerate() {
            s -= Float::with_val(bits, &l[(i, k)] * xk);
        }
        x.push(s / &l[(i, i)]);
    }
    x
}

/// Solves L^T x = b for lower-triangular L.
pub fn back_substitute_transpose(l: &Matrix, b: &[Float]) -> Vec<Float> {
    let n = l.dim();
    let bits = l.bits();
    let mut x = vec![Float::new(bits); n];
    for i in (0..n).rev() {
        let mut s = Float::with_val(bits, &b[i]);
        for k in i + 1..n {
            s -= Float::with_val(bits, &l[(k, i)] * &x[k]);
        }
        x[i] = s / &l[(i, i)];
    }
    x
}

/// L^{-1} for lower-triangular L.
pub fn lower_inverse(l: &Matrix) -> Matrix {
    let n = l.dim();
    let bits = l.bits();
    let mut inv = Matrix::zeros(n, bits);
    for j in 0..n {
        let mut e = vec![Float::new(bits); n];
        e[j] = Float::with_val(bits, 1);
        let col = forward_substitute(l, &e);
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    inv
}

/// L^{-1} A L^{-T}, symmetrized.
pub fn congruence_inverse(l: &Matrix, a: &Matrix) -> Matrix {
    let n = a.dim();
    let bits = a.bits();
    // Y = L^{-1} A, column by column
    let mut y = Matrix::zeros(n, bits);
    for j in 0..n {
        let col: Vec<Float> = (0..n).map(|i| a[(i, j)].clone()).collect();
        for (i, v) in forward_substitute(l, &col).into_iter().enumerate() {
            y[(i, j)] = v;
        }
    }
    // C = L^{-1} Y^T, valid because A is symmetric
    let mut c = Matrix::zeros(n, bits);
    for j in 0..n {
        let row: Vec<Float> = (0..n).map(|i| y[(j, i)].clone()).collect();
        for (i, v) in forward_substitute(l, &row).into_iter().enumerate() {
            c[(i, j)] = v;
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = Float::with_val(bits, &c[(i, j)] + &c[(j, i)]) / 2u32;
            c[(i, j)] = avg.clone();
            c[(j, i)] = avg;
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<Float>,
    /// `vectors[k]` belongs to `values[k]`; orthonormal.
    pub vectors: Vec<Vec<Float>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Rotations stop when
/// every off-diagonal entry is negligible against its diagonal pair at the
/// matrix precision.
pub fn jacobi_eigen(a: &Matrix, max_sweeps: usize) -> Option<SymmetricEigen> {
    let n = a.dim();
    let bits = a.bits();
    let mut a = a.clone();
    let mut v = Matrix::identity(n, bits);
    let eps = Float::with_val(bits, 1) >> (bits - 2);
    let tiny = Float::with_val(bits, a.frobenius_norm() * &eps) >> 16u32;

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].is_zero() {
                    continue;
                }
                let apq_abs = Float::with_val(bits, a[(p, q)].abs_ref());
                let scale = Float::with_val(bits, &a[(p, p)] * &a[(q, q)]).abs().sqrt();
                if apq_abs <= Float::with_val(bits, &scale * &eps) || apq_abs <= tiny {
                    a[(p, q)] = Float::new(bits);
                    a[(q, p)] = Float::new(bits);
                    continue;
                }
                rotated = true;
                let theta = Float::with_val(bits, &a[(q, q)] - &a[(p, p)])
                    / Float::with_val(bits, &a[(p, q)] * 2u32);
                let root = (Float::with_val(bits, theta.square_ref()) + 1u32).sqrt();
                let mut t = Float::with_val(bits, 1) / (Float::with_val(bits, theta.abs_ref()) + root);
                if theta.is_sign_negative() {
                    t = -t;
                }
                let c = Float::with_val(bits, 1) / (Float::with_val(bits, t.square_ref()) + 1u32).sqrt();
                let s = Float::with_val(bits, &t * &c);
                let apq = a[(p, q)].clone();
                let tapq = Float::with_val(bits, &t * &apq);
                a[(p, p)] -= &tapq;
                a[(q, q)] += &tapq;
                a[(p, q)] = Float::new(bits);
                a[(q, p)] = Float::new(bits);
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)].clone();
                        let arq = a[(r, q)].clone();
                        let new_p = Float::with_val(bits, &c * &arp) - Float::with_val(bits, &s * &arq);
                        let new_q = Float::with_val(bits, &c * &arq) + Float::with_val(bits, &s * &arp);
                        a[(p, r)] = new_p.clone();
                        a[(r, p)] = new_p;
                        a[(q, r)] = new_q.clone();
                        a[(r, q)] = new_q;
                    }
                    let vrp = v[(r, p)].clone();
                    let vrq = v[(r, q)].clone();
                    v[(r, p)] = Float::with_val(bits, &c * &vrp) - Float::with_val(bits, &s * &vrq);
                    v[(r, q)] = Float::with_val(bits, &s * &vrp) + Float::with_val(bits, &c * &vrq);
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= max_sweeps {
            return None;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values = order.iter().map(|&k| a[(k, k)].clone()).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|r| v[(r, k)].clone()).collect())
        .collect();
    Some(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 200;

    fn hilbert(n: usize) -> Matrix {
        Matrix::from_fn(n, BITS, |i, j| Float::with_val(BITS, 1) / (i + j + 1) as u32)
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = hilbert(6);
        let l = cholesky(&a).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut s = Float::new(BITS);
                for k in 0..6 {
                    s += Float::with_val(BITS, &l[(i, k)] * &l[(j, k)]);
                }
                assert!((s - &a[(i, j)]).abs() < 1e-55);
            }
        }
    }

    #[test]
    fn cholesky_reports_indefinite_pivot() {
        let mut a = Matrix::identity(3, BITS);
        a[(2, 2)] = Float::with_val(BITS, -1);
        assert_eq!(cholesky(&a), Err(2));
    }

    #[test]
    fn triangular_solves_invert() {
        let l = cholesky(&hilbert(5)).unwrap();
        let b: Vec<Float> = (0..5).map(|i| Float::with_val(BITS, i as f64 - 1.5)).collect();
        let x = forward_substitute(&l, &b);
        let lx = l.mul_vec(&x);
        for (u, v) in lx.iter().zip(&b) {
            assert!(Float::with_val(BITS, u - v).abs() < 1e-50);
        }
        let y = back_substitute_transpose(&l, &b);
        let inv = lower_inverse(&l);
        let z = forward_substitute(&l, &b);
        let w = inv.mul_vec(&b);
        for (u, v) in z.iter().zip(&w) {
            assert!(Float::with_val(BITS, u - v).abs() < 1e-40);
        }
        assert_eq!(y.len(), 5);
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        // tridiag(-1, 2, -1): eigenvalues 2 - 2 cos(k pi/(n+1))
        let n = 7;
        let a = Matrix::from_fn(n, BITS, |i, j| {
            Float::with_val(BITS, if i == j { 2.0 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 })
        });
        let e = jacobi_eigen(&a, 50).unwrap();
        let pi = Float::with_val(BITS, rug::float::Constant::Pi);
        for (k, val) in e.values.iter().enumerate() {
            let arg = Float::with_val(BITS, &pi * (k + 1) as u32) / (n + 1) as u32;
            let exact = 2u32 - Float::with_val(BITS, arg.cos() * 2u32);
            assert!(Float::with_val(BITS, val - &exact).abs() < 1e-55, "k={k}");
            let av = a.mul_vec(&e.vectors[k]);
            for (x, y) in av.iter().zip(&e.vectors[k]) {
                assert!(Float::with_val(BITS, x - Float::with_val(BITS, y * val)).abs() < 1e-55);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = dot(&e.vectors[i], &e.vectors[j]);
                let target: f64 = if i == j { 1.0 } else { 0.0 };
                assert!(Float::with_val(BITS, d - target).abs() < 1e-55);
            }
        }
    }

    #[test]
    fn congruence_of_identity_is_inverse_gram() {
        let s = hilbert(4);
        let l = cholesky(&s).unwrap();
        let c = congruence_inverse(&l, &s);
        for i in 0..4 {
            for j in 0..4 {
                let target: f64 = if i == j { 1.0 } else { 0.0 };
                assert!(Float::with_val(BITS, &c[(i, j)] - target).abs() < 1e-50);
            }
        }
    }
}
