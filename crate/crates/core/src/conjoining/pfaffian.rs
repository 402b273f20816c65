//! Dense matrices over GF(P): Pfaffian, determinant and inverse.

use thiserror::Error;

use super::field::Fp;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PfaffianError {
    #[error("Pfaffian of odd order {0}")]
    OddOrder(usize),
    #[error("matrix is not skew-symmetric at ({0}, {1})")]
    NotSkew(usize, usize),
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    data: Vec<Fp>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![Fp::ZERO; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<Fp>]) -> Matrix {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fp {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: Fp) {
        self.data[i * self.n + j] = x;
    }

    /// Adds `x` at (i, j) and `-x` at (j, i).
    #[inline]
    pub fn add_skew(&mut self, i: usize, j: usize, x: Fp) {
        let n = self.n;
        self.data[i * n + j] += x;
        self.data[j * n + i] -= x;
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Fp::ZERO);
    }

    pub fn is_skew(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in i..self.n {
                if self.get(i, j) != -self.get(j, i) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.n;
        for c in 0..n {
            self.data.swap(a * n + c, b * n + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.n;
        for r in 0..n {
            self.data.swap(r * n + a, r * n + b);
        }
    }
}

/// Pfaffian of a skew-symmetric matrix of even order.
pub fn pfaffian(a: &Matrix) -> Result<Fp, PfaffianError> {
    if a.n % 2 == 1 {
        return Err(PfaffianError::OddOrder(a.n));
    }
    if let Some((i, j)) = a.is_skew() {
        return Err(PfaffianError::NotSkew(i, j));
    }
    let mut work = a.clone();
    Ok(pfaffian_in_place(&mut work))
}

/// Skew-symmetric elimination; destroys `a`. The caller guarantees shape.
pub(crate) fn pfaffian_in_place(a: &mut Matrix) -> Fp {
    let n = a.n;
    debug_assert!(n % 2 == 0);
    let mut pf = Fp::ONE;
    let mut c0 = vec![Fp::ZERO; n];
    let mut c1 = vec![Fp::ZERO; n];
    let mut k = 0;
    while k < n {
        let Some(p) = (k + 1..n).find(|&j| !a.get(k, j).is_zero()) else {
            return Fp::ZERO;
        };
        if p != k + 1 {
            // Simultaneous row/column swap flips the Pfaffian's sign.
            a.swap_rows(k + 1, p);
            a.swap_cols(k + 1, p);
            pf = -pf;
        }
        let pivot = a.get(k, k + 1);
        pf *= pivot;
        let inv = pivot.inv();
        for j in k + 2..n {
            c0[j] = a.get(k, j) * inv;
            c1[j] = a.get(k + 1, j);
        }
        for i in k + 2..n {
            let (x0, x1) = (a.get(k, i) * inv, c1[i]);
            if x0.is_zero() && x1.is_zero() {
                continue;
            }
            let row = i * n;
            for j in i + 1..n {
                // D[i][j] += (c1_i c0_j - c0_i c1_j) / pivot
                let delta = x1 * c0[j] - x0 * c1[j];
                a.data[row + j] += delta;
                a.data[j * n + i] -= delta;
            }
        }
        k += 2;
    }
    pf
}

/// Determinant by Gaussian elimination.
pub fn determinant(a: &Matrix) -> Fp {
    let n = a.n;
    let mut m = a.clone();
    let mut det = Fp::ONE;
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
            return Fp::ZERO;
        };
        if p != col {
            m.swap_rows(p, col);
            det = -det;
        }
        let pivot = m.get(col, col);
        det *= pivot;
        let inv = pivot.inv();
        for r in col + 1..n {
            let f = m.get(r, col) * inv;
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = m.get(r, c) - f * m.get(col, c);
                m.set(r, c, v);
            }
        }
    }
    det
}

/// Inverse by Gauss–Jordan elimination, `None` when singular.
pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.n;
    let mut m = a.clone();
    let mut inv = Matrix::zeros(n);
    for i in 0..n {
        inv.set(i, i, Fp::ONE);
    }
    for col in 0..n {
        let p = (col..n).find(|&r| !m.get(r, col).is_zero())?;
        m.swap_rows(p, col);
        inv.swap_rows(p, col);
        let f = m.get(col, col).inv();
        for c in 0..n {
            m.set(col, c, m.get(col, c) * f);
            inv.set(col, c, inv.get(col, c) * f);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let g = m.get(r, col);
            if g.is_zero() {
                continue;
            }
            for c in 0..n {
                let v = m.get(r, c) - g * m.get(col, c);
                m.set(r, c, v);
                let w = inv.get(r, c) - g * inv.get(col, c);
                inv.set(r, c, w);
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.add_skew(i, j, Fp::random_nonzero(rng));
            }
        }
        m
    }

    #[test]
    fn small_closed_forms() {
        let a = Fp::new(17);
        let m = Matrix::from_rows(&[vec![Fp::ZERO, a], vec![-a, Fp::ZERO]]);
        assert_eq!(pfaffian(&m).unwrap(), a);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_skew(4, &mut rng);
        let g = |i: usize, j: usize| m.get(i - 1, j - 1);
        let expect = g(1, 2) * g(3, 4) - g(1, 3) * g(2, 4) + g(1, 4) * g(2, 3);
        assert_eq!(pfaffian(&m).unwrap(), expect);
    }

    #[test]
    fn shape_errors() {
        assert_eq!(pfaffian(&Matrix::zeros(3)), Err(PfaffianError::OddOrder(3)));
        let mut m = Matrix::zeros(2);
        m.set(0, 1, Fp::ONE);
        assert_eq!(pfaffian(&m), Err(PfaffianError::NotSkew(0, 1)));
        assert_eq!(pfaffian(&Matrix::zeros(0)).unwrap(), Fp::ONE);
    }

    #[test]
    fn pivoting_needed() {
        // A[0][1] = 0 forces a swap.
        let mut m = Matrix::zeros(4);
        m.add_skew(0, 2, Fp::new(2));
        m.add_skew(1, 3, Fp::new(3));
        // Pf = -a13 a24 in 1-based indices.
        assert_eq!(pfaffian(&m).unwrap(), -Fp::new(6));
    }

    #[test]
    fn square_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 4, 6, 8] {
            let m = random_skew(n, &mut rng);
            let pf = pfaffian(&m).unwrap();
            assert_eq!(pf * pf, determinant(&m));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_skew(6, &mut rng);
        let inv = inverse(&m).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mut s = Fp::ZERO;
                for t in 0..6 {
                    s += m.get(i, t) * inv.get(t, j);
                }
                assert_eq!(s, if i == j { Fp::ONE } else { Fp::ZERO });
            }
        }
        assert!(inverse(&Matrix::zeros(2)).is_none());
    }
}
