//! Small fixed-size vector and matrix helpers for d in {2, 3}.
//!
//! Vectors are `[f64; 3]` with only the first `d` entries active; the unused
//! entries stay exactly zero so dot products and norms work unchanged for
//! d = 2. Matrices follow the same convention.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn neg(a: &Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize the zero vector");
    scale(a, 1.0 / n)
}

/// Canonical basis vector `e_i`.
pub fn basis(i: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

/// Real symmetric d x d matrix stored densely in a 3 x 3 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub d: usize,
    pub a: [[f64; 3]; 3],
}

impl SymMat {
    pub fn zero(d: usize) -> Self {
        Self { d, a: [[0.0; 3]; 3] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zero(d);
        for i in 0..d {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn from_rows(d: usize, rows: &[[f64; 3]]) -> Self {
        let mut m = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = rows[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                m.a[i][j] *= s;
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.a[i][j] * self.a[i][j];
            }
        }
        s.sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.a[i][i]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                if (self.a[i][j] - self.a[j][i]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, x: &Vec3) -> Vec3 {
        let mut y = [0.0; 3];
        for i in 0..self.d {
            for j in 0..self.d {
                y[i] += self.a[i][j] * x[j];
            }
        }
        y
    }

    /// Eigenvalues and eigenvectors (columns) by cyclic Jacobi rotations.
    /// Exact enough for the d <= 3 matrices used here.
    pub fn eigen(&self) -> ([f64; 3], [[f64; 3]; 3]) {
        let d = self.d;
        let mut a = self.a;
        let mut v = [[0.0; 3]; 3];
        for i in 0..3 {
            v[i][i] = 1.0;
        }
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += a[p][q] * a[p][q];
                }
            }
            if off <= 1e-300 {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    if a[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k][p];
                        let vkq = v[k][q];
                        v[k][p] = c * vkp - s * vkq;
                        v[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut evals = [0.0; 3];
        for i in 0..d {
            evals[i] = a[i][i];
        }
        (evals, v)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (evals, _) = self.eigen();
        (0..self.d).map(|i| evals[i]).fold(f64::INFINITY, f64::min)
    }

    /// Symmetric PSD square root. Eigenvalues in [-tol, 0) are clamped to 0;
    /// anything below -tol is an error.
    pub fn sqrt_psd(&self, tol: f64) -> crate::errors::Result<SymMat> {
        let (evals, v) = self.eigen();
        let mut out = SymMat::zero(self.d);
        for idx in 0..self.d {
            let lam = evals[idx];
            if lam < -tol {
                return Err(crate::errors::Error::NotNonnegDefinite {
                    eigenvalue: lam,
                    tolerance: tol,
                });
            }
            let s = lam.max(0.0).sqrt();
            for i in 0..self.d {
                for j in 0..self.d {
                    out.a[i][j] += s * v[i][idx] * v[j][idx];
                }
            }
        }
        Ok(out)
    }
}

/// Complex d x d matrix stored densely in a 3 x 3 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat {
    pub d: usize,
    pub a: [[Complex64; 3]; 3],
}

impl CMat {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            a: [[Complex64::new(0.0, 0.0); 3]; 3],
        }
    }

    pub fn from_sym(m: &SymMat) -> Self {
        let mut out = Self::zero(m.d);
        for i in 0..m.d {
            for j in 0..m.d {
                out.a[i][j] = Complex64::new(m.a[i][j], 0.0);
            }
        }
        out
    }

    /// Outer product u v^T without conjugation.
    pub fn outer(d: usize, u: &[Complex64; 3], v: &[Complex64; 3]) -> Self {
        let mut out = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                out.a[i][j] = u[i] * v[j];
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                out.a[i][j] += other.a[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                out.a[i][j] -= other.a[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                out.a[i][j] *= s;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                out.a[i][j] = self.a[j][i];
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.a[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.d).map(|i| self.a[i][i]).sum()
    }

    pub fn max_entry_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.d {
            for j in 0..self.d {
                m = m.max(self.a[i][j].norm());
            }
        }
        m
    }

    /// Quadratic form x^T A y with real probe vectors.
    pub fn quad_form(&self, x: &Vec3, y: &Vec3) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.a[i][j] * x[i] * y[j];
            }
        }
        s
    }

    /// Projector sandwich P A Q with real projector matrices.
    pub fn sandwich(&self, p: &SymMat, q: &SymMat) -> Self {
        let d = self.d;
        let mut pa = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    s += p.a[i][l] * self.a[l][j];
                }
                pa.a[i][j] = s;
            }
        }
        let mut out = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    s += pa.a[i][l] * q.a[l][j];
                }
                out.a[i][j] = s;
            }
        }
        out
    }
}

/// Rank-one projector x x^T for a unit vector.
pub fn projector_onto(x: &Vec3, d: usize) -> SymMat {
    let mut m = SymMat::zero(d);
    for i in 0..d {
        for j in 0..d {
            m.a[i][j] = x[i] * x[j];
        }
    }
    m
}

/// Orthogonal complement projector I - x x^T.
pub fn projector_perp(x: &Vec3, d: usize) -> SymMat {
    let mut m = SymMat::identity(d);
    for i in 0..d {
        for j in 0..d {
            m.a[i][j] -= x[i] * x[j];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_eigen_2x2() {
        // [[1,2],[2,1]] has eigenvalues 3 and -1.
        let m = SymMat::from_rows(2, &[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0]]);
        let (evals, _) = m.eigen();
        let mut e = [evals[0], evals[1]];
        e.sort_by(f64::total_cmp);
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
        assert!((m.min_eigenvalue() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_roundtrip() {
        let m = SymMat::from_rows(3, &[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]);
        let r = m.sqrt_psd(1e-12).unwrap();
        // r * r should reproduce m.
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += r.a[i][l] * r.a[l][j];
                }
                assert!((s - m.a[i][j]).abs() < 1e-10, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let m = SymMat::from_rows(2, &[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0]]);
        assert!(m.sqrt_psd(1e-10).is_err());
    }

    #[test]
    fn rank_one_psd_sqrt() {
        // Rank-1 matrix stays PSD and the sqrt has the same range.
        let m = SymMat::from_rows(2, &[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        let r = m.sqrt_psd(1e-12).unwrap();
        let y = r.matvec(&[1.0, -1.0, 0.0]);
        assert!(norm(&y) < 1e-12);
    }
}
