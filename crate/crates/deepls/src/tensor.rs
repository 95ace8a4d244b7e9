//! Small symmetric tensors for permeability fields (dimension 2 or 3).

use crate::error::{Error, Result};

/// Dense symmetric `nd x nd` tensor, `nd <= 3`. Stored row-major in a
/// fixed-size buffer; entries beyond `nd` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    pub nd: usize,
    data: [f64; 9],
}

impl SymTensor {
    pub fn zeros(nd: usize) -> Self {
        assert!((1..=3).contains(&nd));
        SymTensor { nd, data: [0.0; 9] }
    }

    pub fn identity(nd: usize) -> Self {
        let mut t = Self::zeros(nd);
        for i in 0..nd {
            t.set(i, i, 1.0);
        }
        t
    }

    /// `k * I`.
    pub fn scalar(nd: usize, k: f64) -> Self {
        let mut t = Self::zeros(nd);
        for i in 0..nd {
            t.set(i, i, k);
        }
        t
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut t = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.set(i, i, d);
        }
        t
    }

    /// Build from a full row-major matrix, enforcing symmetry.
    pub fn from_rows(nd: usize, rows: &[f64]) -> Result<Self> {
        assert_eq!(rows.len(), nd * nd);
        let mut t = Self::zeros(nd);
        for i in 0..nd {
            for j in 0..nd {
                let a = rows[i * nd + j];
                let b = rows[j * nd + i];
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Config(format!(
                        "permeability tensor not symmetric: K[{i}][{j}]={a} vs K[{j}][{i}]={b}"
                    )));
                }
                t.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * 3 + j] = v;
        self.data[j * 3 + i] = v;
    }

    /// y = A x (first `nd` components of the inputs are used).
    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..self.nd {
            let mut s = 0.0;
            for j in 0..self.nd {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// Quadratic form `z . A z`.
    pub fn quad_form(&self, z: &[f64; 3]) -> f64 {
        let az = self.apply(z);
        (0..self.nd).map(|i| z[i] * az[i]).sum()
    }

    fn det(&self) -> f64 {
        match self.nd {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                let m = |i, j| self.get(i, j);
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
        }
    }

    /// Inverse via the adjugate (dimensions are at most 3).
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return Err(Error::Config("singular permeability tensor".into()));
        }
        let mut inv = Self::zeros(self.nd);
        match self.nd {
            1 => inv.set(0, 0, 1.0 / d),
            2 => {
                inv.set(0, 0, self.get(1, 1) / d);
                inv.set(1, 1, self.get(0, 0) / d);
                inv.set(0, 1, -self.get(0, 1) / d);
            }
            _ => {
                let m = |i, j| self.get(i, j);
                for i in 0..3 {
                    for j in i..3 {
                        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                        let (c, e) = ((j + 1) % 3, (j + 2) % 3);
                        // cofactor transpose; symmetric input keeps this symmetric
                        let cof = m(c, a) * m(e, b) - m(c, b) * m(e, a);
                        inv.set(i, j, cof / d);
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Eigendecomposition by cyclic Jacobi rotations. Returns (eigenvalues, eigenvectors
    /// as columns).
    pub fn eigen(&self) -> ([f64; 3], [[f64; 3]; 3]) {
        let n = self.nd;
        let mut a = [[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = self.get(i, j);
            }
        }
        let mut v = [[0.0f64; 3]; 3];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _ in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut().take(n) {
                        let (vkp, vkq) = (row[p], row[q]);
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut eig = [0.0; 3];
        for i in 0..n {
            eig[i] = a[i][i];
        }
        (eig, v)
    }

    /// SPD principal square root.
    pub fn sqrt_spd(&self) -> Result<Self> {
        let (eig, v) = self.eigen();
        let mut s = Self::zeros(self.nd);
        for i in 0..self.nd {
            if eig[i] <= 0.0 {
                return Err(Error::Config(format!(
                    "permeability tensor not positive definite (eigenvalue {})",
                    eig[i]
                )));
            }
            for r in 0..self.nd {
                for c in r..self.nd {
                    let cur = s.get(r, c);
                    s.set(r, c, cur + eig[i].sqrt() * v[r][i] * v[c][i]);
                }
            }
        }
        Ok(s)
    }
}
