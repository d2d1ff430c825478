//! Small dense symmetric linear algebra.
//!
//! Matrices here are tiny (decision dimension rarely above ten), so the
//! eigen-decomposition is a cyclic Jacobi sweep and everything is stored as
//! row-major `Vec<f64>`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenpairs of a symmetric matrix, values ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenPairs {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix given as rows.
///
/// Only the upper triangle is read.
pub fn sym_eigen(rows: &[Vec<f64>]) -> Result<EigenPairs> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    let mut a = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimError {
                expected: n,
                got: row.len(),
            });
        }
        for j in 0..n {
            let v = if j >= i { row[j] } else { rows[j][i] };
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite entry at ({i},{j})"
                )));
            }
            a[i * n + j] = v;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    Ok(EigenPairs {
        values: order.iter().map(|&k| a[k * n + k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
            .collect(),
    })
}

/// Symmetric positive-definite matrix with cached spectrum and Cholesky factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>,
    eig: EigenPairs,
    /// Lower-triangular, row-major.
    chol: Vec<f64>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl TryFrom<Vec<Vec<f64>>> for SpdMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SpdMatrix::new(rows)
    }
}

impl From<SpdMatrix> for Vec<Vec<f64>> {
    fn from(s: SpdMatrix) -> Self {
        s.rows()
    }
}

impl SpdMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for i in 0..n {
            if rows[i].len() != n {
                return Err(Error::DimError {
                    expected: n,
                    got: rows[i].len(),
                });
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let eig = sym_eigen(&rows)?;
        if !(eig.min() > 1e-12 * eig.max()) || eig.max() <= 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "not positive definite (lambda_min = {:e})",
                eig.min()
            )));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        let chol = cholesky(&entries, n)?;
        Ok(SpdMatrix {
            dim: n,
            entries,
            eig,
            chol,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, a: f64) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { a } else { 0.0 }).collect())
            .collect();
        SpdMatrix::new(rows).expect("positive multiple of identity")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn eigen(&self) -> &EigenPairs {
        &self.eig
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.max()
    }

    /// Entry (i, j) of the lower factor A with A·Aᵀ = Σ.
    pub fn chol(&self, i: usize, j: usize) -> f64 {
        self.chol[i * self.dim + j]
    }

    /// A·z for the Cholesky factor A.
    pub fn chol_mul(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..=i).map(|j| self.chol[i * self.dim + j] * z[j]).sum())
            .collect()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.dim)
            .map(|row| dot(row, x))
            .collect()
    }

    /// True when Σ = λ₀·I exactly.
    pub fn isotropic(&self) -> Option<f64> {
        let a = self.get(0, 0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { a } else { 0.0 };
                if self.get(i, j) != want {
                    return None;
                }
            }
        }
        Some(a)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimError {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Σ⁻¹v by forward and back substitution.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let n = self.dim;
        let y = self.forward(v);
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| self.chol[k * n + i] * x[k]).sum();
            x[i] = (y[i] - s) / self.chol[i * n + i];
        }
        Ok(x)
    }

    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.chol[i * n + k] * y[k]).sum();
            y[i] = (v[i] - s) / self.chol[i * n + i];
        }
        y
    }
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if d <= 0.0 {
                    return Err(Error::InvalidMatrix("Cholesky pivot not positive".into()));
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

pub fn eig_decompose(s: &SpdMatrix) -> EigenPairs {
    s.eig.clone()
}

/// vᵀΣ⁻¹v, computed as ‖A⁻¹v‖² with the Cholesky factor.
pub fn inv_quad_form(s: &SpdMatrix, v: &[f64]) -> Result<f64> {
    s.check(v)?;
    let y = s.forward(v);
    Ok(dot(&y, &y))
}

pub fn quad_form(s: &SpdMatrix, x: &[f64]) -> Result<f64> {
    s.check(x)?;
    Ok(dot(x, &s.mul(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankOneMode {
    /// Z·Zᵀ + Y·Yᵀ
    Sum,
    /// Z·Zᵀ
    Single,
    /// Z·Zᵀ − Y·Yᵀ
    Diff,
}

/// Closed-form nonzero eigenvalues of Z·Zᵀ ± Y·Yᵀ, larger first.
pub fn rank_one_spectrum(z: &[f64], y: &[f64], mode: RankOneMode) -> Result<(f64, f64)> {
    if z.len() != y.len() {
        return Err(Error::DimError {
            expected: z.len(),
            got: y.len(),
        });
    }
    let zz = dot(z, z);
    let yy = dot(y, y);
    let yz = dot(y, z);
    match mode {
        RankOneMode::Single => {
            if zz == 0.0 {
                return Err(Error::DegenerateInput("zero z".into()));
            }
            Ok((zz, 0.0))
        }
        RankOneMode::Sum => {
            let root = ((yy - zz).powi(2) + 4.0 * yz * yz).sqrt();
            Ok(((yy + zz + root) / 2.0, (yy + zz - root) / 2.0))
        }
        RankOneMode::Diff => {
            let disc = ((zz + yy).powi(2) - 4.0 * yz * yz).max(0.0);
            let root = disc.sqrt();
            Ok(((zz - yy + root) / 2.0, (zz - yy - root) / 2.0))
        }
    }
}
