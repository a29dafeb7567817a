//! Weighted least squares by Householder QR, with leverages.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative singular-value cutoff below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution<T> {
    pub coefficients: Vec<T>,
    /// Diagonal of W^½ X (XᵀWX)⁻¹ Xᵀ W^½.
    pub hat_diagonal: Vec<T>,
    /// Σ wᵢ (yᵢ − xᵢᵀβ)².
    pub residual_ss: T,
}

/// Minimize Σ wᵢ (yᵢ − xᵢᵀβ)² over β.
pub fn weighted_least_squares<T: Scalar>(
    design: &DenseMatrix<T>,
    response: &[T],
    weights: &[T],
) -> Result<WlsSolution<T>> {
    let (n, p) = (design.rows, design.cols);
    if response.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: response.len(),
        });
    }
    if weights.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: weights.len(),
        });
    }
    if p == 0 {
        return Err(Error::param("numerics", "design has no columns"));
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(Error::param("numerics", "weights must be finite and nonnegative"));
    }
    let positive = weights.iter().filter(|w| **w > T::zero()).count();
    if n < p || positive < p {
        return Err(Error::insufficient(
            "numerics",
            format!("{positive} positively weighted rows for {p} coefficients"),
        ));
    }

    let sqrt_w: Vec<T> = weights.iter().map(|w| w.sqrt()).collect();
    // column-major working copy of W^½ X
    let mut a = vec![T::zero(); n * p];
    for i in 0..n {
        for j in 0..p {
            a[j * n + i] = design.get(i, j) * sqrt_w[i];
        }
    }
    let mut b: Vec<T> = response.iter().zip(&sqrt_w).map(|(&y, &s)| y * s).collect();

    householder_qr(&mut a, &mut b, n, p);

    let mut r = vec![T::zero(); p * p];
    for j in 0..p {
        for i in 0..=j {
            r[i * p + j] = a[j * n + i];
        }
    }

    let sv = upper_singular_values(&r, p);
    let smax = sv.iter().copied().fold(T::zero(), T::max);
    let cutoff = T::lit(RANK_TOLERANCE) * smax;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    if smax <= T::zero() || rank < p {
        return Err(Error::RankDeficient { rank, cols: p });
    }

    let mut beta = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= r[i * p + k] * beta[k];
        }
        beta[i] = s / r[i * p + i];
    }

    let mut residual_ss = T::zero();
    for i in 0..n {
        let fit: T = design.row(i).iter().zip(&beta).map(|(&x, &c)| x * c).sum();
        let e = response[i] - fit;
        residual_ss += weights[i] * e * e;
    }

    let mut z = vec![T::zero(); p];
    let hat_diagonal = (0..n)
        .map(|i| {
            // Rᵀ z = W^½ xᵢ, hᵢ = ‖z‖²
            for j in 0..p {
                let mut s = design.get(i, j) * sqrt_w[i];
                for k in 0..j {
                    s -= r[k * p + j] * z[k];
                }
                z[j] = s / r[j * p + j];
            }
            z.iter().map(|&v| v * v).sum::<T>().min(T::one())
        })
        .collect();

    Ok(WlsSolution {
        coefficients: beta,
        hat_diagonal,
        residual_ss,
    })
}

/// In-place Householder triangularization of the column-major n×p matrix `a`,
/// applying the same reflections to `b`. R ends up in the upper triangle.
fn householder_qr<T: Scalar>(a: &mut [T], b: &mut [T], n: usize, p: usize) {
    let mut v = vec![T::zero(); n];
    for k in 0..p {
        let col = &a[k * n..(k + 1) * n];
        let scale = col[k..].iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if scale == T::zero() {
            continue;
        }
        let norm = scale * col[k..].iter().map(|&x| (x / scale) * (x / scale)).sum::<T>().sqrt();
        let alpha = if col[k] > T::zero() { -norm } else { norm };
        v[k..].copy_from_slice(&col[k..]);
        v[k] -= alpha;
        let vnorm2: T = v[k..].iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        for j in k..p {
            let c = &mut a[j * n..(j + 1) * n];
            let dot: T = v[k..].iter().zip(&c[k..]).map(|(&vi, &ci)| vi * ci).sum();
            let f = two * dot / vnorm2;
            for (ci, &vi) in c[k..].iter_mut().zip(&v[k..]) {
                *ci -= f * vi;
            }
        }
        let dot: T = v[k..].iter().zip(&b[k..]).map(|(&vi, &bi)| vi * bi).sum();
        let f = two * dot / vnorm2;
        for (bi, &vi) in b[k..].iter_mut().zip(&v[k..]) {
            *bi -= f * vi;
        }
    }
}

/// Singular values of a p×p row-major matrix by one-sided Jacobi.
fn upper_singular_values<T: Scalar>(r: &[T], p: usize) -> Vec<T> {
    // columns of R
    let mut u: Vec<Vec<T>> = (0..p).map(|j| (0..p).map(|i| r[i * p + j]).collect()).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha: T = u[i].iter().map(|&x| x * x).sum();
                let beta: T = u[j].iter().map(|&x| x * x).sum();
                let gamma: T = u[i].iter().zip(&u[j]).map(|(&x, &y)| x * y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let (x, y) = (u[i][k], u[j][k]);
                    u[i][k] = c * x - s * y;
                    u[j][k] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    u.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect()
}

/// Eigenvalue ratio of the centered 2×2 moment matrix below which a plane
/// fit is treated as rank deficient.
pub const PLANE_RANK_TOLERANCE: f64 = 1e-12;

/// Value at the origin of the weighted least-squares plane z ≈ a + b·u + c·v.
///
/// Works from weighted means and centered second moments in two passes,
/// which for three columns costs a fraction of a QR factorization. Fails
/// with `RankDeficient` when the weighted points are (nearly) collinear.
pub fn weighted_plane_at_origin<T: Scalar>(u: &[T], v: &[T], z: &[T], w: &[T]) -> Result<T> {
    let n = u.len();
    for len in [v.len(), z.len(), w.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
        return Err(Error::param("numerics", "weights must be finite and nonnegative"));
    }
    let positive = w.iter().filter(|x| **x > T::zero()).count();
    if positive < 3 {
        return Err(Error::insufficient(
            "numerics",
            format!("{positive} positively weighted rows for 3 coefficients"),
        ));
    }
    let (mut sw, mut su, mut sv, mut sz) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..n {
        sw += w[i];
        su += w[i] * u[i];
        sv += w[i] * v[i];
        sz += w[i] * z[i];
    }
    let (mu, mv, mz) = (su / sw, sv / sw, sz / sw);
    let (mut suu, mut suv, mut svv, mut suz, mut svz) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..n {
        let (du, dv, dz) = (u[i] - mu, v[i] - mv, z[i] - mz);
        let (wu, wv) = (w[i] * du, w[i] * dv);
        suu += wu * du;
        suv += wu * dv;
        svv += wv * dv;
        suz += wu * dz;
        svz += wv * dz;
    }
    let det = suu * svv - suv * suv;
    let half_trace = (suu + svv) * T::lit(0.5);
    let gap = ((suu - svv) * (suu - svv) * T::lit(0.25) + suv * suv).sqrt();
    let (big, small) = (half_trace + gap, det / (half_trace + gap));
    if !(big > T::zero()) || small <= T::lit(PLANE_RANK_TOLERANCE) * big {
        let rank = if big > T::zero() { 2 } else { 1 };
        return Err(Error::RankDeficient { rank, cols: 3 });
    }
    let b = (svv * suz - suv * svz) / det;
    let c = (suu * svz - suv * suz) / det;
    Ok(mz - b * mu - c * mv)
}
