//! Natural cubic smoothing splines calibrated by effective degrees of freedom.
//!
//! The penalized problem Σ wᵢ (yᵢ − f(xᵢ))² + λ ∫ f''² is solved in the
//! Reinsch form on the distinct abscissae: with `Q` the second-difference
//! operator and `R` the tridiagonal Gram matrix,
//! `(R + λ QᵀW⁻¹Q) γ = Qᵀȳ` and `g = ȳ − λ W⁻¹ Q γ`. The system is
//! pentadiagonal, and its inverse is only needed on the band to obtain the
//! smoother trace, so calibration is linear in the number of knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Target-df tolerance for the λ bisection.
const DF_TOLERANCE: f64 = 1e-6;

/// A fitted natural cubic spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SmoothFunction<T: Scalar> {
    pub knots: Vec<T>,
    pub values: Vec<T>,
    /// f'' at each knot; zero at both ends.
    pub second_derivatives: Vec<T>,
    /// Infinite when the fit is the linear (λ → ∞) limit.
    pub lambda: T,
    pub effective_df: T,
}

impl<T: Scalar> SmoothFunction<T> {
    /// Evaluate at `t`; linear beyond the boundary knots.
    pub fn evaluate(&self, t: T) -> T {
        let k = &self.knots;
        let g = &self.values;
        let gam = &self.second_derivatives;
        let m = k.len();
        let six = T::lit(6.0);
        if t <= k[0] {
            let h = k[1] - k[0];
            let slope = (g[1] - g[0]) / h - h * gam[1] / six;
            return g[0] + slope * (t - k[0]);
        }
        if t >= k[m - 1] {
            let h = k[m - 1] - k[m - 2];
            let slope = (g[m - 1] - g[m - 2]) / h + h * gam[m - 2] / six;
            return g[m - 1] + slope * (t - k[m - 1]);
        }
        // k[i] <= t < k[i + 1]
        let i = k.partition_point(|&x| x <= t) - 1;
        if t == k[i] {
            return g[i];
        }
        let h = k[i + 1] - k[i];
        let a = t - k[i];
        let b = k[i + 1] - t;
        (a * g[i + 1] + b * g[i]) / h
            - a * b / six * ((T::one() + a / h) * gam[i + 1] + (T::one() + b / h) * gam[i])
    }

    /// Same curve moved vertically by `c`.
    pub fn shifted(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v += c;
        }
        out
    }

    pub fn zero(knots: Vec<T>) -> Self {
        let m = knots.len();
        Self {
            knots,
            values: vec![T::zero(); m],
            second_derivatives: vec![T::zero(); m],
            lambda: T::zero(),
            effective_df: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
enum Penalty<T: Scalar> {
    Finite { lambda: T, factor: BandFactor<T> },
    /// λ = ∞: weighted straight-line fit.
    Linear,
}

/// LDLᵀ factor of the pentadiagonal Reinsch matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct BandFactor<T: Scalar> {
    d: Vec<T>,
    l1: Vec<T>,
    l2: Vec<T>,
}

/// Linear smoother for a fixed design: distinct abscissae, their weights and λ.
///
/// Calibrating once and reusing the smoother lets backfitting sweep without
/// re-solving for λ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SplineSmoother<T: Scalar> {
    knots: Vec<T>,
    knot_weights: Vec<T>,
    /// Σ wᵢ² per knot; needed for observation-level variances.
    knot_sq_weights: Vec<T>,
    /// Knot index of each observation, `None` for zero-weight observations
    /// at abscissae that carry no positive weight.
    #[serde(skip)]
    membership: Vec<Option<usize>>,
    #[serde(skip)]
    obs_weights: Vec<T>,
    penalty: Penalty<T>,
    effective_df: T,
}

struct Band<T> {
    h: Vec<T>,
}

impl<T: Scalar> Band<T> {
    fn new(knots: &[T]) -> Self {
        Self {
            h: knots.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }

    /// Nonzeros (a, b, e) of column `c` of Q, at knots c, c+1, c+2.
    fn q(&self, c: usize) -> (T, T, T) {
        let (h0, h1) = (self.h[c], self.h[c + 1]);
        (T::one() / h0, -T::one() / h0 - T::one() / h1, T::one() / h1)
    }

    /// Diagonals (0, 1, 2) of QᵀW⁻¹Q.
    fn qtwq(&self, inv_w: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let n = self.h.len() - 1;
        let mut d0 = vec![T::zero(); n];
        let mut d1 = vec![T::zero(); n];
        let mut d2 = vec![T::zero(); n];
        for c in 0..n {
            let (a, b, e) = self.q(c);
            d0[c] = inv_w[c] * a * a + inv_w[c + 1] * b * b + inv_w[c + 2] * e * e;
            if c + 1 < n {
                let (a1, b1, _) = self.q(c + 1);
                d1[c] = inv_w[c + 1] * b * a1 + inv_w[c + 2] * e * b1;
            }
            if c + 2 < n {
                let (a2, _, _) = self.q(c + 2);
                d2[c] = inv_w[c + 2] * e * a2;
            }
        }
        (d0, d1, d2)
    }

    fn factor(&self, lambda: T, m: &(Vec<T>, Vec<T>, Vec<T>)) -> BandFactor<T> {
        let n = self.h.len() - 1;
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        let b0: Vec<T> = (0..n).map(|c| (self.h[c] + self.h[c + 1]) / three + lambda * m.0[c]).collect();
        let b1: Vec<T> = (0..n)
            .map(|c| if c + 1 < n { self.h[c + 1] / six + lambda * m.1[c] } else { T::zero() })
            .collect();
        let b2: Vec<T> = (0..n).map(|c| lambda * m.2[c]).collect();

        let mut d = vec![T::zero(); n];
        let mut l1 = vec![T::zero(); n]; // l1[i] = L[i+1][i]
        let mut l2 = vec![T::zero(); n]; // l2[i] = L[i+2][i]
        for i in 0..n {
            let mut di = b0[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            d[i] = di;
            if i + 1 < n {
                let mut v = b1[i];
                if i >= 1 {
                    v -= l2[i - 1] * l1[i - 1] * d[i - 1];
                }
                l1[i] = v / di;
            }
            if i + 2 < n {
                l2[i] = b2[i] / di;
            }
        }
        BandFactor { d, l1, l2 }
    }
}

impl<T: Scalar> BandFactor<T> {
    fn solve(&self, rhs: &mut [T]) {
        let n = rhs.len();
        for i in 0..n {
            if i >= 1 {
                rhs[i] = rhs[i] - self.l1[i - 1] * rhs[i - 1];
            }
            if i >= 2 {
                rhs[i] = rhs[i] - self.l2[i - 2] * rhs[i - 2];
            }
        }
        for i in 0..n {
            rhs[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                rhs[i] = rhs[i] - self.l1[i] * rhs[i + 1];
            }
            if i + 2 < n {
                rhs[i] = rhs[i] - self.l2[i] * rhs[i + 2];
            }
        }
    }

    /// tr(B⁻¹ M) for banded symmetric M, using only the band of B⁻¹.
    fn trace_inverse_times(&self, m: &(Vec<T>, Vec<T>, Vec<T>)) -> T {
        let n = self.d.len();
        let mut s0 = vec![T::zero(); n];
        let mut s1 = vec![T::zero(); n]; // Σ[i][i+1]
        let mut s2 = vec![T::zero(); n]; // Σ[i][i+2]
        for i in (0..n).rev() {
            let a = if i + 1 < n { self.l1[i] } else { T::zero() };
            let b = if i + 2 < n { self.l2[i] } else { T::zero() };
            let s11 = if i + 1 < n { s0[i + 1] } else { T::zero() };
            let s12 = if i + 2 < n { s1[i + 1] } else { T::zero() };
            let s22 = if i + 2 < n { s0[i + 2] } else { T::zero() };
            if i + 2 < n {
                s2[i] = -a * s12 - b * s22;
            }
            if i + 1 < n {
                s1[i] = -a * s11 - b * s12;
            }
            s0[i] = T::one() / self.d[i] - a * s1[i] - b * s2[i];
        }
        let two = T::lit(2.0);
        (0..n).map(|i| s0[i] * m.0[i] + two * s1[i] * m.1[i] + two * s2[i] * m.2[i]).sum()
    }
}

impl<T: Scalar> SplineSmoother<T> {
    /// Choose λ so the smoother trace equals `target_df`.
    ///
    /// `target_df` may range over [2, m] with m the number of distinct
    /// positively weighted abscissae; 2 gives the straight-line fit and m
    /// interpolation of the group means.
    pub fn calibrate(x: &[T], weights: &[T], target_df: T) -> Result<Self> {
        if x.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: weights.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("numerics", "abscissae must be finite"));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::param("numerics", "weights must be finite and nonnegative"));
        }
        let mut order: Vec<usize> = (0..x.len()).filter(|&i| weights[i] > T::zero()).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite"));
        let mut knots: Vec<T> = Vec::new();
        let mut knot_weights: Vec<T> = Vec::new();
        let mut knot_sq_weights: Vec<T> = Vec::new();
        for &i in &order {
            if knots.last() != Some(&x[i]) {
                knots.push(x[i]);
                knot_weights.push(T::zero());
                knot_sq_weights.push(T::zero());
            }
            *knot_weights.last_mut().unwrap() += weights[i];
            *knot_sq_weights.last_mut().unwrap() += weights[i] * weights[i];
        }
        let m = knots.len();
        if m < 4 {
            return Err(Error::insufficient(
                "numerics",
                format!("smoothing spline needs at least 4 distinct abscissae, got {m}"),
            ));
        }
        let mf = T::from_count(m);
        if !target_df.is_finite() || target_df < T::lit(2.0) || target_df > mf {
            return Err(Error::param(
                "numerics",
                format!("target df {target_df} outside [2, {m}]"),
            ));
        }
        let membership = x
            .iter()
            .map(|v| knots.binary_search_by(|k| k.partial_cmp(v).expect("finite")).ok())
            .collect();

        let mut smoother = Self {
            knots,
            knot_weights,
            knot_sq_weights,
            membership,
            obs_weights: weights.to_vec(),
            penalty: Penalty::Linear,
            effective_df: T::lit(2.0),
        };
        if target_df == T::lit(2.0) {
            return Ok(smoother);
        }

        let band = Band::new(&smoother.knots);
        let inv_w: Vec<T> = smoother.knot_weights.iter().map(|&w| T::one() / w).collect();
        let qwq = band.qtwq(&inv_w);
        let df_at = |lambda: T| -> (T, BandFactor<T>) {
            let f = band.factor(lambda, &qwq);
            (mf - lambda * f.trace_inverse_times(&qwq), f)
        };
        if target_df == mf {
            let (df, factor) = df_at(T::zero());
            smoother.penalty = Penalty::Finite {
                lambda: T::zero(),
                factor,
            };
            smoother.effective_df = df;
            return Ok(smoother);
        }

        let range = *smoother.knots.last().unwrap() - smoother.knots[0];
        let mean_w = smoother.knot_weights.iter().copied().sum::<T>() / mf;
        let scale = range * range * range * mean_w;
        let tol = T::lit(DF_TOLERANCE);
        let mut lo = (T::lit(1e-8) * scale).ln();
        let mut hi = (T::lit(1e8) * scale).ln();
        let step = T::lit(1e4_f64.ln());
        // widen until the bracket holds the target; df decreases in λ
        for _ in 0..20 {
            if df_at(lo.exp()).0 >= target_df {
                break;
            }
            lo -= step;
        }
        for _ in 0..20 {
            if df_at(hi.exp()).0 <= target_df {
                break;
            }
            hi += step;
        }
        let mut best = None;
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            let (df, factor) = df_at(mid.exp());
            let done = (df - target_df).abs() <= tol || (hi - lo) < T::epsilon() * T::lit(16.0);
            best = Some((mid.exp(), df, factor));
            if done {
                break;
            }
            if df > target_df {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lambda, df, factor) = best.expect("at least one bisection step");
        smoother.penalty = Penalty::Finite { lambda, factor };
        smoother.effective_df = df;
        Ok(smoother)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn knot_weights(&self) -> &[T] {
        &self.knot_weights
    }

    pub fn knot_sq_weights(&self) -> &[T] {
        &self.knot_sq_weights
    }

    pub fn lambda(&self) -> T {
        match &self.penalty {
            Penalty::Finite { lambda, .. } => *lambda,
            Penalty::Linear => T::infinity(),
        }
    }

    pub fn effective_df(&self) -> T {
        self.effective_df
    }

    /// Weighted group means of `y` at the knots.
    fn knot_means(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.membership.len() {
            return Err(Error::LengthMismatch {
                left: self.membership.len(),
                right: y.len(),
            });
        }
        let mut sums = vec![T::zero(); self.knots.len()];
        for ((k, &w), &v) in self.membership.iter().zip(&self.obs_weights).zip(y) {
            if let Some(k) = k {
                sums[*k] += w * v;
            }
        }
        Ok(sums.iter().zip(&self.knot_weights).map(|(&s, &w)| s / w).collect())
    }

    /// Smooth observation values `y` (aligned with the calibration abscissae).
    pub fn smooth(&self, y: &[T]) -> Result<SmoothFunction<T>> {
        let ybar = self.knot_means(y)?;
        Ok(self.smooth_knot_values(&ybar))
    }

    /// Smooth values already averaged per knot.
    pub fn smooth_knot_values(&self, ybar: &[T]) -> SmoothFunction<T> {
        let m = self.knots.len();
        match &self.penalty {
            Penalty::Linear => {
                let w = &self.knot_weights;
                let sw: T = w.iter().copied().sum();
                let mx = w.iter().zip(&self.knots).map(|(&a, &b)| a * b).sum::<T>() / sw;
                let my = w.iter().zip(ybar).map(|(&a, &b)| a * b).sum::<T>() / sw;
                let mut sxx = T::zero();
                let mut sxy = T::zero();
                for k in 0..m {
                    let dx = self.knots[k] - mx;
                    sxx += w[k] * dx * dx;
                    sxy += w[k] * dx * (ybar[k] - my);
                }
                let slope = sxy / sxx;
                SmoothFunction {
                    knots: self.knots.clone(),
                    values: self.knots.iter().map(|&t| my + slope * (t - mx)).collect(),
                    second_derivatives: vec![T::zero(); m],
                    lambda: T::infinity(),
                    effective_df: self.effective_df,
                }
            }
            Penalty::Finite { lambda, factor } => {
                let band = Band::new(&self.knots);
                let mut gamma: Vec<T> = (0..m - 2)
                    .map(|c| {
                        let (a, b, e) = band.q(c);
                        a * ybar[c] + b * ybar[c + 1] + e * ybar[c + 2]
                    })
                    .collect();
                factor.solve(&mut gamma);
                let mut values = ybar.to_vec();
                for (c, &gc) in gamma.iter().enumerate() {
                    let (a, b, e) = band.q(c);
                    values[c] -= *lambda * a * gc / self.knot_weights[c];
                    values[c + 1] -= *lambda * b * gc / self.knot_weights[c + 1];
                    values[c + 2] -= *lambda * e * gc / self.knot_weights[c + 2];
                }
                let mut second_derivatives = vec![T::zero(); m];
                second_derivatives[1..m - 1].copy_from_slice(&gamma);
                SmoothFunction {
                    knots: self.knots.clone(),
                    values,
                    second_derivatives,
                    lambda: *lambda,
                    effective_df: self.effective_df,
                }
            }
        }
    }

    /// Spline for each unit knot vector: entry k is the response to e_k.
    pub fn basis(&self) -> Vec<SmoothFunction<T>> {
        let m = self.knots.len();
        (0..m)
            .map(|k| {
                let mut e = vec![T::zero(); m];
                e[k] = T::one();
                self.smooth_knot_values(&e)
            })
            .collect()
    }
}

/// Fit a natural cubic smoothing spline with `target_df` effective degrees of freedom.
pub fn fit_smoothing_spline<T: Scalar>(x: &[T], y: &[T], weights: &[T], target_df: T) -> Result<SmoothFunction<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    SplineSmoother::calibrate(x, weights, target_df)?.smooth(y)
}
