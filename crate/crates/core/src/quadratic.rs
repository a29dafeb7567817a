//! Quadratic response surface in the two ranks, without the r·h interaction
//! unless explicitly requested.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{weighted_least_squares, DenseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticOptions {
    /// Add the r·h term. Off by default: it is not significant on the
    /// seasons this model was built for and does not improve training RMSE.
    pub interaction: bool,
}

/// M̂ = β₀ + β_r r + β_h h + β_rr r² + β_hh h² (+ β_rh r h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QuadraticFit<T: Scalar> {
    pub beta0: T,
    pub beta_r: T,
    pub beta_h: T,
    pub beta_rr: T,
    pub beta_hh: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_rh: Option<T>,
    /// sqrt(RSS / (n − p)).
    pub sigma_hat: T,
    pub n_train: usize,
    /// Leverages of the training games; not persisted.
    #[serde(skip)]
    pub hat_diagonal: Vec<T>,
}

impl<T: Scalar> QuadraticFit<T> {
    /// Fit with given coefficients and no training metadata.
    pub fn from_coefficients(beta0: T, beta_r: T, beta_h: T, beta_rr: T, beta_hh: T) -> Self {
        Self {
            beta0,
            beta_r,
            beta_h,
            beta_rr,
            beta_hh,
            beta_rh: None,
            sigma_hat: T::zero(),
            n_train: 0,
            hat_diagonal: Vec::new(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        if self.beta_rh.is_some() {
            6
        } else {
            5
        }
    }

    pub fn predict(&self, road_rank: T, home_rank: T) -> T {
        predict_quadratic(self, road_rank, home_rank)
    }

    /// β_r r + β_rr r², the road-rank part of the surface.
    pub fn road_effect(&self, r: T) -> T {
        self.beta_r * r + self.beta_rr * r * r
    }

    /// β_h h + β_hh h², the home-rank part of the surface.
    pub fn home_effect(&self, h: T) -> T {
        self.beta_h * h + self.beta_hh * h * h
    }
}

fn mean_sd<T: Scalar>(v: &[T]) -> (T, T) {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

pub fn fit_quadratic<T: Scalar>(train: &Dataset) -> Result<QuadraticFit<T>> {
    fit_quadratic_with(train, QuadraticOptions::default())
}

pub fn fit_quadratic_with<T: Scalar>(train: &Dataset, options: QuadraticOptions) -> Result<QuadraticFit<T>> {
    let p = if options.interaction { 6 } else { 5 };
    let n = train.len();
    if n <= p {
        return Err(Error::insufficient(
            "quadratic",
            format!("{n} games for {p} coefficients; need at least {}", p + 1),
        ));
    }
    let r = train.road_ranks::<T>();
    let h = train.home_ranks::<T>();
    let y = train.movs::<T>();
    let (mr, sr) = mean_sd(&r);
    let (mh, sh) = mean_sd(&h);
    if sr == T::zero() || sh == T::zero() {
        return Err(Error::Fit {
            module: "quadratic",
            message: "every game shares one road or home rank; design is rank deficient".into(),
        });
    }

    // standardized predictors keep r² ~ 1e5 from wrecking the conditioning
    let design = DenseMatrix::from_fn(n, p, |i, j| {
        let zr = (r[i] - mr) / sr;
        let zh = (h[i] - mh) / sh;
        match j {
            0 => T::one(),
            1 => zr,
            2 => zh,
            3 => zr * zr,
            4 => zh * zh,
            _ => zr * zh,
        }
    });
    let sol = weighted_least_squares(&design, &y, &vec![T::one(); n]).map_err(|e| match e {
        Error::RankDeficient { rank, cols } => Error::Fit {
            module: "quadratic",
            message: format!("design of (1, r, h, r², h²) has numerical rank {rank} < {cols}"),
        },
        other => other,
    })?;
    let c = &sol.coefficients;
    let two = T::lit(2.0);

    // back to raw-rank coefficients
    let beta_rr = c[3] / (sr * sr);
    let beta_hh = c[4] / (sh * sh);
    let mut beta_r = c[1] / sr - two * c[3] * mr / (sr * sr);
    let mut beta_h = c[2] / sh - two * c[4] * mh / (sh * sh);
    let mut beta0 = c[0] - c[1] * mr / sr - c[2] * mh / sh + c[3] * mr * mr / (sr * sr) + c[4] * mh * mh / (sh * sh);
    let beta_rh = if options.interaction {
        let g = c[5] / (sr * sh);
        beta_r -= g * mh;
        beta_h -= g * mr;
        beta0 += g * mr * mh;
        Some(g)
    } else {
        None
    };

    Ok(QuadraticFit {
        beta0,
        beta_r,
        beta_h,
        beta_rr,
        beta_hh,
        beta_rh,
        sigma_hat: (sol.residual_ss / T::from_count(n - p)).sqrt(),
        n_train: n,
        hat_diagonal: sol.hat_diagonal,
    })
}

pub fn predict_quadratic<T: Scalar>(fit: &QuadraticFit<T>, road_rank: T, home_rank: T) -> T {
    let (r, h) = (road_rank, home_rank);
    let base = fit.beta0 + fit.beta_r * r + fit.beta_h * h + fit.beta_rr * r * r + fit.beta_hh * h * h;
    match fit.beta_rh {
        Some(g) => base + g * r * h,
        None => base,
    }
}

/// eᵢ / (σ̂ √(1 − hᵢ)). Zero residuals map to zero regardless of σ̂.
pub fn studentize<T: Scalar>(residuals: &[T], leverages: &[T], sigma_hat: T) -> Result<Vec<T>> {
    if residuals.len() != leverages.len() {
        return Err(Error::LengthMismatch {
            left: residuals.len(),
            right: leverages.len(),
        });
    }
    residuals
        .iter()
        .zip(leverages)
        .enumerate()
        .map(|(i, (&e, &h))| {
            if h >= T::one() - T::lit(1e-12) {
                return Err(Error::UnitLeverage { index: i });
            }
            if e == T::zero() {
                return Ok(T::zero());
            }
            Ok(e / (sigma_hat * (T::one() - h).sqrt()))
        })
        .collect()
}

/// Internally studentized residuals of the training games `fit` was produced from.
pub fn studentized_residuals<T: Scalar>(fit: &QuadraticFit<T>, train: &Dataset) -> Result<Vec<T>> {
    if fit.hat_diagonal.len() != train.len() {
        return Err(Error::param(
            "quadratic",
            format!(
                "fit carries {} leverages but the dataset has {} games; refit on this dataset",
                fit.hat_diagonal.len(),
                train.len()
            ),
        ));
    }
    studentize(&residuals(fit, train), &fit.hat_diagonal, fit.sigma_hat)
}

pub fn residuals<T: Scalar>(fit: &QuadraticFit<T>, data: &Dataset) -> Vec<T> {
    data.games()
        .iter()
        .map(|g| {
            let r = T::from_count(g.road_rank as usize);
            let h = T::from_count(g.home_rank as usize);
            T::from_i32(g.mov()).expect("mov") - predict_quadratic(fit, r, h)
        })
        .collect()
}

/// One row of the residual diagnostics export.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ResidualRow<T: Scalar> {
    pub road_rank: u32,
    pub home_rank: u32,
    pub fitted: T,
    pub residual: T,
    pub studentized: T,
}

pub fn residual_diagnostics<T: Scalar>(fit: &QuadraticFit<T>, train: &Dataset) -> Result<Vec<ResidualRow<T>>> {
    let stud = studentized_residuals(fit, train)?;
    let res = residuals(fit, train);
    Ok(train
        .games()
        .iter()
        .zip(res.iter().zip(stud))
        .map(|(g, (&e, s))| ResidualRow {
            road_rank: g.road_rank,
            home_rank: g.home_rank,
            fitted: T::from_i32(g.mov()).expect("mov") - e,
            residual: e,
            studentized: s,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GameRecord;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    const PAPER: [f64; 5] = [-5.8, -0.074, 0.10, 4.7e-5, -1.2e-4];

    fn games_from(points: &[(u32, u32, i32)]) -> Dataset {
        let date = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        Dataset::new(
            points
                .iter()
                .map(|&(r, h, mov)| {
                    let (hs, rs) = if mov >= 0 { (100, 100 + mov as u32) } else { ((100 - mov) as u32, 100) };
                    GameRecord::new(date, "H", "R", h, r, hs, rs).unwrap()
                })
                .collect(),
        )
    }

    fn grid_points() -> Vec<(u32, u32)> {
        (0..40).map(|i| (1 + (i * 37) % 97, 1 + (i * 53 + 11) % 89)).collect()
    }

    #[test]
    fn paper_coefficients_evaluate_by_hand() {
        let f = QuadraticFit::from_coefficients(PAPER[0], PAPER[1], PAPER[2], PAPER[3], PAPER[4]);
        // -5.8 - 7.4 + 10 + 0.47 - 1.2
        assert!((f.predict(100.0, 100.0) - (-3.93)).abs() < 0.01);
        // -5.8 - 0.074 + 35.1 + 4.7e-5 - 14.78412
        assert!((f.predict(1.0, 351.0) - 14.441_927).abs() < 1e-6);
        let z = QuadraticFit::from_coefficients(0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(z.predict(17.0, 250.0), 0.0);
    }

    #[test]
    fn recovers_noiseless_coefficients() {
        // integer movs need an integer-valued surface
        let truth = [-6.0, -0.5, 1.5, 0.5, -0.5];
        let pts: Vec<(u32, u32, i32)> = (1..=20)
            .flat_map(|r| (1..=20).map(move |h| (r, h)))
            .map(|(r, h)| {
                let (rf, hf) = (r as f64, h as f64);
                let v = truth[0] + truth[1] * rf + truth[2] * hf + truth[3] * rf * rf + truth[4] * hf * hf;
                (r, h, v)
            })
            .filter(|(_, _, v)| (v - v.round()).abs() < 1e-9)
            .map(|(r, h, v)| (r, h, v.round() as i32))
            .collect();
        assert!(pts.len() > 20);
        let fit: QuadraticFit<f64> = fit_quadratic(&games_from(&pts)).unwrap();
        let got = [fit.beta0, fit.beta_r, fit.beta_h, fit.beta_rr, fit.beta_hh];
        for (g, t) in got.iter().zip(truth) {
            assert!((g - t).abs() < 1e-6, "{got:?}");
        }
        assert!(fit.sigma_hat < 1e-8);
    }

    #[test]
    fn too_few_games() {
        let pts: Vec<_> = grid_points().into_iter().take(5).map(|(r, h)| (r, h, 3)).collect();
        assert!(fit_quadratic::<f64>(&games_from(&pts)).is_err());
    }

    #[test]
    fn single_home_rank_is_rank_deficient() {
        let pts: Vec<_> = (1..20).map(|r| (r, 7, r as i32)).collect();
        assert!(matches!(fit_quadratic::<f64>(&games_from(&pts)), Err(Error::Fit { .. })));
    }

    #[test]
    fn sigma_matches_rss() {
        let pts: Vec<_> = grid_points()
            .into_iter()
            .enumerate()
            .map(|(i, (r, h))| (r, h, ((i * 7919) % 23) as i32 - 11))
            .collect();
        let data = games_from(&pts);
        let fit: QuadraticFit<f64> = fit_quadratic(&data).unwrap();
        let rss: f64 = residuals(&fit, &data).iter().map(|e| e * e).sum();
        assert!((fit.sigma_hat.powi(2) * (data.len() - 5) as f64 - rss).abs() < 1e-8 * rss);
        let sum: f64 = residuals(&fit, &data).iter().sum();
        assert!(sum.abs() < 1e-8 * data.len() as f64 * 11.0);
        assert!((fit.hat_diagonal.iter().sum::<f64>() - 5.0).abs() < 1e-8);
    }

    #[test]
    fn interaction_flag_adds_term() {
        let pts: Vec<_> = grid_points()
            .into_iter()
            .map(|(r, h)| (r, h, (r as i32 * h as i32) / 50))
            .collect();
        let data = games_from(&pts);
        let with: QuadraticFit<f64> = fit_quadratic_with(&data, QuadraticOptions { interaction: true }).unwrap();
        let without: QuadraticFit<f64> = fit_quadratic(&data).unwrap();
        assert!(with.beta_rh.is_some() && without.beta_rh.is_none());
        let sse = |f: &QuadraticFit<f64>| residuals(f, &data).iter().map(|e| e * e).sum::<f64>();
        assert!(sse(&with) < sse(&without));
        assert!((with.hat_diagonal.iter().sum::<f64>() - 6.0).abs() < 1e-8);
    }

    #[test]
    fn three_point_studentization_by_hand() {
        // y on (1, x) at x = 0, 1, 2 with y = 0, 2, 1: leverages 5/6, 1/3, 5/6,
        // residuals -1/2, 1, -1/2, σ̂² = 1.5, studentized -1, 1, -1
        let s = studentize(&[-0.5f64, 1.0, -0.5], &[5.0 / 6.0, 1.0 / 3.0, 5.0 / 6.0], 1.5f64.sqrt()).unwrap();
        for (v, e) in s.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((v - e).abs() < 1e-10);
        }
        // same leverages from the least-squares machinery
        let x = DenseMatrix::from_rows(&[[1.0f64, 0.0], [1.0, 1.0], [1.0, 2.0]]);
        let sol = weighted_least_squares(&x, &[0.0, 2.0, 1.0], &[1.0; 3]).unwrap();
        for (h, e) in sol.hat_diagonal.iter().zip([5.0 / 6.0, 1.0 / 3.0, 5.0 / 6.0]) {
            assert!((h - e).abs() < 1e-12);
        }
        assert!((sol.residual_ss - 1.5).abs() < 1e-12);
    }

    #[test]
    fn studentize_guards_unit_leverage() {
        assert!(matches!(studentize(&[1.0, 2.0], &[0.5, 1.0], 1.0), Err(Error::UnitLeverage { index: 1 })));
        assert_eq!(studentize(&[0.0], &[0.3], 0.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn constant_response_has_zero_residuals() {
        let pts: Vec<_> = grid_points().into_iter().map(|(r, h)| (r, h, 4)).collect();
        let data = games_from(&pts);
        let fit: QuadraticFit<f64> = fit_quadratic(&data).unwrap();
        for s in studentized_residuals(&fit, &data).unwrap() {
            assert!(s.abs() < 1e-6);
        }
    }

    #[test]
    fn json_carries_named_coefficients() {
        let f = QuadraticFit::from_coefficients(PAPER[0], PAPER[1], PAPER[2], PAPER[3], PAPER[4]);
        let v = serde_json::to_value(&f).unwrap();
        for key in ["beta0", "beta_r", "beta_h", "beta_rr", "beta_hh", "sigma_hat", "n_train"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("hat_diagonal").is_none());
        let back: QuadraticFit<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #[test]
        fn constant_shift_moves_intercept_only(c in -30i32..30, seed in 0usize..1000) {
            let pts: Vec<_> = grid_points().into_iter().enumerate()
                .map(|(i, (r, h))| (r, h, (((i + seed) * 7919) % 41) as i32 - 20)).collect();
            let shifted: Vec<_> = pts.iter().map(|&(r, h, m)| (r, h, m + c)).collect();
            let a: QuadraticFit<f64> = fit_quadratic(&games_from(&pts)).unwrap();
            let b: QuadraticFit<f64> = fit_quadratic(&games_from(&shifted)).unwrap();
            prop_assert!((b.beta0 - a.beta0 - c as f64).abs() < 1e-8);
            prop_assert!((b.beta_r - a.beta_r).abs() < 1e-8);
            prop_assert!((b.beta_h - a.beta_h).abs() < 1e-8);
            prop_assert!((b.beta_rr - a.beta_rr).abs() < 1e-8);
            prop_assert!((b.beta_hh - a.beta_hh).abs() < 1e-8);
        }
    }
}
