//! Additive model M = μ + f_road(r) + f_home(h) fitted by backfitting two
//! cubic smoothing splines.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{SmoothFunction, SplineSmoother};
use crate::scalar::Scalar;

/// Normal quantile for two-sided 95% pointwise bands.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdditiveOptions<T: Scalar> {
    /// Effective degrees of freedom of each smooth term.
    pub df_per_term: T,
    /// Convergence threshold on the largest change in fitted values over
    /// one sweep, relative to the response interquartile range.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Update the home term before the road term in each sweep.
    pub home_first: bool,
}

impl<T: Scalar> Default for AdditiveOptions<T> {
    fn default() -> Self {
        Self {
            df_per_term: T::lit(4.0),
            tolerance: T::lit(1e-6),
            max_iterations: 100,
            home_first: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Road,
    Home,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdditiveFit<T: Scalar> {
    pub mu: T,
    pub f_road: SmoothFunction<T>,
    pub f_home: SmoothFunction<T>,
    pub sigma_hat: T,
    pub iterations_used: usize,
    pub converged: bool,
    road_smoother: SplineSmoother<T>,
    home_smoother: SplineSmoother<T>,
}

impl<T: Scalar> AdditiveFit<T> {
    pub fn predict(&self, road_rank: T, home_rank: T) -> T {
        predict_additive(self, road_rank, home_rank)
    }

    pub fn component(&self, which: Component) -> &SmoothFunction<T> {
        match which {
            Component::Road => &self.f_road,
            Component::Home => &self.f_home,
        }
    }

    fn smoother(&self, which: Component) -> &SplineSmoother<T> {
        match which {
            Component::Road => &self.road_smoother,
            Component::Home => &self.home_smoother,
        }
    }
}

fn interquartile_range<T: Scalar>(v: &[T]) -> T {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite response"));
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = T::lit(pos - lo as f64);
        s[lo] + (s[hi] - s[lo]) * frac
    };
    q(0.75) - q(0.25)
}

fn distinct_count(v: &[u32]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// Mean of `f` over the training abscissae.
fn mean_at<T: Scalar>(f: &SmoothFunction<T>, x: &[T]) -> T {
    x.iter().map(|&t| f.evaluate(t)).sum::<T>() / T::from_count(x.len())
}

pub fn fit_additive<T: Scalar>(train: &Dataset, options: AdditiveOptions<T>) -> Result<AdditiveFit<T>> {
    let n = train.len();
    if n < 10 {
        return Err(Error::insufficient("additive", format!("{n} games; need at least 10")));
    }
    let road: Vec<u32> = train.games().iter().map(|g| g.road_rank).collect();
    let home: Vec<u32> = train.games().iter().map(|g| g.home_rank).collect();
    let (dr, dh) = (distinct_count(&road), distinct_count(&home));
    if dr < 4 || dh < 4 {
        return Err(Error::Fit {
            module: "additive",
            message: format!("need at least 4 distinct road and home ranks, got {dr} and {dh}"),
        });
    }
    if !(options.tolerance > T::zero()) || options.max_iterations == 0 {
        return Err(Error::param("additive", "tolerance must be positive and max_iterations at least 1"));
    }
    let r = train.road_ranks::<T>();
    let h = train.home_ranks::<T>();
    let y = train.movs::<T>();
    let ones = vec![T::one(); n];
    let road_smoother = SplineSmoother::calibrate(&r, &ones, options.df_per_term)?;
    let home_smoother = SplineSmoother::calibrate(&h, &ones, options.df_per_term)?;

    let nf = T::from_count(n);
    let mu = y.iter().copied().sum::<T>() / nf;
    let mut scale = interquartile_range(&y);
    if scale <= T::zero() {
        scale = T::one();
    }
    let threshold = options.tolerance * scale;

    let mut f_road = SmoothFunction::zero(road_smoother.knots().to_vec());
    let mut f_home = SmoothFunction::zero(home_smoother.knots().to_vec());
    let mut fit_r = vec![T::zero(); n];
    let mut fit_h = vec![T::zero(); n];
    let mut converged = false;
    let mut iterations_used = 0;

    // one backfitting update: smooth partial residuals, center, report the change
    let update = |smoother: &SplineSmoother<T>, x: &[T], other: &[T], current: &mut Vec<T>| -> Result<(SmoothFunction<T>, T)> {
        let partial: Vec<T> = y.iter().zip(other).map(|(&yi, &o)| yi - mu - o).collect();
        let raw = smoother.smooth(&partial)?;
        let f = raw.shifted(-mean_at(&raw, x));
        let mut change = T::zero();
        for (c, &xi) in current.iter_mut().zip(x) {
            let v = f.evaluate(xi);
            change = change.max((v - *c).abs());
            *c = v;
        }
        Ok((f, change))
    };

    for sweep in 1..=options.max_iterations {
        iterations_used = sweep;
        let change = if options.home_first {
            let (fh, ch) = update(&home_smoother, &h, &fit_r, &mut fit_h)?;
            let (fr, cr) = update(&road_smoother, &r, &fit_h, &mut fit_r)?;
            f_home = fh;
            f_road = fr;
            ch.max(cr)
        } else {
            let (fr, cr) = update(&road_smoother, &r, &fit_h, &mut fit_r)?;
            let (fh, ch) = update(&home_smoother, &h, &fit_r, &mut fit_h)?;
            f_road = fr;
            f_home = fh;
            cr.max(ch)
        };
        if change <= threshold {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("additive: backfitting stopped after {iterations_used} sweeps without converging");
    }

    let rss: T = (0..n)
        .map(|i| {
            let e = y[i] - mu - fit_r[i] - fit_h[i];
            e * e
        })
        .sum();
    let model_df = T::one() + (road_smoother.effective_df() - T::one()) + (home_smoother.effective_df() - T::one());
    let resid_df = (nf - model_df).max(T::one());

    Ok(AdditiveFit {
        mu,
        f_road,
        f_home,
        sigma_hat: (rss / resid_df).sqrt(),
        iterations_used,
        converged,
        road_smoother,
        home_smoother,
    })
}

pub fn predict_additive<T: Scalar>(fit: &AdditiveFit<T>, road_rank: T, home_rank: T) -> T {
    fit.mu + fit.f_road.evaluate(road_rank) + fit.f_home.evaluate(home_rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct BandPoint<T: Scalar> {
    pub at: T,
    pub estimate: T,
    pub lower: T,
    pub upper: T,
}

/// Component estimate with a pointwise 95% band.
///
/// The band treats the last sweep's centered spline smoother as a fixed
/// linear map of the observations, so it ignores the dependence of the
/// partial residuals on the other component. It is an approximation.
pub fn component_band<T: Scalar>(fit: &AdditiveFit<T>, which: Component, grid: &[T]) -> Result<Vec<BandPoint<T>>> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let smoother = fit.smoother(which);
    let f = fit.component(which);
    let counts = smoother.knot_weights();
    let sq = smoother.knot_sq_weights();
    let total: T = counts.iter().copied().sum();
    let basis = smoother.basis();
    // centering subtracts the training-point mean of each basis response
    let centre: Vec<T> = basis
        .iter()
        .map(|b| b.values.iter().zip(counts).map(|(&v, &c)| v * c).sum::<T>() / total)
        .collect();
    let z = T::lit(Z_95);
    Ok(grid
        .iter()
        .map(|&t| {
            let norm2: T = basis
                .iter()
                .zip(&centre)
                .enumerate()
                .map(|(k, (b, &c))| {
                    let a = b.evaluate(t) - c;
                    a * a * sq[k] / (counts[k] * counts[k])
                })
                .sum();
            let half = z * fit.sigma_hat * norm2.sqrt();
            let estimate = f.evaluate(t);
            BandPoint {
                at: t,
                estimate,
                lower: estimate - half,
                upper: estimate + half,
            }
        })
        .collect())
}
