//! Nadaraya–Watson Gaussian kernel smoothing in rank space.
//!
//! The isotropic kernel uses one bandwidth for both rank axes. The
//! anisotropic kernel works in the 45°-rotated frame x = (r + h)/√2
//! (overall strength) and y = (r − h)/√2 (strength gap) with separate
//! bandwidths along each.
//!
//! Bandwidth searches exploit integer ranks: every weight factorizes into
//! per-axis terms indexed by an integer offset, so each grid value needs a
//! small lookup table instead of one `exp` per pair of games.

use serde::{Deserialize, Serialize};

use crate::data::{rotate, Dataset};
use crate::error::{Error, Result};
use crate::eval::fold_assignment;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", bound = "")]
pub enum KernelMode<T: Scalar> {
    Isotropic { sigma: T },
    Anisotropic { sigma_x: T, sigma_y: T },
}

impl<T: Scalar> KernelMode<T> {
    fn validate(&self) -> Result<()> {
        let ok = |s: T| s > T::zero() && s.is_finite();
        let good = match *self {
            KernelMode::Isotropic { sigma } => ok(sigma),
            KernelMode::Anisotropic { sigma_x, sigma_y } => ok(sigma_x) && ok(sigma_y),
        };
        if good {
            Ok(())
        } else {
            Err(Error::param("kernel", format!("bandwidths must be positive and finite, got {self:?}")))
        }
    }

    /// Quadratic form (d/σ)² between two games.
    fn quad(&self, dr: T, dh: T) -> T {
        match *self {
            KernelMode::Isotropic { sigma } => (dr * dr + dh * dh) / (sigma * sigma),
            KernelMode::Anisotropic { sigma_x, sigma_y } => {
                let d = rotate(dr, dh);
                let (ax, ay) = (d.x / sigma_x, d.y / sigma_y);
                ax * ax + ay * ay
            }
        }
    }
}

/// A kernel smoother is its bandwidths plus the training games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KernelSmootherSpec<T: Scalar> {
    pub mode: KernelMode<T>,
    road: Vec<T>,
    home: Vec<T>,
    marks: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPrediction<T> {
    pub value: T,
    /// All weights underflowed and the nearest training mark was returned.
    pub fallback: bool,
}

pub fn fit_kernel<T: Scalar>(train: &Dataset, mode: KernelMode<T>) -> Result<KernelSmootherSpec<T>> {
    mode.validate()?;
    if train.is_empty() {
        return Err(Error::insufficient("kernel", "no training games"));
    }
    Ok(KernelSmootherSpec {
        mode,
        road: train.road_ranks(),
        home: train.home_ranks(),
        marks: train.movs(),
    })
}

impl<T: Scalar> KernelSmootherSpec<T> {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn predict(&self, road_rank: T, home_rank: T) -> T {
        predict_kernel(self, road_rank, home_rank).value
    }
}

/// Weighted mean of the training marks. Weights are computed relative to
/// the nearest game, exp(−(q − q_min)/2), so the largest is exactly 1.
pub fn predict_kernel<T: Scalar>(spec: &KernelSmootherSpec<T>, road_rank: T, home_rank: T) -> KernelPrediction<T> {
    let q: Vec<T> = (0..spec.len())
        .map(|i| spec.mode.quad(spec.road[i] - road_rank, spec.home[i] - home_rank))
        .collect();
    let (nearest, q_min) = q
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let half = T::lit(0.5);
    let mut num = T::zero();
    let mut den = T::zero();
    for (i, &qi) in q.iter().enumerate() {
        let w = (-(qi - q_min) * half).exp();
        num += w * spec.marks[i];
        den += w;
    }
    if den > T::zero() && den.is_finite() && q_min.is_finite() {
        KernelPrediction {
            value: num / den,
            fallback: false,
        }
    } else {
        KernelPrediction {
            value: spec.marks[nearest],
            fallback: true,
        }
    }
}

/// 40 log-spaced bandwidths on [1, 200].
pub fn default_sigma_grid<T: Scalar>() -> Vec<T> {
    let (lo, hi) = (1.0f64.ln(), 200.0f64.ln());
    (0..40).map(|i| T::lit((lo + (hi - lo) * i as f64 / 39.0).exp())).collect()
}

pub fn default_sigma_x_grid<T: Scalar>() -> Vec<T> {
    (1..=10).map(|i| T::from_count(10 * i)).collect()
}

pub fn default_sigma_y_grid<T: Scalar>() -> Vec<T> {
    (1..=20).map(|i| T::from_count(2 * i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BandwidthCurve<T: Scalar> {
    pub best_sigma: T,
    /// (σ, leave-one-out RMSE), in grid order.
    pub curve: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnisoSurface<T: Scalar> {
    pub best_sigma_x: T,
    pub best_sigma_y: T,
    /// (σx, σy, pooled out-of-fold RMSE), σx-major.
    pub surface: Vec<(T, T, T)>,
}

fn check_grid<T: Scalar>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("kernel", format!("{what} grid is empty")));
    }
    if grid.iter().any(|&s| !(s > T::zero() && s.is_finite())) {
        return Err(Error::param("kernel", format!("{what} grid values must be positive and finite")));
    }
    Ok(())
}

/// Sums below this are treated as underflowed and recomputed with the
/// guarded direct formula.
fn underflow_floor<T: Scalar>() -> T {
    T::min_positive_value().powf(T::lit(0.9))
}

/// exp(−k² / (2·scale²)) for k = 0..len.
fn gauss_table<T: Scalar>(scale: T, len: usize) -> Vec<T> {
    let c = T::lit(-0.5) / (scale * scale);
    (0..len)
        .map(|k| {
            let k = T::from_count(k);
            (c * k * k).exp()
        })
        .collect()
}

struct Ranks {
    road: Vec<i64>,
    home: Vec<i64>,
}

impl Ranks {
    fn of(data: &Dataset) -> Self {
        Self {
            road: data.games().iter().map(|g| g.road_rank as i64).collect(),
            home: data.games().iter().map(|g| g.home_rank as i64).collect(),
        }
    }

    fn max_offset(&self) -> usize {
        let span = |v: &[i64]| v.iter().max().unwrap_or(&0) - v.iter().min().unwrap_or(&0);
        (span(&self.road) + span(&self.home)) as usize
    }
}

/// Leave-one-out choice of the isotropic bandwidth. Ties go to the larger σ.
pub fn select_sigma_loo<T: Scalar>(train: &Dataset, grid: &[T]) -> Result<BandwidthCurve<T>> {
    check_grid(grid, "sigma")?;
    let n = train.len();
    if n < 2 {
        return Err(Error::insufficient("kernel", "leave-one-out needs at least two games"));
    }
    let ranks = Ranks::of(train);
    let marks = train.movs::<T>();
    let len = ranks.max_offset() + 1;
    let floor = underflow_floor::<T>();
    let mut sse = vec![T::zero(); grid.len()];
    let mut dr = vec![0usize; n];
    let mut dh = vec![0usize; n];
    let tables: Vec<Vec<T>> = grid.iter().map(|&s| gauss_table(s, len)).collect();
    for i in 0..n {
        for j in 0..n {
            dr[j] = (ranks.road[j] - ranks.road[i]).unsigned_abs() as usize;
            dh[j] = (ranks.home[j] - ranks.home[i]).unsigned_abs() as usize;
        }
        for (k, table) in tables.iter().enumerate() {
            let mut num = T::zero();
            let mut den = T::zero();
            for j in (0..n).filter(|&j| j != i) {
                let w = table[dr[j]] * table[dh[j]];
                num += w * marks[j];
                den += w;
            }
            let pred = if den > floor {
                num / den
            } else {
                guarded_loo(&ranks, &marks, i, None, KernelMode::Isotropic { sigma: grid[k] })
            };
            let e = pred - marks[i];
            sse[k] += e * e;
        }
    }
    let nf = T::from_count(n);
    let curve: Vec<(T, T)> = grid.iter().zip(&sse).map(|(&s, &e)| (s, (e / nf).sqrt())).collect();
    let mut best = curve[0];
    for &(s, r) in &curve[1..] {
        if r < best.1 || (r == best.1 && s > best.0) {
            best = (s, r);
        }
    }
    Ok(BandwidthCurve {
        best_sigma: best.0,
        curve,
    })
}

/// Prediction for game `i` from the games selected by `pool` (all others
/// when `None`), via the guarded direct formula.
fn guarded_loo<T: Scalar>(ranks: &Ranks, marks: &[T], i: usize, pool: Option<&[usize]>, mode: KernelMode<T>) -> T {
    let all: Vec<usize>;
    let pool = match pool {
        Some(p) => p,
        None => {
            all = (0..marks.len()).filter(|&j| j != i).collect();
            &all
        }
    };
    let q: Vec<T> = pool
        .iter()
        .map(|&j| {
            mode.quad(
                T::lit((ranks.road[j] - ranks.road[i]) as f64),
                T::lit((ranks.home[j] - ranks.home[i]) as f64),
            )
        })
        .collect();
    let (pos, q_min) = q
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::infinity()), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let mut num = T::zero();
    let mut den = T::zero();
    for (k, &j) in pool.iter().enumerate() {
        let w = (-(q[k] - q_min) * T::lit(0.5)).exp();
        num += w * marks[j];
        den += w;
    }
    if den > T::zero() && den.is_finite() {
        num / den
    } else {
        marks[pool[pos]]
    }
}

/// k-fold cross-validation over the (σx, σy) grid of the rotated-axis
/// kernel. Ties go to the larger σx, then the larger σy.
pub fn select_aniso_cv<T: Scalar>(
    train: &Dataset,
    x_grid: &[T],
    y_grid: &[T],
    folds: usize,
    seed: u64,
) -> Result<AnisoSurface<T>> {
    check_grid(x_grid, "sigma_x")?;
    check_grid(y_grid, "sigma_y")?;
    let n = train.len();
    let assignment = fold_assignment(n, folds, seed)?;
    let ranks = Ranks::of(train);
    let marks = train.movs::<T>();
    let len = ranks.max_offset() + 1;
    let floor = underflow_floor::<T>();

    // With s = |Δr + Δh| and t = |Δr − Δh|, the weight is
    // exp(−s²/(4σx²))·exp(−t²/(4σy²)). For a fixed query and σx, pool the
    // σx factor by t so every σy costs one pass over the t values.
    let two = T::lit(2.0).sqrt();
    let ex: Vec<Vec<T>> = x_grid.iter().map(|&s| gauss_table(s * two, len)).collect();
    let ey: Vec<Vec<T>> = y_grid.iter().map(|&s| gauss_table(s * two, len)).collect();
    let ny = y_grid.len();
    let mut sse = vec![T::zero(); x_grid.len() * ny];
    let mut a_num = vec![T::zero(); len];
    let mut a_den = vec![T::zero(); len];

    for fold in 0..folds {
        let pool: Vec<usize> = (0..n).filter(|&j| assignment[j] != fold).collect();
        let mut s_idx = vec![0usize; pool.len()];
        let mut t_idx = vec![0usize; pool.len()];
        for i in (0..n).filter(|&i| assignment[i] == fold) {
            let mut t_max = 0;
            for (k, &j) in pool.iter().enumerate() {
                let dr = ranks.road[j] - ranks.road[i];
                let dh = ranks.home[j] - ranks.home[i];
                s_idx[k] = (dr + dh).unsigned_abs() as usize;
                t_idx[k] = (dr - dh).unsigned_abs() as usize;
                t_max = t_max.max(t_idx[k]);
            }
            for (a, table_x) in ex.iter().enumerate() {
                a_num[..=t_max].iter_mut().for_each(|v| *v = T::zero());
                a_den[..=t_max].iter_mut().for_each(|v| *v = T::zero());
                for (k, &j) in pool.iter().enumerate() {
                    let w = table_x[s_idx[k]];
                    a_num[t_idx[k]] += w * marks[j];
                    a_den[t_idx[k]] += w;
                }
                for (b, table_y) in ey.iter().enumerate() {
                    let mut num = T::zero();
                    let mut den = T::zero();
                    for t in 0..=t_max {
                        num += table_y[t] * a_num[t];
                        den += table_y[t] * a_den[t];
                    }
                    let pred = if den > floor {
                        num / den
                    } else {
                        let mode = KernelMode::Anisotropic {
                            sigma_x: x_grid[a],
                            sigma_y: y_grid[b],
                        };
                        guarded_loo(&ranks, &marks, i, Some(&pool), mode)
                    };
                    let e = pred - marks[i];
                    sse[a * ny + b] += e * e;
                }
            }
        }
    }

    let nf = T::from_count(n);
    let mut surface = Vec::with_capacity(sse.len());
    for (a, &sx) in x_grid.iter().enumerate() {
        for (b, &sy) in y_grid.iter().enumerate() {
            surface.push((sx, sy, (sse[a * ny + b] / nf).sqrt()));
        }
    }
    let mut best = surface[0];
    for &cand in &surface[1..] {
        let better = cand.2 < best.2
            || (cand.2 == best.2 && (cand.0 > best.0 || (cand.0 == best.0 && cand.1 > best.1)));
        if better {
            best = cand;
        }
    }
    Ok(AnisoSurface {
        best_sigma_x: best.0,
        best_sigma_y: best.1,
        surface,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GameRecord;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, seed: u64, max: u32, f: impl Fn(u32, u32, &mut ChaCha8Rng) -> i32) -> Dataset {
        let date = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(
            (0..n)
                .map(|_| {
                    let r = rng.gen_range(1..=max);
                    let h = rng.gen_range(1..=max);
                    let mov = f(r, h, &mut rng);
                    let (hs, rs) = if mov >= 0 { (100, 100 + mov as u32) } else { ((100 - mov) as u32, 100) };
                    GameRecord::new(date, "H", "R", h, r, hs, rs).unwrap()
                })
                .collect(),
        )
    }

    fn direct_loo(data: &Dataset, i: usize, mode: KernelMode<f64>) -> f64 {
        let keep: Vec<usize> = (0..data.len()).filter(|&j| j != i).collect();
        let spec = fit_kernel(&data.subset(&keep), mode).unwrap();
        let g = &data.games()[i];
        spec.predict(g.road_rank as f64, g.home_rank as f64)
    }

    #[test]
    fn constant_marks_reproduced() {
        let data = random_data(50, 1, 100, |_, _, _| 4);
        for mode in [
            KernelMode::Isotropic { sigma: 3.0f64 },
            KernelMode::Anisotropic { sigma_x: 20.0, sigma_y: 0.5 },
        ] {
            let spec = fit_kernel(&data, mode).unwrap();
            assert!((spec.predict(17.0, 300.0) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_bandwidth_returns_nearest_mark() {
        let data = random_data(30, 2, 100, |r, h, _| r as i32 - h as i32);
        let spec = fit_kernel(&data, KernelMode::Isotropic { sigma: 1e-3 }).unwrap();
        let g = &data.games()[7];
        let p = predict_kernel(&spec, g.road_rank as f64 + 0.1, g.home_rank as f64);
        assert!(p.value.is_finite());
        // far from everything: guard keeps the answer finite
        let far = predict_kernel(&spec, 1e6, -1e6);
        assert!(far.value.is_finite());
    }

    #[test]
    fn bad_bandwidths_rejected() {
        let data = random_data(10, 3, 50, |_, _, _| 0);
        assert!(fit_kernel(&data, KernelMode::Isotropic { sigma: 0.0 }).is_err());
        assert!(fit_kernel(&data, KernelMode::Anisotropic { sigma_x: 1.0, sigma_y: -2.0 }).is_err());
        assert!(select_sigma_loo::<f64>(&data, &[]).is_err());
    }

    #[test]
    fn loo_curve_matches_direct_refits() {
        let data = random_data(80, 4, 60, |r, h, rng| (r as i32 - h as i32) / 4 + rng.gen_range(-5..=5));
        let grid = [0.5, 2.0, 7.5, 40.0];
        let curve: BandwidthCurve<f64> = select_sigma_loo(&data, &grid).unwrap();
        for (k, &sigma) in grid.iter().enumerate() {
            let sse: f64 = (0..data.len())
                .map(|i| {
                    let e = direct_loo(&data, i, KernelMode::Isotropic { sigma }) - data.games()[i].mov() as f64;
                    e * e
                })
                .sum();
            let oracle = (sse / data.len() as f64).sqrt();
            assert!((curve.curve[k].1 - oracle).abs() <= 1e-10 * oracle, "{} vs {oracle}", curve.curve[k].1);
        }
    }

    #[test]
    fn aniso_surface_matches_direct_refits() {
        let data = random_data(60, 5, 40, |r, h, rng| (r as i32 - h as i32) / 3 + rng.gen_range(-4..=4));
        let xs = [3.0, 30.0];
        let ys = [0.3, 1.0, 8.0];
        let folds = 4;
        let surf: AnisoSurface<f64> = select_aniso_cv(&data, &xs, &ys, folds, 9).unwrap();
        let assignment = fold_assignment(data.len(), folds, 9).unwrap();
        for (a, &sx) in xs.iter().enumerate() {
            for (b, &sy) in ys.iter().enumerate() {
                let mut sse = 0.0;
                for f in 0..folds {
                    let keep: Vec<usize> = (0..data.len()).filter(|&j| assignment[j] != f).collect();
                    let spec = fit_kernel(&data.subset(&keep), KernelMode::Anisotropic { sigma_x: sx, sigma_y: sy }).unwrap();
                    for i in (0..data.len()).filter(|&i| assignment[i] == f) {
                        let g = &data.games()[i];
                        let e = spec.predict(g.road_rank as f64, g.home_rank as f64) - g.mov() as f64;
                        sse += e * e;
                    }
                }
                let oracle = (sse / data.len() as f64).sqrt();
                let got = surf.surface[a * ys.len() + b];
                assert_eq!((got.0, got.1), (sx, sy));
                assert!((got.2 - oracle).abs() <= 1e-10 * oracle, "({sx},{sy}) {} vs {oracle}", got.2);
            }
        }
    }

    #[test]
    fn selection_ties_prefer_larger_bandwidths() {
        let data = random_data(40, 6, 30, |_, _, _| 2);
        let c: BandwidthCurve<f64> = select_sigma_loo(&data, &[1.0, 5.0, 3.0]).unwrap();
        assert_eq!(c.best_sigma, 5.0);
        let s: AnisoSurface<f64> = select_aniso_cv(&data, &[10.0, 20.0], &[2.0, 4.0], 5, 1).unwrap();
        assert_eq!((s.best_sigma_x, s.best_sigma_y), (20.0, 4.0));
    }

    #[test]
    fn default_grids() {
        let g: Vec<f64> = default_sigma_grid();
        assert_eq!(g.len(), 40);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[39] - 200.0).abs() < 1e-9);
        assert_eq!(default_sigma_x_grid::<f64>().len(), 10);
        assert_eq!(default_sigma_y_grid::<f64>(), (1..=20).map(|i| 2.0 * i as f64).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn predictions_stay_within_mark_range(seed in 0u64..1000, sigma in 0.1f64..100.0, r in -50.0f64..400.0, h in -50.0f64..400.0) {
            let data = random_data(25, seed, 100, |_, _, rng| rng.gen_range(-30..=30));
            let spec = fit_kernel(&data, KernelMode::Isotropic { sigma }).unwrap();
            let lo = data.games().iter().map(|g| g.mov()).min().unwrap() as f64;
            let hi = data.games().iter().map(|g| g.mov()).max().unwrap() as f64;
            let p = spec.predict(r, h);
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }

        #[test]
        fn aniso_with_equal_bandwidths_is_isotropic(seed in 0u64..1000, sigma in 0.5f64..80.0, r in 1.0f64..100.0, h in 1.0f64..100.0) {
            let data = random_data(25, seed, 100, |_, _, rng| rng.gen_range(-30..=30));
            let iso = fit_kernel(&data, KernelMode::Isotropic { sigma }).unwrap();
            let aniso = fit_kernel(&data, KernelMode::Anisotropic { sigma_x: sigma, sigma_y: sigma }).unwrap();
            let (a, b) = (iso.predict(r, h), aniso.predict(r, h));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
