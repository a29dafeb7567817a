//! Local-linear regression (LOESS) over the (road rank, home rank) plane.
//!
//! Each prediction takes the ⌈span·n⌉ nearest training games in
//! standardized rank space, weights them with the tricube kernel scaled to
//! the farthest of them, and evaluates a weighted plane fit at the query.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::fold_assignment;
use crate::numerics::weighted_plane_at_origin;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoessOptions<T: Scalar> {
    pub span: T,
    /// Divide each rank axis by its training standard deviation before
    /// measuring distances.
    pub normalize: bool,
}

impl<T: Scalar> LoessOptions<T> {
    pub fn new(span: T) -> Self {
        Self { span, normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoessFit<T: Scalar> {
    road: Vec<T>,
    home: Vec<T>,
    marks: Vec<T>,
    pub span: T,
    pub predictor_scales: (T, T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoessPrediction<T> {
    pub value: T,
    /// The local design was singular and the weighted mean was used instead.
    pub degenerate: bool,
}

/// Tricube weight (1 − u³)³ on [0, 1), zero from 1 on.
pub fn tricube<T: Scalar>(u: T) -> T {
    if u < T::zero() || u >= T::one() {
        return T::zero();
    }
    let v = T::one() - u * u * u;
    v * v * v
}

/// Default span grid for cross-validation: 0.05, 0.10, …, 1.00.
pub fn default_span_grid<T: Scalar>() -> Vec<T> {
    (1..=20).map(|i| T::lit(i as f64 * 0.05)).collect()
}

fn neighbourhood_size<T: Scalar>(span: T, n: usize) -> Result<usize> {
    if !(span > T::zero() && span <= T::one()) {
        return Err(Error::param(
            "loess",
            format!("span must lie in (0, 1] with ceil(span * n) >= 3; got span {span}"),
        ));
    }
    let q = (span * T::from_count(n)).ceil().to_usize().unwrap_or(0).min(n);
    if q < 3 {
        return Err(Error::param(
            "loess",
            format!("span must lie in (0, 1] with ceil(span * n) >= 3; span {span} keeps {q} of {n} games"),
        ));
    }
    Ok(q)
}

fn sample_sd<T: Scalar>(v: &[T]) -> T {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    if v.len() < 2 {
        return T::zero();
    }
    (ss / (n - T::one())).sqrt()
}

pub fn fit_loess<T: Scalar>(train: &Dataset, span: T) -> Result<LoessFit<T>> {
    fit_loess_with(train, LoessOptions::new(span))
}

pub fn fit_loess_with<T: Scalar>(train: &Dataset, options: LoessOptions<T>) -> Result<LoessFit<T>> {
    neighbourhood_size(options.span, train.len())?;
    let road = train.road_ranks::<T>();
    let home = train.home_ranks::<T>();
    let scales = if options.normalize {
        let pos = |s: T| if s > T::zero() { s } else { T::one() };
        (pos(sample_sd(&road)), pos(sample_sd(&home)))
    } else {
        (T::one(), T::one())
    };
    Ok(LoessFit {
        road,
        home,
        marks: train.movs::<T>(),
        span: options.span,
        predictor_scales: scales,
    })
}

impl<T: Scalar> LoessFit<T> {
    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Number of games in each neighbourhood.
    pub fn neighbourhood_size(&self) -> usize {
        neighbourhood_size(self.span, self.len()).expect("validated at fit time")
    }

    pub fn predict(&self, road_rank: T, home_rank: T) -> T {
        predict_loess(self, road_rank, home_rank).value
    }

    fn distance(&self, i: usize, road_rank: T, home_rank: T) -> T {
        let dr = (self.road[i] - road_rank) / self.predictor_scales.0;
        let dh = (self.home[i] - home_rank) / self.predictor_scales.1;
        (dr * dr + dh * dh).sqrt()
    }

    fn distances(&self, road_rank: T, home_rank: T) -> Vec<(T, usize)> {
        (0..self.len()).map(|i| (self.distance(i, road_rank, home_rank), i)).collect()
    }

    /// Neighbours of a query sorted by distance, with their offsets.
    fn sorted_neighbourhood(&self, mut dist: Vec<(T, usize)>, road_rank: T, home_rank: T) -> Neighbourhood<T> {
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance"));
        let mut nb = Neighbourhood::with_capacity(dist.len());
        for (d, i) in dist {
            nb.d.push(d);
            nb.u.push((self.road[i] - road_rank) / self.predictor_scales.0);
            nb.v.push((self.home[i] - home_rank) / self.predictor_scales.1);
            nb.y.push(self.marks[i]);
        }
        nb
    }
}

#[derive(Debug, Default)]
struct Neighbourhood<T> {
    d: Vec<T>,
    u: Vec<T>,
    v: Vec<T>,
    y: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> Neighbourhood<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            d: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
        }
    }

    /// Local linear fit over the nearest `q`; points at the q-th distance get
    /// weight zero.
    fn fit(&mut self, q: usize) -> LoessPrediction<T> {
        let d_max = self.d[q - 1];
        let m = self.d[..q].partition_point(|&d| d < d_max);
        self.w.clear();
        self.w.extend(self.d[..m].iter().map(|&d| tricube(d / d_max)));
        let w = &self.w;
        if let Ok(value) = weighted_plane_at_origin(&self.u[..m], &self.v[..m], &self.y[..m], w) {
            return LoessPrediction {
                value,
                degenerate: false,
            };
        }
        let sw: T = w.iter().copied().sum();
        let value = if sw > T::zero() {
            w.iter().zip(&self.y).map(|(&a, &b)| a * b).sum::<T>() / sw
        } else {
            self.y[..q].iter().copied().sum::<T>() / T::from_count(q)
        };
        LoessPrediction {
            value,
            degenerate: true,
        }
    }
}

pub fn predict_loess<T: Scalar>(fit: &LoessFit<T>, road_rank: T, home_rank: T) -> LoessPrediction<T> {
    let q = fit.neighbourhood_size();
    let mut dist = fit.distances(road_rank, home_rank);
    if q < dist.len() {
        let cmp = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).expect("finite distance");
        dist.select_nth_unstable_by(q - 1, cmp);
        dist.truncate(q);
    }
    fit.sorted_neighbourhood(dist, road_rank, home_rank).fit(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpanCurve<T: Scalar> {
    pub best_span: T,
    /// (span, pooled out-of-fold RMSE), in grid order.
    pub curve: Vec<(T, T)>,
}

/// k-fold cross-validation of the span. One fold partition is shared by all spans.
pub fn select_span_cv<T: Scalar>(
    train: &Dataset,
    span_grid: &[T],
    folds: usize,
    seed: u64,
    normalize: bool,
) -> Result<SpanCurve<T>> {
    if span_grid.is_empty() {
        return Err(Error::param("loess", "span grid is empty"));
    }
    let n = train.len();
    let assignment = fold_assignment(n, folds, seed)?;
    let smallest_train = n - n.div_ceil(folds);
    for &s in span_grid {
        neighbourhood_size(s, smallest_train)?;
    }

    let mut sse = vec![T::zero(); span_grid.len()];
    let marks = train.movs::<T>();
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let held: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        let sub = train.subset(&train_idx);
        let fit = fit_loess_with(&sub, LoessOptions { span: span_grid[0], normalize })
            .map_err(|e| Error::Fold { fold, source: Box::new(e) })?;
        let sizes = span_grid
            .iter()
            .map(|&s| neighbourhood_size(s, fit.len()))
            .collect::<Result<Vec<_>>>()?;
        let g = train.games();
        for &i in &held {
            let (r0, h0) = (T::from_count(g[i].road_rank as usize), T::from_count(g[i].home_rank as usize));
            let mut nb = fit.sorted_neighbourhood(fit.distances(r0, h0), r0, h0);
            for (k, &q) in sizes.iter().enumerate() {
                let e = nb.fit(q).value - marks[i];
                sse[k] += e * e;
            }
        }
    }
    let nf = T::from_count(n);
    let curve: Vec<(T, T)> = span_grid.iter().zip(&sse).map(|(&s, &e)| (s, (e / nf).sqrt())).collect();
    let mut best = curve[0];
    for &(s, r) in &curve[1..] {
        if r < best.1 || (r == best.1 && s > best.0) {
            best = (s, r);
        }
    }
    Ok(SpanCurve {
        best_span: best.0,
        curve,
    })
}
