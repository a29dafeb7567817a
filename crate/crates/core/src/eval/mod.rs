//! Error accounting: RMSE, pure error, the lack-of-fit F test, k-fold
//! cross-validation and the train/validation benchmark.

mod benchmark;

pub use benchmark::{benchmark, render_table, BenchmarkReport, BenchmarkRun, LackOfFitRow, ReportRow, RowKind, COLUMNS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numerics::f_sf;
use crate::scalar::Scalar;

/// sqrt(Σ(pᵢ − aᵢ)² / n).
pub fn rmse<T: Scalar>(predicted: &[T], actual: &[T]) -> Result<T> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((sse(predicted, actual) / T::from_count(actual.len())).sqrt())
}

pub(crate) fn sse<T: Scalar>(predicted: &[T], actual: &[T]) -> T {
    predicted.iter().zip(actual).map(|(&p, &a)| (p - a) * (p - a)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PureErrorSummary<T: Scalar> {
    pub ss_pe: T,
    pub df_pe: usize,
    /// sqrt(ss_pe / df_pe).
    pub rmse_pe: T,
}

/// Within-group variation over games sharing a (road rank, home rank) pair.
pub fn pure_error<T: Scalar>(data: &Dataset) -> Result<PureErrorSummary<T>> {
    let marks = data.movs::<T>();
    let mut ss = T::zero();
    for members in data.replicate_index().values() {
        if members.len() < 2 {
            continue;
        }
        let mean = members.iter().map(|&i| marks[i]).sum::<T>() / T::from_count(members.len());
        ss += members.iter().map(|&i| (marks[i] - mean) * (marks[i] - mean)).sum::<T>();
    }
    let df = data.len() - data.distinct_pairs();
    if df == 0 {
        return Err(Error::NoReplication);
    }
    Ok(PureErrorSummary {
        ss_pe: ss,
        df_pe: df,
        rmse_pe: (ss / T::from_count(df)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LackOfFitResult<T: Scalar> {
    pub f_stat: T,
    pub df_lof: usize,
    pub df_pe: usize,
    pub p_value: T,
}

/// F test of a model's residual variation beyond pure error against pure
/// error, given the model's training SSE and parameter count `p`.
pub fn lack_of_fit<T: Scalar>(fit_sse: T, p: usize, data: &Dataset) -> Result<LackOfFitResult<T>> {
    let pe = pure_error::<T>(data)?;
    let m = data.distinct_pairs();
    if m <= p {
        return Err(Error::InsufficientGroups { groups: m, params: p });
    }
    let scale = pe.ss_pe.max(T::one());
    if fit_sse < pe.ss_pe - T::lit(1e-8) * scale {
        return Err(Error::Inconsistent {
            fit_sse: fit_sse.to_f64().unwrap_or(f64::NAN),
            ss_pe: pe.ss_pe.to_f64().unwrap_or(f64::NAN),
        });
    }
    let ss_lof = (fit_sse - pe.ss_pe).max(T::zero());
    let df_lof = m - p;
    let (f_stat, p_value) = if ss_lof == T::zero() {
        (T::zero(), T::one())
    } else if pe.ss_pe == T::zero() {
        (T::infinity(), T::zero())
    } else {
        let f = (ss_lof / T::from_count(df_lof)) / (pe.ss_pe / T::from_count(pe.df_pe));
        (f, f_sf(f, T::from_count(df_lof), T::from_count(pe.df_pe))?)
    };
    Ok(LackOfFitResult {
        f_stat,
        df_lof,
        df_pe: pe.df_pe,
        p_value,
    })
}

/// Fold label of each of `n` games: a seeded shuffle dealt round-robin,
/// so fold sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::param("eval", format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::param("eval", format!("{k} folds for {n} games")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Out-of-fold RMSE with squared errors pooled over all folds.
pub fn kfold_cv<T: Scalar>(data: &Dataset, k: usize, seed: u64, model: &ModelSpec<T>) -> Result<T> {
    let assignment = fold_assignment(data.len(), k, seed)?;
    let marks = data.movs::<T>();
    let mut total = T::zero();
    for fold in 0..k {
        let train: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != fold).collect();
        let held: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == fold).collect();
        let fitted = model
            .fit(&data.subset(&train))
            .map_err(|e| Error::Fold { fold, source: Box::new(e) })?;
        let predicted = fitted.model.predict_all(&data.subset(&held));
        let actual: Vec<T> = held.iter().map(|&i| marks[i]).collect();
        total += sse(&predicted, &actual);
    }
    Ok((total / T::from_count(data.len())).sqrt())
}
