//! Model specifications, fitted models and the persisted model file.

use serde::{Deserialize, Serialize};

use crate::additive::{fit_additive, AdditiveFit, AdditiveOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{
    fit_kernel, select_aniso_cv, select_sigma_loo, AnisoSurface, BandwidthCurve, KernelMode, KernelSmootherSpec,
};
use crate::loess::{fit_loess_with, select_span_cv, LoessFit, LoessOptions, SpanCurve};
use crate::quadratic::{fit_quadratic_with, QuadraticFit, QuadraticOptions};
use crate::scalar::Scalar;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// The five benchmark columns after pure error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Quadratic,
    Gam,
    Loess,
    Isotropic,
    Anisotropic,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Quadratic,
        ModelFamily::Gam,
        ModelFamily::Loess,
        ModelFamily::Isotropic,
        ModelFamily::Anisotropic,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Quadratic => "quadratic",
            ModelFamily::Gam => "gam",
            ModelFamily::Loess => "loess",
            ModelFamily::Isotropic => "kernel-iso",
            ModelFamily::Anisotropic => "kernel-aniso",
        }
    }
}

/// What to fit, including how hyperparameters are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec<T: Scalar> {
    Quadratic(QuadraticOptions),
    Additive(AdditiveOptions<T>),
    Loess(LoessOptions<T>),
    LoessCv {
        grid: Vec<T>,
        folds: usize,
        seed: u64,
        normalize: bool,
    },
    KernelIsotropic {
        sigma: T,
    },
    KernelIsotropicLoo {
        grid: Vec<T>,
    },
    KernelAnisotropic {
        sigma_x: T,
        sigma_y: T,
    },
    KernelAnisotropicCv {
        x_grid: Vec<T>,
        y_grid: Vec<T>,
        folds: usize,
        seed: u64,
    },
}

/// Selection curve produced while tuning a hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Tuning<T: Scalar> {
    Span(SpanCurve<T>),
    Sigma(BandwidthCurve<T>),
    Aniso(AnisoSurface<T>),
}

#[derive(Debug, Clone)]
pub struct Fitted<T: Scalar> {
    pub model: FittedModel<T>,
    pub tuning: Option<Tuning<T>>,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Quadratic(_) => ModelFamily::Quadratic,
            ModelSpec::Additive(_) => ModelFamily::Gam,
            ModelSpec::Loess(_) | ModelSpec::LoessCv { .. } => ModelFamily::Loess,
            ModelSpec::KernelIsotropic { .. } | ModelSpec::KernelIsotropicLoo { .. } => ModelFamily::Isotropic,
            ModelSpec::KernelAnisotropic { .. } | ModelSpec::KernelAnisotropicCv { .. } => ModelFamily::Anisotropic,
        }
    }

    pub fn fit(&self, train: &Dataset) -> Result<Fitted<T>> {
        let plain = |model| Fitted { model, tuning: None };
        Ok(match self {
            ModelSpec::Quadratic(o) => plain(FittedModel::Quadratic(fit_quadratic_with(train, *o)?)),
            ModelSpec::Additive(o) => plain(FittedModel::Additive(fit_additive(train, *o)?)),
            ModelSpec::Loess(o) => plain(FittedModel::Loess(fit_loess_with(train, *o)?)),
            ModelSpec::LoessCv {
                grid,
                folds,
                seed,
                normalize,
            } => {
                let curve = select_span_cv(train, grid, *folds, *seed, *normalize)?;
                let fit = fit_loess_with(
                    train,
                    LoessOptions {
                        span: curve.best_span,
                        normalize: *normalize,
                    },
                )?;
                Fitted {
                    model: FittedModel::Loess(fit),
                    tuning: Some(Tuning::Span(curve)),
                }
            }
            ModelSpec::KernelIsotropic { sigma } => {
                plain(FittedModel::Kernel(fit_kernel(train, KernelMode::Isotropic { sigma: *sigma })?))
            }
            ModelSpec::KernelIsotropicLoo { grid } => {
                let curve = select_sigma_loo(train, grid)?;
                let spec = fit_kernel(train, KernelMode::Isotropic { sigma: curve.best_sigma })?;
                Fitted {
                    model: FittedModel::Kernel(spec),
                    tuning: Some(Tuning::Sigma(curve)),
                }
            }
            ModelSpec::KernelAnisotropic { sigma_x, sigma_y } => plain(FittedModel::Kernel(fit_kernel(
                train,
                KernelMode::Anisotropic {
                    sigma_x: *sigma_x,
                    sigma_y: *sigma_y,
                },
            )?)),
            ModelSpec::KernelAnisotropicCv {
                x_grid,
                y_grid,
                folds,
                seed,
            } => {
                let surface = select_aniso_cv(train, x_grid, y_grid, *folds, *seed)?;
                let spec = fit_kernel(
                    train,
                    KernelMode::Anisotropic {
                        sigma_x: surface.best_sigma_x,
                        sigma_y: surface.best_sigma_y,
                    },
                )?;
                Fitted {
                    model: FittedModel::Kernel(spec),
                    tuning: Some(Tuning::Aniso(surface)),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "")]
pub enum FittedModel<T: Scalar> {
    Quadratic(QuadraticFit<T>),
    Additive(AdditiveFit<T>),
    Loess(LoessFit<T>),
    Kernel(KernelSmootherSpec<T>),
}

impl<T: Scalar> FittedModel<T> {
    pub fn predict(&self, road_rank: T, home_rank: T) -> T {
        match self {
            FittedModel::Quadratic(f) => f.predict(road_rank, home_rank),
            FittedModel::Additive(f) => f.predict(road_rank, home_rank),
            FittedModel::Loess(f) => f.predict(road_rank, home_rank),
            FittedModel::Kernel(f) => f.predict(road_rank, home_rank),
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Vec<T> {
        data.games()
            .iter()
            .map(|g| self.predict(T::from_count(g.road_rank as usize), T::from_count(g.home_rank as usize)))
            .collect()
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            FittedModel::Quadratic(_) => ModelFamily::Quadratic,
            FittedModel::Additive(_) => ModelFamily::Gam,
            FittedModel::Loess(_) => ModelFamily::Loess,
            FittedModel::Kernel(k) => match k.mode {
                KernelMode::Isotropic { .. } => ModelFamily::Isotropic,
                KernelMode::Anisotropic { .. } => ModelFamily::Anisotropic,
            },
        }
    }

    /// Short description of the hyperparameters in use.
    pub fn describe(&self) -> String {
        match self {
            FittedModel::Quadratic(q) => format!("quadratic, {} coefficients", q.parameter_count()),
            FittedModel::Additive(a) => format!(
                "additive splines, df {:.2} + {:.2}, {} sweeps",
                a.f_road.effective_df, a.f_home.effective_df, a.iterations_used
            ),
            FittedModel::Loess(l) => format!("loess, span {:.2}", l.span),
            FittedModel::Kernel(k) => match k.mode {
                KernelMode::Isotropic { sigma } => format!("isotropic kernel, sigma {sigma:.3}"),
                KernelMode::Anisotropic { sigma_x, sigma_y } => {
                    format!("anisotropic kernel, sigma_x {sigma_x:.3}, sigma_y {sigma_y:.3}")
                }
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ModelFile<T: Scalar> {
    schema_version: u32,
    model: FittedModel<T>,
}

pub fn model_to_json<T: Scalar>(model: &FittedModel<T>) -> Result<String> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        model: model.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<FittedModel<T>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(format!("not valid JSON: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::ModelFile(format!(
                "schema version {v} is not supported (expected {MODEL_SCHEMA_VERSION})"
            )))
        }
        None => return Err(Error::ModelFile("missing schema_version".into())),
    }
    let file: ModelFile<T> =
        serde_json::from_value(value).map_err(|e| Error::ModelFile(format!("malformed model: {e}")))?;
    Ok(file.model)
}
