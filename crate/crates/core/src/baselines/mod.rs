//! Baseline regressors for comparison against the LLM estimator.
//!
//! Every model goes through the same preprocessing (mean/mode imputation,
//! standardization, one-hot encoding) fitted on the training split only, so
//! records with blanks remain predictable. Fitting is a pure function of
//! `(train, hyperparameters, seed)`.

pub mod adaboost;
pub mod elm;
pub mod forest;
pub mod knn;
pub mod linreg;
pub mod mlp;
pub mod preprocess;
pub mod svr;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, ProjectRecord};

pub use adaboost::{AdaBoostParams, AdaBoostR2};
pub use elm::{Activation, Elm, ElmParams};
pub use forest::{ForestParams, RandomForest};
pub use knn::Knn;
pub use linreg::LinearRegression;
pub use mlp::{Mlp, MlpParams};
pub use preprocess::{fit_preprocess, PreprocessState};
pub use svr::{LinearSvr, SvrParams};
pub use tree::{RegressionTree, TreeParams};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} exceeds the {n} training records")]
    KExceedsTrainingSize { k: usize, n: usize },
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("training diverged at epoch {epoch}: {detail}")]
    DivergenceDetected { epoch: usize, detail: String },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Knn,
    Linreg,
    Svm,
    Tree,
    Forest,
    Adaboost,
    Elm,
    Mlp,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::Knn,
        EstimatorKind::Linreg,
        EstimatorKind::Svm,
        EstimatorKind::Tree,
        EstimatorKind::Forest,
        EstimatorKind::Adaboost,
        EstimatorKind::Elm,
        EstimatorKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Knn => "knn",
            EstimatorKind::Linreg => "linreg",
            EstimatorKind::Svm => "svm",
            EstimatorKind::Tree => "tree",
            EstimatorKind::Forest => "forest",
            EstimatorKind::Adaboost => "adaboost",
            EstimatorKind::Elm => "elm",
            EstimatorKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "knn" => EstimatorKind::Knn,
            "linreg" | "linear" | "lr" => EstimatorKind::Linreg,
            "svm" | "svr" => EstimatorKind::Svm,
            "tree" | "dt" => EstimatorKind::Tree,
            "forest" | "rf" => EstimatorKind::Forest,
            "adaboost" | "abreg" => EstimatorKind::Adaboost,
            "elm" => EstimatorKind::Elm,
            "mlp" => EstimatorKind::Mlp,
            other => return Err(BaselineError::UnknownEstimator(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnHp {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinregHp {
    pub lambda: f64,
    pub singular_fallback: bool,
}

/// SVR epsilon is in units of the standardized target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmHp {
    pub c: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeHp {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestHp {
    pub n_trees: usize,
    pub subsample: f64,
    pub bootstrap: bool,
    pub feature_frac: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaboostHp {
    pub n_rounds: usize,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmHp {
    pub n_hidden: usize,
    pub activation: Activation,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpHp {
    pub n_hidden: usize,
    pub epochs: usize,
    pub step: f64,
}

/// Per-estimator settings. Defaults are conventional textbook values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub knn: KnnHp,
    pub linreg: LinregHp,
    pub svm: SvmHp,
    pub tree: TreeHp,
    pub forest: ForestHp,
    pub adaboost: AdaboostHp,
    pub elm: ElmHp,
    pub mlp: MlpHp,
}

macro_rules! defaults {
    ($($ty:ident => $val:expr;)*) => {
        $(impl Default for $ty {
            fn default() -> Self {
                $val
            }
        })*
    };
}

defaults! {
    KnnHp => KnnHp { k: 5 };
    LinregHp => LinregHp { lambda: 1e-6, singular_fallback: true };
    SvmHp => SvmHp { c: 1.0, epsilon: 0.1, epochs: 200, step: 0.01 };
    TreeHp => TreeHp { max_depth: 8, min_leaf: 5 };
    ForestHp => ForestHp {
        n_trees: 100,
        subsample: 1.0,
        bootstrap: true,
        feature_frac: 0.5,
        max_depth: 12,
        min_leaf: 2,
    };
    AdaboostHp => AdaboostHp { n_rounds: 50, max_depth: 3 };
    ElmHp => ElmHp { n_hidden: 200, activation: Activation::Sigmoid, ridge: 1e-8 };
    MlpHp => MlpHp { n_hidden: 64, epochs: 500, step: 0.05 };
}

impl Hyperparams {
    /// The settings relevant to `kind`, as JSON for report echoes.
    pub fn echo(&self, kind: EstimatorKind) -> serde_json::Value {
        let v = match kind {
            EstimatorKind::Knn => serde_json::to_value(&self.knn),
            EstimatorKind::Linreg => serde_json::to_value(&self.linreg),
            EstimatorKind::Svm => serde_json::to_value(&self.svm),
            EstimatorKind::Tree => serde_json::to_value(&self.tree),
            EstimatorKind::Forest => serde_json::to_value(&self.forest),
            EstimatorKind::Adaboost => serde_json::to_value(&self.adaboost),
            EstimatorKind::Elm => serde_json::to_value(&self.elm),
            EstimatorKind::Mlp => serde_json::to_value(&self.mlp),
        };
        v.expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learned {
    Knn(Knn),
    Linreg(LinearRegression),
    Svm(LinearSvr),
    Tree(RegressionTree),
    Forest(RandomForest),
    Adaboost(AdaBoostR2),
    Elm(Elm),
    Mlp(Mlp),
}

impl Learned {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Learned::Knn(m) => m.predict(x),
            Learned::Linreg(m) => m.predict(x),
            Learned::Svm(m) => m.predict(x),
            Learned::Tree(m) => m.predict(x),
            Learned::Forest(m) => m.predict(x),
            Learned::Adaboost(m) => m.predict(x),
            Learned::Elm(m) => m.predict(x),
            Learned::Mlp(m) => m.predict(x),
        }
    }
}

/// Affine map applied to targets before fitting gradient-trained models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: EstimatorKind,
    pub hyperparams: serde_json::Value,
    pub preprocess: PreprocessState,
    pub train_seed: u64,
    target_scale: Option<TargetScale>,
    learned: Learned,
}

impl TrainedModel {
    pub fn learned(&self) -> &Learned {
        &self.learned
    }

    pub fn predict_vector(&self, x: &[f64]) -> f64 {
        let raw = self.learned.predict(x);
        match self.target_scale {
            Some(s) => raw * s.std + s.mean,
            None => raw,
        }
    }

    pub fn predict(&self, record: &ProjectRecord) -> f64 {
        self.predict_vector(&self.preprocess.transform(record))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Vec<f64> {
        ds.records().iter().map(|r| self.predict(r)).collect()
    }

    /// Short description for reports; carries no learned weights.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "estimator": self.kind.name(),
            "hyperparameters": self.hyperparams,
            "seed": self.train_seed,
            "input_width": self.preprocess.width(),
            "dropped_features": self.preprocess.dropped,
        })
    }
}

fn standardize(y: &[f64]) -> (Vec<f64>, TargetScale) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    (y.iter().map(|t| (t - mean) / std).collect(), TargetScale { mean, std })
}

/// Fits `kind` on `train` with the settings in `hp`.
pub fn fit(
    kind: EstimatorKind,
    train: &Dataset,
    hp: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel, BaselineError> {
    let preprocess = fit_preprocess(train)?;
    let x = preprocess.transform_all(train);
    let y = train.targets();
    let mut target_scale = None;
    let learned = match kind {
        EstimatorKind::Knn => Learned::Knn(Knn::fit(&x, &y, hp.knn.k)?),
        EstimatorKind::Linreg => Learned::Linreg(LinearRegression::fit(
            &x,
            &y,
            hp.linreg.lambda,
            hp.linreg.singular_fallback,
        )?),
        EstimatorKind::Svm => {
            let (ys, s) = standardize(&y);
            target_scale = Some(s);
            let p = SvrParams {
                c: hp.svm.c,
                epsilon: hp.svm.epsilon,
                epochs: hp.svm.epochs,
                step: hp.svm.step,
                seed,
            };
            Learned::Svm(LinearSvr::fit(&x, &ys, &p)?)
        }
        EstimatorKind::Tree => {
            let p = TreeParams {
                max_depth: hp.tree.max_depth,
                min_leaf: hp.tree.min_leaf,
                feature_frac: 1.0,
            };
            Learned::Tree(RegressionTree::fit(&x, &y, p)?)
        }
        EstimatorKind::Forest => {
            let f = &hp.forest;
            let p = ForestParams {
                n_trees: f.n_trees,
                subsample: f.subsample,
                bootstrap: f.bootstrap,
                tree: TreeParams {
                    max_depth: f.max_depth,
                    min_leaf: f.min_leaf,
                    feature_frac: f.feature_frac,
                },
                seed,
            };
            Learned::Forest(RandomForest::fit(&x, &y, &p)?)
        }
        EstimatorKind::Adaboost => {
            let p = AdaBoostParams {
                n_rounds: hp.adaboost.n_rounds,
                tree: TreeParams {
                    max_depth: hp.adaboost.max_depth,
                    min_leaf: 1,
                    feature_frac: 1.0,
                },
                seed,
            };
            Learned::Adaboost(AdaBoostR2::fit(&x, &y, &p)?)
        }
        EstimatorKind::Elm => {
            let (ys, s) = standardize(&y);
            target_scale = Some(s);
            let p = ElmParams {
                n_hidden: hp.elm.n_hidden,
                activation: hp.elm.activation,
                ridge: hp.elm.ridge,
                seed,
            };
            Learned::Elm(Elm::fit(&x, &ys, &p)?)
        }
        EstimatorKind::Mlp => {
            let (ys, s) = standardize(&y);
            target_scale = Some(s);
            let p = MlpParams {
                n_hidden: hp.mlp.n_hidden,
                epochs: hp.mlp.epochs,
                step: hp.mlp.step,
                seed,
            };
            Learned::Mlp(Mlp::fit(&x, &ys, &p)?)
        }
    };
    Ok(TrainedModel {
        kind,
        hyperparams: hp.echo(kind),
        preprocess,
        train_seed: seed,
        target_scale,
        learned,
    })
}
