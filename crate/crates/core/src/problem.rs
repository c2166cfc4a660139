//! The on-disk problem document: system matrices, constraint sets, the
//! uncertainty parametrization, feedback defaults, horizon, weights, and the
//! initial state, serialized as one JSON object. `compile` validates the
//! document and resolves everything the solvers need.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, HPolytope, VPolytope};
use crate::linalg::Mat;
use crate::model::{ModelError, UncertainLtiSystem, UncertaintyParametrization};
use crate::mpc::{CostSpec, RhoCoefficients};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Error)]
pub enum ProblemError {
    #[error("invalid problem document: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Serializable problem document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct ProblemInstance<T: Scalar = f64> {
    #[serde(rename = "A")]
    pub a: Mat<T>,
    #[serde(rename = "B")]
    pub b: Mat<T>,
    #[serde(rename = "E")]
    pub e: Mat<T>,
    pub state_set: HPolytope<T>,
    pub input_set: HPolytope<T>,
    pub primitive_set: HPolytope<T>,
    /// Vertex representation of the primitive set; recomputed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive_vertices: Option<Vec<Vec<T>>>,
    /// Polytope over the stacked `(vec(Y), y_off)` parameters.
    pub admissible_set: HPolytope<T>,
    #[serde(default = "default_true")]
    pub tie_over_horizon: bool,
    #[serde(rename = "K")]
    pub feedback_gain: Mat<T>,
    #[serde(rename = "b")]
    pub feedback_offset: Vec<T>,
    pub horizon: usize,
    /// Per-step weights; a single entry broadcasts over the horizon.
    pub lambda: Vec<T>,
    /// Linear size-metric coefficients on `vec(Y)` and on `y_off`.
    pub rho_y: Vec<T>,
    pub rho_y_off: Vec<T>,
    pub cost: CostSpec<T>,
    pub initial_state: Vec<T>,
}

fn default_true() -> bool {
    true
}

/// Validated runtime form of a problem document.
#[derive(Clone, Debug)]
pub struct CompiledProblem<T: Scalar = f64> {
    pub system: UncertainLtiSystem<T>,
    pub uncertainty: UncertaintyParametrization<T>,
    pub feedback_gain: Mat<T>,
    pub feedback_offset: Vec<T>,
    pub horizon: usize,
    /// Length equals the horizon.
    pub lambda: Vec<T>,
    pub rho: RhoCoefficients<T>,
    pub cost: CostSpec<T>,
    pub initial_state: Vec<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn from_json(text: &str) -> Result<Self, ProblemError>
    where
        T: serde::de::DeserializeOwned,
    {
        serde_json::from_str(text).map_err(|e| ProblemError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("problem documents serialize")
    }

    pub fn compile(&self) -> Result<CompiledProblem<T>, ProblemError> {
        let system = UncertainLtiSystem::new(
            self.a.clone(),
            self.b.clone(),
            self.e.clone(),
            self.state_set.clone(),
            self.input_set.clone(),
        )?;
        let n_w = system.n_w();
        let uncertainty = match &self.primitive_vertices {
            Some(vertices) => UncertaintyParametrization::with_vertices(
                self.primitive_set.clone(),
                VPolytope { vertices: vertices.clone() },
                self.admissible_set.clone(),
                self.tie_over_horizon,
                n_w,
            )?,
            None => UncertaintyParametrization::new(
                self.primitive_set.clone(),
                self.admissible_set.clone(),
                self.tie_over_horizon,
                n_w,
            )?,
        };
        if self.horizon == 0 {
            return Err(ProblemError::Invalid("horizon must be at least 1".into()));
        }
        let lambda = match self.lambda.len() {
            1 => vec![self.lambda[0]; self.horizon],
            l if l == self.horizon => self.lambda.clone(),
            l => {
                return Err(ProblemError::Invalid(format!(
                    "lambda must have length 1 or horizon ({}), got {l}",
                    self.horizon
                )))
            }
        };
        if lambda.iter().any(|l| *l < T::zero()) {
            return Err(ProblemError::Invalid("lambda weights must be nonnegative".into()));
        }
        let n_s = uncertainty.n_s();
        if self.rho_y.len() != n_w * n_s {
            return Err(ProblemError::Invalid(format!(
                "rho_y must have n_w*n_s = {} entries, got {}",
                n_w * n_s,
                self.rho_y.len()
            )));
        }
        if self.rho_y_off.len() != n_w {
            return Err(ProblemError::Invalid(format!(
                "rho_y_off must have n_w = {} entries, got {}",
                n_w,
                self.rho_y_off.len()
            )));
        }
        let n_x = system.n_x();
        if self.cost.state.len() != n_x
            || self.cost.terminal.len() != n_x
            || self.cost.input.len() != system.n_u()
        {
            return Err(ProblemError::Invalid("cost row lengths".into()));
        }
        if self.initial_state.len() != n_x {
            return Err(ProblemError::Invalid("initial state length".into()));
        }
        if self.feedback_gain.rows() != system.n_u()
            || self.feedback_gain.cols() != n_x
            || self.feedback_offset.len() != system.n_u()
        {
            return Err(ProblemError::Invalid("feedback gain shape".into()));
        }
        Ok(CompiledProblem {
            system,
            uncertainty,
            feedback_gain: self.feedback_gain.clone(),
            feedback_offset: self.feedback_offset.clone(),
            horizon: self.horizon,
            lambda,
            rho: RhoCoefficients { y: self.rho_y.clone(), y_off: self.rho_y_off.clone() },
            cost: self.cost.clone(),
            initial_state: self.initial_state.clone(),
        })
    }
}

impl<T: Scalar> CompiledProblem<T> {
    /// Copy with every per-step weight set to `lambda`.
    pub fn with_lambda(&self, lambda: T) -> Self {
        let mut out = self.clone();
        out.lambda = vec![lambda; self.horizon];
        out
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        let mut out = self.clone();
        let base = self.lambda.first().copied().unwrap_or_else(T::zero);
        out.horizon = horizon;
        out.lambda = vec![base; horizon];
        out
    }
}
