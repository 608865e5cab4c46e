use std::sync::Arc;

use super::{run, SolverConfig, SolverError};
use crate::ap_algebra::FrequencySet;
use crate::field::TorusField;
use crate::model::{reduce_model, NoiseModel, ReductionOptions, ScalarModel};
use crate::noise::WienerPath;
use crate::scalar::Scalar;

/// Solves once per `ε` in `eps_list` along the same path and returns
/// `‖v^{ε_i}(t_end) − v^{ε_last}(t_end)‖_{L¹}` for every entry.
#[allow(clippy::too_many_arguments)]
pub fn vanishing_viscosity_study<T: Scalar>(
    v0: &TorusField<T>,
    model: Arc<ScalarModel<T>>,
    freqs: &FrequencySet<T>,
    opts: &ReductionOptions<T>,
    nm: &NoiseModel<T>,
    path: Option<&WienerPath<T>>,
    eps_list: &[T],
    cfg: &SolverConfig<T>,
) -> Result<Vec<T>, SolverError> {
    if eps_list.is_empty() {
        return Err(SolverError::Config("empty viscosity list".into()));
    }
    if eps_list.iter().any(|e| !(*e >= T::zero())) {
        return Err(SolverError::Config("viscosities must be non-negative".into()));
    }
    let finals = eps_list
        .iter()
        .map(|&eps| {
            let rm = reduce_model(model.clone(), freqs.clone(), eps, opts).map_err(|e| SolverError::Model(e.to_string()))?;
            Ok(run(v0, &rm, nm, path, cfg)?.final_state)
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let last = finals.last().expect("non-empty");
    Ok(finals.iter().map(|f| f.l1_distance(last)).collect())
}
