//! Error measures between a tissue and its target, and the cell- and
//! organ-level rewards built from them.

mod reward;
mod shape;
mod target;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::Scalar;

pub use reward::{
    apoptosis_reward, cell_reward, differentiation_reward, efficiency_reward, gene_reward, homeostasis_reward,
    migration_reward, organ_reward, organ_terms, proliferation_reward, signalling_reward, total_current,
    EfficiencyForm, RewardBreakdown, RewardTerms, TERM_NAMES,
};
pub use shape::{morphology_error, topology_error};
pub use target::{RewardWeights, Setpoint, TargetSpec};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("distance to an empty point set is undefined")]
    EmptySet,
    #[error("fields are defined on different cell sets")]
    FieldMismatch,
    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

fn dist2<S: Scalar>(p: [S; 2], q: [S; 2]) -> S {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    dx * dx + dy * dy
}

/// Largest distance from a point of `a` to its nearest point of `b`.
pub fn directed_hausdorff<S: Scalar>(a: &[[S; 2]], b: &[[S; 2]]) -> Result<S, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut worst = S::zero();
    for &p in a {
        let mut near = S::infinity();
        for &q in b {
            let d = dist2(p, q);
            if d < near {
                near = d;
                if near <= worst {
                    // cannot raise the running maximum
                    break;
                }
            }
        }
        if near > worst {
            worst = near;
        }
    }
    Ok(worst.sqrt())
}

/// Symmetric Hausdorff distance under the Euclidean norm.
pub fn hausdorff<S: Scalar>(a: &[[S; 2]], b: &[[S; 2]]) -> Result<S, MetricsError> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Volume-weighted squared voltage difference, `Σ (V_model - V_target)² vol`
/// (V²·m³). All three maps must share the same keys.
pub fn bioelectric_error<K: Ord, S: Scalar>(
    model: &BTreeMap<K, S>,
    target: &BTreeMap<K, S>,
    volumes: &BTreeMap<K, S>,
) -> Result<S, MetricsError> {
    if model.len() != target.len() || model.len() != volumes.len() {
        return Err(MetricsError::FieldMismatch);
    }
    let mut total = S::zero();
    for ((km, vm), ((kt, vt), (kv, vol))) in model.iter().zip(target.iter().zip(volumes)) {
        if km != kt || km != kv {
            return Err(MetricsError::FieldMismatch);
        }
        let d = *vm - *vt;
        total = total + d * d * *vol;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        let sup_inf = |x: &[[f64; 2]], y: &[[f64; 2]]| {
            x.iter()
                .map(|p| {
                    y.iter()
                        .map(|q| ((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1])).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        sup_inf(a, b).max(sup_inf(b, a))
    }

    #[test]
    fn hausdorff_examples() {
        let a = [[0.0, 0.0], [10.0, 0.0]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
        assert_eq!(hausdorff(&a, &[[0.0, 0.0]]).unwrap(), 10.0);
        assert_eq!(hausdorff::<f64>(&[], &a), Err(MetricsError::EmptySet));
    }

    fn points() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec(prop::array::uniform2(-50.0..50.0f64), 1..40)
    }

    proptest! {
        #[test]
        fn hausdorff_matches_brute_force(a in points(), b in points()) {
            prop_assert_eq!(hausdorff(&a, &b).unwrap(), brute(&a, &b));
        }

        #[test]
        fn hausdorff_is_a_metric(a in points(), b in points(), c in points()) {
            let ab = hausdorff(&a, &b).unwrap();
            prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
            let ac = hausdorff(&a, &c).unwrap();
            let cb = hausdorff(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }
    }

    #[test]
    fn bioelectric_examples() {
        let f = |v: &[(usize, f64)]| v.iter().copied().collect::<BTreeMap<_, _>>();
        let vols = f(&[(0, 1e-15), (1, 1e-15)]);
        let target = f(&[(0, -0.07), (1, -0.05)]);
        assert_eq!(bioelectric_error(&target, &target, &vols).unwrap(), 0.0);
        let model = f(&[(0, -0.06), (1, -0.03)]);
        let e = bioelectric_error(&model, &target, &vols).unwrap();
        assert!((e - 5e-19).abs() < 1e-30);
        // uniform offset
        let shifted = f(&[(0, -0.07 + 0.004), (1, -0.05 + 0.004)]);
        let e = bioelectric_error(&shifted, &target, &vols).unwrap();
        assert!((e - 0.004f64.powi(2) * 2e-15).abs() < 1e-30);
        let other = f(&[(0, -0.07), (2, -0.05)]);
        assert_eq!(
            bioelectric_error(&other, &target, &vols),
            Err(MetricsError::FieldMismatch)
        );
    }
}
