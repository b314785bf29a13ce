//! Built-in experiment configurations.

use hioco::{BlockSet, Compression, DelayConfig, DriftKind, DriftModel, Mode, ScenarioSpec, Vector};

use crate::config::{AlgorithmConfig, AutoOr, ExperimentConfig, SweepConfig};
use crate::error::CliError;

pub const NAMES: [&str; 3] = ["static-sanity", "thm1", "thm2"];

/// Three workers with 4-dimensional blocks in balls of radius 3, six shared
/// rows and a decaying random walk on the targets.
pub fn drift_scenario(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        workers: 3,
        dims: vec![4, 4, 4],
        m: 6,
        horizon: 500,
        mu: 1.0,
        a_max: 1.0,
        b_scale: 1.0,
        drift: DriftModel {
            kind: DriftKind::DecayingWalk,
            sigma: 0.5,
            rho: 0.6,
        },
        seed,
        feasible: (0..3)
            .map(|_| BlockSet::centered_ball(4, 3.0).expect("valid ball"))
            .collect(),
    }
}

pub fn static_scenario(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        workers: 2,
        dims: vec![3, 3],
        m: 4,
        horizon: 300,
        mu: 1.0,
        a_max: 1.0,
        b_scale: 1.0,
        drift: DriftModel::fixed(),
        seed,
        feasible: vec![
            BlockSet::centered_ball(3, 2.0).expect("valid ball"),
            BlockSet::boxed(Vector::from_element(3, -2.0), Vector::from_element(3, 2.0)).expect("valid box"),
        ],
    }
}

fn algorithm(j_l: usize, j_r: usize, mode: Option<Mode>) -> AlgorithmConfig {
    AlgorithmConfig {
        alpha: AutoOr::Auto,
        gamma: AutoOr::Auto,
        j_l,
        j_r,
        compression: Compression::Identity,
        mode,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let cfg = match name {
        "static-sanity" => ExperimentConfig {
            scenario: static_scenario(7),
            delay: DelayConfig { tau_u: 1, tau_d: 0, tau_l: 0 },
            algorithm: algorithm(1, 1, None),
            sweep: SweepConfig::default(),
        },
        "thm1" => ExperimentConfig {
            scenario: drift_scenario(42),
            delay: DelayConfig { tau_u: 1, tau_d: 0, tau_l: 0 },
            algorithm: algorithm(2, 2, None),
            sweep: SweepConfig::default(),
        },
        "thm2" => ExperimentConfig {
            scenario: drift_scenario(42),
            delay: DelayConfig { tau_u: 1, tau_d: 0, tau_l: 2 },
            algorithm: algorithm(3, 3, Some(Mode::LocalDelay)),
            sweep: SweepConfig::default(),
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; choose one of {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_serializable() {
        for name in NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
        assert!(matches!(preset("nope"), Err(CliError::Config(_))));
    }
}
