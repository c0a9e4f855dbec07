//! Versioned tolerances and empirical constants, embedded at build time.

use serde::{Deserialize, Serialize};

/// Raw text of the embedded defaults file.
pub const DEFAULTS_TOML: &str = include_str!("../defaults.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub version: u32,
    pub constants: Constants,
    pub reference_run: ReferenceRun,
    pub tolerances: Tolerances,
    pub type1: Type1Defaults,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_emp: f64,
    pub bernstein_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRun {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub energy_balance_relative: f64,
    pub truncated_balance_relative: f64,
    pub shear_decay: f64,
    pub partition_of_unity: f64,
    pub shell_reconstruction: f64,
    pub flux_oracle: f64,
    pub flux_vanishing: f64,
    pub balance_order_ratio: f64,
    pub richardson_relative: f64,
    pub cascade_slope_relative: f64,
    pub weak_quasinorm_relative: f64,
    pub exceptional_measure_relative: f64,
    pub intermittency_d: f64,
    pub flux_integral_decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type1Defaults {
    pub threshold: f64,
}

/// The embedded defaults.
pub fn defaults() -> &'static Defaults {
    static CELL: std::sync::OnceLock<Defaults> = std::sync::OnceLock::new();
    CELL.get_or_init(|| toml::from_str(DEFAULTS_TOML).expect("embedded defaults parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::flux::flux_bound_ratios;
    use crate::solver::InitialCondition;

    #[test]
    fn parses() {
        let d = defaults();
        assert_eq!(d.version, 1);
        assert_eq!(d.constants.bernstein_bound, 8.0);
        assert_eq!(d.reference_run.n, 64);
    }

    #[test]
    fn c_emp_bounds_a_small_ensemble() {
        let grid = Grid::new(32).unwrap();
        for seed in 0..10 {
            let u = InitialCondition::Random { seed, amplitude: 1.0 }.build(grid).unwrap();
            for (q, r) in flux_bound_ratios(&u).unwrap() {
                assert!(r.unwrap_or(0.0) <= defaults().constants.c_emp, "seed {seed}, q {q}");
            }
        }
    }
}
