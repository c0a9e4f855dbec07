//! Fixtures shared by the benchmarks.

use onsager_core::field::{random_divfree, ShellProfile};
use onsager_core::{Grid, VelocityField};

/// Random divergence-free field filling every admissible shell.
pub fn fixture(n: usize, seed: u64) -> VelocityField {
    let grid = Grid::new(n).expect("benchmark grid");
    let top = ShellProfile::max_shell(grid);
    let amps = (-1..=top).map(|q| if q < 0 { 0.0 } else { 1.0 }).collect();
    random_divfree(grid, &ShellProfile::from_amplitudes(amps), seed).expect("fixture field")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_is_divergence_free() {
        let u = super::fixture(16, 1);
        assert!(u.divergence_residual() < 1e-12);
        assert!(u.energy() > 0.0);
    }
}
