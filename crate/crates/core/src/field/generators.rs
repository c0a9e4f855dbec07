//! Synthetic fields: Taylor-Green, the exact shear mode, random
//! divergence-free fields with a prescribed shell profile, and spatially
//! intermittent shell fields.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use super::{norm, Grid, PhysicalField, VelocityField, BOX_VOLUME, ZERO};
use crate::dyadic::{lambda, shell_multiplier, smooth_step, ShellIndex};
use crate::error::{Error, Result};

/// Wavenumber of the exact shear solution `(0, A cos 3x₁, 0)`.
pub const SHEAR_WAVENUMBER: i64 = 3;

/// `u = (sin x₁ cos x₂ cos x₃, −cos x₁ sin x₂ cos x₃, 0)`, set directly on
/// the eight modes `(±1, ±1, ±1)`.
pub fn taylor_green(grid: Grid) -> VelocityField {
    VelocityField::from_modes(grid, |k| {
        if k.iter().all(|ki| ki.abs() == 1) {
            let (s1, s2) = (k[0] as f64, k[1] as f64);
            [Complex64::new(0.0, -s1 / 8.0), Complex64::new(0.0, s2 / 8.0), ZERO]
        } else {
            [ZERO; 3]
        }
    })
}

/// `u = (0, A cos 3x₁, 0)`: the nonlinearity vanishes identically and the
/// mode decays as `e^{−9νt}`.
pub fn shear_mode(grid: Grid, amplitude: f64) -> Result<VelocityField> {
    if (grid.kmax() as i64) < SHEAR_WAVENUMBER {
        return Err(Error::pre(format!("shear mode needs kmax >= 3, grid has kmax = {}", grid.kmax())));
    }
    Ok(VelocityField::from_modes(grid, |k| {
        if k[1] == 0 && k[2] == 0 && k[0].abs() == SHEAR_WAVENUMBER {
            [ZERO, Complex64::new(amplitude / 2.0, 0.0), ZERO]
        } else {
            [ZERO; 3]
        }
    }))
}

/// Per-shell L² amplitudes; entry `i` belongs to shell `q = i − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellProfile {
    amplitudes: Vec<f64>,
}

impl ShellProfile {
    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Self {
        ShellProfile { amplitudes }
    }

    pub fn single(q: ShellIndex, amplitude: f64) -> Self {
        let mut amplitudes = vec![0.0; (q + 2).max(0) as usize];
        if let Some(a) = amplitudes.last_mut() {
            *a = amplitude;
        }
        ShellProfile { amplitudes }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ShellIndex, f64)> + '_ {
        self.amplitudes.iter().enumerate().map(|(i, &a)| (i as ShellIndex - 1, a))
    }

    /// Largest shell whose multiplier support `|k| < λ_{q+1}` fits inside
    /// the dealiased cube.
    pub fn max_shell(grid: Grid) -> ShellIndex {
        let mut q = -1;
        while lambda(q + 2) <= grid.kmax() as f64 + 1.0 {
            q += 1;
        }
        q
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random divergence-free field. Each shell `q` with amplitude `a_q > 0`
/// contributes Gaussian coefficients weighted by the shell multiplier,
/// Leray-projected and rescaled so that the contribution has L² norm
/// exactly `a_q`. Deterministic in `seed`.
pub fn random_divfree(grid: Grid, profile: &ShellProfile, seed: u64) -> Result<VelocityField> {
    let max_shell = ShellProfile::max_shell(grid);
    for (q, a) in profile.iter() {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::pre(format!("shell amplitude must be finite and >= 0, got {a} at q = {q}")));
        }
        if a > 0.0 && q > max_shell {
            return Err(Error::pre(format!(
                "shell {q} extends beyond kmax = {} (largest admissible shell is {max_shell})",
                grid.kmax()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<[Complex64; 3]> = (0..grid.len())
        .map(|idx| {
            if grid.in_band(grid.mode(idx)) {
                [0; 3].map(|_| complex_gaussian(&mut rng))
            } else {
                [ZERO; 3]
            }
        })
        .collect();
    let base = VelocityField::from_modes(grid, |k| {
        let a = raw[grid.index_of(k).expect("band mode")];
        let b = raw[grid.index_of([-k[0], -k[1], -k[2]]).expect("band mode")];
        [0, 1, 2].map(|c| (a[c] + b[c].conj()) * 0.5)
    })
    .leray_project();

    let mut out = VelocityField::zeros(grid);
    for (q, a) in profile.iter() {
        if a == 0.0 {
            continue;
        }
        let part = base.apply_multiplier(|xi| shell_multiplier(q, xi));
        let e = part.energy();
        if e == 0.0 {
            return Err(Error::pre(format!("shell {q} holds no lattice modes")));
        }
        out = &out + &(&part * (a / e.sqrt()));
    }
    Ok(out)
}

/// Fraction of the carrier wavenumber relative to `λ_q`; sits inside the
/// plateau `[λ_q, 3λ_q/2]` of `φ_q`.
const CARRIER_RATIO: f64 = 1.25;
/// Half-width of the smooth transition of each cell window, in cell units.
const CELL_TRANSITION: f64 = 0.4;

/// A shell-`q` field concentrated on `⌈λ_q^d⌉` cells of side `2π/λ_q`,
/// so that it occupies a volume fraction of about `λ_q^{d−3}`.
///
/// A plane wave of wavenumber `≈ 1.25 λ_q` with random direction,
/// polarization, and phase is multiplied by a smooth window `w` whose square
/// is a sum of cell bumps forming a partition of unity over the cell lattice.
/// Each selected cell then contributes exactly one cell volume to `∫w²`, and
/// selecting every cell gives `w ≡ 1`. The product is restricted to shells
/// `q−1..=q+1` and Leray-projected.
pub fn intermittent_field(grid: Grid, q: ShellIndex, d: f64, seed: u64) -> Result<VelocityField> {
    if !(0.0..=3.0).contains(&d) {
        return Err(Error::pre(format!("intermittency dimension must lie in [0, 3], got {d}")));
    }
    if q < 1 {
        return Err(Error::pre(format!("intermittent fields need shell q >= 1, got {q}")));
    }
    let lam = lambda(q);
    let target = CARRIER_RATIO * lam;
    let kmax = grid.kmax() as i64;
    if target.round() as i64 > kmax {
        return Err(Error::pre(format!(
            "shell {q} is too large for n = {}: carrier |k| ≈ {target} exceeds kmax = {kmax}",
            grid.n()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut candidates = Vec::new();
    for k0 in -kmax..=kmax {
        for k1 in -kmax..=kmax {
            for k2 in 0..=kmax {
                let k = [k0, k1, k2];
                if (norm(k) - target).abs() <= 0.5 {
                    candidates.push(k);
                }
            }
        }
    }
    let carrier = candidates[rng.gen_range(0..candidates.len())];
    let kf = carrier.map(|c| c as f64);
    let kn = norm(carrier);
    let polarization = loop {
        let v: [f64; 3] = [0; 3].map(|_| rng.sample(StandardNormal));
        let dot = (v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2]) / (kn * kn);
        let w = [v[0] - dot * kf[0], v[1] - dot * kf[1], v[2] - dot * kf[2]];
        let wn = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if wn > 1e-3 {
            break w.map(|c| c / wn);
        }
    };
    let phase = rng.gen_range(0.0..2.0 * PI);

    let cells_per_axis = lam as usize;
    let total_cells = cells_per_axis.pow(3);
    let count = (lam.powf(d).ceil() as usize).clamp(1, total_cells);
    let mut selected = vec![false; total_cells];
    for c in sample(&mut rng, total_cells, count).into_iter() {
        selected[c] = true;
    }

    let h = 2.0 * PI / lam;
    let window_1d = |s: f64| {
        // s: offset from the cell centre in cell units, |s| <= 1.
        let t = (s.abs() - (0.5 - CELL_TRANSITION)) / (2.0 * CELL_TRANSITION);
        smooth_step(t)
    };
    let window = |x: [f64; 3]| {
        // Each point touches at most two cells per axis.
        let mut total = 0.0;
        let base: [usize; 3] = x.map(|xi| ((xi / h).floor() as usize).min(cells_per_axis - 1));
        let mut neighbours = [[0usize; 2]; 3];
        let mut offsets = [[0.0f64; 2]; 3];
        for a in 0..3 {
            let centre = (base[a] as f64 + 0.5) * h;
            let s = (x[a] - centre) / h;
            let other = if s >= 0.0 { (base[a] + 1) % cells_per_axis } else { (base[a] + cells_per_axis - 1) % cells_per_axis };
            neighbours[a] = [base[a], other];
            offsets[a] = [s, if s >= 0.0 { s - 1.0 } else { s + 1.0 }];
        }
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let cell = (neighbours[0][i] * cells_per_axis + neighbours[1][j]) * cells_per_axis + neighbours[2][l];
                    if selected[cell] {
                        total += window_1d(offsets[0][i]) * window_1d(offsets[1][j]) * window_1d(offsets[2][l]);
                    }
                }
            }
        }
        total.sqrt()
    };

    let phys = PhysicalField::from_fn(grid, |x| {
        let w = window(x);
        if w == 0.0 {
            return [0.0; 3];
        }
        let wave = (kf[0] * x[0] + kf[1] * x[1] + kf[2] * x[2] + phase).cos();
        polarization.map(|e| w * wave * e)
    });

    let band = |xi: f64| (q - 1..=q + 1).map(|r| shell_multiplier(r, xi)).sum::<f64>();
    let field = phys.to_spectral().apply_multiplier(band).leray_project();
    // Unit energy density of the full-volume plane wave.
    let e = field.energy();
    Ok(if e > 0.0 { &field * (BOX_VOLUME / (2.0 * e)).sqrt() } else { field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::decompose;

    #[test]
    fn taylor_green_properties() {
        for n in [8, 16, 32] {
            let grid = Grid::new(n).unwrap();
            let tg = taylor_green(grid);
            assert!(tg.divergence_residual() < 1e-14);
            assert_eq!(tg.mean(), [0.0; 3]);
            let e = tg.energy();
            assert!((e - BOX_VOLUME / 4.0).abs() < 1e-12 * e);
            let quad = tg.lp_norm(2.0).unwrap().powi(2);
            assert!((quad - BOX_VOLUME / 4.0).abs() < 1e-12 * e);
        }
        // Pointwise check against the formula.
        let grid = Grid::new(8).unwrap();
        let phys = taylor_green(grid).to_physical();
        let n = grid.n();
        for idx in 0..grid.len() {
            let x = [grid.coordinate(idx / (n * n)), grid.coordinate((idx / n) % n), grid.coordinate(idx % n)];
            let u0 = x[0].sin() * x[1].cos() * x[2].cos();
            let u1 = -x[0].cos() * x[1].sin() * x[2].cos();
            assert!((phys.components()[0][idx] - u0).abs() < 1e-14);
            assert!((phys.components()[1][idx] - u1).abs() < 1e-14);
        }
    }

    #[test]
    fn shear_mode_needs_room() {
        assert!(shear_mode(Grid::new(8).unwrap(), 1.0).is_err());
        let u = shear_mode(Grid::new(10).unwrap(), 2f64.sqrt()).unwrap();
        assert!((u.energy() - BOX_VOLUME).abs() < 1e-12);
    }

    #[test]
    fn random_profile_contracts() {
        let grid = Grid::new(16).unwrap();
        let zero = random_divfree(grid, &ShellProfile::from_amplitudes(vec![0.0; 3]), 9).unwrap();
        assert_eq!(zero.max_coefficient(), 0.0);

        let profile = ShellProfile::from_amplitudes(vec![0.0, 1.5, 0.7]);
        let a = random_divfree(grid, &profile, 42).unwrap();
        let b = random_divfree(grid, &profile, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.divergence_residual() < 1e-12);
        let c = random_divfree(grid, &profile, 43).unwrap();
        assert_ne!(a, c);
        // Conjugate symmetry survives a round trip through validation.
        assert!(VelocityField::from_coefficients(grid, a.coefficients().clone()).is_ok());

        let too_high = ShellProfile::single(3, 1.0);
        assert!(random_divfree(grid, &too_high, 1).is_err());
        assert!(random_divfree(grid, &ShellProfile::from_amplitudes(vec![-1.0]), 1).is_err());
    }

    #[test]
    fn single_shell_profile_spreads_to_neighbours() {
        let grid = Grid::new(32).unwrap();
        let u = random_divfree(grid, &ShellProfile::single(2, 1.0), 5).unwrap();
        assert!((u.energy() - 1.0).abs() < 1e-12);
        for (q, s) in decompose(&u).iter() {
            let e = s.energy();
            if (1..=3).contains(&q) {
                assert!(e > 0.0, "shell {q} empty");
            } else {
                assert_eq!(e, 0.0, "shell {q} populated");
            }
        }
    }

    #[test]
    fn intermittent_field_contracts() {
        let grid = Grid::new(32).unwrap();
        let u = intermittent_field(grid, 2, 1.0, 3).unwrap();
        assert!(u.divergence_residual() < 1e-12);
        assert_eq!(u, intermittent_field(grid, 2, 1.0, 3).unwrap());
        // Shells 1..=3 cover 3/4 < |k| < 16.
        for idx in 0..grid.len() {
            let k = grid.mode(idx);
            if u.coefficient(k).iter().any(|c| c.norm() > 0.0) {
                let kn = norm(k);
                assert!(kn > 0.75 && kn < 16.0, "mode {k:?} outside shells 1..=3");
            }
        }
        assert!(intermittent_field(grid, 4, 1.0, 3).is_err());
        assert!(intermittent_field(grid, 2, 3.5, 3).is_err());

        let full = intermittent_field(grid, 2, 3.0, 8).unwrap();
        let ratio = full.lp_norm(f64::INFINITY).unwrap() / full.lp_norm(2.0).unwrap();
        let baseline = BOX_VOLUME.powf(-0.5);
        assert!(ratio > baseline / 2.0 && ratio < baseline * 2.0, "ratio {ratio} vs {baseline}");
    }
}
