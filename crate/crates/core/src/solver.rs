//! Pseudo-spectral integrator for the Leray-projected Navier-Stokes
//! equations on the torus: integrating-factor RK4 with alias-free products.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::ShellIndex;
use crate::error::{Error, Result};
use crate::field::{intermittent_field, random_divfree, shear_mode, taylor_green, ShellProfile};
use crate::field::{Grid, Snapshot, Trajectory, VelocityField};
use crate::flux::{quadratic_spectra, sym};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    TaylorGreen,
    Shear { amplitude: f64 },
    /// Random field with L² amplitude `amplitude · λ_q^{-1/3}` in every
    /// admissible shell `q ≥ 0`.
    Random { seed: u64, amplitude: f64 },
    Intermittent { q: ShellIndex, d: f64, seed: u64 },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> Result<VelocityField> {
        match *self {
            InitialCondition::TaylorGreen => Ok(taylor_green(grid)),
            InitialCondition::Shear { amplitude } => shear_mode(grid, amplitude),
            InitialCondition::Random { seed, amplitude } => {
                let top = ShellProfile::max_shell(grid);
                let amps = (-1..=top)
                    .map(|q| if q < 0 { 0.0 } else { amplitude * crate::dyadic::lambda(q).powf(-1.0 / 3.0) })
                    .collect();
                random_divfree(grid, &ShellProfile::from_amplitudes(amps), seed)
            }
            InitialCondition::Intermittent { q, d, seed } => intermittent_field(grid, q, d, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub init: InitialCondition,
}

impl SolverConfig {
    /// The reference run: Taylor-Green, `n = 64`, `ν = 0.1`, `dt = 1e-3`, `T = 1`.
    pub fn reference() -> Self {
        SolverConfig { n: 64, nu: 0.1, dt: 1e-3, t_end: 1.0, stride: 10, init: InitialCondition::TaylorGreen }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n)
    }

    /// Number of steps, `t_end / dt` rounded to the nearest integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::pre(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::pre(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::pre(format!("viscosity must be positive, got {}", self.nu)));
        }
        if self.stride == 0 {
            return Err(Error::pre("snapshot stride must be >= 1"));
        }
        let steps = (self.t_end / self.dt).round();
        if ((steps * self.dt - self.t_end).abs()) > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::pre(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(steps as usize)
    }
}

/// `−P[i k_j Â_ij(k)]`, the projected nonlinearity `−P∇·(u⊗u)`.
fn nonlinear(field: &VelocityField) -> [Vec<Complex64>; 3] {
    let grid = field.grid();
    let a = quadratic_spectra(field);
    let len = grid.len();
    let rows: Vec<[Complex64; 3]> = (0..len)
        .into_par_iter()
        .map(|idx| {
            let k = grid.mode(idx);
            if !grid.in_band(k) {
                return [Complex64::new(0.0, 0.0); 3];
            }
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let mut w = [Complex64::new(0.0, 0.0); 3];
            for (i, wi) in w.iter_mut().enumerate() {
                let div: Complex64 = (0..3).map(|j| a[sym(i, j)][idx] * kf[j]).sum();
                *wi = Complex64::new(div.im, -div.re);
            }
            let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
            if k2 > 0.0 {
                let s = (w[0] * kf[0] + w[1] * kf[1] + w[2] * kf[2]) / k2;
                for i in 0..3 {
                    w[i] -= s * kf[i];
                }
            }
            w
        })
        .collect();
    let mut out = [vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len]];
    for (idx, r) in rows.into_iter().enumerate() {
        for c in 0..3 {
            out[c][idx] = r[c];
        }
    }
    out
}

/// Integrating-factor RK4 for fixed `(grid, ν, dt)`, with the viscous
/// factors precomputed over the dealiased band.
pub struct Stepper {
    grid: Grid,
    nu: f64,
    dt: f64,
    band: Vec<usize>,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: Grid, nu: f64, dt: f64) -> Self {
        let band: Vec<usize> = (0..grid.len()).filter(|&i| grid.in_band(grid.mode(i))).collect();
        let k2 = |i: usize| {
            let k = grid.mode(i);
            (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
        };
        let full = band.iter().map(|&i| (-nu * k2(i) * dt).exp()).collect();
        let half = band.iter().map(|&i| (-nu * k2(i) * dt * 0.5).exp()).collect();
        Stepper { grid, nu, dt, band, full, half }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `out[c][band[j]] = f(c, band[j], full[j], half[j])`, zero elsewhere.
    fn combine(&self, f: impl Fn(usize, usize, f64, f64) -> Complex64 + Sync) -> [Vec<Complex64>; 3] {
        let build = |c: usize| -> Vec<Complex64> {
            let vals: Vec<Complex64> = self
                .band
                .par_iter()
                .enumerate()
                .map(|(j, &i)| f(c, i, self.full[j], self.half[j]))
                .collect();
            let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
            for (&i, v) in self.band.iter().zip(vals) {
                out[i] = v;
            }
            out
        };
        [build(0), build(1), build(2)]
    }

    pub fn step(&self, field: &VelocityField) -> Result<VelocityField> {
        if field.grid() != self.grid {
            return Err(Error::GridMismatch { expected: self.grid.n(), found: field.grid().n() });
        }
        let grid = self.grid;
        let (dt, h) = (self.dt, 0.5 * self.dt);
        let u = field.coefficients();

        let k1 = nonlinear(field);
        let u2 = self.combine(|c, i, _, b| b * (u[c][i] + h * k1[c][i]));
        let k2 = nonlinear(&VelocityField::from_raw(grid, u2));
        let u3 = self.combine(|c, i, _, b| b * u[c][i] + h * k2[c][i]);
        let k3 = nonlinear(&VelocityField::from_raw(grid, u3));
        let u4 = self.combine(|c, i, a, b| a * u[c][i] + dt * b * k3[c][i]);
        let k4 = nonlinear(&VelocityField::from_raw(grid, u4));
        let next = self.combine(|c, i, a, b| {
            a * u[c][i] + (dt / 6.0) * (a * k1[c][i] + 2.0 * b * (k2[c][i] + k3[c][i]) + k4[c][i])
        });
        let out = VelocityField::from_raw(grid, next);
        if !out.is_finite() {
            return Err(Error::Unstable {
                time: field.time().unwrap_or(f64::NAN) + dt,
                detail: "non-finite coefficient after a step".into(),
            });
        }
        Ok(match field.time() {
            Some(t) => out.with_time(t + dt),
            None => out,
        })
    }
}

/// One integrating-factor RK4 step of size `dt`.
pub fn step(field: &VelocityField, nu: f64, dt: f64) -> Result<VelocityField> {
    Stepper::new(field.grid(), nu, dt).step(field)
}

/// `dt · kmax · Σ_k |û(k)|`, an upper bound for `dt · kmax · max|u|`.
pub fn cfl_number(field: &VelocityField, dt: f64) -> f64 {
    let l1: f64 = field
        .coefficients()
        .par_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .sum();
    dt * field.grid().kmax() as f64 * l1
}

/// Runs `config`, handing each stored snapshot (including `t = 0` and the
/// final time) to `observer`. Snapshot times are exactly `i · dt`.
pub fn simulate_with(config: &SolverConfig, mut observer: impl FnMut(Snapshot) -> Result<()>) -> Result<()> {
    let steps = config.steps()?;
    let grid = config.grid()?;
    let mut u = config.init.build(grid)?;
    let stepper = Stepper::new(grid, config.nu, config.dt);
    let mut warned = false;
    observer(Snapshot { time: 0.0, field: u.clone().with_time(0.0) })?;
    for i in 1..=steps {
        if !warned {
            let cfl = cfl_number(&u, config.dt);
            if cfl > 0.5 {
                log::warn!("CFL bound {cfl:.3} exceeds 0.5 at step {i}");
                warned = true;
            }
        }
        let time = i as f64 * config.dt;
        u = stepper.step(&u).map_err(|e| match e {
            Error::Unstable { detail, .. } => Error::Unstable { time, detail },
            e => e,
        })?;
        u = u.with_time(time);
        if i % config.stride == 0 || i == steps {
            observer(Snapshot { time, field: u.clone() })?;
        }
    }
    Ok(())
}

pub fn simulate(config: &SolverConfig) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    simulate_with(config, |s| {
        snapshots.push(s);
        Ok(())
    })?;
    if snapshots.len() < 2 {
        return Err(Error::pre("a run needs at least one step"));
    }
    Trajectory::new(config.nu, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SHEAR_WAVENUMBER;

    fn run(n: usize, nu: f64, dt: f64, t_end: f64, init: InitialCondition) -> Trajectory {
        simulate(&SolverConfig { n, nu, dt, t_end, stride: 1, init }).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let z = VelocityField::zeros(Grid::new(8).unwrap());
        assert_eq!(step(&z, 0.1, 0.01).unwrap().max_coefficient(), 0.0);
    }

    #[test]
    fn shear_mode_decays_exactly() {
        let grid = Grid::new(16).unwrap();
        let (nu, dt) = (0.1, 0.01);
        let u0 = shear_mode(grid, 2f64.sqrt()).unwrap();
        let u1 = step(&u0, nu, dt).unwrap();
        let k = [SHEAR_WAVENUMBER, 0, 0];
        let ratio = u1.coefficient(k)[1].re / u0.coefficient(k)[1].re;
        let exact = (-(SHEAR_WAVENUMBER * SHEAR_WAVENUMBER) as f64 * nu * dt).exp();
        assert!((ratio - exact).abs() < 1e-12);

        let traj = run(16, nu, 0.01, 1.0, InitialCondition::Shear { amplitude: 2f64.sqrt() });
        let e0 = traj.snapshots()[0].field.energy().sqrt();
        for s in traj.snapshots() {
            let exact = e0 * (-9.0 * nu * s.time).exp();
            assert!((s.field.energy().sqrt() / exact - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn taylor_green_order_four() {
        // Global error at fixed T falls by 2⁴ per halving of dt.
        let at = |dt: f64| run(16, 0.05, dt, 0.8, InitialCondition::Random { seed: 3, amplitude: 2.0 }).snapshots().last().unwrap().field.clone();
        let (a, b, c) = (at(0.1), at(0.05), at(0.025));
        let ratio = a.max_abs_diff(&b) / b.max_abs_diff(&c);
        assert!((ratio / 16.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn taylor_green_local_error() {
        // One step against two half steps: local error O(dt⁵).
        let grid = Grid::new(16).unwrap();
        let u0 = InitialCondition::Random { seed: 5, amplitude: 2.0 }.build(grid).unwrap();
        let diff = |dt: f64| {
            let full = step(&u0, 0.05, dt).unwrap();
            let half = step(&step(&u0, 0.05, dt / 2.0).unwrap(), 0.05, dt / 2.0).unwrap();
            full.max_abs_diff(&half)
        };
        let ratio = diff(0.1) / diff(0.05);
        assert!((ratio / 32.0 - 1.0).abs() < 0.25, "ratio {ratio}");
    }

    #[test]
    fn invariants_and_determinism() {
        let cfg = SolverConfig {
            n: 16,
            nu: 0.05,
            dt: 0.01,
            t_end: 0.2,
            stride: 5,
            init: InitialCondition::Random { seed: 9, amplitude: 1.0 },
        };
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.snapshots(), b.snapshots());
        assert_eq!(a.snapshots().len(), 5);
        let m0 = a.snapshots()[0].field.mean();
        let mut prev = f64::INFINITY;
        for s in a.snapshots() {
            assert!(s.field.divergence_residual() <= 1e-12);
            let m = s.field.mean();
            assert!((0..3).all(|i| (m[i] - m0[i]).abs() <= 1e-14));
            let e = s.field.energy();
            assert!(e < prev);
            prev = e;
        }
        let times: Vec<f64> = a.snapshots().iter().map(|s| s.time).collect();
        let expected: Vec<f64> = (0..5).map(|i| (5 * i) as f64 * 0.01).collect();
        assert_eq!(times, expected);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SolverConfig::reference();
        cfg.dt = 0.3;
        assert!(cfg.steps().is_err());
        cfg.dt = -1.0;
        assert!(cfg.steps().is_err());
        cfg = SolverConfig::reference();
        cfg.stride = 0;
        assert!(simulate(&cfg).is_err());
    }
}
