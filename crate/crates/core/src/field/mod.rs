//! Periodic vector fields on the torus `[0, 2π)³`.
//!
//! A [`VelocityField`] stores Fourier coefficients `û(k)` such that
//! `u(x) = Σ_k û(k) e^{ik·x}`. Coefficients live on the full `n³` FFT cube
//! but are kept real-symmetric (`û(-k) = conj û(k)`) and dealiased
//! (`û(k) = 0` whenever `|k|_∞ > kmax`, with `kmax = ⌊n/3⌋`).

pub mod fft;
mod generators;
pub mod io;

use std::borrow::Cow;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use fft::Fft3;

pub use generators::{
    intermittent_field, random_divfree, shear_mode, taylor_green, ShellProfile,
    SHEAR_WAVENUMBER,
};

/// `(2π)³`, the volume of the periodic box.
pub const BOX_VOLUME: f64 = 8.0 * PI * PI * PI;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform periodic grid with `n` points per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Grid> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::pre(format!("grid size must be even and >= 8, got {n}")));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dealiasing cutoff `⌊n/3⌋`.
    pub fn kmax(&self) -> usize {
        self.n / 3
    }

    /// Number of lattice points, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumber of FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.wavenumber(idx / (n * n)),
            self.wavenumber((idx / n) % n),
            self.wavenumber(idx % n),
        ]
    }

    /// FFT index of wavenumber `k`, if it lies on the grid.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &ki in &k {
            if ki < -n / 2 || ki >= n / 2 {
                return None;
            }
            idx = idx * self.n + ki.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Index of the mode `-k` for the mode at `idx`.
    #[inline]
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i0, i1, i2) = (idx / (n * n), (idx / n) % n, idx % n);
        (fft::mirror(i0, n) * n + fft::mirror(i1, n)) * n + fft::mirror(i2, n)
    }

    #[inline]
    pub fn in_band(&self, k: [i64; 3]) -> bool {
        let kmax = self.kmax() as i64;
        k.iter().all(|ki| ki.abs() <= kmax)
    }

    /// Highest dyadic shell index `Q = ⌈log2 kmax⌉ + 1`.
    pub fn top_shell(&self) -> i32 {
        let kmax = self.kmax() as f64;
        kmax.log2().ceil() as i32 + 1
    }

    /// Grid size on which quadratic products of dealiased fields are exact
    /// for all retained wavenumbers (`m > 3 kmax`).
    pub fn product_size(&self) -> usize {
        let kmax = self.kmax();
        if self.n > 3 * kmax {
            self.n
        } else {
            let m = 3 * kmax + 1;
            m + m % 2
        }
    }

    /// Quadrature weight `(2π/n)³`.
    pub fn cell_volume(&self) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        h * h * h
    }

    /// Physical coordinate of grid index `j`.
    #[inline]
    pub fn coordinate(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub(crate) fn plan(&self) -> std::sync::Arc<Fft3> {
        Fft3::cached(self.n)
    }
}

/// Real-symmetric, dealiased vector field held as Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    grid: Grid,
    coeffs: [Vec<Complex64>; 3],
    time: Option<f64>,
}

impl VelocityField {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        VelocityField { grid, coeffs: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]], time: None }
    }

    /// Wraps raw coefficients in FFT order after checking size, dealiasing,
    /// and conjugate symmetry (to a relative tolerance of `1e-12`).
    pub fn from_coefficients(grid: Grid, coeffs: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &coeffs {
            if c.len() != grid.len() {
                return Err(Error::SizeMismatch { expected: grid.len(), found: c.len() });
            }
        }
        let scale = coeffs
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for idx in 0..grid.len() {
            let k = grid.mode(idx);
            let m = grid.mirror_index(idx);
            for c in &coeffs {
                if !grid.in_band(k) && c[idx] != ZERO {
                    return Err(Error::NotDealiased { k, kmax: grid.kmax() });
                }
                if (c[idx] - c[m].conj()).norm() > 1e-12 * scale {
                    return Err(Error::pre(format!("coefficients are not conjugate-symmetric at k = {k:?}")));
                }
            }
        }
        Ok(VelocityField { grid, coeffs, time: None })
    }

    /// Wraps coefficients known to satisfy the field invariants.
    pub(crate) fn from_raw(grid: Grid, coeffs: [Vec<Complex64>; 3]) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.len() == grid.len()));
        VelocityField { grid, coeffs, time: None }
    }

    /// Builds a field from a per-mode function, evaluated on dealiased modes
    /// only. The caller is responsible for conjugate symmetry.
    pub(crate) fn from_modes(grid: Grid, f: impl Fn([i64; 3]) -> [Complex64; 3] + Sync) -> Self {
        let mut field = VelocityField::zeros(grid);
        let values: Vec<[Complex64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let k = grid.mode(idx);
                if grid.in_band(k) {
                    f(k)
                } else {
                    [ZERO; 3]
                }
            })
            .collect();
        for (idx, v) in values.into_iter().enumerate() {
            for c in 0..3 {
                field.coeffs[c][idx] = v[c];
            }
        }
        field
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = Some(time);
        self
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>; 3] {
        &self.coeffs
    }

    /// Coefficient vector `û(k)`; zero for modes off the grid.
    pub fn coefficient(&self, k: [i64; 3]) -> [Complex64; 3] {
        match self.grid.index_of(k) {
            Some(idx) => [self.coeffs[0][idx], self.coeffs[1][idx], self.coeffs[2][idx]],
            None => [ZERO; 3],
        }
    }

    /// Applies a radial Fourier multiplier `û(k) <- m(|k|) û(k)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64 + Sync) -> VelocityField {
        self.map_modes(|k, v| {
            let w = m(norm(k));
            [v[0] * w, v[1] * w, v[2] * w]
        })
    }

    /// Applies a per-mode map to dealiased modes. The map must preserve
    /// conjugate symmetry.
    pub(crate) fn map_modes(
        &self,
        f: impl Fn([i64; 3], [Complex64; 3]) -> [Complex64; 3] + Sync,
    ) -> VelocityField {
        let grid = self.grid;
        let n = grid.n();
        let kmax = grid.kmax();
        let mut out = self.clone();
        let [c0, c1, c2] = &mut out.coeffs;
        c0.par_chunks_mut(n * n)
            .zip(c1.par_chunks_mut(n * n))
            .zip(c2.par_chunks_mut(n * n))
            .enumerate()
            .for_each(|(i0, ((p0, p1), p2))| {
                let k0 = grid.wavenumber(i0);
                if k0.unsigned_abs() as usize > kmax {
                    return;
                }
                for j in 0..n * n {
                    let k = [k0, grid.wavenumber(j / n), grid.wavenumber(j % n)];
                    if !grid.in_band(k) {
                        continue;
                    }
                    let v = f(k, [p0[j], p1[j], p2[j]]);
                    p0[j] = v[0];
                    p1[j] = v[1];
                    p2[j] = v[2];
                }
            });
        out
    }

    /// Leray projection onto divergence-free fields:
    /// `û(k) <- û(k) - k (k·û(k)) / |k|²` for `k ≠ 0`.
    pub fn leray_project(&self) -> VelocityField {
        self.map_modes(|k, v| {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            if k2 == 0.0 {
                return v;
            }
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let dot = v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2];
            let s = dot / k2;
            [v[0] - s * kf[0], v[1] - s * kf[1], v[2] - s * kf[2]]
        })
    }

    /// Largest relative divergence `|k·û(k)| / |û(k)|` over nonzero modes.
    pub fn divergence_residual(&self) -> f64 {
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let k = self.grid.mode(idx);
                let v = [self.coeffs[0][idx], self.coeffs[1][idx], self.coeffs[2][idx]];
                let mag = (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt();
                if mag == 0.0 {
                    return 0.0;
                }
                let dot = v[0] * k[0] as f64 + v[1] * k[1] as f64 + v[2] * k[2] as f64;
                dot.norm() / mag
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `‖u‖₂²` by Parseval, `(2π)³ Σ |û(k)|²`.
    pub fn energy(&self) -> f64 {
        BOX_VOLUME * self.weighted_sum(|_| 1.0)
    }

    /// `‖∇u‖₂² = (2π)³ Σ |k|² |û(k)|²`.
    pub fn gradient_energy(&self) -> f64 {
        BOX_VOLUME * self.weighted_sum(|k| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64)
    }

    /// `Σ_k w(k) |û(k)|²` over dealiased modes.
    pub(crate) fn weighted_sum(&self, w: impl Fn([i64; 3]) -> f64 + Sync) -> f64 {
        let grid = self.grid;
        let n = grid.n();
        let planes: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i0| {
                let k0 = grid.wavenumber(i0);
                if k0.unsigned_abs() as usize > grid.kmax() {
                    return 0.0;
                }
                let mut acc = 0.0;
                for j in 0..n * n {
                    let k = [k0, grid.wavenumber(j / n), grid.wavenumber(j % n)];
                    if !grid.in_band(k) {
                        continue;
                    }
                    let idx = i0 * n * n + j;
                    let s = self.coeffs[0][idx].norm_sqr()
                        + self.coeffs[1][idx].norm_sqr()
                        + self.coeffs[2][idx].norm_sqr();
                    if s != 0.0 {
                        acc += w(k) * s;
                    }
                }
                acc
            })
            .collect();
        planes.iter().sum()
    }

    /// Mean (k = 0) coefficient.
    pub fn mean(&self) -> [f64; 3] {
        [self.coeffs[0][0].re, self.coeffs[1][0].re, self.coeffs[2][0].re]
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn max_abs_diff(&self, other: &VelocityField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flat_map(|c| c.iter()).all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Physical samples at `x_j = 2π j / n`.
    pub fn to_physical(&self) -> PhysicalField {
        let plan = self.grid.plan();
        let band = Some(self.grid.kmax());
        let (u0, u1) = fft::inverse_real_pair(&plan, &self.coeffs[0], &self.coeffs[1], band);
        let u2 = fft::inverse_real(&plan, &self.coeffs[2], band);
        PhysicalField { grid: self.grid, data: [u0, u1, u2] }
    }

    /// `‖u‖_p` by uniform quadrature over `[0, 2π)³`; `p = ∞` gives the
    /// maximum of `|u(x)|` over grid points.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        self.to_physical().lp_norm(p)
    }

    /// Embeds the spectrum into an `m³` grid (`m >= n`), keeping the band.
    pub(crate) fn padded_coefficients(&self, m: usize) -> [Vec<Complex64>; 3] {
        let n = self.grid.n();
        if m == n {
            return self.coeffs.clone();
        }
        let kmax = self.grid.kmax() as i64;
        let mi = m as i64;
        let mut out = [vec![ZERO; m * m * m], vec![ZERO; m * m * m], vec![ZERO; m * m * m]];
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                for k2 in -kmax..=kmax {
                    let src = self.grid.index_of([k0, k1, k2]).expect("band lies on grid");
                    let dst = ((k0.rem_euclid(mi) * mi + k1.rem_euclid(mi)) * mi + k2.rem_euclid(mi)) as usize;
                    for c in 0..3 {
                        out[c][dst] = self.coeffs[c][src];
                    }
                }
            }
        }
        out
    }
}

#[inline]
pub(crate) fn norm(k: [i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

impl Add for &VelocityField {
    type Output = VelocityField;

    fn add(self, rhs: &VelocityField) -> VelocityField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field addition");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x += y);
        }
        out
    }
}

impl Sub for &VelocityField {
    type Output = VelocityField;

    fn sub(self, rhs: &VelocityField) -> VelocityField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field subtraction");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x -= y);
        }
        out
    }
}

impl Mul<f64> for &VelocityField {
    type Output = VelocityField;

    fn mul(self, c: f64) -> VelocityField {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            a.par_iter_mut().for_each(|x| *x *= c);
        }
        out
    }
}

/// Point samples of a real vector field on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    data: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn new(grid: Grid, data: [Vec<f64>; 3]) -> Result<Self> {
        for c in &data {
            if c.len() != grid.len() {
                return Err(Error::SizeMismatch { expected: grid.len(), found: c.len() });
            }
        }
        Ok(PhysicalField { grid, data })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Self {
        let n = grid.n();
        let values: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| f([grid.coordinate(idx / (n * n)), grid.coordinate((idx / n) % n), grid.coordinate(idx % n)]))
            .collect();
        let mut data = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for (idx, v) in values.into_iter().enumerate() {
            for c in 0..3 {
                data[c][idx] = v[c];
            }
        }
        PhysicalField { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.data
    }

    /// Pointwise Euclidean magnitude `|u(x_j)|`.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| (self.data[0][i].powi(2) + self.data[1][i].powi(2) + self.data[2][i].powi(2)).sqrt())
            .collect()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::pre(format!("L^p exponent must be >= 1, got {p}")));
        }
        let mags = self.magnitudes();
        if p.is_infinite() {
            return Ok(mags.iter().cloned().fold(0.0, f64::max));
        }
        let peak = mags.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(0.0);
        }
        // Scale by the peak to keep large exponents finite.
        let sum: f64 = if p == 2.0 {
            mags.par_iter().map(|m| (m / peak) * (m / peak)).sum()
        } else {
            mags.par_iter().map(|m| (m / peak).powf(p)).sum()
        };
        Ok(peak * (sum * self.grid.cell_volume()).powf(1.0 / p))
    }

    /// Coefficients of the samples, truncated to the dealiased band.
    pub fn to_spectral(&self) -> VelocityField {
        let plan = self.grid.plan();
        let band = Some(self.grid.kmax());
        let (c0, c1) = fft::forward_real_pair(&plan, &self.data[0], &self.data[1], band);
        let c2 = fft::forward_real(&plan, &self.data[2], band);
        VelocityField { grid: self.grid, coeffs: [c0, c1, c2], time: None }
    }
}

/// One stored state of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: VelocityField,
}

/// Time-ordered snapshots of a viscous flow on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    nu: f64,
    snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn new(nu: f64, snapshots: Vec<Snapshot>) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::pre(format!("viscosity must be positive, got {nu}")));
        }
        validate_times(snapshots.iter().map(|s| s.time))?;
        if let Some(first) = snapshots.first() {
            let grid = first.field.grid();
            for s in &snapshots {
                if s.field.grid() != grid {
                    return Err(Error::GridMismatch { expected: grid.n(), found: s.field.grid().n() });
                }
            }
        }
        Ok(Trajectory { nu, snapshots })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn grid(&self) -> Grid {
        self.snapshots[0].field.grid()
    }

    /// Same trajectory with every field multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Trajectory {
        Trajectory {
            nu: self.nu,
            snapshots: self
                .snapshots
                .iter()
                .map(|s| Snapshot { time: s.time, field: &s.field * c })
                .collect(),
        }
    }
}

pub(crate) fn validate_times(times: impl Iterator<Item = f64>) -> Result<()> {
    let mut count = 0usize;
    let mut prev = f64::NEG_INFINITY;
    for t in times {
        if !t.is_finite() || t <= prev {
            return Err(Error::pre("snapshot times must be finite and strictly increasing"));
        }
        prev = t;
        count += 1;
    }
    if count < 2 {
        return Err(Error::pre(format!("a trajectory needs at least 2 snapshots, got {count}")));
    }
    Ok(())
}

/// Random access to the snapshots of a run, in memory or on disk.
pub trait SnapshotSource: Sync {
    fn grid(&self) -> Grid;
    fn nu(&self) -> f64;
    fn times(&self) -> Vec<f64>;
    fn load(&self, i: usize) -> Result<Cow<'_, VelocityField>>;

    fn len(&self) -> usize {
        self.times().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SnapshotSource for Trajectory {
    fn grid(&self) -> Grid {
        Trajectory::grid(self)
    }

    fn nu(&self) -> f64 {
        self.nu
    }

    fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    fn load(&self, i: usize) -> Result<Cow<'_, VelocityField>> {
        self.snapshots
            .get(i)
            .map(|s| Cow::Borrowed(&s.field))
            .ok_or_else(|| Error::pre(format!("snapshot {i} out of range")))
    }
}
