//! Dyadic energy flux `Π_{≤q}`, truncated energy balances and the shell
//! bounds used to control the flux.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::dyadic::{decompose, lambda, low_pass_multiplier, shell_weight, ShellIndex};
use crate::error::{Error, Result};
use crate::field::fft::{self, Fft3};
use crate::field::{SnapshotSource, VelocityField, BOX_VOLUME, ZERO};

/// Index into the six independent entries of the symmetric tensor `u_i u_j`.
#[inline]
pub(crate) fn sym(i: usize, j: usize) -> usize {
    const TABLE: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
    TABLE[i][j]
}

/// Spectra of `u_i u_j` on the field's grid, restricted to `|k|_∞ ≤ kmax`.
/// Products are formed on a grid of size `m > 3 kmax`, so they are alias-free.
pub(crate) fn quadratic_spectra(field: &VelocityField) -> [Vec<Complex64>; 6] {
    let grid = field.grid();
    let n = grid.n();
    let m = grid.product_size();
    let band = Some(grid.kmax());
    let plan = Fft3::cached(m);
    let c = field.padded_coefficients(m);
    let (u0, u1) = fft::inverse_real_pair(&plan, &c[0], &c[1], band);
    let u2 = fft::inverse_real(&plan, &c[2], band);
    drop(c);
    let u = [&u0, &u1, &u2];
    let product = |i: usize, j: usize| -> Vec<f64> { u[i].par_iter().zip(u[j].par_iter()).map(|(a, b)| a * b).collect() };
    let (a00, a11) = fft::forward_real_pair(&plan, &product(0, 0), &product(1, 1), band);
    let (a22, a01) = fft::forward_real_pair(&plan, &product(2, 2), &product(0, 1), band);
    let (a02, a12) = fft::forward_real_pair(&plan, &product(0, 2), &product(1, 2), band);
    let spectra = [a00, a11, a22, a01, a02, a12];
    if m == n {
        return spectra;
    }
    let kmax = grid.kmax() as i64;
    let mi = m as i64;
    spectra.map(|s| {
        let mut out = vec![ZERO; grid.len()];
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                for k2 in -kmax..=kmax {
                    let src = ((k0.rem_euclid(mi) * mi + k1.rem_euclid(mi)) * mi + k2.rem_euclid(mi)) as usize;
                    out[grid.index_of([k0, k1, k2]).expect("band lies on grid")] = s[src];
                }
            }
        }
        out
    })
}

/// Per-`|k|²` spectral budget of one field: the transfer density
/// `T(k) = Re Σ_ij conj(Â_ij(k)) i k_j û_i(k)` and `|û(k)|²`, summed over
/// each sphere `|k|² = s`. Every truncated quantity at every `q` is a
/// weighted sum over these arrays.
#[derive(Clone, Debug)]
pub struct SpectralBudget {
    transfer: Vec<f64>,
    energy: Vec<f64>,
}

impl SpectralBudget {
    pub fn new(field: &VelocityField) -> Self {
        let grid = field.grid();
        let kmax = grid.kmax();
        let smax = 3 * kmax * kmax;
        let a = quadratic_spectra(field);
        let u = field.coefficients();
        let n = grid.n();
        let partial = (0..n)
            .into_par_iter()
            .filter(|&i0| grid.wavenumber(i0).unsigned_abs() as usize <= kmax)
            .map(|i0| {
                let mut transfer = vec![0.0; smax + 1];
                let mut energy = vec![0.0; smax + 1];
                for j in 0..n * n {
                    let k = [grid.wavenumber(i0), grid.wavenumber(j / n), grid.wavenumber(j % n)];
                    if !grid.in_band(k) {
                        continue;
                    }
                    let idx = i0 * n * n + j;
                    let s = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize;
                    let mut t = 0.0;
                    for i in 0..3 {
                        let ui = u[i][idx];
                        for (jj, &kj) in k.iter().enumerate() {
                            if kj == 0 {
                                continue;
                            }
                            // conj(A) · i k_j u_i
                            let grad = Complex64::new(-(kj as f64) * ui.im, kj as f64 * ui.re);
                            t += (a[sym(i, jj)][idx].conj() * grad).re;
                        }
                        energy[s] += ui.norm_sqr();
                    }
                    transfer[s] += t;
                }
                (transfer, energy)
            })
            .collect::<Vec<_>>();
        let mut transfer = vec![0.0; smax + 1];
        let mut energy = vec![0.0; smax + 1];
        for (t, e) in partial {
            for s in 0..=smax {
                transfer[s] += t[s];
                energy[s] += e[s];
            }
        }
        SpectralBudget { transfer, energy }
    }

    fn weights(q: ShellIndex, s: usize) -> f64 {
        let w = low_pass_multiplier(q, (s as f64).sqrt());
        w * w
    }

    /// `Π_{≤q}`.
    pub fn flux(&self, q: ShellIndex) -> f64 {
        BOX_VOLUME * self.transfer.iter().enumerate().map(|(s, t)| Self::weights(q, s) * t).sum::<f64>()
    }

    /// `½‖u_{≤q}‖₂²`.
    pub fn truncated_energy(&self, q: ShellIndex) -> f64 {
        0.5 * BOX_VOLUME * self.energy.iter().enumerate().map(|(s, e)| Self::weights(q, s) * e).sum::<f64>()
    }

    /// `‖∇u_{≤q}‖₂²`.
    pub fn truncated_enstrophy(&self, q: ShellIndex) -> f64 {
        BOX_VOLUME
            * self.energy.iter().enumerate().map(|(s, e)| Self::weights(q, s) * s as f64 * e).sum::<f64>()
    }

    /// `‖u‖₂²`.
    pub fn energy(&self) -> f64 {
        BOX_VOLUME * self.energy.iter().sum::<f64>()
    }

    /// `‖∇u‖₂²`.
    pub fn enstrophy(&self) -> f64 {
        BOX_VOLUME * self.energy.iter().enumerate().map(|(s, e)| s as f64 * e).sum::<f64>()
    }
}

fn check_q(q: ShellIndex) -> Result<()> {
    if q < -1 {
        return Err(Error::pre(format!("flux shell index must be >= -1, got {q}")));
    }
    Ok(())
}

/// `Π_{≤q} = ∫ tr((u⊗u)_{≤q} · ∇u_{≤q}) dx`.
pub fn energy_flux(field: &VelocityField, q: ShellIndex) -> Result<f64> {
    check_q(q)?;
    Ok(SpectralBudget::new(field).flux(q))
}

/// `Π_{≤q}` for every `q` in `qs`, sharing one set of product transforms.
pub fn energy_fluxes(field: &VelocityField, qs: &[ShellIndex]) -> Result<Vec<f64>> {
    qs.iter().try_for_each(|&q| check_q(q))?;
    let budget = SpectralBudget::new(field);
    Ok(qs.iter().map(|&q| budget.flux(q)).collect())
}

/// Right-hand side of the flux estimate,
/// `[Σ_{r<q} λ_r^{2/3} a_r² λ_{|r−q|}^{−4/3}]^{3/2} + [Σ_{r≥q} λ_r^{2/3} a_r² λ_{|r−q|}^{−2/3}]^{3/2}`,
/// where `l3[i]` is `a_r = ‖u_r‖₃` for `r = i − 1`.
pub fn flux_estimate_rhs(l3: &[f64], q: ShellIndex) -> f64 {
    let (mut low, mut high) = (0.0, 0.0);
    for (i, &a) in l3.iter().enumerate() {
        let r = i as ShellIndex - 1;
        let base = shell_weight(r).powf(2.0 / 3.0) * a * a;
        let gap = lambda((r - q).abs());
        if r < q {
            low += base * gap.powf(-4.0 / 3.0);
        } else {
            high += base * gap.powf(-2.0 / 3.0);
        }
    }
    low.powf(1.5) + high.powf(1.5)
}

/// `|Π_{≤q}| / RHS` for each `q = −1..=Q`; `None` where both vanish.
pub fn flux_bound_ratios(field: &VelocityField) -> Result<Vec<(ShellIndex, Option<f64>)>> {
    let l3 = decompose(field).lp_norms(3.0)?;
    let budget = SpectralBudget::new(field);
    (-1..=field.grid().top_shell())
        .map(|q| {
            let flux = budget.flux(q).abs();
            let rhs = flux_estimate_rhs(&l3, q);
            if rhs > 0.0 {
                Ok((q, Some(flux / rhs)))
            } else if flux == 0.0 {
                Ok((q, None))
            } else {
                Err(Error::FluxContradiction { flux })
            }
        })
        .collect()
}

pub fn flux_bound_ratio(field: &VelocityField, q: ShellIndex) -> Result<Option<f64>> {
    check_q(q)?;
    let top = field.grid().top_shell();
    if q > top {
        return Err(Error::pre(format!("shell index {q} above top shell {top}")));
    }
    Ok(flux_bound_ratios(field)?[(q + 1) as usize].1)
}

/// `‖u_r‖₂^{(2p−6)/(p−2)} ‖u_r‖_p^{p/(p−2)}`, an upper bound for `‖u_r‖₃³`
/// (exponents 2 and 1 at `p = ∞`).
pub fn holder_shell_bound(l2: f64, lp: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 3.0 {
        return Err(Error::pre(format!("Hölder shell bound needs p >= 3, got {p}")));
    }
    if p.is_infinite() {
        return Ok(l2 * l2 * lp);
    }
    Ok(l2.powf((2.0 * p - 6.0) / (p - 2.0)) * lp.powf(p / (p - 2.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernsteinShellBound {
    /// `‖u_r‖₂^{3−β} ‖u_r‖_p^β λ_r^{exponent}` without the implicit constant.
    pub value: f64,
    /// `3/2 + 3β/p − 3β/2`.
    pub exponent: f64,
    /// `exponent ≥ 0`, equivalently `2/p + 1/β ≥ 1`.
    pub exponent_nonnegative: bool,
}

pub fn bernstein_shell_bound(l2: f64, lp: f64, p: f64, beta: f64, r: ShellIndex) -> Result<BernsteinShellBound> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::pre(format!("Bernstein shell bound needs p >= 1, got {p}")));
    }
    if !(beta > 0.0 && beta <= 3.0) {
        return Err(Error::pre(format!("Bernstein shell bound needs 0 < β <= 3, got {beta}")));
    }
    let exponent = 1.5 + 3.0 * beta / p - 1.5 * beta;
    let value = l2.powf(3.0 - beta) * lp.powf(beta) * shell_weight(r).powf(exponent);
    Ok(BernsteinShellBound { value, exponent, exponent_nonnegative: 2.0 / p + 1.0 / beta >= 1.0 })
}

/// Per-snapshot scalars needed by every balance diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotBudget {
    pub time: f64,
    /// `‖u‖₂²`.
    pub energy: f64,
    /// `‖∇u‖₂²`.
    pub enstrophy: f64,
    pub shells: Vec<ShellBudget>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellBudget {
    pub q: ShellIndex,
    pub flux: f64,
    /// `ν‖∇u_{≤q}‖₂²`.
    pub dissipation: f64,
    /// `½‖u_{≤q}‖₂²`.
    pub energy: f64,
}

impl SnapshotBudget {
    pub fn new(time: f64, field: &VelocityField, nu: f64, qs: &[ShellIndex]) -> Result<Self> {
        qs.iter().try_for_each(|&q| check_q(q))?;
        let b = SpectralBudget::new(field);
        let shells = qs
            .iter()
            .map(|&q| ShellBudget {
                q,
                flux: b.flux(q),
                dissipation: nu * b.truncated_enstrophy(q),
                energy: b.truncated_energy(q),
            })
            .collect();
        Ok(SnapshotBudget { time, energy: b.energy(), enstrophy: b.enstrophy(), shells })
    }
}

/// Budgets for every snapshot of a source at the given shells.
pub fn budgets(source: &dyn SnapshotSource, qs: &[ShellIndex]) -> Result<Vec<SnapshotBudget>> {
    let times = source.times();
    let nu = source.nu();
    (0..source.len())
        .into_par_iter()
        .map(|i| SnapshotBudget::new(times[i], &*source.load(i)?, nu, qs))
        .collect()
}

/// Residuals of a balance law `E(t) − E(t₀) = ∫_{t₀}^t g ds` with trapezoid quadrature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceResiduals {
    pub times: Vec<f64>,
    /// `|E(t_{i+1}) − E(t_i) − ∫_{t_i}^{t_{i+1}} g|`, one per interval.
    pub interval: Vec<f64>,
    /// `|E(t_i) − E(t₀) − ∫_{t₀}^{t_i} g|`, one per snapshot (first is 0).
    pub cumulative: Vec<f64>,
    /// Scale used by [`BalanceResiduals::max_relative`].
    pub scale: f64,
}

impl BalanceResiduals {
    fn from_series(times: Vec<f64>, energy: &[f64], rate: &[f64], scale: f64) -> Self {
        let mut interval = Vec::with_capacity(times.len().saturating_sub(1));
        let mut cumulative = vec![0.0];
        let mut integral = 0.0;
        for i in 1..times.len() {
            let step = 0.5 * (times[i] - times[i - 1]) * (rate[i] + rate[i - 1]);
            integral += step;
            interval.push((energy[i] - energy[i - 1] - step).abs());
            cumulative.push((energy[i] - energy[0] - integral).abs());
        }
        BalanceResiduals { times, interval, cumulative, scale }
    }

    pub fn max_cumulative(&self) -> f64 {
        self.cumulative.iter().copied().fold(0.0, f64::max)
    }

    /// Largest cumulative residual over `scale` (absolute when the scale is 0).
    pub fn max_relative(&self) -> f64 {
        relative(self.max_cumulative(), self.scale)
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

fn check_len(budgets: &[SnapshotBudget]) -> Result<()> {
    if budgets.len() < 2 {
        return Err(Error::pre(format!("balances need at least 2 snapshots, got {}", budgets.len())));
    }
    Ok(())
}

/// Truncated balance `½‖u_{≤q}(t)‖² = ½‖u_{≤q}(t₀)‖² + ∫(−ν‖∇u_{≤q}‖² + Π_{≤q})`
/// from precomputed budgets. Relative residuals use `½‖u_{≤q}(t₀)‖²`, or
/// `½‖u(t₀)‖²` when the truncated energy vanishes.
pub fn truncated_balance_from(budgets: &[SnapshotBudget], q: ShellIndex) -> Result<BalanceResiduals> {
    check_len(budgets)?;
    let pos = budgets[0]
        .shells
        .iter()
        .position(|s| s.q == q)
        .ok_or_else(|| Error::pre(format!("shell {q} missing from budgets")))?;
    let times: Vec<f64> = budgets.iter().map(|b| b.time).collect();
    let energy: Vec<f64> = budgets.iter().map(|b| b.shells[pos].energy).collect();
    let rate: Vec<f64> = budgets.iter().map(|b| b.shells[pos].flux - b.shells[pos].dissipation).collect();
    let scale = if energy[0] > 0.0 { energy[0] } else { 0.5 * budgets[0].energy };
    Ok(BalanceResiduals::from_series(times, &energy, &rate, scale))
}

pub fn truncated_balance(source: &dyn SnapshotSource, q: ShellIndex) -> Result<BalanceResiduals> {
    if source.len() < 2 {
        return Err(Error::pre("balances need at least 2 snapshots"));
    }
    truncated_balance_from(&budgets(source, &[q])?, q)
}

/// Energy equality `‖u(t)‖² + 2ν∫‖∇u‖² = ‖u(t₀)‖²`; relative to `‖u(t₀)‖²`.
pub fn energy_balance_from(budgets: &[SnapshotBudget], nu: f64) -> Result<BalanceResiduals> {
    check_len(budgets)?;
    let times: Vec<f64> = budgets.iter().map(|b| b.time).collect();
    let energy: Vec<f64> = budgets.iter().map(|b| b.energy).collect();
    let rate: Vec<f64> = budgets.iter().map(|b| -2.0 * nu * b.enstrophy).collect();
    Ok(BalanceResiduals::from_series(times, &energy, &rate, energy[0]))
}

pub fn energy_balance_residual(source: &dyn SnapshotSource) -> Result<BalanceResiduals> {
    if source.len() < 2 {
        return Err(Error::pre("balances need at least 2 snapshots"));
    }
    energy_balance_from(&budgets(source, &[])?, source.nu())
}

/// `∫|Π_{≤q}| ds` by the trapezoid rule, for each shell in the budgets.
pub fn flux_time_integrals_from(budgets: &[SnapshotBudget]) -> Vec<FluxIntegral> {
    let Some(first) = budgets.first() else { return Vec::new() };
    first
        .shells
        .iter()
        .enumerate()
        .map(|(pos, s)| {
            let int_abs_flux = budgets
                .windows(2)
                .map(|w| 0.5 * (w[1].time - w[0].time) * (w[0].shells[pos].flux.abs() + w[1].shells[pos].flux.abs()))
                .sum();
            FluxIntegral { q: s.q, lambda_q: lambda(s.q), int_abs_flux }
        })
        .collect()
}

pub fn flux_time_integrals(source: &dyn SnapshotSource, qs: &[ShellIndex]) -> Result<Vec<FluxIntegral>> {
    Ok(flux_time_integrals_from(&budgets(source, qs)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxIntegral {
    pub q: ShellIndex,
    pub lambda_q: f64,
    pub int_abs_flux: f64,
}

/// Flux, dissipation, truncated energy and cumulative balance residual per
/// `(t, q)`, plus the per-`q` time integrals of `|Π_{≤q}|`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxReport {
    pub rows: Vec<FluxRow>,
    pub integrals: Vec<FluxIntegral>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxRow {
    pub t: f64,
    pub q: ShellIndex,
    pub flux: f64,
    pub dissipation: f64,
    pub energy: f64,
    pub residual: f64,
    /// `residual` over the balance scale of that `q`.
    pub relative_residual: f64,
}

impl FluxReport {
    pub fn from_budgets(budgets: &[SnapshotBudget]) -> Result<Self> {
        check_len(budgets)?;
        let shells: Vec<ShellIndex> = budgets[0].shells.iter().map(|s| s.q).collect();
        let residuals = shells
            .iter()
            .map(|&q| truncated_balance_from(budgets, q))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(budgets.len() * shells.len());
        for (i, b) in budgets.iter().enumerate() {
            for (pos, s) in b.shells.iter().enumerate() {
                rows.push(FluxRow {
                    t: b.time,
                    q: s.q,
                    flux: s.flux,
                    dissipation: s.dissipation,
                    energy: s.energy,
                    residual: residuals[pos].cumulative[i],
                    relative_residual: relative(residuals[pos].cumulative[i], residuals[pos].scale),
                });
            }
        }
        Ok(FluxReport { rows, integrals: flux_time_integrals_from(budgets) })
    }

    pub fn compute(source: &dyn SnapshotSource, qs: &[ShellIndex]) -> Result<Self> {
        Self::from_budgets(&budgets(source, qs)?)
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "q", "flux", "dissipation", "energy", "residual", "relative_residual"])?;
        for r in &self.rows {
            w.write_record([
                crate::fmt_f64(r.t),
                r.q.to_string(),
                crate::fmt_f64(r.flux),
                crate::fmt_f64(r.dissipation),
                crate::fmt_f64(r.energy),
                crate::fmt_f64(r.residual),
                crate::fmt_f64(r.relative_residual),
            ])?;
        }
        w.flush()
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "lambda_q", "int_abs_flux"])?;
        for s in &self.integrals {
            w.write_record([s.q.to_string(), crate::fmt_f64(s.lambda_q), crate::fmt_f64(s.int_abs_flux)])?;
        }
        w.flush()
    }
}

/// Brute-force triad sum for `Π_{≤q}`:
/// `(2π)³ Re Σ_{p,r} Σ_ij conj(û_i(p) û_j(r)) · i k_j χ_q(|k|)² û_i(k)`, `k = p + r`.
#[cfg(test)]
fn triad_flux_oracle(field: &VelocityField, q: ShellIndex) -> f64 {
    let grid = field.grid();
    assert!(grid.n() <= 16, "the triad oracle is O(n⁶)");
    let modes: Vec<([i64; 3], [Complex64; 3])> = (0..grid.len())
        .map(|idx| grid.mode(idx))
        .filter(|&k| grid.in_band(k))
        .map(|k| (k, field.coefficient(k)))
        .filter(|(_, v)| v.iter().any(|c| c.norm() > 0.0))
        .collect();
    let mut total = 0.0;
    for (p, up) in &modes {
        for (r, ur) in &modes {
            let k = [p[0] + r[0], p[1] + r[1], p[2] + r[2]];
            if !grid.in_band(k) {
                continue;
            }
            let w = low_pass_multiplier(q, crate::field::norm(k));
            if w == 0.0 {
                continue;
            }
            let uk = field.coefficient(k);
            for i in 0..3 {
                for j in 0..3 {
                    let a = (up[i] * ur[j]).conj();
                    let g = Complex64::new(0.0, k[j] as f64) * uk[i];
                    total += w * w * (a * g).re;
                }
            }
        }
    }
    BOX_VOLUME * total
}
