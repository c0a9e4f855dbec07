//! Littlewood-Paley machinery: smooth cutoffs, dyadic shell projections,
//! Besov norms and Bernstein ratios.
//!
//! The cutoff `χ` equals 1 on `[0, 3/4]` and 0 on `[1, ∞)` with a `C^∞`
//! transition built from `exp(-1/s)`. Shell multipliers are
//! `φ_q(ξ) = χ(ξ/λ_{q+1}) − χ(ξ/λ_q)` for `q >= 0` and `χ(ξ)` for `q = −1`,
//! with `λ_q = 2^q`, so that they telescope to a partition of unity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;

/// Dyadic shell index, `-1..=Q`.
pub type ShellIndex = i32;

/// The smooth Littlewood-Paley cutoff `χ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CutoffProfile;

impl CutoffProfile {
    /// Checked evaluation of `χ(ξ)`.
    pub fn eval(&self, xi: f64) -> Result<f64> {
        check_frequency(xi)?;
        Ok(chi(xi))
    }

    /// Checked evaluation of `φ_q(ξ)` for `q >= 0`.
    pub fn eval_phi(&self, q: ShellIndex, xi: f64) -> Result<f64> {
        check_frequency(xi)?;
        if q < 0 {
            return Err(Error::pre(format!("φ_q is defined for q >= 0, got {q}")));
        }
        Ok(phi(q, xi))
    }
}

fn check_frequency(xi: f64) -> Result<()> {
    if xi.is_nan() || xi < 0.0 {
        return Err(Error::pre(format!("frequency ratio must be >= 0, got {xi}")));
    }
    Ok(())
}

fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step from 1 at `s <= 0` to 0 at `s >= 1`; `ψ(s) + ψ(1−s) = 1`.
pub(crate) fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = g(1.0 - s);
        a / (g(s) + a)
    }
}

/// `χ(ξ)`: 1 for `ξ <= 3/4`, 0 for `ξ >= 1`.
#[inline]
pub fn chi(xi: f64) -> f64 {
    if xi <= 0.75 {
        1.0
    } else if xi >= 1.0 {
        0.0
    } else {
        smooth_step((xi - 0.75) * 4.0)
    }
}

/// `λ_q = 2^q`.
#[inline]
pub fn lambda(q: ShellIndex) -> f64 {
    2f64.powi(q)
}

/// Weight of shell `q` in Besov sums and shell estimates; the low block
/// `q = −1` is weighted by 1.
#[inline]
pub fn shell_weight(q: ShellIndex) -> f64 {
    if q < 0 {
        1.0
    } else {
        lambda(q)
    }
}

/// `φ_q(ξ) = χ(ξ/λ_{q+1}) − χ(ξ/λ_q)`.
#[inline]
pub fn phi(q: ShellIndex, xi: f64) -> f64 {
    chi(xi / lambda(q + 1)) - chi(xi / lambda(q))
}

/// Multiplier of shell `q`: `χ` for `q = −1`, `φ_q` otherwise.
#[inline]
pub fn shell_multiplier(q: ShellIndex, xi: f64) -> f64 {
    if q < 0 {
        chi(xi)
    } else {
        phi(q, xi)
    }
}

/// Multiplier of `u_{<=q}`, `χ(ξ/λ_{q+1})`.
#[inline]
pub fn low_pass_multiplier(q: ShellIndex, xi: f64) -> f64 {
    chi(xi / lambda(q + 1))
}

fn check_shell(field: &VelocityField, q: ShellIndex) -> Result<()> {
    let top = field.grid().top_shell();
    if q < -1 || q > top {
        return Err(Error::pre(format!("shell index {q} outside -1..={top}")));
    }
    Ok(())
}

/// `u_q`, the Littlewood-Paley piece of `field` at shell `q`.
pub fn shell_project(field: &VelocityField, q: ShellIndex) -> Result<VelocityField> {
    check_shell(field, q)?;
    Ok(field.apply_multiplier(|xi| shell_multiplier(q, xi)))
}

/// `u_{<=q} = Σ_{r<=q} u_r`, applied as the single multiplier `χ(|k|/λ_{q+1})`.
pub fn low_pass(field: &VelocityField, q: ShellIndex) -> Result<VelocityField> {
    if q < -1 {
        return Err(Error::pre(format!("low-pass index must be >= -1, got {q}")));
    }
    Ok(field.apply_multiplier(|xi| low_pass_multiplier(q, xi)))
}

/// All shells `u_{-1}, u_0, ..., u_Q` of a field.
#[derive(Clone, Debug)]
pub struct DyadicShells {
    shells: Vec<VelocityField>,
}

impl DyadicShells {
    pub fn top(&self) -> ShellIndex {
        self.shells.len() as ShellIndex - 2
    }

    pub fn shell(&self, q: ShellIndex) -> &VelocityField {
        &self.shells[(q + 1) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ShellIndex, &VelocityField)> {
        self.shells.iter().enumerate().map(|(i, f)| (i as ShellIndex - 1, f))
    }

    /// `Σ_q u_q`.
    pub fn reconstruct(&self) -> VelocityField {
        let mut acc = self.shells[0].clone();
        for s in &self.shells[1..] {
            acc = &acc + s;
        }
        acc
    }

    /// `Σ_q ‖u_q‖₂²`.
    pub fn energy_sum(&self) -> f64 {
        self.shells.iter().map(|s| s.energy()).sum()
    }

    /// `‖u_q‖_p` for every shell.
    pub fn lp_norms(&self, p: f64) -> Result<Vec<f64>> {
        self.shells.par_iter().map(|s| s.lp_norm(p)).collect()
    }
}

pub fn decompose(field: &VelocityField) -> DyadicShells {
    let top = field.grid().top_shell();
    let shells = (-1..=top)
        .into_par_iter()
        .map(|q| field.apply_multiplier(|xi| shell_multiplier(q, xi)))
        .collect();
    DyadicShells { shells }
}

/// Exponents `(s, p, q)` of the Besov space `B^s_{p,q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    /// Regularity exponent.
    pub s: f64,
    /// Spatial integrability, `>= 1` (may be infinite).
    pub p: f64,
    /// Summability over shells, `>= 1` (may be infinite).
    pub q: f64,
}

impl BesovSpec {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() || p.is_nan() || p < 1.0 || q.is_nan() || q < 1.0 {
            return Err(Error::pre(format!("invalid Besov exponents s={s}, p={p}, q={q}")));
        }
        Ok(BesovSpec { s, p, q })
    }
}

/// `‖u‖_{B^s_{p,q}} = ‖ λ_r^s ‖u_r‖_p ‖_{ℓ^q(r >= −1)}`.
pub fn besov_norm(field: &VelocityField, spec: &BesovSpec) -> Result<f64> {
    let shells = decompose(field);
    let norms = shells.lp_norms(spec.p)?;
    let weighted = norms
        .iter()
        .enumerate()
        .map(|(i, &v)| shell_weight(i as ShellIndex - 1).powf(spec.s) * v);
    Ok(sequence_norm(weighted, spec.q))
}

/// `ℓ^q` norm of a nonnegative sequence.
pub(crate) fn sequence_norm(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Bernstein ratio `‖u_q‖_r / (λ_q^{3(1/s − 1/r)} ‖u_q‖_s)` for a field
/// already localized to shell `q`. Returns `None` for a zero shell.
pub fn bernstein_check(field: &VelocityField, q: ShellIndex, s: f64, r: f64) -> Result<Option<f64>> {
    if s.is_nan() || r.is_nan() || s < 1.0 {
        return Err(Error::pre(format!("Bernstein exponents must satisfy 1 <= s, got s={s}")));
    }
    if r < s {
        return Err(Error::pre(format!("Bernstein exponents need s <= r, got s={s}, r={r}")));
    }
    if r == s {
        return Ok(if field.energy() > 0.0 { Some(1.0) } else { None });
    }
    let phys = field.to_physical();
    let low = phys.lp_norm(s)?;
    if low == 0.0 {
        return Ok(None);
    }
    let high = phys.lp_norm(r)?;
    let exponent = 3.0 * (1.0 / s - 1.0 / r);
    Ok(Some(high / (shell_weight(q).powf(exponent) * low)))
}

/// One row of the shell spectrum table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellSpectrumRow {
    pub q: ShellIndex,
    pub lambda_q: f64,
    pub l2: f64,
    pub l3: f64,
    pub lp: f64,
    pub linf: f64,
}

/// Shell norms `(q, λ_q, ‖u_q‖₂, ‖u_q‖₃, ‖u_q‖_p, ‖u_q‖_∞)` for every shell.
pub fn shell_spectrum(field: &VelocityField, p: f64) -> Result<Vec<ShellSpectrumRow>> {
    let shells = decompose(field);
    shells
        .shells
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let q = i as ShellIndex - 1;
            let phys = s.to_physical();
            Ok(ShellSpectrumRow {
                q,
                lambda_q: shell_weight(q),
                l2: phys.lp_norm(2.0)?,
                l3: phys.lp_norm(3.0)?,
                lp: phys.lp_norm(p)?,
                linf: phys.lp_norm(f64::INFINITY)?,
            })
        })
        .collect()
}

pub fn write_shell_spectrum_csv<W: std::io::Write>(rows: &[ShellSpectrumRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "lambda_q", "l2", "l3", "lp", "linf"])?;
    for r in rows {
        w.write_record([
            r.q.to_string(),
            crate::fmt_f64(r.lambda_q),
            crate::fmt_f64(r.l2),
            crate::fmt_f64(r.l3),
            crate::fmt_f64(r.lp),
            crate::fmt_f64(r.linf),
        ])?;
    }
    w.flush()?;
    Ok(())
}
