//! Intermittency heuristics: the exponent `f(α, p, d)`, worst-dimension
//! logic, the dyadic cascade model and an intermittency-dimension estimator.

use std::io::Write;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dyadic::{lambda, shell_project, ShellIndex};
use crate::error::{Error, Result};
use crate::field::{VelocityField, BOX_VOLUME};

fn check_d(d: f64) -> Result<()> {
    if (0.0..=3.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::pre(format!("intermittency dimension must lie in [0, 3], got {d}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::pre(format!("integrability exponent must be >= 1, got {p}")))
    }
}

/// `f(α, p, d) = (2α + (1 − 2/p)(3 − d)) / (d − 5)`.
pub fn f_exponent(alpha: f64, p: f64, d: f64) -> Result<f64> {
    check_p(p)?;
    check_d(d)?;
    Ok((2.0 * alpha + (1.0 - 2.0 / p) * (3.0 - d)) / (d - 5.0))
}

/// [`f_exponent`] in exact arithmetic, with `inv_p = 1/p`.
pub fn f_exponent_exact(alpha: Rational64, inv_p: Rational64, d: Rational64) -> Result<Rational64> {
    let r = |n| Rational64::from_integer(n);
    if inv_p < r(0) || inv_p > r(1) {
        return Err(Error::pre(format!("1/p must lie in [0, 1], got {inv_p}")));
    }
    if d < r(0) || d > r(3) {
        return Err(Error::pre(format!("intermittency dimension must lie in [0, 3], got {d}")));
    }
    Ok((r(2) * alpha + (r(1) - r(2) * inv_p) * (r(3) - d)) / (d - r(5)))
}

/// Worst intermittency dimension for given `(α, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorstDimension {
    /// `d = 0`, for `α > 1 − 2/p`.
    Zero,
    /// `d → 1⁻`, for `α ≤ 1 − 2/p` (at equality `f` does not depend on `d`).
    OneMinus,
}

impl WorstDimension {
    /// The dimension at which the limiting exponent is evaluated.
    pub fn limit(self) -> Rational64 {
        match self {
            WorstDimension::Zero => Rational64::zero(),
            WorstDimension::OneMinus => Rational64::one(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WorstDimension::Zero => "zero",
            WorstDimension::OneMinus => "one-minus",
        }
    }
}

pub fn worst_d(alpha: Rational64, inv_p: Rational64) -> WorstDimension {
    let one = Rational64::one();
    if alpha > one - Rational64::from_integer(2) * inv_p {
        WorstDimension::Zero
    } else {
        WorstDimension::OneMinus
    }
}

/// Optimal `1/β`: `α/2 + 1/2 − 1/p` for `α ≤ 1 − 2/p`, else `2α/5 + 3/5 − 6/(5p)`.
pub fn optimal_inv_beta(alpha: Rational64, inv_p: Rational64) -> Rational64 {
    let r = |n, d| Rational64::new(n, d);
    match worst_d(alpha, inv_p) {
        WorstDimension::OneMinus => alpha * r(1, 2) + r(1, 2) - inv_p,
        WorstDimension::Zero => alpha * r(2, 5) + r(3, 5) - r(6, 5) * inv_p,
    }
}

/// Optimal `β`, or `None` when `1/β ≤ 0` (no finite exponent).
pub fn optimal_beta(alpha: Rational64, inv_p: Rational64) -> Option<Rational64> {
    let inv = optimal_inv_beta(alpha, inv_p);
    (inv > Rational64::zero()).then(|| inv.recip())
}

/// `(L, N) = (λ²E, λ^{(5−d)/2} E^{3/2})` and whether `L > N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermScales {
    pub linear: f64,
    pub nonlinear: f64,
    pub linear_dominates: bool,
}

pub fn linear_vs_nonlinear(lambda_: f64, energy: f64, d: f64) -> Result<TermScales> {
    if !(lambda_ >= 1.0) || !(energy > 0.0) {
        return Err(Error::pre(format!("need λ >= 1 and E > 0, got λ={lambda_}, E={energy}")));
    }
    check_d(d)?;
    let linear = lambda_ * lambda_ * energy;
    let nonlinear = lambda_.powf((5.0 - d) / 2.0) * energy.powf(1.5);
    Ok(TermScales { linear, nonlinear, linear_dominates: linear > nonlinear })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CascadeParams {
    pub d: f64,
    pub energy: f64,
    pub start_shell: i32,
    pub shells: usize,
    pub alpha: f64,
    pub p: f64,
}

/// One shell of the cascade. Times are measured from the moment the
/// energy reaches `start_shell`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CascadeRow {
    pub n: i32,
    pub lambda_n: f64,
    /// `T_n = E / Flux = E^{−1/2} λ_n^{−(5−d)/2}`.
    pub t_n: f64,
    /// Time at which shell `n` becomes active, `Σ_{m<n} T_m`.
    pub cumulative_t: f64,
    /// `T* − cumulative_t = Σ_{m≥n} T_m`.
    pub remaining_t: f64,
    /// `λ^α √E`.
    pub h_alpha_norm: f64,
    /// `λ^{α + (1−2/p)(3−d)/2} √E`.
    pub besov_norm: f64,
    /// `Σ_{m≤n} λ_m² E T_m`.
    pub enstrophy_partial_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeRun {
    pub params: CascadeParams,
    /// `T* = Σ_{n ≥ start} T_n`, summed in closed form.
    pub blowup_time: f64,
    pub rows: Vec<CascadeRow>,
    /// Ratio test on the enstrophy terms `√E λ_n^{(d−1)/2}`: ratio `2^{(d−1)/2} ≥ 1`.
    pub enstrophy_diverges: bool,
}

pub fn cascade_simulate(params: CascadeParams) -> Result<CascadeRun> {
    let CascadeParams { d, energy, start_shell, shells, alpha, p } = params;
    if !(0.0..3.0).contains(&d) {
        return Err(Error::pre(format!("cascade needs d in [0, 3), got {d}")));
    }
    if !(energy > 0.0) {
        return Err(Error::pre(format!("cascade energy must be positive, got {energy}")));
    }
    check_p(p)?;
    let gamma = (5.0 - d) / 2.0;
    let tail = 1.0 / (1.0 - 2f64.powf(-gamma));
    let sqrt_e = energy.sqrt();
    let period = |n: i32| lambda(n).powf(-gamma) / sqrt_e;
    let besov_shift = (1.0 - 2.0 / p) * (3.0 - d) / 2.0;
    let mut rows = Vec::with_capacity(shells);
    let mut cumulative = 0.0;
    let mut enstrophy = 0.0;
    for i in 0..shells {
        let n = start_shell + i as i32;
        let lam = lambda(n);
        let t_n = period(n);
        enstrophy += lam * lam * energy * t_n;
        rows.push(CascadeRow {
            n,
            lambda_n: lam,
            t_n,
            cumulative_t: cumulative,
            remaining_t: t_n * tail,
            h_alpha_norm: lam.powf(alpha) * sqrt_e,
            besov_norm: lam.powf(alpha + besov_shift) * sqrt_e,
            enstrophy_partial_sum: enstrophy,
        });
        cumulative += t_n;
    }
    Ok(CascadeRun {
        params,
        blowup_time: period(start_shell) * tail,
        rows,
        enstrophy_diverges: (d - 1.0) / 2.0 >= 0.0,
    })
}

impl CascadeRun {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "lambda_n",
            "T_n",
            "cumulative_t",
            "remaining_t",
            "H_alpha_norm",
            "Besov_norm",
            "enstrophy_partial_sum",
        ])?;
        let f = crate::fmt_f64;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                f(r.lambda_n),
                f(r.t_n),
                f(r.cumulative_t),
                f(r.remaining_t),
                f(r.h_alpha_norm),
                f(r.besov_norm),
                f(r.enstrophy_partial_sum),
            ])?;
        }
        w.flush()
    }
}

/// Least-squares slope of `log y` against `log x` over the last `tail` points.
pub fn loglog_slope(x: &[f64], y: &[f64], tail: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { expected: x.len(), found: y.len() });
    }
    let k = tail.min(x.len());
    if k < 2 {
        return Err(Error::pre("slope needs at least two points"));
    }
    let lx: Vec<f64> = x[x.len() - k..].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y[y.len() - k..].iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k as f64;
    let my = ly.iter().sum::<f64>() / k as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Estimated intermittency dimension of shell `q`:
/// `d = 3 − 2 log(√(vol/2) ‖u_q‖_∞ / ‖u_q‖₂) / log λ_q`, clipped to `[0, 3]`.
/// The factor `√(vol/2)` is the `‖·‖₂/‖·‖_∞` ratio of a single Fourier mode,
/// which therefore reports `d = 3`.
pub fn intermittency_estimate(field: &VelocityField, q: ShellIndex) -> Result<f64> {
    if q < 1 {
        return Err(Error::pre(format!("intermittency estimate needs q >= 1, got {q}")));
    }
    let shell = shell_project(field, q)?.to_physical();
    let l2 = shell.lp_norm(2.0)?;
    if l2 == 0.0 {
        return Err(Error::pre(format!("shell {q} is empty")));
    }
    let linf = shell.lp_norm(f64::INFINITY)?;
    let concentration = linf / l2 * (BOX_VOLUME / 2.0).sqrt();
    let d = 3.0 - 2.0 * concentration.ln() / lambda(q).ln();
    Ok(d.clamp(0.0, 3.0))
}
