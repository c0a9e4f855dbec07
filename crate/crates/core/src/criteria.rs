//! The `(β, p, α)` landscape in exact arithmetic, region labels, and the
//! hypothesis checkers that pair a parameter region with measured norms.
//!
//! Exponents are carried as reciprocals `b = 1/β` and `p' = 1/p`, so `∞`
//! is simply `0`.

use std::fmt;
use std::io::Write;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::dyadic::BesovSpec;
use crate::error::{Error, Result};
use crate::field::SnapshotSource;
use crate::timeseries::{membership, NormSeries, TimeSpaceSpec};

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn int(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

/// Parses an exponent (`"inf"`, an integer, a fraction `a/b`, or a finite
/// decimal) and returns its reciprocal exactly.
pub fn parse_reciprocal(s: &str) -> Result<Rational64> {
    let t = s.trim();
    if matches!(t, "inf" | "infinity" | "∞") {
        return Ok(Rational64::zero());
    }
    let value = if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| Error::pre(format!("bad exponent {s:?}")))?;
        let b: i64 = b.trim().parse().map_err(|_| Error::pre(format!("bad exponent {s:?}")))?;
        if b == 0 {
            return Err(Error::pre(format!("bad exponent {s:?}")));
        }
        q(a, b)
    } else if let Some((w, f)) = t.split_once('.') {
        let digits = f.len() as u32;
        if digits > 12 || !f.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::pre(format!("bad exponent {s:?}")));
        }
        let den = 10i64.pow(digits);
        let whole: i64 = if w.is_empty() { 0 } else { w.parse().map_err(|_| Error::pre(format!("bad exponent {s:?}")))? };
        let frac: i64 = if f.is_empty() { 0 } else { f.parse().map_err(|_| Error::pre(format!("bad exponent {s:?}")))? };
        q(whole * den + if whole < 0 { -frac } else { frac }, den)
    } else {
        int(t.parse().map_err(|_| Error::pre(format!("bad exponent {s:?}")))?)
    };
    if !value.is_positive() {
        return Err(Error::pre(format!("exponent must be positive, got {s:?}")));
    }
    Ok(value.recip())
}

/// `1/r` as a float exponent (`∞` for `r = 0`).
pub fn exponent_value(recip: Rational64) -> f64 {
    if recip.is_zero() {
        f64::INFINITY
    } else {
        to_f64(recip.recip())
    }
}

pub fn to_f64(r: Rational64) -> f64 {
    r.to_f64().expect("finite rational")
}

fn check_params(inv_beta: Rational64, inv_p: Rational64) -> Result<()> {
    if inv_beta.is_negative() {
        return Err(Error::pre(format!("1/β must be >= 0, got {inv_beta}")));
    }
    if inv_p.is_negative() || inv_p > Rational64::one() {
        return Err(Error::pre(format!("1/p must lie in [0, 1], got {inv_p}")));
    }
    Ok(())
}

/// Branch of the piecewise minimal-α formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaBranch {
    /// `β ≥ 3, p ≥ β`: `2/β + 2/p − 1`.
    LargeBetaLargeP,
    /// `β ≥ 3, p ≤ β`: `1/β + 3/p − 1`.
    LargeBetaSmallP,
    /// `β ≤ 3, 1/β + 2/p ≥ 1`: `5/(2β) + 3/p − 3/2`.
    SmallBetaAbove,
    /// `β ≤ 3, 1/β + 2/p ≤ 1`: `2/β + 2/p − 1`.
    SmallBetaBelow,
}

impl AlphaBranch {
    pub fn eval(self, inv_beta: Rational64, inv_p: Rational64) -> Rational64 {
        let (b, p) = (inv_beta, inv_p);
        match self {
            AlphaBranch::LargeBetaLargeP | AlphaBranch::SmallBetaBelow => int(2) * b + int(2) * p - int(1),
            AlphaBranch::LargeBetaSmallP => b + int(3) * p - int(1),
            AlphaBranch::SmallBetaAbove => q(5, 2) * b + int(3) * p - q(3, 2),
        }
    }

    /// Whether the branch condition holds (closed conditions as printed).
    pub fn applies(self, inv_beta: Rational64, inv_p: Rational64) -> bool {
        let third = q(1, 3);
        let (b, p) = (inv_beta, inv_p);
        match self {
            AlphaBranch::LargeBetaLargeP => b <= third && p <= b,
            AlphaBranch::LargeBetaSmallP => b <= third && p >= b,
            AlphaBranch::SmallBetaAbove => b >= third && b + int(2) * p >= int(1),
            AlphaBranch::SmallBetaBelow => b >= third && b + int(2) * p <= int(1),
        }
    }

    pub const ALL: [AlphaBranch; 4] = [
        AlphaBranch::LargeBetaLargeP,
        AlphaBranch::LargeBetaSmallP,
        AlphaBranch::SmallBetaAbove,
        AlphaBranch::SmallBetaBelow,
    ];
}

/// Minimal α for `(1/β, 1/p)`, with the first printed branch that applies.
pub fn minimal_alpha_branch(inv_beta: Rational64, inv_p: Rational64) -> Result<(Rational64, AlphaBranch)> {
    check_params(inv_beta, inv_p)?;
    let branch = AlphaBranch::ALL
        .into_iter()
        .find(|b| b.applies(inv_beta, inv_p))
        .expect("branches cover the parameter range");
    Ok((branch.eval(inv_beta, inv_p), branch))
}

pub fn minimal_alpha(inv_beta: Rational64, inv_p: Rational64) -> Result<Rational64> {
    minimal_alpha_branch(inv_beta, inv_p).map(|(a, _)| a)
}

/// Lower bounds on `1/x` in the interpolation derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationConstraint {
    /// `1/x ≥ 3 − 6/p` (target integrability at most 3).
    SpaceIntegrability,
    /// `1/x ≥ 3 − 6/β` (`x + y ≤ 1`).
    WeightSum,
    /// `1/x ≥ 3/β` (`y ≥ 0`).
    NonnegativeWeight,
    /// `1/x ≥ 1` (`x ≤ 1`).
    UnitWeight,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationResult {
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub inv_x: Rational64,
    /// Every constraint attaining the maximum.
    pub active: Vec<InterpolationConstraint>,
}

/// Minimizes `(3/p + 2/β − 3/2) + 1/(6x)` over admissible `x ∈ (0, 1]`.
pub fn minimal_alpha_via_interpolation(inv_beta: Rational64, inv_p: Rational64) -> Result<InterpolationResult> {
    check_params(inv_beta, inv_p)?;
    if inv_beta > Rational64::one() {
        return Err(Error::pre(format!(
            "the interpolation derivation needs β >= 1, got 1/β = {inv_beta}"
        )));
    }
    let bounds = [
        (InterpolationConstraint::SpaceIntegrability, int(3) - int(6) * inv_p),
        (InterpolationConstraint::WeightSum, int(3) - int(6) * inv_beta),
        (InterpolationConstraint::NonnegativeWeight, int(3) * inv_beta),
        (InterpolationConstraint::UnitWeight, int(1)),
    ];
    let inv_x = bounds.iter().map(|b| b.1).max().expect("nonempty");
    let active = bounds.iter().filter(|b| b.1 == inv_x).map(|b| b.0).collect();
    let alpha = int(3) * inv_p + int(2) * inv_beta - q(3, 2) + inv_x / int(6);
    Ok(InterpolationResult { alpha, inv_x, active })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RegionLabel {
    #[serde(rename = "theorem-1.1-improved")]
    Theorem11Improved,
    #[serde(rename = "classical-1")]
    Classical1,
    #[serde(rename = "classical-2")]
    Classical2,
    #[serde(rename = "classical-3")]
    Classical3,
    #[serde(rename = "theorem-1.3-extended")]
    Theorem13Extended,
    #[serde(rename = "outside")]
    Outside,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Theorem11Improved => "theorem-1.1-improved",
            RegionLabel::Classical1 => "classical-1",
            RegionLabel::Classical2 => "classical-2",
            RegionLabel::Classical3 => "classical-3",
            RegionLabel::Theorem13Extended => "theorem-1.3-extended",
            RegionLabel::Outside => "outside",
        }
    }

    /// Labels in precedence order.
    pub const ALL: [RegionLabel; 6] = [
        RegionLabel::Theorem11Improved,
        RegionLabel::Classical1,
        RegionLabel::Classical2,
        RegionLabel::Classical3,
        RegionLabel::Theorem13Extended,
        RegionLabel::Outside,
    ];

    /// Whether `(1/β, 1/p)` satisfies this region's parameter conditions.
    pub fn contains(self, inv_beta: Rational64, inv_p: Rational64) -> bool {
        let (b, p) = (inv_beta, inv_p);
        let one = Rational64::one();
        let third = q(1, 3);
        let in_range = !b.is_negative() && !p.is_negative() && p <= one;
        let s = b + int(2) * p;
        match self {
            // 1 ≤ β < p ≤ ∞ and 2/p + 1/β < 1.
            RegionLabel::Theorem11Improved => in_range && b <= one && p < b && s < one,
            // 1/β + 2/p ≤ 1 and p ≥ β.
            RegionLabel::Classical1 => in_range && s <= one && p <= b,
            // 1/β + 2/p ≥ 1, 1 ≤ β ≤ 3, p ≥ 1.
            RegionLabel::Classical2 => in_range && s >= one && b >= third && b <= one,
            // β ≥ 3 and 1 ≤ p ≤ β.
            RegionLabel::Classical3 => in_range && b <= third && p >= b,
            // 0 < β < 1 (then 2/p + 1/β ≥ 1 holds automatically).
            RegionLabel::Theorem13Extended => in_range && b > one,
            RegionLabel::Outside => !in_range,
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn ser_rational<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_opt_rational<S: Serializer>(r: &Option<Rational64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionPoint {
    #[serde(serialize_with = "ser_rational")]
    pub inv_beta: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub inv_p: Rational64,
    pub label: RegionLabel,
    /// Every region whose conditions hold here, in precedence order.
    pub containing: Vec<RegionLabel>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub minimal_alpha: Option<Rational64>,
}

/// Labels `(1/β, 1/p)` with the first region in precedence order
/// (`theorem-1.1-improved`, `classical-1`, `classical-2`, `classical-3`,
/// `theorem-1.3-extended`, `outside`) whose conditions hold.
pub fn classify_region(inv_beta: Rational64, inv_p: Rational64) -> RegionPoint {
    let containing: Vec<RegionLabel> =
        RegionLabel::ALL.into_iter().filter(|l| l.contains(inv_beta, inv_p)).collect();
    let label = containing.first().copied().unwrap_or(RegionLabel::Outside);
    let minimal_alpha = if label == RegionLabel::Outside { None } else { minimal_alpha(inv_beta, inv_p).ok() };
    RegionPoint { inv_beta, inv_p, label, containing, minimal_alpha }
}

/// The `(grid+1)²` lattice `(1/β, 1/p) = (5i/(4·grid), 5j/(4·grid))` over `[0, 5/4]²`.
pub fn region_grid(grid: u32) -> Result<Vec<RegionPoint>> {
    if grid == 0 {
        return Err(Error::pre("region grid needs at least one interval"));
    }
    let den = 4 * grid as i64;
    let mut out = Vec::with_capacity((grid as usize + 1).pow(2));
    for i in 0..=grid as i64 {
        for j in 0..=grid as i64 {
            out.push(classify_region(q(5 * i, den), q(5 * j, den)));
        }
    }
    Ok(out)
}

pub fn write_regions_csv<W: Write>(points: &[RegionPoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["inv_beta", "inv_p", "label", "minimal_alpha"])?;
    for pt in points {
        w.write_record([
            crate::fmt_f64(to_f64(pt.inv_beta)),
            crate::fmt_f64(to_f64(pt.inv_p)),
            pt.label.as_str().to_string(),
            pt.minimal_alpha.map(|a| crate::fmt_f64(to_f64(a))).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CriterionId {
    #[serde(rename = "theorem-1.1")]
    Theorem11,
    #[serde(rename = "theorem-1.3")]
    Theorem13,
    #[serde(rename = "classical-1")]
    Classical1,
    #[serde(rename = "classical-2")]
    Classical2,
    #[serde(rename = "classical-3")]
    Classical3,
    #[serde(rename = "type-1")]
    Type1,
}

/// One parameter hypothesis with its exact slack in the `(1/β, 1/p)` plane
/// (positive inside, zero on the boundary).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub satisfied: bool,
    #[serde(serialize_with = "ser_rational")]
    pub slack: Rational64,
    pub strict: bool,
}

impl Hypothesis {
    fn new(name: &str, slack: Rational64, strict: bool) -> Self {
        let satisfied = if strict { slack.is_positive() } else { !slack.is_negative() };
        Hypothesis { name: name.to_string(), satisfied, slack, strict }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionId,
    #[serde(serialize_with = "ser_rational")]
    pub inv_beta: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub inv_p: Rational64,
    pub hypotheses_satisfied: bool,
    pub hypotheses: Vec<Hypothesis>,
    /// Besov regularity exponent of the tested space.
    #[serde(serialize_with = "ser_rational")]
    pub besov_exponent: Rational64,
    pub weak_in_time: bool,
    pub norm_value: Option<f64>,
    pub finite_at_resolution: bool,
    /// Smallest hypothesis slack (negative when a hypothesis fails).
    pub margin: f64,
    /// Theorem conclusion attached as a label when the hypotheses hold and
    /// the sampled norm is finite; never verified from samples.
    pub conclusion: Option<String>,
    pub notes: Vec<String>,
}

impl CriterionVerdict {
    fn build(
        criterion: CriterionId,
        inv_beta: Rational64,
        inv_p: Rational64,
        hypotheses: Vec<Hypothesis>,
        besov_exponent: Rational64,
        weak: bool,
        norm_value: Option<f64>,
        notes: Vec<String>,
    ) -> Self {
        let hypotheses_satisfied = hypotheses.iter().all(|h| h.satisfied);
        let margin = hypotheses.iter().map(|h| to_f64(h.slack)).fold(f64::INFINITY, f64::min);
        let finite_at_resolution = norm_value.map_or(false, f64::is_finite);
        let conclusion = (hypotheses_satisfied && finite_at_resolution)
            .then(|| "energy equality on [0,T] (theorem label; not verified from samples)".to_string());
        CriterionVerdict {
            criterion,
            inv_beta,
            inv_p,
            hypotheses_satisfied,
            hypotheses,
            besov_exponent,
            weak_in_time: weak,
            norm_value,
            finite_at_resolution,
            margin,
            conclusion,
            notes,
        }
    }

    /// Hypotheses hold and the sampled norm is finite.
    pub fn passed(&self) -> bool {
        self.conclusion.is_some()
    }
}

fn trajectory_norm(
    source: Option<&dyn SnapshotSource>,
    inv_beta: Rational64,
    inv_p: Rational64,
    s: Rational64,
    weak: bool,
) -> Result<Option<f64>> {
    let Some(source) = source else { return Ok(None) };
    let besov = BesovSpec::new(to_f64(s), exponent_value(inv_p), f64::INFINITY)?;
    let spec = TimeSpaceSpec::new(exponent_value(inv_beta), weak, besov)?;
    Ok(Some(membership(source, &spec)?.value))
}

fn positive_beta(inv_beta: Rational64) -> Result<()> {
    if inv_beta.is_zero() || inv_beta.is_positive() {
        Ok(())
    } else {
        Err(Error::pre(format!("1/β must be >= 0, got {inv_beta}")))
    }
}

/// Weak-in-time Onsager criterion: `u ∈ L^{β,w} B^{2/β+2/p−1}_{p,∞}` with
/// `1 ≤ β < p ≤ ∞` and `2/p + 1/β < 1`. The weaker gate `p > β > 0` is
/// reported in `notes`.
pub fn check_weak_onsager(
    source: Option<&dyn SnapshotSource>,
    inv_beta: Rational64,
    inv_p: Rational64,
) -> Result<CriterionVerdict> {
    positive_beta(inv_beta)?;
    let one = Rational64::one();
    let hypotheses = vec![
        Hypothesis::new("1 <= beta", one - inv_beta, false),
        Hypothesis::new("beta < p", inv_beta - inv_p, true),
        Hypothesis::new("p >= 1", one - inv_p, false),
        Hypothesis::new("2/p + 1/beta < 1", one - inv_beta - int(2) * inv_p, true),
    ];
    let s = int(2) * inv_beta + int(2) * inv_p - one;
    let gate = inv_p < inv_beta;
    let notes = vec![format!(
        "flux-vanishing gate p > beta > 0: {}",
        if gate { "holds" } else { "fails" }
    )];
    let norm = if inv_p <= one { trajectory_norm(source, inv_beta, inv_p, s, true)? } else { None };
    Ok(CriterionVerdict::build(CriterionId::Theorem11, inv_beta, inv_p, hypotheses, s, true, norm, notes))
}

/// Strong-in-time criterion `u ∈ L^β B^{5/(2β)+3/p−3/2}_{p,∞}` with
/// `1 ≤ p ≤ ∞`, `0 < β ≤ 3` and `2/p + 1/β ≥ 1`; `β < 1` uses the quasinorm.
pub fn check_type2(
    source: Option<&dyn SnapshotSource>,
    inv_beta: Rational64,
    inv_p: Rational64,
) -> Result<CriterionVerdict> {
    positive_beta(inv_beta)?;
    let one = Rational64::one();
    let hypotheses = vec![
        Hypothesis::new("1 <= p", one - inv_p, false),
        Hypothesis::new("beta <= 3", inv_beta - q(1, 3), false),
        Hypothesis::new("2/p + 1/beta >= 1", inv_beta + int(2) * inv_p - one, false),
    ];
    let s = q(5, 2) * inv_beta + int(3) * inv_p - q(3, 2);
    let mut notes = Vec::new();
    if inv_beta > one {
        notes.push("beta < 1: time quasinorm".to_string());
    }
    let norm = if inv_p <= one && inv_beta.is_positive() {
        trajectory_norm(source, inv_beta, inv_p, s, false)?
    } else {
        None
    };
    Ok(CriterionVerdict::build(CriterionId::Theorem13, inv_beta, inv_p, hypotheses, s, false, norm, notes))
}

/// The three classical conditions (`which` ∈ 1..=3), strong in time.
pub fn check_classical(
    source: Option<&dyn SnapshotSource>,
    which: u8,
    inv_beta: Rational64,
    inv_p: Rational64,
) -> Result<CriterionVerdict> {
    positive_beta(inv_beta)?;
    let one = Rational64::one();
    let (id, hypotheses, s) = match which {
        1 => (
            CriterionId::Classical1,
            vec![
                Hypothesis::new("1/beta + 2/p <= 1", one - inv_beta - int(2) * inv_p, false),
                Hypothesis::new("p >= beta", inv_beta - inv_p, false),
            ],
            int(2) * inv_beta + int(2) * inv_p - one,
        ),
        2 => (
            CriterionId::Classical2,
            vec![
                Hypothesis::new("1/beta + 2/p >= 1", inv_beta + int(2) * inv_p - one, false),
                Hypothesis::new("1 <= beta", one - inv_beta, false),
                Hypothesis::new("beta <= 3", inv_beta - q(1, 3), false),
                Hypothesis::new("p >= 1", one - inv_p, false),
            ],
            q(5, 2) * inv_beta + int(3) * inv_p - q(3, 2),
        ),
        3 => (
            CriterionId::Classical3,
            vec![
                Hypothesis::new("beta >= 3", q(1, 3) - inv_beta, false),
                Hypothesis::new("1 <= p", one - inv_p, false),
                Hypothesis::new("p <= beta", inv_p - inv_beta, false),
            ],
            inv_beta + int(3) * inv_p - one,
        ),
        _ => return Err(Error::pre(format!("classical criteria are numbered 1..=3, got {which}"))),
    };
    let norm = if inv_p <= one { trajectory_norm(source, inv_beta, inv_p, s, false)? } else { None };
    Ok(CriterionVerdict::build(id, inv_beta, inv_p, hypotheses, s, false, norm, Vec::new()))
}

/// All five criteria at one `(β, p)`.
pub fn check_all(
    source: Option<&dyn SnapshotSource>,
    inv_beta: Rational64,
    inv_p: Rational64,
) -> Result<Vec<CriterionVerdict>> {
    Ok(vec![
        check_weak_onsager(source, inv_beta, inv_p)?,
        check_type2(source, inv_beta, inv_p)?,
        check_classical(source, 1, inv_beta, inv_p)?,
        check_classical(source, 2, inv_beta, inv_p)?,
        check_classical(source, 3, inv_beta, inv_p)?,
    ])
}

/// Parameters of the Type-I blowup rate condition at a given `p > 4`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Type1Derivation {
    #[serde(serialize_with = "ser_rational")]
    pub inv_p: Rational64,
    /// `1/β = 1/2 − 1/p`, i.e. `β = 2p/(p−2)`.
    #[serde(serialize_with = "ser_rational")]
    pub inv_beta: Rational64,
    /// `2/β + 2/p − 1`, always 0.
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational64,
    /// `θ = 1/2 − 1/p`, equal to `1/β`.
    #[serde(serialize_with = "ser_rational")]
    pub theta: Rational64,
    pub weak_onsager_hypotheses: bool,
}

pub fn type1_derive(inv_p: Rational64) -> Result<Type1Derivation> {
    if inv_p.is_negative() || inv_p >= q(1, 4) {
        return Err(Error::pre(format!("the Type-I condition needs p > 4, got 1/p = {inv_p}")));
    }
    let inv_beta = q(1, 2) - inv_p;
    let alpha = int(2) * inv_beta + int(2) * inv_p - int(1);
    let theta = q(1, 2) - inv_p;
    let weak_onsager_hypotheses = check_weak_onsager(None, inv_beta, inv_p)?.hypotheses_satisfied;
    Ok(Type1Derivation { inv_p, inv_beta, alpha, theta, weak_onsager_hypotheses })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Type1Fit {
    /// `sup_i f_i (T − t_i)^{1/2 − 1/p}`.
    pub constant: f64,
    pub threshold: f64,
    pub within_threshold: bool,
    #[serde(serialize_with = "ser_rational")]
    pub theta: Rational64,
}

pub fn check_type1_rate(series: &NormSeries, blowup_time: f64, inv_p: Rational64, threshold: f64) -> Result<Type1Fit> {
    let d = type1_derive(inv_p)?;
    if let Some(t) = series.times().iter().find(|&&t| !(t < blowup_time)) {
        return Err(Error::pre(format!("sample time {t} is not before T = {blowup_time}")));
    }
    let theta = to_f64(d.theta);
    let constant = series
        .times()
        .iter()
        .zip(series.values())
        .map(|(t, f)| f * (blowup_time - t).powf(theta))
        .fold(0.0, f64::max);
    Ok(Type1Fit { constant, threshold, within_threshold: constant <= threshold, theta: d.theta })
}

/// Type-I exponent `θ₁ = 1/2 − 1/p` against the forced lower-bound exponent
/// `θ_c = 1/2 − 3/(2p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateComparison {
    #[serde(serialize_with = "ser_rational")]
    pub type1: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub critical: Rational64,
    pub type1_exceeds_critical: bool,
}

pub fn rates_compare(inv_p: Rational64) -> Result<RateComparison> {
    if inv_p.is_negative() || inv_p >= q(1, 3) {
        return Err(Error::pre(format!("rate comparison needs p > 3, got 1/p = {inv_p}")));
    }
    let type1 = q(1, 2) - inv_p;
    let critical = q(1, 2) - q(3, 2) * inv_p;
    Ok(RateComparison { type1, critical, type1_exceeds_critical: type1 > critical })
}
