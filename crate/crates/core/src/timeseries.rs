//! Time-direction norms: distribution functions, weak-Lebesgue quasinorms,
//! `L^β` time norms (including `0 < β < 1`) and exceptional sets.
//!
//! Measures use the left-constant interpolant: the value `f_i` holds on
//! `[t_i, t_{i+1})`, so the last sample carries no measure. Integrals use the
//! trapezoid rule.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{besov_norm, lambda, BesovSpec, ShellIndex};
use crate::error::{Error, Result};
use crate::field::{validate_times, SnapshotSource};

#[derive(Clone, Debug, PartialEq)]
pub struct NormSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: f64,
    value: f64,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::SizeMismatch { expected: times.len(), found: values.len() });
        }
        validate_times(times.iter().copied())?;
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::pre(format!("series values must be nonnegative, found {v}")));
        }
        Ok(NormSeries { times, values })
    }

    /// Samples `f` at the given times.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Length of the sampled window `t_last − t_first`.
    pub fn span(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    pub fn scaled(&self, c: f64) -> NormSeries {
        NormSeries { times: self.times.clone(), values: self.values.iter().map(|v| v * c.abs()).collect() }
    }

    fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.times.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }

    /// `|{s : f(s) > t}|`.
    pub fn distribution_function(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::pre(format!("threshold must be nonnegative, got {t}")));
        }
        Ok(self.steps().filter(|&(_, _, v)| v > t).map(|(a, b, _)| b - a).sum())
    }

    /// `sup_{t>0} t·λ_f(t)^{1/β}`, attained in the limit `t → v⁻` for a sample value `v`,
    /// where `λ_f(v⁻) = |{f ≥ v}|`.
    pub fn weak_quasinorm(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let mut steps: Vec<(f64, f64)> = self.steps().map(|(a, b, v)| (v, b - a)).collect();
        steps.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut best = 0.0f64;
        let mut measure = 0.0;
        let mut i = 0;
        while i < steps.len() {
            let v = steps[i].0;
            while i < steps.len() && steps[i].0 == v {
                measure += steps[i].1;
                i += 1;
            }
            if v > 0.0 {
                best = best.max(v * measure.powf(1.0 / beta));
            }
        }
        Ok(best)
    }

    /// `(∫ f^β ds)^{1/β}` by the trapezoid rule; the maximum sample for `β = ∞`.
    pub fn time_norm(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        if beta.is_infinite() {
            return Ok(self.values.iter().copied().fold(0.0, f64::max));
        }
        let integral: f64 = self
            .times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(beta) + v[1].powf(beta)))
            .sum();
        Ok(integral.powf(1.0 / beta))
    }

    /// Super-level set `{f ≥ λ_q^{2/β}}` as merged half-open intervals.
    pub fn exceptional_set(&self, q: ShellIndex, beta: f64) -> Result<ExceptionalSet> {
        if q < 0 {
            return Err(Error::pre(format!("shell index must be nonnegative, got {q}")));
        }
        check_beta(beta)?;
        let threshold = lambda(q).powf(2.0 / beta);
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for (a, b, v) in self.steps() {
            if v < threshold {
                continue;
            }
            match intervals.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => intervals.push((a, b)),
            }
        }
        let measure = intervals.iter().map(|(a, b)| b - a).sum();
        Ok(ExceptionalSet { threshold, intervals, measure })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::pre(format!("csv: {e}"));
        w.write_record(["t", "value"]).map_err(err)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([crate::fmt_f64(*t), crate::fmt_f64(*v)]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::pre(format!("csv: {e}")))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| Error::pre(format!("csv: {e}")))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "value"] {
            return Err(Error::pre(format!("expected header t,value, found {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let (mut times, mut values) = (Vec::new(), Vec::new());
        for row in r.deserialize::<Row>() {
            let row = row.map_err(|e| Error::pre(format!("csv: {e}")))?;
            times.push(row.t);
            values.push(row.value);
        }
        Self::new(times, values)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 {
        Ok(())
    } else {
        Err(Error::pre(format!("time exponent must be positive, got {beta}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalSet {
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
}

/// A space `L^β_t B^s_{p,∞}` (or its weak variant `L^{β,w}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSpaceSpec {
    pub beta: f64,
    pub weak: bool,
    pub besov: BesovSpec,
}

impl TimeSpaceSpec {
    pub fn new(beta: f64, weak: bool, besov: BesovSpec) -> Result<Self> {
        check_beta(beta)?;
        Ok(TimeSpaceSpec { beta, weak, besov })
    }
}

/// Result of [`membership`]. `finite_at_resolution` only reports that the
/// sampled norm is finite; nothing is claimed about the continuum.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub value: f64,
    pub finite_at_resolution: bool,
    pub series: NormSeries,
}

/// `t ↦ ‖u(t)‖_{B^s_{p,∞}}` over all snapshots.
pub fn besov_series(source: &dyn SnapshotSource, spec: &BesovSpec) -> Result<NormSeries> {
    let values = (0..source.len())
        .into_par_iter()
        .map(|i| besov_norm(&*source.load(i)?, spec))
        .collect::<Result<Vec<_>>>()?;
    NormSeries::new(source.times(), values)
}

pub fn membership(source: &dyn SnapshotSource, spec: &TimeSpaceSpec) -> Result<Membership> {
    let series = besov_series(source, &spec.besov)?;
    let value = if spec.weak { series.weak_quasinorm(spec.beta)? } else { series.time_norm(spec.beta)? };
    Ok(Membership { value, finite_at_resolution: value.is_finite(), series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_spaced(n: usize, lo: f64) -> Vec<f64> {
        (0..n).map(|i| lo * (1.0 / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    fn smooth(seed: &[(f64, f64, f64)], n: usize) -> NormSeries {
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        NormSeries::from_fn(times, |t| {
            let s: f64 = seed.iter().map(|(a, k, ph)| a * (k * t + ph).sin()).sum();
            s * s + 0.01
        })
        .unwrap()
    }

    #[test]
    fn constant_series() {
        let f = NormSeries::from_fn(vec![0.0, 0.5, 2.0], |_| 3.0).unwrap();
        assert_eq!(f.distribution_function(2.9).unwrap(), 2.0);
        assert_eq!(f.distribution_function(3.0).unwrap(), 0.0);
        assert!((f.weak_quasinorm(2.0).unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((f.time_norm(2.0).unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(f.time_norm(f64::INFINITY).unwrap(), 3.0);
        assert!(f.distribution_function(-1.0).is_err());
    }

    #[test]
    fn zero_series() {
        let f = NormSeries::from_fn(vec![0.0, 1.0], |_| 0.0).unwrap();
        assert_eq!(f.weak_quasinorm(1.5).unwrap(), 0.0);
        assert_eq!(f.time_norm(0.5).unwrap(), 0.0);
    }

    #[test]
    fn inverse_square_root() {
        let f = NormSeries::from_fn(log_spaced(10_000, 1e-10), |s| s.powf(-0.5)).unwrap();
        for t in [1.0, 2.0, 10.0, 100.0] {
            let m = f.distribution_function(t).unwrap();
            assert!((m * t * t - 1.0).abs() < 0.02, "t={t} measure={m}");
        }
        assert!((f.weak_quasinorm(2.0).unwrap() - 1.0).abs() < 0.05);
        let half = f.time_norm(0.5).unwrap();
        assert!((half / (16.0 / 9.0) - 1.0).abs() < 0.01, "{half}");
    }

    #[test]
    fn trapezoid_linear() {
        let times: Vec<f64> = (0..10_000).map(|i| i as f64 / 9999.0).collect();
        let f = NormSeries::from_fn(times, |s| s).unwrap();
        assert!((f.time_norm(1.0).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exceptional_sets() {
        let f = NormSeries::from_fn(log_spaced(10_000, 1e-10), |s| s.powf(-0.5)).unwrap();
        for q in 0..6 {
            let e = f.exceptional_set(q, 2.0).unwrap();
            assert_eq!(e.intervals.len(), 1);
            assert!((e.measure * lambda(q).powi(2) - 1.0).abs() < 0.02);
        }
        let lam = lambda(3).powf(2.0 / 3.0);
        let low = NormSeries::from_fn(vec![0.0, 0.3, 1.0], |_| lam / 2.0).unwrap();
        assert_eq!(low.exceptional_set(3, 3.0).unwrap().measure, 0.0);
        let at = NormSeries::from_fn(vec![0.0, 0.3, 1.0], |_| lam).unwrap();
        assert_eq!(at.exceptional_set(3, 3.0).unwrap().intervals, vec![(0.0, 1.0)]);
    }

    #[test]
    fn csv_roundtrip() {
        let f = NormSeries::from_fn(vec![0.0, 0.1, 0.3], |t| (t + 0.1f64).ln().abs()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,value\n"));
        assert_eq!(NormSeries::read_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(NormSeries::new(vec![0.0], vec![1.0]).is_err());
        assert!(NormSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(NormSeries::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(NormSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    fn modes() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((0.1f64..2.0, 0.5f64..20.0, 0.0f64..6.3), 1..5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn distribution_nonincreasing(m in modes(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let f = smooth(&m, 500);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(f.distribution_function(lo).unwrap() >= f.distribution_function(hi).unwrap());
        }

        #[test]
        fn chebyshev_and_weak_below_strong(m in modes(), beta in 1.0f64..4.0, t in 0.0f64..5.0) {
            let f = smooth(&m, 4000);
            let strong = f.time_norm(beta).unwrap();
            prop_assert!(strong.powf(beta) * (1.0 + 1e-3) >= t.powf(beta) * f.distribution_function(t).unwrap());
            prop_assert!(f.weak_quasinorm(beta).unwrap() <= strong * (1.0 + 1e-3));
        }

        #[test]
        fn exceptional_measure_bound(m in modes(), beta in 0.3f64..4.0, q in 0i32..6) {
            let f = smooth(&m, 500);
            let bound = f.weak_quasinorm(beta).unwrap().powf(beta) / lambda(q).powi(2);
            prop_assert!(f.exceptional_set(q, beta).unwrap().measure <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn scale_equivariance(m in modes(), c in 0.1f64..10.0, beta in 0.3f64..4.0) {
            let f = smooth(&m, 300);
            let g = f.scaled(c);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1e-300);
            prop_assert!(close(g.weak_quasinorm(beta).unwrap(), c * f.weak_quasinorm(beta).unwrap()));
            prop_assert!(close(g.time_norm(beta).unwrap(), c * f.time_norm(beta).unwrap()));
            prop_assert_eq!(g.distribution_function(c).unwrap(), f.distribution_function(1.0).unwrap());
        }
    }
}
