//! Three-dimensional complex FFTs on an `n³` cube with band pruning.
//!
//! Data is laid out row-major, `idx = (i0 * n + i1) * n + i2`, with the usual
//! FFT ordering of wavenumbers along each axis. Dealiased spectra are zero
//! outside `|k_i| <= band`, so the inverse transform skips lines that are
//! identically zero and the forward transform skips lines whose outputs are
//! discarded.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Physical samples to coefficients, normalized by `1/n³`.
    Forward,
    /// Coefficients to physical samples, unnormalized.
    Inverse,
}

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Shared plan for size `n`.
    pub fn cached(n: usize) -> Arc<Fft3> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry(n).or_insert_with(|| Arc::new(Fft3::new(n))).clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// In-place transform. With `band = Some(b)`, an inverse transform
    /// assumes the input vanishes outside `|k_i| <= b`, and a forward
    /// transform only produces (and keeps) outputs inside that band; all
    /// other outputs are zeroed.
    pub fn transform(&self, data: &mut [Complex64], dir: Direction, band: Option<usize>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "fft3 buffer size");
        let in_band = |i: usize| match band {
            None => true,
            Some(b) => i <= b || i >= n - b,
        };
        let fft = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        match dir {
            Direction::Inverse => {
                self.axis2(data, fft, |i0, i1| in_band(i0) && in_band(i1));
                self.axis1(data, fft, |i0| in_band(i0), |_| true);
                self.axis0(data, fft, |_, _| true);
            }
            Direction::Forward => {
                self.axis2(data, fft, |_, _| true);
                self.axis1(data, fft, |_| true, |i2| in_band(i2));
                self.axis0(data, fft, |i1, i2| in_band(i1) && in_band(i2));
                let scale = 1.0 / (n * n * n) as f64;
                data.par_chunks_mut(n * n).enumerate().for_each(|(i0, plane)| {
                    let keep0 = in_band(i0);
                    for (j, v) in plane.iter_mut().enumerate() {
                        let (i1, i2) = (j / n, j % n);
                        if keep0 && in_band(i1) && in_band(i2) {
                            *v *= scale;
                        } else {
                            *v = Complex64::new(0.0, 0.0);
                        }
                    }
                });
            }
        }
    }

    // Contiguous lines along the last axis.
    fn axis2(
        &self,
        data: &mut [Complex64],
        fft: &Arc<dyn Fft<f64>>,
        select: impl Fn(usize, usize) -> bool + Sync,
    ) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(n * n).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, (i0, plane)| {
                for (i1, line) in plane.chunks_mut(n).enumerate() {
                    if select(i0, i1) {
                        fft.process_with_scratch(line, scratch);
                    }
                }
            },
        );
    }

    // Lines along the middle axis, one plane at a time via a transpose.
    fn axis1(
        &self,
        data: &mut [Complex64],
        fft: &Arc<dyn Fft<f64>>,
        plane_select: impl Fn(usize) -> bool + Sync,
        line_select: impl Fn(usize) -> bool + Sync,
    ) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        data.par_chunks_mut(n * n).enumerate().for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                    vec![Complex64::new(0.0, 0.0); n * n],
                )
            },
            |(scratch, tmp), (i0, plane)| {
                if !plane_select(i0) {
                    return;
                }
                let lines: Vec<usize> = (0..n).filter(|&i2| line_select(i2)).collect();
                for (slot, &i2) in lines.iter().enumerate() {
                    let row = &mut tmp[slot * n..(slot + 1) * n];
                    for i1 in 0..n {
                        row[i1] = plane[i1 * n + i2];
                    }
                }
                fft.process_with_scratch(&mut tmp[..lines.len() * n], scratch);
                for (slot, &i2) in lines.iter().enumerate() {
                    let row = &tmp[slot * n..(slot + 1) * n];
                    for i1 in 0..n {
                        plane[i1 * n + i2] = row[i1];
                    }
                }
            },
        );
    }

    // Lines along the first axis (stride n²). Gathered per i1 slab in
    // parallel, scattered back sequentially.
    fn axis0(
        &self,
        data: &mut [Complex64],
        fft: &Arc<dyn Fft<f64>>,
        select: impl Fn(usize, usize) -> bool + Sync,
    ) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        let view: &[Complex64] = data;
        let slabs: Vec<(usize, Vec<usize>, Vec<Complex64>)> = (0..n)
            .into_par_iter()
            .filter_map(|i1| {
                let lines: Vec<usize> = (0..n).filter(|&i2| select(i1, i2)).collect();
                if lines.is_empty() {
                    return None;
                }
                let mut tmp = vec![Complex64::new(0.0, 0.0); lines.len() * n];
                for (slot, &i2) in lines.iter().enumerate() {
                    for i0 in 0..n {
                        tmp[slot * n + i0] = view[(i0 * n + i1) * n + i2];
                    }
                }
                let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
                fft.process_with_scratch(&mut tmp, &mut scratch);
                Some((i1, lines, tmp))
            })
            .collect();
        for (i1, lines, tmp) in slabs {
            for (slot, &i2) in lines.iter().enumerate() {
                for i0 in 0..n {
                    data[(i0 * n + i1) * n + i2] = tmp[slot * n + i0];
                }
            }
        }
    }
}

/// Index of `-k` for FFT index `i` on an axis of length `n`.
#[inline]
pub fn mirror(i: usize, n: usize) -> usize {
    if i == 0 {
        0
    } else {
        n - i
    }
}

/// Forward transform of two real arrays packed into one complex transform.
pub fn forward_real_pair(
    plan: &Fft3,
    a: &[f64],
    b: &[f64],
    band: Option<usize>,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = plan.n();
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    plan.transform(&mut z, Direction::Forward, band);
    let mut fa = vec![Complex64::new(0.0, 0.0); z.len()];
    let mut fb = vec![Complex64::new(0.0, 0.0); z.len()];
    fa.par_chunks_mut(n * n)
        .zip(fb.par_chunks_mut(n * n))
        .enumerate()
        .for_each(|(i0, (pa, pb))| {
            let m0 = mirror(i0, n);
            for i1 in 0..n {
                let m1 = mirror(i1, n);
                for i2 in 0..n {
                    let zk = z[(i0 * n + i1) * n + i2];
                    let zm = z[(m0 * n + m1) * n + mirror(i2, n)].conj();
                    pa[i1 * n + i2] = (zk + zm) * 0.5;
                    // (zk - zm) / (2i)
                    let d = zk - zm;
                    pb[i1 * n + i2] = Complex64::new(d.im * 0.5, -d.re * 0.5);
                }
            }
        });
    (fa, fb)
}

pub fn forward_real(plan: &Fft3, a: &[f64], band: Option<usize>) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan.transform(&mut z, Direction::Forward, band);
    // Restore exact Hermitian symmetry lost to rounding.
    let n = plan.n();
    let sym: Vec<Complex64> = (0..z.len())
        .into_par_iter()
        .map(|idx| {
            let (i0, i1, i2) = (idx / (n * n), (idx / n) % n, idx % n);
            let m = (mirror(i0, n) * n + mirror(i1, n)) * n + mirror(i2, n);
            (z[idx] + z[m].conj()) * 0.5
        })
        .collect();
    sym
}

/// Inverse transform of two Hermitian spectra, returning both real fields.
pub fn inverse_real_pair(
    plan: &Fft3,
    a: &[Complex64],
    b: &[Complex64],
    band: Option<usize>,
) -> (Vec<f64>, Vec<f64>) {
    // A + iB is the spectrum of a + ib when A and B are Hermitian.
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| Complex64::new(x.re - y.im, x.im + y.re))
        .collect();
    plan.transform(&mut z, Direction::Inverse, band);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

pub fn inverse_real(plan: &Fft3, a: &[Complex64], band: Option<usize>) -> Vec<f64> {
    let mut z = a.to_vec();
    plan.transform(&mut z, Direction::Inverse, band);
    z.iter().map(|c| c.re).collect()
}
