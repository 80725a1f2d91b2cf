//! Periodic grid on the unit torus `[-1/2, 1/2)²`, 2D FFTs, spectral
//! derivatives, 2/3-rule dealiasing and the exponential multipliers used by
//! the ETD schemes.
//!
//! Fields are stored row-major with `x` along the fast index:
//! `values[iy * n + ix]` is the value at `(x_ix, y_iy)`, `x_j = -1/2 + j/n`.
//! Fourier coefficients use FFT ordering; index `j` carries mode
//! `m = j` for `j < n/2` and `m = j - n` otherwise, wavenumber `k = 2πm`.
//! The forward transform is unnormalized and the inverse carries `1/n²`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per dimension of the periodic grid; the side length is fixed at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::invalid("n", format!("grid size must be even and >= 8, got {n}")));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of grid index `j` along either axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n as f64
    }

    /// Signed mode number of FFT index `j`.
    #[inline]
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT index of signed mode `m` (taken modulo `n`).
    #[inline]
    pub fn index(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// Largest mode kept by the 2/3 rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 128 }
    }
}

impl TryFrom<usize> for GridSpec {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        GridSpec::new(n)
    }
}

impl From<GridSpec> for usize {
    fn from(g: GridSpec) -> usize {
        g.n
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{0}x{0}", self.n)
    }
}

/// Scalar grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                values.push(f(grid.coord(ix), y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.check_grid(other.grid)?;
        Ok(RealField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_grid(&self, other: GridSpec) -> Result<()> {
        if self.grid == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.n(),
                right: other.n(),
            })
        }
    }

    /// Grid mean; equals the integral over the unit torus.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `L²` norm over the unit torus.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `‖self - other‖∞`.
    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Fourier coefficients of a field in FFT ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_vec(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of signed mode `(mx, my)`.
    pub fn coeff(&self, mx: i64, my: i64) -> Complex64 {
        let n = self.grid.n();
        self.coeffs[self.grid.index(my) * n + self.grid.index(mx)]
    }

    /// Field mean, `coeff(0, 0)/n²`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.len() as f64
    }
}

/// Real per-mode multiplier in FFT ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Multiplier {
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn at(&self, mx: i64, my: i64) -> f64 {
        let n = self.grid.n();
        self.values[self.grid.index(my) * n + self.grid.index(mx)]
    }
}

/// `i k c`
#[inline(always)]
pub(crate) fn ik(c: Complex64, k: f64) -> Complex64 {
    Complex64::new(-k * c.im, k * c.re)
}

/// `a + i b`: packs two Hermitian spectra for one inverse transform.
#[inline(always)]
pub(crate) fn pack(a: Complex64, b: Complex64) -> Complex64 {
    Complex64::new(a.re - b.im, a.im + b.re)
}

/// `φ₁(z) = (e^z - 1)/z`, with its Taylor series below `|z| = 1e-5`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (φ₁(z) - 1)/z = (e^z - 1 - z)/z²`.
///
/// The closed form loses about `2ε/|z|` relative accuracy to cancellation, so
/// the Taylor series is used up to `|z| = 0.05`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.05 {
        // sum_{j>=0} z^j/(j+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for j in 1..12 {
            term *= z / (j + 2) as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Transform plans and wavenumber tables for one grid. Immutable after
/// construction and shareable across threads.
#[derive(Clone)]
pub struct SpectralGrid {
    grid: GridSpec,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch_len: usize,
    /// `2πm`, Nyquist zeroed (odd-order operators).
    k_odd: Vec<f64>,
    /// `|k|²` per mode.
    k2: Vec<f64>,
    keep: Vec<bool>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("grid", &self.grid).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl SpectralGrid {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());

        let k_even: Vec<f64> = (0..n).map(|j| 2.0 * PI * grid.mode(j) as f64).collect();
        let k_odd: Vec<f64> = (0..n)
            .map(|j| if j == n / 2 { 0.0 } else { k_even[j] })
            .collect();
        let cut = grid.dealias_cutoff() as i64;
        let mut k2 = Vec::with_capacity(grid.len());
        let mut keep = Vec::with_capacity(grid.len());
        for iy in 0..n {
            for ix in 0..n {
                k2.push(k_even[ix] * k_even[ix] + k_even[iy] * k_even[iy]);
                keep.push(grid.mode(ix).abs().max(grid.mode(iy).abs()) <= cut);
            }
        }
        Self {
            grid,
            fft,
            ifft,
            scratch_len,
            k_odd,
            k2,
            keep,
        }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// `|k|²` per mode.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    /// Wavenumber used for first derivatives along `axis` (Nyquist zeroed), per FFT index.
    pub fn k_odd(&self) -> &[f64] {
        &self.k_odd
    }

    /// `dst = srcᵀ` for `n × n` row-major arrays, in cache blocks.
    fn transpose_into(src: &[Complex64], dst: &mut [Complex64], n: usize) {
        const B: usize = 16;
        for bi in (0..n).step_by(B) {
            let hi = (bi + B).min(n);
            for bj in (0..n).step_by(B) {
                let hj = (bj + B).min(n);
                for i in bi..hi {
                    let row = &src[i * n + bj..i * n + hj];
                    for (j, &v) in (bj..hj).zip(row) {
                        dst[j * n + i] = v;
                    }
                }
            }
        }
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        thread_local! {
            static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
        }
        let n = self.grid.n();
        let plan = if inverse { &self.ifft } else { &self.fft };
        SCRATCH.with(|s| {
            let (tmp, scratch) = &mut *s.borrow_mut();
            tmp.resize(buf.len(), Complex64::new(0.0, 0.0));
            scratch.resize(self.scratch_len, Complex64::new(0.0, 0.0));
            plan.process_with_scratch(buf, scratch);
            Self::transpose_into(buf, tmp, n);
            plan.process_with_scratch(tmp, scratch);
            Self::transpose_into(tmp, buf, n);
        });
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, f: &RealField) -> Result<SpectralField> {
        f.check_grid(self.grid)?;
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        Ok(SpectralField {
            grid: self.grid,
            coeffs: buf,
        })
    }

    /// Inverse transform (with the `1/n²` factor); the imaginary part is discarded.
    pub fn inverse(&self, f: &SpectralField) -> Result<RealField> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: f.grid.n(),
            });
        }
        let mut buf = f.coeffs.clone();
        self.fft2(&mut buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        Ok(RealField {
            grid: self.grid,
            values: buf.iter().map(|c| c.re * scale).collect(),
        })
    }

    pub(crate) fn inverse_slice(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft2(&mut buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Forward transforms of two real fields with one complex FFT.
    pub(crate) fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.grid.n();
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft2(&mut z, false);
        let mut fa = vec![Complex64::new(0.0, 0.0); z.len()];
        let mut fb = vec![Complex64::new(0.0, 0.0); z.len()];
        for iy in 0..n {
            let ny = (n - iy) % n;
            for ix in 0..n {
                let nx = (n - ix) % n;
                let zk = z[iy * n + ix];
                let zc = z[ny * n + nx].conj();
                fa[iy * n + ix] = (zk + zc) * 0.5;
                // (zk - zc) / 2i
                let d = zk - zc;
                fb[iy * n + ix] = Complex64::new(d.im * 0.5, -d.re * 0.5);
            }
        }
        (fa, fb)
    }

    /// Inverse transforms of two Hermitian spectra with one complex FFT.
    pub(crate) fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x.re - y.im, x.im + y.re))
            .collect();
        self.fft2(&mut z, true);
        let scale = 1.0 / self.grid.len() as f64;
        let ra = z.iter().map(|c| c.re * scale).collect();
        let rb = z.iter().map(|c| c.im * scale).collect();
        (ra, rb)
    }

    /// Inverse transform of a packed spectrum `â + i b̂` (both Hermitian),
    /// writing `a` and `b`. Destroys `z`.
    pub(crate) fn inverse_packed_into(&self, z: &mut [Complex64], a: &mut [f64], b: &mut [f64]) {
        self.fft2(z, true);
        let scale = 1.0 / self.grid.len() as f64;
        for ((c, ra), rb) in z.iter().zip(a.iter_mut()).zip(b.iter_mut()) {
            *ra = c.re * scale;
            *rb = c.im * scale;
        }
    }

    /// [`Self::forward_pair`] into caller-owned buffers; `z` is scratch.
    pub(crate) fn forward_pair_into(
        &self,
        a: &[f64],
        b: &[f64],
        z: &mut [Complex64],
        fa: &mut [Complex64],
        fb: &mut [Complex64],
    ) {
        let n = self.grid.n();
        for ((c, &x), &y) in z.iter_mut().zip(a).zip(b) {
            *c = Complex64::new(x, y);
        }
        self.fft2(z, false);
        for iy in 0..n {
            let ny = (n - iy) % n;
            let (row, mirror) = (&z[iy * n..(iy + 1) * n], &z[ny * n..(ny + 1) * n]);
            let (ra, rb) = (&mut fa[iy * n..(iy + 1) * n], &mut fb[iy * n..(iy + 1) * n]);
            for ix in 0..n {
                let zk = row[ix];
                let zc = mirror[if ix == 0 { 0 } else { n - ix }].conj();
                ra[ix] = (zk + zc) * 0.5;
                let d = zk - zc;
                rb[ix] = Complex64::new(d.im * 0.5, -d.re * 0.5);
            }
        }
    }

    pub(crate) fn forward_into(&self, a: &[f64], out: &mut [Complex64]) {
        for (c, &x) in out.iter_mut().zip(a) {
            *c = Complex64::new(x, 0.0);
        }
        self.fft2(out, false);
    }

    /// Multiplies by `i k_axis` (Nyquist zeroed).
    pub(crate) fn mul_ik(&self, f: &[Complex64], axis: Axis) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(f.len());
        for iy in 0..n {
            let row = &f[iy * n..(iy + 1) * n];
            match axis {
                Axis::X => out.extend(row.iter().zip(&self.k_odd).map(|(c, &k)| ik(*c, k))),
                Axis::Y => {
                    let k = self.k_odd[iy];
                    out.extend(row.iter().map(|c| ik(*c, k)));
                }
            }
        }
        out
    }

    /// Multiplies by a real per-mode factor.
    pub(crate) fn mul_real(&self, f: &[Complex64], m: impl Fn(usize) -> f64) -> Vec<Complex64> {
        f.iter().enumerate().map(|(i, &c)| c * m(i)).collect()
    }

    pub(crate) fn dealias_in_place(&self, f: &mut [Complex64]) {
        for (c, &keep) in f.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Zeroes every mode with `max(|mx|, |my|) > n/3`.
    pub fn dealias(&self, f: &SpectralField) -> SpectralField {
        let mut out = f.clone();
        self.dealias_in_place(&mut out.coeffs);
        out
    }

    pub fn derivative(&self, f: &RealField, axis: Axis) -> Result<RealField> {
        let fh = self.forward(f)?;
        let d = self.mul_ik(&fh.coeffs, axis);
        Ok(RealField {
            grid: self.grid,
            values: self.inverse_slice(&d),
        })
    }

    pub fn gradient(&self, f: &RealField) -> Result<[RealField; 2]> {
        let fh = self.forward(f)?;
        let (gx, gy) = self.inverse_pair(&self.mul_ik(&fh.coeffs, Axis::X), &self.mul_ik(&fh.coeffs, Axis::Y));
        Ok([
            RealField {
                grid: self.grid,
                values: gx,
            },
            RealField {
                grid: self.grid,
                values: gy,
            },
        ])
    }

    pub fn laplacian(&self, f: &RealField) -> Result<RealField> {
        let fh = self.forward(f)?;
        let d = self.mul_real(&fh.coeffs, |i| -self.k2[i]);
        Ok(RealField {
            grid: self.grid,
            values: self.inverse_slice(&d),
        })
    }

    pub fn bilaplacian(&self, f: &RealField) -> Result<RealField> {
        let fh = self.forward(f)?;
        let d = self.mul_real(&fh.coeffs, |i| self.k2[i] * self.k2[i]);
        Ok(RealField {
            grid: self.grid,
            values: self.inverse_slice(&d),
        })
    }

    fn multiplier(&self, f: impl Fn(f64) -> f64) -> Multiplier {
        Multiplier {
            grid: self.grid,
            values: self.k2.iter().map(|&k2| f(k2)).collect(),
        }
    }

    /// `e^{-ν|k|⁴ dt}`, the exact propagator of `g_t = -νΔ²g`.
    pub fn semigroup_multiplier(&self, dt: f64, nu: f64) -> Multiplier {
        self.multiplier(|k2| (-nu * k2 * k2 * dt).exp())
    }

    /// `φ₁(-ν|k|⁴ dt)`.
    pub fn phi1_multiplier(&self, dt: f64, nu: f64) -> Multiplier {
        self.multiplier(|k2| phi1(-nu * k2 * k2 * dt))
    }

    /// `φ₂(-ν|k|⁴ dt)`.
    pub fn phi2_multiplier(&self, dt: f64, nu: f64) -> Multiplier {
        self.multiplier(|k2| phi2(-nu * k2 * k2 * dt))
    }

    /// Band-limited interpolation onto a grid `factor` times finer.
    ///
    /// The Nyquist row/column of the coarse spectrum is split evenly between
    /// `±n/2` so the refined field stays real.
    pub fn refine(&self, f: &RealField, factor: usize) -> Result<RealField> {
        let fine = GridSpec::new(self.grid.n() * factor)?;
        let fh = self.forward(f)?;
        let n = self.grid.n();
        let nf = fine.n();
        let half = (n / 2) as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        let scale = (factor * factor) as f64;
        for iy in 0..n {
            let my = self.grid.mode(iy);
            let ys: &[i64] = if my == -half { &[-half, half] } else { &[my] };
            for ix in 0..n {
                let mx = self.grid.mode(ix);
                let xs: &[i64] = if mx == -half { &[-half, half] } else { &[mx] };
                let share = (ys.len() * xs.len()) as f64;
                let c = fh.coeffs[iy * n + ix] * (scale / share);
                for &yy in ys {
                    for &xx in xs {
                        out[fine.index(yy) * nf + fine.index(xx)] += c;
                    }
                }
            }
        }
        let fine_grid = SpectralGrid::new(fine);
        Ok(RealField {
            grid: fine,
            values: fine_grid.inverse_slice(&out),
        })
    }

    /// Samples every `factor`-th point of a field on a finer grid; the
    /// sampled points coincide with this grid's points.
    pub fn restrict(&self, fine: &RealField, factor: usize) -> Result<RealField> {
        let nf = fine.grid().n();
        if nf != self.grid.n() * factor {
            return Err(Error::GridMismatch {
                left: self.grid.n() * factor,
                right: nf,
            });
        }
        let n = self.grid.n();
        let mut values = Vec::with_capacity(self.grid.len());
        for iy in 0..n {
            for ix in 0..n {
                values.push(fine.values()[iy * factor * nf + ix * factor]);
            }
        }
        Ok(RealField {
            grid: self.grid,
            values,
        })
    }
}
