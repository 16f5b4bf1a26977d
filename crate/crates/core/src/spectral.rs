//! Periodic grids, FFT-backed fields and Fourier multipliers.
//!
//! Normalization used throughout the crate: the forward transform carries the
//! `dx` factor,
//!
//! ```text
//! f̂(ξ_k) = dx · Σ_j f(x_j) e^{-i ξ_k x_j},      f(x_j) = (1/L) Σ_k f̂(ξ_k) e^{i ξ_k x_j},
//! ```
//!
//! so that `Σ_j |f(x_j)|² dx = (1/L) Σ_k |f̂(ξ_k)|²` is the discrete analogue of
//! Plancherel on the line.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Exponent offset in the rough-data spectral profile.
pub const ROUGH_DELTA: f64 = 0.01;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

/// Japanese bracket `⟨x⟩ = sqrt(1 + x²)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Massive bracket `⟨x⟩_m = sqrt(m² + x²)`.
#[inline]
pub fn bracket_m(x: f64, m: f64) -> f64 {
    (m * m + x * x).sqrt()
}

/// Uniform periodic grid on `[0, L)` together with its dual frequency lattice
/// in FFT order.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    freqs: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidLength(length));
        }
        let scale = 2.0 * PI / length;
        let freqs = (0..n).map(|k| wavenumber(k, n) as f64 * scale).collect();
        Ok(Self {
            n,
            length,
            dx: length / n as f64,
            freqs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Frequencies `ξ_k = 2πk/L`, `k ∈ [-n/2, n/2)`, in FFT order.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Lattice spacing `2π/L` of the frequency grid.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Integer wavenumber stored at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        wavenumber(idx, self.n)
    }

    /// FFT index of integer wavenumber `k` (taken modulo `n`).
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    pub fn in_band(&self, idx: usize) -> bool {
        self.wavenumber(idx).unsigned_abs() as usize <= self.dealias_cutoff()
    }
}

#[inline]
fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Builds a shareable grid with `n` points on a box of length `length`.
pub fn make_grid(n: usize, length: f64) -> Result<Arc<Grid>> {
    Grid::new(n, length).map(Arc::new)
}

/// Zeroes every mode outside the 2/3 band.
pub fn dealias(grid: &Grid, spec: &mut [Complex64]) {
    let cut = grid.dealias_cutoff() as u64;
    for (k, c) in spec.iter_mut().enumerate() {
        if grid.wavenumber(k).unsigned_abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Which representation `transform` should populate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToSpec,
    ToPhys,
}

/// A complex field on a [`Grid`] holding physical samples, Fourier
/// coefficients, or both.
///
/// At least one representation is always present; the other is computed on
/// first access and cached. Operations that change one side produce a new
/// field with only that side populated.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    phys: OnceLock<Vec<Complex64>>,
    spec: OnceLock<Vec<Complex64>>,
}

impl SpectralField {
    /// # Panics
    /// If `values.len()` differs from the grid size.
    pub fn from_phys(grid: Arc<Grid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.n(), "sample count does not match grid");
        Self {
            grid,
            phys: OnceLock::from(values),
            spec: OnceLock::new(),
        }
    }

    /// # Panics
    /// If `coeffs.len()` differs from the grid size.
    pub fn from_spec(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(
            coeffs.len(),
            grid.n(),
            "coefficient count does not match grid"
        );
        Self {
            grid,
            phys: OnceLock::new(),
            spec: OnceLock::from(coeffs),
        }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            grid,
            phys: OnceLock::from(zero.clone()),
            spec: OnceLock::from(zero),
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self::from_phys(grid, values)
    }

    /// Real field from a real-valued profile.
    pub fn from_real_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Single Fourier mode with integer wavenumber `k` and coefficient `c`.
    pub fn single_mode(grid: Arc<Grid>, k: i64, c: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
        coeffs[grid.index_of(k)] = c;
        Self::from_spec(grid, coeffs)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn has_phys(&self) -> bool {
        self.phys.get().is_some()
    }

    pub fn has_spec(&self) -> bool {
        self.spec.get().is_some()
    }

    pub fn phys(&self) -> &[Complex64] {
        self.phys.get_or_init(|| {
            let spec = self.spec.get().expect("field has no valid representation");
            let mut buf = spec.clone();
            fft_in_place(&mut buf, true);
            let inv_l = 1.0 / self.grid.length();
            buf.iter_mut().for_each(|c| *c *= inv_l);
            buf
        })
    }

    pub fn spec(&self) -> &[Complex64] {
        self.spec.get_or_init(|| {
            let phys = self.phys.get().expect("field has no valid representation");
            let mut buf = phys.clone();
            fft_in_place(&mut buf, false);
            let dx = self.grid.dx();
            buf.iter_mut().for_each(|c| *c *= dx);
            buf
        })
    }

    /// Returns a copy with the requested representation populated.
    pub fn transform(&self, direction: Direction) -> Self {
        match direction {
            Direction::ToSpec => {
                self.spec();
            }
            Direction::ToPhys => {
                self.phys();
            }
        }
        self.clone()
    }

    pub fn into_spec(self) -> Vec<Complex64> {
        self.spec();
        self.spec.into_inner().expect("populated above")
    }

    pub fn into_phys(self) -> Vec<Complex64> {
        self.phys();
        self.phys.into_inner().expect("populated above")
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Discrete `L²` norm from physical samples (Riemann sum).
    pub fn l2_norm_phys(&self) -> f64 {
        let dx = self.grid.dx();
        (self.phys().iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt()
    }

    /// `∫ f · conj(g) dx` evaluated by spectral quadrature.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let sum: Complex64 = self
            .spec()
            .iter()
            .zip(other.spec())
            .map(|(a, b)| a * b.conj())
            .sum();
        sum / self.grid.length()
    }

    /// Largest imaginary part among the physical samples.
    pub fn max_imag(&self) -> f64 {
        self.phys().iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    pub fn map_spec(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .spec()
            .iter()
            .enumerate()
            .map(|(k, &c)| f(k, c))
            .collect();
        Self::from_spec(self.grid.clone(), coeffs)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_spec(|_, c| a * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self
            .spec()
            .iter()
            .zip(other.spec())
            .map(|(a, b)| a + b)
            .collect();
        Self::from_spec(self.grid.clone(), coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coeffs = self
            .spec()
            .iter()
            .zip(other.spec())
            .map(|(a, b)| a - b)
            .collect();
        Self::from_spec(self.grid.clone(), coeffs)
    }

    /// Copy with every mode outside the 2/3 band removed.
    pub fn dealiased(&self) -> Self {
        let mut coeffs = self.spec().to_vec();
        dealias(&self.grid, &mut coeffs);
        Self::from_spec(self.grid.clone(), coeffs)
    }

    /// Projection onto the real part in physical space.
    pub fn real_part(&self) -> Self {
        let values = self
            .phys()
            .iter()
            .map(|c| Complex64::new(c.re, 0.0))
            .collect();
        Self::from_phys(self.grid.clone(), values)
    }

    pub fn is_finite(&self) -> bool {
        let rep = self
            .spec
            .get()
            .or(self.phys.get())
            .expect("field has no valid representation");
        rep.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Dealiased pseudospectral product `P(P f · P g)` (or with `conj(P g)`).
pub fn dealiased_product(f: &SpectralField, g: &SpectralField, conj_g: bool) -> SpectralField {
    let grid = f.grid().clone();
    let fp = f.dealiased().into_phys();
    let gp = g.dealiased().into_phys();
    let values = fp
        .iter()
        .zip(&gp)
        .map(|(a, b)| if conj_g { a * b.conj() } else { a * b })
        .collect();
    SpectralField::from_phys(grid, values).dealiased()
}

/// Fourier multiplier symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierSpec {
    /// `⟨ξ⟩^a`
    Bracket {
        a: f64,
    },
    /// `⟨ξ⟩_m^a`
    BracketM {
        a: f64,
        m: f64,
    },
    /// The smoothing operator `I` with cutoff `N` and index `s < 0`.
    IOp {
        cutoff: f64,
        s: f64,
    },
    IOpSquared {
        cutoff: f64,
        s: f64,
    },
    IOpInverse {
        cutoff: f64,
        s: f64,
    },
    /// `|ξ|^θ`; the `ξ = 0` value is 0 for `θ > 0` and 1 for `θ = 0`.
    DerivativePower {
        theta: f64,
    },
    /// Symbol values listed in FFT order.
    Custom(Vec<f64>),
}

impl MultiplierSpec {
    /// Symbol evaluated at each lattice frequency of `grid`.
    pub fn symbols(&self, grid: &Grid) -> Result<Vec<f64>> {
        let eval = |f: &dyn Fn(f64) -> f64| grid.freqs().iter().map(|&xi| f(xi)).collect();
        Ok(match *self {
            Self::Bracket { a } => eval(&|xi| bracket(xi).powf(a)),
            Self::BracketM { a, m } => eval(&|xi| bracket_m(xi, m).powf(a)),
            Self::IOp { cutoff, s } => {
                check_i_params(cutoff, s)?;
                eval(&|xi| chi(xi.abs() / cutoff, s))
            }
            Self::IOpSquared { cutoff, s } => {
                check_i_params(cutoff, s)?;
                eval(&|xi| chi(xi.abs() / cutoff, s).powi(2))
            }
            Self::IOpInverse { cutoff, s } => {
                check_i_params(cutoff, s)?;
                eval(&|xi| chi(xi.abs() / cutoff, s).recip())
            }
            Self::DerivativePower { theta } => eval(&|xi| {
                if xi == 0.0 {
                    if theta == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    xi.abs().powf(theta)
                }
            }),
            Self::Custom(ref table) => {
                if table.len() != grid.n() {
                    return Err(Error::TableLength {
                        expected: grid.n(),
                        got: table.len(),
                    });
                }
                table.clone()
            }
        })
    }
}

/// Multiplies every Fourier coefficient of `f` by the symbol of `m`.
pub fn apply_multiplier(f: &SpectralField, m: &MultiplierSpec) -> Result<SpectralField> {
    let symbols = m.symbols(f.grid())?;
    Ok(apply_symbols(f, &symbols))
}

pub(crate) fn apply_symbols(f: &SpectralField, symbols: &[f64]) -> SpectralField {
    f.map_spec(|k, c| c * symbols[k])
}

pub(crate) fn check_i_params(cutoff: f64, s: f64) -> Result<()> {
    if !(cutoff >= 1.0) {
        return Err(Error::InvalidCutoff(cutoff));
    }
    if !(s < 0.0) {
        return Err(Error::NonNegativeRegularity(s));
    }
    Ok(())
}

/// Cubic smoothstep on `[0, 1]`.
#[inline]
fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

/// Profile of the I-operator as a function of `σ = |ξ|/N`.
///
/// Equal to 1 below `σ = 1` and to `σ^s` above `σ = 2`; in between the log
/// of the profile is `s · H(σ - 1) · ln σ` with `H` the cubic smoothstep, which
/// keeps it C¹ and nonincreasing.
#[inline]
pub(crate) fn chi(sigma: f64, s: f64) -> f64 {
    if sigma <= 1.0 {
        1.0
    } else if sigma >= 2.0 {
        sigma.powf(s)
    } else {
        (s * smoothstep(sigma - 1.0) * sigma.ln()).exp()
    }
}

/// Symbol `q(ξ)` of the I-operator with cutoff `N` and index `s < 0`.
pub fn i_symbol(xi: f64, cutoff: f64, s: f64) -> Result<f64> {
    check_i_params(cutoff, s)?;
    Ok(chi(xi.abs() / cutoff, s))
}

/// Discrete `H^a` norm, `(Σ_k ⟨ξ_k⟩^{2a} |f̂_k|² / L)^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, a: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .spec()
        .iter()
        .zip(grid.freqs())
        .map(|(c, &xi)| (1.0 + xi * xi).powf(a) * c.norm_sqr())
        .sum();
    (sum / grid.length()).sqrt()
}

fn rough_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rough_modulus(amplitude: f64, xi: f64, s: f64) -> f64 {
    amplitude * bracket(xi).powf(-s - 0.5 - ROUGH_DELTA)
}

/// Random complex field in `H^s`: `|f̂(ξ)| = amplitude · ⟨ξ⟩^{-s-1/2-δ}` with
/// independent uniform phases drawn from ChaCha20 seeded by `seed` (stream 0).
pub fn sample_rough_data(grid: &Arc<Grid>, s: f64, seed: u64, amplitude: f64) -> SpectralField {
    sample_rough_stream(grid, s, seed, 0, amplitude)
}

/// Same profile as [`sample_rough_data`] drawn from ChaCha20 stream `stream`.
pub fn sample_rough_stream(
    grid: &Arc<Grid>,
    s: f64,
    seed: u64,
    stream: u64,
    amplitude: f64,
) -> SpectralField {
    let mut rng = rough_rng(seed, stream);
    let coeffs = grid
        .freqs()
        .iter()
        .map(|&xi| {
            let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
            Complex64::from_polar(rough_modulus(amplitude, xi, s), phase)
        })
        .collect();
    SpectralField::from_spec(grid.clone(), coeffs)
}

/// Real-valued rough field: the same modulus profile with Hermitian-symmetric
/// phases, so the physical samples are real.
pub fn sample_rough_real(
    grid: &Arc<Grid>,
    s: f64,
    seed: u64,
    stream: u64,
    amplitude: f64,
) -> SpectralField {
    let n = grid.n();
    let mut rng = rough_rng(seed, stream);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=n / 2 {
        let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
        let modulus = rough_modulus(amplitude, grid.freqs()[k], s);
        if k == 0 || k == n / 2 {
            // self-conjugate modes carry a real coefficient
            coeffs[k] = Complex64::new(modulus * phase.cos().signum(), 0.0);
        } else {
            let c = Complex64::from_polar(modulus, phase);
            coeffs[k] = c;
            coeffs[n - k] = c.conj();
        }
    }
    SpectralField::from_spec(grid.clone(), coeffs)
}
