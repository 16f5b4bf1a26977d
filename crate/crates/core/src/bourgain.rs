//! Discrete space-time norms and bilinear estimate probes.
//!
//! A block holds samples `u(t_j, x_k)` on a periodic window of length `T_w`
//! in time and the periodic spatial box. Its transform is
//!
//! ```text
//! ũ(τ, ξ) = dt·dx Σ_j Σ_k e^{-i(τ t_j + ξ x_k)} u(t_j, x_k)
//! ```
//!
//! and norms are `(Σ w(τ, ξ)² |ũ|² / (T_w L))^{1/2}`, so with `w ≡ 1` they
//! reproduce the space-time `L²` norm of the (tapered) samples.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dkg::Trajectory;
use crate::error::{Error, Result};
use crate::spectral::{
    bracket, dealiased_product, fft_in_place, make_grid, sobolev_norm, Grid, SpectralField,
};

/// Constant in `min(|η|, |ξ-η|) <= C max(|Γ|, |Θ₊|, |Σ₋|)`.
///
/// With `τ = Σ₋ + Θ₊ - η + (ξ-η)` one gets `2 min <= |Γ| + 2 max(|Θ₊|, |Σ₋|)`,
/// hence `C = 3/2`, which is attained.
pub const COMPARISON_CONSTANT: f64 = 1.5;

/// Envelope width of the characteristic packets used by [`null_probe`].
pub const PACKET_WIDTH: f64 = 0.5;

/// Temporal window applied before the space-time transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    None,
    /// Periodic Hann taper `sin²(π j / nt)` along time.
    Hann,
}

/// Which component of a trajectory to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    V,
    Phi,
    PhiT,
}

#[derive(Debug, Clone)]
pub struct SpaceTimeBlock {
    grid: Arc<Grid>,
    nt: usize,
    duration: f64,
    window: Window,
    samples: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

impl SpaceTimeBlock {
    /// `samples` are stored row by row: `samples[j * nx + k] = u(t_j, x_k)`.
    pub fn new(
        grid: Arc<Grid>,
        duration: f64,
        nt: usize,
        samples: Vec<Complex64>,
        window: Window,
    ) -> Result<Self> {
        if nt < 2 || !nt.is_power_of_two() {
            return Err(Error::InvalidGridSize(nt));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidLength(duration));
        }
        if samples.len() != nt * grid.n() {
            return Err(Error::TableLength {
                expected: nt * grid.n(),
                got: samples.len(),
            });
        }
        Ok(Self {
            grid,
            nt,
            duration,
            window,
            samples,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(
        grid: Arc<Grid>,
        duration: f64,
        nt: usize,
        window: Window,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let dt = duration / nt as f64;
        let mut samples = Vec::with_capacity(nt * grid.n());
        for j in 0..nt {
            for k in 0..grid.n() {
                samples.push(f(j as f64 * dt, grid.x(k)));
            }
        }
        Self::new(grid, duration, nt, samples, window)
    }

    /// Samples one component at every stored state; the window length is
    /// `states · dt`.
    pub fn from_trajectory(
        traj: &Trajectory,
        component: Component,
        window: Window,
    ) -> Result<Self> {
        let first = traj.states.first().ok_or(Error::EmptyTrajectory)?;
        let grid = first.grid().clone();
        let nt = traj.states.len();
        let mut samples = Vec::with_capacity(nt * grid.n());
        for state in &traj.states {
            let field = match component {
                Component::U => &state.u,
                Component::V => &state.v,
                Component::Phi => &state.phi,
                Component::PhiT => &state.phi_t,
            };
            if !field.grid().as_ref().eq(&grid) {
                return Err(Error::GridMismatch);
            }
            samples.extend_from_slice(field.phys());
        }
        Self::new(grid, nt as f64 * traj.dt, nt, samples, window)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.grid.n()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.nt as f64
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Time frequencies `τ_j = 2π j / T_w` in FFT order.
    pub fn taus(&self) -> Vec<f64> {
        (0..self.nt)
            .map(|j| 2.0 * PI * wavenumber(j, self.nt) as f64 / self.duration)
            .collect()
    }

    fn taper(&self) -> Vec<f64> {
        match self.window {
            Window::None => vec![1.0; self.nt],
            Window::Hann => (0..self.nt)
                .map(|j| (PI * j as f64 / self.nt as f64).sin().powi(2))
                .collect(),
        }
    }

    /// Samples after the temporal window.
    pub fn tapered_samples(&self) -> Vec<Complex64> {
        let nx = self.nx();
        let taper = self.taper();
        self.samples
            .iter()
            .enumerate()
            .map(|(i, z)| z * taper[i / nx])
            .collect()
    }

    /// Space-time transform of the tapered samples, same layout as the samples.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut data = self.tapered_samples();
            fft2(&mut data, self.nt, self.nx(), false);
            let scale = self.dt() * self.grid.dx();
            data.iter_mut().for_each(|z| *z *= scale);
            data
        })
    }

    /// Space-time `L²` norm of the tapered samples by quadrature.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.tapered_samples().iter().map(|z| z.norm_sqr()).sum();
        (sum * self.dt() * self.grid.dx()).sqrt()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            nt: self.nt,
            duration: self.duration,
            window: self.window,
            samples: self.samples.iter().map(|z| z * a).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn with_window(&self, window: Window) -> Self {
        Self {
            window,
            spectrum: OnceLock::new(),
            ..self.clone()
        }
    }

    fn same_lattice(&self, other: &Self) -> bool {
        self.nt == other.nt && self.duration == other.duration && *self.grid == *other.grid
    }

    /// Pointwise product of the raw samples (or with `conj(other)`), with the
    /// 2/3 rule applied in both `τ` and `ξ` before and after multiplying.
    pub fn product(&self, other: &Self, conj_other: bool) -> Result<Self> {
        if !self.same_lattice(other) {
            return Err(Error::GridMismatch);
        }
        let (nt, nx) = (self.nt, self.nx());
        let a = dealias2(&self.samples, nt, nx);
        let b = dealias2(&other.samples, nt, nx);
        let prod: Vec<Complex64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| if conj_other { x * y.conj() } else { x * y })
            .collect();
        Self::new(
            self.grid.clone(),
            self.duration,
            nt,
            dealias2(&prod, nt, nx),
            self.window,
        )
    }

    /// Samples at time index `j` as a spatial field.
    pub fn slice(&self, j: usize) -> SpectralField {
        let nx = self.nx();
        SpectralField::from_phys(
            self.grid.clone(),
            self.samples[j * nx..(j + 1) * nx].to_vec(),
        )
    }
}

fn fft2(data: &mut [Complex64], nt: usize, nx: usize, inverse: bool) {
    for row in data.chunks_mut(nx) {
        fft_in_place(row, inverse);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nt];
    for k in 0..nx {
        for j in 0..nt {
            col[j] = data[j * nx + k];
        }
        fft_in_place(&mut col, inverse);
        for j in 0..nt {
            data[j * nx + k] = col[j];
        }
    }
}

fn dealias2(samples: &[Complex64], nt: usize, nx: usize) -> Vec<Complex64> {
    let mut data = samples.to_vec();
    fft2(&mut data, nt, nx, false);
    let (ct, cx) = ((nt / 3) as u64, (nx / 3) as u64);
    for j in 0..nt {
        let drop_row = wavenumber(j, nt).unsigned_abs() > ct;
        for k in 0..nx {
            if drop_row || wavenumber(k, nx).unsigned_abs() > cx {
                data[j * nx + k] = Complex64::new(0.0, 0.0);
            }
        }
    }
    fft2(&mut data, nt, nx, true);
    let scale = 1.0 / (nt * nx) as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

/// Space-time norm families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `⟨ξ⟩^a ⟨τ+ξ⟩^b`
    XPlus,
    /// `⟨ξ⟩^a ⟨τ-ξ⟩^b`
    XMinus,
    /// `⟨ξ⟩^a ⟨|τ|-|ξ|⟩^b`
    H,
    /// `‖u‖_{H^{a,b}} + ‖∂_t u‖_{H^{a-1,b}}`
    CalH,
}

fn weighted_norm(u: &SpaceTimeBlock, weight: impl Fn(f64, f64) -> f64) -> f64 {
    let spec = u.spectrum();
    let taus = u.taus();
    let xis = u.grid.freqs();
    let nx = u.nx();
    let mut sum = 0.0;
    for (j, &tau) in taus.iter().enumerate() {
        for (k, &xi) in xis.iter().enumerate() {
            let w = weight(tau, xi);
            sum += w * w * spec[j * nx + k].norm_sqr();
        }
    }
    (sum / (u.duration * u.grid.length())).sqrt()
}

pub fn spacetime_norm(u: &SpaceTimeBlock, kind: NormKind, a: f64, b: f64) -> f64 {
    let h = |a: f64, tau_power: i32| {
        weighted_norm(u, |tau, xi| {
            bracket(xi).powf(a) * bracket(tau.abs() - xi.abs()).powf(b) * tau.abs().powi(tau_power)
        })
    };
    match kind {
        NormKind::XPlus => {
            weighted_norm(u, |tau, xi| bracket(xi).powf(a) * bracket(tau + xi).powf(b))
        }
        NormKind::XMinus => {
            weighted_norm(u, |tau, xi| bracket(xi).powf(a) * bracket(tau - xi).powf(b))
        }
        NormKind::H => h(a, 0),
        NormKind::CalH => h(a, 0) + h(a - 1.0, 1),
    }
}

/// Bilinear estimates that can be probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `‖fg‖_{H^{-a₃}} ≲ ‖f‖_{H^{a₁}} ‖g‖_{H^{a₂}}`, per time slice.
    SobolevProduct,
    /// `‖wz‖_{H^{-a₃,-γ}} ≲ ‖w‖_{H^{a₁,α}} ‖z‖_{H^{a₂,β}}`
    WaveProduct,
    /// `‖wz‖_{H^{-s₁,b-1}} ≲ ‖w‖_{X₊^{s₂,b}} ‖z‖_{X₋^{s₃,b}}`
    NullPp,
    /// `‖wz‖_{X₋^{-s₃,b-1}} ≲ ‖w‖_{H^{s₁,b}} ‖z‖_{X₊^{s₂,b}}`
    NullMp,
    /// `‖wz‖_{X₊^{-s₃,b-1}} ≲ ‖w‖_{H^{s₁,b}} ‖z‖_{X₋^{s₂,b}}`
    NullPm,
    /// Equal-sign counterpart of `NullPp`: both factors measured in `X₊`.
    SameSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSpec {
    pub kind: EstimateKind,
    /// `(a₁, a₂, a₃)` or `(s₁, s₂, s₃)`.
    pub exponents: [f64; 3],
    /// `(α, β, γ)` for the wave product; the first entry is `b` otherwise.
    pub weights: [f64; 3],
    /// Multiply by `conj(g)` instead of `g`.
    pub conjugate_second: bool,
}

impl EstimateSpec {
    pub fn null(kind: EstimateKind, exponents: [f64; 3], b: f64) -> Self {
        Self {
            kind,
            exponents,
            weights: [b, 0.0, 0.0],
            conjugate_second: false,
        }
    }

    /// Hypotheses of the underlying estimate that fail for these exponents.
    pub fn violations(&self) -> Vec<String> {
        let [e1, e2, e3] = self.exponents;
        let mut out = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(what.to_string());
            }
        };
        match self.kind {
            EstimateKind::SobolevProduct | EstimateKind::WaveProduct => {
                check(e1 + e2 + e3 > 0.5, "a1+a2+a3 > 1/2");
                check(e1 + e2 >= 0.0, "a1+a2 >= 0");
                check(e1 + e3 >= 0.0, "a1+a3 >= 0");
                check(e2 + e3 >= 0.0, "a2+a3 >= 0");
                if self.kind == EstimateKind::WaveProduct {
                    let [al, be, ga] = self.weights;
                    check(
                        al >= 0.0 && be >= 0.0 && ga >= 0.0,
                        "alpha, beta, gamma >= 0",
                    );
                    check(al + be + ga > 0.5, "alpha+beta+gamma > 1/2");
                }
            }
            _ => {
                let eps = self.weights[0] - 0.5;
                check(eps > 0.0, "b > 1/2");
                check(e1 + e2 + e3 > eps, "s1+s2+s3 > eps");
                check(e2 + e3 >= -0.5 + eps, "s2+s3 >= -1/2+eps");
                check(e1 + e2 >= 0.0, "s1+s2 >= 0");
                check(e1 + e3 >= 0.0, "s1+s3 >= 0");
                if self.kind == EstimateKind::SameSign {
                    out.push("equal signs".into());
                }
            }
        }
        out
    }
}

fn guarded_ratio(num: f64, den: f64) -> Result<f64> {
    if den > 0.0 && den.is_finite() {
        Ok(num / den)
    } else {
        Err(Error::DegenerateRatio)
    }
}

/// `LHS(f·g) / (RHS(f)·RHS(g))` for the chosen estimate.
///
/// The Sobolev product is evaluated on every time slice and the largest
/// slice ratio is returned.
pub fn estimate_ratio(spec: &EstimateSpec, f: &SpaceTimeBlock, g: &SpaceTimeBlock) -> Result<f64> {
    if !f.same_lattice(g) {
        return Err(Error::GridMismatch);
    }
    let [e1, e2, e3] = spec.exponents;
    if spec.kind == EstimateKind::SobolevProduct {
        let mut best: Option<f64> = None;
        for j in 0..f.nt() {
            let (fs, gs) = (f.slice(j), g.slice(j));
            let gs = if spec.conjugate_second {
                SpectralField::from_phys(
                    gs.grid().clone(),
                    gs.phys().iter().map(|z| z.conj()).collect(),
                )
            } else {
                gs
            };
            let den = sobolev_norm(&fs, e1) * sobolev_norm(&gs, e2);
            if den > 0.0 {
                let num = sobolev_norm(&dealiased_product(&fs, &gs, false), -e3);
                best = Some(best.map_or(num / den, |b: f64| b.max(num / den)));
            }
        }
        return best.ok_or(Error::DegenerateRatio);
    }

    let prod = f.product(g, spec.conjugate_second)?;
    let b = spec.weights[0];
    let (num, den) = match spec.kind {
        EstimateKind::WaveProduct => {
            let [al, be, ga] = spec.weights;
            (
                spacetime_norm(&prod, NormKind::H, -e3, -ga),
                spacetime_norm(f, NormKind::H, e1, al) * spacetime_norm(g, NormKind::H, e2, be),
            )
        }
        EstimateKind::NullPp => (
            spacetime_norm(&prod, NormKind::H, -e1, b - 1.0),
            spacetime_norm(f, NormKind::XPlus, e2, b) * spacetime_norm(g, NormKind::XMinus, e3, b),
        ),
        EstimateKind::SameSign => (
            spacetime_norm(&prod, NormKind::H, -e1, b - 1.0),
            spacetime_norm(f, NormKind::XPlus, e2, b) * spacetime_norm(g, NormKind::XPlus, e3, b),
        ),
        EstimateKind::NullMp => (
            spacetime_norm(&prod, NormKind::XMinus, -e3, b - 1.0),
            spacetime_norm(f, NormKind::H, e1, b) * spacetime_norm(g, NormKind::XPlus, e2, b),
        ),
        EstimateKind::NullPm => (
            spacetime_norm(&prod, NormKind::XPlus, -e3, b - 1.0),
            spacetime_norm(f, NormKind::H, e1, b) * spacetime_norm(g, NormKind::XMinus, e2, b),
        ),
        EstimateKind::SobolevProduct => unreachable!(),
    };
    guarded_ratio(num, den)
}

/// Characteristic family of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Travels right, concentrated on `τ = -ξ`.
    Plus,
    /// Travels left, concentrated on `τ = ξ`.
    Minus,
}

/// Packet `e^{ik(x ∓ t)} G(x ∓ t)` with a periodised Gaussian envelope of
/// width `width` centred in the box.
pub fn characteristic_packet(
    grid: &Arc<Grid>,
    duration: f64,
    nt: usize,
    carrier: f64,
    family: Family,
    width: f64,
) -> Result<SpaceTimeBlock> {
    let l = grid.length();
    let centre = 0.5 * l;
    let envelope = move |y: f64| {
        (-2..=2)
            .map(|m| {
                let d = (y - centre + m as f64 * l) / width;
                (-0.5 * d * d).exp()
            })
            .sum::<f64>()
    };
    let sign = match family {
        Family::Plus => -1.0,
        Family::Minus => 1.0,
    };
    SpaceTimeBlock::from_fn(grid.clone(), duration, nt, Window::None, |t, x| {
        let y = x + sign * t;
        Complex64::from_polar(envelope(y), carrier * y)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullProbeReport {
    pub scales: Vec<f64>,
    /// `X₊` packet at `+ξ₀` against an `X₋` packet at `-ξ₀`.
    pub opposite_sign: Vec<f64>,
    /// `X₊` packet at `+ξ₀` against an `X₊` packet at `-ξ₀`.
    pub same_sign: Vec<f64>,
    /// Hypotheses of the null-form estimate violated by the exponents.
    pub violations: Vec<String>,
}

fn growth(seq: &[f64]) -> Vec<f64> {
    seq.windows(2).map(|w| w[1] / w[0]).collect()
}

impl NullProbeReport {
    pub fn opposite_growth(&self) -> Vec<f64> {
        growth(&self.opposite_sign)
    }

    pub fn same_growth(&self) -> Vec<f64> {
        growth(&self.same_sign)
    }
}

/// Box `[0, 2π)²` with a lattice fine enough to resolve products of packets
/// at the largest scale.
fn probe_lattice(max_scale: f64) -> Result<Arc<Grid>> {
    let reach = 2.0 * max_scale + 12.0 / PACKET_WIDTH;
    let mut n = 64;
    while (n / 3) as f64 <= reach {
        n *= 2;
    }
    make_grid(n, 2.0 * PI)
}

/// Ratios of the `H^{-s₁,b-1}` norm of packet products to the `X^{s,b}`
/// norms of the factors, for opposite- and equal-sign pairings.
///
/// Scales are integer carrier frequencies; at least two are required.
pub fn null_probe(exponents: [f64; 3], b: f64, scales: &[f64]) -> Result<NullProbeReport> {
    if scales.len() < 2 {
        return Err(Error::InvalidArgument(
            "null probe needs at least two scales to show a trend".into(),
        ));
    }
    if let Some(bad) = scales.iter().find(|s| !(**s >= 1.0 && s.fract() == 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "packet scales must be positive integers, got {bad}"
        )));
    }
    let max_scale = scales.iter().cloned().fold(0.0, f64::max);
    let grid = probe_lattice(max_scale)?;
    let nt = grid.n();
    let duration = grid.length();
    let opposite = EstimateSpec::null(EstimateKind::NullPp, exponents, b);
    let same = EstimateSpec::null(EstimateKind::SameSign, exponents, b);

    let mut report = NullProbeReport {
        scales: scales.to_vec(),
        opposite_sign: Vec::with_capacity(scales.len()),
        same_sign: Vec::with_capacity(scales.len()),
        violations: opposite.violations(),
    };
    for &xi0 in scales {
        let w = characteristic_packet(&grid, duration, nt, xi0, Family::Plus, PACKET_WIDTH)?;
        let z_minus =
            characteristic_packet(&grid, duration, nt, -xi0, Family::Minus, PACKET_WIDTH)?;
        let z_plus = characteristic_packet(&grid, duration, nt, -xi0, Family::Plus, PACKET_WIDTH)?;
        report
            .opposite_sign
            .push(estimate_ratio(&opposite, &w, &z_minus)?);
        report.same_sign.push(estimate_ratio(&same, &w, &z_plus)?);
    }
    Ok(report)
}

/// `min(|η|, |ξ-η|) / max(|Γ|, |Θ₊|, |Σ₋|)`, or `None` when the maximum
/// vanishes.
pub fn comparison_ratio(tau: f64, xi: f64, lambda: f64, eta: f64) -> Option<f64> {
    let gamma = tau.abs() - xi.abs();
    let theta = lambda + eta;
    let sigma = tau - lambda - (xi - eta);
    let max = gamma.abs().max(theta.abs()).max(sigma.abs());
    if max == 0.0 {
        None
    } else {
        Some(eta.abs().min((xi - eta).abs()) / max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub max_ratio: f64,
    pub evaluated: u64,
    pub discarded: u64,
}

/// Largest comparison ratio over `samples` tuples drawn uniformly from
/// `[-10³, 10³]⁴` (ChaCha20, stream 0).
pub fn comparison_check(samples: u64, seed: u64) -> Result<ComparisonReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = ComparisonReport {
        max_ratio: 0.0,
        evaluated: 0,
        discarded: 0,
    };
    for _ in 0..samples {
        let mut draw = || rng.gen_range(-1e3..=1e3);
        let (tau, xi, lambda, eta) = (draw(), draw(), draw(), draw());
        match comparison_ratio(tau, xi, lambda, eta) {
            Some(r) => {
                report.evaluated += 1;
                report.max_ratio = report.max_ratio.max(r);
            }
            None => report.discarded += 1,
        }
    }
    Ok(report)
}
