//! Time integration of the Dirac–Klein–Gordon system.
//!
//! The free flow is diagonal in Fourier space: transport `e^{∓iξh}` for the
//! two spinor components and a phase-space rotation at frequency `⟨ξ⟩_m` for
//! the scalar field. The Dirac mass and the cubic couplings are treated as
//! forcing and integrated with an exponential (Lawson) midpoint rule.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    bracket_m, dealias, sample_rough_real, sample_rough_stream, Grid, SpectralField,
};

const STEP_LIMIT: f64 = 0.1;

/// Masses of the spinor (`M`) and of the scalar field (`m`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub dirac_mass: f64,
    pub scalar_mass: f64,
}

impl PhysicsParams {
    pub fn new(dirac_mass: f64, scalar_mass: f64) -> Result<Self> {
        if !(dirac_mass > 0.0 && scalar_mass > 0.0) {
            return Err(Error::InvalidMass {
                dirac: dirac_mass,
                scalar: scalar_mass,
            });
        }
        Ok(Self {
            dirac_mass,
            scalar_mass,
        })
    }
}

/// Full simulation state at one instant.
#[derive(Debug, Clone)]
pub struct DkgState {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
    pub phi: SpectralField,
    pub phi_t: SpectralField,
}

impl DkgState {
    pub fn new(
        t: f64,
        u: SpectralField,
        v: SpectralField,
        phi: SpectralField,
        phi_t: SpectralField,
    ) -> Result<Self> {
        if !(u.same_grid(&v) && u.same_grid(&phi) && u.same_grid(&phi_t)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            t,
            u,
            v,
            phi,
            phi_t,
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let z = SpectralField::zeros(grid);
        Self {
            t: 0.0,
            u: z.clone(),
            v: z.clone(),
            phi: z.clone(),
            phi_t: z,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    /// `(φ, ∂_t φ)` at this instant.
    pub fn scalar_slice(&self) -> WaveSlice {
        WaveSlice {
            phi: self.phi.clone(),
            phi_t: self.phi_t.clone(),
        }
    }

    fn to_modes(&self) -> Modes {
        Modes {
            u: self.u.spec().to_vec(),
            v: self.v.spec().to_vec(),
            phi: self.phi.spec().to_vec(),
            phi_t: self.phi_t.spec().to_vec(),
        }
    }

    fn from_modes(grid: &Arc<Grid>, t: f64, m: Modes) -> Self {
        Self {
            t,
            u: SpectralField::from_spec(grid.clone(), m.u),
            v: SpectralField::from_spec(grid.clone(), m.v),
            phi: SpectralField::from_spec(grid.clone(), m.phi),
            phi_t: SpectralField::from_spec(grid.clone(), m.phi_t),
        }
    }
}

/// States stored at uniform spacing `dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DkgState>,
    pub params: PhysicsParams,
    pub dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&DkgState> {
        self.states.last()
    }
}

/// Scalar field and its time derivative at one instant.
#[derive(Debug, Clone)]
pub struct WaveSlice {
    pub phi: SpectralField,
    pub phi_t: SpectralField,
}

/// A sampled scalar wave.
#[derive(Debug, Clone)]
pub struct WaveSeries {
    pub times: Vec<f64>,
    pub slices: Vec<WaveSlice>,
}

/// Characteristic family of a Dirac component: `+` transports right (`u`),
/// `-` transports left (`v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn check_nonnegative(h: f64) -> Result<()> {
    if h >= 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "propagation time must be nonnegative, got {h}"
        )))
    }
}

/// Free transport `f̂(ξ) ← e^{∓iξh} f̂(ξ)`.
pub fn free_dirac_propagate(f: &SpectralField, h: f64, sign: Sign) -> Result<SpectralField> {
    check_nonnegative(h)?;
    let sg = sign.value();
    let freqs = f.grid().freqs().to_vec();
    Ok(f.map_spec(|k, c| c * Complex64::from_polar(1.0, -sg * freqs[k] * h)))
}

/// Exact free Klein–Gordon evolution of `(z, z_t)` over time `h`.
pub fn free_kg_propagate(
    z: &SpectralField,
    z_t: &SpectralField,
    h: f64,
    mass: f64,
) -> Result<(SpectralField, SpectralField)> {
    check_nonnegative(h)?;
    if !z.same_grid(z_t) {
        return Err(Error::GridMismatch);
    }
    let grid = z.grid().clone();
    let n = grid.n();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for ((&xi, &zk), &wk) in grid.freqs().iter().zip(z.spec()).zip(z_t.spec()) {
        let omega = bracket_m(xi, mass);
        let (sn, cs) = (omega * h).sin_cos();
        a.push(zk * cs + wk * (sn / omega));
        b.push(-zk * (omega * sn) + wk * cs);
    }
    Ok((
        SpectralField::from_spec(grid.clone(), a),
        SpectralField::from_spec(grid, b),
    ))
}

/// Spectral coefficients of the four state components.
#[derive(Debug, Clone)]
struct Modes {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    phi: Vec<Complex64>,
    phi_t: Vec<Complex64>,
}

impl Modes {
    fn zeros(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            u: z.clone(),
            v: z.clone(),
            phi: z.clone(),
            phi_t: z,
        }
    }

    /// `self += a · other`
    fn axpy(&mut self, a: f64, other: &Modes) {
        let pairs = [
            (&mut self.u, &other.u),
            (&mut self.v, &other.v),
            (&mut self.phi, &other.phi),
            (&mut self.phi_t, &other.phi_t),
        ];
        for (dst, src) in pairs {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += a * s);
        }
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        let finite = |v: &[Complex64]| v.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        [
            ("u", &self.u),
            ("v", &self.v),
            ("phi", &self.phi),
            ("phi_t", &self.phi_t),
        ]
        .into_iter()
        .find(|(_, v)| !finite(v))
        .map(|(name, _)| name)
    }
}

/// Precomputed free flow `E(h)` on one grid.
struct FreeFlow {
    right: Vec<Complex64>,
    left: Vec<Complex64>,
    cos: Vec<f64>,
    sin_over: Vec<f64>,
    omega_sin: Vec<f64>,
}

impl FreeFlow {
    fn new(grid: &Grid, h: f64, mass: f64) -> Self {
        let n = grid.n();
        let mut flow = Self {
            right: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            cos: Vec::with_capacity(n),
            sin_over: Vec::with_capacity(n),
            omega_sin: Vec::with_capacity(n),
        };
        for &xi in grid.freqs() {
            flow.right.push(Complex64::from_polar(1.0, -xi * h));
            flow.left.push(Complex64::from_polar(1.0, xi * h));
            let omega = bracket_m(xi, mass);
            let (sn, cs) = (omega * h).sin_cos();
            flow.cos.push(cs);
            flow.sin_over.push(sn / omega);
            flow.omega_sin.push(omega * sn);
        }
        flow
    }

    fn apply(&self, y: &mut Modes) {
        y.u.iter_mut().zip(&self.right).for_each(|(c, e)| *c *= e);
        y.v.iter_mut().zip(&self.left).for_each(|(c, e)| *c *= e);
        for k in 0..y.phi.len() {
            let (z, w) = (y.phi[k], y.phi_t[k]);
            y.phi[k] = z * self.cos[k] + w * self.sin_over[k];
            y.phi_t[k] = -z * self.omega_sin[k] + w * self.cos[k];
        }
    }
}

/// Physical samples of the band-limited part of a coefficient vector.
fn band_phys(grid: &Arc<Grid>, spec: &[Complex64]) -> Vec<Complex64> {
    let mut c = spec.to_vec();
    dealias(grid, &mut c);
    SpectralField::from_spec(grid.clone(), c).into_phys()
}

fn band_spec(grid: &Arc<Grid>, phys: Vec<Complex64>) -> Vec<Complex64> {
    let mut c = SpectralField::from_phys(grid.clone(), phys).into_spec();
    dealias(grid, &mut c);
    c
}

/// Right-hand sides of the Duhamel formulation, in spectral form.
fn forcing_modes(grid: &Arc<Grid>, params: &PhysicsParams, y: &Modes) -> Modes {
    let up = band_phys(grid, &y.u);
    let vp = band_phys(grid, &y.v);
    let pp = band_phys(grid, &y.phi);
    let phi_v = band_spec(grid, pp.iter().zip(&vp).map(|(p, v)| p * v).collect());
    let phi_u = band_spec(grid, pp.iter().zip(&up).map(|(p, u)| p * u).collect());
    let source = band_spec(
        grid,
        up.iter()
            .zip(&vp)
            .map(|(u, v)| Complex64::new(2.0 * (u * v.conj()).re, 0.0))
            .collect(),
    );
    let minus_i = Complex64::new(0.0, -1.0);
    let mass = params.dirac_mass;
    let n = grid.n();
    let mut out = Modes::zeros(n);
    for k in 0..n {
        out.u[k] = minus_i * (mass * y.v[k] - phi_v[k]);
        out.v[k] = minus_i * (mass * y.u[k] - phi_u[k]);
        out.phi_t[k] = source[k];
    }
    out
}

/// Forcing terms `(F_u, F_v, F_φ)` with `F_u = -i(Mv - φv)`,
/// `F_v = -i(Mu - φu)` and `F_φ = 2 Re(u v̄)`; products are dealiased.
pub fn nonlinear_forcing(
    state: &DkgState,
    params: &PhysicsParams,
) -> (SpectralField, SpectralField, SpectralField) {
    let grid = state.grid().clone();
    let f = forcing_modes(&grid, params, &state.to_modes());
    (
        SpectralField::from_spec(grid.clone(), f.u),
        SpectralField::from_spec(grid.clone(), f.v),
        SpectralField::from_spec(grid, f.phi_t),
    )
}

/// Reusable integrator for one grid, mass pair and step size.
struct Stepper {
    grid: Arc<Grid>,
    params: PhysicsParams,
    h: f64,
    half: FreeFlow,
}

impl Stepper {
    fn new(grid: Arc<Grid>, params: PhysicsParams, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= STEP_LIMIT) {
            return Err(Error::InvalidStep(h));
        }
        let half = FreeFlow::new(&grid, 0.5 * h, params.scalar_mass);
        Ok(Self {
            grid,
            params,
            h,
            half,
        })
    }

    /// One exponential midpoint step:
    /// `y_mid = E(h/2)(y + h/2 N(y))`, `y_1 = E(h/2)(E(h/2) y + h N(y_mid))`.
    fn advance(&self, y: &Modes, t: f64) -> Result<Modes> {
        let n0 = forcing_modes(&self.grid, &self.params, y);
        let mut free_half = y.clone();
        self.half.apply(&mut free_half);

        let mut mid = y.clone();
        mid.axpy(0.5 * self.h, &n0);
        self.half.apply(&mut mid);

        let n_mid = forcing_modes(&self.grid, &self.params, &mid);
        let mut next = free_half;
        next.axpy(self.h, &n_mid);
        self.half.apply(&mut next);

        if let Some(field) = next.first_non_finite() {
            return Err(Error::NonFinite {
                field,
                t: t + self.h,
            });
        }
        Ok(next)
    }
}

/// Advances `state` by one step of size `h` (`0 < h <= 0.1`).
pub fn step(state: &DkgState, params: &PhysicsParams, h: f64) -> Result<DkgState> {
    let grid = state.grid().clone();
    let stepper = Stepper::new(grid.clone(), *params, h)?;
    let next = stepper.advance(&state.to_modes(), state.t)?;
    Ok(DkgState::from_modes(&grid, state.t + h, next))
}

fn step_count(duration: f64, h: f64) -> Result<usize> {
    let ratio = duration / h;
    let steps = ratio.round();
    if !(duration > 0.0) || steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::IncommensurateDuration { duration, step: h });
    }
    Ok(steps as usize)
}

/// Observer invoked after every step with the current state.
pub type Observer<'a> = &'a mut dyn FnMut(&DkgState);

/// Integrates from `state0` over `duration` with step `h`, storing every
/// `stride`-th state (the initial state is always stored).
pub fn evolve(
    state0: &DkgState,
    params: &PhysicsParams,
    duration: f64,
    h: f64,
    stride: usize,
    observers: &mut [Observer<'_>],
) -> Result<Trajectory> {
    let steps = step_count(duration, h)?;
    let stride = stride.max(1);
    let grid = state0.grid().clone();
    let stepper = Stepper::new(grid.clone(), *params, h)?;
    let t0 = state0.t;

    let mut y = state0.to_modes();
    let mut states = vec![state0.clone()];
    for j in 1..=steps {
        let t_prev = t0 + (j - 1) as f64 * h;
        y = stepper.advance(&y, t_prev)?;
        let keep = j % stride == 0;
        if keep || !observers.is_empty() {
            let state = DkgState::from_modes(&grid, t0 + j as f64 * h, y.clone());
            for obs in observers.iter_mut() {
                obs(&state);
            }
            if keep {
                states.push(state);
            }
        }
    }
    Ok(Trajectory {
        states,
        params: *params,
        dt: h * stride as f64,
    })
}

/// Homogeneous and inhomogeneous parts of `φ` along a trajectory.
#[derive(Debug, Clone)]
pub struct PhiSplit {
    /// Free Klein–Gordon wave launched by the initial `(φ₀, φ₁)`.
    pub homogeneous: WaveSeries,
    /// Remainder `Φ = φ - φ⁽⁰⁾`, vanishing with its time derivative at the start.
    pub inhomogeneous: WaveSeries,
}

/// Splits `φ = φ⁽⁰⁾ + Φ` along `traj`.
pub fn split_phi(traj: &Trajectory) -> Result<PhiSplit> {
    let first = traj.states.first().ok_or(Error::EmptyTrajectory)?;
    let mass = traj.params.scalar_mass;
    let mut homogeneous = WaveSeries {
        times: Vec::with_capacity(traj.states.len()),
        slices: Vec::with_capacity(traj.states.len()),
    };
    let mut inhomogeneous = homogeneous.clone();
    for state in &traj.states {
        let (phi0, phi0_t) = free_kg_propagate(&first.phi, &first.phi_t, state.t - first.t, mass)?;
        inhomogeneous.times.push(state.t);
        inhomogeneous.slices.push(WaveSlice {
            phi: state.phi.sub(&phi0),
            phi_t: state.phi_t.sub(&phi0_t),
        });
        homogeneous.times.push(state.t);
        homogeneous.slices.push(WaveSlice {
            phi: phi0,
            phi_t: phi0_t,
        });
    }
    Ok(PhiSplit {
        homogeneous,
        inhomogeneous,
    })
}

/// Free Klein–Gordon wave with data `data` at time `from_t`, sampled every
/// `dt` over `[from_t, from_t + horizon]`.
pub fn cascade_free_wave(
    data: &WaveSlice,
    from_t: f64,
    horizon: f64,
    dt: f64,
    mass: f64,
) -> Result<WaveSeries> {
    check_nonnegative(horizon)?;
    let samples = if horizon == 0.0 {
        0
    } else {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample spacing must be positive, got {dt}"
            )));
        }
        step_count(horizon, dt)?
    };
    let mut series = WaveSeries {
        times: Vec::with_capacity(samples + 1),
        slices: Vec::with_capacity(samples + 1),
    };
    for j in 0..=samples {
        let elapsed = j as f64 * dt;
        let (phi, phi_t) = free_kg_propagate(&data.phi, &data.phi_t, elapsed, mass)?;
        series.times.push(from_t + elapsed);
        series.slices.push(WaveSlice { phi, phi_t });
    }
    Ok(series)
}

/// Outcome of the Picard iteration on one slab.
#[derive(Debug, Clone)]
pub struct PicardRun {
    /// Final iterate, one state per time level.
    pub states: Vec<DkgState>,
    /// `sup_t (‖Δu‖² + ‖Δv‖²)^{1/2}` between consecutive spinor iterates.
    pub increments: Vec<f64>,
}

/// Boot-strap style fixed-point iteration on `[t₀, t₀ + horizon]`.
///
/// Starts from `u⁽⁻¹⁾ = v⁽⁻¹⁾ = 0`. Each sweep solves the Klein–Gordon
/// equation sourced by the previous spinor iterate, then the linear Dirac
/// equations with mass and coupling terms frozen at the previous iterate.
/// Duhamel integrals use the exponential trapezoid rule on the step `h`, so the
/// fixed point is second-order accurate.
pub fn picard_iterate(
    state0: &DkgState,
    params: &PhysicsParams,
    horizon: f64,
    h: f64,
    iterations: usize,
) -> Result<PicardRun> {
    let steps = step_count(horizon, h)?;
    if !(h > 0.0 && h <= STEP_LIMIT) {
        return Err(Error::InvalidStep(h));
    }
    let grid = state0.grid().clone();
    let n = grid.n();
    let flow = FreeFlow::new(&grid, h, params.scalar_mass);
    let y0 = state0.to_modes();
    let zero = vec![Complex64::new(0.0, 0.0); n];

    let mut spinor: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        vec![(zero.clone(), zero.clone()); steps + 1];
    let mut scalar: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    let mut increments = Vec::with_capacity(iterations);

    // Exponential trapezoid: y_{j+1} = E(h) (y_j + h/2 F_j) + h/2 F_{j+1}.
    let integrate = |start: Modes, forcing: &dyn Fn(usize) -> Modes| -> Vec<Modes> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut y = start;
        let mut f_prev = forcing(0);
        out.push(y.clone());
        for j in 1..=steps {
            let f_next = forcing(j);
            y.axpy(0.5 * h, &f_prev);
            flow.apply(&mut y);
            y.axpy(0.5 * h, &f_next);
            out.push(y.clone());
            f_prev = f_next;
        }
        out
    };

    for _ in 0..iterations {
        // scalar field driven by the previous spinor iterate
        let kg_start = Modes {
            u: zero.clone(),
            v: zero.clone(),
            phi: y0.phi.clone(),
            phi_t: y0.phi_t.clone(),
        };
        let kg = integrate(kg_start, &|j| {
            let (u, v) = &spinor[j];
            let state = Modes {
                u: u.clone(),
                v: v.clone(),
                phi: zero.clone(),
                phi_t: zero.clone(),
            };
            let f = forcing_modes(&grid, params, &state);
            Modes {
                u: zero.clone(),
                v: zero.clone(),
                phi: zero.clone(),
                phi_t: f.phi_t,
            }
        });
        scalar = kg.into_iter().map(|m| (m.phi, m.phi_t)).collect();

        let dirac_start = Modes {
            u: y0.u.clone(),
            v: y0.v.clone(),
            phi: zero.clone(),
            phi_t: zero.clone(),
        };
        let dirac = integrate(dirac_start, &|j| {
            let (u, v) = &spinor[j];
            let state = Modes {
                u: u.clone(),
                v: v.clone(),
                phi: scalar[j].0.clone(),
                phi_t: zero.clone(),
            };
            let f = forcing_modes(&grid, params, &state);
            Modes {
                u: f.u,
                v: f.v,
                phi: zero.clone(),
                phi_t: zero.clone(),
            }
        });

        let l = grid.length();
        let mut sup = 0.0f64;
        for (new, (u_old, v_old)) in dirac.iter().zip(&spinor) {
            let d: f64 = new
                .u
                .iter()
                .zip(u_old)
                .chain(new.v.iter().zip(v_old))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            sup = sup.max((d / l).sqrt());
        }
        increments.push(sup);
        spinor = dirac.into_iter().map(|m| (m.u, m.v)).collect();
    }

    if scalar.is_empty() {
        scalar = vec![(y0.phi.clone(), y0.phi_t.clone()); steps + 1];
    }
    let states = spinor
        .into_iter()
        .zip(scalar)
        .enumerate()
        .map(|(j, ((u, v), (phi, phi_t)))| {
            DkgState::from_modes(&grid, state0.t + j as f64 * h, Modes { u, v, phi, phi_t })
        })
        .collect();
    Ok(PicardRun { states, increments })
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialData {
    /// Smooth Gaussian bumps centred in the box.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// Rough spinor in `H^s` (ChaCha20 streams 0 and 1); if `r` is given the
    /// scalar field starts as a real rough field in `H^r` (stream 2) with
    /// amplitude `phi_amplitude` (default `amplitude`), otherwise at zero.
    /// `∂_t φ` starts at zero.
    Rough {
        s: f64,
        r: Option<f64>,
        seed: u64,
        amplitude: f64,
        phi_amplitude: Option<f64>,
    },
    Zero,
}

impl InitialData {
    pub fn build(&self, grid: &Arc<Grid>) -> DkgState {
        match *self {
            InitialData::Zero => DkgState::zeros(grid.clone()),
            InitialData::Gaussian { amplitude, width } => {
                let c = 0.5 * grid.length();
                let bump = move |x: f64, shift: f64| {
                    let d = (x - c - shift) / width;
                    (-0.5 * d * d).exp()
                };
                let u = SpectralField::from_fn(grid.clone(), |x| {
                    Complex64::from_polar(amplitude * bump(x, 0.0), 0.5 * x)
                });
                let v = SpectralField::from_fn(grid.clone(), |x| {
                    Complex64::new(0.6 * amplitude * bump(x, 0.5 * width), 0.0)
                });
                let phi = SpectralField::from_real_fn(grid.clone(), |x| {
                    0.5 * amplitude * bump(x, -0.5 * width)
                });
                let phi_t = SpectralField::from_real_fn(grid.clone(), |x| {
                    0.2 * amplitude * bump(x, 0.0) * (2.0 * PI * (x - c) / grid.length()).sin()
                });
                DkgState {
                    t: 0.0,
                    u,
                    v,
                    phi,
                    phi_t,
                }
            }
            InitialData::Rough {
                s,
                r,
                seed,
                amplitude,
                phi_amplitude,
            } => {
                let u = sample_rough_stream(grid, s, seed, 0, amplitude);
                let v = sample_rough_stream(grid, s, seed, 1, amplitude);
                let phi = match r {
                    Some(r) => {
                        sample_rough_real(grid, r, seed, 2, phi_amplitude.unwrap_or(amplitude))
                    }
                    None => SpectralField::zeros(grid.clone()),
                };
                DkgState {
                    t: 0.0,
                    u,
                    v,
                    phi,
                    phi_t: SpectralField::zeros(grid.clone()),
                }
            }
        }
    }
}
