//! The smoothing operator `I`, modified charge and the almost-conservation
//! ledger.
//!
//! With `P` the 2/3 projection used by the solver, the commutator is taken as
//! `Q_I(f, g) = I P(P f · P g) - P(P If · P Ig)`. For the semi-discrete system
//! this makes
//!
//! ```text
//! d/dt (‖Iu‖² + ‖Iv‖²) = 2 Re ∫ i Q_I(φ, u) conj(Iv) + 2 Re ∫ i Q_I(φ, v) conj(Iu)
//! ```
//!
//! an exact identity, so the ledger residual only measures time-stepping error.

use serde::{Deserialize, Serialize};

use crate::dkg::{DkgState, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{apply_symbols, check_i_params, chi, dealiased_product, Grid, SpectralField};

/// Relative size below which an accumulated correction counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMethodParams {
    pub cutoff: f64,
    pub s: f64,
    /// Optional `(r, ε)` used only to report the expected decay exponent.
    pub r: Option<f64>,
    pub eps: Option<f64>,
}

impl IMethodParams {
    pub fn new(cutoff: f64, s: f64) -> Result<Self> {
        check_i_params(cutoff, s)?;
        Ok(Self {
            cutoff,
            s,
            r: None,
            eps: None,
        })
    }

    pub fn with_decay(mut self, r: f64, eps: f64) -> Self {
        self.r = Some(r);
        self.eps = Some(eps);
        self
    }

    /// `-r + 2s + 2ε` when `r` and `ε` are set.
    pub fn predicted_exponent(&self) -> Option<f64> {
        Some(-self.r? + 2.0 * self.s + 2.0 * self.eps?)
    }

    /// `q(ξ)` on the lattice of `grid`.
    pub fn symbols(&self, grid: &Grid) -> Vec<f64> {
        grid.freqs()
            .iter()
            .map(|xi| chi(xi.abs() / self.cutoff, self.s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IPower {
    One,
    Two,
    Inverse,
}

/// Applies `I`, `I²` or `I⁻¹`.
pub fn apply_i(f: &SpectralField, p: &IMethodParams, power: IPower) -> SpectralField {
    let mut q = p.symbols(f.grid());
    match power {
        IPower::One => {}
        IPower::Two => q.iter_mut().for_each(|v| *v *= *v),
        IPower::Inverse => q.iter_mut().for_each(|v| *v = v.recip()),
    }
    apply_symbols(f, &q)
}

fn l2_squared(f: &SpectralField) -> f64 {
    f.spec().iter().map(|c| c.norm_sqr()).sum::<f64>() / f.grid().length()
}

/// `‖u‖² + ‖v‖²`.
pub fn charge(state: &DkgState) -> f64 {
    l2_squared(&state.u) + l2_squared(&state.v)
}

/// `‖Iu‖² + ‖Iv‖²`.
pub fn modified_charge(state: &DkgState, p: &IMethodParams) -> f64 {
    let q = p.symbols(state.grid());
    let weighted = |f: &SpectralField| {
        f.spec()
            .iter()
            .zip(&q)
            .map(|(c, w)| c.norm_sqr() * w * w)
            .sum::<f64>()
            / f.grid().length()
    };
    weighted(&state.u) + weighted(&state.v)
}

/// `Q_I(f, g) = I(fg) - If·Ig` with dealiased products.
pub fn commutator_qi(
    f: &SpectralField,
    g: &SpectralField,
    p: &IMethodParams,
) -> Result<SpectralField> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let q = p.symbols(f.grid());
    let whole = apply_symbols(&dealiased_product(f, g, false), &q);
    let parts = dealiased_product(&apply_symbols(f, &q), &apply_symbols(g, &q), false);
    Ok(whole.sub(&parts))
}

/// Rate of change of the modified charge carried by the commutator terms.
pub fn ledger_integrand(state: &DkgState, p: &IMethodParams) -> Result<f64> {
    let iu = apply_i(&state.u, p, IPower::One);
    let iv = apply_i(&state.v, p, IPower::One);
    let a = commutator_qi(&state.phi, &state.u, p)?.inner(&iv);
    let b = commutator_qi(&state.phi, &state.v, p)?.inner(&iu);
    // Re(i z) = -Im z
    Ok(-2.0 * (a.im + b.im))
}

/// Modified charge at both ends of a slab and the accumulated correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeLedger {
    pub q0: f64,
    pub q_t: f64,
    pub r: f64,
    /// `q_t - q0 - r`
    pub residual: f64,
}

impl ChargeLedger {
    pub fn new(q0: f64, q_t: f64, r: f64) -> Self {
        Self {
            q0,
            q_t,
            r,
            residual: q_t - q0 - r,
        }
    }

    /// Whether `r` is zero up to roundoff relative to the charge scale.
    pub fn is_zero_correction(&self) -> bool {
        self.r.abs() <= ZERO_TOLERANCE * self.q0.abs().max(self.q_t.abs())
    }
}

/// Streaming form of [`accumulate_r`]: feed states in time order, e.g. from an
/// `evolve` observer, without storing the trajectory.
#[derive(Debug, Clone)]
pub struct LedgerAccumulator {
    params: IMethodParams,
    q0: Option<f64>,
    q_last: f64,
    last: Option<(f64, f64)>,
    r: f64,
    error: Option<Error>,
}

impl LedgerAccumulator {
    pub fn new(params: IMethodParams) -> Self {
        Self {
            params,
            q0: None,
            q_last: 0.0,
            last: None,
            r: 0.0,
            error: None,
        }
    }

    pub fn push(&mut self, state: &DkgState) {
        if self.error.is_some() {
            return;
        }
        let value = match ledger_integrand(state, &self.params) {
            Ok(v) => v,
            Err(e) => {
                self.error = Some(e);
                return;
            }
        };
        if let Some((t, prev)) = self.last {
            self.r += 0.5 * (state.t - t) * (prev + value);
        }
        let q = modified_charge(state, &self.params);
        self.q0.get_or_insert(q);
        self.q_last = q;
        self.last = Some((state.t, value));
    }

    pub fn finish(self) -> Result<ChargeLedger> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let q0 = self.q0.ok_or(Error::EmptyTrajectory)?;
        Ok(ChargeLedger::new(q0, self.q_last, self.r))
    }
}

/// Builds the ledger over the whole trajectory; the time integral uses the
/// trapezoid rule on the stored states, so the trajectory should keep every
/// step.
pub fn accumulate_r(traj: &Trajectory, p: &IMethodParams) -> Result<ChargeLedger> {
    let mut acc = LedgerAccumulator::new(*p);
    for state in &traj.states {
        acc.push(state);
    }
    acc.finish()
}

/// Least-squares fit `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "line fit needs at least two paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "abscissae must not all coincide".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayFit {
    /// Slope of `log|R|` against `log N`.
    Slope(f64),
    /// Some cutoff produced a numerically zero correction.
    ExactZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub fit: DecayFit,
    pub predicted_exponent: Option<f64>,
    /// Whether `|R|` is nonincreasing along increasing `N`.
    pub monotone: bool,
}

/// Fits the decay of `|R|` across cutoffs (at least three, same data).
pub fn decay_report(runs: &[(IMethodParams, ChargeLedger)]) -> Result<DecayReport> {
    if runs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least three cutoffs, got {}",
            runs.len()
        )));
    }
    let mut sorted = runs.to_vec();
    sorted.sort_by(|a, b| a.0.cutoff.total_cmp(&b.0.cutoff));
    let monotone = sorted.windows(2).all(|w| w[1].1.r.abs() <= w[0].1.r.abs());
    let predicted_exponent = sorted[0].0.predicted_exponent();
    if sorted.iter().any(|(_, l)| l.is_zero_correction()) {
        return Ok(DecayReport {
            fit: DecayFit::ExactZero,
            predicted_exponent,
            monotone,
        });
    }
    let xs: Vec<f64> = sorted.iter().map(|(p, _)| p.cutoff.ln()).collect();
    let ys: Vec<f64> = sorted.iter().map(|(_, l)| l.r.abs().ln()).collect();
    let (slope, _) = fit_line(&xs, &ys)?;
    Ok(DecayReport {
        fit: DecayFit::Slope(slope),
        predicted_exponent,
        monotone,
    })
}
