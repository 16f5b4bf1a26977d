//! Slab-by-slab induction calculator.
//!
//! Evaluates the admissible `(s, r)` regions, the slab length
//! `ΔT = N^{(s-ε)/(r-2s-2ε)}`, the boot-strap condition and the `A_n`, `B_n`
//! recursion (taken with equality) that controls the modified charge and the
//! scalar-field energy from one slab to the next.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of slabs the calculator will iterate.
pub const MAX_SLABS: u64 = 1_000_000_000;

/// Largest cutoff exponent tried by [`search_cutoff`].
pub const MAX_CUTOFF_EXPONENT: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// `s > -1/4`, `r > 0`, `|s| <= r <= 1+s`
    Lwp,
    /// `-1/8 < s < 0`, `s + √(s²-s) < r <= 1+s`
    Gwp,
    /// `-1/8 < s < 0`, `s + √(s²-s) < r < 1/2+2s`
    Reduced,
}

/// `s + √(s² - s)`
pub fn gwp_lower(s: f64) -> f64 {
    s + (s * s - s).sqrt()
}

/// `-s + √(s² - s)`
pub fn bourgain_lower(s: f64) -> f64 {
    -s + (s * s - s).sqrt()
}

pub fn region_check(kind: RegionKind, s: f64, r: f64) -> bool {
    match kind {
        RegionKind::Lwp => s > -0.25 && r > 0.0 && s.abs() <= r && r <= 1.0 + s,
        RegionKind::Gwp => s > -0.125 && s < 0.0 && gwp_lower(s) < r && r <= 1.0 + s,
        RegionKind::Reduced => s > -0.125 && s < 0.0 && gwp_lower(s) < r && r < 0.5 + 2.0 * s,
    }
}

/// `r² - 2sr + s > 0`, the quadratic form of `r > s + √(s² - s)`.
pub fn boundary_equivalence(s: f64, r: f64) -> bool {
    r * r - 2.0 * s * r + s > 0.0
}

/// Boundary curves of the `(s, r)` diagram at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCurves {
    pub s: f64,
    pub lower_gwp: f64,
    pub lower_bourgain: f64,
    pub upper_strip: f64,
    pub upper_reduced: f64,
}

pub fn region_curves(s: f64) -> RegionCurves {
    RegionCurves {
        s,
        lower_gwp: gwp_lower(s),
        lower_bourgain: bourgain_lower(s),
        upper_strip: 1.0 + s,
        upper_reduced: 0.5 + 2.0 * s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub s: f64,
    pub r: f64,
    pub eps: f64,
    /// Frequency cutoff `N`.
    pub cutoff: f64,
    /// The constant `C` shared by every inequality.
    pub c: f64,
    pub a: f64,
    pub b: f64,
    /// Target time `T`.
    pub t: f64,
}

impl SchedulerParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.eps > 0.0 && self.eps <= 0.1) {
            bad.push(format!("eps must lie in (0, 0.1], got {}", self.eps));
        }
        if !(self.cutoff >= 2.0 && self.cutoff.is_finite()) {
            bad.push(format!("cutoff must satisfy N >= 2, got {}", self.cutoff));
        }
        for (name, v) in [("C", self.c), ("A", self.a), ("B", self.b), ("T", self.t)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    fn denominator(&self) -> Result<f64> {
        denominator(self.s, self.r, self.eps)
    }

    fn with_cutoff(&self, cutoff: f64) -> Self {
        Self { cutoff, ..*self }
    }
}

fn denominator(s: f64, r: f64, eps: f64) -> Result<f64> {
    let d = r - 2.0 * s - 2.0 * eps;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::InvalidArgument(format!(
            "r - 2s - 2eps must be positive, got {d}"
        )))
    }
}

/// `(ΔT, K)` with `ΔT = N^{(s-ε)/(r-2s-2ε)}` and `K = ⌈T/ΔT⌉`; `K = 0` when
/// the first slab already covers `T`.
pub fn slab_length(p: &SchedulerParams) -> Result<(f64, u64)> {
    let delta_t = p.cutoff.powf((p.s - p.eps) / p.denominator()?);
    let ratio = p.t / delta_t;
    if ratio < 1.0 {
        return Ok((delta_t, 0));
    }
    // absorb roundoff in exact multiples
    let k = (ratio - 1e-9 * ratio).ceil();
    if k > MAX_SLABS as f64 {
        return Err(Error::InvalidArgument(format!(
            "{k} slabs exceed the limit of {MAX_SLABS}"
        )));
    }
    Ok((delta_t, k as u64))
}

/// `C(B_n + A_n²)(N^{-2ε} + N^{-r+2ε}) <= 1`
pub fn bootstrap_ok(a_n: f64, b_n: f64, p: &SchedulerParams) -> bool {
    let n = p.cutoff;
    p.c * (b_n + a_n * a_n) * (n.powf(-2.0 * p.eps) + n.powf(-p.r + 2.0 * p.eps)) <= 1.0
}

/// One step of the recursion, taken with equality:
///
/// ```text
/// A' = √(A² + C(B+A²)A² N^{-r+2ε})
/// B' = B + CA²ΔT + C(B+A²)A²ΔT N^{-r+2ε} + CA² N^{-1/2+2ε}
/// ```
pub fn induction_step(a_n: f64, b_n: f64, p: &SchedulerParams, delta_t: f64) -> (f64, f64) {
    let n = p.cutoff;
    let a2 = a_n * a_n;
    let decay = n.powf(-p.r + 2.0 * p.eps);
    let growth = p.c * (b_n + a2) * a2 * decay;
    let a_next = (a2 + growth).sqrt();
    let b_next =
        b_n + p.c * a2 * delta_t + growth * delta_t + p.c * a2 * n.powf(-0.5 + 2.0 * p.eps);
    (a_next, b_next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
    pub bootstrap_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Bootstrap,
    ABound,
    BBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sustained,
    Failed { step: u64, failure: Failure },
}

/// The four closed-form sufficiency conditions for the uniform bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sufficiency {
    pub sr1: bool,
    pub sr2: bool,
    pub sr3: bool,
    pub sr4: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerTrace {
    pub params: SchedulerParams,
    pub delta_t: f64,
    pub k: u64,
    pub steps: Vec<StepRecord>,
    pub verdict: Verdict,
    /// `2A₁`
    pub rho: f64,
    /// `2B₁ + 4CTA₁²`
    pub sigma: f64,
    pub sufficiency: Sufficiency,
}

fn sufficiency(p: &SchedulerParams, rho: f64, sigma: f64) -> Result<Sufficiency> {
    let n = p.cutoff;
    let k_exp = (-p.s + p.eps) / p.denominator()?;
    let (a1, b1, c, t) = (p.a, p.b, p.c, p.t);
    let rho2 = rho * rho;
    let lhs4 = c * t * rho2;
    let rhs4 = 4.0 * c * t * a1 * a1;
    Ok(Sufficiency {
        sr1: c * sigma * rho2 * n.powf(k_exp - p.r + 2.0 * p.eps) <= 3.0 * a1 * a1,
        sr2: c * t * sigma * rho2 * n.powf(-p.r + 2.0 * p.eps) <= b1 / 2.0,
        sr3: c * rho2 * n.powf(k_exp - 0.5 + 2.0 * p.eps) <= b1 / 2.0,
        sr4: lhs4 <= rhs4 * (1.0 + 1e-12),
    })
}

fn run_unchecked(p: &SchedulerParams) -> Result<SchedulerTrace> {
    p.validate()?;
    let (delta_t, k) = slab_length(p)?;
    let rho = 2.0 * p.a;
    let sigma = 2.0 * p.b + 4.0 * p.c * p.t * p.a * p.a;
    let mut steps = Vec::new();
    let mut verdict = Verdict::Sustained;
    let (mut a_n, mut b_n) = (p.a, p.b);
    for n in 1..=k {
        let ok = bootstrap_ok(a_n, b_n, p);
        steps.push(StepRecord {
            n,
            a_n,
            b_n,
            bootstrap_ok: ok,
        });
        let failure = if !ok {
            Some(Failure::Bootstrap)
        } else if a_n > rho {
            Some(Failure::ABound)
        } else if b_n > sigma {
            Some(Failure::BBound)
        } else {
            None
        };
        if let Some(failure) = failure {
            verdict = Verdict::Failed { step: n, failure };
            break;
        }
        (a_n, b_n) = induction_step(a_n, b_n, p, delta_t);
    }
    Ok(SchedulerTrace {
        params: *p,
        delta_t,
        k,
        steps,
        verdict,
        rho,
        sigma,
        sufficiency: sufficiency(p, rho, sigma)?,
    })
}

/// Runs the recursion over all `K` slabs, stopping at the first step that
/// breaks the boot-strap condition or the bounds `A_n <= ρ`, `B_n <= σ`.
/// Requires `(s, r)` in the reduced region.
pub fn run_induction(p: &SchedulerParams) -> Result<SchedulerTrace> {
    if !region_check(RegionKind::Reduced, p.s, p.r) {
        return Err(Error::InvalidArgument(format!(
            "(s, r) = ({}, {}) lies outside the reduced region",
            p.s, p.r
        )));
    }
    run_unchecked(p)
}

/// `((-s+ε)/(r-2s-2ε) - r + 2ε, (-s+ε)/(r-2s-2ε) - 1/2 + 2ε)`
pub fn exponent_terms(s: f64, r: f64, eps: f64) -> Result<(f64, f64)> {
    let k_exp = (-s + eps) / denominator(s, r, eps)?;
    Ok((k_exp - r + 2.0 * eps, k_exp - 0.5 + 2.0 * eps))
}

/// Both growth exponents are negative.
pub fn exponent_check(s: f64, r: f64, eps: f64) -> Result<bool> {
    let (first, second) = exponent_terms(s, r, eps)?;
    Ok(first < 0.0 && second < 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    /// Smallest cutoff `N* = 2^j` whose trace is sustained.
    Found { cutoff: f64, trace: SchedulerTrace },
    Infeasible {
        region_ok: bool,
        exponent_ok: bool,
        largest_cutoff: f64,
        /// Trace at the largest cutoff tried.
        last_trace: Option<SchedulerTrace>,
    },
}

/// Doubling search over `N = 2, 4, …, 2^max_exponent`.
pub fn search_cutoff(p: &SchedulerParams, max_exponent: u32) -> Result<SearchOutcome> {
    let region_ok = region_check(RegionKind::Reduced, p.s, p.r);
    let exponent_ok = exponent_check(p.s, p.r, p.eps)?;
    let max_exponent = max_exponent.min(MAX_CUTOFF_EXPONENT);
    let mut last_trace = None;
    let mut largest_cutoff = 0.0;
    for j in 1..=max_exponent {
        let cutoff = 2f64.powi(j as i32);
        let trace = run_unchecked(&p.with_cutoff(cutoff))?;
        largest_cutoff = cutoff;
        if trace.verdict == Verdict::Sustained && region_ok {
            return Ok(SearchOutcome::Found { cutoff, trace });
        }
        last_trace = Some(trace);
    }
    Ok(SearchOutcome::Infeasible {
        region_ok,
        exponent_ok,
        largest_cutoff,
        last_trace,
    })
}
