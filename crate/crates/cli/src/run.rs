//! Experiment dispatch and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use dkg_core::bourgain::{comparison_check, null_probe, COMPARISON_CONSTANT};
use dkg_core::dkg::{evolve, DkgState, InitialData, Observer, PhysicsParams};
use dkg_core::imethod::{
    charge, decay_report, modified_charge, ChargeLedger, DecayFit, IMethodParams, LedgerAccumulator,
};
use dkg_core::scheduler::{
    region_curves, search_cutoff, SchedulerParams, SchedulerTrace, SearchOutcome,
};
use dkg_core::spectral::{make_grid, sobolev_norm};

use crate::config::{
    parse_config, DataSpec, ExperimentConfig, LedgerConfig, ProbeConfig, ProbeKind, RegionConfig,
    RunSetup, ScheduleConfig, SimulateConfig,
};
use crate::error::{CliError, NumericalContext};

pub const SIMULATE_HEADER: [&str; 6] = [
    "t",
    "charge",
    "modified_charge",
    "h_s_norm_u",
    "h_s_norm_v",
    "h_r_norm_phi",
];
pub const LEDGER_HEADER: [&str; 9] = [
    "N",
    "s",
    "r",
    "eps",
    "q0",
    "qT",
    "R",
    "residual",
    "predicted_exponent",
];
pub const PROBE_HEADER: [&str; 3] = ["probe", "scale", "ratio"];
pub const REGION_HEADER: [&str; 5] = [
    "s",
    "lower_gwp",
    "lower_bourgain",
    "upper_strip",
    "upper_reduced",
];
pub const SCHEDULE_HEADER: [&str; 4] = ["n", "A_n", "B_n", "bootstrap_ok"];

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides every seed in the configuration.
    pub seed: Option<u64>,
    /// Worker threads for sweeps; `None` uses the rayon default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    seed: Option<u64>,
    versions: Value,
    threads: Option<usize>,
    wall_time_seconds: f64,
    outputs: Vec<String>,
    summary: &'a Value,
}

/// Compact decimal for ordinary magnitudes, exponent form otherwise.
fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

struct Table {
    path: PathBuf,
    rows: Vec<Vec<String>>,
    header: &'static [&'static str],
}

impl Table {
    fn new(out: &Path, name: &str, header: &'static [&'static str]) -> Self {
        Self {
            path: out.join(name),
            rows: Vec::new(),
            header,
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(self) -> Result<PathBuf, CliError> {
        let io = |source: std::io::Error| CliError::Io {
            path: self.path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&self.path).map_err(|e| io(e.into()))?;
        w.write_record(self.header).map_err(|e| io(e.into()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)?;
        Ok(self.path)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn initial_data(spec: &DataSpec) -> InitialData {
    match *spec {
        DataSpec::Gaussian { amplitude, width } => InitialData::Gaussian { amplitude, width },
        DataSpec::Rough {
            s,
            r,
            seed,
            amplitude,
            phi_amplitude,
        } => InitialData::Rough {
            s,
            r,
            seed,
            amplitude,
            phi_amplitude,
        },
        DataSpec::Zero => InitialData::Zero,
    }
}

fn setup_state(setup: &RunSetup) -> Result<(DkgState, PhysicsParams), CliError> {
    let grid = make_grid(setup.n, setup.length).context(|| "building the grid".into())?;
    let params =
        PhysicsParams::new(setup.dirac_mass, setup.scalar_mass).context(|| "masses".into())?;
    Ok((initial_data(&setup.data).build(&grid), params))
}

fn step_count(setup: &RunSetup) -> usize {
    (setup.duration / setup.h).round() as usize
}

/// Replaces every seed in `config` by `seed`.
pub fn with_seed(config: &ExperimentConfig, seed: Option<u64>) -> ExperimentConfig {
    let mut c = config.clone();
    let Some(seed) = seed else { return c };
    let reseed = |data: &mut DataSpec| {
        if let DataSpec::Rough { seed: s, .. } = data {
            *s = seed;
        }
    };
    match &mut c {
        ExperimentConfig::Simulate(sim) => reseed(&mut sim.setup.data),
        ExperimentConfig::Ledger(l) => reseed(&mut l.setup.data),
        ExperimentConfig::Probe(p) => p.seed = seed,
        ExperimentConfig::Region(_) | ExperimentConfig::Schedule(_) => {}
    }
    c
}

fn config_seed(config: &ExperimentConfig) -> Option<u64> {
    let data_seed = |d: &DataSpec| match *d {
        DataSpec::Rough { seed, .. } => Some(seed),
        _ => None,
    };
    match config {
        ExperimentConfig::Simulate(sim) => data_seed(&sim.setup.data),
        ExperimentConfig::Ledger(l) => data_seed(&l.setup.data),
        ExperimentConfig::Probe(p) => Some(p.seed),
        _ => None,
    }
}

/// Runs one experiment and writes its CSV and `manifest.json` under `opts.out`.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    fs::create_dir_all(&opts.out).map_err(|source| CliError::Io {
        path: opts.out.clone(),
        source,
    })?;
    let effective = with_seed(config, opts.seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.threads {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Threads(e.to_string()))?;
    let out = opts.out.as_path();

    let (tables, summary) = pool.install(|| match &effective {
        ExperimentConfig::Simulate(c) => simulate(c, out),
        ExperimentConfig::Ledger(c) => ledger(c, out),
        ExperimentConfig::Probe(c) => probe(c, out),
        ExperimentConfig::Region(c) => region(c, out),
        ExperimentConfig::Schedule(c) => schedule(c, out),
    })?;
    let outputs = tables
        .into_iter()
        .map(Table::write)
        .collect::<Result<Vec<_>, _>>()?;

    let names = outputs
        .iter()
        .map(|p| {
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let manifest = Manifest {
        command: config.command(),
        config,
        seed: config_seed(&effective),
        versions: json!({ "dkg-cli": env!("CARGO_PKG_VERSION"), "dkg-core": dkg_core::VERSION }),
        threads: opts.threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: names,
        summary: &summary,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(RunReport { outputs, summary })
}

/// Parses `config_text`, checks it against `command`, runs it and returns the
/// process exit status. Failures are written to `error.json` when the output
/// directory is usable, and to stderr.
pub fn execute(command: &str, config_text: &str, opts: &RunOptions) -> i32 {
    let result = parse_config(config_text).and_then(|config| {
        if config.command() != command {
            return Err(CliError::CommandMismatch {
                command: command.into(),
                config: config.command().into(),
            });
        }
        run(&config, opts)
    });
    match result {
        Ok(_) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if fs::create_dir_all(&opts.out).is_ok() {
                if let Err(e) = write_json(&opts.out.join(ERROR_FILE), &err.record()) {
                    eprintln!("error: {e}");
                }
            }
            match err {
                CliError::Json(_) | CliError::Config(_) | CliError::CommandMismatch { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn simulate(c: &SimulateConfig, out: &Path) -> Result<(Vec<Table>, Value), CliError> {
    let (s0, params) = setup_state(&c.setup)?;
    let ip = IMethodParams::new(c.cutoff, c.s).context(|| "modified charge".into())?;
    let traj = evolve(&s0, &params, c.setup.duration, c.setup.h, c.stride, &mut [])
        .context(|| "integrating".into())?;

    let mut table = Table::new(out, "simulate.csv", &SIMULATE_HEADER);
    for st in &traj.states {
        table.push(
            [
                st.t,
                charge(st),
                modified_charge(st, &ip),
                sobolev_norm(&st.u, c.s),
                sobolev_norm(&st.v, c.s),
                sobolev_norm(&st.phi, c.r),
            ]
            .map(fmt_num)
            .to_vec(),
        );
    }
    let q0 = charge(&s0);
    let q_end = traj.last().map(charge).unwrap_or(q0);
    let drift = if q0 > 0.0 {
        Some((q_end - q0) / q0)
    } else {
        None
    };
    let summary = json!({
        "steps": step_count(&c.setup),
        "stored_states": traj.states.len(),
        "final_t": traj.last().map(|s| s.t),
        "relative_charge_drift": drift,
    });
    Ok((vec![table], summary))
}

/// Streams the ledger over a stride-1 run without storing the trajectory.
pub fn ledger_run(
    s0: &DkgState,
    params: &PhysicsParams,
    ip: IMethodParams,
    duration: f64,
    h: f64,
) -> dkg_core::Result<ChargeLedger> {
    let steps = (duration / h).round().max(1.0) as usize;
    let mut acc = LedgerAccumulator::new(ip);
    acc.push(s0);
    let mut obs = |st: &DkgState| acc.push(st);
    let mut observers: [Observer<'_>; 1] = [&mut obs];
    evolve(s0, params, duration, h, steps, &mut observers)?;
    acc.finish()
}

fn ledger(c: &LedgerConfig, out: &Path) -> Result<(Vec<Table>, Value), CliError> {
    let (s0, params) = setup_state(&c.setup)?;
    let runs: Vec<(IMethodParams, ChargeLedger)> = c
        .cutoffs
        .par_iter()
        .map(|&n| {
            let ip = IMethodParams::new(n, c.s)
                .context(|| format!("cutoff N = {n}"))?
                .with_decay(c.r, c.eps);
            let l = ledger_run(&s0, &params, ip, c.setup.duration, c.setup.h)
                .context(|| format!("ledger run at N = {n}"))?;
            Ok((ip, l))
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Table::new(out, "ledger.csv", &LEDGER_HEADER);
    let head = |label: String| vec![label, fmt_num(c.s), fmt_num(c.r), fmt_num(c.eps)];
    for (ip, l) in &runs {
        let mut row = head(fmt_num(ip.cutoff));
        row.extend([l.q0, l.q_t, l.r, l.residual].map(fmt_num));
        row.push(ip.predicted_exponent().map(fmt_num).unwrap_or_default());
        table.push(row);
    }
    let report = decay_report(&runs).context(|| "fitting the decay".into())?;
    let (label, slope) = match report.fit {
        DecayFit::Slope(m) => ("slope", m),
        DecayFit::ExactZero => ("exact_zero", 0.0),
    };
    let mut row = head(label.into());
    row.extend([String::new(), String::new(), fmt_num(slope), String::new()]);
    row.push(report.predicted_exponent.map(fmt_num).unwrap_or_default());
    table.push(row);

    let summary = json!({
        "fit": label,
        "slope": slope,
        "monotone": report.monotone,
        "predicted_exponent": report.predicted_exponent,
    });
    Ok((vec![table], summary))
}

fn probe(c: &ProbeConfig, out: &Path) -> Result<(Vec<Table>, Value), CliError> {
    let mut table = Table::new(out, "probe.csv", &PROBE_HEADER);
    let summary = match c.kind {
        ProbeKind::Null => {
            let rep =
                null_probe(c.exponents, c.b, &c.scales).context(|| "null-form probe".into())?;
            for (label, ratios) in [
                ("opposite_sign", &rep.opposite_sign),
                ("same_sign", &rep.same_sign),
            ] {
                for (&scale, &ratio) in rep.scales.iter().zip(ratios) {
                    table.push(vec![label.into(), fmt_num(scale), fmt_num(ratio)]);
                }
            }
            json!({
                "opposite_growth": rep.opposite_growth(),
                "same_growth": rep.same_growth(),
                "violations": rep.violations,
            })
        }
        ProbeKind::Comparison => {
            let rep =
                comparison_check(c.samples, c.seed).context(|| "comparison sampling".into())?;
            table.push(vec![
                "comparison".into(),
                c.samples.to_string(),
                fmt_num(rep.max_ratio),
            ]);
            json!({
                "max_ratio": rep.max_ratio,
                "constant": COMPARISON_CONSTANT,
                "evaluated": rep.evaluated,
                "discarded": rep.discarded,
            })
        }
    };
    Ok((vec![table], summary))
}

/// Interior sample points `lo + (i+1)(hi-lo)/(res+1)`.
pub fn region_samples(c: &RegionConfig) -> Vec<f64> {
    let [lo, hi] = c.s_range;
    let step = (hi - lo) / (c.resolution + 1) as f64;
    (1..=c.resolution).map(|i| lo + i as f64 * step).collect()
}

fn region(c: &RegionConfig, out: &Path) -> Result<(Vec<Table>, Value), CliError> {
    let mut table = Table::new(out, "region.csv", &REGION_HEADER);
    for s in region_samples(c) {
        let rc = region_curves(s);
        table.push(
            [
                rc.s,
                rc.lower_gwp,
                rc.lower_bourgain,
                rc.upper_strip,
                rc.upper_reduced,
            ]
            .map(fmt_num)
            .to_vec(),
        );
    }
    Ok((vec![table], json!({ "rows": c.resolution })))
}

fn trace_summary(trace: &SchedulerTrace) -> Value {
    json!({
        "cutoff": trace.params.cutoff,
        "delta_t": trace.delta_t,
        "K": trace.k,
        "verdict": trace.verdict,
        "rho": trace.rho,
        "sigma": trace.sigma,
        "sufficiency": trace.sufficiency,
    })
}

fn schedule(c: &ScheduleConfig, out: &Path) -> Result<(Vec<Table>, Value), CliError> {
    let p = SchedulerParams {
        s: c.s,
        r: c.r,
        eps: c.eps,
        cutoff: 2.0,
        c: c.c,
        a: c.a,
        b: c.b,
        t: c.t,
    };
    let outcome = search_cutoff(&p, c.max_exponent).context(|| "cutoff search".into())?;
    let (trace, summary) = match &outcome {
        SearchOutcome::Found { cutoff, trace } => (
            Some(trace),
            json!({ "outcome": "found", "cutoff": cutoff, "trace": trace_summary(trace) }),
        ),
        SearchOutcome::Infeasible {
            region_ok,
            exponent_ok,
            largest_cutoff,
            last_trace,
        } => (
            last_trace.as_ref(),
            json!({
                "outcome": "infeasible",
                "region_ok": region_ok,
                "exponent_ok": exponent_ok,
                "largest_cutoff": largest_cutoff,
                "trace": last_trace.as_ref().map(trace_summary),
            }),
        ),
    };
    let mut table = Table::new(out, "schedule.csv", &SCHEDULE_HEADER);
    for step in trace.map(|t| t.steps.as_slice()).unwrap_or_default() {
        table.push(vec![
            step.n.to_string(),
            fmt_num(step.a_n),
            fmt_num(step.b_n),
            step.bootstrap_ok.to_string(),
        ]);
    }
    Ok((vec![table], summary))
}
