//! Experiment configuration: a JSON document with one top-level key naming the
//! subcommand.
//!
//! Parsing walks the document by hand so that every problem is reported, each
//! with the path of the offending field.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentConfig {
    Simulate(SimulateConfig),
    Ledger(LedgerConfig),
    Probe(ProbeConfig),
    Region(RegionConfig),
    Schedule(ScheduleConfig),
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Ledger(_) => "ledger",
            Self::Probe(_) => "probe",
            Self::Region(_) => "region",
            Self::Schedule(_) => "schedule",
        }
    }
}

/// Initial data. Omitted optional fields take the defaults listed on
/// [`parse_config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    Rough {
        s: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        seed: u64,
        amplitude: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        phi_amplitude: Option<f64>,
    },
    Zero,
}

/// Grid, masses, time stepping and data shared by `simulate` and `ledger`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSetup {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "M")]
    pub dirac_mass: f64,
    #[serde(rename = "m")]
    pub scalar_mass: f64,
    pub h: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub data: DataSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub setup: RunSetup,
    pub stride: usize,
    /// Cutoff of the modified charge column.
    #[serde(rename = "N")]
    pub cutoff: f64,
    /// Regularity of the spinor norm columns.
    pub s: f64,
    /// Regularity of the scalar norm column.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerConfig {
    #[serde(flatten)]
    pub setup: RunSetup,
    #[serde(rename = "N")]
    pub cutoffs: Vec<f64>,
    pub s: f64,
    pub r: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Null,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub scales: Vec<f64>,
    pub exponents: [f64; 3],
    pub b: f64,
    pub seed: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionConfig {
    pub s_range: [f64; 2],
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleConfig {
    pub s: f64,
    pub r: f64,
    pub eps: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Largest `j` tried in the search over `N = 2^j`.
    pub max_exponent: u32,
}

const SETUP_KEYS: [&str; 7] = ["n", "L", "M", "m", "h", "T", "data"];

/// Collects problems while walking a document.
struct Walker {
    errors: Vec<String>,
}

impl Walker {
    fn fail(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn check(&mut self, ok: bool, path: &str, msg: impl std::fmt::Display) {
        if !ok {
            self.fail(path, msg);
        }
    }

    /// The object at `path`, with unknown keys reported.
    fn object<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.fail(path, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.fail(&join(path, key), "unknown key");
            }
        }
        Some(map)
    }

    fn field<'a>(
        &mut self,
        map: &'a Map<String, Value>,
        path: &str,
        key: &str,
        required: bool,
    ) -> Option<&'a Value> {
        match map.get(key) {
            Some(Value::Null) | None => {
                if required {
                    self.fail(&join(path, key), "missing");
                }
                None
            }
            Some(v) => Some(v),
        }
    }

    fn num(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: Option<f64>,
    ) -> f64 {
        match self.field(map, path, key, default.is_none()) {
            None => default.unwrap_or(f64::NAN),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => x,
                _ => {
                    self.fail(
                        &join(path, key),
                        format!("expected a finite number, got {v}"),
                    );
                    f64::NAN
                }
            },
        }
    }

    fn opt_num(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        self.field(map, path, key, false)?;
        Some(self.num(map, path, key, None))
    }

    fn uint(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: Option<u64>,
    ) -> u64 {
        match self.field(map, path, key, default.is_none()) {
            None => default.unwrap_or(0),
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.fail(
                    &join(path, key),
                    format!("expected a nonnegative integer, got {v}"),
                );
                0
            }),
        }
    }

    fn num_list(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: Option<&[f64]>,
    ) -> Vec<f64> {
        let p = join(path, key);
        match self.field(map, path, key, default.is_none()) {
            None => default.map(<[f64]>::to_vec).unwrap_or_default(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| match v.as_f64() {
                    Some(x) if x.is_finite() => x,
                    _ => {
                        self.fail(
                            &format!("{p}[{i}]"),
                            format!("expected a finite number, got {v}"),
                        );
                        f64::NAN
                    }
                })
                .collect(),
            Some(v) => {
                self.fail(&p, format!("expected an array, got {v}"));
                Vec::new()
            }
        }
    }

    fn triple(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: [f64; 3],
    ) -> [f64; 3] {
        let list = self.num_list(map, path, key, Some(&default));
        match <[f64; 3]>::try_from(list.as_slice()) {
            Ok(t) => t,
            Err(_) => {
                self.fail(
                    &join(path, key),
                    format!("expected 3 entries, got {}", list.len()),
                );
                default
            }
        }
    }

    fn string<'a>(
        &mut self,
        map: &'a Map<String, Value>,
        path: &str,
        key: &str,
    ) -> Option<&'a str> {
        let v = self.field(map, path, key, true)?;
        let s = v.as_str();
        if s.is_none() {
            self.fail(&join(path, key), format!("expected a string, got {v}"));
        }
        s
    }

    fn finish<T>(self, value: T) -> Result<T, CliError> {
        if self.errors.is_empty() {
            Ok(value)
        } else {
            Err(CliError::Config(self.errors))
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses and validates a configuration document.
///
/// Defaults for omitted fields:
///
/// - `data`: gaussian `amplitude = 1`, `width = 2`; rough `seed = 0`,
///   `amplitude = 1`
/// - `simulate`: `stride = 1`, `N = 16`, `s` from rough data or `-0.1`,
///   `r` from rough data or `0.28`
/// - `ledger`: `r = 0.28`, `eps = 0.01`
/// - `probe`: `scales = [8, 16, 32, 64]`, `exponents = [1, -0.35, -0.35]`,
///   `b = 0.51`, `seed = 0`, `samples = 1000000`
/// - `region`: `s_range = [-0.25, 0]`, `resolution = 100`
/// - `schedule`: `max_exponent = 60`
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Json(e.to_string()))?;
    let mut w = Walker { errors: Vec::new() };
    let commands = ["simulate", "ledger", "probe", "region", "schedule"];
    let Some(top) = w.object(&doc, "", &commands) else {
        return Err(CliError::Config(w.errors));
    };
    if top.len() != 1 {
        w.fail(
            "config",
            format!(
                "expected exactly one of {commands:?}, got {} keys",
                top.len()
            ),
        );
        return Err(CliError::Config(w.errors));
    }
    let (name, body) = top.iter().next().expect("one key");
    let config = match name.as_str() {
        "simulate" => parse_simulate(&mut w, body).map(ExperimentConfig::Simulate),
        "ledger" => parse_ledger(&mut w, body).map(ExperimentConfig::Ledger),
        "probe" => parse_probe(&mut w, body).map(ExperimentConfig::Probe),
        "region" => parse_region(&mut w, body).map(ExperimentConfig::Region),
        "schedule" => parse_schedule(&mut w, body).map(ExperimentConfig::Schedule),
        _ => None,
    };
    match config {
        Some(c) => w.finish(c),
        None => Err(CliError::Config(w.errors)),
    }
}

fn parse_data(w: &mut Walker, v: &Value, path: &str) -> Option<DataSpec> {
    let map = v.as_object();
    let kind = match map {
        Some(m) => w.string(m, path, "kind")?,
        None => {
            w.fail(path, "expected an object");
            return None;
        }
    };
    match kind {
        "gaussian" => {
            let m = w.object(v, path, &["kind", "amplitude", "width"])?;
            let amplitude = w.num(m, path, "amplitude", Some(1.0));
            let width = w.num(m, path, "width", Some(2.0));
            w.check(
                width > 0.0,
                &join(path, "width"),
                format!("must be positive, got {width}"),
            );
            Some(DataSpec::Gaussian { amplitude, width })
        }
        "rough" => {
            let m = w.object(
                v,
                path,
                &["kind", "s", "r", "seed", "amplitude", "phi_amplitude"],
            )?;
            let s = w.num(m, path, "s", None);
            w.check(
                !(s >= 0.0),
                &join(path, "s"),
                format!("the I-method requires s < 0, got {s}"),
            );
            let r = w.opt_num(m, path, "r");
            let seed = w.uint(m, path, "seed", Some(0));
            let amplitude = w.num(m, path, "amplitude", Some(1.0));
            w.check(
                !(amplitude < 0.0),
                &join(path, "amplitude"),
                format!("must be nonnegative, got {amplitude}"),
            );
            let phi_amplitude = w.opt_num(m, path, "phi_amplitude");
            if let Some(a) = phi_amplitude {
                w.check(
                    a >= 0.0,
                    &join(path, "phi_amplitude"),
                    format!("must be nonnegative, got {a}"),
                );
            }
            Some(DataSpec::Rough {
                s,
                r,
                seed,
                amplitude,
                phi_amplitude,
            })
        }
        "zero" => {
            w.object(v, path, &["kind"])?;
            Some(DataSpec::Zero)
        }
        other => {
            w.fail(
                &join(path, "kind"),
                format!("expected gaussian, rough or zero, got {other:?}"),
            );
            None
        }
    }
}

fn parse_setup(w: &mut Walker, m: &Map<String, Value>, path: &str) -> Option<RunSetup> {
    let n = w.uint(m, path, "n", None) as usize;
    w.check(
        n >= 8 && n.is_power_of_two(),
        &join(path, "n"),
        format!("must be a power of two >= 8, got {n}"),
    );
    let length = w.num(m, path, "L", None);
    w.check(
        length > 0.0,
        &join(path, "L"),
        format!("must be positive, got {length}"),
    );
    let dirac_mass = w.num(m, path, "M", None);
    w.check(
        dirac_mass > 0.0,
        &join(path, "M"),
        format!("must be positive, got {dirac_mass}"),
    );
    let scalar_mass = w.num(m, path, "m", None);
    w.check(
        scalar_mass > 0.0,
        &join(path, "m"),
        format!("must be positive, got {scalar_mass}"),
    );
    let h = w.num(m, path, "h", None);
    w.check(
        h > 0.0 && h <= 0.1,
        &join(path, "h"),
        format!("must lie in (0, 0.1], got {h}"),
    );
    let duration = w.num(m, path, "T", None);
    w.check(
        duration > 0.0,
        &join(path, "T"),
        format!("must be positive, got {duration}"),
    );
    if h > 0.0 && duration > 0.0 {
        let ratio = duration / h;
        w.check(
            (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0),
            &join(path, "T"),
            format!("must be an integer multiple of h = {h}, got {duration}"),
        );
    }
    let data = match w.field(m, path, "data", true) {
        Some(v) => parse_data(w, v, &join(path, "data")),
        None => None,
    };
    Some(RunSetup {
        n,
        length,
        dirac_mass,
        scalar_mass,
        h,
        duration,
        data: data?,
    })
}

fn rough_regularity(data: &DataSpec) -> (Option<f64>, Option<f64>) {
    match *data {
        DataSpec::Rough { s, r, .. } => (Some(s), r),
        _ => (None, None),
    }
}

fn parse_simulate(w: &mut Walker, v: &Value) -> Option<SimulateConfig> {
    let path = "simulate";
    let mut keys = SETUP_KEYS.to_vec();
    keys.extend(["stride", "N", "s", "r"]);
    let m = w.object(v, path, &keys)?;
    let setup = parse_setup(w, m, path);
    let stride = w.uint(m, path, "stride", Some(1)) as usize;
    w.check(stride >= 1, &join(path, "stride"), "must be at least 1");
    let cutoff = w.num(m, path, "N", Some(16.0));
    w.check(
        cutoff >= 1.0,
        &join(path, "N"),
        format!("must be at least 1, got {cutoff}"),
    );
    let (data_s, data_r) = setup
        .as_ref()
        .map(|s| rough_regularity(&s.data))
        .unwrap_or_default();
    let s = w.num(
        m,
        path,
        "s",
        Some(data_s.filter(|v| *v < 0.0).unwrap_or(-0.1)),
    );
    w.check(
        !(s >= 0.0),
        &join(path, "s"),
        format!("the I-method requires s < 0, got {s}"),
    );
    let r = w.num(m, path, "r", Some(data_r.unwrap_or(0.28)));
    Some(SimulateConfig {
        setup: setup?,
        stride,
        cutoff,
        s,
        r,
    })
}

fn parse_ledger(w: &mut Walker, v: &Value) -> Option<LedgerConfig> {
    let path = "ledger";
    let mut keys = SETUP_KEYS.to_vec();
    keys.extend(["N", "s", "r", "eps"]);
    let m = w.object(v, path, &keys)?;
    let setup = parse_setup(w, m, path);
    let cutoffs = w.num_list(m, path, "N", None);
    w.check(
        cutoffs.len() >= 3,
        &join(path, "N"),
        format!("needs at least 3 cutoffs, got {}", cutoffs.len()),
    );
    for (i, &c) in cutoffs.iter().enumerate() {
        w.check(
            !(c < 1.0),
            &format!("{path}.N[{i}]"),
            format!("must be at least 1, got {c}"),
        );
    }
    let s = w.num(m, path, "s", None);
    w.check(
        !(s >= 0.0),
        &join(path, "s"),
        format!("the I-method requires s < 0, got {s}"),
    );
    let r = w.num(m, path, "r", Some(0.28));
    let eps = w.num(m, path, "eps", Some(0.01));
    w.check(
        eps > 0.0,
        &join(path, "eps"),
        format!("must be positive, got {eps}"),
    );
    Some(LedgerConfig {
        setup: setup?,
        cutoffs,
        s,
        r,
        eps,
    })
}

fn parse_probe(w: &mut Walker, v: &Value) -> Option<ProbeConfig> {
    let path = "probe";
    let m = w.object(
        v,
        path,
        &["kind", "scales", "exponents", "b", "seed", "samples"],
    )?;
    let kind = match w.string(m, path, "kind") {
        Some("null") => Some(ProbeKind::Null),
        Some("comparison") => Some(ProbeKind::Comparison),
        Some(other) => {
            w.fail(
                &join(path, "kind"),
                format!("expected null or comparison, got {other:?}"),
            );
            None
        }
        None => None,
    };
    let scales = w.num_list(m, path, "scales", Some(&[8.0, 16.0, 32.0, 64.0]));
    if kind == Some(ProbeKind::Null) {
        w.check(
            scales.len() >= 2,
            &join(path, "scales"),
            format!("needs at least 2 scales, got {}", scales.len()),
        );
        for (i, &sc) in scales.iter().enumerate() {
            w.check(
                sc >= 1.0 && sc.fract() == 0.0 && sc <= 4096.0,
                &format!("{path}.scales[{i}]"),
                format!("must be an integer in [1, 4096], got {sc}"),
            );
        }
    }
    let exponents = w.triple(m, path, "exponents", [1.0, -0.35, -0.35]);
    let b = w.num(m, path, "b", Some(0.51));
    w.check(
        b > 0.0 && b < 1.0,
        &join(path, "b"),
        format!("must lie in (0, 1), got {b}"),
    );
    let seed = w.uint(m, path, "seed", Some(0));
    let samples = w.uint(m, path, "samples", Some(1_000_000));
    w.check(samples >= 1, &join(path, "samples"), "must be at least 1");
    Some(ProbeConfig {
        kind: kind?,
        scales,
        exponents,
        b,
        seed,
        samples,
    })
}

fn parse_region(w: &mut Walker, v: &Value) -> Option<RegionConfig> {
    let path = "region";
    let m = w.object(v, path, &["s_range", "resolution"])?;
    let range = w.num_list(m, path, "s_range", Some(&[-0.25, 0.0]));
    let s_range = match <[f64; 2]>::try_from(range.as_slice()) {
        Ok([lo, hi]) => {
            w.check(
                -0.25 <= lo && lo < hi && hi <= 0.0,
                &join(path, "s_range"),
                format!("must satisfy -0.25 <= lo < hi <= 0, got [{lo}, {hi}]"),
            );
            [lo, hi]
        }
        Err(_) => {
            w.fail(
                &join(path, "s_range"),
                format!("expected 2 entries, got {}", range.len()),
            );
            [f64::NAN; 2]
        }
    };
    let resolution = w.uint(m, path, "resolution", Some(100)) as usize;
    w.check(
        resolution >= 1,
        &join(path, "resolution"),
        "must be at least 1",
    );
    Some(RegionConfig {
        s_range,
        resolution,
    })
}

fn parse_schedule(w: &mut Walker, v: &Value) -> Option<ScheduleConfig> {
    let path = "schedule";
    let m = w.object(
        v,
        path,
        &["s", "r", "eps", "C", "A", "B", "T", "max_exponent"],
    )?;
    let s = w.num(m, path, "s", None);
    let r = w.num(m, path, "r", None);
    let eps = w.num(m, path, "eps", None);
    w.check(
        eps > 0.0 && eps <= 0.1,
        &join(path, "eps"),
        format!("must lie in (0, 0.1], got {eps}"),
    );
    w.check(
        !(r - 2.0 * s - 2.0 * eps <= 0.0),
        &join(path, "r"),
        format!(
            "r - 2s - 2eps must be positive, got {}",
            r - 2.0 * s - 2.0 * eps
        ),
    );
    let mut positive = |key: &str| {
        let x = w.num(m, path, key, None);
        w.check(
            !(x <= 0.0),
            &join(path, key),
            format!("must be positive, got {x}"),
        );
        x
    };
    let (c, a, b, t) = (positive("C"), positive("A"), positive("B"), positive("T"));
    let max_exponent = w.uint(m, path, "max_exponent", Some(60));
    w.check(
        (1..=60).contains(&max_exponent),
        &join(path, "max_exponent"),
        format!("must lie in [1, 60], got {max_exponent}"),
    );
    Some(ScheduleConfig {
        s,
        r,
        eps,
        c,
        a,
        b,
        t,
        max_exponent: max_exponent as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_example_parses_with_defaults() {
        let c = parse_config(
            r#"{"simulate":{"n":256,"L":100.0,"M":1,"m":1,"h":0.001,"T":1,"data":{"kind":"gaussian"},"stride":10}}"#,
        )
        .unwrap();
        let ExperimentConfig::Simulate(sim) = c else {
            panic!()
        };
        assert_eq!(
            sim.setup.data,
            DataSpec::Gaussian {
                amplitude: 1.0,
                width: 2.0
            }
        );
        assert_eq!(sim.stride, 10);
        assert_eq!(sim.cutoff, 16.0);
    }

    #[test]
    fn every_violation_is_reported() {
        let err = parse_config(
            r#"{"simulate":{"n":100,"L":-1,"M":1,"m":1,"h":0.5,"T":1,"data":{"kind":"rough","s":0.1},"bogus":3}}"#,
        )
        .unwrap_err();
        let CliError::Config(list) = err else {
            panic!()
        };
        for needle in [
            "simulate.n",
            "simulate.L",
            "simulate.h",
            "simulate.data.s",
            "simulate.bogus",
        ] {
            assert!(
                list.iter().any(|m| m.starts_with(needle)),
                "{needle} missing from {list:?}"
            );
        }
    }

    #[test]
    fn malformed_json_is_an_error() {
        assert!(matches!(parse_config("{"), Err(CliError::Json(_))));
        assert!(matches!(parse_config("{}"), Err(CliError::Config(_))));
    }
}
