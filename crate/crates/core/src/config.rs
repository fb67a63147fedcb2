//! Run configuration: sectioned `key = value` text (TOML syntax).
//!
//! Parsing never stops at the first problem; every unknown key, type
//! mismatch and range violation is reported with its `section.key` path.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::data::{GaussianPulse, InitialDataSpec};
use crate::error::{ConfigIssue, Error, Result};
use crate::micromodulus::MicromodulusKernel;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian {
        width: f64,
        amplitude: f64,
    },
    Exponential {
        width: f64,
        amplitude: f64,
    },
    /// `width` is the half-width `δ`.
    Tophat {
        width: f64,
        amplitude: f64,
    },
    Tabulated {
        table: PathBuf,
        max_moment_order: Option<u32>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<MicromodulusKernel> {
        match self {
            KernelSpec::Gaussian { width, amplitude } => MicromodulusKernel::gaussian(*width, *amplitude),
            KernelSpec::Exponential { width, amplitude } => MicromodulusKernel::exponential(*width, *amplitude),
            KernelSpec::Tophat { width, amplitude } => MicromodulusKernel::top_hat(*width, *amplitude),
            KernelSpec::Tabulated {
                table,
                max_moment_order,
            } => MicromodulusKernel::from_csv(table, *max_moment_order),
        }
    }
}

/// A ray speed, absolute or as a multiple of the wave speed (`"1.5c"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Speed {
    Absolute(f64),
    TimesC(f64),
}

impl Speed {
    pub fn resolve(&self, c: f64) -> f64 {
        match self {
            Speed::Absolute(v) => *v,
            Speed::TimesC(m) => m * c,
        }
    }

    fn to_toml(self) -> String {
        match self {
            Speed::Absolute(v) => format!("{v:?}"),
            Speed::TimesC(m) => format!("\"{m:?}c\""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionSection {
    pub xi_min: f64,
    pub xi_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSection {
    pub times: Vec<f64>,
    pub n: usize,
    pub dx: f64,
    /// Left edge; `None` centres the grid on 0.
    pub x0: Option<f64>,
    /// `(t₁, t₂)` for the composition check `evolve(t₁)∘evolve(t₂) = evolve(t₁ + t₂)`.
    pub split: [f64; 2],
}

impl EvolveSection {
    pub fn x0(&self) -> f64 {
        self.x0.unwrap_or(-0.5 * self.n as f64 * self.dx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaySection {
    pub velocities: Vec<Speed>,
    pub x0: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
    /// Decay order `l`; supersonic rays pass when the slope is `≤ −2l`.
    pub order: f64,
    pub window_min: f64,
    pub window_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelsSection {
    pub j: i32,
    pub a: f64,
    pub t: f64,
    /// Range of `|z| − c|t|`.
    pub distance_min: f64,
    pub distance_max: f64,
    pub points: usize,
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSection {
    pub t: f64,
    pub offset: f64,
    pub data: InitialDataSpec,
    pub velocities: Vec<Speed>,
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub data: InitialDataSpec,
    pub tolerance_scale: f64,
    pub dispersion: DispersionSection,
    pub evolve: EvolveSection,
    pub ray_scan: RaySection,
    pub kernels: KernelsSection,
    pub compare: CompareSection,
}

fn pulse(a: f64, c: f64, w: f64) -> GaussianPulse {
    GaussianPulse {
        amplitude: a,
        center: c,
        width: w,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Gaussian {
                width: 1.0,
                amplitude: 1.0,
            },
            data: InitialDataSpec::displacement(pulse(1.0, 0.0, 1.0)),
            tolerance_scale: 1.0,
            dispersion: DispersionSection {
                xi_min: -5.0,
                xi_max: 5.0,
                points: 201,
            },
            evolve: EvolveSection {
                times: vec![0.0, 10.0, 50.0, 100.0],
                n: 4096,
                dx: 0.125,
                x0: None,
                split: [5.0, 5.0],
            },
            ray_scan: RaySection {
                velocities: vec![Speed::TimesC(1.5), Speed::TimesC(0.5)],
                x0: 0.0,
                t_min: 10.0,
                t_max: 100.0,
                ratio: 1.02,
                order: 3.0,
                window_min: 10.0,
                window_max: 100.0,
            },
            kernels: KernelsSection {
                j: 0,
                a: 1.0,
                t: 5.0,
                distance_min: 2.0,
                distance_max: 20.0,
                points: 10,
                order: 4.0,
            },
            compare: CompareSection {
                t: 2.0,
                offset: 3.0,
                data: InitialDataSpec::displacement(pulse(1.0, 0.0, 0.1)),
                velocities: vec![Speed::TimesC(1.5), Speed::TimesC(0.5)],
                t_min: 1.0,
                t_max: 20.0,
                ratio: 1.1,
            },
        }
    }
}

/// Walks one section, recording every problem instead of stopping.
struct Reader<'a> {
    section: &'static str,
    table: Option<&'a Table>,
    issues: &'a mut Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.section)
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let key = self.path(key);
        self.issues.push(ConfigIssue {
            key,
            message: message.into(),
        });
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn reject_unknown(&mut self, known: &[&str]) {
        let Some(t) = self.table else { return };
        let unknown: Vec<String> = t.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect();
        for k in unknown {
            self.issue(&k, format!("unknown key (expected one of: {})", known.join(", ")));
        }
    }

    fn number(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, expect: &str) -> f64 {
        match self.get(key) {
            None => default,
            Some(v) => match as_number(v) {
                Some(x) if x.is_finite() && ok(x) => x,
                Some(x) => {
                    self.issue(key, format!("value {x} out of range (expected {expect})"));
                    default
                }
                None => {
                    self.issue(key, format!("expected a number ({expect}), found {}", v.type_str()));
                    default
                }
            },
        }
    }

    fn optional_number(&mut self, key: &str) -> Option<f64> {
        self.get(key)?;
        Some(self.number(key, 0.0, |_| true, "a finite number"))
    }

    fn integer(&mut self, key: &str, default: i64, ok: impl Fn(i64) -> bool, expect: &str) -> i64 {
        match self.get(key) {
            None => default,
            Some(Value::Integer(i)) if ok(*i) => *i,
            Some(Value::Integer(i)) => {
                self.issue(key, format!("value {i} out of range (expected {expect})"));
                default
            }
            Some(v) => {
                self.issue(key, format!("expected an integer ({expect}), found {}", v.type_str()));
                default
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            v => {
                self.issue(key, format!("expected a string, found {}", v.type_str()));
                None
            }
        }
    }

    fn numbers(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        match self.get(key) {
            None => default,
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items.iter().map(as_number).collect();
                match parsed {
                    Some(xs) if xs.iter().all(|x| x.is_finite()) => xs,
                    _ => {
                        self.issue(key, "expected an array of finite numbers");
                        default
                    }
                }
            }
            Some(v) => {
                self.issue(key, format!("expected an array of numbers, found {}", v.type_str()));
                default
            }
        }
    }

    fn speeds(&mut self, key: &str, default: Vec<Speed>) -> Vec<Speed> {
        let Some(v) = self.get(key) else { return default };
        let Value::Array(items) = v else {
            self.issue(key, format!("expected an array of speeds, found {}", v.type_str()));
            return default;
        };
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            match parse_speed(item) {
                Some(s) => out.push(s),
                None => self.issue(
                    &format!("{key}[{i}]"),
                    "expected a number or a multiple of c such as \"1.5c\"",
                ),
            }
        }
        out
    }

    fn pulses(&mut self, key: &str, default: Vec<GaussianPulse>) -> Vec<GaussianPulse> {
        let Some(v) = self.get(key) else { return default };
        let Value::Array(items) = v else {
            self.issue(key, "expected an array of [amplitude, center, width] triples");
            return default;
        };
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let triple = match item {
                Value::Array(xs) if xs.len() == 3 => xs.iter().map(as_number).collect::<Option<Vec<f64>>>(),
                _ => None,
            };
            match triple {
                Some(t) if t.iter().all(|x| x.is_finite()) && t[2] > 0.0 => out.push(pulse(t[0], t[1], t[2])),
                Some(_) => self.issue(&format!("{key}[{i}]"), "pulse width must be > 0 and entries finite"),
                None => self.issue(&format!("{key}[{i}]"), "expected [amplitude, center, width]"),
            }
        }
        out
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_speed(v: &Value) -> Option<Speed> {
    match v {
        Value::String(s) => {
            let m: f64 = s.trim().strip_suffix('c')?.trim().parse().ok()?;
            m.is_finite().then_some(Speed::TimesC(m))
        }
        other => as_number(other).filter(|x| x.is_finite()).map(Speed::Absolute),
    }
}

const SECTIONS: [&str; 8] = [
    "kernel",
    "data",
    "tolerance",
    "dispersion",
    "evolve",
    "ray_scan",
    "kernels",
    "compare",
];

/// Parses configuration text; relative table paths resolve against the
/// working directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

/// Reads and parses a configuration file; relative table paths resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_in(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![ConfigIssue {
            key: "<syntax>".into(),
            message: e.to_string().trim().to_string(),
        }])
    })?;
    let mut issues = Vec::new();
    let d = RunConfig::default();

    let mut sections = std::collections::BTreeMap::new();
    for (name, value) in &root {
        match (SECTIONS.contains(&name.as_str()), value) {
            (true, Value::Table(t)) => {
                sections.insert(name.as_str(), t);
            }
            (true, v) => issues.push(ConfigIssue {
                key: name.clone(),
                message: format!("expected a section, found {}", v.type_str()),
            }),
            (false, _) => issues.push(ConfigIssue {
                key: name.clone(),
                message: format!("unknown section or key (expected one of: {})", SECTIONS.join(", ")),
            }),
        }
    }
    let positive = |x: f64| x > 0.0;

    // [kernel]
    let table = sections.get("kernel").copied();
    let mut r = Reader {
        section: "kernel",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["family", "width", "amplitude", "table", "max_moment_order"]);
    let family = r.string("family").unwrap_or_else(|| "gaussian".into());
    let width = r.number("width", 1.0, positive, "> 0");
    let amplitude = r.number("amplitude", 1.0, positive, "> 0");
    let order = r
        .get("max_moment_order")
        .map(|_| r.integer("max_moment_order", 2, |i| (0..=64).contains(&i), "0..=64") as u32);
    let table_path = r.string("table");
    let kernel = match family.as_str() {
        "gaussian" => KernelSpec::Gaussian { width, amplitude },
        "exponential" => KernelSpec::Exponential { width, amplitude },
        "tophat" => KernelSpec::Tophat { width, amplitude },
        "tabulated" => match table_path {
            Some(p) => {
                let path = base.join(&p);
                if !path.is_file() {
                    r.issue("table", format!("file {} does not exist", path.display()));
                }
                KernelSpec::Tabulated {
                    table: path,
                    max_moment_order: order,
                }
            }
            None => {
                r.issue("table", "required when family = \"tabulated\"");
                d.kernel.clone()
            }
        },
        other => {
            r.issue(
                "family",
                format!("unknown family {other:?} (expected gaussian, exponential, tophat or tabulated)"),
            );
            d.kernel.clone()
        }
    };

    // [data]
    let table = sections.get("data").copied();
    let mut r = Reader {
        section: "data",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["u", "ut"]);
    let data = InitialDataSpec::new(
        r.pulses("u", d.data.u_terms.clone()),
        r.pulses("ut", d.data.ut_terms.clone()),
    );

    // [tolerance]
    let table = sections.get("tolerance").copied();
    let mut r = Reader {
        section: "tolerance",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["scale"]);
    let tolerance_scale = r.number("scale", 1.0, positive, "> 0");

    // [dispersion]
    let table = sections.get("dispersion").copied();
    let mut r = Reader {
        section: "dispersion",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["xi_min", "xi_max", "points"]);
    let dd = &d.dispersion;
    let xi_min = r.number("xi_min", dd.xi_min, |_| true, "a finite number");
    let xi_max = r.number("xi_max", dd.xi_max, |x| x > xi_min, "> xi_min");
    let points = r.integer(
        "points",
        dd.points as i64,
        |i| (2..=10_000_000).contains(&i),
        "2..=10000000",
    ) as usize;
    let dispersion = DispersionSection { xi_min, xi_max, points };

    // [evolve]
    let table = sections.get("evolve").copied();
    let mut r = Reader {
        section: "evolve",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["times", "n", "dx", "x0", "split"]);
    let de = &d.evolve;
    let times = r.numbers("times", de.times.clone());
    if times.is_empty() {
        r.issue("times", "at least one time is required");
    }
    let n = r.integer(
        "n",
        de.n as i64,
        |i| i >= 2 && (i as u64).is_power_of_two() && i <= 1 << 26,
        "a power of two >= 2",
    ) as usize;
    let dx = r.number("dx", de.dx, positive, "> 0");
    let x0 = r.optional_number("x0");
    let split = match r.numbers("split", de.split.to_vec())[..] {
        [a, b] if a >= 0.0 && b >= 0.0 => [a, b],
        _ => {
            r.issue("split", "expected two non-negative times [t1, t2]");
            de.split
        }
    };
    let evolve = EvolveSection {
        times,
        n,
        dx,
        x0,
        split,
    };

    // [ray_scan]
    let table = sections.get("ray_scan").copied();
    let mut r = Reader {
        section: "ray_scan",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&[
        "velocities",
        "x0",
        "t_min",
        "t_max",
        "ratio",
        "order",
        "window_min",
        "window_max",
    ]);
    let dr = &d.ray_scan;
    let velocities = r.speeds("velocities", dr.velocities.clone());
    let x0r = r.number("x0", dr.x0, |_| true, "a finite number");
    let t_min = r.number("t_min", dr.t_min, positive, "> 0");
    let t_max = r.number("t_max", dr.t_max, |x| x >= t_min, ">= t_min");
    let ratio = r.number("ratio", dr.ratio, |x| x > 1.0, "> 1");
    let order = r.number("order", dr.order, positive, "> 0");
    let window_min = r.number("window_min", t_min, |_| true, "a finite number");
    let window_max = r.number("window_max", t_max, |x| x > window_min, "> window_min");
    let ray_scan = RaySection {
        velocities,
        x0: x0r,
        t_min,
        t_max,
        ratio,
        order,
        window_min,
        window_max,
    };

    // [kernels]
    let table = sections.get("kernels").copied();
    let mut r = Reader {
        section: "kernels",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["j", "a", "t", "distance_min", "distance_max", "points", "order"]);
    let dk = &d.kernels;
    let j = r.integer("j", dk.j as i64, |i| (-1..=2).contains(&i), "-1..=2") as i32;
    let a = r.number("a", dk.a, positive, "> 0");
    let t = r.number("t", dk.t, |_| true, "a finite number");
    let distance_min = r.number("distance_min", dk.distance_min, |x| x >= 1.0, ">= 1");
    let distance_max = r.number("distance_max", dk.distance_max, |x| x > distance_min, "> distance_min");
    let kpoints = r.integer("points", dk.points as i64, |i| (2..=100_000).contains(&i), "2..=100000") as usize;
    let korder = r.number("order", dk.order, positive, "> 0");
    let kernels = KernelsSection {
        j,
        a,
        t,
        distance_min,
        distance_max,
        points: kpoints,
        order: korder,
    };

    // [compare]
    let table = sections.get("compare").copied();
    let mut r = Reader {
        section: "compare",
        table,
        issues: &mut issues,
    };
    r.reject_unknown(&["t", "offset", "u", "ut", "velocities", "t_min", "t_max", "ratio"]);
    let dc = &d.compare;
    let ct = r.number("t", dc.t, |x| x >= 0.0, ">= 0");
    let offset = r.number("offset", dc.offset, positive, "> 0");
    let cdata = InitialDataSpec::new(
        r.pulses("u", dc.data.u_terms.clone()),
        r.pulses("ut", dc.data.ut_terms.clone()),
    );
    let cvel = r.speeds("velocities", dc.velocities.clone());
    let ct_min = r.number("t_min", dc.t_min, positive, "> 0");
    let ct_max = r.number("t_max", dc.t_max, |x| x >= ct_min, ">= t_min");
    let cratio = r.number("ratio", dc.ratio, |x| x > 1.0, "> 1");
    let compare = CompareSection {
        t: ct,
        offset,
        data: cdata,
        velocities: cvel,
        t_min: ct_min,
        t_max: ct_max,
        ratio: cratio,
    };

    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    Ok(RunConfig {
        kernel,
        data,
        tolerance_scale,
        dispersion,
        evolve,
        ray_scan,
        kernels,
        compare,
    })
}

fn pulses_toml(ps: &[GaussianPulse]) -> String {
    let items: Vec<String> = ps
        .iter()
        .map(|p| format!("[{:?}, {:?}, {:?}]", p.amplitude, p.center, p.width))
        .collect();
    format!("[{}]", items.join(", "))
}

fn floats_toml(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn speeds_toml(vs: &[Speed]) -> String {
    let items: Vec<String> = vs.iter().map(|v| v.to_toml()).collect();
    format!("[{}]", items.join(", "))
}

impl RunConfig {
    /// Canonical text form; [`parse_config`] reads it back unchanged.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[kernel]\n");
        match &self.kernel {
            KernelSpec::Gaussian { width, amplitude }
            | KernelSpec::Exponential { width, amplitude }
            | KernelSpec::Tophat { width, amplitude } => {
                let family = match self.kernel {
                    KernelSpec::Gaussian { .. } => "gaussian",
                    KernelSpec::Exponential { .. } => "exponential",
                    _ => "tophat",
                };
                let _ = writeln!(s, "family = \"{family}\"\nwidth = {width:?}\namplitude = {amplitude:?}");
            }
            KernelSpec::Tabulated {
                table,
                max_moment_order,
            } => {
                let _ = writeln!(s, "family = \"tabulated\"\ntable = {:?}", table.display().to_string());
                if let Some(m) = max_moment_order {
                    let _ = writeln!(s, "max_moment_order = {m}");
                }
            }
        }
        let _ = writeln!(
            s,
            "\n[data]\nu = {}\nut = {}",
            pulses_toml(&self.data.u_terms),
            pulses_toml(&self.data.ut_terms)
        );
        let _ = writeln!(s, "\n[tolerance]\nscale = {:?}", self.tolerance_scale);
        let dd = &self.dispersion;
        let _ = writeln!(
            s,
            "\n[dispersion]\nxi_min = {:?}\nxi_max = {:?}\npoints = {}",
            dd.xi_min, dd.xi_max, dd.points
        );
        let e = &self.evolve;
        let _ = writeln!(
            s,
            "\n[evolve]\ntimes = {}\nn = {}\ndx = {:?}",
            floats_toml(&e.times),
            e.n,
            e.dx
        );
        if let Some(x0) = e.x0 {
            let _ = writeln!(s, "x0 = {x0:?}");
        }
        let _ = writeln!(s, "split = {}", floats_toml(&e.split));
        let r = &self.ray_scan;
        let _ = writeln!(
            s,
            "\n[ray_scan]\nvelocities = {}\nx0 = {:?}\nt_min = {:?}\nt_max = {:?}\nratio = {:?}\norder = {:?}\nwindow_min = {:?}\nwindow_max = {:?}",
            speeds_toml(&r.velocities),
            r.x0,
            r.t_min,
            r.t_max,
            r.ratio,
            r.order,
            r.window_min,
            r.window_max
        );
        let k = &self.kernels;
        let _ = writeln!(
            s,
            "\n[kernels]\nj = {}\na = {:?}\nt = {:?}\ndistance_min = {:?}\ndistance_max = {:?}\npoints = {}\norder = {:?}",
            k.j, k.a, k.t, k.distance_min, k.distance_max, k.points, k.order
        );
        let c = &self.compare;
        let _ = writeln!(
            s,
            "\n[compare]\nt = {:?}\noffset = {:?}\nu = {}\nut = {}\nvelocities = {}\nt_min = {:?}\nt_max = {:?}\nratio = {:?}",
            c.t,
            c.offset,
            pulses_toml(&c.data.u_terms),
            pulses_toml(&c.data.ut_terms),
            speeds_toml(&c.velocities),
            c.t_min,
            c.t_max,
            c.ratio
        );
        s
    }
}
