//! Simulation configuration: a flat `key = value` format with sections.
//!
//! ```text
//! [mesh]
//! structured = 16            # n cells per side, or: file = path/to/mesh.txt
//! domain = 0 1 0 1           # x0 x1 y0 y1 (structured only)
//!
//! [initial]
//! u = gaussian 31.83 0.5 0.5 0.1
//! v = affine 0.1 0.1 0.9 0
//!
//! [scheme]
//! chi = 1
//! q_detector = 2
//!
//! [time]
//! t_end = 1
//! dt_max = 1e-3
//!
//! [output]
//! every = 0.1
//! format = csv
//! dir = out
//! ```
//!
//! Initial-data presets (positional parameters):
//!
//! | preset                                   | field | value                                            |
//! |------------------------------------------|-------|--------------------------------------------------|
//! | `constant c`                             | u, v  | `c` (`c >= 0` for u, `c > 0` for v)              |
//! | `gaussian A x0 y0 s`                     | u     | `A exp(-|x - x0|² / s²)`, `A >= 0`, `s > 0`      |
//! | `two-bump A1 x1 y1 s1 A2 x2 y2 s2`       | u     | sum of two gaussian bumps                        |
//! | `affine floor c0 cx cy`                  | v     | `max(floor, c0 + cx x + cy y)`, `floor > 0`      |

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::error::ConfigError;
use crate::fem::{default_association, interp_average};
use crate::mesh::{Mesh, Point, Rect};
use crate::scheme::{SchemeParams, State};
use crate::timeloop::StepControl;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured { n: usize, domain: Rect },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Point,
    pub width: f64,
}

impl Bump {
    fn eval(&self, p: Point) -> f64 {
        let r2 = (p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2);
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Constant(f64),
    Gaussian(Bump),
    TwoBump(Bump, Bump),
    Affine { floor: f64, c0: f64, cx: f64, cy: f64 },
}

impl Preset {
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            Preset::Constant(c) => c,
            Preset::Gaussian(b) => b.eval(p),
            Preset::TwoBump(a, b) => a.eval(p) + b.eval(p),
            Preset::Affine { floor, c0, cx, cy } => floor.max(c0 + cx * p[0] + cy * p[1]),
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        let mut it = s.split_whitespace();
        let name = it.next().ok_or("empty preset")?;
        let args: Vec<f64> = it
            .map(|t| t.parse::<f64>().map_err(|_| format!("bad number '{t}'")))
            .collect::<Result<_, _>>()?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("preset '{name}' takes {n} parameters, got {}", args.len()))
            }
        };
        let bump = |a: &[f64]| Bump { amplitude: a[0], center: [a[1], a[2]], width: a[3] };
        match name {
            "constant" => want(1).map(|_| Preset::Constant(args[0])),
            "gaussian" => want(4).map(|_| Preset::Gaussian(bump(&args))),
            "two-bump" => want(8).map(|_| Preset::TwoBump(bump(&args[..4]), bump(&args[4..]))),
            "affine" => want(4).map(|_| Preset::Affine { floor: args[0], c0: args[1], cx: args[2], cy: args[3] }),
            other => Err(format!("unknown preset '{other}'")),
        }
    }

    fn check_u(&self) -> Result<(), String> {
        let bump_ok = |b: &Bump| b.amplitude >= 0.0 && b.width > 0.0;
        match self {
            Preset::Constant(c) if *c >= 0.0 => Ok(()),
            Preset::Gaussian(b) if bump_ok(b) => Ok(()),
            Preset::TwoBump(a, b) if bump_ok(a) && bump_ok(b) => Ok(()),
            Preset::Affine { .. } => Err("u preset must be constant, gaussian or two-bump".into()),
            _ => Err(format!("u preset {self} must be non-negative with positive widths")),
        }
    }

    fn check_v(&self) -> Result<(), String> {
        match self {
            Preset::Constant(c) if *c > 0.0 => Ok(()),
            Preset::Affine { floor, .. } if *floor > 0.0 => Ok(()),
            Preset::Constant(_) | Preset::Affine { .. } => {
                Err(format!("v preset {self} must be strictly positive (v0 > 0)"))
            }
            _ => Err("v preset must be constant or affine".into()),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |b: &Bump| format!("{} {} {} {}", b.amplitude, b.center[0], b.center[1], b.width);
        match self {
            Preset::Constant(c) => write!(f, "constant {c}"),
            Preset::Gaussian(g) => write!(f, "gaussian {}", b(g)),
            Preset::TwoBump(g, h) => write!(f, "two-bump {} {}", b(g), b(h)),
            Preset::Affine { floor, c0, cx, cy } => write!(f, "affine {floor} {c0} {cx} {cy}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Interval between field snapshots; `None` writes only the initial and final fields.
    pub every: Option<f64>,
    pub format: FieldFormat,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub mesh: MeshSource,
    pub initial_u: Preset,
    pub initial_v: Preset,
    pub scheme: SchemeParams,
    pub control: StepControl,
    pub output: OutputConfig,
}

impl SimulationConfig {
    /// Serializes every key, so that parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[mesh]\n");
        match &self.mesh {
            MeshSource::Structured { n, domain } => {
                writeln!(s, "structured = {n}").unwrap();
                writeln!(s, "domain = {} {} {} {}", domain.x0, domain.x1, domain.y0, domain.y1).unwrap();
            }
            MeshSource::File(p) => writeln!(s, "file = {}", p.display()).unwrap(),
        }
        writeln!(s, "\n[initial]\nu = {}\nv = {}", self.initial_u, self.initial_v).unwrap();
        let p = &self.scheme;
        writeln!(
            s,
            "\n[scheme]\nchi = {}\nq_detector = {}\neps_equal = {}\ntol_acute = {}\nseries_switch = {}",
            p.chi, p.q_detector, p.eps_equal, p.tol_acute, p.series_switch
        )
        .unwrap();
        let c = &self.control;
        writeln!(
            s,
            "\n[time]\nt_end = {}\ndt_init = {}\ndt_min = {}\ndt_max = {}\ngrowth = {}\nshrink = {}\nbound_tol = {}\nmax_rejects = {}",
            c.t_end, c.dt_init, c.dt_min, c.dt_max, c.growth, c.shrink, c.bound_tol, c.max_rejects
        )
        .unwrap();
        s.push_str("\n[output]\n");
        if let Some(e) = self.output.every {
            writeln!(s, "every = {e}").unwrap();
        }
        let fmt = match self.output.format {
            FieldFormat::Csv => "csv",
            FieldFormat::Vtk => "vtk",
        };
        writeln!(s, "format = {fmt}\ndir = {}", self.output.dir.display()).unwrap();
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| ConfigError::Invalid(m);
        match &self.mesh {
            MeshSource::Structured { n, domain } => {
                if *n == 0 {
                    return Err(inv("structured mesh needs n >= 1".into()));
                }
                if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
                    return Err(inv(format!("empty domain {domain:?}")));
                }
            }
            MeshSource::File(p) => {
                if !p.is_file() {
                    return Err(inv(format!("mesh file {} does not exist", p.display())));
                }
            }
        }
        self.initial_u.check_u().map_err(inv)?;
        self.initial_v.check_v().map_err(inv)?;
        self.scheme.validate().map_err(|e| inv(e.to_string()))?;
        self.control.validate().map_err(|e| inv(e.to_string()))?;
        if let Some(e) = self.output.every {
            if !(e > 0.0) {
                return Err(inv(format!("output.every must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

/// Parses and validates a configuration. Relative mesh paths are resolved
/// against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<SimulationConfig, ConfigError> {
    let mut section = String::new();
    let mut structured: Option<(usize, usize)> = None;
    let mut domain = Rect::UNIT;
    let mut file: Option<(PathBuf, usize)> = None;
    let mut u: Option<Preset> = None;
    let mut v: Option<Preset> = None;
    let mut scheme = SchemeParams::default();
    let mut control = StepControl::default();
    let mut t_end: Option<f64> = None;
    let mut dt_init: Option<f64> = None;
    let mut every = None;
    let mut format = FieldFormat::Csv;
    let mut dir = PathBuf::from("out");

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| ConfigError::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| err(format!("malformed section header '{line}'")))?;
            if !["mesh", "initial", "scheme", "time", "output"].contains(&name) {
                return Err(err(format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("'{key}' needs a number, got '{v}'")));
        let count = |v: &str| v.parse::<usize>().map_err(|_| err(format!("'{key}' needs an integer, got '{v}'")));
        match (section.as_str(), key) {
            ("mesh", "structured") => structured = Some((count(value)?, line_no)),
            ("mesh", "domain") => {
                let xs: Vec<f64> = value.split_whitespace().map(num).collect::<Result<_, _>>()?;
                let [x0, x1, y0, y1]: [f64; 4] =
                    xs.try_into().map_err(|_| err("domain needs four numbers: x0 x1 y0 y1".into()))?;
                domain = Rect { x0, x1, y0, y1 };
            }
            ("mesh", "file") => {
                let p = PathBuf::from(value);
                file = Some((if p.is_absolute() { p } else { base_dir.join(p) }, line_no));
            }
            ("initial", "u") => u = Some(Preset::parse(value).map_err(err)?),
            ("initial", "v") => v = Some(Preset::parse(value).map_err(err)?),
            ("scheme", "chi") => scheme.chi = num(value)?,
            ("scheme", "q_detector") => scheme.q_detector = num(value)?,
            ("scheme", "eps_equal") => scheme.eps_equal = num(value)?,
            ("scheme", "tol_acute") => scheme.tol_acute = num(value)?,
            ("scheme", "series_switch") => scheme.series_switch = num(value)?,
            ("time", "t_end") => t_end = Some(num(value)?),
            ("time", "dt_init") => dt_init = Some(num(value)?),
            ("time", "dt_min") => control.dt_min = num(value)?,
            ("time", "dt_max") => control.dt_max = num(value)?,
            ("time", "growth") => control.growth = num(value)?,
            ("time", "shrink") => control.shrink = num(value)?,
            ("time", "bound_tol") => control.bound_tol = num(value)?,
            ("time", "max_rejects") => control.max_rejects = count(value)?,
            ("output", "every") => every = Some(num(value)?),
            ("output", "format") => {
                format = match value {
                    "csv" => FieldFormat::Csv,
                    "vtk" => FieldFormat::Vtk,
                    other => return Err(err(format!("format must be csv or vtk, got '{other}'"))),
                }
            }
            ("output", "dir") => dir = PathBuf::from(value),
            ("", _) => return Err(err(format!("key '{key}' outside any section"))),
            (sec, _) => return Err(err(format!("unknown key '{key}' in [{sec}]"))),
        }
    }

    let mesh = match (structured, file) {
        (Some((n, _)), None) => MeshSource::Structured { n, domain },
        (None, Some((p, _))) => MeshSource::File(p),
        (Some(_), Some((_, line))) => {
            return Err(ConfigError::Parse { line, msg: "give either 'structured' or 'file', not both".into() })
        }
        (None, None) => return Err(ConfigError::Invalid("missing [mesh] structured or file".into())),
    };
    control.t_end = t_end.ok_or_else(|| ConfigError::Invalid("missing [time] t_end".into()))?;
    // an unset dt_init follows a lowered dt_max
    control.dt_init = dt_init.unwrap_or(control.dt_init.min(control.dt_max));
    let cfg = SimulationConfig {
        mesh,
        initial_u: u.ok_or_else(|| ConfigError::Invalid("missing [initial] u".into()))?,
        initial_v: v.ok_or_else(|| ConfigError::Invalid("missing [initial] v".into()))?,
        scheme,
        control,
        output: OutputConfig { every, format, dir },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Applies the averaging interpolant to the configured presets and checks
/// `0 <= u0h` and `0 < v0h <= sup v0`.
pub fn make_initial_state(config: &SimulationConfig, mesh: &Mesh) -> Result<State, ConfigError> {
    let assoc = default_association(mesh);
    let u = interp_average(|p| config.initial_u.eval(p), mesh, &assoc);
    let v = interp_average(|p| config.initial_v.eval(p), mesh, &assoc);
    // v presets are convex, so their supremum over the polygonal domain is
    // attained at a boundary vertex, which is a mesh node
    let v_sup = mesh.nodes().iter().map(|&p| config.initial_v.eval(p)).fold(f64::NEG_INFINITY, f64::max);
    if let Some(i) = u.iter().position(|&x| !(x >= 0.0)) {
        return Err(ConfigError::Invalid(format!("initial u is negative at node {i}: {}", u[i])));
    }
    if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x <= v_sup * (1.0 + 1e-14))) {
        return Err(ConfigError::Invalid(format!("initial v out of (0, {v_sup}] at node {i}: {}", v[i])));
    }
    Ok(State::new(u, v))
}
