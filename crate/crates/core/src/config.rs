//! Sectioned `key = value` scenario documents.
//!
//! ```text
//! [domain]
//! dim = 2
//! min = 0, 0
//! max = 1, 1
//! dirichlet = bottom, top
//! h = 0.0625
//!
//! [crack]
//! path = (0, 0.5), (1, 0.5)
//! schedule = linear(0.25, 0.5)
//!
//! [time]
//! T = 1
//! dt = 0.01
//! ```
//!
//! `[material]`, `[data]`, `[solver]` and `[experiment]` are optional. Every
//! problem in a document is reported, not just the first.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::convergence::DecayLaw;
use crate::crack::{CrackPath, Schedule, SpaceFamily};
use crate::domain::{Bounds, Domain, Side};
use crate::error::{ConfigIssue, Error, Result};
use crate::expr::Expr;
use crate::load::LoadData;
use crate::scenario::{H15Policy, Scenario};
use crate::sparse::CgSettings;
use crate::tensor::{SymOp, Tensor4Field};
use crate::viscoelastic::{FixedPointConfig, InitialIterate};

#[derive(Debug, Clone, PartialEq)]
pub enum TensorSpec {
    Isotropic { lambda: f64, mu: f64 },
    /// Row-major matrix in the orthonormal symmetric basis.
    Coefficients(Vec<f64>),
}

impl TensorSpec {
    pub fn build(&self, dim: usize, bounds: Bounds) -> Result<Tensor4Field> {
        Ok(match self {
            TensorSpec::Isotropic { lambda, mu } => Tensor4Field::isotropic(dim, bounds, *lambda, *mu),
            TensorSpec::Coefficients(c) => Tensor4Field::uniform(dim, bounds, SymOp::from_coefficients(dim, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub dim: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub dirichlet: Vec<Side>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrackConfig {
    pub path: Vec<[f64; 2]>,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialConfig {
    pub elasticity: TensorSpec,
    pub viscosity: TensorSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub u0: [Expr; 2],
    pub u1: [Expr; 2],
    pub f: [Expr; 2],
    pub stress: [Expr; 3],
    pub u_d: [Expr; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub picard_tol: f64,
    pub picard_abs_tol: f64,
    pub picard_max_iter: usize,
    /// `None` chooses the subinterval count adaptively.
    pub k: Option<usize>,
    pub max_k: usize,
    pub h15: H15Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizons: Vec<f64>,
    pub ns: Vec<usize>,
    pub delta0: f64,
    pub eps0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub domain: DomainConfig,
    pub crack: CrackConfig,
    pub material: MaterialConfig,
    pub data: DataConfig,
    pub time: TimeConfig,
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            elasticity: TensorSpec::Isotropic { lambda: 1.0, mu: 1.0 },
            viscosity: TensorSpec::Isotropic { lambda: 0.0, mu: 0.0 },
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        fn z<const N: usize>() -> [Expr; N] {
            std::array::from_fn(|_| Expr::zero())
        }
        DataConfig { u0: z(), u1: z(), f: z(), stress: z(), u_d: z() }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let fp = FixedPointConfig::default();
        let cg = CgSettings::default();
        SolverConfig {
            cg_tol: cg.tol,
            cg_max_iter: cg.max_iter,
            picard_tol: fp.tol,
            picard_abs_tol: fp.abs_tol,
            picard_max_iter: fp.max_iter,
            k: fp.k,
            max_k: fp.max_k,
            h15: H15Policy::Warn,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let law = DecayLaw::default();
        ExperimentConfig {
            horizons: vec![0.25, 0.5, 1.0, 2.0],
            ns: vec![1, 2, 4, 8],
            delta0: law.delta0,
            eps0: law.eps0,
            seed: 42,
        }
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// Typed access to one section, recording problems instead of failing.
struct Reader<'a> {
    name: &'static str,
    section: Option<&'a mut Section>,
    issues: &'a mut Vec<ConfigIssue>,
}

fn issue(line: usize, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { line, message: message.into() }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("'{}' is not finite", s.trim())),
        Err(_) => Err(format!("'{}' is not a number", s.trim())),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| item(p.trim())).collect()
}

fn parse_points(s: &str) -> std::result::Result<Vec<[f64; 2]>, String> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(|| format!("expected '(' in point list near '{rest}'"))?;
        let close = open.find(')').ok_or("unclosed '(' in point list")?;
        let coords = parse_list(&open[..close], parse_f64)?;
        match coords.as_slice() {
            [x] => out.push([*x, 0.0]),
            [x, y] => out.push([*x, *y]),
            _ => return Err(format!("a point has one or two coordinates, got {}", coords.len())),
        }
        rest = open[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        }
    }
    Ok(out)
}

fn parse_schedule(s: &str) -> std::result::Result<Schedule, String> {
    let s = s.trim();
    let args = |body: &str, name: &str| -> std::result::Result<Vec<f64>, String> {
        let inner = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| format!("expected {name}(...)"))?;
        parse_list(inner, parse_f64)
    };
    if let Some(body) = s.strip_prefix("linear") {
        match args(body.trim(), "linear")?.as_slice() {
            [s0, v] => Schedule::linear(*s0, *v).map_err(|e| e.to_string()),
            _ => Err("linear(s0, speed) takes two numbers".into()),
        }
    } else if let Some(body) = s.strip_prefix("constant") {
        match args(body.trim(), "constant")?.as_slice() {
            [s0] => Ok(Schedule::constant(*s0)),
            _ => Err("constant(s0) takes one number".into()),
        }
    } else if let Some(body) = s.strip_prefix("table") {
        let pts = parse_points(body)?;
        Schedule::table(pts.into_iter().map(|p| (p[0], p[1])).collect()).map_err(|e| e.to_string())
    } else {
        Err(format!("unknown schedule '{s}' (expected linear, constant or table)"))
    }
}

impl<'a> Reader<'a> {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let e = self.section.as_mut()?.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn get<T>(&mut self, key: &str, default: Option<T>, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Option<T> {
        match self.take(key) {
            Some((v, line)) => match parse(&v) {
                Ok(x) => Some(x),
                Err(m) => {
                    self.issues.push(issue(line, format!("[{}] {key}: {m}", self.name)));
                    None
                }
            },
            None => {
                if default.is_none() && self.section.is_some() {
                    let line = self.section.as_ref().map(|s| s.line).unwrap_or(0);
                    self.issues.push(issue(line, format!("[{}] missing required key '{key}'", self.name)));
                }
                default
            }
        }
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.get(key, default, parse_f64)
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.get(key, default, |s| {
            let v = parse_f64(s)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(format!("must be positive, got {v}"))
            }
        })
    }

    fn count(&mut self, key: &str, default: Option<usize>) -> Option<usize> {
        self.get(key, default, |s| {
            let v: usize = s.trim().parse().map_err(|_| format!("'{}' is not a nonnegative integer", s.trim()))?;
            if v == 0 {
                Err("must be at least 1".into())
            } else {
                Ok(v)
            }
        })
    }

    fn expr(&mut self, key: &str) -> Expr {
        self.get(key, Some(Expr::zero()), |s| Expr::parse(s.trim()).map_err(|e| format!("expression error: {e}")))
            .unwrap_or_else(Expr::zero)
    }

    fn finish(self) {
        if let Some(sec) = self.section {
            for (k, e) in &sec.entries {
                if !e.used {
                    self.issues.push(issue(e.line, format!("[{}] unknown key '{k}'", self.name)));
                }
            }
        }
    }
}

const SECTIONS: [&str; 7] = ["domain", "crack", "material", "data", "time", "solver", "experiment"];

fn tensor_spec(r: &mut Reader, prefix: &str, default: TensorSpec) -> TensorSpec {
    let lambda = r.take(&format!("{prefix}_lambda"));
    let mu = r.take(&format!("{prefix}_mu"));
    let coeffs = r.take(&format!("{prefix}_coefficients"));
    let name = r.name;
    match (lambda, mu, coeffs) {
        (None, None, None) => default,
        (l, m, None) => {
            let mut get = |v: Option<(String, usize)>, key: &str| -> f64 {
                let Some((s, line)) = v else {
                    r.issues.push(issue(0, format!("[{name}] {prefix}_lambda and {prefix}_mu must be given together (missing {key})")));
                    return 0.0;
                };
                parse_f64(&s).unwrap_or_else(|m| {
                    r.issues.push(issue(line, format!("[{name}] {key}: {m}")));
                    0.0
                })
            };
            let lambda = get(l, &format!("{prefix}_lambda"));
            let mu = get(m, &format!("{prefix}_mu"));
            TensorSpec::Isotropic { lambda, mu }
        }
        (l, m, Some((s, line))) => {
            if l.is_some() || m.is_some() {
                r.issues.push(issue(line, format!("[{name}] give either {prefix}_lambda/{prefix}_mu or {prefix}_coefficients, not both")));
            }
            match parse_list(&s, parse_f64) {
                Ok(c) => TensorSpec::Coefficients(c),
                Err(m) => {
                    r.issues.push(issue(line, format!("[{name}] {prefix}_coefficients: {m}")));
                    default
                }
            }
        }
    }
}

/// Parses and validates a scenario document, collecting every problem.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut issues = Vec::new();
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                issues.push(issue(line_no, format!("malformed section header '{line}'")));
                current = None;
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                issues.push(issue(line_no, format!("unknown section [{name}]")));
                current = None;
            } else if sections.contains_key(&name) {
                issues.push(issue(line_no, format!("duplicate section [{name}]")));
                current = None;
            } else {
                sections.insert(name.clone(), Section { line: line_no, entries: BTreeMap::new() });
                current = Some(name);
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(issue(line_no, format!("expected 'key = value', got '{line}'")));
            continue;
        };
        let Some(sec) = current.as_ref().and_then(|c| sections.get_mut(c)) else {
            if current.is_none() && !issues.iter().any(|i| i.line + 1 == line_no) {
                issues.push(issue(line_no, "key outside of a known section"));
            }
            continue;
        };
        let key = key.trim().to_string();
        if sec.entries.contains_key(&key) {
            issues.push(issue(line_no, format!("duplicate key '{key}'")));
            continue;
        }
        sec.entries.insert(key, Entry { value: value.trim().to_string(), line: line_no, used: false });
    }
    for req in ["domain", "crack", "time"] {
        if !sections.contains_key(req) {
            issues.push(issue(0, format!("missing required section [{req}]")));
        }
    }

    let mut take = |name: &'static str| sections.remove(name).map(|s| (name, s));
    let mut sec_domain = take("domain");
    let mut sec_crack = take("crack");
    let mut sec_material = take("material");
    let mut sec_data = take("data");
    let mut sec_time = take("time");
    let mut sec_solver = take("solver");
    let mut sec_exp = take("experiment");
    fn reader<'a>(s: &'a mut Option<(&'static str, Section)>, name: &'static str, issues: &'a mut Vec<ConfigIssue>) -> Reader<'a> {
        Reader { name, section: s.as_mut().map(|(_, s)| s), issues }
    }

    let mut r = reader(&mut sec_domain, "domain", &mut issues);
    let dim = r
        .get("dim", Some(2), |s| match s.trim() {
            "1" => Ok(1),
            "2" => Ok(2),
            o => Err(format!("dim must be 1 or 2, got '{o}'")),
        })
        .unwrap_or(2);
    let coords = |s: &str| -> std::result::Result<[f64; 2], String> {
        let v = parse_list(s, parse_f64)?;
        match (dim, v.as_slice()) {
            (1, [a]) => Ok([*a, 0.0]),
            (2, [a, b]) => Ok([*a, *b]),
            _ => Err(format!("expected {dim} coordinate(s)")),
        }
    };
    let min = r.get("min", Some([0.0, 0.0]), coords).unwrap_or([0.0, 0.0]);
    let max = r.get("max", Some(if dim == 1 { [1.0, 0.0] } else { [1.0, 1.0] }), coords).unwrap_or([1.0, 1.0]);
    let dirichlet = r
        .get("dirichlet", Some(Vec::new()), |s| {
            parse_list(s, |p| {
                let side = Side::from_str(p).map_err(|e| e.to_string())?;
                if Side::sides(dim).contains(&side) {
                    Ok(side)
                } else {
                    Err(format!("boundary tag '{p}' does not exist in {dim}D"))
                }
            })
        })
        .unwrap_or_default();
    let h = r.positive("h", None).unwrap_or(1.0);
    r.finish();
    let domain = DomainConfig { dim, min, max, dirichlet, h };

    let mut r = reader(&mut sec_crack, "crack", &mut issues);
    let path = r.get("path", None, parse_points).unwrap_or_default();
    let schedule = r.get("schedule", None, parse_schedule).unwrap_or_else(|| Schedule::constant(0.0));
    r.finish();
    let crack = CrackConfig { path, schedule };

    let mut r = reader(&mut sec_material, "material", &mut issues);
    let defaults = MaterialConfig::default();
    let elasticity = tensor_spec(&mut r, "c", defaults.elasticity);
    let viscosity = tensor_spec(&mut r, "v", defaults.viscosity);
    r.finish();
    let material = MaterialConfig { elasticity, viscosity };

    let mut r = reader(&mut sec_data, "data", &mut issues);
    let data = DataConfig {
        u0: [r.expr("u0_x"), r.expr("u0_y")],
        u1: [r.expr("u1_x"), r.expr("u1_y")],
        f: [r.expr("f_x"), r.expr("f_y")],
        stress: [r.expr("F_xx"), r.expr("F_yy"), r.expr("F_xy")],
        u_d: [r.expr("uD_x"), r.expr("uD_y")],
    };
    r.finish();

    let mut r = reader(&mut sec_time, "time", &mut issues);
    let time = TimeConfig { t_end: r.positive("T", None).unwrap_or(1.0), dt: r.positive("dt", None).unwrap_or(1.0) };
    r.finish();

    let mut r = reader(&mut sec_solver, "solver", &mut issues);
    let d = SolverConfig::default();
    let solver = SolverConfig {
        cg_tol: r.positive("cg_tol", Some(d.cg_tol)).unwrap_or(d.cg_tol),
        cg_max_iter: r.count("cg_max_iter", Some(d.cg_max_iter)).unwrap_or(d.cg_max_iter),
        picard_tol: r.positive("picard_tol", Some(d.picard_tol)).unwrap_or(d.picard_tol),
        picard_abs_tol: r
            .get("picard_abs_tol", Some(d.picard_abs_tol), |s| {
                let v = parse_f64(s)?;
                if v >= 0.0 {
                    Ok(v)
                } else {
                    Err(format!("must be nonnegative, got {v}"))
                }
            })
            .unwrap_or(d.picard_abs_tol),
        picard_max_iter: r.count("picard_max_iter", Some(d.picard_max_iter)).unwrap_or(d.picard_max_iter),
        k: r
            .get("k", Some(d.k), |s| match s.trim() {
                "auto" => Ok(None),
                o => match o.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(Some(k)),
                    _ => Err(format!("k must be 'auto' or a positive integer, got '{o}'")),
                },
            })
            .unwrap_or(d.k),
        max_k: r.count("max_k", Some(d.max_k)).unwrap_or(d.max_k),
        h15: r
            .get("h15", Some(d.h15), |s| match s.trim() {
                "warn" => Ok(H15Policy::Warn),
                "strict" => Ok(H15Policy::Strict),
                o => Err(format!("h15 must be 'warn' or 'strict', got '{o}'")),
            })
            .unwrap_or(d.h15),
    };
    r.finish();

    let mut r = reader(&mut sec_exp, "experiment", &mut issues);
    let d = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        horizons: r
            .get("horizons", Some(d.horizons.clone()), |s| {
                let v = parse_list(s, parse_f64)?;
                if v.is_empty() || v.iter().any(|h| !(*h > 0.0)) {
                    Err("horizons must be a nonempty list of positive numbers".into())
                } else {
                    Ok(v)
                }
            })
            .unwrap_or(d.horizons),
        ns: r
            .get("n", Some(d.ns.clone()), |s| {
                parse_list(s, |p| p.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| format!("'{p}' is not a positive integer")))
            })
            .unwrap_or(d.ns),
        delta0: r.num("delta0", Some(d.delta0)).unwrap_or(d.delta0),
        eps0: r.num("eps0", Some(d.eps0)).unwrap_or(d.eps0),
        seed: r.get("seed", Some(d.seed), |s| s.trim().parse::<u64>().map_err(|_| format!("'{}' is not a seed", s.trim()))).unwrap_or(d.seed),
    };
    r.finish();

    if issues.is_empty() {
        Ok(ScenarioConfig { domain, crack, material, data, time, solver, experiment })
    } else {
        issues.sort_by_key(|i| i.line);
        Err(Error::Config(issues))
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")
}

fn fmt_points(p: &[[f64; 2]]) -> String {
    p.iter()
        .map(|q| format!("({}, {})", fmt_num(q[0]), fmt_num(q[1])))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_schedule(s: &Schedule) -> String {
    match s {
        Schedule::Linear { s0, speed } => format!("linear({}, {})", fmt_num(*s0), fmt_num(*speed)),
        Schedule::Table(p) => {
            let pts: Vec<[f64; 2]> = p.iter().map(|&(t, s)| [t, s]).collect();
            format!("table {}", fmt_points(&pts))
        }
    }
}

fn fmt_tensor(f: &mut fmt::Formatter<'_>, prefix: &str, t: &TensorSpec) -> fmt::Result {
    match t {
        TensorSpec::Isotropic { lambda, mu } => {
            writeln!(f, "{prefix}_lambda = {}", fmt_num(*lambda))?;
            writeln!(f, "{prefix}_mu = {}", fmt_num(*mu))
        }
        TensorSpec::Coefficients(c) => writeln!(f, "{prefix}_coefficients = {}", fmt_list(c)),
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.domain;
        let pt = |p: [f64; 2]| if d.dim == 1 { fmt_num(p[0]) } else { fmt_list(&p) };
        writeln!(f, "[domain]")?;
        writeln!(f, "dim = {}", d.dim)?;
        writeln!(f, "min = {}", pt(d.min))?;
        writeln!(f, "max = {}", pt(d.max))?;
        writeln!(f, "dirichlet = {}", d.dirichlet.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "))?;
        writeln!(f, "h = {}", fmt_num(d.h))?;
        writeln!(f, "\n[crack]")?;
        writeln!(f, "path = {}", fmt_points(&self.crack.path))?;
        writeln!(f, "schedule = {}", fmt_schedule(&self.crack.schedule))?;
        writeln!(f, "\n[material]")?;
        fmt_tensor(f, "c", &self.material.elasticity)?;
        fmt_tensor(f, "v", &self.material.viscosity)?;
        let x = &self.data;
        writeln!(f, "\n[data]")?;
        for (k, e) in [
            ("u0_x", &x.u0[0]),
            ("u0_y", &x.u0[1]),
            ("u1_x", &x.u1[0]),
            ("u1_y", &x.u1[1]),
            ("f_x", &x.f[0]),
            ("f_y", &x.f[1]),
            ("F_xx", &x.stress[0]),
            ("F_yy", &x.stress[1]),
            ("F_xy", &x.stress[2]),
            ("uD_x", &x.u_d[0]),
            ("uD_y", &x.u_d[1]),
        ] {
            writeln!(f, "{k} = {e}")?;
        }
        writeln!(f, "\n[time]")?;
        writeln!(f, "T = {}", fmt_num(self.time.t_end))?;
        writeln!(f, "dt = {}", fmt_num(self.time.dt))?;
        let s = &self.solver;
        writeln!(f, "\n[solver]")?;
        writeln!(f, "cg_tol = {}", fmt_num(s.cg_tol))?;
        writeln!(f, "cg_max_iter = {}", s.cg_max_iter)?;
        writeln!(f, "picard_tol = {}", fmt_num(s.picard_tol))?;
        writeln!(f, "picard_abs_tol = {}", fmt_num(s.picard_abs_tol))?;
        writeln!(f, "picard_max_iter = {}", s.picard_max_iter)?;
        match s.k {
            Some(k) => writeln!(f, "k = {k}")?,
            None => writeln!(f, "k = auto")?,
        }
        writeln!(f, "max_k = {}", s.max_k)?;
        writeln!(f, "h15 = {}", if s.h15 == H15Policy::Strict { "strict" } else { "warn" })?;
        let e = &self.experiment;
        writeln!(f, "\n[experiment]")?;
        writeln!(f, "horizons = {}", fmt_list(&e.horizons))?;
        writeln!(f, "n = {}", e.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "))?;
        writeln!(f, "delta0 = {}", fmt_num(e.delta0))?;
        writeln!(f, "eps0 = {}", fmt_num(e.eps0))?;
        writeln!(f, "seed = {}", e.seed)
    }
}

impl ScenarioConfig {
    pub fn scenario(&self) -> Result<Scenario> {
        let d = &self.domain;
        let bounds = Bounds { min: d.min, max: d.max };
        let domain = Domain::new(d.dim, bounds, &d.dirichlet, &[])?;
        let path = CrackPath::new(d.dim, self.crack.path.clone())?;
        let family = Arc::new(SpaceFamily::build(&domain, &path, d.h)?);
        let x = &self.data;
        let data = LoadData::new(x.u0.clone(), x.u1.clone(), x.f.clone(), x.stress.clone(), x.u_d.clone());
        Ok(Scenario {
            family,
            schedule: self.crack.schedule.clone(),
            elasticity: self.material.elasticity.build(d.dim, bounds)?,
            viscosity: self.material.viscosity.build(d.dim, bounds)?,
            data,
            t_end: self.time.t_end,
            cg: CgSettings { tol: self.solver.cg_tol, max_iter: self.solver.cg_max_iter },
            h15: self.solver.h15,
        })
    }

    pub fn fixed_point(&self) -> FixedPointConfig {
        let s = &self.solver;
        FixedPointConfig {
            tol: s.picard_tol,
            abs_tol: s.picard_abs_tol,
            max_iter: s.picard_max_iter,
            k: s.k,
            max_k: s.max_k,
            initial: InitialIterate::Elastodynamic,
            ..FixedPointConfig::default()
        }
    }

    pub fn decay_law(&self) -> DecayLaw {
        DecayLaw { delta0: self.experiment.delta0, eps0: self.experiment.eps0 }
    }
}
