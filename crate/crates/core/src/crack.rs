//! Crack paths, tip schedules and the broken P1 spaces they induce.
//!
//! The path is snapped onto mesh edges once ("seam facets"). The crack at
//! time t is the prefix of facets whose end arclength is at most s(t), so the
//! whole evolution is described by a single integer `open` per time node, and
//! the spaces for increasing `open` are nested by construction.

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

const ARC_TOL: f64 = 1e-10;

/// Tip arclength as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// `s(t) = s0 + speed·t`.
    Linear { s0: f64, speed: f64 },
    /// Piecewise-linear interpolation of `(t, s)` pairs, constant outside.
    Table(Vec<(f64, f64)>),
}

impl Schedule {
    pub fn linear(s0: f64, speed: f64) -> Result<Schedule> {
        if !s0.is_finite() || !speed.is_finite() {
            return Err(Error::Precondition("schedule parameters must be finite".into()));
        }
        if speed < 0.0 {
            return Err(Error::Ordering(format!(
                "crack tip speed {speed} is negative; cracks cannot heal"
            )));
        }
        Ok(Schedule::Linear { s0, speed })
    }

    pub fn constant(s0: f64) -> Schedule {
        Schedule::Linear { s0, speed: 0.0 }
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Schedule> {
        if points.is_empty() {
            return Err(Error::Precondition("schedule table is empty".into()));
        }
        if points.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) {
            return Err(Error::Precondition("schedule table entries must be finite".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Ordering(format!(
                    "schedule times must increase: {} after {}",
                    w[1].0, w[0].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Ordering(format!(
                    "tip arclength decreases from {} to {} between t = {} and t = {}",
                    w[0].1, w[1].1, w[0].0, w[1].0
                )));
            }
        }
        Ok(Schedule::Table(points))
    }

    pub fn tip(&self, t: f64) -> f64 {
        match self {
            Schedule::Linear { s0, speed } => s0 + speed * t,
            Schedule::Table(p) => {
                if t <= p[0].0 {
                    return p[0].1;
                }
                for w in p.windows(2) {
                    if t <= w[1].0 {
                        let r = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + r * (w[1].1 - w[0].1);
                    }
                }
                p[p.len() - 1].1
            }
        }
    }

    /// Right derivative of the tip position.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Schedule::Linear { speed, .. } => *speed,
            Schedule::Table(p) => p
                .windows(2)
                .find(|w| t >= w[0].0 && t < w[1].0)
                .map_or(0.0, |w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)),
        }
    }

    /// Lipschitz constant, i.e. the maximal tip speed.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Schedule::Linear { speed, .. } => *speed,
            Schedule::Table(p) => p
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .fold(0.0, f64::max),
        }
    }

    /// The same law advanced by `delta` in arclength.
    pub fn shifted(&self, delta: f64) -> Schedule {
        match self {
            Schedule::Linear { s0, speed } => Schedule::Linear { s0: s0 + delta, speed: *speed },
            Schedule::Table(p) => Schedule::Table(p.iter().map(|&(t, s)| (t, s + delta)).collect()),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Linear { s0, speed } => write!(f, "linear({s0}, {speed})"),
            Schedule::Table(p) => {
                f.write_str("table ")?;
                for (i, (t, s)) in p.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({t}, {s})")?;
                }
                Ok(())
            }
        }
    }
}

/// Polyline crack path parameterized by arclength. In 1D the path is a
/// single breakable point.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackPath {
    points: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
}

impl CrackPath {
    pub fn new(dim: usize, points: Vec<[f64; 2]>) -> Result<CrackPath> {
        if dim == 1 {
            if points.len() != 1 {
                return Err(Error::Geometry(format!(
                    "a 1D crack is a single point, got {} points",
                    points.len()
                )));
            }
            return Ok(CrackPath { points, cumulative: vec![0.0] });
        }
        if points.len() < 2 {
            return Err(Error::Geometry("crack path needs at least two vertices".into()));
        }
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if len == 0.0 {
                return Err(Error::Geometry("crack path has repeated vertices".into()));
            }
            cumulative.push(cumulative.last().unwrap() + len);
        }
        let n = points.len() - 1;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (points[i], points[i + 1]);
                let (c, d) = (points[j], points[j + 1]);
                let hit = if j == i + 1 { overlaps_adjacent(a, b, d) } else { segments_meet(a, b, c, d) };
                if hit {
                    return Err(Error::Geometry(format!(
                        "crack path self-intersects (segments {i} and {j})"
                    )));
                }
            }
        }
        Ok(CrackPath { points, cumulative })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Point at arclength `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        if self.points.len() == 1 {
            return self.points[0];
        }
        let s = s.clamp(0.0, self.length());
        let k = (1..self.cumulative.len())
            .find(|&k| s <= self.cumulative[k])
            .unwrap_or(self.cumulative.len() - 1);
        let (a, b) = (self.points[k - 1], self.points[k]);
        let r = (s - self.cumulative[k - 1]) / (self.cumulative[k] - self.cumulative[k - 1]);
        [a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1])]
    }

    /// Unit tangent of the segment containing `s`.
    pub fn tangent_at(&self, s: f64) -> [f64; 2] {
        if self.points.len() == 1 {
            return [1.0, 0.0];
        }
        let k = (1..self.cumulative.len())
            .find(|&k| s < self.cumulative[k])
            .unwrap_or(self.cumulative.len() - 1);
        let (a, b) = (self.points[k - 1], self.points[k]);
        let len = self.cumulative[k] - self.cumulative[k - 1];
        [(b[0] - a[0]) / len, (b[1] - a[1]) / len]
    }

    pub fn is_straight(&self) -> bool {
        self.points.len() <= 2
            || self.points.windows(3).all(|w| {
                let cross = (w[1][0] - w[0][0]) * (w[2][1] - w[1][1]) - (w[1][1] - w[0][1]) * (w[2][0] - w[1][0]);
                let dot = (w[1][0] - w[0][0]) * (w[2][0] - w[1][0]) + (w[1][1] - w[0][1]) * (w[2][1] - w[1][1]);
                cross.abs() < 1e-12 && dot > 0.0
            })
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let eps = 1e-12;
    orient(a, b, p).abs() < eps
        && p[0] >= a[0].min(b[0]) - eps
        && p[0] <= a[0].max(b[0]) + eps
        && p[1] >= a[1].min(b[1]) - eps
        && p[1] <= a[1].max(b[1]) + eps
}

fn segments_meet(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// Segments `ab` and `bd` share `b`; they overlap iff they fold back.
fn overlaps_adjacent(a: [f64; 2], b: [f64; 2], d: [f64; 2]) -> bool {
    let dot = (a[0] - b[0]) * (d[0] - b[0]) + (a[1] - b[1]) * (d[1] - b[1]);
    orient(a, b, d).abs() < 1e-12 && dot > 0.0
}

/// One mesh facet on the crack path: an edge in 2D, a vertex in 1D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamFacet {
    pub vertices: [usize; 2],
    /// Arclength at the far end of the facet.
    pub end_arclength: f64,
}

/// The broken P1 vector space for a given number of open seam facets.
#[derive(Debug, Clone)]
pub struct BrokenSpace {
    mesh: Arc<Mesh>,
    open: usize,
    node_vertex: Vec<usize>,
    elem_nodes: Vec<[usize; 3]>,
    constrained: Vec<bool>,
    mass: OnceLock<CsrMatrix>,
}

impl BrokenSpace {
    /// Uncracked space on `mesh` without constrained dofs.
    pub fn continuous(mesh: Arc<Mesh>) -> BrokenSpace {
        let dim = mesh.dim();
        let node_vertex = (0..mesh.n_vertices()).collect();
        let elem_nodes = (0..mesh.n_elements())
            .map(|e| {
                let mut c = [0; 3];
                c[..dim + 1].copy_from_slice(mesh.cell(e));
                c
            })
            .collect();
        let constrained = vec![false; mesh.n_vertices() * dim];
        BrokenSpace { mesh, open: 0, node_vertex, elem_nodes, constrained, mass: OnceLock::new() }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Number of open seam facets.
    pub fn open(&self) -> usize {
        self.open
    }

    pub fn n_nodes(&self) -> usize {
        self.node_vertex.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.node_vertex.len() * self.dim()
    }

    /// Mesh vertex carrying `node`.
    pub fn node_vertex(&self, node: usize) -> usize {
        self.node_vertex[node]
    }

    pub fn node_position(&self, node: usize) -> [f64; 2] {
        self.mesh.vertex(self.node_vertex[node])
    }

    /// Nodes of element `e`, aligned with `mesh.cell(e)`.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elem_nodes[e][..self.dim() + 1]
    }

    /// Vertices with an extra node, in duplication order (with multiplicity).
    pub fn duplicated_vertices(&self) -> &[usize] {
        &self.node_vertex[self.mesh.n_vertices()..]
    }

    /// Per-dof Dirichlet mask.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    /// Consistent mass matrix, assembled on first use.
    pub fn mass(&self) -> &CsrMatrix {
        self.mass.get_or_init(|| crate::assembly::assemble_mass(self))
    }

    pub fn free_dofs(&self) -> usize {
        self.constrained.iter().filter(|c| !**c).count()
    }

    /// Dof vector of the nodal interpolant of `g`.
    pub fn interpolate(&self, g: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.n_dofs()];
        for n in 0..self.n_nodes() {
            let v = g(self.node_position(n));
            out[n * d..n * d + d].copy_from_slice(&v[..d]);
        }
        out
    }
}

/// Injective node map from a coarser into a finer broken space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTransfer {
    dim: usize,
    /// `source[i]` is the coarse node whose value fine node `i` inherits.
    source: Vec<usize>,
    coarse_nodes: usize,
}

impl SpaceTransfer {
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.coarse_nodes * self.dim, "coarse vector size");
        let d = self.dim;
        let mut out = Vec::with_capacity(self.source.len() * d);
        for &s in &self.source {
            out.extend_from_slice(&coarse[s * d..s * d + d]);
        }
        out
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SpaceTransfer) -> SpaceTransfer {
        SpaceTransfer {
            dim: self.dim,
            source: next.source.iter().map(|&s| self.source[s]).collect(),
            coarse_nodes: self.coarse_nodes,
        }
    }
}

/// Mesh, seam and all nested broken spaces for one crack path.
#[derive(Debug, Clone)]
pub struct SpaceFamily {
    domain: Domain,
    mesh: Arc<Mesh>,
    path: CrackPath,
    h: f64,
    seam: Vec<SeamFacet>,
    spaces: Vec<BrokenSpace>,
}

impl SpaceFamily {
    pub fn build(domain: &Domain, path: &CrackPath, h: f64) -> Result<SpaceFamily> {
        let mesh = Arc::new(Mesh::structured(domain, h)?);
        let seam = snap_path(domain, &mesh, path)?;
        let spaces = build_spaces(domain, &mesh, &seam)?;
        Ok(SpaceFamily { domain: domain.clone(), mesh, path: path.clone(), h, seam, spaces })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn path(&self) -> &CrackPath {
        &self.path
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn seam(&self) -> &[SeamFacet] {
        &self.seam
    }

    /// Number of open facets when the tip is at arclength `s`.
    pub fn open_count(&self, s: f64) -> usize {
        if s <= 0.0 {
            return 0;
        }
        self.seam.iter().take_while(|f| s >= f.end_arclength - ARC_TOL).count()
    }

    pub fn space(&self, open: usize) -> &BrokenSpace {
        &self.spaces[open.min(self.seam.len())]
    }

    /// Space with every seam facet open.
    pub fn fully_open(&self) -> &BrokenSpace {
        &self.spaces[self.seam.len()]
    }

    pub fn space_at(&self, schedule: &Schedule, t: f64) -> &BrokenSpace {
        self.space(self.open_count(schedule.tip(t)))
    }

    /// Inclusion of the space with `from` open facets into the one with `to`.
    pub fn transfer(&self, from: usize, to: usize) -> Result<SpaceTransfer> {
        if to < from {
            return Err(Error::Ordering(format!(
                "cannot map a space with {from} open facets into one with {to}"
            )));
        }
        let coarse = self.space(from);
        let fine = self.space(to);
        let n = coarse.n_nodes();
        let source = (0..fine.n_nodes())
            .map(|i| if i < n { i } else { fine.node_vertex[i] })
            .collect();
        Ok(SpaceTransfer { dim: self.mesh.dim(), source, coarse_nodes: n })
    }

    /// Inclusion `V_{t1} → V_{t2}` for the given schedule.
    pub fn space_inclusion_map(&self, schedule: &Schedule, t1: f64, t2: f64) -> Result<SpaceTransfer> {
        if t2 < t1 {
            return Err(Error::Ordering(format!("t2 = {t2} precedes t1 = {t1}")));
        }
        self.transfer(self.open_count(schedule.tip(t1)), self.open_count(schedule.tip(t2)))
    }
}

/// Broken space at time `t` on a fresh mesh of size `h`.
pub fn build_broken_space(domain: &Domain, path: &CrackPath, schedule: &Schedule, t: f64, h: f64) -> Result<BrokenSpace> {
    let family = SpaceFamily::build(domain, path, h)?;
    Ok(family.space_at(schedule, t).clone())
}

fn snap_path(domain: &Domain, mesh: &Mesh, path: &CrackPath) -> Result<Vec<SeamFacet>> {
    let grid = *mesh.grid().expect("structured mesh");
    let snap = |p: [f64; 2]| {
        mesh.grid_vertex(p).ok_or_else(|| {
            Error::Geometry(format!("crack vertex ({}, {}) is not a mesh vertex", p[0], p[1]))
        })
    };
    if mesh.dim() == 1 {
        let p = path.points()[0];
        let v = snap(p)?;
        if domain.on_boundary(p) {
            return Err(Error::Geometry("1D crack point must be interior".into()));
        }
        return Ok(vec![SeamFacet { vertices: [v, v], end_arclength: 0.0 }]);
    }
    let stride = grid.nx + 1;
    let mut seam = Vec::new();
    let mut arclength = 0.0;
    let mut seen = HashSet::new();
    let first = snap(path.points()[0])?;
    seen.insert(first);
    for w in path.points().windows(2) {
        let (a, b) = (snap(w[0])?, snap(w[1])?);
        let (ia, ja) = ((a % stride) as i64, (a / stride) as i64);
        let (ib, jb) = ((b % stride) as i64, (b / stride) as i64);
        let (di, dj) = (ib - ia, jb - ja);
        if !(di == 0 || dj == 0 || di == dj) {
            return Err(Error::Geometry(format!(
                "crack segment ({}, {})-({}, {}) is not aligned with mesh edges",
                w[0][0], w[0][1], w[1][0], w[1][1]
            )));
        }
        let steps = di.abs().max(dj.abs());
        let (si, sj) = (di.signum(), dj.signum());
        let step_len = ((si as f64 * grid.spacing[0]).powi(2) + (sj as f64 * grid.spacing[1]).powi(2)).sqrt();
        for k in 0..steps {
            let from = ((ja + k * sj) * stride as i64 + ia + k * si) as usize;
            let to = ((ja + (k + 1) * sj) * stride as i64 + ia + (k + 1) * si) as usize;
            if !seen.insert(to) {
                return Err(Error::Geometry("crack path self-intersects on the mesh".into()));
            }
            let (p, q) = (mesh.vertex(from), mesh.vertex(to));
            let shared = domain.sides_of(p).into_iter().any(|s| domain.sides_of(q).contains(&s));
            if shared {
                return Err(Error::Geometry(format!(
                    "crack facet ({}, {})-({}, {}) lies on the boundary",
                    p[0], p[1], q[0], q[1]
                )));
            }
            arclength += step_len;
            seam.push(SeamFacet { vertices: [from, to], end_arclength: arclength });
        }
    }
    Ok(seam)
}

fn build_spaces(domain: &Domain, mesh: &Arc<Mesh>, seam: &[SeamFacet]) -> Result<Vec<BrokenSpace>> {
    let dim = mesh.dim();
    let nv = mesh.n_vertices();
    let stars = mesh.vertex_stars();
    let mut candidates = Vec::new();
    for f in seam {
        for &v in &f.vertices {
            if !candidates.contains(&v) {
                candidates.push(v);
            }
        }
    }
    let vertex_constrained: Vec<bool> = (0..nv)
        .map(|v| domain.sides_of(mesh.vertex(v)).iter().any(|s| domain.is_dirichlet(*s)))
        .collect();

    let mut spaces: Vec<BrokenSpace> = Vec::with_capacity(seam.len() + 1);
    for open in 0..=seam.len() {
        let open_set: HashSet<[usize; 2]> = seam[..open]
            .iter()
            .map(|f| {
                let [a, b] = f.vertices;
                [a.min(b), a.max(b)]
            })
            .collect();
        let mut node_vertex: Vec<usize> = (0..nv).collect();
        let mut elem_nodes: Vec<[usize; 3]> = (0..mesh.n_elements())
            .map(|e| {
                let mut c = [0; 3];
                c[..dim + 1].copy_from_slice(mesh.cell(e));
                c
            })
            .collect();
        let mut splits: Vec<(usize, Vec<usize>)> = Vec::new();
        for &v in &candidates {
            let comps = star_components(mesh, v, &stars[v], &open_set);
            for comp in comps.iter().skip(1) {
                let node = node_vertex.len();
                node_vertex.push(v);
                for &e in comp {
                    let pos = mesh.cell(e).iter().position(|&w| w == v).unwrap();
                    elem_nodes[e][pos] = node;
                }
                splits.push((v, comp.clone()));
            }
        }
        if let Some(prev) = spaces.last() {
            let prev_extra = prev.node_vertex.len() - nv;
            let consistent = (0..prev_extra).all(|k| {
                let n = nv + k;
                n < node_vertex.len()
                    && node_vertex[n] == prev.node_vertex[n]
                    && (0..mesh.n_elements()).all(|e| {
                        let old = prev.elem_nodes[e][..dim + 1].contains(&n);
                        old == elem_nodes[e][..dim + 1].contains(&n)
                    })
            });
            if !consistent {
                return Err(Error::Geometry(
                    "crack path produces non-nested node duplication".into(),
                ));
            }
        }
        let constrained = node_vertex
            .iter()
            .flat_map(|&v| std::iter::repeat_n(vertex_constrained[v], dim))
            .collect();
        spaces.push(BrokenSpace {
            mesh: mesh.clone(),
            open,
            node_vertex,
            elem_nodes,
            constrained,
            mass: OnceLock::new(),
        });
    }
    Ok(spaces)
}

/// Connected components of the element star of `v` after cutting open facets,
/// ordered by smallest element index.
fn star_components(mesh: &Mesh, v: usize, star: &[usize], open: &HashSet<[usize; 2]>) -> Vec<Vec<usize>> {
    let dim = mesh.dim();
    let linked = |e1: usize, e2: usize| -> bool {
        if dim == 1 {
            return !open.contains(&[v, v]);
        }
        mesh.cell(e1)
            .iter()
            .filter(|&&w| w != v && mesh.cell(e2).contains(&w))
            .any(|&w| !open.contains(&[v.min(w), v.max(w)]))
    };
    let mut comp_of = vec![usize::MAX; star.len()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for start in 0..star.len() {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        comp_of[start] = id;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(star[i]);
            for j in 0..star.len() {
                if comp_of[j] == usize::MAX && linked(star[i], star[j]) {
                    comp_of[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Side;

    fn square_family(h: f64, tip_x: f64) -> SpaceFamily {
        let d = Domain::unit_square(&[Side::Bottom, Side::Top]).unwrap();
        let p = CrackPath::new(2, vec![[0.0, 0.5], [tip_x, 0.5]]).unwrap();
        SpaceFamily::build(&d, &p, h).unwrap()
    }

    #[test]
    fn closed_crack_has_uncracked_dof_count() {
        let f = square_family(0.25, 1.0);
        let s = f.space_at(&Schedule::constant(0.0), 0.3);
        assert_eq!(s.n_nodes(), 25);
        assert_eq!(s.n_dofs(), 50);
    }

    #[test]
    fn duplicated_vertices_behind_the_tip() {
        let f = square_family(0.25, 1.0);
        let s = f.space_at(&Schedule::constant(0.5), 0.0);
        // seam vertices on y = 0.5 with x < 0.5: x = 0 and x = 0.25
        let row = 2 * 5;
        assert_eq!(s.duplicated_vertices(), &[row, row + 1]);
        assert_eq!(s.n_nodes(), 27);
        // tip between vertices rounds down
        assert_eq!(f.open_count(0.6), 2);
        assert_eq!(f.open_count(0.75), 3);
    }

    #[test]
    fn fully_open_crack_splits_every_seam_vertex() {
        let f = square_family(0.25, 1.0);
        assert_eq!(f.fully_open().duplicated_vertices().len(), 5);
    }

    #[test]
    fn dof_count_is_monotone() {
        let f = square_family(0.125, 1.0);
        let sch = Schedule::linear(0.1, 0.8).unwrap();
        let mut last = 0;
        for k in 0..=20 {
            let n = f.space_at(&sch, k as f64 * 0.05).n_dofs();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn transfer_copies_shared_value_to_both_sides() {
        let f = square_family(0.25, 1.0);
        let t = f.transfer(1, 2).unwrap();
        let coarse = f.space(1);
        let vals: Vec<f64> = (0..coarse.n_dofs()).map(|i| i as f64).collect();
        let fine = t.apply(&vals);
        let new_node = f.space(2).n_nodes() - 1;
        let v = f.space(2).node_vertex(new_node);
        assert_eq!(fine[2 * new_node], vals[2 * v]);
        assert_eq!(fine[2 * new_node + 1], vals[2 * v + 1]);
        assert_eq!(f.transfer(2, 2).unwrap().source(), (0..f.space(2).n_nodes()).collect::<Vec<_>>().as_slice());
        assert!(matches!(f.transfer(2, 1), Err(Error::Ordering(_))));
    }

    #[test]
    fn transfer_composes() {
        let f = square_family(0.125, 1.0);
        let direct = f.transfer(1, 6).unwrap();
        let chained = f.transfer(1, 3).unwrap().then(&f.transfer(3, 6).unwrap());
        assert_eq!(direct, chained);
    }

    #[test]
    fn self_intersection_is_rejected() {
        let r = CrackPath::new(2, vec![[0.0, 0.5], [0.5, 0.5], [0.5, 0.75], [0.25, 0.75], [0.25, 0.25]]);
        assert!(matches!(r, Err(Error::Geometry(_))));
        let fold = CrackPath::new(2, vec![[0.0, 0.5], [0.5, 0.5], [0.25, 0.5]]);
        assert!(matches!(fold, Err(Error::Geometry(_))));
    }

    #[test]
    fn misaligned_path_is_rejected() {
        let d = Domain::unit_square(&[]).unwrap();
        let p = CrackPath::new(2, vec![[0.0, 0.5], [0.5, 0.75]]).unwrap();
        assert!(matches!(SpaceFamily::build(&d, &p, 0.25), Err(Error::Geometry(_))));
    }

    #[test]
    fn one_dimensional_breakable_point() {
        let d = Domain::interval(0.0, 1.0, &[Side::Left, Side::Right]).unwrap();
        let p = CrackPath::new(1, vec![[0.5, 0.0]]).unwrap();
        let f = SpaceFamily::build(&d, &p, 0.25).unwrap();
        assert_eq!(f.open_count(0.0), 0);
        assert_eq!(f.open_count(1e-3), 1);
        assert_eq!(f.space(1).duplicated_vertices(), &[2]);
        assert_eq!(f.space(1).element_nodes(2), &[5, 3]);
    }

    #[test]
    fn schedule_table_and_display() {
        let s = Schedule::table(vec![(0.0, 0.25), (1.0, 0.75)]).unwrap();
        assert_eq!(s.tip(0.5), 0.5);
        assert_eq!(s.tip(2.0), 0.75);
        assert_eq!(s.lipschitz(), 0.5);
        assert_eq!(s.to_string(), "table (0, 0.25), (1, 0.75)");
        assert!(Schedule::table(vec![(0.0, 0.5), (1.0, 0.25)]).is_err());
        assert!(Schedule::linear(0.0, -1.0).is_err());
    }
}
