//! Simplicial meshes: structured triangulations of a rectangle and uniform
//! partitions of an interval.

use crate::domain::Domain;
use crate::error::{Error, Result};

/// Precomputed geometry of one simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub measure: f64,
    /// Gradients of the barycentric coordinates; only the first `dim + 1` are used.
    pub grads: [[f64; 2]; 3],
    pub centroid: [f64; 2],
}

/// Index layout of a structured mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    elements: Vec<Element>,
    grid: Option<Grid>,
}

impl Mesh {
    /// Uniform mesh of `domain` with spacing close to `h`.
    ///
    /// In 2D every grid cell is split along its `(i, j)–(i+1, j+1)` diagonal.
    /// Vertex `(i, j)` has index `j (nx + 1) + i`.
    pub fn structured(domain: &Domain, h: f64) -> Result<Mesh> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Precondition(format!("mesh size must be positive, got {h}")));
        }
        let b = domain.bounds;
        let count = |len: f64| ((len / h).round() as usize).max(1);
        let nx = count(b.max[0] - b.min[0]);
        let ny = if domain.dim == 2 { count(b.max[1] - b.min[1]) } else { 0 };
        let spacing = [
            (b.max[0] - b.min[0]) / nx as f64,
            if ny > 0 { (b.max[1] - b.min[1]) / ny as f64 } else { 0.0 },
        ];
        let grid = Grid { nx, ny, origin: b.min, spacing };
        let coord = |i: usize, n: usize, axis: usize| {
            if i == n {
                b.max[axis]
            } else {
                b.min[axis] + i as f64 * spacing[axis]
            }
        };
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        if domain.dim == 1 {
            for i in 0..=nx {
                vertices.push([coord(i, nx, 0), 0.0]);
            }
            for i in 0..nx {
                cells.push([i, i + 1, 0]);
            }
        } else {
            for j in 0..=ny {
                for i in 0..=nx {
                    vertices.push([coord(i, nx, 0), coord(j, ny, 1)]);
                }
            }
            let v = |i: usize, j: usize| j * (nx + 1) + i;
            for j in 0..ny {
                for i in 0..nx {
                    cells.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                    cells.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
                }
            }
        }
        let mut mesh = Mesh::from_parts(domain.dim, vertices, cells)?;
        mesh.grid = Some(grid);
        Ok(mesh)
    }

    /// Mesh from explicit vertices and cells (1D cells use the first two entries).
    pub fn from_parts(dim: usize, vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>) -> Result<Mesh> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Precondition(format!("unsupported dimension {dim}")));
        }
        let mut elements = Vec::with_capacity(cells.len());
        for (e, c) in cells.iter().enumerate() {
            if c[..dim + 1].iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("element {e} references a missing vertex")));
            }
            let p: Vec<[f64; 2]> = c[..dim + 1].iter().map(|&v| vertices[v]).collect();
            elements.push(element_geometry(dim, &p).ok_or_else(|| {
                Error::Mesh(format!("element {e} is degenerate (zero measure)"))
            })?);
        }
        Ok(Mesh { dim, vertices, cells, elements, grid: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cell(&self, e: usize) -> &[usize] {
        &self.cells[e][..self.dim + 1]
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn centroids(&self) -> Vec<[f64; 2]> {
        self.elements.iter().map(|el| el.centroid).collect()
    }

    pub fn total_measure(&self) -> f64 {
        self.elements.iter().map(|el| el.measure).sum()
    }

    /// Vertex index of the grid point nearest to `p`, if `p` is a grid point.
    pub fn grid_vertex(&self, p: [f64; 2]) -> Option<usize> {
        let g = self.grid?;
        let snap = |axis: usize, n: usize| -> Option<usize> {
            let r = (p[axis] - g.origin[axis]) / g.spacing[axis];
            let i = r.round();
            if (r - i).abs() > 1e-8 || i < 0.0 || i > n as f64 {
                None
            } else {
                Some(i as usize)
            }
        };
        let i = snap(0, g.nx)?;
        if self.dim == 1 {
            return Some(i);
        }
        let j = snap(1, g.ny)?;
        Some(j * (g.nx + 1) + i)
    }

    /// Elements incident to each vertex, in ascending order.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut stars = vec![Vec::new(); self.vertices.len()];
        for e in 0..self.cells.len() {
            for &v in self.cell(e) {
                stars[v].push(e);
            }
        }
        stars
    }
}

fn element_geometry(dim: usize, p: &[[f64; 2]]) -> Option<Element> {
    let mut grads = [[0.0; 2]; 3];
    let mut centroid = [0.0; 2];
    for q in p {
        centroid[0] += q[0] / p.len() as f64;
        centroid[1] += q[1] / p.len() as f64;
    }
    if dim == 1 {
        let len = p[1][0] - p[0][0];
        if len.abs() <= 1e-14 * (p[0][0].abs() + p[1][0].abs()).max(1.0) {
            return None;
        }
        grads[0] = [-1.0 / len, 0.0];
        grads[1] = [1.0 / len, 0.0];
        return Some(Element { measure: len.abs(), grads, centroid });
    }
    let [x0, y0] = p[0];
    let [x1, y1] = p[1];
    let [x2, y2] = p[2];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let scale = (x1 - x0).hypot(y1 - y0).max((x2 - x0).hypot(y2 - y0)).max(1e-300);
    if det.abs() <= 1e-12 * scale * scale {
        return None;
    }
    grads[0] = [(y1 - y2) / det, (x2 - x1) / det];
    grads[1] = [(y2 - y0) / det, (x0 - x2) / det];
    grads[2] = [(y0 - y1) / det, (x1 - x0) / det];
    Some(Element { measure: 0.5 * det.abs(), grads, centroid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Side;

    #[test]
    fn structured_square_counts_and_area() {
        let d = Domain::unit_square(&[]).unwrap();
        let m = Mesh::structured(&d, 0.25).unwrap();
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.n_elements(), 32);
        assert!((m.total_measure() - 1.0).abs() < 1e-14);
        assert_eq!(m.grid_vertex([0.5, 0.25]), Some(5 + 2));
        assert_eq!(m.grid_vertex([0.3, 0.25]), None);
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let d = Domain::unit_square(&[Side::Left]).unwrap();
        let m = Mesh::structured(&d, 0.5).unwrap();
        for el in m.elements() {
            let s = [0, 1].map(|k| el.grads.iter().map(|g| g[k]).sum::<f64>());
            assert!(s[0].abs() < 1e-14 && s[1].abs() < 1e-14);
        }
    }

    #[test]
    fn interval_mesh() {
        let d = Domain::interval(0.0, 2.0, &[Side::Left, Side::Right]).unwrap();
        let m = Mesh::structured(&d, 0.5).unwrap();
        assert_eq!(m.n_vertices(), 5);
        assert_eq!(m.cell(1), &[1, 2]);
        assert_eq!(m.element(0).grads[1], [2.0, 0.0]);
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let r = Mesh::from_parts(2, vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::Mesh(_))));
    }
}
