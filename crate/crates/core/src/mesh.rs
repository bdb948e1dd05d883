//! Structured triangulations of axis-aligned rectangles.
//!
//! Every square of the grid is split along its lower-left to upper-right
//! diagonal, so the triangles are isosceles right triangles with legs
//! `dx`, `dy`. Vertex, cell and facet numbering is a pure function of the
//! grid size, which keeps assembled matrices bit-reproducible.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Boundary/interface label attached to a facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacetTag {
    Interface,
    DirF,
    NeuF,
    DirP,
    NeuP,
    Outer,
}

/// Which subdomain a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Fluid,
    Porous,
}

/// Side of an axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal of the rectangle on this side.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// Adjacent cells, lower index first.
    pub cells: [usize; 2],
    /// Local facet index within each adjacent cell.
    pub local: [usize; 2],
    /// Number of adjacent cells (1 or 2).
    pub ncells: usize,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.ncells == 1
    }
}

/// Triangulation with facet connectivity and tags.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// Global facet of local facet `k` (the one opposite local vertex `k`).
    pub cell_facets: Vec<[usize; 3]>,
    pub facet_tags: Vec<Option<FacetTag>>,
    pub cell_tags: Vec<Subdomain>,
    bounds: [f64; 4],
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    /// `[x0, x1, y0, y1]` of the rectangle.
    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn signed_area(&self, c: usize) -> f64 {
        let [p0, p1, p2] = self.cell_coords(c);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    pub fn facet_midpoint(&self, f: usize) -> [f64; 2] {
        let [a, b] = self.facets[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Outward unit normal of `cell` across its local facet `k`.
    pub fn outward_normal(&self, cell: usize, k: usize) -> [f64; 2] {
        let verts = self.cell_coords(cell);
        let a = verts[(k + 1) % 3];
        let b = verts[(k + 2) % 3];
        // counterclockwise ordering puts the outside on the right of a->b
        let t = [b[0] - a[0], b[1] - a[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        [t[1] / len, -t[0] / len]
    }

    /// Side of the bounding rectangle a boundary facet lies on.
    pub fn facet_side(&self, f: usize) -> Option<Side> {
        if !self.facets[f].is_boundary() {
            return None;
        }
        let [x0, x1, y0, y1] = self.bounds;
        let [a, b] = self.facets[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        if pa[0] == x0 && pb[0] == x0 {
            Some(Side::Left)
        } else if pa[0] == x1 && pb[0] == x1 {
            Some(Side::Right)
        } else if pa[1] == y0 && pb[1] == y0 {
            Some(Side::Bottom)
        } else if pa[1] == y1 && pb[1] == y1 {
            Some(Side::Top)
        } else {
            None
        }
    }

    /// Tag every boundary facet on `side`.
    pub fn tag_side(&mut self, side: Side, tag: FacetTag) {
        for f in 0..self.facets.len() {
            if self.facet_side(f) == Some(side) {
                self.facet_tags[f] = Some(tag);
            }
        }
    }

    pub fn set_cell_tag(&mut self, tag: Subdomain) {
        self.cell_tags.iter_mut().for_each(|t| *t = tag);
    }

    /// Boundary facets carrying `tag`, in facet order.
    pub fn tagged_facets(&self, tag: FacetTag) -> Vec<usize> {
        (0..self.facets.len())
            .filter(|&f| self.facet_tags[f] == Some(tag))
            .collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.signed_area(c)).sum()
    }

    /// Plain-text dump: `v x y` per vertex, `c i j k` per cell.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {}", v[0], v[1]);
        }
        for c in &self.cells {
            let _ = writeln!(out, "c {} {} {}", c[0], c[1], c[2]);
        }
        out
    }
}

/// Structured mesh of `[x0,x1]x[y0,y1]` with `nx` by `ny` squares.
pub fn build_rect_mesh(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "subdivisions must be positive (nx={nx}, ny={ny})"
        )));
    }
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidArgument(format!(
            "empty rectangle [{x0},{x1}]x[{y0},{y1}]"
        )));
    }
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // pin the far edges so boundary coordinates are exact
            let x = if i == nx { x1 } else { x0 + i as f64 * dx };
            let y = if j == ny { y1 } else { y0 + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v0 = vid(i, j);
            let v1 = vid(i + 1, j);
            let v2 = vid(i, j + 1);
            let v3 = vid(i + 1, j + 1);
            cells.push([v0, v1, v3]);
            cells.push([v0, v3, v2]);
        }
    }

    let mut facets: Vec<Facet> = Vec::with_capacity(3 * nx * ny + nx + ny);
    let mut cell_facets = vec![[0usize; 3]; cells.len()];
    let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(facets.capacity());
    for (c, cell) in cells.iter().enumerate() {
        for k in 0..3 {
            let a = cell[(k + 1) % 3];
            let b = cell[(k + 2) % 3];
            let key = if a < b { [a, b] } else { [b, a] };
            match lookup.get(&key) {
                Some(&f) => {
                    let facet = &mut facets[f];
                    facet.cells[1] = c;
                    facet.local[1] = k;
                    facet.ncells = 2;
                    cell_facets[c][k] = f;
                }
                None => {
                    let f = facets.len();
                    lookup.insert(key, f);
                    facets.push(Facet {
                        vertices: key,
                        cells: [c, usize::MAX],
                        local: [k, usize::MAX],
                        ncells: 1,
                    });
                    cell_facets[c][k] = f;
                }
            }
        }
    }
    let facet_tags = facets
        .iter()
        .map(|f| f.is_boundary().then_some(FacetTag::Outer))
        .collect();
    let ncells = cells.len();
    Ok(Mesh {
        vertices,
        cells,
        facets,
        cell_facets,
        facet_tags,
        cell_tags: vec![Subdomain::Fluid; ncells],
        bounds: [x0, x1, y0, y1],
    })
}

/// One-dimensional mesh of a vertical interface segment `x = const`.
#[derive(Clone, Debug)]
pub struct InterfaceMesh {
    pub x: f64,
    /// Sorted vertex y-coordinates.
    pub vertices: Vec<f64>,
    /// Unit normal used for normal traces (outward from the primary side).
    pub normal: [f64; 2],
}

impl InterfaceMesh {
    /// Interface made of the facets of `mesh` on `side`; the normal points
    /// out of `mesh`.
    pub fn from_side(mesh: &Mesh, side: Side) -> Result<Self> {
        if matches!(side, Side::Bottom | Side::Top) {
            return Err(Error::InvalidArgument(
                "only vertical interfaces are supported".into(),
            ));
        }
        let [x0, x1, _, _] = mesh.bounds();
        let x = if side == Side::Left { x0 } else { x1 };
        let mut ys: Vec<f64> = mesh
            .vertices
            .iter()
            .filter(|v| v[0] == x)
            .map(|v| v[1])
            .collect();
        ys.sort_by(f64::total_cmp);
        Ok(InterfaceMesh {
            x,
            vertices: ys,
            normal: side.outward_normal(),
        })
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        self.vertices[s + 1] - self.vertices[s]
    }

    pub fn length(&self) -> f64 {
        self.vertices[self.vertices.len() - 1] - self.vertices[0]
    }

    /// Unit tangent (normal rotated counterclockwise).
    pub fn tangent(&self) -> [f64; 2] {
        [-self.normal[1], self.normal[0]]
    }

    /// Map each interface segment to the facet of `mesh` covering it.
    pub fn facet_map(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        let mut by_y: HashMap<(u64, u64), usize> = HashMap::new();
        for (f, facet) in mesh.facets.iter().enumerate() {
            if !facet.is_boundary() {
                continue;
            }
            let [a, b] = facet.vertices;
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            if pa[0] == self.x && pb[0] == self.x {
                let (lo, hi) = if pa[1] < pb[1] { (pa[1], pb[1]) } else { (pb[1], pa[1]) };
                by_y.insert((lo.to_bits(), hi.to_bits()), f);
            }
        }
        (0..self.num_segments())
            .map(|s| {
                let key = (self.vertices[s].to_bits(), self.vertices[s + 1].to_bits());
                by_y.get(&key).copied().ok_or_else(|| {
                    Error::Misaligned(format!(
                        "no facet on x={} spanning y in [{}, {}]",
                        self.x,
                        self.vertices[s],
                        self.vertices[s + 1]
                    ))
                })
            })
            .collect()
    }
}

/// Boundary-condition layout of the two-rectangle geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoupledGeometry {
    /// Dirichlet on the outer vertical sides, Neumann on top and bottom.
    DarcyStokes,
    /// Left domain Dirichlet at x=0 only; right domain Dirichlet everywhere.
    PoissonNd,
    PoissonDd,
    PoissonNn,
    /// Dirichlet on every outer side of both subdomains.
    AllDirichlet,
}

/// Meshes of `[0,1/2]x[0,1]` (fluid) and `[1/2,1]x[0,1]` (porous) sharing
/// the interface `x = 1/2`.
#[derive(Clone, Debug)]
pub struct CoupledMesh {
    pub fluid: Mesh,
    pub porous: Mesh,
    pub interface: InterfaceMesh,
}

/// Number of cells per unit length for a dyadic mesh size `h = 2^-m`.
///
/// Mesh sizes follow the labeling of the reference tables: a mesh of size
/// `h` has `2/h` cells per unit length, so the triangle legs are `h/2`.
pub fn cells_per_unit(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidArgument(format!("mesh size {h} out of (0,1]")));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-12 || !(n as usize).is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "mesh size {h} is not a power of two"
        )));
    }
    Ok(2 * n as usize)
}

pub fn build_coupled_mesh(h: f64, geometry: CoupledGeometry) -> Result<CoupledMesh> {
    let n = cells_per_unit(h)?;
    let mut fluid = build_rect_mesh(0.0, 0.5, 0.0, 1.0, n / 2, n)?;
    let mut porous = build_rect_mesh(0.5, 1.0, 0.0, 1.0, n / 2, n)?;
    fluid.set_cell_tag(Subdomain::Fluid);
    porous.set_cell_tag(Subdomain::Porous);

    use FacetTag::*;
    let (f_lr, f_tb, p_lr, p_tb) = match geometry {
        CoupledGeometry::DarcyStokes | CoupledGeometry::PoissonNn => (DirF, NeuF, DirP, NeuP),
        CoupledGeometry::PoissonNd => (DirF, NeuF, DirP, DirP),
        CoupledGeometry::PoissonDd | CoupledGeometry::AllDirichlet => (DirF, DirF, DirP, DirP),
    };
    fluid.tag_side(Side::Left, f_lr);
    fluid.tag_side(Side::Bottom, f_tb);
    fluid.tag_side(Side::Top, f_tb);
    fluid.tag_side(Side::Right, Interface);
    porous.tag_side(Side::Right, p_lr);
    porous.tag_side(Side::Bottom, p_tb);
    porous.tag_side(Side::Top, p_tb);
    porous.tag_side(Side::Left, Interface);

    let interface = InterfaceMesh::from_side(&fluid, Side::Right)?;
    Ok(CoupledMesh {
        fluid,
        porous,
        interface,
    })
}

/// Unit square `[0,1]^2` with the interface on `x = 0`, Dirichlet data on
/// `x = 1` and Neumann data on top and bottom.
pub fn build_unit_square_subproblem(h: f64, dir: FacetTag, neu: FacetTag) -> Result<(Mesh, InterfaceMesh)> {
    let n = cells_per_unit(h)?;
    let mut mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, n, n)?;
    mesh.tag_side(Side::Left, FacetTag::Interface);
    mesh.tag_side(Side::Right, dir);
    mesh.tag_side(Side::Bottom, neu);
    mesh.tag_side(Side::Top, neu);
    let iface = InterfaceMesh::from_side(&mesh, Side::Left)?;
    Ok((mesh, iface))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square() {
        let m = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_facets(), 5);
    }

    #[test]
    fn counting_formula() {
        let m = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        assert_eq!(m.num_cells(), 128);
        assert_eq!(m.num_vertices(), 81);
        // horizontal + vertical + diagonal edges
        assert_eq!(m.num_facets(), 8 * 9 + 9 * 8 + 64);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(
            build_rect_mesh(0.0, 1.0, 0.0, 1.0, 0, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn facet_length_on_half_line() {
        let m = build_rect_mesh(0.0, 0.5, 0.0, 1.0, 4, 8).unwrap();
        let len: f64 = (0..m.num_facets())
            .filter(|&f| m.facet_side(f) == Some(Side::Right))
            .map(|f| m.facet_length(f))
            .sum();
        assert!((len - 1.0).abs() < 1e-15);
    }

    #[test]
    fn positive_areas_and_adjacency() {
        let m = build_rect_mesh(0.0, 2.0, -1.0, 0.5, 5, 3).unwrap();
        assert!((0..m.num_cells()).all(|c| m.signed_area(c) > 0.0));
        // every (cell, local facet) appears in exactly one facet record
        let mut seen = vec![[false; 3]; m.num_cells()];
        for f in &m.facets {
            for s in 0..f.ncells {
                assert!(!seen[f.cells[s]][f.local[s]]);
                seen[f.cells[s]][f.local[s]] = true;
            }
        }
        assert!(seen.iter().all(|s| s.iter().all(|&b| b)));
        for (f, facet) in m.facets.iter().enumerate() {
            let interior = !facet.is_boundary();
            assert_eq!(interior, m.facet_side(f).is_none());
            if interior {
                assert!(facet.cells[0] < facet.cells[1]);
            }
        }
    }

    #[test]
    fn coupled_interface_segments() {
        let cm = build_coupled_mesh(0.125, CoupledGeometry::DarcyStokes).unwrap();
        assert_eq!(cm.interface.num_segments(), 16);
        assert_eq!(cm.interface.num_vertices(), 17);
        for m in [&cm.fluid, &cm.porous] {
            assert!((m.total_area() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn darcy_stokes_dirichlet_tags() {
        let cm = build_coupled_mesh(0.125, CoupledGeometry::DarcyStokes).unwrap();
        let dir = cm.fluid.tagged_facets(FacetTag::DirF);
        assert_eq!(dir.len(), 16);
        for f in dir {
            let [a, b] = cm.fluid.facets[f].vertices;
            assert_eq!(cm.fluid.vertices[a][0], 0.0);
            assert_eq!(cm.fluid.vertices[b][0], 0.0);
        }
        assert!(cm.fluid.tagged_facets(FacetTag::Interface).len() == 16);
        assert!(cm.porous.tagged_facets(FacetTag::DirP).len() == 16);
        assert!(cm.porous.tagged_facets(FacetTag::NeuP).len() == 16);
    }

    #[test]
    fn interface_vertices_coincide() {
        let cm = build_coupled_mesh(1.0 / 16.0, CoupledGeometry::DarcyStokes).unwrap();
        let other = InterfaceMesh::from_side(&cm.porous, Side::Left).unwrap();
        assert_eq!(cm.interface.vertices, other.vertices);
        let ff = cm.interface.facet_map(&cm.fluid).unwrap();
        let fp = cm.interface.facet_map(&cm.porous).unwrap();
        assert_eq!(ff.len(), 32);
        assert_eq!(fp.len(), 32);
        for s in 0..32 {
            let mf = cm.fluid.facet_midpoint(ff[s]);
            let mp = cm.porous.facet_midpoint(fp[s]);
            assert_eq!(mf, mp);
        }
    }

    #[test]
    fn non_dyadic_h_rejected() {
        assert!(build_coupled_mesh(0.3, CoupledGeometry::DarcyStokes).is_err());
        assert!(build_coupled_mesh(1.0 / 12.0, CoupledGeometry::DarcyStokes).is_err());
    }

    #[test]
    fn misaligned_interface_detected() {
        let a = build_rect_mesh(0.0, 0.5, 0.0, 1.0, 2, 4).unwrap();
        let b = build_rect_mesh(0.0, 0.5, 0.0, 1.0, 2, 3).unwrap();
        let iface = InterfaceMesh::from_side(&a, Side::Right).unwrap();
        assert!(matches!(iface.facet_map(&b), Err(Error::Misaligned(_))));
    }

    #[test]
    fn dump_format() {
        let m = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let d = m.dump();
        assert!(d.starts_with("v 0 0\n"));
        assert!(d.contains("c 0 1 3\n"));
        assert_eq!(d.lines().count(), 6);
    }
}
