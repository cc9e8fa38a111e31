//! Indexed triangle meshes with boundary, plus the transport atlas built on top.

mod obj;
mod transport;

use std::path::Path;

use nalgebra::Vector3;

pub use crate::error::MeshError;
pub use obj::{parse_obj, write_obj};
pub use transport::{build_transport, build_transport_with_frames, transport_power, unit_power, TransportAtlas};

pub type Vec3 = Vector3<f64>;

/// Relative area floor below which a triangle counts as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, sorted ascending.
    pub v: [usize; 2],
    /// Incident faces; the second is `None` on the boundary.
    pub faces: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces.1.is_none()
    }
}

/// A boundary edge traversed along its loop, so `from -> to` agrees with the
/// orientation of its face.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub face: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    face_edges: Vec<[usize; 3]>,
    vertex_corners: Vec<Vec<(usize, usize)>>,
    boundary_vertex: Vec<bool>,
    boundary_loops: Vec<Vec<usize>>,
    boundary_edges: Vec<BoundaryEdge>,
    interior_edges: Vec<usize>,
    edge_dof: Vec<Option<usize>>,
    face_areas: Vec<f64>,
    face_normals: Vec<Vec3>,
    vertex_areas: Vec<f64>,
    vertex_normals: Vec<Vec3>,
    total_area: f64,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(MeshError::NotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (positions, triangles) = parse_obj(&text)?;
    TriMesh::new(positions, triangles)
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = positions.len();
        for (f, t) in triangles.iter().enumerate() {
            for &i in t {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        index: i as i64,
                    });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::RepeatedVertex { face: f });
            }
        }

        let mut face_areas = Vec::with_capacity(triangles.len());
        let mut face_normals = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let [a, b, c] = t.map(|i| positions[i]);
            let n = (b - a).cross(&(c - a));
            let len = n.norm();
            face_areas.push(0.5 * len);
            face_normals.push(if len > 0.0 { n / len } else { Vec3::zeros() });
        }
        let total_area: f64 = face_areas.iter().sum();
        let floor = DEGENERACY_FLOOR * total_area / triangles.len() as f64;
        for (f, &area) in face_areas.iter().enumerate() {
            if !(area >= floor) || area == 0.0 {
                return Err(MeshError::DegenerateTriangle { face: f, area });
            }
        }

        let mut vertex_corners = vec![Vec::new(); nv];
        for (f, t) in triangles.iter().enumerate() {
            for (j, &v) in t.iter().enumerate() {
                vertex_corners[v].push((f, j));
            }
        }
        if let Some(v) = vertex_corners.iter().position(|c| c.is_empty()) {
            return Err(MeshError::IsolatedVertex { vertex: v });
        }

        // (min, max, face, corner opposite, forward?)
        let mut half: Vec<(usize, usize, usize, usize, bool)> = Vec::with_capacity(3 * triangles.len());
        for (f, t) in triangles.iter().enumerate() {
            for j in 0..3 {
                let a = t[(j + 1) % 3];
                let b = t[(j + 2) % 3];
                half.push((a.min(b), a.max(b), f, j, a < b));
            }
        }
        half.sort_unstable();
        let mut edges = Vec::new();
        let mut face_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut i = 0;
        while i < half.len() {
            let mut j = i + 1;
            while j < half.len() && half[j].0 == half[i].0 && half[j].1 == half[i].1 {
                j += 1;
            }
            let e = edges.len();
            let (a, b) = (half[i].0, half[i].1);
            match j - i {
                1 => edges.push(Edge {
                    v: [a, b],
                    faces: (half[i].2, None),
                }),
                2 => {
                    if half[i].4 == half[i + 1].4 {
                        return Err(MeshError::InconsistentOrientation { edge: e, a, b });
                    }
                    edges.push(Edge {
                        v: [a, b],
                        faces: (half[i].2, Some(half[i + 1].2)),
                    });
                }
                count => return Err(MeshError::NonManifoldEdge { edge: e, a, b, count }),
            }
            for h in &half[i..j] {
                face_edges[h.2][h.3] = e;
            }
            i = j;
        }

        // Boundary half-edges follow face orientation, which walks each loop
        // with the surface on its left.
        let mut next: Vec<Option<(usize, usize)>> = vec![None; nv];
        let mut boundary_vertex = vec![false; nv];
        for (e, edge) in edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let f = edge.faces.0;
            let t = triangles[f];
            let j = (0..3).find(|&j| face_edges[f][j] == e).unwrap();
            let from = t[(j + 1) % 3];
            if next[from].is_some() {
                return Err(MeshError::NonManifoldVertex { vertex: from });
            }
            next[from] = Some((t[(j + 2) % 3], e));
            boundary_vertex[from] = true;
        }
        let mut boundary_loops = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut visited = vec![false; nv];
        for (e, edge) in edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let f = edge.faces.0;
            let j = (0..3).find(|&j| face_edges[f][j] == e).unwrap();
            let start = triangles[f][(j + 1) % 3];
            if visited[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = start;
            loop {
                if visited[v] {
                    return Err(MeshError::NonManifoldVertex { vertex: v });
                }
                visited[v] = true;
                lp.push(v);
                let (to, e) = next[v].ok_or(MeshError::NonManifoldVertex { vertex: v })?;
                boundary_edges.push(BoundaryEdge {
                    edge: e,
                    face: edges[e].faces.0,
                    from: v,
                    to,
                });
                v = to;
                if v == start {
                    break;
                }
            }
            boundary_loops.push(lp);
        }
        if boundary_loops.is_empty() {
            return Err(MeshError::NoBoundary);
        }

        // Fan check: a manifold vertex has one more edge than faces on the
        // boundary and as many edges as faces inside.
        let mut vertex_edge_count = vec![0usize; nv];
        for edge in &edges {
            vertex_edge_count[edge.v[0]] += 1;
            vertex_edge_count[edge.v[1]] += 1;
        }
        for v in 0..nv {
            let expect = vertex_corners[v].len() + usize::from(boundary_vertex[v]);
            if vertex_edge_count[v] != expect {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
        }

        let mut vertex_areas = vec![0.0; nv];
        let mut vertex_normals = vec![Vec3::zeros(); nv];
        for (f, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_areas[v] += face_areas[f] / 3.0;
                vertex_normals[v] += face_areas[f] * face_normals[f];
            }
        }
        for (v, n) in vertex_normals.iter_mut().enumerate() {
            let len = n.norm();
            if !(len > 0.0) {
                return Err(MeshError::ZeroNormal { vertex: v });
            }
            *n /= len;
        }

        let mut interior_edges = Vec::new();
        let mut edge_dof = vec![None; edges.len()];
        for (e, edge) in edges.iter().enumerate() {
            if !edge.is_boundary() {
                edge_dof[e] = Some(interior_edges.len());
                interior_edges.push(e);
            }
        }

        Ok(TriMesh {
            positions,
            triangles,
            edges,
            face_edges,
            vertex_corners,
            boundary_vertex,
            boundary_loops,
            boundary_edges,
            interior_edges,
            edge_dof,
            face_areas,
            face_normals,
            vertex_areas,
            vertex_normals,
            total_area,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_faces(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_corners(&self) -> usize {
        3 * self.triangles.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge opposite each corner of a face.
    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    /// `(face, corner)` pairs around a vertex, sorted by face.
    pub fn vertex_corners(&self, v: usize) -> &[(usize, usize)] {
        &self.vertex_corners[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    /// Boundary edges in loop order.
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    /// Index of an edge among the interior edges.
    pub fn edge_dof(&self, e: usize) -> Option<usize> {
        self.edge_dof[e]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_areas[f]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f]
    }

    pub fn vertex_area(&self, v: usize) -> f64 {
        self.vertex_areas[v]
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn vertex_normal(&self, v: usize) -> Vec3 {
        self.vertex_normals[v]
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    /// Interior angle of a face at one of its corners.
    pub fn corner_angle(&self, f: usize, j: usize) -> f64 {
        let t = self.triangles[f];
        let p = self.positions[t[j]];
        let a = self.positions[t[(j + 1) % 3]] - p;
        let b = self.positions[t[(j + 2) % 3]] - p;
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let t = self.triangles[f];
        (self.positions[t[0]] + self.positions[t[1]] + self.positions[t[2]]) / 3.0
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec3 {
        let [a, b] = self.edges[e].v;
        0.5 * (self.positions[a] + self.positions[b])
    }

    /// Corner index of vertex `v` in face `f`.
    pub fn corner_of(&self, f: usize, v: usize) -> Option<usize> {
        self.triangles[f].iter().position(|&u| u == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle() {
        let m = tri();
        assert_eq!(m.n_faces(), 1);
        assert_eq!(m.total_area(), 0.5);
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0], vec![0, 1, 2]);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn tetrahedron_has_no_boundary() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let err = TriMesh::new(p, t).unwrap_err();
        assert_eq!(err.to_string(), "no boundary loop");
    }

    #[test]
    fn three_faces_on_an_edge() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let t = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        match TriMesh::new(p, t).unwrap_err() {
            MeshError::NonManifoldEdge { a, b, count, .. } => {
                assert_eq!((a, b, count), (0, 1, 3));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn degenerate_face_is_named() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let t = vec![[0, 1, 2], [0, 3, 1]];
        match TriMesh::new(p, t).unwrap_err() {
            MeshError::DegenerateTriangle { face, .. } => assert_eq!(face, 1),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn flipped_neighbour_is_rejected() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let t = vec![[0, 1, 2], [1, 2, 3]];
        assert!(matches!(
            TriMesh::new(p, t),
            Err(MeshError::InconsistentOrientation { .. })
        ));
    }
}
