use std::f64::consts::PI;

use num_complex::Complex64;

use super::{TriMesh, Vec3};
use crate::error::MeshError;

/// Frames, vertex-to-face transports and angle-defect curvature.
#[derive(Clone, Debug)]
pub struct TransportAtlas {
    vertex_frames: Vec<[Vec3; 2]>,
    face_frames: Vec<[Vec3; 2]>,
    rho: Vec<[Complex64; 3]>,
    angle_defect: Vec<f64>,
    vertex_curvature: Vec<f64>,
    edge_curvature: Vec<f64>,
}

pub fn build_transport(mesh: &TriMesh) -> Result<TransportAtlas, MeshError> {
    let mut frames = Vec::with_capacity(mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        frames.push(default_vertex_frame(mesh, v)?);
    }
    build_transport_with_frames(mesh, frames)
}

fn default_vertex_frame(mesh: &TriMesh, v: usize) -> Result<[Vec3; 2], MeshError> {
    let n = mesh.vertex_normal(v);
    let p = mesh.position(v);
    for &(f, j) in mesh.vertex_corners(v) {
        let t = mesh.triangles()[f];
        for other in [t[(j + 1) % 3], t[(j + 2) % 3]] {
            let e = mesh.position(other) - p;
            let e = e - e.dot(&n) * n;
            let len = e.norm();
            if len > 1e-14 * (mesh.position(other) - p).norm() {
                let e1 = e / len;
                return Ok([e1, n.cross(&e1)]);
            }
        }
    }
    Err(MeshError::ZeroNormal { vertex: v })
}

/// Rotation taking unit `a` to unit `b` about `a × b`, applied to `x`.
fn rotate_between(a: &Vec3, b: &Vec3, x: &Vec3) -> Option<Vec3> {
    let c = a.dot(b);
    if c <= -1.0 + 1e-12 {
        return None;
    }
    let w = a.cross(b);
    let wx = w.cross(x);
    Some(x + wx + w.cross(&wx) / (1.0 + c))
}

/// Builds the atlas with caller-supplied orthonormal tangent frames at the
/// vertices (first axis, second axis).
pub fn build_transport_with_frames(
    mesh: &TriMesh,
    vertex_frames: Vec<[Vec3; 2]>,
) -> Result<TransportAtlas, MeshError> {
    let nf = mesh.n_faces();
    let mut face_frames = Vec::with_capacity(nf);
    let mut rho = Vec::with_capacity(nf);
    for f in 0..nf {
        let t = mesh.triangles()[f];
        let n = mesh.face_normal(f);
        let e1 = (mesh.position(t[1]) - mesh.position(t[0])).normalize();
        let e2 = n.cross(&e1);
        let mut r = [Complex64::new(1.0, 0.0); 3];
        for j in 0..3 {
            let a = t[j];
            let x = rotate_between(&mesh.vertex_normal(a), &n, &vertex_frames[a][0])
                .ok_or(MeshError::OppositeNormals { vertex: a, face: f })?;
            let z = Complex64::new(x.dot(&e1), x.dot(&e2));
            r[j] = z / z.norm();
        }
        face_frames.push([e1, e2]);
        rho.push(r);
    }

    let nv = mesh.n_vertices();
    let mut angle_sum = vec![0.0; nv];
    for f in 0..nf {
        for (j, &v) in mesh.triangles()[f].iter().enumerate() {
            angle_sum[v] += mesh.corner_angle(f, j);
        }
    }
    let angle_defect: Vec<f64> = (0..nv)
        .map(|v| {
            let flat = if mesh.is_boundary_vertex(v) { PI } else { 2.0 * PI };
            flat - angle_sum[v]
        })
        .collect();

    let mut vertex_curvature = vec![0.0; nv];
    for v in 0..nv {
        if !mesh.is_boundary_vertex(v) {
            vertex_curvature[v] = angle_defect[v] / mesh.vertex_area(v);
        }
    }
    // Boundary vertices take the area-weighted mean of their interior
    // neighbours' curvature; the boundary turning is carried by the boundary
    // data instead.
    let mut acc = vec![(0.0, 0.0); nv];
    for e in mesh.edges() {
        let [a, b] = e.v;
        for (p, q) in [(a, b), (b, a)] {
            if mesh.is_boundary_vertex(p) && !mesh.is_boundary_vertex(q) {
                let w = mesh.vertex_area(q);
                acc[p].0 += w * vertex_curvature[q];
                acc[p].1 += w;
            }
        }
    }
    for v in 0..nv {
        if mesh.is_boundary_vertex(v) && acc[v].1 > 0.0 {
            vertex_curvature[v] = acc[v].0 / acc[v].1;
        }
    }
    // Interior edges carry the face-averaged curvature of their faces, each
    // face split evenly over its interior edges, so the edge-mass-weighted
    // sum covers the whole area. Boundary edges take their endpoint mean.
    let mut edge_curvature: Vec<f64> = mesh
        .edges()
        .iter()
        .map(|e| 0.5 * (vertex_curvature[e.v[0]] + vertex_curvature[e.v[1]]))
        .collect();
    let mut integrated = vec![(0.0, 0.0); mesh.n_edges()];
    for f in 0..nf {
        let fe = mesh.face_edges()[f];
        let n_int = fe.iter().filter(|&&e| !mesh.edges()[e].is_boundary()).count();
        if n_int == 0 {
            continue;
        }
        let a = mesh.face_area(f);
        let k: f64 = mesh.triangles()[f].iter().map(|&v| vertex_curvature[v]).sum::<f64>() / 3.0;
        for &e in &fe {
            if !mesh.edges()[e].is_boundary() {
                integrated[e].0 += a * k / n_int as f64;
                integrated[e].1 += a / 3.0;
            }
        }
    }
    for (e, (k, m)) in integrated.into_iter().enumerate() {
        if m > 0.0 {
            edge_curvature[e] = k / m;
        }
    }

    Ok(TransportAtlas {
        vertex_frames,
        face_frames,
        rho,
        angle_defect,
        vertex_curvature,
        edge_curvature,
    })
}

/// `ρ_{a→T}^{-k·d}`.
pub fn transport_power(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    a: usize,
    t: usize,
    k: i64,
    d: u32,
) -> Result<Complex64, MeshError> {
    let j = mesh
        .corner_of(t, a)
        .ok_or(MeshError::NotIncident { vertex: a, face: t })?;
    Ok(unit_power(atlas.rho[t][j], -k * d as i64))
}

/// Integer power of a unit complex number, renormalized.
pub fn unit_power(z: Complex64, n: i64) -> Complex64 {
    let w = z.powi(n as i32);
    w / w.norm()
}

impl TransportAtlas {
    pub fn vertex_frame(&self, v: usize) -> [Vec3; 2] {
        self.vertex_frames[v]
    }

    pub fn vertex_frames(&self) -> &[[Vec3; 2]] {
        &self.vertex_frames
    }

    pub fn face_frame(&self, f: usize) -> [Vec3; 2] {
        self.face_frames[f]
    }

    /// Transport from the vertex at corner `j` into face `f`.
    pub fn rho(&self, f: usize, j: usize) -> Complex64 {
        self.rho[f][j]
    }

    /// Angle defect with flat reference 2π inside and π on the boundary
    /// (integrated, radians).
    pub fn angle_defect(&self, v: usize) -> f64 {
        self.angle_defect[v]
    }

    pub fn vertex_curvature(&self, v: usize) -> f64 {
        self.vertex_curvature[v]
    }

    pub fn vertex_curvatures(&self) -> &[f64] {
        &self.vertex_curvature
    }

    pub fn edge_curvature(&self, e: usize) -> f64 {
        self.edge_curvature[e]
    }

    pub fn edge_curvatures(&self) -> &[f64] {
        &self.edge_curvature
    }

    /// Coordinates of a 3-vector in a face frame.
    pub fn to_face(&self, f: usize, x: &Vec3) -> [f64; 2] {
        let [e1, e2] = self.face_frames[f];
        [x.dot(&e1), x.dot(&e2)]
    }

    /// Coordinates of a 3-vector in a vertex frame, as a complex number.
    pub fn to_vertex(&self, v: usize, x: &Vec3) -> Complex64 {
        let [e1, e2] = self.vertex_frames[v];
        Complex64::new(x.dot(&e1), x.dot(&e2))
    }

    /// The 3-vector with complex coordinate `z` in the frame of `v`.
    pub fn from_vertex(&self, v: usize, z: Complex64) -> Vec3 {
        let [e1, e2] = self.vertex_frames[v];
        z.re * e1 + z.im * e2
    }
}
