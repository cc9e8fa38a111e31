mod common;

use std::f64::consts::{PI, TAU};

use minsec_core::mesh::{build_transport, load_mesh, transport_power, write_obj, MeshError, TriMesh};
use minsec_core::meshgen;
use num_complex::Complex64;
use proptest::prelude::*;

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn load_single_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    let m = load_mesh(&p).unwrap();
    assert_eq!(m.n_faces(), 1);
    assert!((m.total_area() - 0.5).abs() < 1e-15);
    assert_eq!(m.boundary_loops().len(), 1);
    assert_eq!(m.boundary_loops()[0].len(), 3);
}

#[test]
fn load_fan_of_eight() {
    let dir = tempfile::tempdir().unwrap();
    let (p, t) = meshgen::disk_fan(8);
    let path = write_tmp(&dir, "fan.obj", &write_obj(&p, &t));
    let m = load_mesh(&path).unwrap();
    assert_eq!(m.n_faces(), 8);
    assert_eq!(m.n_interior_vertices(), 1);
    assert_eq!(m.boundary_loops()[0].len(), 8);
}

#[test]
fn closed_tetrahedron_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n";
    let err = load_mesh(write_tmp(&dir, "tet.obj", text)).unwrap_err();
    assert!(err.to_string().contains("no boundary loop"), "{err}");
}

#[test]
fn missing_file_names_the_path() {
    let err = load_mesh("/no/such/mesh.obj").unwrap_err();
    assert!(matches!(err, MeshError::NotFound(_)));
    assert_eq!(err.to_string(), "mesh not found: /no/such/mesh.obj");
}

#[test]
fn boundary_loops_follow_face_orientation() {
    for (name, m) in common::canned() {
        for be in m.boundary_edges() {
            let t = m.triangles()[be.face];
            let j = m.corner_of(be.face, be.from).unwrap();
            assert_eq!(t[(j + 1) % 3], be.to, "{name}");
        }
    }
}

#[test]
fn area_bookkeeping() {
    for (name, m) in common::canned() {
        let sv: f64 = m.vertex_areas().iter().sum();
        let sf: f64 = m.face_areas().iter().sum();
        assert!((sv - sf).abs() <= 1e-12 * sf, "{name}");
        assert!((sf - m.total_area()).abs() <= 1e-12 * sf, "{name}");
    }
}

#[test]
fn transports_have_unit_modulus() {
    for (name, m) in common::canned() {
        let a = build_transport(&m).unwrap();
        for f in 0..m.n_faces() {
            for j in 0..3 {
                assert!((a.rho(f, j).norm() - 1.0).abs() < 1e-12, "{name}");
            }
        }
    }
}

/// Product around the star of `v` of the transports through the far
/// endpoint of each shared edge.
fn star_holonomy(m: &TriMesh, a: &minsec_core::mesh::TransportAtlas, v: usize) -> Complex64 {
    let mut h = Complex64::new(1.0, 0.0);
    for &(f, j) in m.vertex_corners(v) {
        let t = m.triangles()[f];
        // the edge (v, w) with w the next vertex is shared with the neighbour
        let w = t[(j + 1) % 3];
        let e = m.face_edges()[f][(j + 2) % 3];
        let edge = &m.edges()[e];
        assert!(edge.v.contains(&v) && edge.v.contains(&w));
        let g = if edge.faces.0 == f { edge.faces.1 } else { Some(edge.faces.0) };
        let g = g.expect("interior vertex star is closed");
        let rw = |face: usize| a.rho(face, m.corner_of(face, w).unwrap());
        let rv = |face: usize| a.rho(face, m.corner_of(face, v).unwrap());
        // face f to face g, once through w and once back through v
        h *= rw(g) * rw(f).conj() * rv(f) * rv(g).conj();
    }
    h
}

#[test]
fn planar_holonomy_is_trivial() {
    let m = common::disk_fixture();
    for atlas in [build_transport(&m).unwrap(), common::random_planar_frames(&m, 5).0] {
        for v in 0..m.n_vertices() {
            if m.is_boundary_vertex(v) {
                continue;
            }
            let h = star_holonomy(&m, &atlas, v);
            assert!(h.arg().abs() < 1e-10, "vertex {v}: {}", h.arg());
        }
    }
}

#[test]
fn planar_interior_curvature_vanishes() {
    for m in [common::disk_fixture(), meshgen::mesh(meshgen::annulus(0.3, 1.0, 5, 20)).unwrap()] {
        let a = build_transport(&m).unwrap();
        for v in 0..m.n_vertices() {
            if !m.is_boundary_vertex(v) {
                assert!(a.vertex_curvature(v).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn frame_rotation_shows_up_as_phase() {
    let m = common::disk_fixture();
    let global = common::global_planar_frames(&m);
    let (rotated, alpha) = common::random_planar_frames(&m, 11);
    for f in 0..m.n_faces() {
        for (j, &v) in m.triangles()[f].iter().enumerate() {
            let expected = global.rho(f, j) * Complex64::from_polar(1.0, alpha[v]);
            assert!((rotated.rho(f, j) - expected).norm() < 1e-12);
        }
    }
}

#[test]
fn icosahedron_angle_defect_matches_angle_sum() {
    let m = meshgen::mesh(meshgen::open_icosahedron()).unwrap();
    let a = build_transport(&m).unwrap();
    let mut checked = 0;
    for v in 0..m.n_vertices() {
        if m.is_boundary_vertex(v) {
            continue;
        }
        // direct angle sum from positions
        let p = m.position(v);
        let sum: f64 = m
            .vertex_corners(v)
            .iter()
            .map(|&(f, j)| {
                let t = m.triangles()[f];
                let u = m.position(t[(j + 1) % 3]) - p;
                let w = m.position(t[(j + 2) % 3]) - p;
                u.angle(&w)
            })
            .sum();
        let defect = TAU - sum;
        assert!((a.angle_defect(v) - defect).abs() < 1e-12);
        // five equilateral corners
        assert!((a.angle_defect(v) - PI / 3.0).abs() < 1e-12);
        assert!((a.vertex_curvature(v) * m.vertex_area(v) - PI / 3.0).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked > 0);
}

/// Boundary turning angles from loop geometry: `π` minus the interior angle
/// of the surface at the vertex, measured from the incident edge vectors.
fn boundary_turning(m: &TriMesh) -> f64 {
    let mut total = 0.0;
    for lp in m.boundary_loops() {
        for &v in lp {
            let p = m.position(v);
            let inner: f64 = m
                .vertex_corners(v)
                .iter()
                .map(|&(f, j)| {
                    let t = m.triangles()[f];
                    (m.position(t[(j + 1) % 3]) - p).angle(&(m.position(t[(j + 2) % 3]) - p))
                })
                .sum();
            total += PI - inner;
        }
    }
    total
}

/// Planar loops: signed exterior angles between consecutive edges.
fn planar_turning(m: &TriMesh) -> f64 {
    let mut total = 0.0;
    for lp in m.boundary_loops() {
        let n = lp.len();
        for i in 0..n {
            let a = m.position(lp[(i + n - 1) % n]);
            let b = m.position(lp[i]);
            let c = m.position(lp[(i + 1) % n]);
            let (u, w) = (b - a, c - b);
            total += (u.x * w.y - u.y * w.x).atan2(u.dot(&w));
        }
    }
    total
}

#[test]
fn gauss_bonnet() {
    for (name, m) in common::canned() {
        let a = build_transport(&m).unwrap();
        let interior: f64 = (0..m.n_vertices())
            .filter(|&v| !m.is_boundary_vertex(v))
            .map(|v| a.vertex_curvature(v) * m.vertex_area(v))
            .sum();
        let chi = m.euler_characteristic() as f64;
        let total = interior + boundary_turning(&m);
        assert!((total - TAU * chi).abs() < 1e-8, "{name}: {total} vs {}", TAU * chi);
        if common::is_planar(&m) {
            // loop geometry oracle; inner loops of an annulus turn negatively
            assert!((boundary_turning(&m) - planar_turning(&m)).abs() < 1e-8, "{name}");
        }
    }
}

#[test]
fn edge_curvature_preserves_the_integral() {
    // the face-split transfer keeps ∫κ: Σ_e κ_e M̂_e equals Σ_T (mean κ)_T A_T
    // over faces that own at least one interior edge
    let m = meshgen::mesh(meshgen::spherical_cap(8, 1.0)).unwrap();
    let a = build_transport(&m).unwrap();
    let mut m_hat = vec![0.0; m.n_edges()];
    let mut faces = 0.0;
    for f in 0..m.n_faces() {
        let interior = m.face_edges()[f].iter().filter(|&&e| !m.edges()[e].is_boundary()).count();
        for &e in &m.face_edges()[f] {
            m_hat[e] += m.face_area(f) / 3.0;
        }
        if interior > 0 {
            let mean: f64 = m.triangles()[f].iter().map(|&v| a.vertex_curvature(v)).sum::<f64>() / 3.0;
            faces += mean * m.face_area(f);
        }
    }
    let edges: f64 = m.interior_edges().iter().map(|&e| a.edge_curvature(e) * m_hat[e]).sum();
    assert!((edges - faces).abs() < 1e-12 * faces.abs());
}

#[test]
fn edge_curvature_bounded_by_neighbour_faces() {
    // κ_e is a positive combination of the curvatures on its two faces
    let m = meshgen::mesh(meshgen::saddle(6, 0.4)).unwrap();
    let a = build_transport(&m).unwrap();
    for &e in m.interior_edges() {
        let (f, g) = m.edges()[e].faces;
        let vs: Vec<f64> = m.triangles()[f]
            .iter()
            .chain(&m.triangles()[g.unwrap()])
            .map(|&v| a.vertex_curvature(v))
            .collect();
        let lo = vs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let k = a.edge_curvature(e);
        // the weights sum to between 1 and 3 (3 when both faces own only this edge)
        assert!(k >= lo.min(3.0 * lo) - 1e-12 && k <= hi.max(3.0 * hi) + 1e-12);
    }
}

#[test]
fn non_incident_transport_is_an_error() {
    let m = meshgen::mesh(meshgen::disk_fan(6)).unwrap();
    let a = build_transport(&m).unwrap();
    // vertex 4 is not on face 0 = (0, 1, 2)
    assert!(matches!(
        transport_power(&m, &a, 4, 0, 1, 1),
        Err(MeshError::NotIncident { vertex: 4, face: 0 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transport_power_is_a_unit_homomorphism(k in -31i64..=31, d in 1u32..=6, seed in 0u64..1000) {
        let m = meshgen::mesh(meshgen::saddle(3, 0.5)).unwrap();
        let a = build_transport(&m).unwrap();
        let f = (seed as usize) % m.n_faces();
        let v = m.triangles()[f][(seed as usize / 7) % 3];
        let p = transport_power(&m, &a, v, f, k, d).unwrap();
        let q = transport_power(&m, &a, v, f, -k, d).unwrap();
        prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        prop_assert!((p * q - 1.0).norm() < 1e-12);
        let base = a.rho(f, m.corner_of(f, v).unwrap());
        prop_assert!((p - base.powf(-(k * d as i64) as f64)).norm() < 1e-9);
    }

    #[test]
    fn jittered_rectangles_keep_area_identities(nx in 2usize..9, ny in 2usize..9, jitter in 0.0f64..0.3) {
        let m = meshgen::mesh(meshgen::rectangle(nx, ny, 1.5, 1.0, jitter)).unwrap();
        let sv: f64 = m.vertex_areas().iter().sum();
        prop_assert!((sv - 1.5).abs() < 1e-12);
        prop_assert!((m.total_area() - 1.5).abs() < 1e-12);
        prop_assert_eq!(m.euler_characteristic(), 1);
        let a = build_transport(&m).unwrap();
        for v in 0..m.n_vertices() {
            if !m.is_boundary_vertex(v) {
                prop_assert!(a.vertex_curvature(v).abs() < 1e-10);
            }
        }
    }
}
