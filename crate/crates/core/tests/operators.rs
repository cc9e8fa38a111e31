mod common;

use common::props;
use minsec_core::mesh::{build_transport, TriMesh, Vec3};
use minsec_core::meshgen;
use minsec_core::operators::{
    assemble_cr, assemble_dirichlet, assemble_l, assemble_l0, assemble_linear_fem, assemble_p, vertex_mass,
    OperatorSet,
};
use minsec_core::sparse::{apply, triplets, Cholesky};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

const K_MAX: i64 = 7;

#[test]
fn hermitian_on_canned_meshes() {
    for (name, m) in common::canned() {
        for d in [1, 4] {
            let e = props::hermitian_error(&m, d, 0.7, K_MAX);
            assert!(e <= 1e-12, "{name} d={d}: {e:e}");
        }
    }
}

#[test]
fn negative_frequency_is_the_conjugate() {
    for (name, m) in common::canned() {
        let e = props::conjugation_error(&m, 2, 1.0, K_MAX);
        assert!(e <= 1e-12, "{name}: {e:e}");
    }
}

#[test]
fn parallel_field_has_zero_energy() {
    for (name, m) in common::canned() {
        let (atlas, alphas) = common::random_planar_frames(&m, 3);
        for d in [1, 2, 4] {
            if let Some(e) = props::planar_zero_energy(&m, &atlas, &alphas, d, 9) {
                assert!(e < 1e-10, "{name} d={d}: {e:e}");
            }
        }
    }
}

#[test]
fn cr_stokes_identity() {
    for (name, m) in common::canned() {
        let e = props::cr_stokes_error(&m, 17);
        assert!(e < 1e-10, "{name}: {e:e}");
    }
    // the 50-face disk of the oracle
    let m = meshgen::mesh(meshgen::disk(3, 1.0)).unwrap();
    assert!((48..=60).contains(&m.n_faces()));
    assert!(props::cr_stokes_error(&m, 2) < 1e-10);
}

#[test]
fn fejer_nonnegative_on_boundaries() {
    for (name, m) in common::canned() {
        for n in [8, 16, 64] {
            let lo = props::fejer_min(&m, 4, n);
            assert!(lo >= -1e-12, "{name} N={n}: {lo:e}");
        }
    }
}

#[test]
fn gauss_bonnet_on_canned_meshes() {
    for (name, m) in common::canned() {
        let e = props::gauss_bonnet_error(&m);
        assert!(e < 1e-8, "{name}: {e:e}");
    }
}

#[test]
fn right_triangle_gradients_and_mass() {
    let m = meshgen::mesh(meshgen::triangle()).unwrap();
    let a = build_transport(&m).unwrap();
    let fem = assemble_linear_fem(&m, &a);
    // leg-aligned face frame: first axis along (1,0,0)
    assert!((a.face_frame(0)[0] - Vec3::x()).norm() < 1e-15);
    let g = fem.grads[0];
    assert!((g[0][0] + 1.0).abs() < 1e-14 && (g[0][1] + 1.0).abs() < 1e-14);
    let mass: f64 = triplets(&fem.m).iter().map(|t| t.2).sum();
    assert!((mass - 0.5).abs() < 1e-15);
}

#[test]
fn linear_fem_identities() {
    for (name, m) in common::canned() {
        let a = build_transport(&m).unwrap();
        let fem = assemble_linear_fem(&m, &a);
        for f in 0..m.n_faces() {
            let s: [f64; 2] = std::array::from_fn(|ax| (0..3).map(|j| fem.grads[f][j][ax]).sum());
            assert!(s[0].abs() < 1e-10 && s[1].abs() < 1e-10, "{name}: partition of unity");
        }
        let mut per_face = vec![0.0; m.n_faces()];
        for (i, j, v) in triplets(&fem.m) {
            assert_eq!(i / 3, j / 3, "{name}: mass couples faces");
            per_face[i / 3] += v;
            let expect = if i == j { m.face_area(i / 3) / 6.0 } else { m.face_area(i / 3) / 12.0 };
            assert!((v - expect).abs() < 1e-15);
        }
        for f in 0..m.n_faces() {
            assert!((per_face[f] - m.face_area(f)).abs() < 1e-14);
        }
        let mut rows = vec![0.0; 2 * m.n_faces()];
        for (i, _, v) in triplets(&fem.u) {
            rows[i] += v;
        }
        assert!(rows.iter().all(|r| (r - 1.0).abs() < 1e-15), "{name}: averaging rows");
    }
}

#[test]
fn transport_matrices() {
    let m = common::disk_fixture();
    let global = common::global_planar_frames(&m);
    for k in [-3, 1, 5] {
        // one shared vertex frame: the phase only depends on the face frame
        let mut row = vec![Complex64::new(0.0, 0.0); m.n_corners()];
        for (c, _, v) in triplets(&assemble_p(&m, &global, k, 4)) {
            row[c] = v;
        }
        for c in row.chunks(3) {
            assert!((c[0] - c[1]).norm() < 1e-12 && (c[0] - c[2]).norm() < 1e-12);
        }
    }
    let a = build_transport(&m).unwrap();
    let p0 = assemble_p(&m, &a, 0, 3);
    let t0 = triplets(&p0);
    assert_eq!(t0.len(), m.n_corners());
    assert!(t0.iter().all(|t| t.2 == Complex64::new(1.0, 0.0)));
    for (c, v, _) in t0 {
        assert_eq!(m.triangles()[c / 3][c % 3], v);
    }
    let (pk, pm) = (triplets(&assemble_p(&m, &a, 2, 3)), triplets(&assemble_p(&m, &a, -2, 3)));
    for (x, y) in pk.iter().zip(&pm) {
        assert_eq!((x.0, x.1), (y.0, y.1));
        assert!((x.2.conj() - y.2).norm() < 1e-15);
        assert!((x.2.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn frequency_zero_is_the_scalar_stiffness() {
    let m = common::disk_fixture();
    let a = common::global_planar_frames(&m);
    let fem = assemble_linear_fem(&m, &a);
    let l0 = props::dense(&assemble_l(&m, &a, &fem, 0, 1, 1.0).unwrap());
    let s = assemble_l0(&m, &fem);
    let mut sd = vec![vec![0.0; m.n_vertices()]; m.n_vertices()];
    for (i, j, v) in triplets(&s) {
        sd[i][j] += v;
    }
    for i in 0..l0.len() {
        for j in 0..l0.len() {
            assert!((l0[i][j].re - sd[i][j]).abs() < 1e-12 && l0[i][j].im.abs() < 1e-15);
        }
    }
    let ones = vec![1.0; m.n_vertices()];
    assert!(apply(&s, &ones).iter().all(|x| x.abs() < 1e-10));

    // cotangent formula as an independent oracle for one interior edge weight
    let e = m.interior_edges()[10];
    let [u, v] = m.edges()[e].v;
    let (f, g) = m.edges()[e].faces;
    let cot = |face: usize| {
        let t = m.triangles()[face];
        let o = *t.iter().find(|&&x| x != u && x != v).unwrap();
        let (p, q) = (m.position(u) - m.position(o), m.position(v) - m.position(o));
        p.dot(&q) / p.cross(&q).norm()
    };
    let w = -0.5 * (cot(f) + cot(g.unwrap()));
    assert!((sd[u][v] - w).abs() < 1e-12);
}

#[test]
fn l1_is_positive_definite_with_mass_floor() {
    let m = common::disk_fixture();
    let a = build_transport(&m).unwrap();
    let fem = assemble_linear_fem(&m, &a);
    let l1 = assemble_l(&m, &a, &fem, 1, 1, 1.0).unwrap();
    assert!(Cholesky::new(&l1).is_some());
    let mass = vertex_mass(&m);
    let mut rng = common::rng(4);
    for _ in 0..10 {
        let x: Vec<Complex64> = (0..m.n_vertices())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let lx = apply(&l1, &x);
        let q: f64 = x.iter().zip(&lx).map(|(a, b)| (a.conj() * b).re).sum();
        let mx: Vec<Complex64> = apply(&mass, &x);
        let qm: f64 = x.iter().zip(&mx).map(|(a, b)| (a.conj() * b).re).sum();
        assert!(q >= qm * (1.0 - 1e-12) && qm > 0.0);
    }
}

#[test]
fn radius_scales_only_the_vertical_term() {
    let m = meshgen::mesh(meshgen::saddle(5, 0.4)).unwrap();
    let a = build_transport(&m).unwrap();
    let fem = assemble_linear_fem(&m, &a);
    for k in [1i64, 3] {
        let dir = props::dense(&assemble_dirichlet(&m, &a, &fem, k, 2));
        let l1 = props::dense(&assemble_l(&m, &a, &fem, k, 2, 0.8).unwrap());
        let l2 = props::dense(&assemble_l(&m, &a, &fem, k, 2, 1.6).unwrap());
        for i in 0..dir.len() {
            for j in 0..dir.len() {
                let v1 = l1[i][j] - dir[i][j];
                let v2 = l2[i][j] - dir[i][j];
                assert!((v2 * 4.0 - v1).norm() < 1e-12);
            }
        }
    }
    assert!(assemble_l(&m, &a, &fem, 1, 1, 0.0).is_err());
    assert!(assemble_l(&m, &a, &fem, 1, 1, -1.0).is_err());
}

fn two_right_triangles() -> TriMesh {
    TriMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ],
        vec![[0, 1, 2], [1, 3, 2]],
    )
    .unwrap()
}

#[test]
fn cr_two_triangle_hand_assembly() {
    let m = two_right_triangles();
    let a = build_transport(&m).unwrap();
    let cr = assemble_cr(&m, &assemble_linear_fem(&m, &a)).unwrap();
    // ψ = 1 − 2λ_opp: |∇ψ|² = 8 on each half-unit face
    let l = triplets(&cr.l_hat);
    assert_eq!(l.len(), 1);
    assert!((l[0].2 - 8.0).abs() < 1e-12);
    assert!((cr.m_hat[0] - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn cr_lumped_mass_and_boundary_support() {
    for (name, m) in common::canned().into_iter().skip(1) {
        let a = build_transport(&m).unwrap();
        let cr = assemble_cr(&m, &assemble_linear_fem(&m, &a)).unwrap();
        for (q, &e) in m.interior_edges().iter().enumerate() {
            let (f, g) = m.edges()[e].faces;
            let expect = (m.face_area(f) + m.face_area(g.unwrap())) / 3.0;
            assert!((cr.m_hat[q] - expect).abs() < 1e-15, "{name}");
        }
        // L̂·1 lives next to the eliminated boundary edges
        let l1 = apply(&cr.l_hat, &vec![1.0; cr.m_hat.len()]);
        for (q, &e) in m.interior_edges().iter().enumerate() {
            let (f, g) = m.edges()[e].faces;
            let touches = [f, g.unwrap()]
                .iter()
                .any(|&t| m.face_edges()[t].iter().any(|&x| m.edges()[x].is_boundary()));
            if !touches {
                assert!(l1[q].abs() < 1e-10, "{name}: row {q}");
            }
        }
        let sym = triplets(&cr.l_hat);
        let mut dense = vec![vec![0.0; cr.m_hat.len()]; cr.m_hat.len()];
        for (i, j, v) in sym {
            dense[i][j] += v;
        }
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                assert!((dense[i][j] - dense[j][i]).abs() < 1e-12);
            }
        }
    }
    let lone = meshgen::mesh(meshgen::triangle()).unwrap();
    let a = build_transport(&lone).unwrap();
    assert!(assemble_cr(&lone, &assemble_linear_fem(&lone, &a)).is_err());
}

#[test]
fn operator_set_is_consistent() {
    let m = meshgen::mesh(meshgen::spherical_cap(4, 0.8)).unwrap();
    let a = build_transport(&m).unwrap();
    let ops = OperatorSet::new(&m, &a, 2, 1.0, 7).unwrap();
    assert_eq!(ops.p.len(), 15);
    assert_eq!(ops.l.len(), 8);
    assert_eq!(ops.n_boundary_rows(), m.boundary_edges().len());
    let direct = props::dense(&assemble_l(&m, &a, &ops.fem, 3, 2, 1.0).unwrap());
    let cached = props::dense(&ops.l[3]);
    assert_eq!(direct, cached);
    assert!(OperatorSet::new(&m, &a, 2, 0.0, 7).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hermitian_on_jittered_rectangles(nx in 2usize..6, ny in 2usize..6, jitter in 0.0f64..0.3, d in 1u32..5, r in 0.1f64..3.0) {
        let m = meshgen::mesh(meshgen::rectangle(nx, ny, 1.0, 1.0, jitter)).unwrap();
        prop_assert!(props::hermitian_error(&m, d, r, 3) <= 1e-12);
        prop_assert!(props::conjugation_error(&m, d, r, 3) <= 1e-12);
        prop_assert!(props::cr_stokes_error(&m, nx as u64) < 1e-10);
    }

    #[test]
    fn parallel_fields_on_random_frames(seed in 0u64..10_000, d in 1u32..7) {
        let m = meshgen::mesh(meshgen::rectangle(4, 3, 1.0, 0.7, 0.2)).unwrap();
        let (atlas, alphas) = common::random_planar_frames(&m, seed);
        prop_assert!(props::planar_zero_energy(&m, &atlas, &alphas, d, seed).unwrap() < 1e-10);
    }
}
