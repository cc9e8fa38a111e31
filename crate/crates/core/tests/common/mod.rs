#![allow(dead_code)]

pub mod props;

use minsec_core::mesh::{build_transport_with_frames, TransportAtlas, TriMesh, Vec3};
use minsec_core::meshgen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The five canned property-suite meshes.
pub fn canned() -> Vec<(&'static str, TriMesh)> {
    vec![
        ("triangle", meshgen::mesh(meshgen::triangle()).unwrap()),
        ("disk fan", meshgen::mesh(meshgen::disk_fan(8)).unwrap()),
        ("annulus", meshgen::mesh(meshgen::annulus(0.4, 1.0, 4, 16)).unwrap()),
        ("spherical cap", meshgen::mesh(meshgen::spherical_cap(6, 0.9)).unwrap()),
        ("saddle", meshgen::mesh(meshgen::saddle(6, 0.4)).unwrap()),
    ]
}

pub fn is_planar(mesh: &TriMesh) -> bool {
    mesh.positions().iter().all(|p| p.z.abs() < 1e-14)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tangent frames from the normal at each vertex, rotated by random angles.
/// Returns the atlas and the angles relative to the global `x` axis when the
/// mesh lies in the `xy` plane.
pub fn random_planar_frames(mesh: &TriMesh, seed: u64) -> (TransportAtlas, Vec<f64>) {
    let mut r = rng(seed);
    let alphas: Vec<f64> = (0..mesh.n_vertices()).map(|_| r.gen_range(-3.0..3.0)).collect();
    let frames = alphas
        .iter()
        .map(|&a| [Vec3::new(a.cos(), a.sin(), 0.0), Vec3::new(-a.sin(), a.cos(), 0.0)])
        .collect();
    (build_transport_with_frames(mesh, frames).unwrap(), alphas)
}

/// Global `x`/`y` frames on a planar mesh.
pub fn global_planar_frames(mesh: &TriMesh) -> TransportAtlas {
    let frames = vec![[Vec3::x(), Vec3::y()]; mesh.n_vertices()];
    build_transport_with_frames(mesh, frames).unwrap()
}

pub fn disk_fixture() -> TriMesh {
    // 217 vertices
    meshgen::mesh(meshgen::disk(8, 1.0)).unwrap()
}
