//! Procedural meshes used as fixtures and by the `minsec-meshgen` tool.

use std::f64::consts::PI;

use crate::mesh::{MeshError, TriMesh, Vec3};

pub type Soup = (Vec<Vec3>, Vec<[usize; 3]>);

// Ring offsets; irrational so consecutive rings never line up.
const RING_TWIST: f64 = 0.618_033_988_749_894_9;

/// Connects two concentric rings of vertex ids by angular merging; `inner`
/// and `outer` are listed CCW with their angles.
fn zipper(inner: &[(usize, f64)], outer: &[(usize, f64)], tris: &mut Vec<[usize; 3]>) {
    let na = inner.len();
    let nb = outer.len();
    let tau = 2.0 * PI;
    let a0 = inner[0].1;
    // outer walk starts at the last vertex at or before a0
    let (start, b0) = outer
        .iter()
        .enumerate()
        .map(|(j, &(_, t))| (j, a0 + (t - a0).rem_euclid(tau)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let b0 = b0 - tau;
    let ang_a = |i: usize| a0 + (inner[i % na].1 - a0).rem_euclid(tau) + tau * (i / na) as f64;
    let ang_b = |j: usize| b0 + (outer[(start + j) % nb].1 - b0).rem_euclid(tau) + tau * (j / nb) as f64;
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_outer = if i == na {
            true
        } else if j == nb {
            false
        } else {
            ang_b(j + 1) <= ang_a(i + 1)
        };
        let a = inner[i % na].0;
        let b = outer[(start + j) % nb].0;
        if advance_outer {
            tris.push([a, b, outer[(start + j + 1) % nb].0]);
            j += 1;
        } else {
            tris.push([a, b, inner[(i + 1) % na].0]);
            i += 1;
        }
    }
}

fn rescale_area(p: &mut [Vec3], tris: &[[usize; 3]], target: f64) {
    let area: f64 = tris
        .iter()
        .map(|t| 0.5 * (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).norm())
        .sum();
    let s = (target / area).sqrt();
    for x in p.iter_mut() {
        *x *= s;
    }
}

/// Flat disk of `rings` concentric rings (ring `i` has `6i` vertices), scaled
/// to the given area. Vertex count is `1 + 3·rings·(rings+1)`.
pub fn disk(rings: usize, area: f64) -> Soup {
    let (mut p, t) = disk_unit_radius(rings);
    rescale_area(&mut p, &t, area);
    (p, t)
}

fn disk_unit_radius(rings: usize) -> Soup {
    assert!(rings >= 1);
    let mut p = vec![Vec3::zeros()];
    let mut t = Vec::new();
    let mut prev: Vec<(usize, f64)> = Vec::new();
    for i in 1..=rings {
        let n = 6 * i;
        let rad = i as f64 / rings as f64;
        let off = RING_TWIST * i as f64;
        let ring: Vec<(usize, f64)> = (0..n)
            .map(|m| {
                let th = off + 2.0 * PI * m as f64 / n as f64;
                p.push(Vec3::new(rad * th.cos(), rad * th.sin(), 0.0));
                (p.len() - 1, th)
            })
            .collect();
        if i == 1 {
            for m in 0..n {
                t.push([0, ring[m].0, ring[(m + 1) % n].0]);
            }
        } else {
            zipper(&prev, &ring, &mut t);
        }
        prev = ring;
    }
    (p, t)
}

/// Smallest ring count whose disk has at least `n` vertices.
pub fn disk_rings_for(n: usize) -> usize {
    (1..).find(|&r| 1 + 3 * r * (r + 1) >= n).unwrap()
}

/// Center plus `rim` vertices on the unit circle.
pub fn disk_fan(rim: usize) -> Soup {
    let mut p = vec![Vec3::zeros()];
    for m in 0..rim {
        let th = 2.0 * PI * m as f64 / rim as f64;
        p.push(Vec3::new(th.cos(), th.sin(), 0.0));
    }
    let t = (0..rim).map(|m| [0, 1 + m, 1 + (m + 1) % rim]).collect();
    (p, t)
}

pub fn triangle() -> Soup {
    (
        vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    )
}

/// Flat annulus between radii `r0 < r1` with `rings + 1` circles of roughly
/// even spacing and `around` vertices on the inner circle.
pub fn annulus(r0: f64, r1: f64, rings: usize, around: usize) -> Soup {
    let mut p = Vec::new();
    let mut t = Vec::new();
    let mut prev: Vec<(usize, f64)> = Vec::new();
    for i in 0..=rings {
        let rad = r0 + (r1 - r0) * i as f64 / rings as f64;
        let n = ((around as f64) * rad / r0).round().max(3.0) as usize;
        let off = RING_TWIST * i as f64;
        let ring: Vec<(usize, f64)> = (0..n)
            .map(|m| {
                let th = off + 2.0 * PI * m as f64 / n as f64;
                p.push(Vec3::new(rad * th.cos(), rad * th.sin(), 0.0));
                (p.len() - 1, th)
            })
            .collect();
        if i > 0 {
            zipper(&prev, &ring, &mut t);
        }
        prev = ring;
    }
    (p, t)
}

/// Annulus whose ring radii grow geometrically, so faces stay close to
/// equilateral at every radius.
pub fn graded_annulus(r0: f64, r1: f64, around: usize) -> Soup {
    let h = 2.0 * PI / around as f64;
    let rings = ((r1 / r0).ln() / h).ceil().max(1.0) as usize;
    let mut p = Vec::new();
    let mut t = Vec::new();
    let mut prev: Vec<(usize, f64)> = Vec::new();
    for i in 0..=rings {
        let rad = r0 * (r1 / r0).powf(i as f64 / rings as f64);
        let n = ((around as f64) * rad / r0).round() as usize;
        let off = RING_TWIST * i as f64;
        let ring: Vec<(usize, f64)> = (0..n)
            .map(|m| {
                let th = off + 2.0 * PI * m as f64 / n as f64;
                p.push(Vec3::new(rad * th.cos(), rad * th.sin(), 0.0));
                (p.len() - 1, th)
            })
            .collect();
        if i > 0 {
            zipper(&prev, &ring, &mut t);
        }
        prev = ring;
    }
    (p, t)
}

/// Cap of the unit sphere with polar half-angle `alpha`, from a ring disk.
pub fn spherical_cap(rings: usize, alpha: f64) -> Soup {
    let (p, t) = disk_unit_radius(rings);
    let p = p
        .into_iter()
        .map(|x| {
            let rho = x.xy().norm();
            let polar = alpha * rho;
            let az = x.y.atan2(x.x);
            Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos())
        })
        .collect();
    (p, t)
}

/// Ring disk of unit radius lifted onto `z = a(x² − y²)`.
pub fn saddle(rings: usize, a: f64) -> Soup {
    let (p, t) = disk_unit_radius(rings);
    let p = p
        .into_iter()
        .map(|x| Vec3::new(x.x, x.y, a * (x.x * x.x - x.y * x.y)))
        .collect();
    (p, t)
}

/// `nx × ny` cells over `[0, w] × [0, h]`, split along alternating
/// diagonals; interior vertices are nudged by a fixed pseudo-random pattern
/// of relative size `jitter`.
pub fn rectangle(nx: usize, ny: usize, w: f64, h: f64, jitter: f64) -> Soup {
    let mut p = Vec::with_capacity((nx + 1) * (ny + 1));
    let (dx, dy) = (w / nx as f64, h / ny as f64);
    for j in 0..=ny {
        for i in 0..=nx {
            let mut x = i as f64 * dx;
            let mut y = j as f64 * dy;
            if i > 0 && i < nx && j > 0 && j < ny {
                let s = ((i * 7919 + j * 104_729) as f64 * RING_TWIST).fract() - 0.5;
                let c = ((i * 15_485_863 + j * 32_452_843) as f64 * RING_TWIST).fract() - 0.5;
                x += jitter * dx * s;
                y += jitter * dy * c;
            }
            p.push(Vec3::new(x, y, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                t.push([a, b, c]);
                t.push([a, c, d]);
            } else {
                t.push([a, b, d]);
                t.push([b, c, d]);
            }
        }
    }
    (p, t)
}

/// Regular icosahedron with one face removed, circumradius 1.
pub fn open_icosahedron() -> Soup {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut p = vec![
        Vec3::new(-1.0, g, 0.0),
        Vec3::new(1.0, g, 0.0),
        Vec3::new(-1.0, -g, 0.0),
        Vec3::new(1.0, -g, 0.0),
        Vec3::new(0.0, -1.0, g),
        Vec3::new(0.0, 1.0, g),
        Vec3::new(0.0, -1.0, -g),
        Vec3::new(0.0, 1.0, -g),
        Vec3::new(g, 0.0, -1.0),
        Vec3::new(g, 0.0, 1.0),
        Vec3::new(-g, 0.0, -1.0),
        Vec3::new(-g, 0.0, 1.0),
    ];
    for x in p.iter_mut() {
        *x = x.normalize();
    }
    let t = vec![
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (p, t)
}

pub fn mesh(soup: Soup) -> Result<TriMesh, MeshError> {
    TriMesh::new(soup.0, soup.1)
}
