use std::fmt::Write as _;

use super::Vec3;
use crate::error::MeshError;

/// Reads `v` and `f` records. Face entries may carry `/vt/vn` suffixes and
/// negative (relative) indices; everything else is skipped.
pub fn parse_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), MeshError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    let tok = it.next().ok_or_else(|| MeshError::Parse {
                        line: lineno + 1,
                        msg: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::Parse {
                        line: lineno + 1,
                        msg: format!("bad coordinate {tok:?}"),
                    })?;
                }
                positions.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let face = faces.len();
                let mut idx = Vec::with_capacity(3);
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| MeshError::Parse {
                        line: lineno + 1,
                        msg: format!("bad face index {tok:?}"),
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        positions.len() as i64 + i
                    } else {
                        return Err(MeshError::IndexOutOfRange { face, index: i });
                    };
                    if resolved < 0 || resolved >= positions.len() as i64 {
                        return Err(MeshError::IndexOutOfRange { face, index: i });
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() != 3 {
                    return Err(MeshError::NotTriangle {
                        face,
                        count: idx.len(),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}

pub fn write_obj(positions: &[Vec3], triangles: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for p in positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_slashes_and_negative_indices() {
        let text = "# tri\nv 0 0 0\nv 1 0 0\nvn 0 0 1\nv 0 1 0\nf 1/1/1 -2//1 3\n";
        let (p, f) = parse_obj(text).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(f, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_is_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        match parse_obj(text).unwrap_err() {
            MeshError::NotTriangle { face, count } => assert_eq!((face, count), (0, 4)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_coordinate_names_line() {
        let err = parse_obj("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
    }

    #[test]
    fn write_then_read() {
        let p = vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let (q, f) = parse_obj(&write_obj(&p, &[[0, 1, 2]])).unwrap();
        assert_eq!(q, p);
        assert_eq!(f, vec![[0, 1, 2]]);
    }
}
