//! Writes procedural test meshes as OBJ.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minsec_core::mesh::write_obj;
use minsec_core::meshgen::{self, Soup};

#[derive(Parser, Debug)]
#[command(name = "minsec-meshgen", version)]
struct Args {
    /// Output file; stdout when absent.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    shape: Shape,
}

#[derive(Subcommand, Debug)]
enum Shape {
    /// Flat ring disk of given area.
    Disk {
        #[arg(long, default_value_t = 8, conflicts_with = "vertices")]
        rings: usize,
        /// Pick the ring count closest to this vertex count.
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        area: f64,
    },
    /// Fan of triangles around one interior vertex.
    Fan {
        #[arg(long, default_value_t = 6)]
        rim: usize,
    },
    Triangle,
    Annulus {
        #[arg(long, default_value_t = 0.5)]
        inner: f64,
        #[arg(long, default_value_t = 1.0)]
        outer: f64,
        #[arg(long, default_value_t = 4)]
        rings: usize,
        #[arg(long, default_value_t = 32)]
        around: usize,
    },
    /// Annulus with geometrically spaced rings.
    GradedAnnulus {
        #[arg(long, default_value_t = 0.2)]
        inner: f64,
        #[arg(long, default_value_t = 1.0)]
        outer: f64,
        #[arg(long, default_value_t = 24)]
        around: usize,
    },
    /// Unit-sphere cap with polar half-angle `alpha`.
    Cap {
        #[arg(long, default_value_t = 10)]
        rings: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    Saddle {
        #[arg(long, default_value_t = 8)]
        rings: usize,
        #[arg(long, default_value_t = 0.3)]
        a: f64,
    },
    Rectangle {
        #[arg(long, default_value_t = 16)]
        nx: usize,
        #[arg(long, default_value_t = 16)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
    },
    /// Icosahedron with one face removed.
    OpenIcosahedron,
}

fn soup(shape: &Shape) -> Soup {
    match *shape {
        Shape::Disk { rings, vertices, area } => {
            meshgen::disk(vertices.map_or(rings, meshgen::disk_rings_for), area)
        }
        Shape::Fan { rim } => meshgen::disk_fan(rim),
        Shape::Triangle => meshgen::triangle(),
        Shape::Annulus { inner, outer, rings, around } => meshgen::annulus(inner, outer, rings, around),
        Shape::GradedAnnulus { inner, outer, around } => meshgen::graded_annulus(inner, outer, around),
        Shape::Cap { rings, alpha } => meshgen::spherical_cap(rings, alpha),
        Shape::Saddle { rings, a } => meshgen::saddle(rings, a),
        Shape::Rectangle { nx, ny, width, height, jitter } => meshgen::rectangle(nx, ny, width, height, jitter),
        Shape::OpenIcosahedron => meshgen::open_icosahedron(),
    }
}

fn check(shape: &Shape) -> Result<(), String> {
    let pos = |name: &str, x: f64| if x > 0.0 && x.is_finite() { Ok(()) } else { Err(format!("{name} must be positive")) };
    match *shape {
        Shape::Disk { rings, vertices, area } => {
            if rings == 0 || vertices == Some(0) {
                return Err("rings must be at least 1".into());
            }
            pos("area", area)
        }
        Shape::Annulus { rings: 0, .. } => Err("rings must be at least 1".into()),
        Shape::Annulus { inner, outer, around, .. } | Shape::GradedAnnulus { inner, outer, around } => {
            if around < 3 {
                return Err("around must be at least 3".into());
            }
            pos("inner", inner)?;
            if outer <= inner || !outer.is_finite() {
                return Err("outer must exceed inner".into());
            }
            Ok(())
        }
        Shape::Cap { rings: 0, .. } | Shape::Saddle { rings: 0, .. } => Err("rings must be at least 1".into()),
        Shape::Cap { alpha, .. } => pos("alpha", alpha),
        Shape::Rectangle { width, height, jitter, .. } => {
            pos("width", width)?;
            pos("height", height)?;
            if !(0.0..1.0).contains(&jitter) {
                return Err("jitter must lie in [0, 1)".into());
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = check(&args.shape) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let (p, t) = soup(&args.shape);
    // validate before writing anything
    if let Err(e) = meshgen::mesh((p.clone(), t.clone())) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let text = write_obj(&p, &t);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
