//! Rewrite the generated files under `data/`: the sample test log, the
//! default scanner layout and the stand-in bolt mesh.

use boltwin_core::geom::io::to_ascii_stl;
use boltwin_core::geom::mesh::cylinder;
use boltwin_core::geom::{ScannerConfig, Vec3};

fn main() -> std::io::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let files = [
        ("bolt_tests.csv", boltwin_core::pipeline::fixture::generate()),
        ("scanner.json", ScannerConfig::default().to_json() + "\n"),
        // 1" shank, 90 mm long, standing 2 mm above the plate.
        ("bolt.stl", to_ascii_stl(&cylinder(12.7, 90.0, 32, Vec3::new(0.0, 0.0, 2.0)), "bolt")),
    ];
    for (name, text) in files {
        let path = format!("{dir}/{name}");
        std::fs::write(&path, text)?;
        println!("wrote {path}");
    }
    Ok(())
}
