//! Regenerates the bundled test images under `assets/`.
//!
//! The scenes are deterministic piecewise-smooth compositions and the glyph
//! mask is seeded, so rerunning this always reproduces the same bytes.
//!
//! Run from anywhere in the workspace:
//!
//! ```text
//! cargo run -p hppp-cli --example gen_assets
//! ```

use std::path::Path;

use hppp_core::imaging::{glyph_mask, synthetic_scene, write_pgm};

fn main() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    std::fs::create_dir_all(&assets).expect("create assets dir");

    let scene256 = synthetic_scene(256);
    write_pgm(&assets.join("scene256.pgm"), &scene256).expect("write scene256");

    let scene128 = synthetic_scene(128);
    write_pgm(&assets.join("scene128.pgm"), &scene128).expect("write scene128");

    let glyph = glyph_mask(256, 9);
    write_pgm(&assets.join("glyph_mask256.pgm"), &glyph).expect("write glyph mask");

    println!("wrote {}", assets.display());
}
