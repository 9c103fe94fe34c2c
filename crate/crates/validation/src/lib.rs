//! Acceptance checks of the workspace against its reference results. The
//! checks live in `tests/acceptance.rs`; this crate only locates the
//! optional standard test images.

use std::path::{Path, PathBuf};

/// Environment variable naming a directory of standard test images.
pub const IMAGE_DIR_ENV: &str = "IDT_IMAGE_DIR";

/// `$IDT_IMAGE_DIR`, or `images/` at the workspace root.
pub fn image_dir() -> PathBuf {
    std::env::var_os(IMAGE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../images"))
}

/// First existing `<dir>/<stem>.{pgm,png,ppm}`.
pub fn find_image(stem: &str) -> Option<PathBuf> {
    let dir = image_dir();
    ["pgm", "png", "ppm"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}
