use std::fs;
use std::path::{Path, PathBuf};

/// Content hash over the workspace sources, embedded into run manifests so a
/// run can be traced back to the code that produced it.
fn main() {
    let manifest_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let crates_dir = manifest_dir.parent().unwrap().to_path_buf();
    let mut files = Vec::new();
    collect(&crates_dir, &mut files);
    files.sort();

    let mut hash = 0xcbf29ce484222325u64;
    let mut mix = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for f in &files {
        mix(f.strip_prefix(&crates_dir).unwrap_or(f).to_string_lossy().as_bytes());
        if let Ok(content) = fs::read(f) {
            mix(&content);
        }
    }
    println!("cargo:rustc-env=LEXI_MORL_CODE_HASH={hash:016x}");
    println!("cargo:rerun-if-changed={}", crates_dir.display());
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            if path.file_name().is_some_and(|n| n == "target") {
                continue;
            }
            collect(&path, out);
        } else if path.extension().is_some_and(|e| e == "rs")
            || path.file_name().is_some_and(|n| n == "Cargo.toml")
        {
            out.push(path);
        }
    }
}
