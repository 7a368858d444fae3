//! Generates the C header with cbindgen. The committed copy under
//! include/ is refreshed whenever the generated text differs, so the
//! header in the repository always matches the built library.

use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR"));
    let out_path = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR")).join("confound_ui.h");
    let committed = crate_dir.join("include").join("confound_ui.h");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(&out_path);
            let generated = fs::read_to_string(&out_path).expect("read generated header");
            let current = fs::read_to_string(&committed).unwrap_or_default();
            if generated != current {
                fs::create_dir_all(committed.parent().expect("include dir"))
                    .expect("create include dir");
                fs::write(&committed, &generated).expect("refresh committed header");
            }
        }
        Err(e) => {
            // Keep building against the committed header; parse failures
            // here must not brick the library build.
            println!("cargo:warning=cbindgen failed: {e}");
        }
    }
}
