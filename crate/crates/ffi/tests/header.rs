use std::path::{Path, PathBuf};
use std::process::Command;

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn header() -> String {
    std::fs::read_to_string(manifest().join("include/fftsvd.h")).expect("generated header")
}

#[test]
fn header_declares_the_api() {
    let h = header();
    assert!(h.starts_with("#ifndef FFTSVD_H"));
    for name in [
        "fftsvd_last_error",
        "fftsvd_fft",
        "fftsvd_dft_naive",
        "fftsvd_pipeline_new",
        "fftsvd_pipeline_free",
        "fftsvd_pipeline_run",
        "fftsvd_pipeline_latency",
        "fftsvd_pipeline_reset",
        "fftsvd_svd",
        "fftsvd_svd_free",
        "fftsvd_svd_shape",
        "fftsvd_svd_sigma",
        "fftsvd_svd_u",
        "fftsvd_svd_v",
        "fftsvd_cordic_rotate",
        "fftsvd_cordic_vector",
        "fftsvd_watermark_key_default",
        "fftsvd_watermark_embed",
        "fftsvd_watermark_embed_8bit",
        "fftsvd_watermark_extract",
    ] {
        assert!(h.contains(&format!(" {name}(")), "{name} missing");
    }
    assert!(h.contains("typedef struct FftsvdPipeline FftsvdPipeline;"));
    assert!(h.contains("typedef struct FftsvdSvd FftsvdSvd;"));
    assert!(h.contains("FFTSVD_STATUS_NO_CONVERGENCE = 5"));
}

/// Directory holding the shared library built alongside this test binary.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let dir = lib_dir();
    if !dir.join("libfftsvd_ffi.so").exists() && !dir.join("libfftsvd_ffi.dylib").exists() {
        eprintln!("shared library not found in {}; skipping", dir.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(manifest().join("tests/c/smoke.c"))
        .arg("-o")
        .arg(&bin)
        .arg(format!("-L{}", dir.display()))
        .arg(format!("-Wl,-rpath,{}", dir.display()))
        .arg("-lfftsvd_ffi")
        .arg("-lm")
        .status();
    let Ok(status) = status else {
        eprintln!("{cc} not available; skipping");
        return;
    };
    assert!(status.success(), "C build failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
