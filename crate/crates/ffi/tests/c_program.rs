use std::path::PathBuf;
use std::process::Command;

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = lib_dir.join("libparallax_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let bin = out_dir.join("parallax_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("failed to run cc");
    assert!(status.success());

    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    let median: f64 = fields[0].parse().unwrap();
    // reference median from an independent 30-digit quadrature: 519.1326477430...
    assert!((median - 519.132648).abs() < 1e-5, "{text}");
    assert_eq!(fields[1], "500.000000");
    assert_eq!(fields[2], "3");
    assert_eq!(fields[3], "1");
}
