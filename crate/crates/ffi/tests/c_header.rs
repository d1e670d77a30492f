//! Compiles a small C program against the generated header and the static
//! library, then runs it on the flights sample.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libcqa_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let st = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    let st = match st {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}): {e}");
            return;
        }
    };
    assert!(st.success(), "C compile failed");

    let flights = manifest.join("../../samples/flights");
    let out = Command::new(&bin)
        .arg(flights.join("schema.txt"))
        .arg(flights.join("data"))
        .arg(flights.join("canada_to_oak.query"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{}{}",
        stdout,
        String::from_utf8_lossy(&out.stderr)
    );
    let mut lines: Vec<&str> = stdout.lines().collect();
    lines.sort();
    assert_eq!(lines, ["(JZA 8329) consistent", "(SWA 1568) inconsistent"]);
}
