//! Locates the `dctif` command-line binary for end-to-end checks.

use std::path::PathBuf;
use std::process::Command;

/// Path to the `dctif` binary in the current target directory, building it if absent.
pub fn cli_binary() -> PathBuf {
    let exe = std::env::current_exe().expect("test executable path");
    let profile_dir = exe.parent().and_then(|d| d.parent()).expect("target profile directory");
    let bin = profile_dir.join(format!("dctif{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let mut cmd = Command::new(cargo);
        cmd.args(["build", "-q", "-p", "dctif-cli", "--bin", "dctif"]);
        if profile_dir.ends_with("release") {
            cmd.arg("--release");
        }
        let status = cmd.status().expect("spawn cargo build");
        assert!(status.success(), "building dctif-cli failed");
    }
    bin
}
