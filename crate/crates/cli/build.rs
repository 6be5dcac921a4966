use std::process::Command;

fn main() {
    let rev = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into());
    println!("cargo:rustc-env=FRAGKIT_BUILD_ID={}+{}", env!("CARGO_PKG_VERSION"), rev);
    println!("cargo:rerun-if-changed=../../.git/HEAD");
}
