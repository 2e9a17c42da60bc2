use std::process::Command;

fn main() {
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    let version = match describe {
        Some(d) if !d.is_empty() => format!("{}+g{}", env!("CARGO_PKG_VERSION"), d),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    };
    println!("cargo:rustc-env=RAYKNIGHT_VERSION={version}");
    println!("cargo:rerun-if-changed=build.rs");
}
