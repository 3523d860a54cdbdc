use std::process::Command;

fn main() {
    let described = Command::new("git")
        .args(["describe", "--tags", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    let version = match described {
        // A bare commit hash means no tag is reachable.
        Some(d) if d.split('-').next().is_some_and(|h| h.chars().all(|c| c.is_ascii_hexdigit())) => {
            format!("v{}-g{d}", env!("CARGO_PKG_VERSION"))
        }
        Some(d) => d,
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    };
    println!("cargo:rustc-env=VQO_VERSION={version}");
    println!("cargo:rerun-if-changed=build.rs");
}
