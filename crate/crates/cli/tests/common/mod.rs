#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use tempfile::TempDir;

pub const ADMIN: &str = "test-admin-token";

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_relaylab")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// A `relaylab serve` child process; killed on drop.
pub struct ServerProcess {
    pub child: Child,
    pub url: String,
    pub db: PathBuf,
}

impl ServerProcess {
    pub fn start(dir: &Path) -> Self {
        Self::start_with_db(dir, &dir.join("relay.db"))
    }

    pub fn start_with_db(dir: &Path, db: &Path) -> Self {
        let config = dir.join("server.toml");
        std::fs::write(
            &config,
            format!(
                "[listen]\naddr = \"127.0.0.1:0\"\n[storage]\npath = {:?}\n[admin]\ntoken = \"{ADMIN}\"\n",
                db.display().to_string()
            ),
        )
        .unwrap();
        let mut child = Command::new(bin())
            .arg("serve")
            .arg(&config)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn relaylab serve");
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected server output {line:?}"))
            .to_owned();
        Self {
            child,
            url: format!("http://{addr}"),
            db: db.to_owned(),
        }
    }

    pub fn cli(&self) -> Cli {
        Cli {
            server: self.url.clone(),
        }
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        self.kill();
    }
}

pub struct Cli {
    pub server: String,
}

impl Cli {
    pub fn run(&self, dir: &Path, args: &[&str]) -> Output {
        Command::new(bin())
            .current_dir(dir)
            .env("RELAYLAB_SERVER", &self.server)
            .env("RELAYLAB_ADMIN_TOKEN", ADMIN)
            .args(args)
            .output()
            .expect("run relaylab")
    }

    /// Runs and asserts success; returns stdout.
    pub fn ok(&self, dir: &Path, args: &[&str]) -> String {
        let out = self.run(dir, args);
        assert!(
            out.status.success(),
            "relaylab {args:?} failed with {:?}\nstdout: {}\nstderr: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn json(&self, dir: &Path, args: &[&str]) -> serde_json::Value {
        let mut full = vec!["--json"];
        full.extend_from_slice(args);
        serde_json::from_str(&self.ok(dir, &full)).unwrap()
    }
}

pub fn experiment_id(dir: &Path, tokens: &str) -> String {
    let text = std::fs::read_to_string(dir.join(tokens)).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["experiment_id"].as_str().unwrap().to_owned()
}

pub fn tempdir() -> TempDir {
    tempfile::tempdir().unwrap()
}

/// Writes an experiment document with `n` participants named P01.. into `dir`.
pub fn write_experiment(dir: &Path, name: &str, n: usize, rounds: usize, condition: &str) -> PathBuf {
    let names: Vec<String> = (1..=n).map(|i| format!("\"P{i:02}\"")).collect();
    let path = dir.join(format!("{name}.toml"));
    std::fs::copy(fixture("swap_pilot_doctor.tsv"), dir.join("swap_pilot_doctor.tsv")).unwrap();
    std::fs::write(
        &path,
        format!(
            "name = \"{name}\"\nrounds = {rounds}\nparticipants = [{}]\n\n[task]\nprompt_text = \"Who leaves the balloon?\"\nterms = [\"pilot\", \"doctor\"]\n\n{condition}",
            names.join(", ")
        ),
    )
    .unwrap();
    path
}

pub const SWAP_CONDITION: &str = "[[conditions]]\nkind = \"lexicon_swap\"\nswap_map = \"swap_pilot_doctor.tsv\"\n";

pub fn wait_until(deadline: Duration, mut f: impl FnMut() -> bool) -> bool {
    let start = Instant::now();
    while start.elapsed() < deadline {
        if f() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    false
}
