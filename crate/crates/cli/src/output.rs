//! Text formatting, output staging and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Fixed 12 significant digits, `.` decimal separator, `inf`/`-inf`/`nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{}", round_sig(x))
    }
}

fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every non-integer number in `v` to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(CliError::internal)?;
    let mut s = serde_json::to_string_pretty(&round_json(v)).map_err(CliError::internal)?;
    s.push('\n');
    Ok(s)
}

pub fn edge_list(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> String {
    let mut s = format!("# nodes={n}\n");
    for (u, v) in edges {
        writeln!(s, "{u}\t{v}").expect("write to string");
    }
    s
}

/// Input files read so far, with their SHA-256 digests.
#[derive(Debug, Default)]
pub struct Inputs {
    digests: BTreeMap<String, String>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        self.digests
            .insert(path.display().to_string(), hex(&Sha256::digest(&bytes)));
        String::from_utf8(bytes)
            .map_err(|_| CliError::Validation(format!("{} is not valid UTF-8", path.display())))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").expect("write to string");
        s
    })
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: Value,
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<F: Serialize>(command: &str, flags: &F, inputs: Inputs, seed: Option<u64>) -> Result<Self, CliError> {
        Ok(RunManifest {
            command: command.into(),
            flags: serde_json::to_value(flags).map_err(CliError::internal)?,
            inputs: inputs.digests,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: timestamp()?,
        })
    }
}

/// RFC 3339 UTC, taken from `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> Result<String, CliError> {
    let t = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: u64 = s.trim().parse().map_err(|_| {
                CliError::Validation(format!("SOURCE_DATE_EPOCH must be an integer, got {s:?}"))
            })?;
            UNIX_EPOCH + Duration::from_secs(secs)
        }
        Err(_) => SystemTime::now(),
    };
    Ok(humantime::format_rfc3339_seconds(t).to_string())
}

pub enum Dest {
    Stdout,
    File(PathBuf),
}

/// Outputs are staged in memory and written only after the command has
/// finished validating and computing, so a failed run leaves no files.
pub struct Staged {
    files: Vec<(Dest, String)>,
    manifest_path: Option<PathBuf>,
}

impl Staged {
    /// Manifest goes next to the first file output, or to stderr.
    pub fn new() -> Self {
        Staged {
            files: Vec::new(),
            manifest_path: None,
        }
    }

    pub fn in_dir(dir: &Path) -> Self {
        Staged {
            files: Vec::new(),
            manifest_path: Some(dir.join("manifest.json")),
        }
    }

    pub fn add(&mut self, dest: Dest, text: String) {
        if self.manifest_path.is_none() {
            if let Dest::File(p) = &dest {
                let mut name = p.as_os_str().to_owned();
                name.push(".manifest.json");
                self.manifest_path = Some(name.into());
            }
        }
        self.files.push((dest, text));
    }

    pub fn add_opt(&mut self, out: Option<&Path>, text: String) {
        self.add(out.map_or(Dest::Stdout, |p| Dest::File(p.to_owned())), text);
    }

    pub fn commit(self, manifest: &RunManifest) -> Result<(), CliError> {
        let manifest_text = to_json(manifest)?;
        for path in self
            .files
            .iter()
            .filter_map(|(d, _)| match d {
                Dest::File(p) => Some(p),
                Dest::Stdout => None,
            })
            .chain(&self.manifest_path)
        {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| {
                    CliError::Internal(format!("cannot create {}: {e}", parent.display()))
                })?;
            }
        }
        let stdout = std::io::stdout();
        for (dest, text) in &self.files {
            match dest {
                Dest::Stdout => stdout
                    .lock()
                    .write_all(text.as_bytes())
                    .map_err(CliError::internal)?,
                Dest::File(p) => write_file(p, text)?,
            }
        }
        match &self.manifest_path {
            Some(p) => write_file(p, &manifest_text),
            None => {
                eprint!("{manifest_text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}
