//! Output destinations and the key=value manifest written next to each file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mcvd_core::csv_number;

use crate::OutputError;

pub const OUT_DIR_ENV: &str = "MCVD_OUT_DIR";

/// Where a command writes its main table.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    /// `-` is stdout; no value means `<$MCVD_OUT_DIR or .>/<default_name>`.
    pub fn resolve(out: Option<&Path>, default_name: &str) -> Target {
        match out {
            Some(p) if p == Path::new("-") => Target::Stdout,
            Some(p) => Target::File(p.to_path_buf()),
            None => {
                let dir = std::env::var_os(OUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| ".".into());
                Target::File(dir.join(default_name))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Target::Stdout => "-".into(),
            Target::File(p) => p.display().to_string(),
        }
    }

    pub fn open(&self) -> Result<Box<dyn Write>> {
        match self {
            Target::Stdout => Ok(Box::new(io::stdout().lock())),
            Target::File(p) => Ok(Box::new(BufWriter::new(create(p)?))),
        }
    }

    pub fn manifest_path(&self) -> Option<PathBuf> {
        match self {
            Target::Stdout => None,
            Target::File(p) => Some(manifest_path(p)),
        }
    }
}

pub fn manifest_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn create(p: &Path) -> Result<File> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| OutputError(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(p).map_err(|e| OutputError(format!("cannot create {}: {e}", p.display())).into())
}

/// Writes a header and rows of numbers.
pub fn write_table(target: &Target, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let sink = target.open()?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let wrap = |e: csv::Error| OutputError(format!("writing {}: {e}", target.describe()));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| csv_number(v))).map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| OutputError(format!("writing {}: {e}", target.describe())))?;
    Ok(())
}

/// Ordered key=value pairs.
#[derive(Debug, Default, Clone)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest::default();
        m.set("tool", concat!("mcvd ", env!("CARGO_PKG_VERSION")));
        m.set("core_version", mcvd_core_version());
        m.set("command", command);
        m.set(
            "argv",
            std::env::args()
                .map(|a| shell_quote(&a))
                .collect::<Vec<_>>()
                .join(" "),
        );
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Writes the sidecar of `target`; stdout output gets none.
    pub fn write_for(&self, target: &Target) -> Result<()> {
        let Some(path) = target.manifest_path() else {
            return Ok(());
        };
        let mut f = create(&path)?;
        f.write_all(self.render().as_bytes())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| OutputError(e.to_string()))?;
        Ok(())
    }
}

/// Single-quotes `arg` when a POSIX shell would split or expand it.
fn shell_quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./:=,+@%".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', "'\\''"))
    }
}

fn mcvd_core_version() -> &'static str {
    // Both crates are versioned together.
    env!("CARGO_PKG_VERSION")
}
