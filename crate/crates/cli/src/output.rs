//! Output plumbing: CSV tables at full precision, JSON reports, gnuplot
//! scripts, and a checksummed manifest of everything a run produced.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a crate::config::RunConfig,
    files: &'a [FileEntry],
    elapsed_seconds: f64,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<OutputDir> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, data: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, data)?;
        self.record(name, data);
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        let mut buf = String::with_capacity(rows.len() * 64 + header.len() + 1);
        buf.push_str(header);
        buf.push('\n');
        for r in rows {
            buf.push_str(r);
            buf.push('\n');
        }
        self.write_bytes(name, buf.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.write_bytes(name, &data)
    }

    fn record(&mut self, name: &str, data: &[u8]) {
        let digest = Sha256::digest(data);
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: format!("{digest:x}"),
            bytes: data.len() as u64,
        });
    }

    /// A minimal gnuplot script plotting `using_spec` columns of a CSV.
    pub fn write_gnuplot(
        &mut self,
        name: &str,
        csv: &str,
        title: &str,
        using_spec: &str,
    ) -> std::io::Result<()> {
        let script = format!(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set title '{title}'\n\
             plot '{csv}' using {using_spec} with points pt 7 ps 0.4\n\
             pause -1\n"
        );
        self.write_bytes(name, script.as_bytes())
    }

    pub fn finish(
        self,
        command: &str,
        config: &crate::config::RunConfig,
    ) -> std::io::Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.run.seed,
            config,
            files: &self.files,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        let mut data = serde_json::to_vec_pretty(&manifest)?;
        data.push(b'\n');
        let path = self.dir.join("manifest.json");
        let mut f = fs::File::create(path)?;
        f.write_all(&data)?;
        Ok(())
    }
}
