use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Wraps a command report with the configuration that produced it.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    passed: bool,
    config: &'a ExperimentConfig,
    report: &'a T,
}

pub fn prepare(config: &ExperimentConfig) -> io::Result<()> {
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join("config.json"), config.to_json())
}

pub fn write_report<T: Serialize>(config: &ExperimentConfig, command: &str, passed: bool, report: &T) -> io::Result<()> {
    let env = Envelope { command, version: env!("CARGO_PKG_VERSION"), passed, config, report };
    let text = serde_json::to_string_pretty(&env).map_err(io::Error::other)?;
    fs::write(config.out.join("report.json"), text)
}

/// Writes a CSV file from a header and rows of preformatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

pub fn write_eigenvalues(path: &Path, values: &[Complex64]) -> io::Result<()> {
    write_csv(path, &["index", "re", "im"], values.iter().enumerate().map(|(i, z)| vec![i.to_string(), z.re.to_string(), z.im.to_string()]))
}

/// Binary greyscale PGM of a cell field (`values[i * ny + j]`, i along x),
/// linearly scaled so the largest value is white. Row 0 of the image is the top of the grid.
pub fn write_pgm(path: &Path, nx: usize, ny: usize, values: &[f64]) -> io::Result<()> {
    let max = values.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v = values[i * ny + j];
            bytes.push(if v.is_finite() { (v * scale).round().clamp(0.0, 255.0) as u8 } else { 0 });
        }
    }
    fs::write(path, bytes)
}
