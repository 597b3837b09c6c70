//! File emission: shot logs, sweep tables, JSON documents.
//!
//! CSV reals are written with 17 significant digits in scientific notation
//! so every `f64` round-trips exactly. Files are written to a temporary
//! sibling and renamed into place, so a failed command never leaves a
//! partial file behind.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::sampler::ShotRecord;

pub const SHOT_CSV_HEADER: &str = "index,x_prime,y_prime,u_prime,v_prime,S_single,running_mean_S";

/// 17 significant digits, e.g. `-2.8284271247461903e0`.
pub fn format_real(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn write_shot_csv<W: Write>(records: &[ShotRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{SHOT_CSV_HEADER}")?;
    for r in records {
        let [x, y, u, v] = r.xi_prime.components();
        writeln!(
            out,
            "{},{x},{y},{u},{v},{},{}",
            r.index,
            format_real(r.s_single),
            format_real(r.running_mean_s)
        )?;
    }
    Ok(())
}

pub fn shot_csv_bytes(records: &[ShotRecord]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 * (records.len() + 1));
    write_shot_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
