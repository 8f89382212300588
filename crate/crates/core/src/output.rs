//! Episode files. Each file is written to a temporary sibling and renamed
//! into place, so a reader sees either the whole file or none of it.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::analysis::Summary;
use crate::error::OutputError;
use crate::harness::EpisodeResult;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` to `path` atomically.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), OutputError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn trajectory_csv(r: &EpisodeResult) -> Vec<u8> {
    csv_bytes(
        &[
            "t", "mode", "x", "y", "vx", "vy", "r", "gamma", "tau", "E_total",
        ],
        r.trajectory.iter().map(|s| {
            vec![
                s.t.to_string(),
                s.mode.name().to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.vx.to_string(),
                s.vy.to_string(),
                s.r.to_string(),
                s.gamma.to_string(),
                s.tau.to_string(),
                s.energy.to_string(),
            ]
        }),
    )
}

pub fn steps_csv(r: &EpisodeResult) -> Vec<u8> {
    csv_bytes(
        &["n", "t_td", "leg", "T_n", "T_e_n", "mu"],
        r.timeline.steps.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.t_td.to_string(),
                s.leg.code().to_string(),
                s.half_period.map(|t| t.to_string()).unwrap_or_default(),
                s.estimated_half_period.to_string(),
                s.mu.to_string(),
            ]
        }),
    )
}

pub fn strides_csv(r: &EpisodeResult) -> Vec<u8> {
    csv_bytes(
        &["N", "n", "t_td", "phi_R", "phi_L", "phi_minus", "psi_minus"],
        r.timeline.strides.iter().map(|s| {
            vec![
                s.stride.to_string(),
                s.n.to_string(),
                s.t_td.to_string(),
                s.phi_r.to_string(),
                s.phi_l.to_string(),
                s.phi_minus.to_string(),
                s.psi_minus.to_string(),
            ]
        }),
    )
}

pub fn commands_csv(r: &EpisodeResult) -> Vec<u8> {
    csv_bytes(
        &["t", "leg", "phase", "category", "hip", "vastus"],
        r.commands.iter().map(|c| {
            vec![
                c.t.to_string(),
                c.leg.code().to_string(),
                c.phase.to_string(),
                c.category.name().to_string(),
                c.hip.to_string(),
                c.vastus.to_string(),
            ]
        }),
    )
}

/// Writes every file for one episode under `dir` and returns their paths.
pub fn write_episode(
    dir: &Path,
    run_id: &str,
    result: &EpisodeResult,
    summary: &Summary,
) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files: [(&str, Vec<u8>); 6] = [
        ("traj.csv", trajectory_csv(result)),
        ("steps.csv", steps_csv(result)),
        ("strides.csv", strides_csv(result)),
        ("commands.csv", commands_csv(result)),
        ("summary.txt", summary.text().into_bytes()),
        ("metrics.txt", summary.metrics_text().into_bytes()),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (suffix, bytes) in files {
        let path = dir.join(format!("{run_id}_{suffix}"));
        write_atomic(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nope").join("a.txt");
        assert!(matches!(
            write_atomic(&p, b"x"),
            Err(OutputError::Io { .. })
        ));
    }
}
