use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::to_polar;
use crate::trajectory::{Sample, Trajectory};

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Creates `dir` and checks that a file can be written in it.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<FileEntry> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(&target, e));
    }
    Ok(FileEntry {
        name: name.to_string(),
        bytes: contents.len() as u64,
        sha256: sha256_hex(contents),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Recomputes the checksum of every inventoried file under `dir`.
pub fn verify_checksums(dir: &Path, files: &[FileEntry]) -> Result<bool> {
    for f in files {
        let path = dir.join(&f.name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// CSV text: `t,E,tE,e_1..e_N` then, if `polar`, `rho_k,theta_k` pairs.
///
/// Averaged runs use the same layout with `t` the flow time and
/// `E = tE = R`, `e_k = ρ_k²`. Floats use the shortest round-trip form.
pub fn series_csv(traj: &Trajectory, polar: bool) -> Result<String> {
    if traj.is_empty() {
        return Err(Error::invalid("trajectory is empty"));
    }
    let n = traj.modes();
    let polar = polar && traj.is_modal();
    let mut out = String::from("t,E,tE");
    for k in 1..=n {
        let _ = write!(out, ",e_{k}");
    }
    if polar {
        for k in 1..=n {
            let _ = write!(out, ",rho_{k},theta_{k}");
        }
    }
    out.push('\n');
    for (sample, d) in traj.samples().iter().zip(traj.diagnostics()) {
        let _ = write!(out, "{:?},{:?},{:?}", sample.time(), d.energy, d.rescaled);
        for e in &d.modal {
            let _ = write!(out, ",{e:?}");
        }
        if polar {
            if let Sample::Modal(m) = sample {
                let spec = traj
                    .spectrum()
                    .ok_or_else(|| Error::invalid("trajectory has no spectrum"))?;
                let p = to_polar(m, spec)?;
                for (r, th) in p.rho.iter().zip(&p.theta) {
                    let _ = write!(out, ",{r:?},{th:?}");
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Paths written by a run.
pub fn paths(dir: &Path, files: &[FileEntry]) -> Vec<PathBuf> {
    files.iter().map(|f| dir.join(&f.name)).collect()
}
