use crate::format::sha256_file;
use crate::LabError;
use ricci_lab::monitor::{InequalityLedger, Verdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use walkdir::WalkDir;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    VerdictFailure,
    Singularity,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Pass => crate::EXIT_PASS,
            RunStatus::VerdictFailure => crate::EXIT_VERDICT,
            RunStatus::Singularity => crate::EXIT_SINGULAR,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCount {
    pub pass: usize,
    pub fail: usize,
    pub not_rendered: usize,
}

impl VerdictCount {
    fn add(&mut self, v: &Verdict) {
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::NotRendered => self.not_rendered += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: RunStatus,
    pub exit_code: i32,
    pub summary: VerdictCount,
    pub verdicts: BTreeMap<String, VerdictCount>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn count_verdicts(ledgers: &[InequalityLedger]) -> (VerdictCount, BTreeMap<String, VerdictCount>) {
    let mut total = VerdictCount::default();
    let mut per = BTreeMap::new();
    for l in ledgers {
        total.add(&l.verdict);
        per.entry(l.theorem.clone()).or_insert_with(VerdictCount::default).add(&l.verdict);
    }
    (total, per)
}

pub fn now_unix() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Every file below `dir` except the manifest itself, sorted by relative path.
pub fn inventory(dir: &Path) -> Result<Vec<FileEntry>, LabError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| LabError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .expect("walk stays below its root")
            .to_string_lossy()
            .replace('\\', "/");
        if rel == MANIFEST_FILE {
            continue;
        }
        let meta = entry.metadata().map_err(|e| LabError::Io {
            path: entry.path().to_path_buf(),
            message: e.to_string(),
        })?;
        out.push(FileEntry {
            sha256: sha256_file(entry.path()).map_err(|e| LabError::io(entry.path(), e))?,
            path: rel,
            bytes: meta.len(),
        });
    }
    Ok(out)
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| LabError::io(&path, e))
    }

    /// Recomputes the file inventory after files were added to the directory.
    pub fn refresh_inventory(&mut self, dir: &Path) -> Result<(), LabError> {
        self.files = inventory(dir)?;
        Ok(())
    }
}

/// Prepares `dir` for a run: creates it, or removes the files a previous run
/// listed. A non-empty directory without a manifest is refused.
pub fn prepare_output_dir(dir: &Path) -> Result<(), LabError> {
    if dir.exists() {
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.exists() {
            let old = Manifest::load(&manifest)?;
            for f in &old.files {
                let p = dir.join(&f.path);
                if p.exists() {
                    std::fs::remove_file(&p).map_err(|e| LabError::io(&p, e))?;
                }
            }
            std::fs::remove_file(&manifest).map_err(|e| LabError::io(&manifest, e))?;
        }
        let leftover = inventory(dir)?;
        if !leftover.is_empty() {
            return Err(LabError::Config(format!(
                "output directory {} holds files no manifest lists: {}",
                dir.display(),
                leftover[0].path
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}
