//! Output files are staged in temporary files next to their targets and
//! renamed into place only once every one of them has been written.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use selfsim::field::io::{to_f2d_string, AnyField};
use selfsim::field::ScalarField;
use selfsim::{Error, Result};

#[derive(Debug, Default)]
pub struct Batch {
    files: Vec<(PathBuf, Vec<u8>)>,
    csv: bool,
}

fn csv_of(f: &ScalarField) -> String {
    let mut s = String::from("x,y,value\n");
    for k in 0..f.grid.len() {
        let (x, y) = f.grid.point(k);
        s.push_str(&format!("{x:.17e},{y:.17e},{:.17e}\n", f.values[k]));
    }
    s
}

impl Batch {
    pub fn new(csv: bool) -> Self {
        Self { files: Vec::new(), csv }
    }

    pub fn field(&mut self, path: PathBuf, field: impl Into<AnyField>) {
        let field = field.into();
        if self.csv {
            if let AnyField::Scalar(s) = &field {
                self.files.push((path.with_extension("csv"), csv_of(s).into_bytes()));
            }
        }
        self.files.push((path, to_f2d_string(&field).into_bytes()));
    }

    pub fn json(&mut self, path: PathBuf, value: &impl Serialize) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
        text.push('\n');
        self.files.push((path, text.into_bytes()));
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Write everything to temporaries, then rename. Nothing is renamed if
    /// any write fails.
    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            let io_err = |source| Error::Io {
                path: path.display().to_string(),
                source,
            };
            let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(bytes).map_err(io_err)?;
            tmp.as_file().sync_all().map_err(io_err)?;
            staged.push((tmp, path.clone()));
        }
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e.error,
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfsim::field::Grid2D;

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let mut b = Batch::new(true);
        b.field(dir.path().join("a.f2d"), ScalarField::constant(g, 1.0));
        b.json(dir.path().join("r.json"), &serde_json::json!({"k": 1})).unwrap();
        b.commit().unwrap();
        for name in ["a.f2d", "a.csv", "r.json"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 3);
    }

    #[test]
    fn failed_commit_leaves_no_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let mut b = Batch::new(false);
        b.field(dir.path().join("good.f2d"), ScalarField::constant(g, 1.0));
        b.field(blocker.join("bad.f2d"), ScalarField::constant(g, 1.0));
        assert!(b.commit().is_err());
        assert!(!dir.path().join("good.f2d").exists());
    }
}
