use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const GENERATOR: &str = concat!("donorgraph ", env!("CARGO_PKG_VERSION"));

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Pretty JSON with a `generator` key added to top-level objects.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Input(e.to_string()))?;
        if let Value::Object(m) = &mut v {
            m.insert("generator".into(), Value::String(GENERATOR.into()));
        }
        let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Input(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    /// CSV body behind a `# donorgraph <version>` comment line.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(name, &format!("# {GENERATOR}\n{body}"))
    }
}
