//! Atomic file output: every artifact is written to a temporary sibling
//! and renamed into place, so a failed run leaves no partial files.

use std::fs;
use std::path::Path;

use crate::CliError;

pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Write every (suffix, content) pair under the prefix, or print the first
/// one to stdout when no prefix was given.
pub fn emit(out_prefix: Option<&str>, artifacts: &[(&str, String)]) -> Result<(), CliError> {
    match out_prefix {
        Some(prefix) => {
            for (suffix, content) in artifacts {
                write_atomic(Path::new(&format!("{prefix}{suffix}")), content)?;
            }
            Ok(())
        }
        None => {
            if let Some((_, content)) = artifacts.first() {
                print!("{content}");
                if !content.ends_with('\n') {
                    println!();
                }
            }
            Ok(())
        }
    }
}
