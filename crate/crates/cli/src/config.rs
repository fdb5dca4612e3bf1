use std::path::Path;

use gossicrypt::sim::{ConfigError, SimConfig};

use crate::CliError;

/// Applies `key = value` lines from `text` to `cfg`. Blank lines and lines
/// starting with `#` are skipped.
pub fn apply_text(cfg: &mut SimConfig, text: &str, origin: &str) -> Result<(), CliError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{origin}:{}: expected `key = value`, got `{line}`",
                i + 1
            )));
        };
        cfg.set(key.trim(), value.trim())
            .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", i + 1)))?;
    }
    Ok(())
}

pub fn apply_file(cfg: &mut SimConfig, path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    apply_text(cfg, &text, &path.display().to_string())
}

/// Applies one `KEY=VALUE` override.
pub fn apply_override(cfg: &mut SimConfig, kv: &str) -> Result<(), CliError> {
    let (key, value) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
    cfg.set(key.trim(), value.trim()).map_err(config_error)
}

pub fn config_error(e: ConfigError) -> CliError {
    CliError::Config(e.to_string())
}
