//! Flag defaults from a `key = value` file.
//!
//! Every flag can also be set through a `LEXLOOP_*` environment variable.
//! A config file only fills variables that are still unset, so precedence is
//! command line, then environment, then file.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lexloop_core::engine::parse_kv;

pub const ENV_PREFIX: &str = "LEXLOOP_";

/// `pos-quota` and `pos_quota` both map to `LEXLOOP_POS_QUOTA`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.trim().replace('-', "_").to_ascii_uppercase())
}

/// Pairs of (variable, value) the file would set, skipping variables that
/// are already present.
pub fn pending_env(text: &str, is_set: impl Fn(&str) -> bool) -> anyhow::Result<Vec<(String, String)>> {
    let map = parse_kv(text)?;
    Ok(map
        .into_iter()
        .map(|(k, v)| (env_name(&k), v))
        .filter(|(k, _)| !is_set(k))
        .collect())
}

/// Exports the file's entries as environment variables. Must run before any
/// other thread starts.
pub fn load_into_env(path: &Path) -> anyhow::Result<usize> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let pending = pending_env(&text, |k| std::env::var_os(k).is_some())
        .with_context(|| format!("parsing config {}", path.display()))?;
    let n = pending.len();
    for (k, v) in pending {
        std::env::set_var(k, v);
    }
    Ok(n)
}

/// Finds `--config PATH` / `--config=PATH` in raw arguments, falling back
/// to `LEXLOOP_CONFIG`. Clap parses the same flag later; this only runs
/// earlier so the file can feed clap's env defaults.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
        if s == "--" {
            break;
        }
    }
    std::env::var_os(format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_map_to_prefixed_names() {
        assert_eq!(env_name("pos-quota"), "LEXLOOP_POS_QUOTA");
        assert_eq!(env_name(" strategy "), "LEXLOOP_STRATEGY");
    }

    #[test]
    fn set_variables_win_over_file() {
        let text = "strategy = cal\n# comment\nseeds = 3\n";
        let pending = pending_env(text, |k| k == "LEXLOOP_STRATEGY").unwrap();
        assert_eq!(pending, vec![("LEXLOOP_SEEDS".to_string(), "3".to_string())]);
        assert!(pending_env("novalue\n", |_| false).is_err());
    }

    #[test]
    fn finds_config_flag() {
        let args: Vec<OsString> = ["lexloop", "run", "--config", "a.conf"].iter().map(OsString::from).collect();
        assert_eq!(config_path(&args), Some(PathBuf::from("a.conf")));
        let args: Vec<OsString> = ["lexloop", "--config=b.conf"].iter().map(OsString::from).collect();
        assert_eq!(config_path(&args), Some(PathBuf::from("b.conf")));
    }
}
