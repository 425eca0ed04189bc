//! Flat `key = value` config files, spliced into argv ahead of the real
//! flags so that anything given on the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

/// Flags that take no value; in a config file they read `key = true|false`.
const SWITCHES: [&str; 2] = ["seed-from-entropy", "coupling"];

/// Returns argv with `--config` removed and the file's entries inserted
/// right after the subcommand. A `command = ...` entry supplies the
/// subcommand when argv has none.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    let program = it.next().unwrap_or_else(|| "slowb".into());
    while let Some(arg) = it.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = it
                .next()
                .ok_or("--config needs a file path (flat `key = value` lines)")?;
            config = Some(path);
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(path.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        let mut out = vec![program];
        out.extend(rest);
        return Ok(out);
    };

    let (command, file_args) = parse(Path::new(&path))?;
    let has_subcommand = rest
        .first()
        .is_some_and(|a| !a.to_string_lossy().starts_with('-'));
    let mut out = vec![program];
    if has_subcommand {
        out.push(rest.remove(0));
    } else if let Some(cmd) = command {
        out.push(cmd.into());
    }
    out.extend(file_args.into_iter().map(OsString::from));
    out.extend(rest);
    Ok(out)
}

fn parse(path: &Path) -> Result<(Option<String>, Vec<String>), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut command = None;
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                i + 1
            ));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            return Err(format!("{}:{}: empty key", path.display(), i + 1));
        }
        if key == "command" {
            command = Some(value.to_string());
        } else if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(format!(
                        "{}:{}: `{key}` takes true or false, got `{value}`",
                        path.display(),
                        i + 1
                    ))
                }
            }
        } else {
            args.push(format!("--{key}"));
            args.push(value.replace(' ', ""));
        }
    }
    Ok((command, args))
}
