//! `--config <path>`: flat `key = value` files whose keys are flag names.
//!
//! The file's entries are spliced in right after the subcommand so that any
//! flag given on the command line overrides them.

use std::ffi::OsString;

pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                let value = iter.next().ok_or("--config needs a path")?;
                path = Some(value);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s[9..])),
            _ => rest.push(arg),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let injected = parse_config(&text)?;
    // program name, then subcommand
    let split_at = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..split_at].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend_from_slice(&rest[split_at..]);
    Ok(out)
}

fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value.to_string());
            }
        }
    }
    Ok(args)
}
