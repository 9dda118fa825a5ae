//! `key=value` configuration: defaults, then the config file, then flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// A configuration key and its default value.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
}

pub const fn key(name: &'static str, default: &'static str) -> KeySpec {
    KeySpec { name, default }
}

/// Every key resolved to a concrete string, in key order.
pub type Resolved = BTreeMap<String, String>;

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got `{line}`", i + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Applies `file` and then `flags` over the defaults in `specs`.
pub fn resolve(
    specs: &[KeySpec],
    file: &[(String, String)],
    flags: &[(&str, Option<String>)],
) -> Result<Resolved, CliError> {
    let mut out: Resolved = specs.iter().map(|s| (s.name.to_string(), s.default.to_string())).collect();
    for (k, v) in file {
        match out.get_mut(k) {
            Some(slot) => *slot = v.clone(),
            None => return Err(CliError::Usage(format!("unknown configuration key `{k}`"))),
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            match out.get_mut(*k) {
                Some(slot) => *slot = v.clone(),
                None => return Err(CliError::Usage(format!("unknown configuration key `{k}`"))),
            }
        }
    }
    Ok(out)
}

/// Typed access to a resolved configuration; parse failures name the key.
pub struct Values<'a>(pub &'a Resolved);

impl Values<'_> {
    pub fn str(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` is not registered"))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.str(key);
        raw.trim().parse().map_err(|_| invalid(key, raw))
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(key, self.str(key)))
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.str(key);
        let items: Result<Vec<T>, _> = raw.split(',').map(|p| p.trim().parse()).collect();
        match items {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(invalid(key, raw)),
        }
    }

    pub fn is_auto(&self, key: &str) -> bool {
        self.str(key) == "auto"
    }
}

pub fn invalid(key: &str, raw: &str) -> CliError {
    CliError::Usage(format!("invalid value `{raw}` for key `{key}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPECS: &[KeySpec] = &[key("seed", "1"), key("n", "10")];

    #[test]
    fn flags_override_file_override_defaults() {
        let file = parse_config("# comment\nseed = 5\n\nn=20 # trailing\n").unwrap();
        let r = resolve(SPECS, &file, &[("n", Some("30".into())), ("seed", None)]).unwrap();
        assert_eq!(r["seed"], "5");
        assert_eq!(r["n"], "30");
    }

    #[test]
    fn unknown_key_is_named() {
        let file = parse_config("sede=5").unwrap();
        match resolve(SPECS, &file, &[]) {
            Err(CliError::Usage(m)) => assert!(m.contains("`sede`"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(parse_config("seed 5").is_err());
    }

    #[test]
    fn bad_value_names_key() {
        let r = resolve(SPECS, &[], &[("n", Some("ten".into()))]).unwrap();
        match Values(&r).parse::<usize>("n") {
            Err(CliError::Usage(m)) => assert!(m.contains("`n`")),
            other => panic!("{other:?}"),
        }
    }
}
