//! Run settings: command-line flags layered over an optional `key = value`
//! file. A previous run manifest is a valid config file; its `[config]`
//! table is used.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use translator_lab::LabError;

#[derive(Debug, Default, Clone)]
pub struct Settings {
    file: BTreeMap<String, String>,
    /// Every value looked up, as it was resolved. Echoed into the manifest.
    resolved: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

fn scalar_text(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        toml::Value::Array(a) => {
            let parts: Option<Vec<String>> = a.iter().map(scalar_text).collect();
            parts.map(|p| p.join(","))
        }
        _ => None,
    }
}

/// Plain `key = value` lines; `#` starts a comment, `[section]` lines are skipped.
fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, LabError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", no + 1)))?;
        let v = v.trim().trim_matches('"').to_string();
        out.insert(normalize(k), v);
    }
    Ok(out)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, LabError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, LabError> {
        let file = match text.parse::<toml::Table>() {
            Ok(table) => {
                let source = match table.get("config") {
                    Some(toml::Value::Table(t)) => t.clone(),
                    _ => table,
                };
                source.iter().filter_map(|(k, v)| scalar_text(v).map(|s| (normalize(k), s))).collect()
            }
            Err(_) => parse_lines(text)?,
        };
        Ok(Settings { file, resolved: BTreeMap::new() })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file.get(&normalize(key)).map(String::as_str)
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, LabError>
    where
        T: FromStr + ToString,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.raw(key) {
                Some(text) => text
                    .parse()
                    .map_err(|_| LabError::Config(format!("cannot parse {key} = '{text}'")))?,
                None => default,
            },
        };
        self.resolved.insert(normalize(key), value.to_string());
        Ok(value)
    }

    /// Like [`Settings::get`] with no default; `None` when neither source has it.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, LabError>
    where
        T: FromStr + ToString,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.raw(key) {
                Some(text) => Some(
                    text.parse()
                        .map_err(|_| LabError::Config(format!("cannot parse {key} = '{text}'")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(normalize(key), v.to_string());
        }
        Ok(value)
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// Comma-separated list of numbers.
pub fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>, LabError> {
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| LabError::Config(format!("bad entry '{p}' in {key}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let mut s = Settings::from_text("rtol = 1e-6\nkind = cp\n# comment\n").unwrap();
        assert_eq!(s.get("rtol", None, 1e-9).unwrap(), 1e-6);
        assert_eq!(s.get("rtol", Some(1e-8), 1e-9).unwrap(), 1e-8);
        assert_eq!(s.get::<String>("kind", None, "sphere".into()).unwrap(), "cp");
        assert_eq!(s.get("n", None, 2u32).unwrap(), 2);
        assert_eq!(s.resolved()["n"], "2");
    }

    #[test]
    fn manifest_config_table_is_used() {
        let text = "version = \"0.1.0\"\n[config]\nkind = \"hp\"\nn = 1\ns0 = 0.5\n[results]\nn = 7\n";
        let mut s = Settings::from_text(text).unwrap();
        assert_eq!(s.get("n", None, 3u32).unwrap(), 1);
        assert_eq!(s.get("s0", None, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn underscores_and_dashes_match() {
        let mut s = Settings::from_text("t_end = 2").unwrap();
        assert_eq!(s.get("t-end", None, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut s = Settings::from_text("n = two").unwrap();
        assert!(matches!(s.get("n", None, 2u32), Err(LabError::Config(_))));
        assert!(Settings::from_text("just words").is_err());
        assert_eq!(parse_list::<u32>("m", "1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<f64>("x", "1,a").is_err());
    }
}
