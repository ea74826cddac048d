//! Structured-text record of a run. The only file that carries a timestamp.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use translator_lab::spaces::Diagnostic;
use translator_lab::LabError;

pub struct Manifest {
    table: toml::Table,
}

fn typed(text: &str) -> toml::Value {
    if let Ok(i) = text.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = text.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = text.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(text.to_string())
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<toml::Value, LabError> {
    toml::Value::try_from(v).map_err(|e| LabError::Numerical(format!("manifest serialization failed: {e}")))
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut table = toml::Table::new();
        table.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        table.insert("command".into(), command.into());
        Manifest { table }
    }

    pub fn config(&mut self, resolved: &BTreeMap<String, String>) {
        let cfg: toml::Table = resolved.iter().map(|(k, v)| (k.clone(), typed(v))).collect();
        self.table.insert("config".into(), toml::Value::Table(cfg));
    }

    pub fn section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), LabError> {
        self.table.insert(name.into(), to_value(value)?);
        Ok(())
    }

    pub fn push<T: Serialize>(&mut self, array: &str, value: &T) -> Result<(), LabError> {
        let v = to_value(value)?;
        match self.table.entry(array.to_string()).or_insert_with(|| toml::Value::Array(Vec::new())) {
            toml::Value::Array(a) => a.push(v),
            _ => return Err(LabError::Numerical(format!("manifest key {array} is not an array"))),
        }
        Ok(())
    }

    pub fn diagnostics(&mut self, diags: &[Diagnostic]) -> Result<(), LabError> {
        for d in diags {
            let values: BTreeMap<&str, f64> = d.values.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let mut t = toml::Table::new();
            t.insert("code".into(), d.code.clone().into());
            t.insert("message".into(), d.message.clone().into());
            t.insert("values".into(), to_value(&values)?);
            self.push("diagnostics", &t)?;
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String, LabError> {
        let mut table = self.table.clone();
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        table.insert("created_unix".into(), toml::Value::Integer(secs as i64));
        toml::to_string(&table).map_err(|e| LabError::Numerical(format!("manifest serialization failed: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        std::fs::write(path, self.render()?)
            .map_err(|e| LabError::Config(format!("cannot write manifest {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    #[test]
    fn config_round_trips_through_manifest() {
        let mut s = Settings::from_text("").unwrap();
        s.get::<String>("kind", Some("cp".into()), String::new()).unwrap();
        s.get("s0", Some(1.6), 0.0).unwrap();
        s.get("n", Some(2u32), 0).unwrap();
        s.get("rtol", Some(1e-10), 0.0).unwrap();
        let mut m = Manifest::new("solve");
        m.config(s.resolved());
        m.push("events", &BTreeMap::from([("tag", "BlowUpPlus")])).unwrap();
        let text = m.render().unwrap();
        let mut back = Settings::from_text(&text).unwrap();
        assert_eq!(back.get("s0", None, 0.0).unwrap(), 1.6);
        assert_eq!(back.get("rtol", None, 0.0).unwrap(), 1e-10);
        assert_eq!(back.get::<String>("kind", None, String::new()).unwrap(), "cp");
        assert_eq!(back.get("n", None, 0u32).unwrap(), 2);
    }

    #[test]
    fn non_finite_values_serialize() {
        let mut m = Manifest::new("x");
        m.section("results", &BTreeMap::from([("a", f64::INFINITY), ("b", f64::NAN)])).unwrap();
        assert!(m.render().unwrap().contains("inf"));
    }
}
