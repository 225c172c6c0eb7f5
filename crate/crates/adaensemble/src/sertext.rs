//! Flat key-value text serialization used by every model format. One
//! record per line: `key value...`, floats printed with 17 significant
//! digits so parsing reproduces them bit for bit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn fmt_f64_slice(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::data(format!("bad float {s:?} in model file")))
}

pub fn parse_f64_slice(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(parse_f64).collect()
}

pub fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::data(format!("bad integer {s:?} in model file")))
}

/// Parsed key-value document. Keys may repeat; values keep line order.
pub struct KvDoc {
    entries: BTreeMap<String, Vec<String>>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Self {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = match line.split_once(' ') {
                Some((k, v)) => (k, v),
                None => (line, ""),
            };
            entries.entry(key.to_string()).or_default().push(value.trim().to_string());
        }
        KvDoc { entries }
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .and_then(|v| v.first())
            .map(|s| s.as_str())
            .ok_or_else(|| Error::data(format!("missing key {key:?} in model file")))
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .get(key)
            .map(|v| v.iter().map(|s| s.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.get(key)?)
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        parse_usize(self.get(key)?)
    }

    pub fn get_floats(&self, key: &str) -> Result<Vec<f64>> {
        parse_f64_slice(self.get(key)?)
    }

    /// Missing key or empty payload parses as an empty vector.
    pub fn get_floats_or_empty(&self, key: &str) -> Result<Vec<f64>> {
        match self.entries.get(key).and_then(|v| v.first()) {
            Some(s) => parse_f64_slice(s),
            None => Ok(Vec::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_exact() {
        for v in [0.1, -3.25e-17, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(parse_f64(&fmt_f64(v)).unwrap(), v);
        }
    }

    #[test]
    fn doc_parse_and_lookup() {
        let doc = KvDoc::parse("# comment\nalpha 1 2 3\nbeta 4.5\nalpha 9\n");
        assert_eq!(doc.get_floats("alpha").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(doc.get_all("alpha").len(), 2);
        assert_eq!(doc.get_f64("beta").unwrap(), 4.5);
        assert!(doc.get("gamma").is_err());
    }
}
