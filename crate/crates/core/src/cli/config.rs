//! Sectioned `key = value` scenario files.
//!
//! ```text
//! # comment
//! [energy]
//! kernel = kuramoto
//! kappa = 4
//! ```
//!
//! `key: value` is accepted as well. Every key must be consumed by the scenario builder;
//! leftovers are reported as unknown keys.

use std::cell::{Cell, RefCell};

use crate::error::{Error, Result};

pub(crate) const SECTIONS: [&str; 6] = ["scenario", "domain", "energy", "initial", "dynamics", "equilibria"];
const CHECKS: &str = "checks";

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: Cell<bool>,
}

#[derive(Debug)]
struct Section {
    name: String,
    entries: Vec<Entry>,
}

#[derive(Debug)]
pub(crate) struct RawConfig {
    pub path: String,
    sections: Vec<Section>,
    errors: RefCell<Vec<String>>,
}

fn strip_comment(line: &str) -> &str {
    let cut = line
        .char_indices()
        .find(|&(i, c)| (c == '#' || c == ';') && (i == 0 || line[..i].ends_with(char::is_whitespace)))
        .map(|(i, _)| i)
        .unwrap_or(line.len());
    line[..cut].trim()
}

impl RawConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { path: path.into(), line, message };
        let mut sections: Vec<Section> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = strip_comment(raw);
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{s}`")))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) && name != CHECKS {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                if sections.iter().any(|x| x.name == name) {
                    return Err(err(line, format!("section [{name}] appears twice")));
                }
                sections.push(Section { name, entries: Vec::new() });
                continue;
            }
            let pos = s
                .find(['=', ':'])
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
            let key = s[..pos].trim().to_ascii_lowercase();
            let value = s[pos + 1..].trim().to_string();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(line, format!("invalid key `{}`", s[..pos].trim())));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| err(line, format!("key `{key}` appears before any section")))?;
            if section.entries.iter().any(|e| e.key == key) {
                return Err(err(line, format!("key `{key}` repeated in [{}]", section.name)));
            }
            section.entries.push(Entry { key, value, line, used: Cell::new(false) });
        }
        Ok(RawConfig { path: path.into(), sections, errors: RefCell::new(Vec::new()) })
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        let e = self.sections.iter().find(|s| s.name == section)?.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    pub fn error(&self, message: impl Into<String>) {
        self.errors.borrow_mut().push(message.into());
    }

    pub fn str(&self, section: &str, key: &str) -> Option<String> {
        self.entry(section, key).map(|e| e.value.clone())
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> String {
        self.str(section, key).unwrap_or_else(|| default.into())
    }

    pub fn require_str(&self, section: &str, key: &str) -> String {
        self.str(section, key).unwrap_or_else(|| {
            self.error(format!("[{section}] {key} is required"));
            String::new()
        })
    }

    fn number(&self, e: &Entry, section: &str) -> Option<f64> {
        match parse_number(&e.value) {
            Some(v) => Some(v),
            None => {
                self.error(format!("[{section}] {} (line {}): expected a number, got `{}`", e.key, e.line, e.value));
                None
            }
        }
    }

    pub fn f64(&self, section: &str, key: &str) -> Option<f64> {
        self.entry(section, key).and_then(|e| self.number(e, section))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> f64 {
        self.f64(section, key).unwrap_or(default)
    }

    pub fn require_f64(&self, section: &str, key: &str) -> f64 {
        match self.entry(section, key) {
            Some(e) => self.number(e, section).unwrap_or(f64::NAN),
            None => {
                self.error(format!("[{section}] {key} is required"));
                f64::NAN
            }
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Option<usize> {
        let e = self.entry(section, key)?;
        match e.value.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.error(format!(
                    "[{section}] {} (line {}): expected a non-negative integer, got `{}`",
                    e.key, e.line, e.value
                ));
                None
            }
        }
    }

    pub fn bool(&self, section: &str, key: &str) -> Option<bool> {
        let e = self.entry(section, key)?;
        match e.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" => Some(true),
            "false" | "no" | "off" => Some(false),
            _ => {
                self.error(format!("[{section}] {} (line {}): expected true or false, got `{}`", e.key, e.line, e.value));
                None
            }
        }
    }

    pub fn list_f64(&self, section: &str, key: &str) -> Option<Vec<f64>> {
        let e = self.entry(section, key)?;
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match parse_number(item) {
                Some(v) => out.push(v),
                None => {
                    self.error(format!("[{section}] {} (line {}): `{item}` is not a number", e.key, e.line));
                    return None;
                }
            }
        }
        Some(out)
    }

    pub fn list_str(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.str(section, key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    /// Keys of `[checks]` in file order.
    pub fn check_keys(&self) -> Vec<String> {
        self.sections
            .iter()
            .find(|s| s.name == CHECKS)
            .map(|s| s.entries.iter().map(|e| e.key.clone()).collect())
            .unwrap_or_default()
    }

    pub fn checks_section() -> &'static str {
        CHECKS
    }

    /// Unknown keys first (hard error), then accumulated validation failures.
    pub fn finish(&self) -> Result<()> {
        for s in &self.sections {
            if let Some(e) = s.entries.iter().find(|e| !e.used.get()) {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    line: e.line,
                    message: format!("unknown key `{}` in [{}]", e.key, s.name),
                });
            }
        }
        let errors = self.errors.borrow();
        if errors.is_empty() { Ok(()) } else { Err(Error::Validation(errors.clone())) }
    }
}

/// Decimal numbers plus simple fractions such as `1/3`.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
        return (b != 0.0).then_some(a / b);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_fractions() {
        let cfg = RawConfig::parse("[energy]\nkappa = 1/3 # note\nkernel: kuramoto\n", "t.cfg").unwrap();
        assert_eq!(cfg.f64("energy", "kappa"), Some(1.0 / 3.0));
        assert_eq!(cfg.str("energy", "kernel").as_deref(), Some("kuramoto"));
        cfg.finish().unwrap();
    }

    #[test]
    fn leftover_key_is_named() {
        let cfg = RawConfig::parse("[energy]\nkapa = 1\n", "t.cfg").unwrap();
        let e = cfg.finish().unwrap_err().to_string();
        assert!(e.contains("kapa") && e.contains(":2:"), "{e}");
    }
}
