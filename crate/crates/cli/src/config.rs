//! Flat key-value experiment files with `[section]` headers.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use ini::Ini;

/// Keys outside any section land here.
pub const ROOT: &str = "run";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("{e}"))?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let entry = sections
                .entry(name.unwrap_or(ROOT).trim().to_ascii_lowercase())
                .or_default();
            for (k, v) in props.iter() {
                entry.insert(k.trim().to_ascii_lowercase(), strip_inline_comment(v).to_string());
            }
        }
        sections.retain(|_, v| !v.is_empty());
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Section<'_> {
        Section {
            name: name.to_string(),
            values: self.sections.get(name),
        }
    }

    /// Every section and key, for the run manifest.
    pub fn echo(&self) -> &BTreeMap<String, BTreeMap<String, String>> {
        &self.sections
    }
}

fn strip_inline_comment(v: &str) -> &str {
    let cut = [" ;", " #", "\t;", "\t#"]
        .iter()
        .filter_map(|m| v.find(m))
        .min()
        .unwrap_or(v.len());
    v[..cut].trim()
}

/// Read-only view of one section; a missing section behaves as empty.
#[derive(Debug, Clone)]
pub struct Section<'a> {
    name: String,
    values: Option<&'a BTreeMap<String, String>>,
}

impl<'a> Section<'a> {
    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.values?.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("[{}] {key} = {v:?}: {e}", self.name))
            })
            .transpose()
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|e| anyhow!("[{}] {key} item {s:?}: {e}", self.name))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&'a str, &'a str)> {
        self.values
            .into_iter()
            .flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_root_keys() {
        let cfg = Config::parse("seed = 4\n[Problem]\nnodes = 5 ; five\nratios = 1.0, 2.5\n").unwrap();
        assert_eq!(cfg.section(ROOT).get::<u64>("seed").unwrap(), Some(4));
        let p = cfg.section("problem");
        assert_eq!(p.get::<usize>("nodes").unwrap(), Some(5));
        assert_eq!(p.list::<f64>("ratios").unwrap(), Some(vec![1.0, 2.5]));
        assert!(cfg.section("qaoa").get::<usize>("depth").unwrap().is_none());
    }

    #[test]
    fn bad_values_name_the_key() {
        let cfg = Config::parse("[qaoa]\ndepth = three\n").unwrap();
        let err = cfg.section("qaoa").get::<usize>("depth").unwrap_err();
        assert!(err.to_string().contains("depth"));
    }
}
