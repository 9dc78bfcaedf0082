use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Flat `key=value` record of how an output file was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String]) -> Self {
        let mut m = Self { entries: Vec::new() };
        m.push("tool_version", env!("CARGO_PKG_VERSION"));
        m.push("subcommand", subcommand);
        m.push("command", argv.join(" "));
        m.push("timestamp", chrono::Utc::now().to_rfc3339());
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={}\n", v.replace('\n', " ")))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }

    /// Manifest path next to an output file: `<output>.manifest`.
    pub fn sibling_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> std::io::Result<PathBuf> {
        let path = Self::sibling_path(output);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.render().as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse() {
        let mut m = RunManifest::new("region", &["demguard".into(), "region".into()]);
        m.push("grid", "0.005:0.25:0.005");
        let back = RunManifest::parse(&m.render());
        assert_eq!(back, m);
        assert_eq!(back.get("grid"), Some("0.005:0.25:0.005"));
        assert_eq!(
            RunManifest::sibling_path(Path::new("out/region.csv")),
            PathBuf::from("out/region.csv.manifest")
        );
    }
}
