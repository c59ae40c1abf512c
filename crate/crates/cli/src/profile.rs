use std::path::Path;

use serde::{Deserialize, Serialize};
use tsch_core::analysis::EnergyProfile;

/// Energy profile picked on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedProfile {
    pub name: String,
    pub profile: EnergyProfile,
}

/// Custom profile file: per-event energies in microjoules.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    tx: f64,
    rx: f64,
    listen: f64,
}

impl NamedProfile {
    pub fn openmote_b() -> Self {
        NamedProfile {
            name: "openmote-b".into(),
            profile: EnergyProfile::openmote_b(),
        }
    }

    pub fn openmote_stm() -> Self {
        NamedProfile {
            name: "openmote-stm".into(),
            profile: EnergyProfile::openmote_stm(),
        }
    }

    fn custom(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read profile {}: {e}", path.display()))?;
        let f: ProfileFile =
            serde_json::from_str(&text).map_err(|e| format!("invalid profile {}: {e}", path.display()))?;
        let profile = EnergyProfile::from_microjoules(f.tx, f.rx, f.listen);
        profile.check().map_err(|e| e.to_string())?;
        Ok(NamedProfile {
            name: format!("custom:{}", path.display()),
            profile,
        })
    }
}

/// `openmote-b`, `openmote-stm` or `custom:<path>` where the file holds
/// `{"tx": .., "rx": .., "listen": ..}` in microjoules.
pub fn parse_profile(s: &str) -> Result<NamedProfile, String> {
    match s {
        "openmote-b" => Ok(NamedProfile::openmote_b()),
        "openmote-stm" => Ok(NamedProfile::openmote_stm()),
        _ => match s.strip_prefix("custom:") {
            Some(p) if !p.is_empty() => NamedProfile::custom(Path::new(p)),
            _ => Err(format!(
                "unknown profile '{s}'; expected openmote-b, openmote-stm or custom:<path>"
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        assert_eq!(parse_profile("openmote-b").unwrap().profile, EnergyProfile::openmote_b());
        assert_eq!(parse_profile("openmote-stm").unwrap().profile, EnergyProfile::openmote_stm());
        assert!(parse_profile("telosb").is_err());
        assert!(parse_profile("custom:").is_err());
    }

    #[test]
    fn custom_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        std::fs::write(&p, r#"{"tx": 100, "rx": 200, "listen": 50}"#).unwrap();
        let got = parse_profile(&format!("custom:{}", p.display())).unwrap();
        assert_eq!(got.profile, EnergyProfile::from_microjoules(100.0, 200.0, 50.0));
        std::fs::write(&p, r#"{"tx": 100, "rx": 200}"#).unwrap();
        assert!(parse_profile(&format!("custom:{}", p.display())).is_err());
        assert!(parse_profile("custom:/nonexistent/profile.json").is_err());
    }
}
