//! Resolution of experiment parameters from flags, environment, config file
//! and defaults, in that order of precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::Failure;

/// Every key any subcommand understands, in canonical spelling.
pub const KEYS: [&str; 21] = [
    "n", "rho", "r", "N", "t-max", "trials", "seed", "workers", "out", "ledger", "desk-m", "desk-N", "desk-R", "dilation",
    "kappa", "alpha", "norms", "restarts", "directions", "budget", "sampler",
];

/// Environment variable for `key`: `ROUNDNET_` plus the upper-cased key with
/// `-` replaced by `_`; capital `N` and `R` become `BIG_N` and `BIG_R`.
pub fn env_var_name(key: &str) -> String {
    let mut name = String::from("ROUNDNET_");
    for part in key.split('-') {
        if !name.ends_with('_') {
            name.push('_');
        }
        match part {
            "N" => name.push_str("BIG_N"),
            "R" => name.push_str("BIG_R"),
            p => name.push_str(&p.to_uppercase().replace('-', "_")),
        }
    }
    name
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    NetStats,
    RoundingTails,
    Lemma32,
    KeyBound,
    Slicing,
    Strips,
    HsNet,
    Bkappa,
}

const COMMON: [&str; 3] = ["seed", "workers", "out"];

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::NetStats => "net-stats",
            Subcommand::RoundingTails => "rounding-tails",
            Subcommand::Lemma32 => "lemma32",
            Subcommand::KeyBound => "key-bound",
            Subcommand::Slicing => "slicing",
            Subcommand::Strips => "strips",
            Subcommand::HsNet => "hs-net",
            Subcommand::Bkappa => "bkappa",
        }
    }

    fn own_keys(&self) -> &'static [&'static str] {
        match self {
            Subcommand::NetStats => &["n", "rho", "budget"],
            Subcommand::RoundingTails => &["n", "rho", "trials", "directions"],
            Subcommand::Lemma32 => &["n", "rho", "ledger"],
            Subcommand::KeyBound => &["n", "N", "r", "rho", "t-max", "trials", "restarts", "budget", "ledger"],
            Subcommand::Slicing => &["n", "desk-m", "desk-N", "desk-R", "dilation", "trials", "directions", "budget"],
            Subcommand::Strips => &["n", "N", "alpha", "trials", "budget"],
            Subcommand::HsNet => &["n", "N", "rho", "trials", "sampler", "ledger"],
            Subcommand::Bkappa => &["norms", "kappa", "n", "N", "trials", "sampler"],
        }
    }

    pub fn accepts(&self, key: &str) -> bool {
        COMMON.contains(&key) || self.own_keys().contains(&key)
    }

    /// Default for `key` given the keys resolved so far; `None` means the
    /// key stays unset.
    fn default_for(&self, key: &str, map: &BTreeMap<String, String>) -> Option<String> {
        let n = || map.get("n").and_then(|v| v.parse::<f64>().ok());
        let s = |v: &str| Some(v.to_string());
        use Subcommand::*;
        match (self, key) {
            (_, "seed") => s("0"),
            (_, "workers") => s("1"),
            (_, "out") => s("-"),
            (NetStats, "n") => s("2"),
            (NetStats, "rho") => s("0.4"),
            (NetStats, "budget") => s("10000000"),
            (RoundingTails, "n") => s("16"),
            (RoundingTails, "rho") => s("0.3"),
            (RoundingTails, "trials") => s("100000"),
            (RoundingTails, "directions") => s("3"),
            (Lemma32, "n") => s("16"),
            (Lemma32, "rho") => s("0.25"),
            (KeyBound, "n") => s("16"),
            (KeyBound, "N") => s("4096"),
            (KeyBound, "r") => n().map(|v| v.to_string()),
            (KeyBound, "rho") => {
                let nn = n()?;
                let bn: f64 = map.get("N")?.parse().ok()?;
                let r: f64 = map.get("r")?.parse().ok()?;
                Some((nn * nn.sqrt() / (bn * r)).to_string())
            }
            (KeyBound, "t-max") => s("3"),
            (KeyBound, "trials") => s("1"),
            (KeyBound, "restarts") => s("50"),
            (KeyBound, "budget") => s("1000000"),
            (Slicing, "n") => s("6"),
            (Slicing, "desk-m") => s("1"),
            (Slicing, "desk-N") => n().map(|v| (50.0 * v).to_string()),
            (Slicing, "desk-R") => n().map(|v| (v / v.ln().max(1.0)).to_string()),
            (Slicing, "dilation") => s("4"),
            (Slicing, "trials") => s("100000"),
            (Slicing, "directions") => s("1000"),
            (Slicing, "budget") => s("1000000"),
            (Strips, "n") => s("3"),
            (Strips, "N") => s("500"),
            (Strips, "alpha") => s("0.02"),
            (Strips, "trials") => s("10"),
            (Strips, "budget") => s("20000"),
            (HsNet, "n") => s("8"),
            (HsNet, "N") => n().map(|v| v.to_string()),
            (HsNet, "rho") => s("0.3"),
            (HsNet, "trials") => s("100000"),
            (HsNet, "sampler") => s("gaussian"),
            (Bkappa, "kappa") => s("10"),
            (Bkappa, "n") if !map.contains_key("norms") => s("8"),
            (Bkappa, "N") if !map.contains_key("norms") => n().map(|v| v.to_string()),
            (Bkappa, "trials") if !map.contains_key("norms") => s("10000"),
            (Bkappa, "sampler") if !map.contains_key("norms") => s("gaussian"),
            _ => None,
        }
    }

    fn resolution_order(&self) -> Vec<&'static str> {
        // Keys whose defaults depend on others come last.
        let mut keys: Vec<&'static str> = COMMON.iter().chain(self.own_keys()).copied().collect();
        let late = ["N", "r", "rho", "desk-N", "desk-R"];
        keys.sort_by_key(|k| match late.iter().position(|l| l == k) {
            Some(p) => 1 + p,
            None => 0,
        });
        keys
    }
}

/// Parses the flat `key=value` format; `#` starts a comment line.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Failure::Usage(format!("unknown key `{k}` in config file")));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// A fully resolved parameter set for one subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// `flags` holds the command-line values, `env` a lookup for environment
    /// variables and `file` the parsed config file.
    pub fn resolve(
        subcommand: Subcommand,
        flags: &BTreeMap<String, String>,
        env: impl Fn(&str) -> Option<String>,
        file: &BTreeMap<String, String>,
    ) -> Result<Self, Failure> {
        for k in flags.keys().chain(file.keys()) {
            if !KEYS.contains(&k.as_str()) {
                return Err(Failure::Usage(format!("unknown key `{k}`")));
            }
            if !subcommand.accepts(k) {
                return Err(Failure::Usage(format!("key `{k}` is not accepted by {}", subcommand.name())));
            }
        }
        let mut values = BTreeMap::new();
        for key in subcommand.resolution_order() {
            let v = flags
                .get(key)
                .cloned()
                .or_else(|| env(&env_var_name(key)))
                .or_else(|| file.get(key).cloned())
                .or_else(|| subcommand.default_for(key, &values));
            if let Some(v) = v {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Self { subcommand, values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        let raw = self.raw(key).ok_or_else(|| Failure::Usage(format!("missing value for `{key}`")))?;
        raw.parse().map_err(|_| Failure::Usage(format!("invalid value `{raw}` for `{key}`")))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, Failure> {
        let raw = self.raw(key).ok_or_else(|| Failure::Usage(format!("missing value for `{key}`")))?;
        raw.split(',')
            .map(|p| p.trim().parse().map_err(|_| Failure::Usage(format!("invalid entry `{p}` in `{key}`"))))
            .collect()
    }

    /// `subcommand=<name>;key=value;...` with keys sorted.
    pub fn canonical(&self) -> String {
        let mut parts = vec![format!("subcommand={}", self.subcommand.name())];
        parts.extend(self.values.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join(";")
    }
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn precedence() {
        let flags = map(&[("n", "5")]);
        let file = map(&[("n", "7"), ("rho", "0.2"), ("budget", "99")]);
        let env = |k: &str| (k == "ROUNDNET_RHO").then(|| "0.3".to_string());
        let c = ExperimentConfig::resolve(Subcommand::NetStats, &flags, env, &file).unwrap();
        assert_eq!(c.raw("n"), Some("5"));
        assert_eq!(c.raw("rho"), Some("0.3"));
        assert_eq!(c.raw("budget"), Some("99"));
        assert_eq!(c.raw("seed"), Some("0"));
        assert_eq!(c.canonical(), "subcommand=net-stats;budget=99;n=5;out=-;rho=0.3;seed=0;workers=1");
    }

    #[test]
    fn rejects_foreign_keys() {
        let err = ExperimentConfig::resolve(Subcommand::NetStats, &map(&[("kappa", "2")]), |_| None, &BTreeMap::new());
        assert!(matches!(err, Err(Failure::Usage(m)) if m.contains("kappa")));
        assert!(parse_config_text("bogus=1").is_err());
        assert!(parse_config_text("# c\nn = 3\n").unwrap()["n"] == "3");
    }

    #[test]
    fn dependent_defaults() {
        let c = ExperimentConfig::resolve(Subcommand::Slicing, &map(&[("n", "4")]), |_| None, &BTreeMap::new()).unwrap();
        assert_eq!(c.raw("desk-N"), Some("200"));
        let c = ExperimentConfig::resolve(Subcommand::KeyBound, &BTreeMap::new(), |_| None, &BTreeMap::new()).unwrap();
        assert_eq!(c.raw("r"), Some("16"));
        assert_eq!(c.get::<f64>("rho").unwrap(), 64.0 / (4096.0 * 16.0));
        assert_eq!(env_var_name("desk-N"), "ROUNDNET_DESK_BIG_N");
        assert_eq!(env_var_name("t-max"), "ROUNDNET_T_MAX");
    }
}
