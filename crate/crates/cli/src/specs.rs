//! Shipped verification specs, embedded from `specs/` at the workspace
//! root so the binary is self-contained.

use crate::config::ExperimentConfig;

macro_rules! spec_file {
    ($name:literal) => {
        ($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../specs/", $name, ".json")))
    };
}

pub const SPECS: &[(&str, &str)] = &[
    spec_file!("v1_constant_critical"),
    spec_file!("v2_constant_subcritical"),
    spec_file!("v3_iid_critical"),
    spec_file!("v3_iid_critical_mixed"),
    spec_file!("v4_iid_subcritical_kappa1"),
    spec_file!("v4_iid_subcritical_kappa2"),
    spec_file!("v5_markov_critical"),
    spec_file!("v6_markov_subcritical"),
];

pub fn load(name: &str) -> ExperimentConfig {
    let (_, text) = SPECS
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("unknown verification spec {name}"));
    ExperimentConfig::from_json(text).unwrap_or_else(|e| panic!("spec {name} invalid: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_specs_parse() {
        for (name, _) in SPECS {
            let cfg = load(name);
            assert_eq!(&cfg.name, name);
        }
    }
}
