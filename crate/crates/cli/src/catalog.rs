//! Built-in example specs.

use crate::spec::{load_manifold_spec, ManifoldSpec, SpecError};

pub struct Entry {
    pub name: &'static str,
    pub text: &'static str,
    /// Expected to fail; excluded from `catalog all`.
    pub negative_control: bool,
}

pub const ENTRIES: &[Entry] = &[
    Entry { name: "bernoulli", text: include_str!("../catalog/bernoulli.toml"), negative_control: false },
    Entry { name: "categorical3", text: include_str!("../catalog/categorical3.toml"), negative_control: false },
    Entry { name: "ising1d", text: include_str!("../catalog/ising1d.toml"), negative_control: false },
    Entry { name: "orthant_cone", text: include_str!("../catalog/orthant_cone.toml"), negative_control: false },
    Entry { name: "trivial_wdvv3", text: include_str!("../catalog/trivial_wdvv3.toml"), negative_control: false },
    Entry { name: "perturbed_wdvv3", text: include_str!("../catalog/perturbed_wdvv3.toml"), negative_control: true },
    Entry {
        name: "harmonic_oscillator",
        text: include_str!("../catalog/harmonic_oscillator.toml"),
        negative_control: false,
    },
    Entry {
        name: "linear_hydro_lattice",
        text: include_str!("../catalog/linear_hydro_lattice.toml"),
        negative_control: false,
    },
];

pub fn entry(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name)
}

pub fn load(name: &str) -> Option<Result<ManifoldSpec, SpecError>> {
    entry(name).map(|e| load_manifold_spec(e.text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads_under_its_own_name() {
        for e in ENTRIES {
            let spec = load_manifold_spec(e.text).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(spec.name, e.name);
        }
    }
}
