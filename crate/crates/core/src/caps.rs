//! Enumeration limits shared by the exhaustive searches.

use crate::error::{Error, Result};

/// Upper limits on every exhaustive enumeration in the crate.
///
/// Operations that would exceed a cap fail with [`Error::CapExceeded`]
/// instead of sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest ambient group order `N^(2g)` the torsion model will enumerate.
    pub ambient_order: u64,
    /// Largest matrix group materialized by closure.
    pub group_size: usize,
    /// Largest vector space `ell^dim` whose subspace lattice is enumerated.
    pub lattice: u64,
    /// Largest `N` for which the set Sigma is listed explicitly.
    pub sigma: u64,
    /// Exhaustive scan range used when refining the order threshold.
    pub threshold_scan: u64,
    /// Largest number of bits any big-integer result may occupy.
    pub bigint_bits: u64,
    /// Node budget for the minimal-cover search in `special_closure`.
    pub cover_nodes: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            ambient_order: 20_736,
            group_size: 50_000,
            lattice: 3_125,
            sigma: 1_000_000,
            threshold_scan: 1_000_000,
            bigint_bits: 1 << 22,
            cover_nodes: 5_000_000,
        }
    }
}

impl Caps {
    /// Apply overrides written as `key=value` pairs separated by commas,
    /// e.g. `ambient=4096,group=1000`. Keys: `ambient`, `group`, `lattice`,
    /// `sigma`, `scan`, `bits`, `cover`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("cap override `{item}` is not key=value")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cap `{key}` is not a positive integer")))?;
            if value == 0 {
                return Err(Error::invalid(format!("cap `{key}` must be positive")));
            }
            match key.trim() {
                "ambient" => self.ambient_order = value,
                "group" => self.group_size = value as usize,
                "lattice" => self.lattice = value,
                "sigma" => self.sigma = value,
                "scan" => self.threshold_scan = value,
                "bits" => self.bigint_bits = value,
                "cover" => self.cover_nodes = value,
                other => return Err(Error::invalid(format!("unknown cap `{other}`"))),
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let caps = Caps::default().with_overrides("ambient=625, group=10").unwrap();
        assert_eq!(caps.ambient_order, 625);
        assert_eq!(caps.group_size, 10);
        assert_eq!(caps.lattice, 3_125);
    }

    #[test]
    fn overrides_reject_garbage() {
        assert!(Caps::default().with_overrides("ambient").is_err());
        assert!(Caps::default().with_overrides("colour=3").is_err());
        assert!(Caps::default().with_overrides("group=0").is_err());
    }
}
