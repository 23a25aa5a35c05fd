//! Resource caps shared by the solvers, overridable through `SMB_CSP_CAPS`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CAPS_ENV: &str = "SMB_CSP_CAPS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest search space the brute-force oracle will enumerate.
    pub oracle: u64,
    /// Largest subpower or polynomial closure.
    pub closure: usize,
    /// Longest product searched for a collapsing polynomial.
    pub collapse: usize,
    /// Entries kept in the per-call memo table.
    pub memo: usize,
    /// Largest instance size for the block-2-consistency audit.
    pub audit: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { oracle: 10_000_000, closure: 200_000, collapse: 8, memo: 4096, audit: 20_000 }
    }
}

impl Caps {
    /// Parses `key=value` pairs separated by commas, starting from the defaults.
    pub fn parse(spec: &str) -> Result<Caps> {
        let mut caps = Caps::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| Error::Parse(format!("cap `{part}` is not key=value")))?;
            let v: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("cap `{key}` has non-numeric value `{value}`")))?;
            match key.trim() {
                "oracle" => caps.oracle = v,
                "closure" => caps.closure = v as usize,
                "collapse" => caps.collapse = v as usize,
                "memo" => caps.memo = v as usize,
                "audit" => caps.audit = v,
                other => return Err(Error::Parse(format!("unknown cap `{other}`"))),
            }
        }
        Ok(caps)
    }

    /// Defaults overridden by the environment, if set.
    pub fn from_env() -> Result<Caps> {
        match std::env::var(CAPS_ENV) {
            Ok(s) => Caps::parse(&s),
            Err(_) => Ok(Caps::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides() {
        let c = Caps::parse("oracle=5, memo=7").unwrap();
        assert_eq!(c.oracle, 5);
        assert_eq!(c.memo, 7);
        assert_eq!(c.closure, Caps::default().closure);
        assert!(Caps::parse("bogus=1").is_err());
        assert!(Caps::parse("oracle").is_err());
    }
}
