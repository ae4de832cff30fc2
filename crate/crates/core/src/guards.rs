//! Size limits for the combinatorial parts of the library.
//!
//! Defaults can be raised with `GPTSTEER_GUARDS`, a comma-separated list of
//! `key=value` pairs, e.g. `GPTSTEER_GUARDS=dim=8,vertices=200`. Keys are
//! `dim`, `vertices`, `components`, `strategies`, `cmu_dim`, `subsets` and
//! `permutations`.

use std::cell::RefCell;

use crate::error::{GptError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    /// Largest dimension for brute-force vertex/facet enumeration.
    pub dim: usize,
    /// Largest vertex count of a user-specified polytope.
    pub vertices: usize,
    /// Largest number of components `g` of a dichotomic tensor.
    pub components: usize,
    /// Largest number of deterministic strategies in an LHS program.
    pub strategies: usize,
    /// Largest dimension accepted by the exact `c_mu` computation.
    pub cmu_dim: usize,
    /// Largest number of subsets visited by one enumeration.
    pub subsets: usize,
    /// Largest number of candidate vertex maps in a symmetry search.
    pub permutations: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            dim: 6,
            vertices: 64,
            components: 12,
            strategies: 4096,
            cmu_dim: 5,
            subsets: 2_000_000,
            permutations: 2_000_000,
        }
    }
}

thread_local! {
    static OVERRIDE: RefCell<Option<Guards>> = const { RefCell::new(None) };
}

impl Guards {
    /// Parses a `key=value,...` string on top of the defaults.
    pub fn parse(spec: &str) -> Result<Guards> {
        let mut g = Guards::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| GptError::InvalidInput(format!("guard entry `{item}` is not key=value")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| GptError::InvalidInput(format!("guard value in `{item}` is not an integer")))?;
            let slot = match key.trim() {
                "dim" => &mut g.dim,
                "vertices" => &mut g.vertices,
                "components" => &mut g.components,
                "strategies" => &mut g.strategies,
                "cmu_dim" => &mut g.cmu_dim,
                "subsets" => &mut g.subsets,
                "permutations" => &mut g.permutations,
                other => return Err(GptError::InvalidInput(format!("unknown guard `{other}`"))),
            };
            *slot = value;
        }
        Ok(g)
    }

    /// Guards in effect on this thread: a scoped override if one is active,
    /// otherwise the environment, otherwise the defaults.
    pub fn current() -> Guards {
        if let Some(g) = OVERRIDE.with(|o| *o.borrow()) {
            return g;
        }
        match std::env::var("GPTSTEER_GUARDS") {
            Ok(spec) => Guards::parse(&spec).unwrap_or_default(),
            Err(_) => Guards::default(),
        }
    }

    /// Runs `f` with `self` as the guards of the current thread.
    pub fn scoped<R>(self, f: impl FnOnce() -> R) -> R {
        struct Reset(Option<Guards>);
        impl Drop for Reset {
            fn drop(&mut self) {
                let prev = self.0;
                OVERRIDE.with(|o| *o.borrow_mut() = prev);
            }
        }
        let prev = OVERRIDE.with(|o| o.borrow_mut().replace(self));
        let _reset = Reset(prev);
        f()
    }
}

pub(crate) fn check(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(GptError::GuardExceeded { what, value, limit })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides() {
        let g = Guards::parse("dim=8, vertices=100").unwrap();
        assert_eq!(g.dim, 8);
        assert_eq!(g.vertices, 100);
        assert_eq!(g.components, 12);
        assert!(Guards::parse("dim").is_err());
        assert!(Guards::parse("colour=3").is_err());
    }

    #[test]
    fn scoped_override_is_restored() {
        let big = Guards { dim: 9, ..Guards::default() };
        big.scoped(|| assert_eq!(Guards::current().dim, 9));
        assert_ne!(Guards::current().dim, 9);
    }
}
