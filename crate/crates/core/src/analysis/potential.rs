use std::fmt;

use serde::{Deserialize, Serialize};

use crate::protocol::{classify, Configuration, Predicate};
use crate::topology::{NodeId, NodeSet, Topology};

/// Radius at which the variant function and the target legitimacy set are
/// defined.
pub const VARIANT_RADIUS: u32 = 2;

/// Lexicographic variant function over the 2-honest nodes.
///
/// `primary` counts proposing + doomed + single nodes, `secondary` is
/// `2·doomed + single`. Field order gives the lexicographic `Ord`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Potential {
    pub primary: u32,
    pub secondary: u32,
}

impl Potential {
    pub const ZERO: Potential = Potential {
        primary: 0,
        secondary: 0,
    };

    pub fn is_zero(self) -> bool {
        self == Self::ZERO
    }
}

impl From<[u32; 2]> for Potential {
    fn from([primary, secondary]: [u32; 2]) -> Self {
        Self { primary, secondary }
    }
}

impl From<Potential> for [u32; 2] {
    fn from(p: Potential) -> Self {
        [p.primary, p.secondary]
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.primary, self.secondary)
    }
}

/// Per-predicate counts over a node set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredicateCounts {
    pub proposing: u32,
    pub married: u32,
    pub doomed: u32,
    pub dead: u32,
    pub single: u32,
}

impl PredicateCounts {
    pub fn tally<I: IntoIterator<Item = NodeId>>(t: &Topology, cfg: &Configuration, nodes: I) -> Self {
        let mut counts = Self::default();
        for v in nodes {
            match classify(t, cfg, v) {
                Predicate::Proposing => counts.proposing += 1,
                Predicate::Married => counts.married += 1,
                Predicate::Doomed => counts.doomed += 1,
                Predicate::Dead => counts.dead += 1,
                Predicate::Single => counts.single += 1,
            }
        }
        counts
    }

    pub fn potential(&self) -> Potential {
        Potential {
            primary: self.proposing + self.doomed + self.single,
            secondary: 2 * self.doomed + self.single,
        }
    }
}

/// Potential restricted to an explicit node set (normally the 2-honest set).
pub fn potential_over<I: IntoIterator<Item = NodeId>>(t: &Topology, cfg: &Configuration, nodes: I) -> Potential {
    PredicateCounts::tally(t, cfg, nodes).potential()
}

/// Potential of `cfg` counted over the 2-honest nodes for Byzantine set `byz`.
pub fn potential(t: &Topology, cfg: &Configuration, byz: &NodeSet) -> Potential {
    potential_over(t, cfg, t.c_honest_set(byz, VARIANT_RADIUS).iter())
}

/// Number of strict increases along a potential series.
pub fn count_increases(series: &[Potential]) -> usize {
    series.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::in_lc;

    #[test]
    fn all_null_path_is_all_single() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::all_null(&t);
        assert_eq!(potential(&t, &cfg, &NodeSet::new()), Potential::from([5, 5]));
    }

    #[test]
    fn potential_ignores_nodes_near_byzantine() {
        let t = Topology::path(5).unwrap();
        let cfg = Configuration::from_targets(&t, &[None, None, None, Some(4), Some(3)]);
        assert_eq!(potential(&t, &cfg, &NodeSet::from([0])), Potential::ZERO);
        assert!(in_lc(&t, &cfg, &NodeSet::from([0]), 2));
    }

    #[test]
    fn lexicographic_order() {
        assert!(Potential::from([1, 9]) < Potential::from([2, 0]));
        assert!(Potential::from([2, 1]) < Potential::from([2, 2]));
        assert_eq!(serde_json::to_string(&Potential::from([3, 4])).unwrap(), "[3,4]");
    }

    #[test]
    fn increases_are_counted() {
        let series: Vec<Potential> = [[3, 3], [3, 2], [3, 4], [2, 0], [2, 1], [2, 1]]
            .into_iter()
            .map(Potential::from)
            .collect();
        assert_eq!(count_increases(&series), 2);
    }
}
