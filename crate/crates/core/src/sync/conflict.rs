use std::cmp::Ordering;

use crate::wire::Origin;

/// Version stamp of an attribute value.
///
/// `seq` is a per-attribute logical clock shared by both ends: every write
/// takes one more than the highest value seen so far. Frontend wins ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stamp {
    pub seq: u64,
    pub origin: Origin,
}

impl Stamp {
    pub fn new(seq: u64, origin: Origin) -> Self {
        Stamp { seq, origin }
    }
}

impl Ord for Stamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.seq
            .cmp(&other.seq)
            .then_with(|| self.origin.cmp(&other.origin))
    }
}

impl PartialOrd for Stamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Local,
    Incoming,
}

/// Last-writer-wins: the higher seq wins, frontend origin breaks ties, and an
/// identical stamp keeps the local value.
pub fn resolve_conflict(local: Stamp, incoming: Stamp) -> Winner {
    if incoming > local {
        Winner::Incoming
    } else {
        Winner::Local
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Origin::{Backend, Frontend};

    #[test]
    fn higher_seq_wins() {
        assert_eq!(
            resolve_conflict(Stamp::new(3, Frontend), Stamp::new(5, Backend)),
            Winner::Incoming
        );
        assert_eq!(
            resolve_conflict(Stamp::new(5, Backend), Stamp::new(3, Frontend)),
            Winner::Local
        );
    }

    #[test]
    fn frontend_wins_ties() {
        assert_eq!(
            resolve_conflict(Stamp::new(4, Backend), Stamp::new(4, Frontend)),
            Winner::Incoming
        );
        assert_eq!(
            resolve_conflict(Stamp::new(4, Frontend), Stamp::new(4, Backend)),
            Winner::Local
        );
    }

    fn stamp() -> impl Strategy<Value = Stamp> {
        (0u64..6, any::<bool>()).prop_map(|(seq, f)| Stamp::new(seq, if f { Frontend } else { Backend }))
    }

    proptest! {
        // Both ends evaluate the pair from opposite sides and must agree.
        #[test]
        fn both_ends_pick_the_same_winner(a in stamp(), b in stamp()) {
            let at_a = match resolve_conflict(a, b) { Winner::Local => a, Winner::Incoming => b };
            let at_b = match resolve_conflict(b, a) { Winner::Local => b, Winner::Incoming => a };
            prop_assert_eq!(at_a, at_b);
        }
    }
}
