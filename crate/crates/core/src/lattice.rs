//! The two level structures used by the type systems.
//!
//! [`Level`] is the total order `data <= model <= genquant` of the base
//! system. [`CiLevel`] is the lower semi-lattice `l1 <= l2`, `l1 <= l3` used
//! to certify conditional independence; `l2` and `l3` have no upper bound.

use std::fmt;

/// Shared interface of both level structures, so the constraint solver and
/// the shredder can be written once.
pub trait Lattice: Copy + Eq + Ord + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Every element, in lattice position order (bottom first).
    const ALL: [Self; 3];

    fn bottom() -> Self {
        Self::ALL[0]
    }

    /// Position of the element inside [`Lattice::ALL`].
    fn index(self) -> usize;

    fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    fn leq(self, other: Self) -> bool;

    fn below(self, other: Self) -> bool {
        self != other && self.leq(other)
    }

    /// Least upper bound of two elements, absent when it does not exist.
    fn join(self, other: Self) -> Option<Self>;

    /// Lowest level a density contribution (`factor`, `~`) runs at.
    fn density_floor() -> Self {
        Self::bottom()
    }

    /// Inference cost of labelling a placeholder with this element.
    fn cost(self) -> u32;

    /// Order in which the solver tries values: cheapest first, then lower
    /// lattice position.
    fn preference() -> [Self; 3] {
        let mut all = Self::ALL;
        all.sort_by_key(|l| (l.cost(), l.index()));
        all
    }

    fn name(self) -> &'static str;

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }

    /// Join of a list, `None` if some pair has no upper bound. The empty
    /// join is bottom.
    fn join_all<I: IntoIterator<Item = Self>>(levels: I) -> Option<Self> {
        levels
            .into_iter()
            .try_fold(Self::bottom(), |acc, l| acc.join(l))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Data,
    Model,
    GenQuant,
}

impl Lattice for Level {
    const ALL: [Self; 3] = [Level::Data, Level::Model, Level::GenQuant];

    fn index(self) -> usize {
        self as usize
    }

    fn leq(self, other: Self) -> bool {
        self <= other
    }

    fn join(self, other: Self) -> Option<Self> {
        Some(self.max(other))
    }

    fn density_floor() -> Self {
        Level::Model
    }

    fn cost(self) -> u32 {
        match self {
            Level::Data => 0,
            Level::GenQuant => 1,
            Level::Model => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Level::Data => "data",
            Level::Model => "model",
            Level::GenQuant => "genquant",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Least upper bound of a nonempty list of base levels.
///
/// # Panics
/// Panics on an empty list.
pub fn lub(levels: &[Level]) -> Level {
    assert!(!levels.is_empty(), "lub of an empty list");
    levels.iter().copied().max().unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CiLevel {
    L1,
    L2,
    L3,
}

impl Lattice for CiLevel {
    const ALL: [Self; 3] = [CiLevel::L1, CiLevel::L2, CiLevel::L3];

    fn index(self) -> usize {
        self as usize
    }

    fn leq(self, other: Self) -> bool {
        self == other || self == CiLevel::L1
    }

    fn join(self, other: Self) -> Option<Self> {
        lub_ci(self, other)
    }

    fn cost(self) -> u32 {
        match self {
            CiLevel::L3 => 0,
            CiLevel::L1 => 1,
            CiLevel::L2 => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CiLevel::L1 => "l1",
            CiLevel::L2 => "l2",
            CiLevel::L3 => "l3",
        }
    }
}

impl fmt::Display for CiLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Join in the semi-lattice; `l2` and `l3` have none.
pub fn lub_ci(a: CiLevel, b: CiLevel) -> Option<CiLevel> {
    match (a, b) {
        (CiLevel::L1, x) | (x, CiLevel::L1) => Some(x),
        (x, y) if x == y => Some(x),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lub_examples() {
        assert_eq!(lub(&[Level::Data, Level::Model]), Level::Model);
        assert_eq!(lub(&[Level::GenQuant]), Level::GenQuant);
        assert_eq!(lub(&[Level::Data, Level::GenQuant, Level::Model]), Level::GenQuant);
    }

    #[test]
    fn lub_ci_examples() {
        assert_eq!(lub_ci(CiLevel::L1, CiLevel::L3), Some(CiLevel::L3));
        assert_eq!(lub_ci(CiLevel::L2, CiLevel::L2), Some(CiLevel::L2));
        assert_eq!(lub_ci(CiLevel::L2, CiLevel::L3), None);
        assert_eq!(lub_ci(CiLevel::L3, CiLevel::L2), None);
    }

    fn laws<L: Lattice>() {
        for a in L::ALL {
            assert_eq!(a.join(a), Some(a));
            assert_eq!(L::bottom().join(a), Some(a));
            for b in L::ALL {
                assert_eq!(a.join(b), b.join(a));
                if let Some(j) = a.join(b) {
                    assert!(a.leq(j) && b.leq(j));
                }
                for c in L::ALL {
                    let left = a.join(b).and_then(|ab| ab.join(c));
                    let right = b.join(c).and_then(|bc| a.join(bc));
                    assert_eq!(left, right, "associativity at {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn lattice_laws_exhaustive() {
        laws::<Level>();
        laws::<CiLevel>();
    }

    #[test]
    fn preference_orders() {
        assert_eq!(Level::preference(), [Level::Data, Level::GenQuant, Level::Model]);
        assert_eq!(CiLevel::preference(), [CiLevel::L3, CiLevel::L1, CiLevel::L2]);
    }
}
