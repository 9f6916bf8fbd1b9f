use std::collections::BTreeSet;
use std::fmt;

/// Ordered set of zero-based constraint indices.
///
/// `Display` prints one-based indices, e.g. `{1,2}`, matching how
/// constraints are numbered in problem files and CLI output.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet(BTreeSet<usize>);

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from one-based indices.
    pub fn from_one_based(indices: &[usize]) -> Self {
        indices.iter().map(|i| i - 1).collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        self.0.insert(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.0.union(&other.0).copied().collect()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.0.intersection(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_round_trip() {
        let s = IndexSet::from_one_based(&[3, 1]);
        assert!(s.contains(0) && s.contains(2));
        assert_eq!(s.to_one_based(), vec![1, 3]);
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(IndexSet::new().to_string(), "{}");
    }
}
