//! The rank-3 family listings, transcribed pattern by pattern.

use crate::patterns::{canonicalize_family, Family, SymmetryGroup};

// Settings certified hard with gadgets of at most six elements.
const HARD: [&str; 41] = [
    "+-+-,+--+",
    "+-+-,-+-+",
    "+-+-,-+--",
    "+-+-,---+",
    "+-+-,----",
    "+--+,-+--",
    "+--+,----",
    "+-+-,+--+,-+-+",
    "+-+-,+--+,-+--",
    "+-+-,+--+,--+-",
    "+-+-,+--+,---+",
    "+-+-,+--+,----",
    "+-+-,+---,-+-+",
    "+-+-,-+-+,-+--",
    "+-+-,-+-+,----",
    "+-+-,-+--,---+",
    "+-+-,-+--,----",
    "+-+-,---+,----",
    "+--+,-+--,--+-",
    "+--+,-+--,----",
    "+-+-,+--+,+---,-+-+",
    "+-+-,+--+,-+-+,-+--",
    "+-+-,+--+,-+-+,----",
    "+-+-,+--+,-+--,--+-",
    "+-+-,+--+,-+--,---+",
    "+-+-,+--+,-+--,----",
    "+-+-,+--+,--+-,----",
    "+-+-,+--+,---+,----",
    "+-+-,+---,-+-+,--+-",
    "+-+-,+---,-+-+,----",
    "+-+-,-+-+,-+--,----",
    "+-+-,-+--,---+,----",
    "+--+,-+--,--+-,----",
    "+-+-,+--+,+---,-+-+,--+-",
    "+-+-,+--+,+---,-+-+,----",
    "+-+-,+--+,-+-+,-+--,--+-",
    "+-+-,+--+,-+-+,-+--,----",
    "+-+-,+--+,-+--,--+-,----",
    "+-+-,+--+,-+--,---+,----",
    "+-+-,+--+,+---,-+-+,--+-,----",
    "+-+-,+--+,-+-+,-+--,--+-,----",
];

// Settings decided by forcing plus greedy '+' filling.
const GREEDY: [&str; 20] = [
    "",
    "----",
    "+---",
    "-+--",
    "+---,-+--",
    "+---,--+-",
    "+---,---+",
    "+---,----",
    "-+--,--+-",
    "-+--,----",
    "+---,-+--,--+-",
    "+---,-+--,---+",
    "+---,-+--,----",
    "+---,--+-,----",
    "+---,---+,----",
    "-+--,--+-,----",
    "+---,-+--,--+-,---+",
    "+---,-+--,--+-,----",
    "+---,-+--,---+,----",
    "+---,-+--,--+-,---+,----",
];

fn parse_all(list: &[&str]) -> Vec<Family> {
    list.iter()
        .map(|t| {
            let f = Family::parse(t, 3).expect("listing entries are valid rank-3 families");
            canonicalize_family(&f, SymmetryGroup::Reversal).canonical
        })
        .collect()
}

/// The 41 hard settings, canonicalized.
pub fn listing_hard() -> Vec<Family> {
    parse_all(&HARD)
}

/// The 20 greedy-solvable settings, canonicalized.
pub fn listing_greedy() -> Vec<Family> {
    parse_all(&GREEDY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn listings_are_distinct_settings() {
        let hard: BTreeSet<Family> = listing_hard().into_iter().collect();
        let greedy: BTreeSet<Family> = listing_greedy().into_iter().collect();
        assert_eq!(hard.len(), 41);
        assert_eq!(greedy.len(), 20);
        assert!(hard.is_disjoint(&greedy));
        let all: BTreeSet<Family> = crate::classify::rank3_settings().into_iter().collect();
        assert!(hard.is_subset(&all) && greedy.is_subset(&all));
        assert!(hard.contains(&Family::alternating(3)));
    }
}
