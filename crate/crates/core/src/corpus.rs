//! The household-object class list with its numeric plot labels, and the
//! bundled 46-object synthetic corpus.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::sensing::{parse_corpus, ObjectSpec};

/// Class names in label order (label = index) with their instance counts.
pub const CLASSES: [(&str, usize); 17] = [
    ("Plastic Box", 1),
    ("Paper Plate", 1),
    ("Steel Cup", 1),
    ("Ceramic Bowl", 3),
    ("Plastic Cup", 3),
    ("Paper Box", 9),
    ("Ceramic Plate", 6),
    ("Ball", 1),
    ("Metal Box", 3),
    ("Paper Cup", 1),
    ("Marker", 3),
    ("Plastic Bowl", 3),
    ("Ceramic Cup", 3),
    ("Sponge", 2),
    ("Marble Plank", 1),
    ("Ceramic Glass", 1),
    ("Book", 4),
];

pub const BUNDLED_CORPUS_JSON: &str = include_str!("../data/corpus.json");

pub fn bundled_corpus() -> Result<Vec<ObjectSpec>> {
    parse_corpus(BUNDLED_CORPUS_JSON)
}

/// Numeric label of a known class.
pub fn known_label(class_name: &str) -> Option<u32> {
    CLASSES
        .iter()
        .position(|(name, _)| *name == class_name)
        .map(|i| i as u32)
}

/// Labels for a list of class names. Known classes keep their fixed label;
/// other classes are numbered after them in name order.
pub fn class_labels(class_names: &[String]) -> Vec<u32> {
    let unknown: Vec<&String> = class_names
        .iter()
        .filter(|n| known_label(n).is_none())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    class_names
        .iter()
        .map(|n| {
            known_label(n).unwrap_or_else(|| {
                CLASSES.len() as u32 + unknown.iter().position(|u| *u == n).unwrap() as u32
            })
        })
        .collect()
}
