use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::item::McqItem;
use crate::util::{derive_seed, seeded_rng};

/// Seed value that leaves every item unchanged.
pub const IDENTITY_SEED: u64 = 0;

/// Audit record of one shuffle: `order[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub item_id: String,
    pub seed: u64,
    pub order: Vec<usize>,
}

impl Permutation {
    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &o)| i == o)
    }
}

/// Deterministic permutation for `(seed, item_id)` over `n` options.
pub fn permutation_for(seed: u64, item_id: &str, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if seed != IDENTITY_SEED {
        let mut rng = seeded_rng(derive_seed(seed, item_id, 0));
        order.shuffle(&mut rng);
    }
    order
}

/// Reorders the options of `item` and remaps its gold index.
pub fn shuffle_options(item: &McqItem, seed: u64) -> (McqItem, Vec<usize>) {
    let order = permutation_for(seed, &item.id, item.options.len());
    (apply_permutation(item, &order), order)
}

/// Applies `order[new] = old`.
pub fn apply_permutation(item: &McqItem, order: &[usize]) -> McqItem {
    let mut out = item.clone();
    out.options = order.iter().map(|&old| item.options[old].clone()).collect();
    out.gold_index = order.iter().position(|&old| old == item.gold_index).unwrap_or(item.gold_index);
    out
}

/// The permutation that undoes `order`.
pub fn invert_permutation(order: &[usize]) -> Vec<usize> {
    let mut inverse = alloc::vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        inverse[old] = new;
    }
    inverse
}
