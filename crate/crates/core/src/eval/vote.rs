use alloc::collections::BTreeMap;

/// Majority over the non-empty votes. Ties go to the lowest option index; no
/// usable vote gives `None`.
pub fn self_consistency(votes: &[Option<usize>]) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in votes.iter().flatten() {
        *counts.entry(*v).or_default() += 1;
    }
    // BTreeMap iterates in ascending index order, and max_by_key keeps the
    // last maximum, so iterate in reverse to keep the lowest index on ties.
    counts.into_iter().rev().max_by_key(|(_, c)| *c).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_and_ties() {
        let mut six_five = [Some(0); 11];
        for v in six_five.iter_mut().skip(6) {
            *v = Some(1);
        }
        assert_eq!(self_consistency(&six_five), Some(0));
        assert_eq!(self_consistency(&[Some(1), Some(0)]), Some(0));
        assert_eq!(self_consistency(&[Some(3), None, Some(2), None]), Some(2));
        assert_eq!(self_consistency(&[None, None]), None);
        assert_eq!(self_consistency(&[]), None);
    }
}
