//! Subset and ordered-partition enumeration over small index sets.
//!
//! Every enumeration in this crate that ranges over subsets uses the same
//! canonical order: increasing cardinality, ties broken lexicographically on
//! the sorted member lists. Keeping the order in one place makes dual-variable
//! indexing and reported certificates reproducible.

/// All subsets of `items` in canonical order. `include_empty` controls whether
/// the empty set leads the list.
pub(crate) fn subsets_canonical(items: &[usize], include_empty: bool) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(1 << n);
    if include_empty {
        out.push(Vec::new());
    }
    for size in 1..=n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            // next combination in lexicographic order
            let mut pos = size;
            while pos > 0 {
                pos -= 1;
                if idx[pos] != pos + n - size {
                    idx[pos] += 1;
                    for j in pos + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    out
}

/// Ordered partitions of `items` into nonempty groups, finest first: partitions
/// with more groups are listed before coarser ones, equal counts in
/// lexicographic order of the group lists.
pub(crate) fn ordered_partitions_finest_first(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut prefix: Vec<Vec<usize>> = Vec::new();
    recurse(items, &mut prefix, &mut out);
    // stable sort keeps the lexicographic recursion order within each count
    out.sort_by_key(|p| std::cmp::Reverse(p.len()));
    return out;

    fn recurse(remaining: &[usize], prefix: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if remaining.is_empty() {
            if !prefix.is_empty() {
                out.push(prefix.clone());
            }
            return;
        }
        for group in subsets_canonical(remaining, false) {
            let rest: Vec<usize> = remaining.iter().copied().filter(|x| !group.contains(x)).collect();
            prefix.push(group);
            recurse(&rest, prefix, out);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_follow_size_then_lex_order() {
        let got = subsets_canonical(&[2, 3, 5], true);
        let want: Vec<Vec<usize>> = vec![
            vec![],
            vec![2],
            vec![3],
            vec![5],
            vec![2, 3],
            vec![2, 5],
            vec![3, 5],
            vec![2, 3, 5],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn subsets_of_empty_ground_set() {
        assert_eq!(subsets_canonical(&[], true), vec![Vec::<usize>::new()]);
        assert!(subsets_canonical(&[], false).is_empty());
    }

    #[test]
    fn partitions_list_finest_first() {
        let got = ordered_partitions_finest_first(&[2, 3]);
        let want: Vec<Vec<Vec<usize>>> = vec![
            vec![vec![2], vec![3]],
            vec![vec![3], vec![2]],
            vec![vec![2, 3]],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn partition_count_matches_fubini_numbers() {
        // ordered set partitions of n elements: 1, 3, 13, 75
        for (n, want) in [(1usize, 1usize), (2, 3), (3, 13), (4, 75)] {
            let items: Vec<usize> = (1..=n).collect();
            assert_eq!(ordered_partitions_finest_first(&items).len(), want);
        }
    }
}
