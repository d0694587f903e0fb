//! Enumeration of lattice points by total count.

/// All `dim`-vectors of nonnegative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(dim: usize, total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if dim == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = vec![0u32; dim];
    fill(&mut current, 0, total, &mut out);
    out
}

fn fill(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        fill(current, pos + 1, remaining - v, out);
    }
}

/// Visits the compositions of `total` into `dim` parts whose first part is
/// `head`, in lexicographic order, reusing one buffer.
pub fn for_each_with_head(dim: usize, total: u32, head: u32, mut f: impl FnMut(&[u32])) {
    if dim == 0 || head > total {
        return;
    }
    let mut current = vec![0u32; dim];
    current[0] = head;
    if dim == 1 {
        if head == total {
            f(&current);
        }
        return;
    }
    visit(&mut current, 1, total - head, &mut f);
}

fn visit(current: &mut [u32], pos: usize, remaining: u32, f: &mut impl FnMut(&[u32])) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        f(current);
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        visit(current, pos + 1, remaining - v, f);
    }
}

/// All `dim`-vectors with total at most `bound`, in lexicographic order.
pub fn points_up_to(dim: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut all: Vec<Vec<u32>> = (0..=bound).flat_map(|n| compositions(dim, n)).collect();
    all.sort();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visitor_matches_compositions() {
        for dim in 1..4 {
            for total in 0..6 {
                let mut seen = Vec::new();
                for head in 0..=total {
                    for_each_with_head(dim, total, head, |x| seen.push(x.to_vec()));
                }
                assert_eq!(seen, compositions(dim, total));
            }
        }
    }

    #[test]
    fn counts_match_stars_and_bars() {
        assert_eq!(compositions(3, 4).len(), 15);
        assert_eq!(compositions(1, 7), vec![vec![7]]);
        assert_eq!(points_up_to(3, 12).len(), 455);
        assert_eq!(points_up_to(2, 1), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    }
}
