/// Visits every subset of `0..n` with at most `max_size` elements, smallest
/// sizes first and lexicographically within a size. Stops early when `f`
/// returns `true` and reports whether it did.
pub(crate) fn visit_subsets(n: usize, max_size: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    let mut buf = Vec::with_capacity(max_size);
    for size in 0..=max_size.min(n) {
        buf.clear();
        buf.extend(0..size);
        loop {
            if f(&buf) {
                return true;
            }
            // Advance to the next combination of this size.
            let Some(pos) = (0..size).rev().find(|&p| buf[p] < n - size + p) else {
                break;
            };
            buf[pos] += 1;
            for q in pos + 1..size {
                buf[q] = buf[q - 1] + 1;
            }
        }
    }
    false
}

/// Number of subsets of an `n`-set with at most `max_size` elements, saturating.
pub(crate) fn count_subsets(n: usize, max_size: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=max_size.min(n) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_count() {
        let mut seen = Vec::new();
        visit_subsets(4, 2, |s| {
            seen.push(s.to_vec());
            false
        });
        assert_eq!(seen.len() as u128, count_subsets(4, 2));
        assert_eq!(seen[0], Vec::<usize>::new());
        assert_eq!(seen[1], vec![0]);
        assert_eq!(seen[5], vec![0, 1]);
        assert_eq!(seen[10], vec![2, 3]);
    }

    #[test]
    fn early_stop() {
        let mut calls = 0;
        assert!(visit_subsets(5, 5, |s| {
            calls += 1;
            s == [1, 2]
        }));
        assert_eq!(calls, 1 + 5 + 5);
        assert_eq!(count_subsets(30, 30), 1 << 30);
    }
}
