/// Lower median: the element of rank `(len - 1) / 2`. Reorders `v`.
pub(crate) fn lower_median(v: &mut [f64]) -> f64 {
    assert!(!v.is_empty());
    let mid = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Median, averaging the two middle elements for even length. Reorders `v`.
pub(crate) fn median(v: &mut [f64]) -> f64 {
    assert!(!v.is_empty());
    let len = v.len();
    let lo = lower_median(v);
    if len % 2 == 1 {
        return lo;
    }
    let hi = v[len / 2..].iter().copied().fold(f64::INFINITY, f64::min);
    0.5 * (lo + hi)
}
