//! Univariate location and scale helpers.

/// Median of `values`, reordering the slice in place.
///
/// Even lengths return the midpoint of the two central order statistics.
/// Panics on an empty slice.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of an empty slice");
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median and median absolute deviation from the median.
///
/// Returns `None` for an empty input.
pub fn univariate_med_mad(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut scratch = values.to_vec();
    let med = median_in_place(&mut scratch);
    for v in scratch.iter_mut() {
        *v = (*v - med).abs();
    }
    let mad = median_in_place(&mut scratch);
    Some((med, mad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_length() {
        assert_eq!(univariate_med_mad(&[1.0, 2.0, 3.0, 4.0, 5.0]), Some((3.0, 1.0)));
    }

    #[test]
    fn even_length_uses_midpoint() {
        assert_eq!(univariate_med_mad(&[4.0, 1.0, 3.0, 2.0]), Some((2.5, 1.0)));
    }

    #[test]
    fn constant_has_zero_mad() {
        assert_eq!(univariate_med_mad(&[7.5, 7.5, 7.5]), Some((7.5, 0.0)));
    }

    #[test]
    fn empty_is_none() {
        assert_eq!(univariate_med_mad(&[]), None);
    }

    #[test]
    fn median_matches_sorted_definition() {
        let data = [9.0, -1.0, 3.5, 3.5, 0.0, 12.0, -7.0, 2.0];
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let expected = 0.5 * (sorted[3] + sorted[4]);
        let mut scratch = data.to_vec();
        assert_eq!(median_in_place(&mut scratch), expected);
    }
}
