/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - LCS / max(|a|, |b|)`; two empty sequences are at distance 0.
pub fn lcs_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    1.0 - lcs_len(a, b) as f64 / longest as f64
}

/// Character-level LCS normalized by the shorter string, case-insensitive.
pub fn name_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    let shortest = a.len().min(b.len());
    if shortest == 0 {
        return 0.0;
    }
    lcs_len(&a, &b) as f64 / shortest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokens;

    #[test]
    fn distances() {
        let a = tokens("you're a wizard harry");
        assert_eq!(lcs_distance(&a, &a), 0.0);
        assert_eq!(lcs_distance(&tokens("a b"), &tokens("c d e")), 1.0);
        let x = tokens("w x y z");
        let y = tokens("w x q y v");
        assert_eq!(lcs_len(&x, &y), 3);
        assert!((lcs_distance(&x, &y) - 0.4).abs() < 1e-12);
        assert_eq!(lcs_distance::<String>(&[], &[]), 0.0);
        assert_eq!(lcs_distance(&tokens("a"), &[]), 1.0);
    }

    #[test]
    fn names() {
        assert_eq!(name_ratio("Hermione", "Hermione Granger"), 1.0);
        assert!(name_ratio("Quirrell", "Dumbledore") < 0.7);
        assert_eq!(name_ratio("HARRY", "Harry"), 1.0);
    }
}
