use std::collections::HashSet;
use std::hash::Hash;

/// Set-based Jaccard coefficient; two empty lists are identical (1.0).
pub fn jaccard_tokens<S: Eq + Hash>(a: &[S], b: &[S]) -> f64 {
    let sa: HashSet<&S> = a.iter().collect();
    let sb: HashSet<&S> = b.iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Unit-cost edit distance over tokens.
pub fn edit_distance<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - edit_distance / max(|a|, |b|)`; two empty sequences score 1.0.
pub fn levenshtein_similarity<S: PartialEq>(a: &[S], b: &[S]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / longest as f64
}
