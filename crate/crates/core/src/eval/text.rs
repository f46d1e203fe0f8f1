//! Text-rendering metrics: edit distance, completion rate, word accuracy
//! and their composite.

use serde::{Deserialize, Serialize};

/// Unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Longest common subsequence length of two token sequences.
fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ta in a {
        for (j, tb) in b.iter().enumerate() {
            cur[j + 1] = if ta == tb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn multiset_overlap(a: &[&str], b: &[&str]) -> usize {
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for t in a {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut hit = 0;
    for t in b {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                hit += 1;
            }
        }
    }
    hit
}

/// Trims and collapses whitespace runs to single spaces. Case is kept.
pub fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextMetricScores {
    pub edit_distance_score: f64,
    pub completion_rate: f64,
    pub word_accuracy: f64,
    pub composite: f64,
}

/// Scores a hypothesis string against a reference:
///
/// - edit_distance_score: 1 minus normalized character edit distance
/// - completion_rate: fraction of reference tokens present anywhere in the
///   hypothesis (multiset, order-insensitive)
/// - word_accuracy: token LCS over the longer token count (order matters)
/// - composite: arithmetic mean of the three
///
/// All four land in [0, 1] for every input pair.
pub fn text_scores(reference: &str, hypothesis: &str) -> TextMetricScores {
    let r = normalize(reference);
    let h = normalize(hypothesis);
    let r_chars = r.chars().count();
    let h_chars = h.chars().count();
    let edit_distance_score =
        1.0 - levenshtein(&r, &h) as f64 / r_chars.max(h_chars).max(1) as f64;

    let r_tokens: Vec<&str> = r.split(' ').filter(|t| !t.is_empty()).collect();
    let h_tokens: Vec<&str> = h.split(' ').filter(|t| !t.is_empty()).collect();
    let completion_rate =
        multiset_overlap(&r_tokens, &h_tokens) as f64 / r_tokens.len().max(1) as f64;
    let word_accuracy =
        lcs_len(&r_tokens, &h_tokens) as f64 / r_tokens.len().max(h_tokens.len()).max(1) as f64;

    TextMetricScores {
        edit_distance_score,
        completion_rate,
        word_accuracy,
        composite: (edit_distance_score + completion_rate + word_accuracy) / 3.0,
    }
}
