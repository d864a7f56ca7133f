use crate::error::{Error, Result};

/// Character-level edit distance (unit insert, delete, substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
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

/// Edit distance divided by the longer length in chars.
pub fn normalized_levenshtein(a: &str, b: &str) -> Result<f64> {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return Err(Error::Empty("both strings are empty"));
    }
    Ok(levenshtein(a, b) as f64 / longest as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((normalized_levenshtein("kitten", "sitting").unwrap() - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(normalized_levenshtein("Ronaldo", "Ronaldo").unwrap(), 0.0);
        assert_eq!(normalized_levenshtein("abc", "").unwrap(), 1.0);
        assert_eq!(normalized_levenshtein("Ronaldo7", "Ronaldo").unwrap(), 0.125);
        assert!(normalized_levenshtein("", "").is_err());
    }

    #[test]
    fn counts_chars_not_bytes() {
        assert_eq!(levenshtein("苏亚雷斯", "苏亚雷"), 1);
        assert_eq!(normalized_levenshtein("苏亚雷斯", "苏亚雷").unwrap(), 0.25);
    }
}
