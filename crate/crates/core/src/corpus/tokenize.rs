/// Lowercase (optionally), split on non-alphanumeric characters, drop pure
/// digit tokens and tokens shorter than `min_len` characters.
pub fn tokenize(text: &str, lowercase: bool, min_len: usize) -> Vec<String> {
    let owned;
    let text = if lowercase {
        owned = text.to_lowercase();
        owned.as_str()
    } else {
        text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= min_len)
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_filters() {
        assert_eq!(
            tokenize("Hello, World! 42 a b2 x-ray", true, 2),
            vec!["hello", "world", "b2", "ray"]
        );
    }

    #[test]
    fn respects_case_flag() {
        assert_eq!(tokenize("Apple apple", false, 2), vec!["Apple", "apple"]);
        assert_eq!(tokenize("Apple apple", true, 2), vec!["apple", "apple"]);
    }

    #[test]
    fn min_length_drops_short_tokens() {
        assert!(tokenize("the the the", true, 4).is_empty());
    }
}
