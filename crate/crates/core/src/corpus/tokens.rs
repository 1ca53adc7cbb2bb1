//! Pluggable token counting.
//!
//! Budgets are enforced in tokens but the tool does not bundle a model
//! tokenizer; the default heuristic inflates whitespace-delimited words by
//! 4/3 (rounded up), which tracks subword tokenizers closely enough for
//! budget control. Callers with a real tokenizer implement the trait.

pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Whitespace words times 4/3, rounded up. `count("") == 0`, and counting
/// is subadditive up to one joiner token: count(a+b) <= count(a)+count(b)+1.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicTokenCounter;

impl TokenCounter for HeuristicTokenCounter {
    fn count(&self, text: &str) -> usize {
        let words = text.split_whitespace().count();
        (words * 4).div_ceil(3)
    }
}

impl<T: TokenCounter + ?Sized> TokenCounter for &T {
    fn count(&self, text: &str) -> usize {
        (**self).count(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_counts_zero() {
        assert_eq!(HeuristicTokenCounter.count(""), 0);
        assert_eq!(HeuristicTokenCounter.count("   \n\t"), 0);
    }

    #[test]
    fn words_inflate_by_four_thirds() {
        assert_eq!(HeuristicTokenCounter.count("one"), 2); // ceil(4/3)
        assert_eq!(HeuristicTokenCounter.count("one two three"), 4);
        assert_eq!(HeuristicTokenCounter.count("a b c d e f"), 8);
    }

    #[test]
    fn joiner_subadditivity() {
        let c = HeuristicTokenCounter;
        for (a, b) in [
            ("alpha beta", "gamma"),
            ("", "x y z"),
            ("one", ""),
            ("a b c", "d e f g"),
        ] {
            let joined = format!("{a}\n{b}");
            assert!(c.count(&joined) <= c.count(a) + c.count(b) + 1);
        }
    }
}
