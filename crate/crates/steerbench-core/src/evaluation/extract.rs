//! Answer extraction from free-form model output.
//!
//! Scan priority: (1) the last `**Answer**: (X` anchor, (2) the last
//! standalone letter line (`X`, `X.`, or `(X)`), (3) the last standalone
//! uppercase letter token anywhere. Only uppercase letters count — treating
//! a lowercase `a` as an answer would misread the English article. A letter
//! outside the option range yields an abstention, not an error.

/// Extracts a 0-based option index from model text, or `None` to abstain.
pub fn extract_answer(text: &str, n_options: usize) -> Option<usize> {
    assert!(
        (2..=26).contains(&n_options),
        "option count {n_options} outside 2..=26"
    );
    let letter = answer_anchor_letter(text)
        .or_else(|| standalone_letter_line(text))
        .or_else(|| last_letter_token(text))?;
    let index = (letter as u8 - b'A') as usize;
    (index < n_options).then_some(index)
}

/// Priority 1: the last `**Answer**:` anchor followed (after optional
/// whitespace and an optional opening parenthesis) by an uppercase letter.
fn answer_anchor_letter(text: &str) -> Option<char> {
    const ANCHOR: &str = "**Answer**:";
    let mut found = None;
    for (pos, _) in text.match_indices(ANCHOR) {
        let tail = text[pos + ANCHOR.len()..].trim_start();
        let tail = tail.strip_prefix('(').unwrap_or(tail);
        if let Some(c) = tail.chars().next() {
            if c.is_ascii_uppercase() {
                found = Some(c);
            }
        }
    }
    found
}

/// Priority 2: the last line whose entire trimmed content is `X`, `X.`, or
/// `(X)` for an uppercase letter X.
fn standalone_letter_line(text: &str) -> Option<char> {
    text.lines()
        .rev()
        .find_map(|line| match line.trim().as_bytes() {
            [c] if c.is_ascii_uppercase() => Some(*c as char),
            [c, b'.'] if c.is_ascii_uppercase() => Some(*c as char),
            [b'(', c, b')'] if c.is_ascii_uppercase() => Some(*c as char),
            _ => None,
        })
}

/// Priority 3: the last whitespace-delimited token that is a single
/// uppercase letter once wrapping punctuation is stripped.
fn last_letter_token(text: &str) -> Option<char> {
    text.split_whitespace()
        .rev()
        .find_map(|token| {
            let stripped = token.trim_matches(|c: char| "()[].,:;\"'*".contains(c));
            match stripped.as_bytes() {
                [c] if c.is_ascii_uppercase() => Some(*c as char),
                _ => None,
            }
        })
}
