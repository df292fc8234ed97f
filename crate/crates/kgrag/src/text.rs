//! Shared text folding for encoders, query cues, and alias lookup.

/// Lowercase, map punctuation runs to single spaces, trim. The canonical
/// form for matching surface text against aliases and cue lists.
pub(crate) fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for c in text.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}
