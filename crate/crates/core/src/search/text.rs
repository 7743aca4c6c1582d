//! Token pipeline: lowercase, split on non-alphanumerics, strip one suffix.

/// Suffix table, tried in order; the first suffix that matches and leaves a
/// stem of at least [`MIN_STEM`] characters is replaced.
pub const SUFFIXES: &[(&str, &str)] = &[
    ("izations", "iz"),
    ("ization", "iz"),
    ("izing", "iz"),
    ("izers", "iz"),
    ("izer", "iz"),
    ("ized", "iz"),
    ("izes", "iz"),
    ("ize", "iz"),
    ("ations", "at"),
    ("ation", "at"),
    ("ies", "i"),
    ("ied", "i"),
    ("ing", ""),
    ("ed", ""),
    ("es", ""),
    ("s", ""),
    ("e", ""),
    ("y", "i"),
];

pub const MIN_STEM: usize = 3;

/// Applies the first matching rule of [`SUFFIXES`]. Tokens containing digits
/// are returned unchanged; "-ss", "-us" and "-is" keep their final s and
/// "-eed" keeps its ending.
pub fn stem(token: &str) -> String {
    if token.chars().any(|c| !c.is_alphabetic()) {
        return token.to_string();
    }
    for &(suffix, replacement) in SUFFIXES {
        let Some(base) = token.strip_suffix(suffix) else {
            continue;
        };
        if base.chars().count() < MIN_STEM {
            continue;
        }
        let blocked = match suffix {
            "s" => base.ends_with('s') || base.ends_with('u') || base.ends_with('i'),
            "ed" => base.ends_with('e'),
            _ => false,
        };
        if blocked {
            continue;
        }
        return format!("{base}{replacement}");
    }
    token.to_string()
}

/// Lowercased alphanumeric runs, each stemmed. Duplicates are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| stem(&w.to_lowercase()))
        .collect()
}
