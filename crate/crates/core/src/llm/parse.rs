use serde::{Deserialize, Serialize};

/// Parsed reply: `label` is `None` when no standalone 0/1 was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Option<u8>,
    pub raw: String,
}

impl Verdict {
    pub fn is_parseable(&self) -> bool {
        self.label.is_some()
    }
}

/// First standalone `0` or `1`: a single digit with no digit on either side.
/// A decimal point between digits joins them, so `1.5` is not standalone.
pub fn parse_label(raw: &str) -> Verdict {
    let chars: Vec<char> = raw.chars().collect();
    let is_digit = |i: usize| chars.get(i).is_some_and(|c| c.is_ascii_digit());
    // a '.' flanked by digits continues the number
    let joins = |i: usize| chars.get(i) == Some(&'.') && i > 0 && is_digit(i - 1) && is_digit(i + 1);
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || joins(i)) {
            i += 1;
        }
        if i - start == 1 {
            match chars[start] {
                '0' => return Verdict { label: Some(0), raw: raw.to_string() },
                '1' => return Verdict { label: Some(1), raw: raw.to_string() },
                _ => {}
            }
        }
    }
    Verdict { label: None, raw: raw.to_string() }
}
