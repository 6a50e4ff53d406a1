/// Replacement token for standalone numbers.
pub const NUMBER_TOKEN: &str = "<NUMBER>";

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Splits code into alphanumeric terms.
///
/// Words are maximal `[A-Za-z0-9_]+` runs. A run made only of digits is a
/// standalone number and becomes [`NUMBER_TOKEN`]; other runs are kept
/// verbatim if at least two characters long. No case folding or stemming.
pub fn preprocess_code<S: AsRef<str>>(lines: impl IntoIterator<Item = S>) -> Vec<String> {
    let mut tokens = Vec::new();
    for line in lines {
        let bytes = line.as_ref().as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if !is_word_byte(bytes[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            let word = &bytes[start..i];
            if word.iter().all(u8::is_ascii_digit) {
                tokens.push(NUMBER_TOKEN.to_string());
            } else if word.len() >= 2 {
                // ASCII-only run, always valid UTF-8
                tokens.push(String::from_utf8_lossy(word).into_owned());
            }
        }
    }
    tokens
}
