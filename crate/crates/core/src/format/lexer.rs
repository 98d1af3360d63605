//! Line tokenizer shared by the model and lesson grammars.
//!
//! Tokens are separated by runs of spaces or tabs. `#` starts a comment
//! outside of quotes. A token is either a bare word, a quoted string, or
//! `key=value` where the value may itself be quoted.

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Token {
    pub key: Option<String>,
    pub value: String,
    pub quoted: bool,
    /// 1-based character column of the token start.
    pub column: usize,
}

impl Token {
    pub fn is_bare(&self, word: &str) -> bool {
        self.key.is_none() && !self.quoted && self.value == word
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct LexError {
    pub column: usize,
    pub message: String,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub(crate) fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char)
}

pub(crate) fn tokenize(line: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == ' ' || c == '\t' {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let start = i;
        let mut key = None;
        if is_ident_start(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            if j < chars.len() && chars[j] == '=' {
                key = Some(chars[i..j].iter().collect::<String>());
                i = j + 1;
            }
        }
        let (value, quoted) = if i < chars.len() && chars[i] == '"' {
            let mut value = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => {
                        return Err(LexError {
                            column: start + 1,
                            message: "unterminated quoted string".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match chars.get(j + 1) {
                        Some(&e @ ('"' | '\\')) => {
                            value.push(e);
                            j += 2;
                        }
                        _ => {
                            return Err(LexError {
                                column: j + 1,
                                message: "invalid escape in quoted string".into(),
                            })
                        }
                    },
                    Some(&other) => {
                        value.push(other);
                        j += 1;
                    }
                }
            }
            i = j + 1;
            if i < chars.len() && !matches!(chars[i], ' ' | '\t' | '#') {
                return Err(LexError {
                    column: i + 1,
                    message: "text directly after closing quote".into(),
                });
            }
            (value, true)
        } else {
            let begin = i;
            while i < chars.len() && !matches!(chars[i], ' ' | '\t' | '#') {
                if chars[i] == '"' {
                    return Err(LexError {
                        column: i + 1,
                        message: "stray quote".into(),
                    });
                }
                i += 1;
            }
            (chars[begin..i].iter().collect(), false)
        };
        tokens.push(Token {
            key,
            value,
            quoted,
            column: start + 1,
        });
    }
    Ok(tokens)
}

/// Quotes a display string with `\"` and `\\` escapes.
pub(crate) fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(line: &str) -> Vec<(Option<String>, String, usize)> {
        tokenize(line)
            .unwrap()
            .into_iter()
            .map(|t| (t.key, t.value, t.column))
            .collect()
    }

    #[test]
    fn splits_words_keys_and_quotes() {
        assert_eq!(
            values(r#"block A  kind=mechanical name="Pick \"Alpha\" # x" # trailing"#),
            vec![
                (None, "block".into(), 1),
                (None, "A".into(), 7),
                (Some("kind".into()), "mechanical".into(), 10),
                (Some("name".into()), "Pick \"Alpha\" # x".into(), 26),
            ]
        );
    }

    #[test]
    fn operators_are_bare_tokens() {
        let toks = values("observable p = 6.0");
        assert_eq!(toks[2], (None, "=".into(), 14));
        let toks = values("op=verify p == 0");
        assert_eq!(toks[0].0.as_deref(), Some("op"));
        assert_eq!(toks[2].1, "==");
    }

    #[test]
    fn lex_errors() {
        assert!(tokenize(r#"step 1 "open"#).is_err());
        assert!(tokenize(r#"a"b"#).is_err());
        assert!(tokenize(r#""x"y"#).is_err());
        assert!(tokenize(r#""\n""#).is_err());
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("PickAlpha.air_in"));
        assert!(is_identifier("_x1"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }
}
