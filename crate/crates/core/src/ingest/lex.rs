//! Tokenizer shared by the workflow DSL and the text patch format.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Str(String),
    Arrow,
    Colon,
    Semi,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-')
}

/// Whether `s` can be written as a bare word and read back unchanged.
pub(crate) fn is_bare(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char) && !s.contains("->")
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Bare word when possible, quoted string otherwise.
pub(crate) fn ident(s: &str) -> String {
    if is_bare(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

/// `;` also terminates a statement at end of line when `newline_terminates`
/// is set (the patch format is one op per line).
pub(crate) fn tokenize(text: &str, newline_terminates: bool) -> Result<Vec<Spanned>, (usize, String)> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                if newline_terminates && !matches!(out.last(), None | Some(Spanned { tok: Tok::Semi, .. })) {
                    out.push(Spanned { tok: Tok::Semi, line });
                }
                line += 1;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            ';' => {
                chars.next();
                out.push(Spanned { tok: Tok::Semi, line });
            }
            ':' => {
                chars.next();
                out.push(Spanned { tok: Tok::Colon, line });
            }
            '"' => {
                chars.next();
                let start = line;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err((start, "unterminated string".into())),
                        Some('"') => break,
                        Some('\n') => return Err((start, "newline inside string".into())),
                        Some('\\') => match chars.next() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('u') => {
                                if chars.next() != Some('{') {
                                    return Err((line, "malformed \\u escape".into()));
                                }
                                let mut hex = String::new();
                                loop {
                                    match chars.next() {
                                        Some('}') => break,
                                        Some(h) if h.is_ascii_hexdigit() && hex.len() < 6 => hex.push(h),
                                        _ => return Err((line, "malformed \\u escape".into())),
                                    }
                                }
                                let ch = u32::from_str_radix(&hex, 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or((line, "invalid \\u escape".to_string()))?;
                                s.push(ch);
                            }
                            other => return Err((line, format!("unknown escape '\\{}'", other.map(String::from).unwrap_or_default()))),
                        },
                        Some(c) => s.push(c),
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line });
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'>') {
                    chars.next();
                    out.push(Spanned { tok: Tok::Arrow, line });
                } else {
                    let w = read_word(&mut chars, String::from("-"));
                    out.push(Spanned { tok: Tok::Word(w), line });
                }
            }
            c if is_word_char(c) => {
                let w = read_word(&mut chars, String::new());
                out.push(Spanned { tok: Tok::Word(w), line });
            }
            other => return Err((line, format!("unexpected character '{other}'"))),
        }
    }
    if newline_terminates && !matches!(out.last(), None | Some(Spanned { tok: Tok::Semi, .. })) {
        out.push(Spanned { tok: Tok::Semi, line });
    }
    Ok(out)
}

fn read_word(chars: &mut std::iter::Peekable<std::str::Chars<'_>>, mut w: String) -> String {
    while let Some(&c) = chars.peek() {
        if c == '-' {
            // stop before an arrow
            let mut look = chars.clone();
            look.next();
            if look.peek() == Some(&'>') {
                break;
            }
        } else if !is_word_char(c) {
            break;
        }
        w.push(c);
        chars.next();
    }
    w
}

/// Splits a token stream into `;`-terminated statements.
pub(crate) fn statements(tokens: Vec<Spanned>) -> Result<Vec<Vec<Spanned>>, (usize, String)> {
    let mut out = Vec::new();
    let mut cur: Vec<Spanned> = Vec::new();
    for t in tokens {
        if t.tok == Tok::Semi {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(t);
        }
    }
    if let Some(first) = cur.first() {
        return Err((first.line, "statement is missing its terminating ';'".into()));
    }
    Ok(out)
}

/// Cursor over one statement's tokens.
pub(crate) struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    pub line: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned]) -> Self {
        let line = toks.first().map(|t| t.line).unwrap_or(0);
        Cursor { toks, pos: 0, line }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    pub fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if let Some(s) = self.toks.get(self.pos) {
            self.line = s.line;
        }
        self.pos += 1;
        t
    }

    /// A bare word or a nonempty quoted string.
    pub fn id(&mut self, what: &str) -> Result<String, (usize, String)> {
        let line = self.line;
        match self.next() {
            Some(Tok::Word(w)) => Ok(w.clone()),
            Some(Tok::Str(s)) if !s.is_empty() => Ok(s.clone()),
            Some(Tok::Str(_)) => Err((line, format!("{what} must not be empty"))),
            Some(other) => Err((line, format!("expected {what}, found {}", describe(other)))),
            None => Err((line, format!("expected {what}, found end of statement"))),
        }
    }

    pub fn opt_str(&mut self) -> Option<String> {
        if let Some(Tok::Str(s)) = self.peek() {
            let s = s.clone();
            self.next();
            Some(s)
        } else {
            None
        }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<(), (usize, String)> {
        let line = self.line;
        match self.next() {
            Some(t) if *t == tok => Ok(()),
            Some(t) => Err((line, format!("expected {}, found {}", describe(&tok), describe(t)))),
            None => Err((line, format!("expected {}, found end of statement", describe(&tok)))),
        }
    }

    pub fn finish(&mut self) -> Result<(), (usize, String)> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err((self.line, format!("unexpected {} at end of statement", describe(t)))),
        }
    }
}

pub(crate) fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Str(s) => format!("string {}", quote(s)),
        Tok::Arrow => "'->'".into(),
        Tok::Colon => "':'".into(),
        Tok::Semi => "';'".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, false).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrow_splits_bare_words() {
        assert_eq!(toks("flow S->A;"), vec![Tok::Word("flow".into()), Tok::Word("S".into()), Tok::Arrow, Tok::Word("A".into()), Tok::Semi]);
        assert_eq!(toks("a-b-->c"), vec![Tok::Word("a-b-".into()), Tok::Arrow, Tok::Word("c".into())]);
    }

    #[test]
    fn quoting_round_trips() {
        for s in ["plain", "with space", "q\"uote", "back\\slash", "tab\there", "a->b", "\u{7}"] {
            let q = ident(s);
            let t = toks(&q);
            let back = match &t[0] {
                Tok::Word(w) | Tok::Str(w) => w.clone(),
                _ => panic!(),
            };
            assert_eq!(back, s);
        }
    }

    #[test]
    fn comments_and_errors() {
        assert_eq!(toks("# nothing here\n"), vec![]);
        assert!(tokenize("task \"open", false).is_err());
        assert!(tokenize("task @", false).is_err());
    }
}
