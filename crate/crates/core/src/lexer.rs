//! Tokenizer shared by the SDL and executable-document parsers.

use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based line/column position in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Punct(char),
    Spread,
    Name(String),
    Int(String),
    Float(String),
    Str(String),
    BlockStr(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Punct(c) => write!(f, "'{c}'"),
            Tok::Spread => f.write_str("'...'"),
            Tok::Name(n) => write!(f, "name '{n}'"),
            Tok::Int(n) | Tok::Float(n) => write!(f, "number {n}"),
            Tok::Str(_) | Tok::BlockStr(_) => f.write_str("string"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            pos,
            message: message.into(),
        }
    }
}

/// Splits `src` into tokens. Whitespace, commas and `#` comments are dropped.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        match c {
            '\u{feff}' | ' ' | '\t' | '\n' | '\r' | ',' => bump!(),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
            }
            '!' | '$' | '&' | '(' | ')' | ':' | '=' | '@' | '[' | ']' | '{' | '|' | '}' => {
                out.push(Token {
                    tok: Tok::Punct(c),
                    pos,
                });
                bump!();
            }
            '.' => {
                if chars.get(i + 1) == Some(&'.') && chars.get(i + 2) == Some(&'.') {
                    bump!();
                    bump!();
                    bump!();
                    out.push(Token {
                        tok: Tok::Spread,
                        pos,
                    });
                } else {
                    return Err(SyntaxError::new(pos, "unexpected '.'"));
                }
            }
            '"' => {
                if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') {
                    bump!();
                    bump!();
                    bump!();
                    let mut raw = String::new();
                    loop {
                        if i >= chars.len() {
                            return Err(SyntaxError::new(pos, "unterminated block string"));
                        }
                        if chars[i] == '"'
                            && chars.get(i + 1) == Some(&'"')
                            && chars.get(i + 2) == Some(&'"')
                        {
                            bump!();
                            bump!();
                            bump!();
                            break;
                        }
                        if chars[i] == '\\'
                            && chars.get(i + 1) == Some(&'"')
                            && chars.get(i + 2) == Some(&'"')
                            && chars.get(i + 3) == Some(&'"')
                        {
                            raw.push_str("\"\"\"");
                            for _ in 0..4 {
                                bump!();
                            }
                            continue;
                        }
                        raw.push(chars[i]);
                        bump!();
                    }
                    out.push(Token {
                        tok: Tok::BlockStr(block_string_value(&raw)),
                        pos,
                    });
                } else {
                    bump!();
                    let mut s = String::new();
                    loop {
                        let Some(&ch) = chars.get(i) else {
                            return Err(SyntaxError::new(pos, "unterminated string"));
                        };
                        match ch {
                            '"' => {
                                bump!();
                                break;
                            }
                            '\n' | '\r' => {
                                return Err(SyntaxError::new(pos, "unterminated string"));
                            }
                            '\\' => {
                                let epos = Pos { line, column: col };
                                bump!();
                                let Some(&esc) = chars.get(i) else {
                                    return Err(SyntaxError::new(epos, "unterminated string"));
                                };
                                bump!();
                                match esc {
                                    '"' => s.push('"'),
                                    '\\' => s.push('\\'),
                                    '/' => s.push('/'),
                                    'b' => s.push('\u{8}'),
                                    'f' => s.push('\u{c}'),
                                    'n' => s.push('\n'),
                                    'r' => s.push('\r'),
                                    't' => s.push('\t'),
                                    'u' => {
                                        let hex: String =
                                            chars.iter().skip(i).take(4).collect();
                                        let code = (hex.len() == 4)
                                            .then(|| u32::from_str_radix(&hex, 16).ok())
                                            .flatten()
                                            .and_then(char::from_u32)
                                            .ok_or_else(|| {
                                                SyntaxError::new(epos, "invalid unicode escape")
                                            })?;
                                        for _ in 0..4 {
                                            bump!();
                                        }
                                        s.push(code);
                                    }
                                    other => {
                                        return Err(SyntaxError::new(
                                            epos,
                                            format!("invalid escape '\\{other}'"),
                                        ))
                                    }
                                }
                            }
                            _ => {
                                s.push(ch);
                                bump!();
                            }
                        }
                    }
                    out.push(Token {
                        tok: Tok::Str(s),
                        pos,
                    });
                }
            }
            '-' | '0'..='9' => {
                let start = i;
                if c == '-' {
                    bump!();
                }
                let int_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                if i == int_start {
                    return Err(SyntaxError::new(pos, "expected digit"));
                }
                if chars[int_start] == '0' && i - int_start > 1 {
                    return Err(SyntaxError::new(pos, "leading zero in number"));
                }
                let mut is_float = false;
                if chars.get(i) == Some(&'.') {
                    is_float = true;
                    bump!();
                    let frac = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                    if i == frac {
                        return Err(SyntaxError::new(pos, "expected digit after '.'"));
                    }
                }
                if matches!(chars.get(i), Some('e') | Some('E')) {
                    is_float = true;
                    bump!();
                    if matches!(chars.get(i), Some('+') | Some('-')) {
                        bump!();
                    }
                    let exp = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                    if i == exp {
                        return Err(SyntaxError::new(pos, "expected exponent digits"));
                    }
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_' || chars[i] == '.') {
                    return Err(SyntaxError::new(pos, "invalid number"));
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: if is_float {
                        Tok::Float(text)
                    } else {
                        Tok::Int(text)
                    },
                    pos,
                });
            }
            c if c == '_' || c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i] == '_' || chars[i].is_ascii_alphanumeric()) {
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    pos,
                });
            }
            other => {
                return Err(SyntaxError::new(
                    pos,
                    format!("unexpected character {other:?}"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, column: col },
    });
    Ok(out)
}

/// Block string value: common indentation removed, blank leading/trailing lines dropped.
fn block_string_value(raw: &str) -> String {
    let lines: Vec<&str> = raw.split('\n').map(|l| l.trim_end_matches('\r')).collect();
    let indent = lines
        .iter()
        .skip(1)
        .filter_map(|l| {
            let n = l.chars().take_while(|c| *c == ' ' || *c == '\t').count();
            (n < l.chars().count()).then_some(n)
        })
        .min()
        .unwrap_or(0);
    let mut out: Vec<String> = lines
        .iter()
        .enumerate()
        .map(|(idx, l)| {
            if idx == 0 {
                l.to_string()
            } else {
                l.chars().skip(indent).collect()
            }
        })
        .collect();
    while out.first().is_some_and(|l| l.trim().is_empty()) {
        out.remove(0);
    }
    while out.last().is_some_and(|l| l.trim().is_empty()) {
        out.pop();
    }
    out.join("\n")
}

/// Cursor over a token stream with the small set of helpers both parsers need.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    at: usize,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Self {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub(crate) fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.at + ahead).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub(crate) fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn is_punct(&self, c: char) -> bool {
        matches!(self.peek(), Tok::Punct(p) if *p == c)
    }

    pub(crate) fn is_name(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == name)
    }

    pub(crate) fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_punct(&mut self, c: char) -> Result<Pos, SyntaxError> {
        let pos = self.pos();
        if self.eat_punct(c) {
            Ok(pos)
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    pub(crate) fn expect_name(&mut self) -> Result<(String, Pos), SyntaxError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Name(n) => {
                let n = n.clone();
                self.next();
                Ok((n, pos))
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.is_name(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> SyntaxError {
        SyntaxError::new(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn skips_commas_and_comments() {
        assert_eq!(
            kinds("a, b # c\n d"),
            vec![
                Tok::Name("a".into()),
                Tok::Name("b".into()),
                Tok::Name("d".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("-12")[0], Tok::Int("-12".into()));
        assert_eq!(kinds("1.5e3")[0], Tok::Float("1.5e3".into()));
        assert!(tokenize("012").is_err());
        assert!(tokenize("1.").is_err());
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn strings_and_escapes() {
        assert_eq!(kinds(r#""a\nbA""#)[0], Tok::Str("a\nbA".into()));
        assert_eq!(
            kinds("\"\"\"\n    hello\n      world\n\"\"\"")[0],
            Tok::BlockStr("hello\n  world".into())
        );
        let err = tokenize("\"open").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 1 });
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].pos, Pos { line: 2, column: 3 });
    }
}
