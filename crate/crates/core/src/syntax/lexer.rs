//! Tokenizer shared by programs, type annotations and constraint files.

use std::fmt;

use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Lower-case identifier; may contain digits, `_`, `'` and `#`.
    Lower(String),
    Upper(String),
    Num(u64),
    Underscore,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    DColon,
    TColon,
    Equals,
    Bar,
    Arrow,
    Backslash,
    Dot,
    Plus,
    Star,
    Leq,
    Semi,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Lower(s) | Tok::Upper(s) => return write!(f, "`{s}`"),
            Tok::Num(n) => return write!(f, "`{n}`"),
            Tok::Underscore => "_",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::DColon => "::",
            Tok::TColon => ":::",
            Tok::Equals => "=",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::Backslash => "\\",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Leq => "<=",
            Tok::Semi => ";",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '#'
}

/// Splits `src` into tokens. `--` starts a comment running to end of line.
pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    for (lno, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let c = chars[k];
            let span = Span { line: lno as u32 + 1, col: k as u32 + 1 };
            if c.is_whitespace() {
                k += 1;
                continue;
            }
            if c == '-' && chars.get(k + 1) == Some(&'-') {
                break;
            }
            let start = k;
            let tok = if c.is_ascii_alphabetic() || (c == '_' && chars.get(k + 1).is_some_and(|d| ident_char(*d))) {
                while k < chars.len() && ident_char(chars[k]) {
                    k += 1;
                }
                let word: String = chars[start..k].iter().collect();
                if c.is_ascii_uppercase() {
                    Tok::Upper(word)
                } else {
                    Tok::Lower(word)
                }
            } else if c.is_ascii_digit() {
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let digits: String = chars[start..k].iter().collect();
                let n = digits
                    .parse()
                    .map_err(|_| SyntaxError::parse(span, format!("numeral `{digits}` is too large")))?;
                Tok::Num(n)
            } else {
                let two: String = chars[k..chars.len().min(k + 3)].iter().collect();
                let (tok, len) = if two.starts_with(":::") {
                    (Tok::TColon, 3)
                } else if two.starts_with("::") {
                    (Tok::DColon, 2)
                } else if two.starts_with("->") {
                    (Tok::Arrow, 2)
                } else if two.starts_with("<=") {
                    (Tok::Leq, 2)
                } else {
                    let t = match c {
                        '_' => Tok::Underscore,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        '=' => Tok::Equals,
                        '|' => Tok::Bar,
                        '\\' | 'λ' => Tok::Backslash,
                        '.' => Tok::Dot,
                        '+' => Tok::Plus,
                        '*' => Tok::Star,
                        ';' => Tok::Semi,
                        '∀' => Tok::Lower("forall".into()),
                        '→' => Tok::Arrow,
                        '≤' => Tok::Leq,
                        other => return Err(SyntaxError::parse(span, format!("unexpected character `{other}`"))),
                    };
                    (t, 1)
                };
                k += len;
                tok
            };
            out.push(Token { tok, span });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn identifiers_and_operators() {
        assert_eq!(
            toks("rev# (x:xs) ys = x' -- note"),
            vec![
                Tok::Lower("rev#".into()),
                Tok::LParen,
                Tok::Lower("x".into()),
                Tok::Colon,
                Tok::Lower("xs".into()),
                Tok::RParen,
                Tok::Lower("ys".into()),
                Tok::Equals,
                Tok::Lower("x'".into()),
            ]
        );
        assert_eq!(toks("f ::: forall i. L i a"), vec![
            Tok::Lower("f".into()),
            Tok::TColon,
            Tok::Lower("forall".into()),
            Tok::Lower("i".into()),
            Tok::Dot,
            Tok::Upper("L".into()),
            Tok::Lower("i".into()),
            Tok::Lower("a".into()),
        ]);
        assert_eq!(toks("_ _x <= 12"), vec![Tok::Underscore, Tok::Lower("_x".into()), Tok::Leq, Tok::Num(12)]);
    }

    #[test]
    fn spans_are_one_based() {
        let ts = lex("f x =\n  x").unwrap();
        assert_eq!(ts[3].span, Span { line: 2, col: 3 });
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(lex("f = $").is_err());
    }
}
