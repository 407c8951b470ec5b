use std::fmt;

use super::{ParseError, ParseOptions, SourceLocation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Lower(String),
    Upper(String),
    Int(i64),
    Data,
    Let,
    In,
    Free,
    Case,
    Of,
    Fail,
    Apply,
    Eq,
    Bar,
    Question,
    Arrow,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Underscore,
    /// Inserted before every token that starts in column 1, except the first.
    Sep,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Lower(s) | Tok::Upper(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Data => "`data`",
            Tok::Let => "`let`",
            Tok::In => "`in`",
            Tok::Free => "`free`",
            Tok::Case => "`case`",
            Tok::Of => "`of`",
            Tok::Fail => "`fail`",
            Tok::Apply => "`apply`",
            Tok::Eq => "`=`",
            Tok::Bar => "`|`",
            Tok::Question => "`?`",
            Tok::Arrow => "`->`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Semi => "`;`",
            Tok::Comma => "`,`",
            Tok::Underscore => "`_`",
            Tok::Sep => "a new top-level item",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn is_ident_char(c: char, generated: bool) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || (generated && c == '#')
}

pub(crate) fn lex(text: &str, opts: &ParseOptions) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError::Lexical {
        location: SourceLocation::new(&opts.file, line, column),
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && is_ident_char(chars[i], opts.generated_names) {
                return Err(err(line, col, "malformed number".into()));
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse::<i64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => return Err(err(line, col, format!("integer literal `{s}` out of range"))),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            i += 1;
            while i < chars.len() && is_ident_char(chars[i], opts.generated_names) {
                i += 1;
            }
            if i < chars.len() && chars[i] == '#' {
                return Err(err(line, col + (i - start), "`#` is reserved for generated names".into()));
            }
            let s: String = chars[start..i].iter().collect();
            match s.as_str() {
                "data" => Tok::Data,
                "let" => Tok::Let,
                "in" => Tok::In,
                "free" => Tok::Free,
                "case" => Tok::Case,
                "of" => Tok::Of,
                "fail" => Tok::Fail,
                "apply" => Tok::Apply,
                "_" => Tok::Underscore,
                _ if c.is_ascii_uppercase() => Tok::Upper(s),
                _ => Tok::Lower(s),
            }
        } else {
            i += 1;
            match c {
                '=' => Tok::Eq,
                '|' => Tok::Bar,
                '?' => Tok::Question,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '-' if chars.get(i) == Some(&'>') => {
                    i += 1;
                    Tok::Arrow
                }
                _ => return Err(err(line, col, format!("unexpected character {c:?}"))),
            }
        };
        col += i - start;
        if start_col == 1 && !out.is_empty() {
            out.push(Token { tok: Tok::Sep, line: start_line, column: start_col });
        }
        out.push(Token { tok, line: start_line, column: start_col });
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}
