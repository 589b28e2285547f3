//! Tokenizer shared by every textual grammar in the crate (meadow terms,
//! event expressions, conditional values, configurations and CLI lines).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer literal, kept as text so arbitrary sizes survive.
    Int(String),
    /// `0x` / `0(…)` shorthand for the zero indicator.
    Zero,
    /// `1x` / `1(…)` shorthand for the one indicator.
    One,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Eq,
    Amp,
    Bar,
    BarBar,
    Bang,
    /// `:->`
    Guard,
    /// `~>`
    Yield,
    /// `->`
    Arrow,
    At,
    Semi,
    /// `<|` (left half of the ternary conditional)
    CondL,
    /// `|>`
    CondR,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Int(s) => return write!(f, "{s}"),
            Tok::Zero => "0",
            Tok::One => "1",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Eq => "=",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::BarBar => "||",
            Tok::Bang => "!",
            Tok::Guard => ":->",
            Tok::Yield => "~>",
            Tok::Arrow => "->",
            Tok::At => "@",
            Tok::Semi => ";",
            Tok::CondL => "<|",
            Tok::CondR => "|>",
        };
        f.write_str(s)
    }
}

/// A token with its 1-based starting column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at column {col}: {msg}")]
pub struct SyntaxError {
    pub col: usize,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(col: usize, msg: impl Into<String>) -> Self {
        SyntaxError { col, msg: msg.into() }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (tok, len) = match c {
            _ if is_ident_start(c) => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                let glued = chars
                    .get(j)
                    .is_some_and(|&n| is_ident_start(n) || n == '(');
                match (text.as_str(), glued) {
                    ("0", true) => (Tok::Zero, 1),
                    ("1", true) => (Tok::One, 1),
                    _ => (Tok::Int(text), j - start),
                }
            }
            ':' if next == Some('-') && next2 == Some('>') => (Tok::Guard, 3),
            ':' => (Tok::Colon, 1),
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '~' if next == Some('>') => (Tok::Yield, 2),
            '|' if next == Some('|') => (Tok::BarBar, 2),
            '|' if next == Some('>') => (Tok::CondR, 2),
            '<' if next == Some('|') => (Tok::CondL, 2),
            '|' => (Tok::Bar, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '^' => (Tok::Caret, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '=' => (Tok::Eq, 1),
            '&' => (Tok::Amp, 1),
            '!' => (Tok::Bang, 1),
            '@' => (Tok::At, 1),
            ';' => (Tok::Semi, 1),
            '¬' => (Tok::Bang, 1),
            _ => return Err(SyntaxError::new(col, format!("unexpected character '{c}'"))),
        };
        out.push(Token { tok, col });
        i += len;
    }
    Ok(out)
}

/// Cursor over a token slice with the small set of helpers every
/// recursive-descent parser in the crate needs.
#[derive(Debug, Clone)]
pub struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], end_col: usize) -> Self {
        Cursor { toks, pos: 0, end_col }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, ahead: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.tok)
    }

    pub fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), SyntaxError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{tok}'")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}'")))
        }
    }

    pub fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    pub fn expect_end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected '{t}'"))),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> SyntaxError {
        let msg = msg.into();
        match self.peek() {
            Some(t) if !msg.contains("unexpected") => {
                SyntaxError::new(self.col(), format!("{msg}, found '{t}'"))
            }
            Some(_) => SyntaxError::new(self.col(), msg),
            None => SyntaxError::new(self.col(), format!("{msg}, found end of input")),
        }
    }

    /// Signed rational literal: `-`? INT (`/` INT)?
    pub fn rational(&mut self) -> Result<crate::meadow::Rational, SyntaxError> {
        let col = self.col();
        let neg = self.eat(&Tok::Minus);
        let num = match self.bump() {
            Some(Tok::Int(s)) => s.clone(),
            Some(Tok::Zero) => "0".to_string(),
            Some(Tok::One) => "1".to_string(),
            _ => return Err(SyntaxError::new(col, "expected rational literal")),
        };
        let mut text = if neg { format!("-{num}") } else { num };
        if self.peek() == Some(&Tok::Slash) {
            if let Some(Tok::Int(d)) = self.peek_at(1) {
                self.pos += 2;
                text = format!("{text}/{d}");
            }
        }
        text.parse()
            .map_err(|_| SyntaxError::new(col, format!("invalid rational literal '{text}'")))
    }
}
