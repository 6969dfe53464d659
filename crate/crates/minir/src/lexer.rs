//! Tokenizer for the supported R surface syntax.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Num(f64),
    Int(f64),
    Str(String),
    Ident(String),
    // keywords
    Function,
    If,
    Else,
    For,
    In,
    While,
    Repeat,
    Break,
    Next,
    True,
    False,
    Null,
    Na,
    Inf,
    NaN,
    // punctuation / operators
    LArrow,
    SuperArrow,
    RArrow,
    Assign,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Special(String),
    Colon,
    ColonColon,
    Bang,
    And,
    AndAnd,
    Or,
    OrOr,
    Dollar,
    Tilde,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    DLBracket,
    RBracket,
    Comma,
    Semi,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Num(_) | Tok::Int(_) => "numeric constant",
            Tok::Str(_) => "string constant",
            Tok::Ident(_) => "symbol",
            Tok::Function => "'function'",
            Tok::If => "'if'",
            Tok::Else => "'else'",
            Tok::For => "'for'",
            Tok::In => "'in'",
            Tok::While => "'while'",
            Tok::Repeat => "'repeat'",
            Tok::Break => "'break'",
            Tok::Next => "'next'",
            Tok::True | Tok::False | Tok::Null | Tok::Na | Tok::Inf | Tok::NaN => "numeric constant",
            Tok::LArrow => "assignment",
            Tok::SuperArrow => "'<<-'",
            Tok::RArrow => "'->'",
            Tok::Assign => "'='",
            Tok::Eq => "'=='",
            Tok::Ne => "'!='",
            Tok::Lt => "'<'",
            Tok::Gt => "'>'",
            Tok::Le => "'<='",
            Tok::Ge => "'>='",
            Tok::Plus => "'+'",
            Tok::Minus => "'-'",
            Tok::Star => "'*'",
            Tok::Slash => "'/'",
            Tok::Caret => "'^'",
            Tok::Special(_) => "SPECIAL",
            Tok::Colon => "':'",
            Tok::ColonColon => "'::'",
            Tok::Bang => "'!'",
            Tok::And => "'&'",
            Tok::AndAnd => "'&&'",
            Tok::Or => "'|'",
            Tok::OrOr => "'||'",
            Tok::Dollar => "'$'",
            Tok::Tilde => "'~'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::LBracket => "'['",
            Tok::DLBracket => "'[['",
            Tok::RBracket => "']'",
            Tok::Comma => "','",
            Tok::Semi => "';'",
            Tok::Newline => "end of line",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{message}")]
pub struct LexError {
    pub message: String,
    pub line: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                out.push(Token { tok: Tok::Newline, line });
                line += 1;
                i += 1;
            }
            ' ' | '\t' | '\r' | '\u{c}' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' | '\'' => {
                let (s, next, lines) = lex_string(&chars, i, line)?;
                out.push(Token { tok: Tok::Str(s), line });
                line += lines;
                i = next;
            }
            '`' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '`' {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(LexError { message: "unexpected INCOMPLETE_STRING".into(), line });
                }
                out.push(Token { tok: Tok::Ident(chars[start..j].iter().collect()), line });
                i = j + 1;
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let (tok, next) = lex_number(&chars, i, line)?;
                out.push(Token { tok, line });
                i = next;
            }
            c if c.is_alphabetic() || c == '.' || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word.starts_with('_') {
                    return Err(LexError { message: format!("unexpected input \"{word}\""), line });
                }
                out.push(Token { tok: keyword(word), line });
            }
            _ => {
                let peek = |k: usize| chars.get(i + k).copied();
                let (tok, len) = match c {
                    '<' if peek(1) == Some('<') && peek(2) == Some('-') => (Tok::SuperArrow, 3),
                    '<' if peek(1) == Some('-') => (Tok::LArrow, 2),
                    '<' if peek(1) == Some('=') => (Tok::Le, 2),
                    '<' => (Tok::Lt, 1),
                    '>' if peek(1) == Some('=') => (Tok::Ge, 2),
                    '>' => (Tok::Gt, 1),
                    '-' if peek(1) == Some('>') => (Tok::RArrow, 2),
                    '-' => (Tok::Minus, 1),
                    '=' if peek(1) == Some('=') => (Tok::Eq, 2),
                    '=' => (Tok::Assign, 1),
                    '!' if peek(1) == Some('=') => (Tok::Ne, 2),
                    '!' => (Tok::Bang, 1),
                    '&' if peek(1) == Some('&') => (Tok::AndAnd, 2),
                    '&' => (Tok::And, 1),
                    '|' if peek(1) == Some('|') => (Tok::OrOr, 2),
                    '|' => (Tok::Or, 1),
                    '+' => (Tok::Plus, 1),
                    '*' => (Tok::Star, 1),
                    '/' => (Tok::Slash, 1),
                    '^' => (Tok::Caret, 1),
                    ':' if peek(1) == Some(':') && peek(2) == Some(':') => (Tok::ColonColon, 3),
                    ':' if peek(1) == Some(':') => (Tok::ColonColon, 2),
                    ':' => (Tok::Colon, 1),
                    '$' => (Tok::Dollar, 1),
                    '~' => (Tok::Tilde, 1),
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    '{' => (Tok::LBrace, 1),
                    '}' => (Tok::RBrace, 1),
                    '[' if peek(1) == Some('[') => (Tok::DLBracket, 2),
                    '[' => (Tok::LBracket, 1),
                    ']' => (Tok::RBracket, 1),
                    ',' => (Tok::Comma, 1),
                    ';' => (Tok::Semi, 1),
                    '%' => {
                        let mut j = i + 1;
                        while j < chars.len() && chars[j] != '%' && chars[j] != '\n' {
                            j += 1;
                        }
                        if j >= chars.len() || chars[j] != '%' {
                            return Err(LexError { message: "unexpected input".into(), line });
                        }
                        let op: String = chars[i..=j].iter().collect();
                        let len = j - i + 1;
                        (Tok::Special(op), len)
                    }
                    other => {
                        return Err(LexError { message: format!("unexpected input \"{other}\""), line });
                    }
                };
                out.push(Token { tok, line });
                i += len;
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line });
    Ok(out)
}

fn keyword(word: String) -> Tok {
    match word.as_str() {
        "function" => Tok::Function,
        "if" => Tok::If,
        "else" => Tok::Else,
        "for" => Tok::For,
        "in" => Tok::In,
        "while" => Tok::While,
        "repeat" => Tok::Repeat,
        "break" => Tok::Break,
        "next" => Tok::Next,
        "TRUE" => Tok::True,
        "FALSE" => Tok::False,
        "NULL" => Tok::Null,
        "NA" | "NA_real_" | "NA_integer_" | "NA_character_" => Tok::Na,
        "Inf" => Tok::Inf,
        "NaN" => Tok::NaN,
        _ => Tok::Ident(word),
    }
}

fn lex_number(chars: &[char], start: usize, line: usize) -> Result<(Tok, usize), LexError> {
    let mut i = start;
    if chars[i] == '0' && matches!(chars.get(i + 1), Some('x') | Some('X')) {
        i += 2;
        let hs = i;
        while i < chars.len() && chars[i].is_ascii_hexdigit() {
            i += 1;
        }
        let text: String = chars[hs..i].iter().collect();
        let v = i64::from_str_radix(&text, 16)
            .map_err(|_| LexError { message: "malformed hex constant".into(), line })? as f64;
        if chars.get(i) == Some(&'L') {
            return Ok((Tok::Int(v), i + 1));
        }
        return Ok((Tok::Num(v), i));
    }
    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
        i += 1;
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let save = i;
        i += 1;
        if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            i += 1;
        }
        if i < chars.len() && chars[i].is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        } else {
            i = save;
        }
    }
    let text: String = chars[start..i].iter().collect();
    let v: f64 =
        text.parse().map_err(|_| LexError { message: format!("unexpected numeric constant \"{text}\""), line })?;
    if chars.get(i) == Some(&'L') {
        return Ok((Tok::Int(v), i + 1));
    }
    Ok((Tok::Num(v), i))
}

fn lex_string(chars: &[char], start: usize, line: usize) -> Result<(String, usize, usize), LexError> {
    let quote = chars[start];
    let mut i = start + 1;
    let mut s = String::new();
    let mut lines = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == quote {
            return Ok((s, i + 1, lines));
        }
        if c == '\n' {
            lines += 1;
        }
        if c == '\\' {
            i += 1;
            let e = *chars.get(i).ok_or_else(|| LexError { message: "unexpected INCOMPLETE_STRING".into(), line })?;
            match e {
                'n' => s.push('\n'),
                't' => s.push('\t'),
                'r' => s.push('\r'),
                '0' => s.push('\0'),
                '\\' => s.push('\\'),
                '"' => s.push('"'),
                '\'' => s.push('\''),
                '`' => s.push('`'),
                ' ' => s.push(' '),
                '\n' => {
                    lines += 1;
                    s.push('\n')
                }
                other => {
                    return Err(LexError {
                        message: format!("'\\{other}' is an unrecognized escape in character string"),
                        line,
                    })
                }
            }
            i += 1;
            continue;
        }
        s.push(c);
        i += 1;
    }
    Err(LexError { message: "unexpected INCOMPLETE_STRING".into(), line })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_specials() {
        assert_eq!(
            toks("x <- y %in% z"),
            vec![
                Tok::Ident("x".into()),
                Tok::LArrow,
                Tok::Ident("y".into()),
                Tok::Special("%in%".into()),
                Tok::Ident("z".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn dotted_identifiers_and_numbers() {
        assert_eq!(
            toks("x.min <- .5e1; n <- 3L"),
            vec![
                Tok::Ident("x.min".into()),
                Tok::LArrow,
                Tok::Num(5.0),
                Tok::Semi,
                Tok::Ident("n".into()),
                Tok::LArrow,
                Tok::Int(3.0),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r#""a\"b\n""#), vec![Tok::Str("a\"b\n".into()), Tok::Eof]);
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("# hi\nx"), vec![Tok::Newline, Tok::Ident("x".into()), Tok::Eof]);
    }
}
