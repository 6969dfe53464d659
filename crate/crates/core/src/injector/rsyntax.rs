//! Just enough R lexing for pattern-based mutation: string and comment
//! masking, bracket balance and identifier scanning.

/// Splits text into lines, each keeping its terminating `\n` when present.
pub fn lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

/// Per-line copies of `text` with string contents, backtick names and
/// comments blanked out. Quote characters are kept; byte offsets are preserved.
pub fn mask(text: &str) -> Vec<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Code,
        Str(char),
        Comment,
    }
    let mut out = Vec::new();
    let mut state = State::Code;
    for line in lines(text) {
        let mut masked = String::with_capacity(line.len());
        let mut chars = line.chars().peekable();
        if state == State::Comment {
            state = State::Code;
        }
        while let Some(c) = chars.next() {
            match state {
                State::Code => match c {
                    '"' | '\'' | '`' => {
                        masked.push(c);
                        state = State::Str(c);
                    }
                    '#' => {
                        push_blank(&mut masked, c);
                        state = State::Comment;
                    }
                    _ => masked.push(c),
                },
                State::Str(q) => {
                    if c == '\\' {
                        push_blank(&mut masked, c);
                        if let Some(n) = chars.next() {
                            push_blank(&mut masked, n);
                        }
                    } else if c == q {
                        masked.push(c);
                        state = State::Code;
                    } else if c == '\n' {
                        masked.push(c);
                    } else {
                        push_blank(&mut masked, c);
                    }
                }
                State::Comment => {
                    if c == '\n' {
                        masked.push(c);
                        state = State::Code;
                    } else {
                        push_blank(&mut masked, c);
                    }
                }
            }
        }
        out.push(masked);
    }
    out
}

fn push_blank(s: &mut String, c: char) {
    for _ in 0..c.len_utf8() {
        s.push(' ');
    }
}

/// Net bracket depth change of a masked line, per bracket kind: `()`, `[]`, `{}`.
pub fn depth_delta(masked: &str) -> [i32; 3] {
    let mut d = [0; 3];
    for c in masked.chars() {
        match c {
            '(' => d[0] += 1,
            ')' => d[0] -= 1,
            '[' => d[1] += 1,
            ']' => d[1] -= 1,
            '{' => d[2] += 1,
            '}' => d[2] -= 1,
            _ => {}
        }
    }
    d
}

/// Whether every bracket opened on the masked line is closed on it, in order.
pub fn balanced(masked: &str) -> bool {
    let mut stack = Vec::new();
    for c in masked.chars() {
        match c {
            '(' | '[' | '{' => stack.push(c),
            ')' | ']' | '}' => {
                let want = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if stack.pop() != Some(want) {
                    return false;
                }
            }
            _ => {}
        }
    }
    stack.is_empty()
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '.'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '_'
}

pub const KEYWORDS: &[&str] = &[
    "if",
    "else",
    "for",
    "while",
    "repeat",
    "function",
    "return",
    "next",
    "break",
    "in",
    "TRUE",
    "FALSE",
    "NULL",
    "NA",
    "NA_integer_",
    "NA_real_",
    "NA_character_",
    "Inf",
    "NaN",
    "T",
    "F",
];

/// An identifier occurrence in masked code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    /// Byte offset in the line.
    pub col: usize,
}

/// Identifier tokens of a masked line (numbers such as `1.5e3` are skipped).
pub fn idents(masked: &str) -> Vec<Ident> {
    let bytes: Vec<char> = masked.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut byte = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let prev_ident = i > 0 && is_ident_char(bytes[i - 1]);
        if is_ident_start(c) && !prev_ident && !(c == '.' && bytes.get(i + 1).is_some_and(|n| n.is_ascii_digit())) {
            let start_byte = byte;
            let mut name = String::new();
            while i < bytes.len() && is_ident_char(bytes[i]) {
                name.push(bytes[i]);
                byte += bytes[i].len_utf8();
                i += 1;
            }
            out.push(Ident { name, col: start_byte });
            continue;
        }
        if c.is_ascii_digit() && !prev_ident {
            while i < bytes.len() && (is_ident_char(bytes[i]) || bytes[i] == '.') {
                byte += bytes[i].len_utf8();
                i += 1;
            }
            continue;
        }
        byte += c.len_utf8();
        i += 1;
    }
    out
}

/// The text after an identifier, skipping spaces.
pub fn after<'a>(masked: &'a str, ident: &Ident) -> &'a str {
    masked[ident.col + ident.name.len()..].trim_start_matches([' ', '\t'])
}

/// The text before an identifier, skipping spaces.
pub fn before<'a>(masked: &'a str, ident: &Ident) -> &'a str {
    masked[..ident.col].trim_end_matches([' ', '\t'])
}

/// Whether the identifier is the target of `<-`, `=` (at statement level) or `<<-`.
pub fn is_definition(masked: &str, ident: &Ident) -> bool {
    let rest = after(masked, ident);
    if rest.starts_with("<-") || rest.starts_with("<<-") {
        return true;
    }
    rest.starts_with('=') && !rest.starts_with("==") && before(masked, ident).is_empty()
}

/// Whether the identifier is a named argument or list element (`f(name = x)`).
pub fn is_argument_name(masked: &str, ident: &Ident) -> bool {
    let rest = after(masked, ident);
    rest.starts_with('=') && !rest.starts_with("==") && !before(masked, ident).is_empty()
}

/// Whether the identifier is accessed as a member (`x$name`, `x@name`, `pkg::name`).
pub fn is_member(masked: &str, ident: &Ident) -> bool {
    let b = before(masked, ident);
    b.ends_with('$') || b.ends_with('@') || b.ends_with("::") || after(masked, ident).starts_with("::")
}

/// Index (0-based) of the line holding the `}` that closes the first `{` opened on `start`.
pub fn matching_close(masked: &[String], start: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut opened = false;
    for (i, line) in masked.iter().enumerate().skip(start) {
        for c in line.chars() {
            match c {
                '{' => {
                    depth += 1;
                    opened = true;
                }
                '}' => {
                    depth -= 1;
                    if opened && depth == 0 {
                        return Some(i);
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Leading whitespace of a line.
pub fn indent(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_strings_and_comments() {
        let m = mask("x <- \"a # b\" # note\ny <- 'q\\'r'\n");
        assert_eq!(m[0], "x <- \"     \"       \n");
        assert_eq!(m[1], "y <- '    '\n");
    }

    #[test]
    fn masking_spans_lines() {
        let m = mask("s <- \"one\ntwo\" ; z\n");
        assert_eq!(m[1], "   \" ; z\n");
    }

    #[test]
    fn identifiers_skip_numbers_and_strings() {
        let m = mask("a.b <- f(x, 1.5e3, \"zz\") + .hidden\n");
        let names: Vec<String> = idents(&m[0]).into_iter().map(|i| i.name).collect();
        assert_eq!(names, ["a.b", "f", "x", ".hidden"]);
    }

    #[test]
    fn definition_and_argument_detection() {
        let line = "y <- f(n = 2, x == 3)\n";
        let ids = idents(line);
        assert!(is_definition(line, &ids[0]));
        assert!(is_argument_name(line, &ids[2]));
        assert!(!is_argument_name(line, &ids[3]));
        assert!(!is_definition(line, &ids[3]));
    }

    #[test]
    fn finds_matching_brace() {
        let m = mask("f <- function() {\n  if (x) {\n    1\n  }\n}\nz\n");
        assert_eq!(matching_close(&m, 0), Some(4));
        assert_eq!(matching_close(&m, 1), Some(3));
    }

    #[test]
    fn balance() {
        assert!(balanced("f(a[1], {b})"));
        assert!(!balanced("f(a"));
        assert!(!balanced("f(a]"));
    }
}
