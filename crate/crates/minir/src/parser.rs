//! Recursive-descent parser producing the expression tree evaluated by [`crate::interp`].

use std::rc::Rc;

use crate::lexer::{tokenize, Tok, Token};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Null,
    Na,
    Ident(String),
    Call { func: Box<Expr>, args: Vec<Arg> },
    Index { obj: Box<Expr>, args: Vec<Arg>, double: bool },
    Dollar { obj: Box<Expr>, name: String },
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { target: Box<Expr>, value: Box<Expr>, global: bool },
    Function { params: Rc<Vec<Param>>, body: Rc<Expr> },
    Block(Vec<Expr>),
    Paren(Box<Expr>),
    If { cond: Box<Expr>, then: Box<Expr>, otherwise: Option<Box<Expr>> },
    For { var: String, seq: Box<Expr>, body: Box<Expr> },
    While { cond: Box<Expr>, body: Box<Expr> },
    Repeat(Box<Expr>),
    Formula(Option<Box<Expr>>, Box<Expr>),
    Break,
    Next,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Range,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    AndAnd,
    Or,
    OrOr,
    Special(String),
}

/// A top-level statement and the source line it starts on.
#[derive(Debug, Clone)]
pub struct Statement {
    pub expr: Expr,
    pub line: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unexpected {found} in \"{context}\"")]
pub struct ParseError {
    pub found: String,
    pub context: String,
    pub line: usize,
}

/// Result of parsing a whole file: every statement before the first syntax
/// error, plus the error itself if any. Script runners evaluate the prefix
/// before reporting the error.
pub struct Program {
    pub statements: Vec<Statement>,
    pub error: Option<ParseError>,
}

pub fn parse_program(src: &str) -> Program {
    let lines: Vec<&str> = src.lines().collect();
    let tokens = match tokenize(src) {
        Ok(t) => t,
        Err(e) => {
            return Program {
                statements: Vec::new(),
                error: Some(ParseError {
                    found: e.message.trim_start_matches("unexpected ").to_string(),
                    context: lines.get(e.line.saturating_sub(1)).unwrap_or(&"").trim().to_string(),
                    line: e.line,
                }),
            }
        }
    };
    let mut p = Parser { tokens, pos: 0, nl_stack: vec![false], lines };
    let mut statements = Vec::new();
    loop {
        p.skip_separators();
        if p.at(&Tok::Eof) {
            break;
        }
        let line = p.line();
        match p.statement_top() {
            Ok(expr) => statements.push(Statement { expr, line }),
            Err(e) => return Program { statements, error: Some(e) },
        }
    }
    Program { statements, error: None }
}

/// Parses a complete source text, failing on the first syntax error.
pub fn parse(src: &str) -> Result<Vec<Statement>, ParseError> {
    let prog = parse_program(src);
    match prog.error {
        Some(e) => Err(e),
        None => Ok(prog.statements),
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    /// true when newlines are insignificant (inside parentheses/brackets)
    nl_stack: Vec<bool>,
    lines: Vec<&'a str>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn ignoring_newlines(&self) -> bool {
        *self.nl_stack.last().unwrap_or(&false)
    }

    fn peek(&mut self) -> &Tok {
        if self.ignoring_newlines() {
            while self.tokens[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
        &self.tokens[self.pos].tok
    }

    fn line(&mut self) -> usize {
        self.peek();
        self.tokens[self.pos].line
    }

    fn at(&mut self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn bump(&mut self) -> Tok {
        self.peek();
        let t = self.tokens[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.tokens[self.pos].tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.tokens[self.pos].tok, Tok::Newline | Tok::Semi) {
            self.pos += 1;
        }
    }

    fn error_here(&mut self) -> ParseError {
        self.peek();
        let tok = &self.tokens[self.pos];
        let found = match &tok.tok {
            Tok::Ident(_) => "symbol".to_string(),
            Tok::Str(_) => "string constant".to_string(),
            Tok::Num(_) | Tok::Int(_) => "numeric constant".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => other.to_string(),
        };
        let context = self.lines.get(tok.line.saturating_sub(1)).unwrap_or(&"").trim().to_string();
        ParseError { found, context, line: tok.line }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here())
        }
    }

    fn statement_top(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        match self.tokens[self.pos].tok {
            Tok::Newline | Tok::Semi | Tok::Eof => Ok(e),
            _ => Err(self.error_here()),
        }
    }

    fn with_newlines<T>(&mut self, ignore: bool, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.nl_stack.push(ignore);
        let r = f(self);
        self.nl_stack.pop();
        r
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.assign_eq()
    }

    // `=` assignment (lowest, right assoc)
    fn assign_eq(&mut self) -> PResult<Expr> {
        let lhs = self.assign_arrow()?;
        if self.at(&Tok::Assign) {
            self.bump();
            self.skip_newlines();
            let rhs = self.assign_eq()?;
            return Ok(Expr::Assign { target: Box::new(lhs), value: Box::new(rhs), global: false });
        }
        Ok(lhs)
    }

    fn assign_arrow(&mut self) -> PResult<Expr> {
        let lhs = self.tilde()?;
        match self.peek() {
            Tok::LArrow | Tok::SuperArrow => {
                let global = self.bump() == Tok::SuperArrow;
                self.skip_newlines();
                let rhs = self.assign_arrow()?;
                Ok(Expr::Assign { target: Box::new(lhs), value: Box::new(rhs), global })
            }
            Tok::RArrow => {
                self.bump();
                self.skip_newlines();
                let target = self.tilde()?;
                Ok(Expr::Assign { target: Box::new(target), value: Box::new(lhs), global: false })
            }
            _ => Ok(lhs),
        }
    }

    fn tilde(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Tilde) {
            self.bump();
            let rhs = self.or()?;
            return Ok(Expr::Formula(None, Box::new(rhs)));
        }
        let lhs = self.or()?;
        if self.at(&Tok::Tilde) {
            self.bump();
            self.skip_newlines();
            let rhs = self.or()?;
            return Ok(Expr::Formula(Some(Box::new(lhs)), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        loop {
            let op = match self.peek() {
                Tok::Or => BinOp::Or,
                Tok::OrOr => BinOp::OrOr,
                _ => return Ok(lhs),
            };
            self.bump();
            self.skip_newlines();
            let rhs = self.and()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        loop {
            let op = match self.peek() {
                Tok::And => BinOp::And,
                Tok::AndAnd => BinOp::AndAnd,
                _ => return Ok(lhs),
            };
            self.bump();
            self.skip_newlines();
            let rhs = self.not()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Bang) {
            self.bump();
            let e = self.not()?;
            return Ok(Expr::Unary { op: UnOp::Not, expr: Box::new(e) });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            Tok::Le => BinOp::Le,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        self.skip_newlines();
        let rhs = self.additive()?;
        if matches!(self.peek(), Tok::Eq | Tok::Ne | Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge) {
            return Err(self.error_here());
        }
        Ok(Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            self.skip_newlines();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.special()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            self.skip_newlines();
            let rhs = self.special()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn special(&mut self) -> PResult<Expr> {
        let mut lhs = self.range()?;
        loop {
            let op = match self.peek() {
                Tok::Special(s) => BinOp::Special(s.clone()),
                _ => return Ok(lhs),
            };
            self.bump();
            self.skip_newlines();
            let rhs = self.range()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn range(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.at(&Tok::Colon) {
            self.bump();
            self.skip_newlines();
            let rhs = self.unary()?;
            lhs = Expr::Binary { op: BinOp::Range, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let e = self.unary()?;
                Ok(Expr::Unary { op: UnOp::Neg, expr: Box::new(e) })
            }
            Tok::Plus => {
                self.bump();
                let e = self.unary()?;
                Ok(Expr::Unary { op: UnOp::Plus, expr: Box::new(e) })
            }
            Tok::Bang => {
                self.bump();
                let e = self.unary()?;
                Ok(Expr::Unary { op: UnOp::Not, expr: Box::new(e) })
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.postfix()?;
        if self.at(&Tok::Caret) {
            self.bump();
            self.skip_newlines();
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Expr::Binary { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp) });
        }
        Ok(base)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            // postfix operators must start on the same line
            let t = &self.tokens[self.pos].tok;
            let t = if self.ignoring_newlines() { self.peek().clone() } else { t.clone() };
            match t {
                Tok::LParen => {
                    self.bump();
                    let args = self.with_newlines(true, |p| p.args(Tok::RParen))?;
                    self.expect(Tok::RParen)?;
                    e = Expr::Call { func: Box::new(e), args };
                }
                Tok::LBracket => {
                    self.bump();
                    let args = self.with_newlines(true, |p| p.args(Tok::RBracket))?;
                    self.expect(Tok::RBracket)?;
                    e = Expr::Index { obj: Box::new(e), args, double: false };
                }
                Tok::DLBracket => {
                    self.bump();
                    let args = self.with_newlines(true, |p| p.args(Tok::RBracket))?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::RBracket)?;
                    e = Expr::Index { obj: Box::new(e), args, double: true };
                }
                Tok::Dollar => {
                    self.bump();
                    let name = match self.bump() {
                        Tok::Ident(n) | Tok::Str(n) => n,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error_here());
                        }
                    };
                    e = Expr::Dollar { obj: Box::new(e), name };
                }
                _ => return Ok(e),
            }
        }
    }

    fn args(&mut self, close: Tok) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        if self.at(&close) {
            return Ok(args);
        }
        loop {
            if self.at(&Tok::Comma) {
                args.push(Arg { name: None, value: None });
                self.bump();
                if self.at(&close) {
                    args.push(Arg { name: None, value: None });
                    return Ok(args);
                }
                continue;
            }
            if self.at(&close) {
                return Ok(args);
            }
            // named argument?
            let save = self.pos;
            let mut named = None;
            match self.bump() {
                Tok::Ident(n) | Tok::Str(n) => {
                    if self.at(&Tok::Assign) {
                        self.bump();
                        named = Some(n);
                    } else {
                        self.pos = save;
                    }
                }
                Tok::Null if self.at(&Tok::Assign) => {
                    self.bump();
                    named = Some("NULL".into());
                }
                _ => self.pos = save,
            }
            let value =
                if named.is_some() && (self.at(&Tok::Comma) || self.at(&close)) { None } else { Some(self.expr()?) };
            args.push(Arg { name: named, value });
            if self.at(&Tok::Comma) {
                self.bump();
                if self.at(&close) {
                    args.push(Arg { name: None, value: None });
                    return Ok(args);
                }
                continue;
            }
            if self.at(&close) {
                return Ok(args);
            }
            return Err(self.error_here());
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match tok {
            Tok::Num(v) | Tok::Int(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Null => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Na => {
                self.bump();
                Ok(Expr::Na)
            }
            Tok::Inf => {
                self.bump();
                Ok(Expr::Num(f64::INFINITY))
            }
            Tok::NaN => {
                self.bump();
                Ok(Expr::Num(f64::NAN))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::ColonColon) {
                    self.bump();
                    match self.peek().clone() {
                        Tok::Ident(member) | Tok::Str(member) => {
                            self.bump();
                            return Ok(Expr::Ident(format!("{name}::{member}")));
                        }
                        _ => return Err(self.error_here()),
                    }
                }
                Ok(Expr::Ident(name))
            }
            Tok::Break => {
                self.bump();
                Ok(Expr::Break)
            }
            Tok::Next => {
                self.bump();
                Ok(Expr::Next)
            }
            Tok::LParen => {
                self.bump();
                let e = self.with_newlines(true, |p| p.expr())?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Paren(Box::new(e)))
            }
            Tok::LBrace => {
                self.bump();
                let body = self.with_newlines(false, |p| {
                    let mut body = Vec::new();
                    loop {
                        p.skip_separators();
                        if p.at(&Tok::RBrace) {
                            break;
                        }
                        if p.at(&Tok::Eof) {
                            return Err(p.error_here());
                        }
                        body.push(p.expr()?);
                        match p.tokens[p.pos].tok {
                            Tok::Newline | Tok::Semi | Tok::RBrace => {}
                            _ => return Err(p.error_here()),
                        }
                    }
                    Ok(body)
                })?;
                self.expect(Tok::RBrace)?;
                Ok(Expr::Block(body))
            }
            Tok::Function => {
                self.bump();
                self.expect(Tok::LParen)?;
                let params = self.with_newlines(true, |p| {
                    let mut params = Vec::new();
                    while !p.at(&Tok::RParen) {
                        let name = match p.bump() {
                            Tok::Ident(n) => n,
                            _ => {
                                p.pos -= 1;
                                return Err(p.error_here());
                            }
                        };
                        let default = if p.at(&Tok::Assign) {
                            p.bump();
                            Some(p.expr()?)
                        } else {
                            None
                        };
                        params.push(Param { name, default });
                        if p.at(&Tok::Comma) {
                            p.bump();
                        } else if !p.at(&Tok::RParen) {
                            return Err(p.error_here());
                        }
                    }
                    Ok(params)
                })?;
                self.expect(Tok::RParen)?;
                self.skip_newlines();
                let body = self.expr()?;
                Ok(Expr::Function { params: Rc::new(params), body: Rc::new(body) })
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.with_newlines(true, |p| p.expr())?;
                self.expect(Tok::RParen)?;
                self.skip_newlines();
                let then = self.expr()?;
                let otherwise = if self.else_follows() {
                    self.bump();
                    self.skip_newlines();
                    Some(Box::new(self.expr()?))
                } else {
                    None
                };
                Ok(Expr::If { cond: Box::new(cond), then: Box::new(then), otherwise })
            }
            Tok::For => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (var, seq) = self.with_newlines(true, |p| {
                    let var = match p.bump() {
                        Tok::Ident(n) => n,
                        _ => {
                            p.pos -= 1;
                            return Err(p.error_here());
                        }
                    };
                    p.expect(Tok::In)?;
                    let seq = p.expr()?;
                    Ok((var, seq))
                })?;
                self.expect(Tok::RParen)?;
                self.skip_newlines();
                let body = self.expr()?;
                Ok(Expr::For { var, seq: Box::new(seq), body: Box::new(body) })
            }
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.with_newlines(true, |p| p.expr())?;
                self.expect(Tok::RParen)?;
                self.skip_newlines();
                let body = self.expr()?;
                Ok(Expr::While { cond: Box::new(cond), body: Box::new(body) })
            }
            Tok::Repeat => {
                self.bump();
                self.skip_newlines();
                let body = self.expr()?;
                Ok(Expr::Repeat(Box::new(body)))
            }
            _ => Err(self.error_here()),
        }
    }

    /// `else` may follow on a later line only inside braces or parentheses.
    fn else_follows(&mut self) -> bool {
        if self.tokens[self.pos].tok == Tok::Else {
            return true;
        }
        let nested = self.nl_stack.len() > 1;
        if !nested {
            return false;
        }
        let mut j = self.pos;
        while self.tokens[j].tok == Tok::Newline {
            j += 1;
        }
        if self.tokens[j].tok == Tok::Else {
            self.pos = j;
            true
        } else {
            false
        }
    }
}

/// Renders an expression back to R source, used for `Error in <call>` messages.
pub fn deparse(e: &Expr) -> String {
    match e {
        Expr::Num(v) => crate::format::num_to_string(*v, 15),
        Expr::Str(s) => format!("{s:?}"),
        Expr::Bool(b) => if *b { "TRUE" } else { "FALSE" }.into(),
        Expr::Null => "NULL".into(),
        Expr::Na => "NA".into(),
        Expr::Ident(n) => n.clone(),
        Expr::Call { func, args } => format!("{}({})", deparse(func), deparse_args(args)),
        Expr::Index { obj, args, double } => {
            if *double {
                format!("{}[[{}]]", deparse(obj), deparse_args(args))
            } else {
                format!("{}[{}]", deparse(obj), deparse_args(args))
            }
        }
        Expr::Dollar { obj, name } => format!("{}${}", deparse(obj), name),
        Expr::Unary { op, expr } => {
            let o = match op {
                UnOp::Neg => "-",
                UnOp::Plus => "+",
                UnOp::Not => "!",
            };
            format!("{o}{}", deparse(expr))
        }
        Expr::Binary { op, lhs, rhs } => {
            let o = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => "/",
                BinOp::Pow => "^",
                BinOp::Range => ":",
                BinOp::Eq => " == ",
                BinOp::Ne => " != ",
                BinOp::Lt => " < ",
                BinOp::Gt => " > ",
                BinOp::Le => " <= ",
                BinOp::Ge => " >= ",
                BinOp::And => " & ",
                BinOp::AndAnd => " && ",
                BinOp::Or => " | ",
                BinOp::OrOr => " || ",
                BinOp::Special(s) => return format!("{} {} {}", deparse(lhs), s, deparse(rhs)),
            };
            format!("{}{}{}", deparse(lhs), o, deparse(rhs))
        }
        Expr::Assign { target, value, global } => {
            format!("{} {} {}", deparse(target), if *global { "<<-" } else { "<-" }, deparse(value))
        }
        Expr::Function { params, .. } => {
            let ps: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
            format!("function({})", ps.join(", "))
        }
        Expr::Block(_) => "{...}".into(),
        Expr::Paren(e) => format!("({})", deparse(e)),
        Expr::If { cond, .. } => format!("if ({}) ...", deparse(cond)),
        Expr::For { var, seq, .. } => format!("for ({var} in {}) ...", deparse(seq)),
        Expr::While { cond, .. } => format!("while ({}) ...", deparse(cond)),
        Expr::Repeat(_) => "repeat ...".into(),
        Expr::Formula(l, r) => match l {
            Some(l) => format!("{} ~ {}", deparse(l), deparse(r)),
            None => format!("~{}", deparse(r)),
        },
        Expr::Break => "break".into(),
        Expr::Next => "next".into(),
    }
}

fn deparse_args(args: &[Arg]) -> String {
    args.iter()
        .map(|a| match (&a.name, &a.value) {
            (Some(n), Some(v)) => format!("{n} = {}", deparse(v)),
            (Some(n), None) => format!("{n} = "),
            (None, Some(v)) => deparse(v),
            (None, None) => String::new(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_of_unary_minus_and_power() {
        let s = parse("-2^2").unwrap();
        assert!(matches!(&s[0].expr, Expr::Unary { op: UnOp::Neg, .. }));
        let s = parse("-1:3").unwrap();
        assert!(matches!(&s[0].expr, Expr::Binary { op: BinOp::Range, .. }));
    }

    #[test]
    fn multi_line_call_and_function() {
        let src = "f <- function(x, y = 2) {\n  z <- x +\n    y\n  z\n}\nf(1,\n  2)\n";
        let s = parse(src).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].line, 6);
    }

    #[test]
    fn else_on_new_line_inside_braces_only() {
        assert!(parse("{\n if (TRUE) 1\n else 2\n}").is_ok());
        assert!(parse("if (TRUE) 1\nelse 2").is_err());
    }

    #[test]
    fn stray_paren_is_reported_with_context() {
        let prog = parse_program("x <- 1\ny <- f(x))\nz <- 3\n");
        assert_eq!(prog.statements.len(), 1);
        let err = prog.error.unwrap();
        assert_eq!(err.to_string(), "unexpected ')' in \"y <- f(x))\"");
        assert_eq!(err.line, 2);
    }

    #[test]
    fn empty_index_arguments() {
        let s = parse("df[df$a > 1, ]").unwrap();
        match &s[0].expr {
            Expr::Index { args, .. } => {
                assert_eq!(args.len(), 2);
                assert!(args[1].value.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unclosed_call_is_an_error() {
        assert!(parse("x <- sum(1, 2\ny <- 3\n").is_err());
    }
}
