//! Recursive-descent parser for the field grammar.
//!
//! ```text
//! expr   := term { ("+"|"-") term }
//! term   := factor { ("*"|"/") factor }
//! factor := number | var | "(" expr ")" | "-" factor | call
//! call   := ident "(" expr { "," expr } ")"
//! var    := "u" digit+
//! ```
//!
//! Components are separated by `;` or by newlines outside parentheses.

use super::{BinOp, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Sep,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0i64;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, column: tc });
        match c {
            '\n' => {
                if depth == 0 {
                    push(&mut out, Tok::Sep);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => push(&mut out, Tok::Sep),
            '(' => {
                depth += 1;
                push(&mut out, Tok::LParen)
            }
            ')' => {
                depth -= 1;
                push(&mut out, Tok::RParen)
            }
            ',' => push(&mut out, Tok::Comma),
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            '*' => push(&mut out, Tok::Star),
            '/' => push(&mut out, Tok::Slash),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("malformed number `{s}`"),
                })?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Num(v),
                    line: tl,
                    column: tc,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(s),
                    line: tl,
                    column: tc,
                });
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    arity: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let t = self.bump();
        if t.tok == tok {
            Ok(())
        } else {
            self.err(&t, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                if let Some(j) = self.variable(name, &t)? {
                    return Ok(Expr::Var(j));
                }
                if self.peek().tok != Tok::LParen {
                    return Err(Error::UnknownIdentifier {
                        name: name.clone(),
                        line: t.line,
                        column: t.column,
                    });
                }
                self.call(name, &t)
            }
            _ => self.err(&t, format!("unexpected {}", describe(&t.tok))),
        }
    }

    /// Recognizes `u<digits>`; returns the 0-based index.
    fn variable(&self, name: &str, t: &Token) -> Result<Option<usize>> {
        let Some(digits) = name.strip_prefix('u') else {
            return Ok(None);
        };
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Ok(None);
        }
        let k: usize = digits.parse().map_err(|_| Error::Arity(format!("variable `{name}` out of range")))?;
        if k == 0 || k > self.arity {
            return Err(Error::Arity(format!(
                "variable `{name}` at line {}, column {} is outside u1..u{}",
                t.line, t.column, self.arity
            )));
        }
        Ok(Some(k - 1))
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn call(&mut self, name: &str, t: &Token) -> Result<Expr> {
        let func = match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "piecewise" => return self.piecewise(t),
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    line: t.line,
                    column: t.column,
                })
            }
        };
        let args = self.args()?;
        let ok = match func {
            Func::Min | Func::Max => !args.is_empty(),
            Func::Abs | Func::Exp | Func::Sqrt => args.len() == 1,
            Func::Pow => args.len() == 2,
        };
        if !ok {
            return Err(Error::Arity(format!(
                "`{name}` at line {}, column {} called with {} argument(s)",
                t.line,
                t.column,
                args.len()
            )));
        }
        Ok(Expr::Call(func, args))
    }

    fn piecewise(&mut self, t: &Token) -> Result<Expr> {
        let args = self.args()?;
        if args.len() != 4 && args.len() != 5 {
            return Err(Error::Arity(format!(
                "`piecewise` at line {}, column {} takes 4 or 5 arguments, got {}",
                t.line,
                t.column,
                args.len()
            )));
        }
        let mut it = args.into_iter();
        let var = match it.next().unwrap() {
            Expr::Var(j) => j,
            _ => return self.err(t, "piecewise switch must be a single variable"),
        };
        let threshold = match it.next().unwrap() {
            Expr::Num(x) => x,
            Expr::Neg(inner) => match *inner {
                Expr::Num(x) => -x,
                _ => return self.err(t, "piecewise threshold must be a number"),
            },
            _ => return self.err(t, "piecewise threshold must be a number"),
        };
        let left = Box::new(it.next().unwrap());
        let right = Box::new(it.next().unwrap());
        let at = it.next().map(Box::new);
        Ok(Expr::Piecewise {
            id: 0,
            var,
            threshold,
            left,
            right,
            at,
        })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Sep => "end of component".into(),
        Tok::End => "end of input".into(),
    }
}

pub(super) fn parse_components(text: &str, arity: usize) -> Result<Vec<Expr>> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, arity };
    let mut out = Vec::new();
    loop {
        while p.peek().tok == Tok::Sep {
            p.bump();
        }
        if p.peek().tok == Tok::End {
            break;
        }
        out.push(p.expr()?);
        let t = p.peek().clone();
        match t.tok {
            Tok::Sep | Tok::End => {}
            _ => return p.err(&t, format!("unexpected {}", describe(&t.tok))),
        }
    }
    if out.is_empty() {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "empty expression".into(),
        });
    }
    Ok(out)
}
