//! A small arithmetic expression language for material and forcing profiles.
//!
//! Grammar: `+ - * / ^` with usual precedence (`^` binds tightest and is
//! right-associative), unary minus, parentheses, the variables `x` and `y`,
//! the constant `pi`, and the functions `sin cos exp sqrt tanh abs`. Numbers
//! accept scientific notation. Everything else is a parse error naming the
//! offending token, so a typo in a config file fails loudly at load time.

use crate::error::CoreError;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize), // 0 = x, 1 = y
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
    Abs,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, CoreError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(CoreError::Expr(format!(
                "unexpected trailing input at `{}`",
                p.describe_current()
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(0) => x,
            Expr::Var(_) => y,
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Tanh => v.tanh(),
                    Func::Abs => v.abs(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>, CoreError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| CoreError::Expr(format!("bad number literal `{text}`")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => {
                return Err(CoreError::Expr(format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn describe_current(&self) -> String {
        match self.peek() {
            Some(Tok::Num(v)) => format!("{v}"),
            Some(Tok::Ident(s)) => s.clone(),
            Some(t) => format!("{t:?}"),
            None => "end of input".to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, CoreError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, CoreError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, CoreError> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CoreError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            // right-associative: 2^3^2 = 2^(3^2)
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, CoreError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(CoreError::Expr("missing closing parenthesis".into())),
                }
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::Var(0)),
                    "y" => Ok(Expr::Var(1)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {
                        let f = match name.as_str() {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            "exp" => Func::Exp,
                            "sqrt" => Func::Sqrt,
                            "tanh" => Func::Tanh,
                            "abs" => Func::Abs,
                            _ => {
                                return Err(CoreError::Expr(format!(
                                    "unknown name `{name}`; expected x, y, pi or a function \
                                     (sin, cos, exp, sqrt, tanh, abs)"
                                )))
                            }
                        };
                        match self.peek() {
                            Some(Tok::LParen) => {
                                self.pos += 1;
                                let arg = self.expr()?;
                                match self.peek() {
                                    Some(Tok::RParen) => {
                                        self.pos += 1;
                                        Ok(Expr::Call(f, Box::new(arg)))
                                    }
                                    _ => Err(CoreError::Expr(format!(
                                        "missing closing parenthesis after {name}(...)"
                                    ))),
                                }
                            }
                            _ => Err(CoreError::Expr(format!(
                                "function `{name}` needs parentheses"
                            ))),
                        }
                    }
                }
            }
            _ => Err(CoreError::Expr(format!(
                "expected a value, found {}",
                self.describe_current()
            ))),
        }
    }
}
