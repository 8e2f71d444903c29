//! Prefix S-expression text form.
//!
//! ```text
//! expr := NUMBER | rK | (r2sum)
//!       | (add expr expr+) | (mul expr expr+)
//!       | (sub expr expr) | (div expr expr)
//!       | (neg expr) | (log expr) | (exp expr) | (pow expr INTEGER)
//! ```
//!
//! Variables are one-based in text (`r1` is the first radial variable).

use std::fmt;
use std::str::FromStr;

use super::{Expr, ExprError, Node};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(j) => write!(f, "r{}", j + 1),
            Node::R2Sum => write!(f, "(r2sum)"),
            Node::Add(a, b) => write!(f, "(add {a} {b})"),
            Node::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Node::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Node::Div(a, b) => write!(f, "(div {a} {b})"),
            Node::Neg(a) => write!(f, "(neg {a})"),
            Node::Log(a) => write!(f, "(log {a})"),
            Node::Exp(a) => write!(f, "(exp {a})"),
            Node::Powi(a, k) => write!(f, "(pow {a} {k})"),
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { src: s, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn atom(&mut self) -> &'a str {
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(')') => Err(self.error("unexpected `)`")),
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let start = self.pos;
                let head = self.atom();
                let mut args = Vec::new();
                let mut int_arg = None;
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.error("missing `)`")),
                        _ if head == "pow" && args.len() == 1 => {
                            let at = self.pos;
                            let tok = self.atom();
                            let k: i32 = tok.parse().map_err(|_| ExprError::Parse {
                                pos: at,
                                msg: format!("pow exponent must be an integer, got `{tok}`"),
                            })?;
                            int_arg = Some(k);
                        }
                        _ => args.push(self.expr()?),
                    }
                }
                let arity = |n: usize| -> Result<(), ExprError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(ExprError::Parse {
                            pos: start,
                            msg: format!("`{head}` takes {n} argument(s), got {}", args.len()),
                        })
                    }
                };
                match head {
                    "r2sum" => {
                        arity(0)?;
                        Ok(Expr::r2sum())
                    }
                    "add" | "mul" => {
                        if args.len() < 2 {
                            return Err(ExprError::Parse {
                                pos: start,
                                msg: format!("`{head}` needs at least 2 arguments"),
                            });
                        }
                        let mut it = args.into_iter();
                        let first = it.next().unwrap();
                        Ok(it.fold(first, |acc, x| {
                            if head == "add" {
                                Expr::add(&acc, &x)
                            } else {
                                Expr::mul(&acc, &x)
                            }
                        }))
                    }
                    "sub" => {
                        arity(2)?;
                        Ok(Expr::sub(&args[0], &args[1]))
                    }
                    "div" => {
                        arity(2)?;
                        Ok(Expr::div(&args[0], &args[1]))
                    }
                    "neg" => {
                        arity(1)?;
                        Ok(Expr::neg(&args[0]))
                    }
                    "log" => {
                        arity(1)?;
                        Ok(Expr::log(&args[0]))
                    }
                    "exp" => {
                        arity(1)?;
                        Ok(Expr::exp(&args[0]))
                    }
                    "pow" => {
                        arity(1)?;
                        let k = int_arg.ok_or(ExprError::Parse {
                            pos: start,
                            msg: "`pow` needs an integer exponent".into(),
                        })?;
                        Ok(Expr::powi(&args[0], k))
                    }
                    other => Err(ExprError::Parse {
                        pos: start,
                        msg: format!("unknown operator `{other}`"),
                    }),
                }
            }
            Some(_) => {
                let at = self.pos;
                let tok = self.atom();
                if tok == "r2sum" {
                    return Ok(Expr::r2sum());
                }
                if let Some(idx) = tok.strip_prefix('r') {
                    let k: usize = idx.parse().map_err(|_| ExprError::Parse {
                        pos: at,
                        msg: format!("bad variable `{tok}`"),
                    })?;
                    if k == 0 {
                        return Err(ExprError::Parse {
                            pos: at,
                            msg: "variables are numbered from r1".into(),
                        });
                    }
                    return Ok(Expr::var(k - 1));
                }
                tok.parse::<f64>()
                    .map(Expr::constant)
                    .map_err(|_| ExprError::Parse {
                        pos: at,
                        msg: format!("bad token `{tok}`"),
                    })
            }
        }
    }
}
