//! Minimal mathematical expression language for metric entries.
//!
//! Grammar (precedence climbing, loosest to tightest):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := "-" factor | power
//! power   := atom ("^" factor)?          -- right-associative
//! atom    := number | "pi" | variable | function "(" expr ")" | "(" expr ")"
//! function := sin | cos | tan | sqrt | exp | log | abs
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` parses as `-(x^2)`. `log` is
//! the natural logarithm. Expressions are immutable after parsing and safe to
//! evaluate from any number of threads.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::real;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Log,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over a fixed list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    vars: Arc<Vec<String>>,
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::UnknownIdentifier { offset, .. } => Some(*offset),
            ParseError::Syntax { offset, .. } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("point supplies {got} values but the expression is over {need} variables")]
    Arity { got: usize, need: usize },
    #[error("domain error: {what} in `{subexpression}`")]
    Domain {
        what: &'static str,
        subexpression: String,
    },
}

impl Expression {
    /// Parses `source` over the given variable names.
    pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expression, ParseError> {
        let vars: Vec<String> = allowed_vars.iter().map(|s| s.to_string()).collect();
        let tokens = lex(source)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vars: &vars,
            end_offset: source.len(),
        };
        let root = parser.parse_expr(0, 0)?;
        if parser.pos < tokens.len() {
            let (_, off) = tokens[parser.pos];
            return Err(ParseError::Syntax {
                offset: off,
                message: "unexpected trailing input".to_string(),
            });
        }
        Ok(Expression {
            vars: Arc::new(vars),
            root,
        })
    }

    /// Builds an expression directly from a tree (used by tests and catalogs).
    pub fn from_parts(vars: Vec<String>, root: Node) -> Expression {
        Expression {
            vars: Arc::new(vars),
            root,
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// IEEE double-precision evaluation at `point` (one value per variable).
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.vars.len() {
            return Err(EvalError::Arity {
                got: point.len(),
                need: self.vars.len(),
            });
        }
        eval_node(&self.root, point, &self.vars)
    }
}

fn eval_node(node: &Node, point: &[f64], vars: &[String]) -> Result<f64, EvalError> {
    let v = match node {
        Node::Num(v) => *v,
        Node::Var(i) => point[*i],
        Node::Neg(inner) => -eval_node(inner, point, vars)?,
        Node::Bin(op, a, b) => {
            let x = eval_node(a, point, vars)?;
            let y = eval_node(b, point, vars)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain("division by zero", node, vars));
                    }
                    x / y
                }
                BinOp::Pow => real::powf(x, y),
            }
        }
        Node::Call(f, a) => {
            let x = eval_node(a, point, vars)?;
            match f {
                Func::Sin => real::sin(x),
                Func::Cos => real::cos(x),
                Func::Tan => real::tan(x),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain("square root of a negative number", node, vars));
                    }
                    real::sqrt(x)
                }
                Func::Exp => real::exp(x),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain("logarithm of a non-positive number", node, vars));
                    }
                    real::ln(x)
                }
                Func::Abs => real::abs(x),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain("non-finite result", node, vars))
    }
}

fn domain(what: &'static str, node: &Node, vars: &[String]) -> EvalError {
    EvalError::Domain {
        what,
        subexpression: format!("{}", DisplayNode { node, vars }),
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

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

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
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
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(source[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pratt parser
// ---------------------------------------------------------------------------
//
// Binding powers: +,- = (1,2); *,/ = (3,4); unary minus operand = 5;
// ^ = (7,6) so it is right-associative and binds tighter than unary minus.

const UNARY_MINUS_BP: u8 = 5;

struct Parser<'a> {
    tokens: &'a [(Tok, usize)],
    pos: usize,
    vars: &'a [String],
    end_offset: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, o)| *o).unwrap_or(self.end_offset)
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some((Tok::RParen, _)) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::Syntax {
                offset: self.here(),
                message: "expected `)`".to_string(),
            }),
        }
    }

    fn parse_expr(&mut self, min_bp: u8, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                offset: self.here(),
                message: "expression nested too deeply".to_string(),
            });
        }
        let mut lhs = self.parse_prefix(depth)?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some((Tok::Plus, _)) => (BinOp::Add, 1, 2),
                Some((Tok::Minus, _)) => (BinOp::Sub, 1, 2),
                Some((Tok::Star, _)) => (BinOp::Mul, 3, 4),
                Some((Tok::Slash, _)) => (BinOp::Div, 3, 4),
                Some((Tok::Caret, _)) => (BinOp::Pow, 7, 6),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.parse_expr(rbp, depth + 1)?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError::Syntax {
                offset: self.here(),
                message: "expression nested too deeply".to_string(),
            });
        }
        let offset = self.here();
        match self.peek() {
            None => Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".to_string(),
            }),
            Some((Tok::Minus, _)) => {
                self.pos += 1;
                let operand = self.parse_expr(UNARY_MINUS_BP, depth + 1)?;
                Ok(Node::Neg(Box::new(operand)))
            }
            Some((Tok::Num(_), _)) => {
                let (tok, _) = self.bump();
                match tok {
                    Tok::Num(v) => Ok(Node::Num(v)),
                    _ => unreachable!(),
                }
            }
            Some((Tok::LParen, _)) => {
                self.pos += 1;
                let inner = self.parse_expr(0, depth + 1)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((Tok::Ident(_), _)) => {
                let (tok, off) = self.bump();
                let name = match tok {
                    Tok::Ident(s) => s,
                    _ => unreachable!(),
                };
                if let Some(func) = Func::from_name(&name) {
                    match self.peek() {
                        Some((Tok::LParen, _)) => {
                            self.pos += 1;
                            let arg = self.parse_expr(0, depth + 1)?;
                            self.expect_rparen()?;
                            Ok(Node::Call(func, Box::new(arg)))
                        }
                        _ => Err(ParseError::Syntax {
                            offset: self.here(),
                            message: format!("expected `(` after function `{name}`"),
                        }),
                    }
                } else if name == "pi" {
                    Ok(Node::Num(core::f64::consts::PI))
                } else if let Some(idx) = self.vars.iter().position(|v| v == &name) {
                    Ok(Node::Var(idx))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset: off })
                }
            }
            Some((tok, off)) => Err(ParseError::Syntax {
                offset: *off,
                message: format!("unexpected token {tok:?}"),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn prec(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 3,
        Node::Neg(_) => UNARY_MINUS_BP,
        Node::Bin(BinOp::Pow, ..) => 7,
        Node::Num(_) | Node::Var(_) | Node::Call(..) => 9,
    }
}

struct DisplayNode<'a> {
    node: &'a Node,
    vars: &'a [String],
}

impl fmt::Display for DisplayNode<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(self.node, self.vars, f)
    }
}

fn fmt_child(
    child: &Node,
    vars: &[String],
    needs_parens: bool,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    if needs_parens {
        write!(f, "(")?;
        fmt_node(child, vars, f)?;
        write!(f, ")")
    } else {
        fmt_node(child, vars, f)
    }
}

fn fmt_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(inner) => {
            write!(f, "-")?;
            fmt_child(inner, vars, prec(inner) < UNARY_MINUS_BP, f)
        }
        Node::Bin(op, a, b) => {
            let (sym, lbp) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 3),
                BinOp::Div => ("/", 3),
                BinOp::Pow => ("^", 7),
            };
            if *op == BinOp::Pow {
                // Right-associative: parenthesize an equal-precedence left child.
                fmt_child(a, vars, prec(a) <= lbp, f)?;
                write!(f, "{sym}")?;
                fmt_child(b, vars, prec(b) < lbp, f)
            } else {
                fmt_child(a, vars, prec(a) < lbp, f)?;
                write!(f, "{sym}")?;
                fmt_child(b, vars, prec(b) <= lbp, f)
            }
        }
        Node::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            fmt_node(arg, vars, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, &self.vars, f)
    }
}
