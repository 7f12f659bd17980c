//! A small real-valued expression language used to write metric entries in
//! spec files.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 == -(x^2)`) and is
//! right-associative. Functions: `exp log sqrt sin cos sinh cosh abs`.

mod parser;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(EvalError::Domain {
                    func: self.name().to_string(),
                    arg: x,
                })
            }
        };
        Ok(match self {
            Func::Exp => x.exp(),
            Func::Log => {
                domain(x > 0.0)?;
                x.ln()
            }
            Func::Sqrt => {
                domain(x >= 0.0)?;
                x.sqrt()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Abs => x.abs(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Abstract syntax tree. Variables carry their index into the declared list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { func: Func, arg: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{func} is undefined at {arg}")]
    Domain { func: String, arg: f64 },
    #[error("non-finite intermediate result")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    WrongArity { func: String, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(msg) => format!("syntax error: {msg}"),
        ParseErrorKind::UnknownIdentifier(name) => format!("unknown identifier `{name}`"),
        ParseErrorKind::WrongArity { func, got } => {
            format!("function `{func}` takes 1 argument, got {got}")
        }
    }
}

const MAX_REPEATED_MUL: f64 = 64.0;

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= MAX_REPEATED_MUL {
        let mut acc = 1.0;
        for _ in 0..(exponent.abs() as u32) {
            acc *= base;
        }
        return Ok(if exponent < 0.0 { 1.0 / acc } else { acc });
    }
    if base > 0.0 {
        Ok(base.powf(exponent))
    } else if base == 0.0 && exponent > 0.0 {
        Ok(0.0)
    } else {
        Err(EvalError::Domain {
            func: "^".into(),
            arg: base,
        })
    }
}

fn finite(x: f64) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// Evaluates with variable `i` bound to `values[i]`.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(&|index, name| values.get(index).copied().ok_or_else(|| EvalError::UnboundVariable(name.into())))
    }

    /// Evaluates with variables looked up by name.
    pub fn eval_bindings(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|_, name| bindings.get(name).copied().ok_or_else(|| EvalError::UnboundVariable(name.into())))
    }

    fn eval_with(&self, lookup: &dyn Fn(usize, &str) -> Result<f64, EvalError>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Var { index, name } => lookup(*index, name)?,
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Call { func, arg } => func.apply(arg.eval_with(lookup)?)?,
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval_with(lookup)?;
                let b = rhs.eval_with(lookup)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => power(a, b)?,
                }
            }
        };
        finite(v)
    }

    /// Highest variable index referenced plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var { index, .. } => index + 1,
            Expr::Neg(e) | Expr::Call { arg: e, .. } => e.arity(),
            Expr::Binary { lhs, rhs, .. } => lhs.arity().max(rhs.arity()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }
}

struct Child<'a>(&'a Expr, u8);

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(e) => write!(f, "-{}", Child(e, 3)),
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (lp, rp) = if *op == BinOp::Pow { (5, 3) } else { (p, p + 1) };
                write!(f, "{}{}{}", Child(lhs, lp), op.symbol(), Child(rhs, rp))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn gaussian_at_origin() {
        let e = parse("exp(-(y1^2 + t1^2))", &vars(&["y1", "t1"])).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn arithmetic() {
        let e = parse("1 + x2^2/2", &vars(&["x1", "x2"])).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0]).unwrap(), 3.0);
        let e = parse("x1*x2", &vars(&["x1", "x2"])).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 12.0);
        let e = parse("cosh(y1)", &vars(&["y1"])).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn kernel_constant() {
        let e = parse("exp(2*xi*y)", &vars(&["xi", "y"])).unwrap();
        let v = e.eval(&[1.0, 0.5]).unwrap();
        assert!((v - std::f64::consts::E).abs() <= 1e-15 * std::f64::consts::E);
    }

    #[test]
    fn log_domain() {
        let e = parse("log(x1)", &vars(&["x1"])).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { .. })));
        let e = parse("sqrt(x1)", &vars(&["x1"])).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn fractional_power_needs_positive_base() {
        let e = parse("x1^0.5", &vars(&["x1"])).unwrap();
        assert_eq!(e.eval(&[4.0]).unwrap(), 2.0);
        assert!(matches!(e.eval(&[-4.0]), Err(EvalError::Domain { .. })));
        let e = parse("x1^3", &vars(&["x1"])).unwrap();
        assert_eq!(e.eval(&[-2.0]).unwrap(), -8.0);
        let e = parse("x1^-2", &vars(&["x1"])).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.25);
    }

    #[test]
    fn non_finite_is_an_error() {
        let e = parse("1/x1", &vars(&["x1"])).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(EvalError::NonFinite));
        let e = parse("exp(x1)", &vars(&["x1"])).unwrap();
        assert_eq!(e.eval(&[1000.0]), Err(EvalError::NonFinite));
    }

    #[test]
    fn bindings_by_name() {
        let e = parse("x1 - x2", &vars(&["x1", "x2"])).unwrap();
        let mut b = HashMap::new();
        b.insert("x1".to_string(), 5.0);
        assert_eq!(e.eval_bindings(&b), Err(EvalError::UnboundVariable("x2".into())));
        b.insert("x2".to_string(), 1.5);
        assert_eq!(e.eval_bindings(&b).unwrap(), 3.5);
    }

    #[test]
    fn precedence_and_associativity() {
        let v = vars(&["x"]);
        assert_eq!(parse("2^3^2", &v).unwrap().eval(&[]).unwrap(), 512.0);
        assert_eq!(parse("-2^2", &v).unwrap().eval(&[]).unwrap(), -4.0);
        assert_eq!(parse("(-2)^2", &v).unwrap().eval(&[]).unwrap(), 4.0);
        assert_eq!(parse("8/4/2", &v).unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(parse("1-2-3", &v).unwrap().eval(&[]).unwrap(), -4.0);
        assert_eq!(parse("2*3+4*5", &v).unwrap().eval(&[]).unwrap(), 26.0);
    }

    #[test]
    fn printing_is_minimal_and_reparses() {
        let v = vars(&["x", "y"]);
        for (src, printed) in [
            ("-x^2", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("x^(y^2)", "x^y^2"),
            ("(x^y)^2", "(x^y)^2"),
            ("x - (y - 1)", "x - (y - 1)"),
            ("(x - y) - 1", "x - y - 1"),
            ("x/(y*2)", "x/(y*2)"),
            ("exp(-(x^2 + y^2))", "exp(-(x^2 + y^2))"),
        ] {
            let e = parse(src, &v).unwrap();
            assert_eq!(e.to_string(), printed);
            assert_eq!(parse(&e.to_string(), &v).unwrap(), e);
        }
    }
}
