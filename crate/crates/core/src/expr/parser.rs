use super::{BinOp, Expr, Func, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(kind: ParseErrorKind, line: usize, column: usize) -> ParseError {
    ParseError { kind, line, column }
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
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
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
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
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| err(ParseErrorKind::Syntax(format!("malformed number `{text}`")), tl, tc))?;
            Tok::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(err(ParseErrorKind::Syntax(format!("unexpected character `{c}`")), tl, tc)),
            }
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(err(ParseErrorKind::Syntax(msg.into()), t.line, t.column))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().tok {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().tok {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(x) => Ok(Expr::Num(*x)),
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return self.syntax(&close, "expected `)`");
                }
                Ok(e)
            }
            Tok::Ident(name) if self.peek().tok == Tok::LParen => {
                let func = Func::from_name(name)
                    .ok_or_else(|| err(ParseErrorKind::UnknownIdentifier(name.clone()), t.line, t.column))?;
                self.bump();
                if self.peek().tok == Tok::RParen {
                    return Err(err(
                        ParseErrorKind::WrongArity {
                            func: name.clone(),
                            got: 0,
                        },
                        t.line,
                        t.column,
                    ));
                }
                let arg = self.expr()?;
                let mut extra = 0;
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    self.expr()?;
                    extra += 1;
                }
                if extra > 0 {
                    return Err(err(
                        ParseErrorKind::WrongArity {
                            func: name.clone(),
                            got: 1 + extra,
                        },
                        t.line,
                        t.column,
                    ));
                }
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return self.syntax(&close, "expected `)`");
                }
                Ok(Expr::Call {
                    func,
                    arg: Box::new(arg),
                })
            }
            Tok::Ident(name) => match self.vars.iter().position(|v| v == name) {
                Some(index) => Ok(Expr::Var {
                    index,
                    name: name.clone(),
                }),
                None => Err(err(ParseErrorKind::UnknownIdentifier(name.clone()), t.line, t.column)),
            },
            Tok::End => self.syntax(&t, "unexpected end of input"),
            other => self.syntax(&t, format!("unexpected token {}", describe(other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("`{x}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `source` against the declared variable names. Lines and columns in
/// errors are 1-based.
pub fn parse(source: &str, vars: &[String]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        tokens: lex(source)?,
        pos: 0,
        vars,
    };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return p.syntax(&t, format!("unexpected token {}", describe(&t.tok)));
    }
    Ok(e)
}
