//! Tokenizer and Pratt parser for the R-lookalike expression language.

use std::fmt;

use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Mod,
    IntDiv,
    In,
    Range,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Tilde,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Mod => "%%",
            BinaryOp::IntDiv => "%/%",
            BinaryOp::In => "%in%",
            BinaryOp::Range => ":",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Tilde => "~",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Expr,
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Ident(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    If { cond: Box<Expr>, then: Box<Expr>, otherwise: Option<Box<Expr>> },
    Call { func: String, args: Vec<Arg> },
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
}

/// Names that are never looked up in the environment.
pub const CONSTANTS: [&str; 5] = ["pi", "TRUE", "FALSE", "T", "F"];

impl Expr {
    /// Identifiers the expression reads from its environment, in first-use
    /// order. The integration variable of `integrate(...)` is bound locally.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_vars(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) => {}
            Expr::Ident(name) => {
                if !CONSTANTS.contains(&name.as_str())
                    && !bound.contains(name)
                    && !out.contains(name)
                {
                    out.push(name.clone());
                }
            }
            Expr::Unary(_, e) | Expr::Field(e, _) => e.collect_vars(bound, out),
            Expr::Binary(_, a, b) | Expr::Index(a, b) => {
                a.collect_vars(bound, out);
                b.collect_vars(bound, out);
            }
            Expr::If { cond, then, otherwise } => {
                cond.collect_vars(bound, out);
                then.collect_vars(bound, out);
                if let Some(o) = otherwise {
                    o.collect_vars(bound, out);
                }
            }
            Expr::Call { func, args } => {
                if func == "integrate" {
                    let var = integration_variable(args);
                    for (i, a) in args.iter().enumerate() {
                        if a.name.as_deref() == Some("var") {
                            continue;
                        }
                        let integrand = a.name.as_deref() == Some("f") || (a.name.is_none() && i == 0);
                        if integrand {
                            bound.push(var.clone());
                            a.value.collect_vars(bound, out);
                            bound.pop();
                        } else {
                            a.value.collect_vars(bound, out);
                        }
                    }
                } else {
                    for a in args {
                        a.value.collect_vars(bound, out);
                    }
                }
            }
        }
    }
}

/// `integrate(f, lower, upper, var = "x")`: the name bound inside `f`.
pub(crate) fn integration_variable(args: &[Arg]) -> String {
    args.iter()
        .find(|a| a.name.as_deref() == Some("var"))
        .and_then(|a| match &a.value {
            Expr::Text(t) => Some(t.clone()),
            Expr::Ident(t) => Some(t.clone()),
            _ => None,
        })
        .unwrap_or_else(|| "x".to_string())
}

/// S-expression rendering, handy for tests and diagnostics.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{}", crate::numfmt::format_number(*x)),
            Expr::Text(t) => write!(f, "{t:?}"),
            Expr::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Expr::Ident(n) => write!(f, "{n}"),
            Expr::Unary(op, e) => {
                let s = match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Plus => "+",
                    UnaryOp::Not => "!",
                };
                write!(f, "({s} {e})")
            }
            Expr::Binary(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Expr::If { cond, then, otherwise } => match otherwise {
                Some(o) => write!(f, "(if {cond} {then} {o})"),
                None => write!(f, "(if {cond} {then})"),
            },
            Expr::Call { func, args } => {
                write!(f, "({func}")?;
                for a in args {
                    match &a.name {
                        Some(n) => write!(f, " {n}={}", a.value)?,
                        None => write!(f, " {}", a.value)?,
                    }
                }
                write!(f, ")")
            }
            Expr::Index(a, i) => write!(f, "([ {a} {i})"),
            Expr::Field(a, n) => write!(f, "($ {a} {n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    If,
    Else,
    Op(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const OPERATORS: [&str; 27] = [
    "%/%", "%in%", "%%", "&&", "||", "==", "!=", "<=", ">=", "+", "-", "*", "/", "^", "(", ")",
    "[", "]", ",", ":", "<", ">", "!", "&", "|", "=", "$",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '.' || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '_'
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ExprError::Syntax { line, column, message };
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let starts_number =
            c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()));
        if starts_number {
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
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| err(tl, tc, format!("malformed number `{text}`")))?;
            if i < chars.len() && chars[i] == 'L' {
                i += 1;
            }
            col += i - start;
            toks.push(Token { tok: Tok::Num(value), line: tl, column: tc });
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "if" => Tok::If,
                "else" => Tok::Else,
                _ => Tok::Ident(word),
            };
            toks.push(Token { tok, line: tl, column: tc });
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(tl, tc, "unterminated string".into()));
                };
                i += 1;
                col += 1;
                if ch == quote {
                    break;
                }
                if ch == '\n' {
                    line += 1;
                    col = 1;
                }
                if ch == '\\' {
                    let Some(&esc) = chars.get(i) else {
                        return Err(err(tl, tc, "unterminated string".into()));
                    };
                    i += 1;
                    col += 1;
                    match esc {
                        'n' => s.push('\n'),
                        't' => s.push('\t'),
                        '\\' => s.push('\\'),
                        '"' => s.push('"'),
                        '\'' => s.push('\''),
                        other => {
                            s.push('\\');
                            s.push(other);
                        }
                    }
                } else {
                    s.push(ch);
                }
            }
            toks.push(Token { tok: Tok::Str(s), line: tl, column: tc });
            continue;
        }
        if c == '~' {
            i += 1;
            col += 1;
            toks.push(Token { tok: Tok::Op("~"), line: tl, column: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) => {
                i += op.len();
                col += op.len();
                toks.push(Token { tok: Tok::Op(op), line: tl, column: tc });
            }
            None => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        }
    }
    toks.push(Token { tok: Tok::Eof, line, column: col });
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

// Binding powers, loosest first.
const BP_TILDE: u8 = 2;
const BP_OR: u8 = 4;
const BP_AND: u8 = 6;
const BP_NOT: u8 = 7;
const BP_CMP: u8 = 8;
const BP_ADD: u8 = 10;
const BP_MUL: u8 = 12;
const BP_SPECIAL: u8 = 14;
const BP_RANGE: u8 = 16;
const BP_UNARY: u8 = 18;
const BP_POW: u8 = 20;

fn infix(op: &str) -> Option<(BinaryOp, u8, bool)> {
    // (operator, binding power, right-associative)
    Some(match op {
        "~" => (BinaryOp::Tilde, BP_TILDE, false),
        "|" | "||" => (BinaryOp::Or, BP_OR, false),
        "&" | "&&" => (BinaryOp::And, BP_AND, false),
        "==" => (BinaryOp::Eq, BP_CMP, false),
        "!=" => (BinaryOp::Ne, BP_CMP, false),
        "<" => (BinaryOp::Lt, BP_CMP, false),
        "<=" => (BinaryOp::Le, BP_CMP, false),
        ">" => (BinaryOp::Gt, BP_CMP, false),
        ">=" => (BinaryOp::Ge, BP_CMP, false),
        "+" => (BinaryOp::Add, BP_ADD, false),
        "-" => (BinaryOp::Sub, BP_ADD, false),
        "*" => (BinaryOp::Mul, BP_MUL, false),
        "/" => (BinaryOp::Div, BP_MUL, false),
        "%%" => (BinaryOp::Mod, BP_SPECIAL, false),
        "%/%" => (BinaryOp::IntDiv, BP_SPECIAL, false),
        "%in%" => (BinaryOp::In, BP_SPECIAL, false),
        ":" => (BinaryOp::Range, BP_RANGE, false),
        "^" => (BinaryOp::Pow, BP_POW, true),
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { line: t.line, column: t.column, message: message.into() }
    }

    fn expect(&mut self, op: &str) -> Result<(), ExprError> {
        let t = self.next();
        if matches!(t.tok, Tok::Op(o) if o == op) {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected `{op}`, found {}", describe(&t.tok))))
        }
    }

    fn expression(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Op("(") => {
                    let Expr::Ident(func) = lhs else {
                        return Err(self.error_at(&t, "only named functions can be called"));
                    };
                    self.next();
                    let args = self.arguments()?;
                    lhs = Expr::Call { func, args };
                }
                Tok::Op("[") => {
                    self.next();
                    let index = self.expression(0)?;
                    self.expect("]")?;
                    lhs = Expr::Index(Box::new(lhs), Box::new(index));
                }
                Tok::Op("$") => {
                    self.next();
                    let n = self.next();
                    let name = match &n.tok {
                        Tok::Ident(name) | Tok::Str(name) => name.clone(),
                        other => {
                            return Err(self.error_at(
                                &n,
                                format!("expected a field name after `$`, found {}", describe(other)),
                            ))
                        }
                    };
                    lhs = Expr::Field(Box::new(lhs), name);
                }
                Tok::Op(op) => {
                    let Some((bin, bp, right)) = infix(op) else { break };
                    if bp < min_bp {
                        break;
                    }
                    self.next();
                    let rhs = self.expression(if right { bp } else { bp + 1 })?;
                    lhs = Expr::Binary(bin, Box::new(lhs), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let t = self.next();
        let (line, column) = (t.line, t.column);
        Ok(match t.tok {
            Tok::Num(x) => Expr::Number(x),
            Tok::Str(s) => Expr::Text(s),
            Tok::Ident(name) => match name.as_str() {
                "TRUE" | "T" => Expr::Bool(true),
                "FALSE" | "F" => Expr::Bool(false),
                _ => Expr::Ident(name),
            },
            Tok::Op("(") => {
                let e = self.expression(0)?;
                self.expect(")")?;
                e
            }
            Tok::Op("-") => Expr::Unary(UnaryOp::Neg, Box::new(self.expression(BP_UNARY)?)),
            Tok::Op("+") => Expr::Unary(UnaryOp::Plus, Box::new(self.expression(BP_UNARY)?)),
            Tok::Op("!") => Expr::Unary(UnaryOp::Not, Box::new(self.expression(BP_NOT)?)),
            Tok::If => {
                self.expect("(")?;
                let cond = self.expression(0)?;
                self.expect(")")?;
                let then = self.expression(0)?;
                let otherwise = if self.peek().tok == Tok::Else {
                    self.next();
                    Some(Box::new(self.expression(0)?))
                } else {
                    None
                };
                Expr::If { cond: Box::new(cond), then: Box::new(then), otherwise }
            }
            other => {
                return Err(ExprError::Syntax { line, column, message: format!("unexpected {}", describe(&other)) })
            }
        })
    }

    fn arguments(&mut self) -> Result<Vec<Arg>, ExprError> {
        let mut args = Vec::new();
        if self.peek().tok == Tok::Op(")") {
            self.next();
            return Ok(args);
        }
        loop {
            let is_named = matches!(self.peek().tok, Tok::Ident(_) | Tok::Str(_))
                && self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Op("="));
            let name = if is_named {
                match self.next().tok {
                    Tok::Ident(n) | Tok::Str(n) => {
                        self.next();
                        Some(n)
                    }
                    _ => unreachable!(),
                }
            } else {
                None
            };
            let value = self.expression(0)?;
            args.push(Arg { name, value });
            let t = self.next();
            match &t.tok {
                Tok::Op(",") => continue,
                Tok::Op(")") => break,
                other => {
                    return Err(self.error_at(&t, format!("expected `,` or `)`, found {}", describe(other))))
                }
            }
        }
        Ok(args)
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(x) => format!("number {x}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Ident(n) => format!("`{n}`"),
        Tok::If => "`if`".into(),
        Tok::Else => "`else`".into(),
        Tok::Op(o) => format!("`{o}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse one expression; trailing input is an error.
pub fn parse_expr(source: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0 };
    if p.peek().tok == Tok::Eof {
        let t = p.peek().clone();
        return Err(p.error_at(&t, "empty expression"));
    }
    let e = p.expression(0)?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return Err(p.error_at(&t, format!("unexpected {} after expression", describe(&t.tok))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sexpr(src: &str) -> String {
        parse_expr(src).unwrap().to_string()
    }

    #[test]
    fn parses_template_expressions() {
        assert_eq!(sexpr("50 + sample(0:50, 1)"), "(+ 50 (sample (: 0 50) 1))");
        assert_eq!(sexpr("1"), "1");
        assert_eq!(sexpr("round(runif(1, 90, 110), 1)"), "(round (runif 1 90 110) 1)");
        assert_eq!(
            sexpr("sample(c(\"Coca-Cola\", \"Pepsi\"), size=n, replace=TRUE, prob=c(p,1-p))"),
            "(sample (c \"Coca-Cola\" \"Pepsi\") size=n replace=TRUE prob=(c p (- 1 p)))"
        );
    }

    #[test]
    fn precedence_follows_r() {
        assert_eq!(sexpr("-2^2"), "(- (^ 2 2))");
        assert_eq!(sexpr("2^3^2"), "(^ 2 (^ 3 2))");
        assert_eq!(sexpr("-1:3"), "(: (- 1) 3)");
        assert_eq!(sexpr("1:n-1"), "(- (: 1 n) 1)");
        assert_eq!(sexpr("a + b * c"), "(+ a (* b c))");
        assert_eq!(sexpr("!a == b"), "(! (== a b))");
        assert_eq!(sexpr("a < 1 & b > 2 | c"), "(| (& (< a 1) (> b 2)) c)");
        assert_eq!(sexpr("x %% 2 * 3"), "(* (%% x 2) 3)");
        assert_eq!(sexpr("lm(y ~ x)$coef[2]"), "([ ($ (lm (~ y x)) coef) 2)");
        assert_eq!(sexpr("if (a > 1) 2 else 3 + 4"), "(if (> a 1) 2 (+ 3 4))");
        assert_eq!(sexpr("10^-(d+1)/2"), "(/ (^ 10 (- (+ d 1))) 2)");
    }

    #[test]
    fn literals() {
        assert_eq!(sexpr(".5e1"), "5");
        assert_eq!(parse_expr("'single'").unwrap(), Expr::Text("single".into()));
        assert_eq!(parse_expr("\"a\\\"b\"").unwrap(), Expr::Text("a\"b".into()));
        assert_eq!(parse_expr("\"\\\\(\\\\mu\\\\)\"").unwrap(), Expr::Text("\\(\\mu\\)".into()));
        assert_eq!(parse_expr("TRUE").unwrap(), Expr::Bool(true));
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_expr("1 +\n  * 2") {
            Err(ExprError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_expr("f(1, 2") {
            Err(ExprError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 7)),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("").is_err());
        assert!(parse_expr("1 2").is_err());
        assert!(parse_expr("\"open").is_err());
        assert!(parse_expr("a @ b").is_err());
        assert!(parse_expr("(1)(2)").is_err());
    }

    #[test]
    fn free_vars_skip_integration_variable() {
        let e = parse_expr("round(integrate(x*exp(x) + k, A, B), 2) + pi").unwrap();
        assert_eq!(e.free_vars(), ["k", "A", "B"]);
        let e = parse_expr("integrate(t^2, 0, x, var=\"t\")").unwrap();
        assert_eq!(e.free_vars(), ["x"]);
        let e = parse_expr("t.test(x, mu=m0)$p.value").unwrap();
        assert_eq!(e.free_vars(), ["x", "m0"]);
    }
}
