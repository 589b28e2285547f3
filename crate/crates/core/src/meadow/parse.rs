//! Term grammar:
//!
//! ```text
//! expr    := 'sum' IDENT (',' IDENT)* 'of' expr | sum
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | postfix
//! postfix := atom ('^' '-1' | '^' INT)*
//! atom    := INT | IDENT | IDENT '(' args ')' | '(' expr ')' | '0'atom | '1'atom
//! ```
//!
//! Functions: `s`, `abs`, `one`, `zero`, `cond(x, y, z)`. The glued forms
//! `0x` and `0(…)` abbreviate `zero(…)`; `1x` and `1(…)` abbreviate `one(…)`.

use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};

use super::{Rational, Term};

pub fn parse_term(input: &str) -> Result<Term, SyntaxError> {
    let toks = tokenize(input)?;
    let mut cur = Cursor::new(&toks, input.chars().count() + 1);
    let t = expr(&mut cur)?;
    cur.expect_end()?;
    Ok(t)
}

pub fn expr(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    if cur.eat_keyword("sum") {
        let mut vars = vec![cur.ident()?];
        while cur.eat(&Tok::Comma) {
            vars.push(cur.ident()?);
        }
        cur.expect_keyword("of")?;
        let body = expr(cur)?;
        return Ok(Term::sum(vars, body));
    }
    sum(cur)
}

fn sum(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    let mut acc = product(cur)?;
    loop {
        if cur.eat(&Tok::Plus) {
            acc = Term::add(acc, product(cur)?);
        } else if cur.eat(&Tok::Minus) {
            acc = Term::sub(acc, product(cur)?);
        } else {
            return Ok(acc);
        }
    }
}

fn product(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    let mut acc = unary(cur)?;
    loop {
        if cur.eat(&Tok::Star) {
            acc = Term::mul(acc, unary(cur)?);
        } else if cur.eat(&Tok::Slash) {
            acc = Term::div(acc, unary(cur)?);
        } else {
            return Ok(acc);
        }
    }
}

fn unary(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    if cur.eat(&Tok::Minus) {
        let inner = unary(cur)?;
        return Ok(match inner {
            Term::Const(c) => Term::Const(-c),
            other => Term::neg(other),
        });
    }
    postfix(cur)
}

fn postfix(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    let mut t = atom(cur)?;
    while cur.peek() == Some(&Tok::Caret) {
        cur.bump();
        t = exponent(cur, t)?;
    }
    Ok(t)
}

/// Applies `^-1` or `^n` (n ≥ 1) to `base`; the caret is already consumed.
pub fn exponent(cur: &mut Cursor<'_>, base: Term) -> Result<Term, SyntaxError> {
    let col = cur.col();
    if cur.eat(&Tok::Minus) {
        match cur.bump() {
            Some(Tok::Int(s)) if s == "1" => return Ok(Term::inv(base)),
            _ => return Err(SyntaxError::new(col, "only '^-1' is allowed as a negative power")),
        }
    }
    match cur.bump() {
        Some(Tok::Int(s)) => {
            let n: u32 = s
                .parse()
                .ok()
                .filter(|n| *n >= 1 && *n <= 64)
                .ok_or_else(|| SyntaxError::new(col, "power must be between 1 and 64"))?;
            let mut acc = base.clone();
            for _ in 1..n {
                acc = Term::mul(acc, base.clone());
            }
            Ok(acc)
        }
        _ => Err(SyntaxError::new(col, "expected '-1' or a positive power after '^'")),
    }
}

fn args(cur: &mut Cursor<'_>) -> Result<Vec<Term>, SyntaxError> {
    cur.expect(&Tok::LParen)?;
    let mut out = vec![expr(cur)?];
    while cur.eat(&Tok::Comma) {
        out.push(expr(cur)?);
    }
    cur.expect(&Tok::RParen)?;
    Ok(out)
}

fn atom(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    let col = cur.col();
    match cur.peek() {
        Some(Tok::Int(s)) => {
            let c: Rational = s
                .parse()
                .map_err(|_| SyntaxError::new(col, "bad integer literal"))?;
            cur.bump();
            Ok(Term::Const(c))
        }
        Some(Tok::Zero) | Some(Tok::One) => {
            let zero = cur.peek() == Some(&Tok::Zero);
            cur.bump();
            let arg = if cur.peek() == Some(&Tok::LParen) {
                cur.bump();
                let e = expr(cur)?;
                cur.expect(&Tok::RParen)?;
                e
            } else {
                Term::Var(cur.ident()?)
            };
            Ok(if zero { Term::zero_of(arg) } else { Term::one_of(arg) })
        }
        Some(Tok::LParen) => {
            cur.bump();
            let e = expr(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            let name = name.clone();
            if cur.peek_at(1) != Some(&Tok::LParen) {
                cur.bump();
                return Ok(Term::Var(name));
            }
            cur.bump();
            let a = args(cur)?;
            let arity = |n: usize| {
                if a.len() == n {
                    Ok(())
                } else {
                    Err(SyntaxError::new(col, format!("'{name}' takes {n} argument(s)")))
                }
            };
            match name.as_str() {
                "s" | "sign" => {
                    arity(1)?;
                    Ok(Term::sign(a[0].clone()))
                }
                "abs" => {
                    arity(1)?;
                    Ok(Term::abs(a[0].clone()))
                }
                "one" => {
                    arity(1)?;
                    Ok(Term::one_of(a[0].clone()))
                }
                "zero" => {
                    arity(1)?;
                    Ok(Term::zero_of(a[0].clone()))
                }
                "cond" => {
                    arity(3)?;
                    Ok(Term::cond3(a[0].clone(), a[1].clone(), a[2].clone()))
                }
                "lt" => {
                    arity(2)?;
                    Ok(Term::lt_val(a[0].clone(), a[1].clone()))
                }
                "leq" => {
                    arity(2)?;
                    Ok(Term::leq_val(a[0].clone(), a[1].clone()))
                }
                _ => Err(SyntaxError::new(col, format!("unknown function '{name}'"))),
            }
        }
        _ => Err(cur.error("expected a term")),
    }
}
