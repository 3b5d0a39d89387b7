use std::fmt::Write;

use super::{AtomKind, AtomSet, Expr};
use crate::error::{Error, Result};

/// Label-based S-expression, e.g. `(and (or (ev box2) (not (ev box1))) (ev box3))`.
/// Constants print as `(and)` and `(or)`.
pub fn to_sexpr(expr: &Expr, atoms: &AtomSet) -> Result<String> {
    let mut out = String::new();
    write_sexpr(expr, atoms, &mut out)?;
    Ok(out)
}

fn write_sexpr(expr: &Expr, atoms: &AtomSet, out: &mut String) -> Result<()> {
    match expr {
        Expr::Atom(i) => {
            let atom = atoms
                .get(*i)
                .ok_or_else(|| Error::invalid(format!("atom index {i} out of range")))?;
            let _ = write!(out, "({} {})", atom.kind.tag(), atom.label);
        }
        Expr::Not(c) => {
            out.push_str("(not ");
            write_sexpr(c, atoms, out)?;
            out.push(')');
        }
        Expr::And(cs) | Expr::Or(cs) => {
            out.push_str(if matches!(expr, Expr::And(_)) { "(and" } else { "(or" });
            for c in cs {
                out.push(' ');
                write_sexpr(c, atoms, out)?;
            }
            out.push(')');
        }
    }
    Ok(())
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn line(&self) -> usize {
        1 + self.src[..self.pos].matches('\n').count()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let rest = &self.src[self.pos..];
        let skip = rest.len() - rest.trim_start().len();
        self.pos += skip;
        let rest = &self.src[self.pos..];
        let c = rest.chars().next()?;
        match c {
            '(' => {
                self.pos += 1;
                Some(Token::Open)
            }
            ')' => {
                self.pos += 1;
                Some(Token::Close)
            }
            _ => {
                let end = rest
                    .find(|ch: char| ch.is_whitespace() || ch == '(' || ch == ')')
                    .unwrap_or(rest.len());
                self.pos += end;
                Some(Token::Word(&rest[..end]))
            }
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.next() {
            Some(Token::Close) => Ok(()),
            other => Err(self.err(format!("expected ')', found {other:?}"))),
        }
    }
}

/// Parses the S-expression form against `atoms`. Nesting is kept as written.
pub fn parse_sexpr(src: &str, atoms: &AtomSet) -> Result<Expr> {
    let mut lex = Lexer { src, pos: 0 };
    let first = lex.next();
    let e = parse_node(first, &mut lex, atoms)?;
    if let Some(t) = lex.next() {
        return Err(lex.err(format!("trailing input {t:?}")));
    }
    Ok(e)
}

fn parse_node<'a>(tok: Option<Token<'a>>, lex: &mut Lexer<'a>, atoms: &AtomSet) -> Result<Expr> {
    match tok {
        Some(Token::Open) => {}
        other => return Err(lex.err(format!("expected '(', found {other:?}"))),
    }
    let head = match lex.next() {
        Some(Token::Word(w)) => w,
        other => return Err(lex.err(format!("expected operator, found {other:?}"))),
    };
    match head {
        "not" => {
            let t = lex.next();
            let child = parse_node(t, lex, atoms)?;
            lex.expect_close()?;
            Ok(Expr::not(child))
        }
        "and" | "or" => {
            let mut children = Vec::new();
            loop {
                match lex.next() {
                    Some(Token::Close) => break,
                    None => return Err(lex.err("unterminated list")),
                    t => children.push(parse_node(t, lex, atoms)?),
                }
            }
            if children.len() == 1 {
                return Err(lex.err(format!("({head} ...) needs zero or at least two children")));
            }
            Ok(if head == "and" {
                Expr::And(children)
            } else {
                Expr::Or(children)
            })
        }
        tag => {
            let kind = AtomKind::from_tag(tag)
                .ok_or_else(|| lex.err(format!("unknown operator {tag:?}")))?;
            let label = match lex.next() {
                Some(Token::Word(w)) => w,
                other => return Err(lex.err(format!("expected atom label, found {other:?}"))),
            };
            let index = atoms
                .find(kind, label)
                .ok_or_else(|| lex.err(format!("unknown atom ({tag} {label})")))?;
            lex.expect_close()?;
            Ok(Expr::atom(index))
        }
    }
}

/// Indented tree listing, one node per line, children prefixed with `| `.
pub fn pretty_tree(expr: &Expr, atoms: &AtomSet) -> String {
    let mut lines = Vec::new();
    pretty_into(expr, atoms, 0, &mut lines);
    lines.join("\n")
}

fn pretty_into(expr: &Expr, atoms: &AtomSet, depth: usize, lines: &mut Vec<String>) {
    let indent = "| ".repeat(depth);
    let text = match expr {
        Expr::Atom(i) => match atoms.get(*i) {
            Some(a) => match a.kind {
                AtomKind::EventuallyInBox => format!("Eventually(inside_box({}))", i + 1),
                AtomKind::AlwaysInBox => format!("Always(inside_box({}))", i + 1),
                AtomKind::AlwaysFlag => format!("Always({})", a.label),
            },
            None => format!("phi{}", i + 1),
        },
        _ if expr.is_top() => "true".to_owned(),
        _ if expr.is_bottom() => "false".to_owned(),
        Expr::Not(_) => "not".to_owned(),
        Expr::And(_) => "and".to_owned(),
        Expr::Or(_) => "or".to_owned(),
    };
    lines.push(format!("{indent}{text}"));
    for c in expr.children() {
        pretty_into(c, atoms, depth + 1, lines);
    }
}
