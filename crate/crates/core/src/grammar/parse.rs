//! Concrete syntax for production rules.
//!
//! ```text
//! pattern := alt
//! alt     := concat ("|" concat)*
//! concat  := repeat+
//! repeat  := atom ("*" | "+" | "?" | "{m}" | "{m,n}")?
//! atom    := symbol | "(" alt ")"
//! symbol  := identifier (":" qualifier)?
//! ```
//!
//! Whitespace and commas separate concatenated atoms, so both
//! `overview zoom` and `(filter, retrieve-value)` parse.

use super::ast::Pattern;
use super::symbol::Terminal;
use super::GrammarError;

/// Upper bound on `{m,n}` so that automata stay small.
pub const MAX_REPEAT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(Terminal),
    LParen,
    RParen,
    Bar,
    Star,
    Plus,
    Question,
    Range(u32, u32),
}

fn syntax(position: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, GrammarError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' | b',' => i += 1,
            b'(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            b'|' => {
                toks.push((i, Tok::Bar));
                i += 1;
            }
            b'*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            b'+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            b'?' => {
                toks.push((i, Tok::Question));
                i += 1;
            }
            b'{' => {
                let close = text[i..]
                    .find('}')
                    .map(|off| i + off)
                    .ok_or_else(|| syntax(i, "unterminated `{`"))?;
                let body = &text[i + 1..close];
                let parse_bound = |s: &str| -> Result<u32, GrammarError> {
                    let s = s.trim();
                    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(syntax(i, format!("invalid repetition bound `{s}`")));
                    }
                    s.parse::<u32>()
                        .map_err(|_| syntax(i, format!("repetition bound `{s}` is too large")))
                };
                let (min, max) = match body.split_once(',') {
                    Some((lo, hi)) => (parse_bound(lo)?, parse_bound(hi)?),
                    None => {
                        let n = parse_bound(body)?;
                        (n, n)
                    }
                };
                if min > max {
                    return Err(syntax(i, format!("repetition {{{min},{max}}} has min > max")));
                }
                if max > MAX_REPEAT {
                    return Err(syntax(
                        i,
                        format!("repetition bound {max} exceeds {MAX_REPEAT}"),
                    ));
                }
                toks.push((i, Tok::Range(min, max)));
                i = close + 1;
            }
            b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i], b'a'..=b'z' | b'0'..=b'9' | b'_' | b'-' | b':')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let term = word
                    .parse::<Terminal>()
                    .map_err(|_| syntax(start, format!("malformed symbol `{word}`")))?;
                toks.push((start, Tok::Ident(term)));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn alt(&mut self) -> Result<Pattern, GrammarError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Pattern::Alt(branches)
        })
    }

    fn concat(&mut self) -> Result<Pattern, GrammarError> {
        let mut items = Vec::new();
        while matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::LParen)) {
            items.push(self.repeat()?);
        }
        match items.len() {
            0 => Err(match self.peek() {
                None => syntax(self.offset(), "expected a symbol or `(`, found end of pattern"),
                Some(t) => syntax(self.offset(), format!("expected a symbol or `(`, found {}", describe(t))),
            }),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Pattern::Concat(items)),
        }
    }

    fn repeat(&mut self) -> Result<Pattern, GrammarError> {
        let atom = self.atom()?;
        let quantified = match self.peek() {
            Some(Tok::Star) => Pattern::star(atom),
            Some(Tok::Plus) => Pattern::plus(atom),
            Some(Tok::Question) => Pattern::optional(atom),
            Some(Tok::Range(min, max)) => Pattern::repeat(atom, *min, *max),
            _ => return Ok(atom),
        };
        self.pos += 1;
        if matches!(
            self.peek(),
            Some(Tok::Star | Tok::Plus | Tok::Question | Tok::Range(..))
        ) {
            return Err(syntax(
                self.offset(),
                "stacked quantifiers; wrap the operand in parentheses",
            ));
        }
        Ok(quantified)
    }

    fn atom(&mut self) -> Result<Pattern, GrammarError> {
        let offset = self.offset();
        match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Tok::Ident(t)) => {
                self.pos += 1;
                Ok(Pattern::Symbol(t))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.alt()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(syntax(self.offset(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(syntax(offset, "expected a symbol or `(`")),
        }
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Ident(_) => "a symbol",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
        Tok::Bar => "`|`",
        Tok::Star => "`*`",
        Tok::Plus => "`+`",
        Tok::Question => "`?`",
        Tok::Range(..) => "a repetition",
    }
}

/// Parses pattern syntax without checking symbols against an alphabet.
pub fn parse_syntax(text: &str) -> Result<Pattern, GrammarError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty pattern"));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let pattern = parser.alt()?;
    if parser.pos != parser.toks.len() {
        let t = describe(&parser.toks[parser.pos].1);
        return Err(syntax(parser.offset(), format!("unexpected {t}")));
    }
    Ok(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Pattern {
        Pattern::symbol(s)
    }

    #[test]
    fn precedence_and_grouping() {
        let p = parse_syntax("a b | c").unwrap();
        assert_eq!(
            p,
            Pattern::Alt(vec![Pattern::Concat(vec![sym("a"), sym("b")]), sym("c")])
        );
        let p = parse_syntax("a (b | c)+").unwrap();
        assert_eq!(
            p,
            Pattern::Concat(vec![
                sym("a"),
                Pattern::plus(Pattern::Alt(vec![sym("b"), sym("c")]))
            ])
        );
    }

    #[test]
    fn commas_and_repetition() {
        assert_eq!(
            parse_syntax("(filter, retrieve-value)").unwrap(),
            Pattern::Concat(vec![sym("filter"), sym("retrieve-value")])
        );
        assert_eq!(
            parse_syntax("filter{2,3}").unwrap(),
            Pattern::repeat(sym("filter"), 2, 3)
        );
        assert_eq!(
            parse_syntax("filter{2}").unwrap(),
            Pattern::repeat(sym("filter"), 2, 2)
        );
        assert_eq!(
            parse_syntax("inspect:same+").unwrap(),
            Pattern::plus(Pattern::symbol("inspect:same"))
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases = [
            ("", 0),
            ("(a | b", 6),
            ("a | ", 4),
            ("a )", 2),
            ("a{3,1}", 1),
            ("a++", 2),
            ("A", 0),
            ("a{x}", 1),
            ("()", 1),
        ];
        for (text, pos) in cases {
            match parse_syntax(text) {
                Err(GrammarError::Syntax { position, .. }) => {
                    assert_eq!(position, pos, "position for {text:?}")
                }
                other => panic!("{text:?}: expected syntax error, got {other:?}"),
            }
        }
    }
}
