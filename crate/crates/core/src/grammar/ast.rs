use std::fmt;

use super::symbol::Terminal;

/// Regular expression over a terminal alphabet.
///
/// `Concat` and `Alt` always hold at least two children when produced by the
/// parser; the printer emits a form that parses back to the same tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Symbol(Terminal),
    Concat(Vec<Pattern>),
    Alt(Vec<Pattern>),
    Star(Box<Pattern>),
    Plus(Box<Pattern>),
    Optional(Box<Pattern>),
    Repeat {
        inner: Box<Pattern>,
        min: u32,
        max: u32,
    },
}

impl Pattern {
    pub fn symbol(t: impl Into<Terminal>) -> Self {
        Pattern::Symbol(t.into())
    }

    pub fn star(p: Pattern) -> Self {
        Pattern::Star(Box::new(p))
    }

    pub fn plus(p: Pattern) -> Self {
        Pattern::Plus(Box::new(p))
    }

    pub fn optional(p: Pattern) -> Self {
        Pattern::Optional(Box::new(p))
    }

    pub fn repeat(p: Pattern, min: u32, max: u32) -> Self {
        Pattern::Repeat {
            inner: Box::new(p),
            min,
            max,
        }
    }

    /// True when the pattern matches the empty sequence.
    pub fn is_nullable(&self) -> bool {
        match self {
            Pattern::Symbol(_) => false,
            Pattern::Concat(cs) => cs.iter().all(Pattern::is_nullable),
            Pattern::Alt(cs) => cs.iter().any(Pattern::is_nullable),
            Pattern::Star(_) | Pattern::Optional(_) => true,
            Pattern::Plus(p) => p.is_nullable(),
            Pattern::Repeat { inner, min, .. } => *min == 0 || inner.is_nullable(),
        }
    }

    /// True when the language contains at least one non-empty sequence.
    pub fn matches_nonempty(&self) -> bool {
        match self {
            Pattern::Symbol(_) => true,
            Pattern::Concat(cs) | Pattern::Alt(cs) => cs.iter().any(Pattern::matches_nonempty),
            Pattern::Star(p) | Pattern::Plus(p) | Pattern::Optional(p) => p.matches_nonempty(),
            Pattern::Repeat { inner, max, .. } => *max > 0 && inner.matches_nonempty(),
        }
    }

    /// All symbol leaves, left to right.
    pub fn symbols(&self) -> Vec<&Terminal> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols<'a>(&'a self, out: &mut Vec<&'a Terminal>) {
        match self {
            Pattern::Symbol(t) => out.push(t),
            Pattern::Concat(cs) | Pattern::Alt(cs) => {
                cs.iter().for_each(|c| c.collect_symbols(out))
            }
            Pattern::Star(p) | Pattern::Plus(p) | Pattern::Optional(p) => p.collect_symbols(out),
            Pattern::Repeat { inner, .. } => inner.collect_symbols(out),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Symbol(t) => write!(f, "{t}"),
            Pattern::Concat(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    match c {
                        Pattern::Concat(_) | Pattern::Alt(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            Pattern::Alt(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match c {
                        Pattern::Alt(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            // Quantified operands are always parenthesized: `(navigate)+`.
            Pattern::Star(p) => write!(f, "({p})*"),
            Pattern::Plus(p) => write!(f, "({p})+"),
            Pattern::Optional(p) => write!(f, "({p})?"),
            Pattern::Repeat { inner, min, max } if min == max => write!(f, "({inner}){{{min}}}"),
            Pattern::Repeat { inner, min, max } => write!(f, "({inner}){{{min},{max}}}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alt(names: &[&str]) -> Pattern {
        Pattern::Alt(names.iter().map(|n| Pattern::symbol(*n)).collect())
    }

    #[test]
    fn prints_rules_in_displayed_form() {
        let overview = Pattern::star(alt(&["aggregate", "arrange", "encode"]));
        assert_eq!(overview.to_string(), "(aggregate | arrange | encode)*");
        assert_eq!(
            Pattern::plus(Pattern::symbol("navigate")).to_string(),
            "(navigate)+"
        );
        let nested = Pattern::Concat(vec![
            Pattern::Concat(vec![Pattern::symbol("a"), Pattern::symbol("b")]),
            alt(&["c", "d"]),
        ]);
        assert_eq!(nested.to_string(), "(a b) (c | d)");
        assert_eq!(
            Pattern::repeat(Pattern::symbol("filter"), 2, 2).to_string(),
            "(filter){2}"
        );
    }

    #[test]
    fn nullability() {
        assert!(Pattern::star(Pattern::symbol("a")).is_nullable());
        assert!(!Pattern::plus(Pattern::symbol("a")).is_nullable());
        assert!(Pattern::repeat(Pattern::symbol("a"), 0, 2).is_nullable());
        assert!(!Pattern::repeat(Pattern::symbol("a"), 0, 0).matches_nonempty());
        assert!(Pattern::Concat(vec![
            Pattern::optional(Pattern::symbol("a")),
            Pattern::star(Pattern::symbol("b"))
        ])
        .is_nullable());
    }
}
