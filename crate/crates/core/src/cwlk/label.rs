//! Injective text encoding of contextual neighborhood labels.
//!
//! A contextual label renders as `context ⊕ λ`, where
//!
//! ```text
//! λ0      = l1,l2,...            (node labels, escaped, sorted)
//! λi      = λ(i-1) ⊕ e1,e2,...   (sorted successor elements)
//! element = λ                    when λ is a single bare label
//!         | (λ)                  otherwise
//! ```
//!
//! Raw labels and contexts escape `\ ⊕ , ( )` with a backslash, so every
//! rendered string parses back to exactly one structure.

use crate::error::{Error, Result};

pub const SEP: char = '⊕';
pub const MULTISET_SEP: char = ',';
const OPEN: char = '(';
const CLOSE: char = ')';
const ESCAPE: char = '\\';

fn is_special(c: char) -> bool {
    matches!(c, ESCAPE | SEP | MULTISET_SEP | OPEN | CLOSE)
}

pub fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if is_special(c) {
            out.push(ESCAPE);
        }
        out.push(c);
    }
    out
}

/// Height-0 neighborhood label: escaped node labels joined by `,`.
pub fn base_label<S: AsRef<str>>(labels: &[S]) -> String {
    let mut out = String::new();
    for (i, l) in labels.iter().enumerate() {
        if i > 0 {
            out.push(MULTISET_SEP);
        }
        out.push_str(&escape(l.as_ref()));
    }
    out
}

/// Renders a successor label as a multiset element.
pub fn element(rendered: &str, compound: bool) -> String {
    if compound {
        let mut out = String::with_capacity(rendered.len() + 2);
        out.push(OPEN);
        out.push_str(rendered);
        out.push(CLOSE);
        out
    } else {
        rendered.to_string()
    }
}

/// `prev ⊕ sorted(elements)`; `elements` is sorted in place.
pub fn extend(prev: &str, elements: &mut [String]) -> String {
    elements.sort_unstable();
    let len = prev.len() + 3 + elements.iter().map(|e| e.len() + 1).sum::<usize>();
    let mut out = String::with_capacity(len);
    out.push_str(prev);
    out.push(SEP);
    for (i, e) in elements.iter().enumerate() {
        if i > 0 {
            out.push(MULTISET_SEP);
        }
        out.push_str(e);
    }
    out
}

pub fn contextual(context: &str, lambda: &str) -> String {
    let escaped = escape(context);
    let mut out = String::with_capacity(escaped.len() + 3 + lambda.len());
    out.push_str(&escaped);
    out.push(SEP);
    out.push_str(lambda);
    out
}

/// Parsed form of a neighborhood label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lambda {
    /// Raw (unescaped) node labels.
    Base(Vec<String>),
    /// A previous label extended by one multiset of successor labels.
    Extend(Box<Lambda>, Vec<Lambda>),
}

impl Lambda {
    pub fn is_compound(&self) -> bool {
        match self {
            Lambda::Base(labels) => labels.len() > 1,
            Lambda::Extend(..) => true,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Lambda::Base(labels) => base_label(labels),
            Lambda::Extend(prev, children) => {
                let mut elems: Vec<String> = children
                    .iter()
                    .map(|c| element(&c.render(), c.is_compound()))
                    .collect();
                extend(&prev.render(), &mut elems)
            }
        }
    }
}

/// Parses `context ⊕ λ` back into its parts. Rejects non-canonical input.
pub fn parse_contextual(text: &str) -> Result<(String, Lambda)> {
    let fail = |message: &str| Error::Label {
        label: text.to_string(),
        message: message.to_string(),
    };
    let chars: Vec<char> = text.chars().collect();
    let mut p = Parser { chars: &chars, pos: 0 };
    let context = p.atom().ok_or_else(|| fail("missing context"))?;
    if !p.eat(SEP) {
        return Err(fail("expected separator after context"));
    }
    let lambda = p.lambda().map_err(|m| fail(&m))?;
    if p.pos != chars.len() {
        return Err(fail("trailing characters"));
    }
    if contextual(&context, &lambda.render()) != text {
        return Err(fail("non-canonical encoding"));
    }
    Ok((context, lambda))
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn atom(&mut self) -> Option<String> {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c == ESCAPE {
                let next = *self.chars.get(self.pos + 1)?;
                out.push(next);
                self.pos += 2;
            } else if is_special(c) {
                break;
            } else {
                out.push(c);
                self.pos += 1;
            }
        }
        (!out.is_empty()).then_some(out)
    }

    fn lambda(&mut self) -> std::result::Result<Lambda, String> {
        let mut labels = vec![self.atom().ok_or("empty node label")?];
        while self.eat(MULTISET_SEP) {
            labels.push(self.atom().ok_or("empty node label")?);
        }
        let mut lambda = Lambda::Base(labels);
        while self.eat(SEP) {
            let mut children = Vec::new();
            if !matches!(self.peek(), None | Some(SEP) | Some(CLOSE)) {
                children.push(self.element()?);
                while self.eat(MULTISET_SEP) {
                    children.push(self.element()?);
                }
            }
            lambda = Lambda::Extend(Box::new(lambda), children);
        }
        Ok(lambda)
    }

    fn element(&mut self) -> std::result::Result<Lambda, String> {
        if self.eat(OPEN) {
            let inner = self.lambda()?;
            if !self.eat(CLOSE) {
                return Err("unbalanced parenthesis".into());
            }
            Ok(inner)
        } else {
            Ok(Lambda::Base(vec![self.atom().ok_or("empty element")?]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_labels_render_without_brackets() {
        let l = Lambda::Extend(
            Box::new(Lambda::Base(vec!["A".into()])),
            vec![Lambda::Base(vec!["C".into()]), Lambda::Base(vec!["B".into()])],
        );
        assert_eq!(contextual("u", &l.render()), "u⊕A⊕B,C");
    }

    #[test]
    fn special_characters_are_escaped() {
        assert_eq!(escape("a,b⊕(c)\\"), "a\\,b\\⊕\\(c\\)\\\\");
        let (ctx, l) = parse_contextual("c\\⊕x⊕a\\,b").unwrap();
        assert_eq!(ctx, "c⊕x");
        assert_eq!(l, Lambda::Base(vec!["a,b".into()]));
    }

    #[test]
    fn empty_multiset_parses() {
        let (_, l) = parse_contextual("c⊕L⊕⊕").unwrap();
        let inner = Lambda::Extend(Box::new(Lambda::Base(vec!["L".into()])), vec![]);
        assert_eq!(l, Lambda::Extend(Box::new(inner), vec![]));
    }

    #[test]
    fn non_canonical_input_is_rejected() {
        // unsorted multiset
        assert!(parse_contextual("c⊕A⊕C,B").is_err());
        // bracketed bare label
        assert!(parse_contextual("c⊕A⊕(B)").is_err());
        assert!(parse_contextual("c⊕A⊕(B").is_err());
        assert!(parse_contextual("⊕A").is_err());
    }

    fn arb_raw() -> impl Strategy<Value = String> {
        "[a-c,⊕()\\\\é]{1,3}"
    }

    fn arb_lambda() -> impl Strategy<Value = Lambda> {
        let leaf = prop::collection::btree_set(arb_raw(), 1..3)
            .prop_map(|s| Lambda::Base(s.into_iter().collect()));
        leaf.prop_recursive(3, 24, 4, |inner| {
            (inner.clone(), prop::collection::vec(inner, 0..4))
                .prop_map(|(p, c)| Lambda::Extend(Box::new(p), c))
        })
    }

    /// Multiset children are order-free; compare with children sorted by rendering.
    fn canonical(l: &Lambda) -> Lambda {
        match l {
            Lambda::Base(v) => Lambda::Base(v.clone()),
            Lambda::Extend(p, c) => {
                let mut c: Vec<Lambda> = c.iter().map(canonical).collect();
                c.sort_by_key(|x| element(&x.render(), x.is_compound()));
                Lambda::Extend(Box::new(canonical(p)), c)
            }
        }
    }

    proptest! {
        #[test]
        fn parse_inverts_render(ctx in arb_raw(), l in arb_lambda()) {
            let text = contextual(&ctx, &l.render());
            let (c2, l2) = parse_contextual(&text).unwrap();
            prop_assert_eq!(c2, ctx);
            prop_assert_eq!(canonical(&l2), canonical(&l));
        }

        #[test]
        fn rendering_is_injective(a in arb_lambda(), b in arb_lambda()) {
            if canonical(&a) != canonical(&b) {
                prop_assert_ne!(a.render(), b.render());
            }
        }
    }
}
