//! Newick reading and writing.
//!
//! Branch lengths are accepted and dropped. Numeric internal labels become
//! node annotations; other internal labels are ignored. Leaf labels may be
//! single-quoted, with `''` standing for a literal quote.

use super::{Clade, RootedTree};
use crate::error::{Error, Result};

const SPECIAL: &[u8] = b"()[]',:; \t\r\n";

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Newick {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => match self.src[self.pos..].iter().position(|&c| c == b']') {
                    Some(off) => self.pos += off + 1,
                    None => return self.err("unterminated comment"),
                },
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        self.skip_ws()?;
        Ok(self.src.get(self.pos).copied())
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_ws()?;
        if self.src.get(self.pos) == Some(&b'\'') {
            self.pos += 1;
            let mut out = Vec::new();
            loop {
                match self.src.get(self.pos) {
                    None => return self.err("unterminated quoted label"),
                    Some(b'\'') if self.src.get(self.pos + 1) == Some(&b'\'') => {
                        out.push(b'\'');
                        self.pos += 2;
                    }
                    Some(b'\'') => {
                        self.pos += 1;
                        break;
                    }
                    Some(&c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                }
            }
            return String::from_utf8(out)
                .map(Some)
                .or_else(|_| self.err("label is not valid UTF-8"));
        }
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| !SPECIAL.contains(c))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        Ok(Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()))
    }

    fn branch_length(&mut self) -> Result<()> {
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip_ws()?;
            let start = self.pos;
            while self
                .src
                .get(self.pos)
                .is_some_and(|c| !SPECIAL.contains(c))
            {
                self.pos += 1;
            }
            let text = String::from_utf8_lossy(&self.src[start..self.pos]);
            if text.parse::<f64>().is_err() {
                return self.err(format!("bad branch length `{text}`"));
            }
        }
        Ok(())
    }

    fn subtree(&mut self) -> Result<Clade> {
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            let mut children = vec![self.subtree()?];
            loop {
                match self.peek()? {
                    Some(b',') => {
                        self.pos += 1;
                        children.push(self.subtree()?);
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected `,` or `)`"),
                }
            }
            let annotation = self.label()?.and_then(|l| l.parse::<f64>().ok());
            self.branch_length()?;
            if children.len() < 2 {
                return self.err("internal node with fewer than two children");
            }
            Ok(Clade::Inner {
                children,
                annotation,
            })
        } else {
            let label = match self.label()? {
                Some(l) => l,
                None => return self.err("expected a leaf label"),
            };
            self.branch_length()?;
            Ok(Clade::Leaf(label))
        }
    }
}

pub fn parse_newick(text: &str) -> Result<RootedTree> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let clade = p.subtree()?;
    if p.peek()? != Some(b';') {
        return p.err("expected `;`");
    }
    p.pos += 1;
    if p.peek()?.is_some() {
        return p.err("trailing characters after `;`");
    }
    RootedTree::from_clade(&clade)
}

pub(crate) fn quote_label(label: &str) -> String {
    if label.bytes().any(|c| SPECIAL.contains(&c)) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Writes the tree in child order. Annotations are emitted as internal labels
/// when `with_annotations` is set.
pub fn write_newick(tree: &RootedTree, with_annotations: bool) -> String {
    fn rec(tree: &RootedTree, id: usize, ann: bool, out: &mut String) {
        if tree.is_leaf(id) {
            out.push_str(&quote_label(tree.label(id).unwrap_or("")));
            return;
        }
        out.push('(');
        for (i, &c) in tree.children(id).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            rec(tree, c, ann, out);
        }
        out.push(')');
        if ann {
            if let Some(a) = tree.annotation(id) {
                out.push_str(&format!("{a}"));
            }
        }
    }
    let mut out = String::new();
    rec(tree, tree.root(), with_annotations, &mut out);
    out.push(';');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_shapes() {
        let t = parse_newick("((U2,U3),U1);").unwrap();
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.internal_count(), 2);
        let fan = parse_newick("(U1,U2,U3);").unwrap();
        assert_eq!(fan.internal_count(), 1);
        assert_eq!(write_newick(&fan, false), "(U1,U2,U3);");
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_newick("(A);").is_err());
        assert!(parse_newick("((A,B),C)").is_err());
        assert!(parse_newick("((A,B),C;").is_err());
        assert!(parse_newick("((A,B),A);").is_err());
        assert!(parse_newick("(A,B):x;").is_err());
        assert!(parse_newick("(A,,B);").is_err());
        assert!(parse_newick("(A,B); C").is_err());
    }

    #[test]
    fn single_leaf() {
        let t = parse_newick("A;").unwrap();
        assert_eq!(write_newick(&t, false), "A;");
    }

    #[test]
    fn branch_lengths_and_annotations() {
        let t = parse_newick("((A:0.1,B:2e-3)0.81:1,C:0.5)0.33;").unwrap();
        assert_eq!(t.annotation(t.root()), Some(0.33));
        assert_eq!(write_newick(&t, true), "((A,B)0.81,C)0.33;");
        assert_eq!(write_newick(&t, false), "((A,B),C);");
        let named = parse_newick("((A,B)inner,C)root;").unwrap();
        assert_eq!(named.annotation(named.root()), None);
    }

    #[test]
    fn quoted_labels_round_trip() {
        let t = parse_newick("('Private Law',(Dutch,'it''s'));").unwrap();
        assert!(t.leaf("Private Law").is_ok());
        assert!(t.leaf("it's").is_ok());
        let back = parse_newick(&write_newick(&t, false)).unwrap();
        assert!(back.is_isomorphic(&t));
    }

    #[test]
    fn comments_and_whitespace() {
        let t = parse_newick(" ( A , [c] B ) ; \n").unwrap();
        assert_eq!(t.leaf_count(), 2);
    }
}
