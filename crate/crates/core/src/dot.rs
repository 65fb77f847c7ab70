//! DOT rendering of call trees.

use std::fmt::Write;

use crate::link::{CallTree, CallTreeNode};

/// Escapes text for use inside a double-quoted DOT string.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            _ => out.push(c),
        }
    }
    out
}

/// `name` or `name(a1, a2)`, unescaped.
pub fn node_label(node: &CallTreeNode) -> String {
    if node.args.is_empty() {
        node.qualified.display.clone()
    } else {
        format!("{}({})", node.qualified.display, node.args.join(", "))
    }
}

/// Renders `tree` as a digraph: nodes `n<id>` in preorder, then edges.
/// Recursive nodes are dotted; truncated nodes are octagons.
pub fn emit_dot(tree: &CallTree) -> String {
    let mut out = String::from("digraph {\n");
    for node in &tree.nodes {
        let mut label = node_label(node);
        if node.truncated {
            label.push('…');
        }
        let _ = write!(out, "  n{} [label=\"{}\"", node.id, escape(&label));
        if node.recursive {
            out.push_str(", style=dotted");
        }
        if node.truncated {
            out.push_str(", shape=octagon");
        }
        out.push_str("];\n");
    }
    for node in &tree.nodes {
        for child in &node.children {
            let _ = writeln!(out, "  n{} -> n{};", node.id, child);
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{QualifiedKind, QualifiedName};

    fn node(id: usize, parent: Option<usize>, display: &str, args: &[&str]) -> CallTreeNode {
        CallTreeNode {
            id,
            parent,
            qualified: QualifiedName {
                display: display.into(),
                kind: QualifiedKind::FreeDefined,
            },
            args: args.iter().map(|s| s.to_string()).collect(),
            children: vec![],
            recursive: false,
            truncated: false,
        }
    }

    #[test]
    fn labels() {
        assert_eq!(node_label(&node(0, None, "get_choice", &[])), "get_choice");
        assert_eq!(
            node_label(&node(0, None, "Contact::match", &["Lname", "Fname"])),
            "Contact::match(Lname, Fname)"
        );
    }

    #[test]
    fn single_root() {
        let tree = CallTree {
            nodes: vec![node(0, None, "main", &[])],
            warnings: vec![],
        };
        let compact: String = emit_dot(&tree).split_whitespace().collect();
        assert_eq!(compact, "digraph{n0[label=\"main\"];}");
    }

    #[test]
    fn quoted_argument_stays_one_attribute() {
        let mut root = node(0, None, "main", &[]);
        root.children = vec![1];
        let tree = CallTree {
            nodes: vec![root, node(1, Some(0), "puts", &["\"a,b\""])],
            warnings: vec![],
        };
        let dot = emit_dot(&tree);
        assert!(dot.contains(r#"n1 [label="puts(\"a,b\")"];"#), "{dot}");
    }

    #[test]
    fn recursive_and_truncated_attributes() {
        let mut root = node(0, None, "f", &[]);
        root.children = vec![1, 2];
        let mut rec = node(1, Some(0), "f", &[]);
        rec.recursive = true;
        let mut cut = node(2, Some(0), "g", &[]);
        cut.truncated = true;
        let dot = emit_dot(&CallTree {
            nodes: vec![root, rec, cut],
            warnings: vec![],
        });
        assert_eq!(dot.matches("style=dotted").count(), 1);
        assert!(dot.contains("n1 [label=\"f\", style=dotted];"));
        assert!(dot.contains("n2 [label=\"g…\", shape=octagon];"));
        assert!(dot.contains("n0 -> n1;\n  n0 -> n2;"));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a\"b\\c\nd"), "a\\\"b\\\\c\\nd");
    }
}
