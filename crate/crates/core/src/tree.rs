//! The knowledge taxonomy: branches are disciplines, leaves are knowledge points.
//!
//! Two file formats are accepted.
//!
//! Indented text, one node per line. Indentation (spaces) gives depth; a
//! trailing `:` declares a branch. Any node with indented children is a
//! branch. `#` starts a comment line.
//!
//! ```text
//! science:
//!   formal-sciences:
//!     mathematics:
//!       Bayes' rule
//! ```
//!
//! Nested JSON records: `{"name": "...", "children": [...]}`. A record with a
//! `children` key is a branch, without it a leaf.
//!
//! Names are normalized with [`normalize_name`] so they compare equal to the
//! merged tokens produced by the topic engine.

use std::collections::{HashMap, HashSet};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("duplicate node name `{0}`")]
    Duplicate(String),
    #[error("cycle through node `{0}`")]
    Cycle(String),
    #[error("branch `{0}` has no children")]
    ChildlessBranch(String),
    #[error("multiple roots: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("tree is empty")]
    Empty,
    #[error("unknown parent `{parent}` for node `{child}`")]
    UnknownParent { child: String, parent: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("`{0}` is not a knowledge point")]
    NotALeaf(String),
}

/// Lowercases, drops apostrophes and other punctuation, and joins words with
/// hyphens: `Bayes' rule` becomes `bayes-rule`.
pub fn normalize_name(raw: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    for word in raw.split(|c: char| c.is_whitespace() || c == '-' || c == '_') {
        let w: String = word
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        if !w.is_empty() {
            words.push(w);
        }
    }
    words.join("-")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Branch,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeNode {
    pub name: String,
    pub kind: NodeKind,
    pub children: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeTree {
    nodes: Vec<KnowledgeNode>,
    parents: Vec<Option<usize>>,
    index: HashMap<String, usize>,
    root: usize,
}

/// A node declaration before validation: its parent and whether it was
/// explicitly declared as a branch.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub name: String,
    pub parent: Option<String>,
    pub declared_branch: bool,
}

impl KnowledgeTree {
    /// Builds and validates a tree from parent links. Children keep
    /// declaration order.
    pub fn from_specs(specs: Vec<NodeSpec>) -> Result<Self, TreeError> {
        if specs.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut index = HashMap::new();
        let mut nodes = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let name = normalize_name(&spec.name);
            if name.is_empty() {
                return Err(TreeError::Syntax {
                    line: i + 1,
                    message: format!("node name `{}` normalizes to nothing", spec.name),
                });
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(TreeError::Duplicate(name));
            }
            nodes.push(KnowledgeNode {
                name,
                kind: NodeKind::Leaf,
                children: Vec::new(),
            });
        }

        let mut parents = vec![None; specs.len()];
        let mut root: Option<usize> = None;
        for (i, spec) in specs.iter().enumerate() {
            match &spec.parent {
                Some(p) => {
                    let p_name = normalize_name(p);
                    let &pi = index.get(&p_name).ok_or_else(|| TreeError::UnknownParent {
                        child: nodes[i].name.clone(),
                        parent: p_name.clone(),
                    })?;
                    parents[i] = Some(pi);
                    let child = nodes[i].name.clone();
                    nodes[pi].children.push(child);
                }
                None => {
                    if let Some(r) = root {
                        return Err(TreeError::MultipleRoots(
                            nodes[r].name.clone(),
                            nodes[i].name.clone(),
                        ));
                    }
                    root = Some(i);
                }
            }
        }

        // Every node must reach the root by parent links; otherwise it sits on a cycle.
        let root = match root {
            Some(r) => r,
            None => return Err(TreeError::Cycle(nodes[0].name.clone())),
        };
        for start in 0..nodes.len() {
            let mut seen = HashSet::new();
            let mut cur = start;
            while let Some(p) = parents[cur] {
                if !seen.insert(cur) {
                    return Err(TreeError::Cycle(nodes[cur].name.clone()));
                }
                cur = p;
            }
        }

        for (i, spec) in specs.iter().enumerate() {
            if !nodes[i].children.is_empty() {
                nodes[i].kind = NodeKind::Branch;
            } else if spec.declared_branch {
                return Err(TreeError::ChildlessBranch(nodes[i].name.clone()));
            }
        }

        Ok(KnowledgeTree {
            nodes,
            parents,
            index,
            root,
        })
    }

    /// Parses either file format, picked by the first non-blank character.
    pub fn parse(source: &str) -> Result<Self, TreeError> {
        if source.trim_start().starts_with('{') {
            Self::parse_json(source)
        } else {
            Self::parse_indented(source)
        }
    }

    pub fn parse_indented(source: &str) -> Result<Self, TreeError> {
        let mut specs = Vec::new();
        // (indent, name) of the ancestors of the current line
        let mut stack: Vec<(usize, String)> = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let lineno = idx + 1;
            if line.contains('\t') {
                return Err(TreeError::Syntax {
                    line: lineno,
                    message: "tabs are not allowed in indentation".into(),
                });
            }
            let content = line.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let indent = line.len() - line.trim_start().len();
            let (label, declared_branch) = match content.strip_suffix(':') {
                Some(l) => (l.trim(), true),
                None => (content, false),
            };
            if label.is_empty() {
                return Err(TreeError::Syntax {
                    line: lineno,
                    message: "missing node name".into(),
                });
            }
            while stack.last().is_some_and(|(i, _)| *i >= indent) {
                stack.pop();
            }
            specs.push(NodeSpec {
                name: label.to_string(),
                parent: stack.last().map(|(_, n)| n.clone()),
                declared_branch,
            });
            stack.push((indent, label.to_string()));
        }
        Self::from_specs(specs)
    }

    pub fn parse_json(source: &str) -> Result<Self, TreeError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Rec {
            name: String,
            #[serde(default)]
            children: Option<Vec<Rec>>,
        }
        fn walk(rec: Rec, parent: Option<String>, out: &mut Vec<NodeSpec>) {
            let declared_branch = rec.children.is_some();
            out.push(NodeSpec {
                name: rec.name.clone(),
                parent,
                declared_branch,
            });
            for child in rec.children.unwrap_or_default() {
                walk(child, Some(rec.name.clone()), out);
            }
        }
        let root: Rec = serde_json::from_str(source).map_err(|e| TreeError::Syntax {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut specs = Vec::new();
        walk(root, None, &mut specs);
        Self::from_specs(specs)
    }

    pub fn root(&self) -> &KnowledgeNode {
        &self.nodes[self.root]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Looks a node up by any spelling that normalizes to its name.
    pub fn get(&self, name: &str) -> Option<&KnowledgeNode> {
        self.position(name).map(|i| &self.nodes[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.index
            .get(name)
            .or_else(|| self.index.get(&normalize_name(name)))
            .copied()
    }

    pub fn is_leaf(&self, name: &str) -> bool {
        self.get(name).is_some_and(|n| n.kind == NodeKind::Leaf)
    }

    pub fn parent(&self, name: &str) -> Option<&KnowledgeNode> {
        let i = self.position(name)?;
        self.parents[i].map(|p| &self.nodes[p])
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KnowledgeNode> {
        self.nodes.iter()
    }

    /// All knowledge points in depth-first order.
    pub fn leaves(&self) -> Vec<String> {
        self.subtree_points(&self.nodes[self.root].name)
            .expect("root exists")
    }

    /// Knowledge points under `name`, depth-first in child order. A leaf
    /// yields itself.
    pub fn subtree_points(&self, name: &str) -> Result<Vec<String>, TreeError> {
        let start = self
            .position(name)
            .ok_or_else(|| TreeError::UnknownNode(name.to_string()))?;
        let mut out = Vec::new();
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            match node.kind {
                NodeKind::Leaf => out.push(node.name.clone()),
                NodeKind::Branch => {
                    stack.extend(node.children.iter().rev().map(|c| self.index[c]));
                }
            }
        }
        Ok(out)
    }

    /// Renders the tree in the indented text format.
    pub fn to_indented(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((i, depth)) = stack.pop() {
            let node = &self.nodes[i];
            out.push_str(&"  ".repeat(depth));
            out.push_str(&node.name);
            if node.kind == NodeKind::Branch {
                out.push(':');
            }
            out.push('\n');
            for c in node.children.iter().rev() {
                stack.push((self.index[c], depth + 1));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_name("Bayes' rule"), "bayes-rule");
        assert_eq!(normalize_name("Expectation-maximization algorithm"), "expectation-maximization-algorithm");
        assert_eq!(normalize_name("  Inverse   Document_Frequency "), "inverse-document-frequency");
        assert_eq!(normalize_name("bayes-rule"), "bayes-rule");
    }

    #[test]
    fn two_node_tree() {
        let t = KnowledgeTree::parse("science:\n  Bayes' rule\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.root().name, "science");
        assert!(t.is_leaf("bayes-rule"));
        assert!(t.is_leaf("Bayes' rule"));
        assert_eq!(t.leaves(), vec!["bayes-rule"]);
        assert_eq!(t.parent("bayes-rule").unwrap().name, "science");
    }

    #[test]
    fn json_format() {
        let src = r#"{"name":"science","children":[{"name":"math","children":[{"name":"Bayes rule"}]},{"name":"logic"}]}"#;
        let t = KnowledgeTree::parse(src).unwrap();
        assert_eq!(t.leaves(), vec!["bayes-rule", "logic"]);
        assert_eq!(t.get("math").unwrap().kind, NodeKind::Branch);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            KnowledgeTree::parse("science:\n  a\n  b:\n    a\n").unwrap_err(),
            TreeError::Duplicate("a".into())
        );
        assert_eq!(
            KnowledgeTree::parse("science:\n  math:\n  a\n").unwrap_err(),
            TreeError::ChildlessBranch("math".into())
        );
        assert_eq!(
            KnowledgeTree::parse("science:\n  a\nart:\n  b\n").unwrap_err(),
            TreeError::MultipleRoots("science".into(), "art".into())
        );
        assert_eq!(
            KnowledgeTree::parse(r#"{"name":"x","children":[]}"#).unwrap_err(),
            TreeError::ChildlessBranch("x".into())
        );
        assert_eq!(KnowledgeTree::parse("# nothing\n").unwrap_err(), TreeError::Empty);
    }

    #[test]
    fn cycle_detected_from_links() {
        let spec = |n: &str, p: Option<&str>| NodeSpec {
            name: n.into(),
            parent: p.map(String::from),
            declared_branch: false,
        };
        let err = KnowledgeTree::from_specs(vec![
            spec("root", None),
            spec("a", Some("b")),
            spec("b", Some("a")),
        ])
        .unwrap_err();
        assert!(matches!(err, TreeError::Cycle(_)));
        let err = KnowledgeTree::from_specs(vec![spec("a", Some("a"))]).unwrap_err();
        assert!(matches!(err, TreeError::Cycle(_)));
    }

    #[test]
    fn subtree_enumeration() {
        let src = "root:\n  b1:\n    x\n    y\n  b2:\n    b3:\n      b4:\n        p\n        q\n      r\n    s\n";
        let t = KnowledgeTree::parse(src).unwrap();
        assert_eq!(t.subtree_points("b1").unwrap(), vec!["x", "y"]);
        assert_eq!(t.subtree_points("x").unwrap(), vec!["x"]);
        // depth-3 nesting under b2, 4 leaves total
        assert_eq!(t.subtree_points("b2").unwrap(), vec!["p", "q", "r", "s"]);
        assert_eq!(t.subtree_points("root").unwrap(), t.leaves());
        assert_eq!(
            t.subtree_points("nope").unwrap_err(),
            TreeError::UnknownNode("nope".into())
        );
    }

    #[test]
    fn indented_round_trip() {
        let src = "root:\n  b1:\n    x\n    y\n  z\n";
        let t = KnowledgeTree::parse(src).unwrap();
        assert_eq!(t.to_indented(), src);
    }
}
