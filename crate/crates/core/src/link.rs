//! Cross-file linking: definition index, callee qualification, call-tree
//! expansion and graph metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::extract::{CallFact, ExtractionResult, FunctionDef, ReceiverKind, TOPLEVEL};
use crate::facts::{csv_writer, escape_display, finish, split_escaped, FactsError, RowReader};

pub const DEFAULT_MAX_DEPTH: usize = 100;
/// Hard cap on tree size; wide call DAGs can otherwise expand exponentially.
pub const NODE_LIMIT: usize = 1_000_000;

pub const EDGES_HEADER: [&str; 6] = [
    "parent_id",
    "child_id",
    "parent_name",
    "child_name",
    "edge_kind",
    "args",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinkError {
    #[error("unknown root `{root}`; candidate roots: {}", display_candidates(.candidates))]
    UnknownRoot {
        root: String,
        candidates: Vec<String>,
    },
    #[error("no default root: no `main` and every definition is called; candidate roots: {}", display_candidates(.candidates))]
    NoDefaultRoot { candidates: Vec<String> },
}

fn display_candidates(candidates: &[String]) -> String {
    if candidates.is_empty() {
        "(none)".to_string()
    } else {
        candidates.join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualifiedKind {
    MemberDefined,
    MemberLibrary,
    FreeDefined,
    FreeLibrary,
}

impl QualifiedKind {
    pub fn is_library(self) -> bool {
        matches!(
            self,
            QualifiedKind::MemberLibrary | QualifiedKind::FreeLibrary
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualifiedKind::MemberDefined => "member_defined",
            QualifiedKind::MemberLibrary => "member_library",
            QualifiedKind::FreeDefined => "free_defined",
            QualifiedKind::FreeLibrary => "free_library",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName {
    pub display: String,
    pub kind: QualifiedKind,
}

/// Identity of one definition's fact bucket.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DefKey {
    pub file: String,
    pub class_name: Option<String>,
    pub name: String,
}

impl DefKey {
    pub fn of_def(def: &FunctionDef) -> Self {
        Self {
            file: def.file.clone(),
            class_name: def.class_name.clone(),
            name: def.name.clone(),
        }
    }

    pub fn of_caller(fact: &CallFact) -> Self {
        Self {
            file: fact.file.clone(),
            class_name: fact.caller_class.clone(),
            name: fact.caller_scope.clone(),
        }
    }
}

pub fn def_display(class_name: Option<&str>, name: &str) -> String {
    match class_name {
        Some(c) => format!("{c}::{name}"),
        None => name.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactIndex {
    pub defs_by_name: BTreeMap<(Option<String>, String), FunctionDef>,
    pub facts_by_def: BTreeMap<DefKey, Vec<CallFact>>,
    pub known_classes: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Builds the cross-file index. Definitions are visited in file order; the
/// first definition of a (class, name) pair wins.
pub fn merge(results: &[ExtractionResult]) -> FactIndex {
    let mut index = FactIndex::default();
    let mut defs: Vec<&FunctionDef> = results.iter().flat_map(|r| &r.defs).collect();
    defs.sort_by(|a, b| a.file.cmp(&b.file));
    let mut seen_in_file: BTreeSet<(String, Option<String>, String)> = BTreeSet::new();
    for def in defs {
        index.known_classes.extend(def.class_name.clone());
        let key = (def.class_name.clone(), def.name.clone());
        let display = def_display(def.class_name.as_deref(), &def.name);
        match index.defs_by_name.get(&key) {
            None => {
                index.defs_by_name.insert(key, def.clone());
            }
            Some(kept) if kept.file != def.file => index.warnings.push(format!(
                "duplicate definition of {display} in {} ignored; using {}",
                def.file, kept.file
            )),
            Some(_) => {
                let id = (def.file.clone(), def.class_name.clone(), def.name.clone());
                if !seen_in_file.insert(id) {
                    continue;
                }
                index.warnings.push(format!(
                    "overloads of {display} in {} are merged into one node",
                    def.file
                ));
            }
        }
        seen_in_file.insert((def.file.clone(), def.class_name.clone(), def.name.clone()));
    }
    for fact in results.iter().flat_map(|r| &r.facts) {
        index
            .facts_by_def
            .entry(DefKey::of_caller(fact))
            .or_default()
            .push(fact.clone());
    }
    for facts in index.facts_by_def.values_mut() {
        facts.sort_by(|a, b| a.seq.cmp(&b.seq).then_with(|| a.cmp(b)));
    }
    index
}

/// Qualifies a callee for display: `Class::name` for calls on corpus
/// classes, `OBJ.name` for calls on other objects, bare names otherwise.
pub fn qualify_callee(fact: &CallFact, index: &FactIndex) -> QualifiedName {
    match &fact.receiver_class {
        Some(class) if index.known_classes.contains(class) => QualifiedName {
            display: format!("{class}::{}", fact.callee),
            kind: QualifiedKind::MemberDefined,
        },
        Some(_) => QualifiedName {
            display: format!("OBJ.{}", fact.callee),
            kind: QualifiedKind::MemberLibrary,
        },
        None if index.free_target(&fact.callee).is_some() => QualifiedName {
            display: fact.callee.clone(),
            kind: QualifiedKind::FreeDefined,
        },
        None => QualifiedName {
            display: fact.callee.clone(),
            kind: QualifiedKind::FreeLibrary,
        },
    }
}

impl FactIndex {
    /// Definition reached by a receiver-less call to `name`: a free function
    /// if one exists, else the first class member of that name (static
    /// member calls carry no receiver).
    fn free_target(&self, name: &str) -> Option<&FunctionDef> {
        self.defs_by_name
            .get(&(None, name.to_string()))
            .or_else(|| self.defs_by_name.values().find(|d| d.name == name))
    }

    /// Definition a qualified call expands into, if it is in the corpus.
    pub fn target(&self, fact: &CallFact) -> Option<&FunctionDef> {
        match qualify_callee(fact, self).kind {
            QualifiedKind::MemberDefined => self
                .defs_by_name
                .get(&(fact.receiver_class.clone(), fact.callee.clone())),
            QualifiedKind::FreeDefined => self.free_target(&fact.callee),
            _ => None,
        }
    }

    pub fn facts_of(&self, def: &FunctionDef) -> &[CallFact] {
        self.facts_by_def
            .get(&DefKey::of_def(def))
            .map_or(&[], Vec::as_slice)
    }

    /// Defined functions never reached by a call in the corpus, plus `main`.
    pub fn candidate_roots(&self) -> Vec<String> {
        let called: BTreeSet<DefKey> = self
            .facts_by_def
            .values()
            .flatten()
            .filter_map(|f| self.target(f).map(DefKey::of_def))
            .collect();
        let mut out: BTreeSet<String> = self
            .defs_by_name
            .values()
            .filter(|d| !called.contains(&DefKey::of_def(d)))
            .map(|d| def_display(d.class_name.as_deref(), &d.name))
            .collect();
        if self.defs_by_name.contains_key(&(None, "main".to_string())) {
            out.insert("main".to_string());
        }
        out.into_iter().collect()
    }

    /// Resolves a root given as `Class::name` or `name`; `None` picks the
    /// default (`main`, else the first never-called definition).
    pub fn resolve_root(&self, root: Option<&str>) -> Result<QualifiedName, LinkError> {
        let candidates = self.candidate_roots();
        let root = match root {
            Some(r) => r.to_string(),
            None => match candidates.first() {
                _ if self.defs_by_name.contains_key(&(None, "main".to_string())) => {
                    "main".to_string()
                }
                Some(first) => first.clone(),
                None => return Err(LinkError::NoDefaultRoot { candidates }),
            },
        };
        match self.root_def(&root) {
            Some(def) => Ok(QualifiedName {
                display: def_display(def.class_name.as_deref(), &def.name),
                kind: if def.class_name.is_some() {
                    QualifiedKind::MemberDefined
                } else {
                    QualifiedKind::FreeDefined
                },
            }),
            None => Err(LinkError::UnknownRoot { root, candidates }),
        }
    }

    fn root_def(&self, root: &str) -> Option<&FunctionDef> {
        if let Some((class, name)) = root.rsplit_once("::") {
            return self
                .defs_by_name
                .get(&(Some(class.to_string()), name.to_string()));
        }
        if let Some(def) = self.defs_by_name.get(&(None, root.to_string())) {
            return Some(def);
        }
        let mut members = self.defs_by_name.values().filter(|d| d.name == root);
        match (members.next(), members.next()) {
            (Some(only), None) => Some(only),
            _ => None,
        }
    }

    /// The view a callgraph tool without library or implicit-receiver
    /// support would produce: library calls and calls on `this` (explicit or
    /// through a data member) are dropped.
    pub fn baseline(&self) -> FactIndex {
        let mut view = self.clone();
        for facts in view.facts_by_def.values_mut() {
            facts.retain(|f| {
                !qualify_callee(f, self).kind.is_library()
                    && !matches!(
                        f.receiver_kind,
                        ReceiverKind::ThisImplied | ReceiverKind::MemberVariable
                    )
            });
        }
        view
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTreeNode {
    /// Preorder position; the root is 0.
    pub id: usize,
    pub parent: Option<usize>,
    pub qualified: QualifiedName,
    pub args: Vec<String>,
    pub children: Vec<usize>,
    pub recursive: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTree {
    pub nodes: Vec<CallTreeNode>,
    pub warnings: Vec<String>,
}

impl CallTree {
    pub fn root(&self) -> &CallTreeNode {
        &self.nodes[0]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Displays from the root down to `id`, inclusive.
    pub fn path_to(&self, id: usize) -> Vec<&str> {
        let mut path = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            path.push(self.nodes[i].qualified.display.as_str());
            cur = self.nodes[i].parent;
        }
        path.reverse();
        path
    }

    fn on_path(&self, id: usize, display: &str) -> bool {
        let mut cur = Some(id);
        while let Some(i) = cur {
            if self.nodes[i].qualified.display == display {
                return true;
            }
            cur = self.nodes[i].parent;
        }
        false
    }
}

/// Depth-first expansion from `root`. Children follow the definition's call
/// order. A child already on its own root path is marked recursive and not
/// expanded; nodes at `max_depth` that still have calls are truncated.
pub fn build_tree(
    index: &FactIndex,
    root: &QualifiedName,
    max_depth: usize,
) -> Result<CallTree, LinkError> {
    let root_def = index
        .root_def(&root.display)
        .ok_or_else(|| LinkError::UnknownRoot {
            root: root.display.clone(),
            candidates: index.candidate_roots(),
        })?;
    let mut tree = CallTree {
        nodes: Vec::new(),
        warnings: Vec::new(),
    };
    struct Pending<'a> {
        parent: Option<usize>,
        depth: usize,
        qualified: QualifiedName,
        args: Vec<String>,
        target: Option<&'a FunctionDef>,
    }
    let mut stack = vec![Pending {
        parent: None,
        depth: 0,
        qualified: root.clone(),
        args: Vec::new(),
        target: Some(root_def),
    }];
    let mut budget_warned = false;
    while let Some(p) = stack.pop() {
        let id = tree.nodes.len();
        let recursive = p
            .parent
            .is_some_and(|parent| tree.on_path(parent, &p.qualified.display));
        tree.nodes.push(CallTreeNode {
            id,
            parent: p.parent,
            qualified: p.qualified,
            args: p.args,
            children: Vec::new(),
            recursive,
            truncated: false,
        });
        if let Some(parent) = p.parent {
            tree.nodes[parent].children.push(id);
        }
        let Some(def) = p.target.filter(|_| !recursive) else {
            continue;
        };
        let facts = index.facts_of(def);
        if facts.is_empty() {
            continue;
        }
        if p.depth >= max_depth || tree.nodes.len() + stack.len() >= NODE_LIMIT {
            tree.nodes[id].truncated = true;
            let display = &tree.nodes[id].qualified.display;
            if p.depth >= max_depth {
                tree.warnings.push(format!(
                    "call tree truncated at depth {max_depth} below {display}"
                ));
            } else if !budget_warned {
                budget_warned = true;
                tree.warnings
                    .push(format!("call tree truncated after {NODE_LIMIT} nodes"));
            }
            continue;
        }
        for fact in facts.iter().rev() {
            stack.push(Pending {
                parent: Some(id),
                depth: p.depth + 1,
                qualified: qualify_callee(fact, index),
                args: fact.args.iter().map(|a| a.display.clone()).collect(),
                target: index.target(fact),
            });
        }
    }
    Ok(tree)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphMetrics {
    pub total_calls: u64,
    pub member_calls: u64,
    pub free_calls: u64,
    pub library_calls: u64,
    pub argument_count: u64,
    pub recursion_correct: bool,
}

/// Six-feature summary. Every distinct callee below the root counts once,
/// with the argument count of its first occurrence in preorder.
pub fn graph_metrics(tree: &CallTree, expected_recursion: &BTreeSet<String>) -> GraphMetrics {
    let mut m = GraphMetrics::default();
    let mut seen = BTreeSet::new();
    for node in tree.nodes.iter().skip(1) {
        if !seen.insert(node.qualified.display.as_str()) {
            continue;
        }
        match node.qualified.kind {
            QualifiedKind::MemberDefined => m.member_calls += 1,
            QualifiedKind::FreeDefined => m.free_calls += 1,
            QualifiedKind::MemberLibrary | QualifiedKind::FreeLibrary => m.library_calls += 1,
        }
        m.argument_count += node.args.len() as u64;
    }
    m.total_calls = m.member_calls + m.free_calls + m.library_calls;
    m.recursion_correct = recursion_marks(tree) == *expected_recursion;
    m
}

/// Displays of all recursive-marked nodes.
pub fn recursion_marks(tree: &CallTree) -> BTreeSet<String> {
    tree.nodes
        .iter()
        .filter(|n| n.recursive)
        .map(|n| n.qualified.display.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetricsDelta {
    pub total_calls: i64,
    pub member_calls: i64,
    pub free_calls: i64,
    pub library_calls: i64,
    pub argument_count: i64,
    pub recursion_correct: i64,
}

/// Fieldwise `a - b`; the boolean field counts as 0 or 1.
pub fn compare_metrics(a: &GraphMetrics, b: &GraphMetrics) -> MetricsDelta {
    let d = |x: u64, y: u64| x as i64 - y as i64;
    MetricsDelta {
        total_calls: d(a.total_calls, b.total_calls),
        member_calls: d(a.member_calls, b.member_calls),
        free_calls: d(a.free_calls, b.free_calls),
        library_calls: d(a.library_calls, b.library_calls),
        argument_count: d(a.argument_count, b.argument_count),
        recursion_correct: i64::from(a.recursion_correct) - i64::from(b.recursion_correct),
    }
}

fn edge_kind(node: &CallTreeNode) -> &'static str {
    if node.truncated {
        "truncated"
    } else if node.recursive {
        "recursive"
    } else if node.qualified.kind.is_library() {
        "library"
    } else {
        "defined"
    }
}

/// `edges.csv` contents: one row per parent-child edge, in preorder.
pub fn edges_to_csv(tree: &CallTree) -> String {
    let mut w = csv_writer();
    w.write_record(EDGES_HEADER).expect("in-memory write");
    for node in tree.nodes.iter().skip(1) {
        let parent = &tree.nodes[node.parent.expect("non-root node has a parent")];
        let mut args = String::new();
        for (i, a) in node.args.iter().enumerate() {
            if i > 0 {
                args.push('|');
            }
            escape_display(a, &mut args);
        }
        w.write_record([
            parent.id.to_string().as_str(),
            &node.id.to_string(),
            &parent.qualified.display,
            &node.qualified.display,
            edge_kind(node),
            &args,
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn kind_from_edge(display: &str, edge_kind: &str) -> QualifiedKind {
    if display.starts_with("OBJ.") {
        QualifiedKind::MemberLibrary
    } else if display.contains("::") {
        QualifiedKind::MemberDefined
    } else if edge_kind == "library" {
        QualifiedKind::FreeLibrary
    } else {
        QualifiedKind::FreeDefined
    }
}

/// Rebuilds a tree from `edges.csv` text. A file without edges yields a
/// root-only tree named `<root>`.
pub fn parse_edges(path: &Path, text: &str) -> Result<CallTree, FactsError> {
    let rows = RowReader::new(path, text, &EDGES_HEADER).rows()?;
    let err = |line: u64, column: &str, detail: String| FactsError::Malformed {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        detail,
    };
    let mut nodes: Vec<CallTreeNode> = Vec::new();
    let root_name = rows
        .first()
        .map_or("<root>".to_string(), |(_, c)| c[2].clone());
    nodes.push(CallTreeNode {
        id: 0,
        parent: None,
        qualified: QualifiedName {
            kind: kind_from_edge(&root_name, "defined"),
            display: root_name,
        },
        args: Vec::new(),
        children: Vec::new(),
        recursive: false,
        truncated: false,
    });
    for (line, cells) in rows {
        let parent: usize = cells[0]
            .parse()
            .map_err(|e: std::num::ParseIntError| err(line, "parent_id", e.to_string()))?;
        let child: usize = cells[1]
            .parse()
            .map_err(|e: std::num::ParseIntError| err(line, "child_id", e.to_string()))?;
        if child != nodes.len() || parent >= child {
            return Err(err(
                line,
                "child_id",
                "edges must list children in preorder".to_string(),
            ));
        }
        let kind = cells[4].as_str();
        if !["defined", "library", "recursive", "truncated"].contains(&kind) {
            return Err(err(
                line,
                "edge_kind",
                format!("unknown edge kind `{kind}`"),
            ));
        }
        let args = split_escaped(&cells[5]).map_err(|e| err(line, "args", e))?;
        nodes[parent].children.push(child);
        nodes.push(CallTreeNode {
            id: child,
            parent: Some(parent),
            qualified: QualifiedName {
                display: cells[3].clone(),
                kind: kind_from_edge(&cells[3], kind),
            },
            args,
            children: Vec::new(),
            recursive: kind == "recursive",
            truncated: kind == "truncated",
        });
    }
    Ok(CallTree {
        nodes,
        warnings: Vec::new(),
    })
}

/// Facts attributed to top-level code (outside any definition).
pub fn toplevel_facts(index: &FactIndex) -> impl Iterator<Item = &CallFact> {
    index
        .facts_by_def
        .iter()
        .filter(|(k, _)| k.name == TOPLEVEL)
        .flat_map(|(_, v)| v)
}
