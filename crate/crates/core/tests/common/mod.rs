#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use islandcg::extract::{ArgKind, ArgValue, CallFact, ExtractionResult, FunctionDef, ReceiverKind};
use islandcg::link::CallTree;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn dumps() -> PathBuf {
    fixtures().join("dumps")
}

pub fn corpus_dir() -> PathBuf {
    dumps().join("corpus")
}

/// Program name and its dump files, sorted.
pub fn corpus_programs() -> Vec<(String, Vec<PathBuf>)> {
    let mut programs: Vec<(String, Vec<PathBuf>)> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .map(|p| {
            let mut files: Vec<PathBuf> = fs::read_dir(&p)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            (p.file_name().unwrap().to_string_lossy().into_owned(), files)
        })
        .collect();
    programs.sort();
    programs
}

pub fn all_corpus_dumps() -> Vec<PathBuf> {
    corpus_programs().into_iter().flat_map(|(_, f)| f).collect()
}

// ---------------------------------------------------------------------------
// Synthetic dumps

/// One node of a synthetic dump: the text after the tree connector.
#[derive(Debug, Clone)]
pub struct Node {
    pub text: String,
    pub children: Vec<Node>,
}

impl Node {
    fn leaf(text: String) -> Self {
        Node {
            text,
            children: vec![],
        }
    }

    fn with(text: String, children: Vec<Node>) -> Self {
        Node { text, children }
    }
}

/// Renders with clang's connectors: `|-` for all but the last child, `` `- ``
/// for the last one, two columns per level.
pub fn render(root: &Node) -> String {
    fn go(node: &Node, prefix: &str, out: &mut String) {
        for (i, child) in node.children.iter().enumerate() {
            let last = i + 1 == node.children.len();
            out.push_str(prefix);
            out.push_str(if last { "`-" } else { "|-" });
            out.push_str(&child.text);
            out.push('\n');
            let next = format!("{prefix}{}", if last { "  " } else { "| " });
            go(child, &next, out);
        }
    }
    let mut out = format!("{}\n", root.text);
    go(root, "", &mut out);
    out
}

pub struct Synth<'a> {
    rng: &'a mut StdRng,
    addr: u64,
    line: u32,
}

const FUNCS: [&str; 6] = [
    "alpha",
    "beta",
    "gamma_2",
    "do_work",
    "printf",
    "operator_fn",
];
const VARS: [&str; 5] = ["x", "count", "buf", "Lname", "k"];
const METHODS: [&str; 4] = ["display", "push_back", "size", "read"];

impl<'a> Synth<'a> {
    pub fn new(rng: &'a mut StdRng) -> Self {
        Synth {
            rng,
            addr: 0x1000,
            line: 1,
        }
    }

    fn a(&mut self) -> String {
        self.addr += 0x18;
        format!("0x{:x}", self.addr)
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).unwrap()
    }

    fn var_ref(&mut self) -> Node {
        let v = self.pick(&VARS);
        let (a, b) = (self.a(), self.a());
        Node::with(
            format!("ImplicitCastExpr {a} <col:5> 'int' <LValueToRValue>"),
            vec![Node::leaf(format!(
                "DeclRefExpr {b} <col:5> 'int' lvalue Var {} '{v}' 'int'",
                self.a()
            ))],
        )
    }

    pub fn expr(&mut self, depth: u32) -> Node {
        let choice = if depth == 0 {
            self.rng.gen_range(0..4)
        } else {
            self.rng.gen_range(0..11)
        };
        match choice {
            0 => self.var_ref(),
            1 => Node::leaf(format!(
                "IntegerLiteral {} <col:9> 'int' {}",
                self.a(),
                self.rng.gen_range(0..1000)
            )),
            2 => {
                let a = self.a();
                let b = self.a();
                Node::with(
                    format!("ImplicitCastExpr {a} <col:9> 'const char *' <ArrayToPointerDecay>"),
                    vec![Node::leaf(format!(
                        "StringLiteral {b} <col:9> 'const char[6]' lvalue \"a,b|c\""
                    ))],
                )
            }
            3 => Node::leaf(format!(
                "CXXBoolLiteralExpr {} <col:9> 'bool' true",
                self.a()
            )),
            4 => {
                let op = self.pick(&["+", "-", "*", "<"]);
                let a = self.a();
                Node::with(
                    format!("BinaryOperator {a} <col:5, col:9> 'int' '{op}'"),
                    vec![self.expr(depth - 1), self.expr(depth - 1)],
                )
            }
            5 => {
                let fix = self.pick(&["postfix '++'", "prefix '-'", "prefix '!'"]);
                let a = self.a();
                Node::with(
                    format!("UnaryOperator {a} <col:5, col:6> 'int' {fix}"),
                    vec![self.var_ref()],
                )
            }
            6 => {
                let a = self.a();
                Node::with(
                    format!("ParenExpr {a} <col:5, col:9> 'int'"),
                    vec![self.expr(depth - 1)],
                )
            }
            7 | 8 => self.call(depth - 1),
            9 => self.member_call(depth - 1),
            _ => {
                let a = self.a();
                let b = self.a();
                Node::with(
                    format!("ArraySubscriptExpr {a} <col:5, col:10> 'int' lvalue"),
                    vec![
                        Node::with(
                            format!("ImplicitCastExpr {b} <col:5> 'int *' <ArrayToPointerDecay>"),
                            vec![Node::leaf(format!(
                                "DeclRefExpr {} <col:5> 'int[3]' lvalue Var {} 'vec' 'int[3]'",
                                self.a(),
                                self.a()
                            ))],
                        ),
                        self.expr(0),
                    ],
                )
            }
        }
    }

    pub fn call(&mut self, depth: u32) -> Node {
        let f = self.pick(&FUNCS);
        let (a, b, c, d) = (self.a(), self.a(), self.a(), self.a());
        let mut children = vec![Node::with(
            format!("ImplicitCastExpr {b} <col:3> 'int (*)(int)' <FunctionToPointerDecay>"),
            vec![Node::leaf(format!(
                "DeclRefExpr {c} <col:3> 'int (int)' lvalue Function {d} '{f}' 'int (int)'"
            ))],
        )];
        for _ in 0..self.rng.gen_range(0..4) {
            children.push(self.expr(depth));
        }
        Node::with(format!("CallExpr {a} <col:3, col:20> 'int'"), children)
    }

    pub fn member_call(&mut self, depth: u32) -> Node {
        let m = self.pick(&METHODS);
        let arrow = self.rng.gen_bool(0.5);
        let (a, b, c) = (self.a(), self.a(), self.a());
        let object = if arrow {
            Node::leaf(format!(
                "CXXThisExpr {c} <col:3> 'class Widget *' implicit this"
            ))
        } else {
            Node::leaf(format!(
                "DeclRefExpr {c} <col:3> 'Widget':'class Widget' lvalue Var {} 'w' 'Widget':'class Widget'",
                self.a()
            ))
        };
        let sep = if arrow { "->" } else { "." };
        let mut children = vec![Node::with(
            format!(
                "MemberExpr {b} <col:3, col:5> '<bound member function type>' {sep}{m} {}",
                self.a()
            ),
            vec![object],
        )];
        for _ in 0..self.rng.gen_range(0..3) {
            children.push(self.expr(depth));
        }
        Node::with(
            format!("CXXMemberCallExpr {a} <col:3, col:20> 'void'"),
            children,
        )
    }

    fn stmt(&mut self, depth: u32) -> Node {
        match self.rng.gen_range(0..6) {
            0 | 1 => self.call(depth),
            2 => self.member_call(depth),
            3 => {
                let a = self.a();
                Node::with(
                    format!("ReturnStmt {a} <col:3, col:10>"),
                    vec![self.expr(depth)],
                )
            }
            4 => {
                let (a, b) = (self.a(), self.a());
                Node::with(
                    format!("DeclStmt {a} <col:3, col:20>"),
                    vec![Node::with(
                        format!("VarDecl {b} <col:3, col:19> col:7 tmp 'int' cinit"),
                        vec![self.expr(depth)],
                    )],
                )
            }
            _ => {
                let (a, b) = (self.a(), self.a());
                let body: Vec<Node> = (0..self.rng.gen_range(0..3))
                    .map(|_| self.stmt(depth))
                    .collect();
                Node::with(
                    format!("IfStmt {a} <col:3, col:30>"),
                    vec![
                        self.expr(depth),
                        Node::with(format!("CompoundStmt {b} <col:15, col:30>"), body),
                    ],
                )
            }
        }
    }

    fn function(&mut self, name: &str, class: Option<&str>) -> Node {
        let l = self.line;
        self.line += 10;
        let a = self.a();
        let head = match class {
            Some(_) => format!(
                "CXXMethodDecl {a} <line:{l}:3, line:{}:3> line:{l}:8 {name} 'void ()'",
                l + 9
            ),
            None => format!(
                "FunctionDecl {a} <s.cpp:{l}:1, line:{}:1> line:{l}:6 {name} 'void ()'",
                l + 9
            ),
        };
        let b = self.a();
        let depth = self.rng.gen_range(0..4);
        let body: Vec<Node> = (0..self.rng.gen_range(0..6))
            .map(|_| self.stmt(depth))
            .collect();
        Node::with(
            head,
            vec![Node::with(
                format!("CompoundStmt {b} <col:12, line:{}:1>", l + 9),
                body,
            )],
        )
    }

    /// A translation unit with free functions, one class with methods,
    /// body-less declarations and top-level water.
    pub fn translation_unit(&mut self) -> Node {
        let mut decls = vec![Node::leaf(format!(
            "TypedefDecl {} <<invalid sloc>> <invalid sloc> implicit __int128_t '__int128'",
            self.a()
        ))];
        for i in 0..self.rng.gen_range(0..4) {
            let name = format!("fn_{i}");
            decls.push(self.function(&name, None));
        }
        if self.rng.gen_bool(0.6) {
            let a = self.a();
            let mut members = vec![Node::leaf(format!(
                "CXXRecordDecl {} <col:1, col:7> col:7 implicit class Widget",
                self.a()
            ))];
            for i in 0..self.rng.gen_range(0..3) {
                members.push(self.function(&format!("method_{i}"), Some("Widget")));
            }
            decls.push(Node::with(
                format!(
                    "CXXRecordDecl {a} <s.cpp:1:1, line:40:1> line:1:7 class Widget definition"
                ),
                members,
            ));
        }
        if self.rng.gen_bool(0.5) {
            let a = self.a();
            decls.push(Node::leaf(format!(
                "FunctionDecl {a} <s.cpp:90:1, col:20> col:6 declared_only 'void (int)'"
            )));
        }
        if self.rng.gen_bool(0.5) {
            let a = self.a();
            let init = self.expr(2);
            decls.push(Node::with(
                format!("VarDecl {a} <s.cpp:95:1, col:30> col:5 global 'int' cinit"),
                vec![init],
            ));
        }
        decls.push(self.function("main", None));
        Node::with(
            "TranslationUnitDecl 0x1 <<invalid sloc>> <invalid sloc>".to_string(),
            decls,
        )
    }
}

pub fn synthetic_dump(seed: u64) -> String {
    use rand::SeedableRng;
    let mut rng = StdRng::seed_from_u64(seed);
    render(&Synth::new(&mut rng).translation_unit())
}

// ---------------------------------------------------------------------------
// Full-tree oracle

/// Brute-force parse of a dump: every line becomes a node at depth
/// `prefix/2`, parented to the nearest shallower line above it. Returns,
/// in line order, the argument count of every call node (children minus the
/// callee).
pub fn oracle_call_arg_counts(dump: &str) -> Vec<usize> {
    let mut kinds: Vec<String> = Vec::new();
    let mut children = Vec::<usize>::new();
    let mut open: Vec<(usize, usize)> = Vec::new(); // (depth, node)
    for line in dump.lines() {
        let body = line.trim_start_matches([' ', '|', '`', '\'', '-']);
        if body.is_empty() {
            continue;
        }
        let depth = (line.len() - body.len()) / 2;
        let kind = body.split(' ').next().unwrap_or("").to_string();
        while open.last().is_some_and(|&(d, _)| d >= depth) {
            open.pop();
        }
        let id = kinds.len();
        kinds.push(kind);
        children.push(0);
        if let Some(&(_, parent)) = open.last() {
            children[parent] += 1;
        }
        open.push((depth, id));
    }
    kinds
        .iter()
        .zip(&children)
        .filter(|(k, _)| *k == "CallExpr" || *k == "CXXMemberCallExpr")
        .map(|(_, &c)| c.saturating_sub(1))
        .collect()
}

// ---------------------------------------------------------------------------
// Mutations

pub fn mutate(rng: &mut StdRng, input: &[u8]) -> Vec<u8> {
    let mut bytes = input.to_vec();
    match rng.gen_range(0..3) {
        0 => {
            for _ in 0..rng.gen_range(1..32) {
                if bytes.is_empty() {
                    break;
                }
                let i = rng.gen_range(0..bytes.len());
                bytes[i] = rng.gen();
            }
            bytes
        }
        1 => {
            let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
            if rng.gen_bool(0.5) {
                lines.shuffle(rng);
            } else {
                for _ in 0..rng.gen_range(1..20) {
                    let i = rng.gen_range(0..lines.len());
                    let j = rng.gen_range(0..lines.len());
                    lines.swap(i, j);
                }
            }
            lines.join(&b'\n')
        }
        _ => {
            let cut = rng.gen_range(0..=bytes.len());
            bytes.truncate(cut);
            bytes
        }
    }
}

/// Lines that carry no tokens at all.
pub const WATER_LINES: [&str; 6] = ["", "%%%% !!! ;;;", "| | ", "   ", "`- -- ''", "(){}[] ,;"];

pub fn insert_water(rng: &mut StdRng, dump: &str) -> String {
    let mut out = String::new();
    for line in dump.lines() {
        while rng.gen_bool(0.2) {
            out.push_str(WATER_LINES.choose(rng).unwrap());
            out.push('\n');
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Well-formedness

pub fn check_well_formed(r: &ExtractionResult) -> Result<(), String> {
    let mut seqs: BTreeMap<(&str, &str, Option<&str>), Vec<usize>> = BTreeMap::new();
    let def_names: BTreeSet<(&str, &str)> = r
        .defs
        .iter()
        .map(|d| (d.file.as_str(), d.name.as_str()))
        .collect();
    for f in &r.facts {
        if f.callee.is_empty() {
            return Err(format!("empty callee in {f:?}"));
        }
        if f.caller_scope != "<toplevel>" && !def_names.contains(&(&f.file, &f.caller_scope)) {
            return Err(format!("caller {} has no definition", f.caller_scope));
        }
        if f.receiver_class.is_some() == (f.receiver_kind == ReceiverKind::None) {
            return Err(format!("receiver class and kind disagree in {f:?}"));
        }
        seqs.entry((&f.file, &f.caller_scope, f.caller_class.as_deref()))
            .or_default()
            .push(f.seq);
    }
    for (key, mut s) in seqs {
        s.sort_unstable();
        if s != (0..s.len()).collect::<Vec<_>>() {
            return Err(format!("seq numbers of {key:?} are not 0..n: {s:?}"));
        }
    }
    let expected: Vec<String> = r
        .facts
        .iter()
        .filter_map(|f| {
            f.warning
                .as_ref()
                .map(|w| format!("{}: {w}", f.caller_scope))
        })
        .collect();
    if r.warnings != expected {
        return Err("result warnings do not match fact warnings".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Generated results

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,8}"
}

fn display_text() -> impl Strategy<Value = String> {
    prop_oneof![
        ident(),
        "[ -~]{0,12}",
        Just("a,b|c\\\"d".to_string()),
        Just("line\nbreak".to_string()),
        Just(String::new()),
    ]
}

fn arg_value() -> impl Strategy<Value = ArgValue> {
    prop_oneof![
        (prop::sample::select(ArgKind::ALL.to_vec()), display_text())
            .prop_filter("member args use the member constructor", |(k, _)| *k
                != ArgKind::MemberVar)
            .prop_map(|(k, d)| ArgValue::new(k, d)),
        (display_text(), ident()).prop_map(|(o, m)| ArgValue::member(o, &m)),
    ]
}

fn opt_text() -> impl Strategy<Value = Option<String>> {
    prop::option::of(display_text().prop_filter("non-empty", |s| !s.is_empty()))
}

fn receiver_kind() -> impl Strategy<Value = ReceiverKind> {
    prop::sample::select(vec![
        ReceiverKind::ThisImplied,
        ReceiverKind::MemberVariable,
        ReceiverKind::NamedObject,
        ReceiverKind::None,
    ])
}

pub fn call_fact() -> impl Strategy<Value = CallFact> {
    (
        prop::sample::select(vec!["a.cpp", "b,c.cpp", "dir/\"q\".cpp"]),
        ident(),
        0usize..20,
        opt_text(),
        display_text().prop_filter("non-empty", |s| !s.is_empty()),
        opt_text(),
        receiver_kind(),
        prop::collection::vec(arg_value(), 0..5),
        opt_text(),
    )
        .prop_map(
            |(
                file,
                caller_scope,
                seq,
                caller_class,
                callee,
                receiver_class,
                receiver_kind,
                args,
                warning,
            )| {
                CallFact {
                    file: file.to_string(),
                    caller_scope,
                    seq,
                    caller_class,
                    callee,
                    receiver_class,
                    receiver_kind,
                    args,
                    warning,
                }
            },
        )
}

pub fn function_def() -> impl Strategy<Value = FunctionDef> {
    (
        prop::sample::select(vec!["a.cpp", "b,c.cpp"]),
        ident(),
        prop::option::of(ident()),
    )
        .prop_map(|(f, n, c)| FunctionDef::new(f, &n, c.as_deref()))
}

/// Arbitrary results in canonical (normalized) form.
pub fn extraction_result() -> impl Strategy<Value = ExtractionResult> {
    (
        prop::collection::vec(call_fact(), 0..12),
        prop::collection::vec(function_def(), 0..6),
    )
        .prop_map(|(facts, defs)| {
            ExtractionResult {
                facts,
                defs,
                warnings: vec![],
            }
            .normalized()
        })
}

// ---------------------------------------------------------------------------
// Tree oracles

/// Independent recursion check: walk each node's root path.
pub fn expected_recursive_ids(tree: &CallTree) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for node in &tree.nodes {
        let mut ancestor = node.parent;
        while let Some(a) = ancestor {
            if tree.nodes[a].qualified.display == node.qualified.display {
                out.insert(node.id);
                break;
            }
            ancestor = tree.nodes[a].parent;
        }
    }
    out
}

pub fn check_tree_shape(tree: &CallTree) -> Result<(), String> {
    let mut seen_children = BTreeSet::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.id != i {
            return Err(format!("node {i} has id {}", node.id));
        }
        if node.recursive && !node.children.is_empty() {
            return Err(format!("recursive node {i} has children"));
        }
        for &c in &node.children {
            if c <= i || tree.nodes[c].parent != Some(i) || !seen_children.insert(c) {
                return Err(format!("bad edge {i} -> {c}"));
            }
        }
        if (i == 0) != node.parent.is_none() {
            return Err(format!("node {i} parent {:?}", node.parent));
        }
    }
    if seen_children.len() + 1 != tree.nodes.len() {
        return Err("not every non-root node has a parent edge".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// DOT grammar

/// Checks the DOT subset the emitter uses against the DOT grammar: a
/// `digraph` with an optional ID, node statements with attribute lists and
/// `->` edge statements. Returns (node ids, edges).
pub type DotShape = (Vec<String>, Vec<(String, String)>);

pub fn parse_dot(text: &str) -> Result<DotShape, String> {
    #[derive(Debug, PartialEq)]
    enum Tok {
        Id(String),
        Str(String),
        Sym(&'static str),
    }
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push('\\');
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&ch) => {
                        if ch == '\n' {
                            return Err("raw newline in string".into());
                        }
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            toks.push(Tok::Str(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push(Tok::Sym("->"));
            i += 2;
        } else if let Some(sym) = ["{", "}", "[", "]", ";", ",", "="]
            .iter()
            .find(|s| s.starts_with(c))
        {
            toks.push(Tok::Sym(sym));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Tok::Id(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    let mut p = 0;
    let expect = |p: &mut usize, t: Tok| -> Result<(), String> {
        if toks.get(*p) == Some(&t) {
            *p += 1;
            Ok(())
        } else {
            Err(format!(
                "expected {t:?} at token {p}, found {:?}",
                toks.get(*p)
            ))
        }
    };
    expect(&mut p, Tok::Id("digraph".into()))?;
    if matches!(toks.get(p), Some(Tok::Id(_)) | Some(Tok::Str(_))) {
        p += 1;
    }
    expect(&mut p, Tok::Sym("{"))?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    loop {
        match toks.get(p) {
            Some(Tok::Sym("}")) => {
                p += 1;
                break;
            }
            Some(Tok::Id(id)) => {
                let id = id.clone();
                p += 1;
                if toks.get(p) == Some(&Tok::Sym("->")) {
                    p += 1;
                    match toks.get(p) {
                        Some(Tok::Id(to)) => edges.push((id, to.clone())),
                        other => return Err(format!("bad edge target {other:?}")),
                    }
                    p += 1;
                } else {
                    nodes.push(id);
                    if toks.get(p) == Some(&Tok::Sym("[")) {
                        p += 1;
                        loop {
                            match toks.get(p) {
                                Some(Tok::Sym("]")) => {
                                    p += 1;
                                    break;
                                }
                                Some(Tok::Id(_)) => {
                                    p += 1;
                                    expect(&mut p, Tok::Sym("="))?;
                                    match toks.get(p) {
                                        Some(Tok::Id(_)) | Some(Tok::Str(_)) => p += 1,
                                        other => {
                                            return Err(format!("bad attribute value {other:?}"))
                                        }
                                    }
                                    if toks.get(p) == Some(&Tok::Sym(",")) {
                                        p += 1;
                                    }
                                }
                                other => return Err(format!("bad attribute list at {other:?}")),
                            }
                        }
                    }
                }
                if toks.get(p) == Some(&Tok::Sym(";")) {
                    p += 1;
                }
            }
            other => return Err(format!("unexpected statement start {other:?}")),
        }
    }
    if p != toks.len() {
        return Err("trailing tokens after graph".into());
    }
    Ok((nodes, edges))
}
