//! Water-tolerant call grammar over the line-event stream.
//!
//! A context stack keyed on node depth tracks the enclosing definition, open
//! call nodes and the argument subtrees being collected. A line at depth `d`
//! closes every frame at depth `>= d`; there are no explicit closers in a dump.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use crate::lexer::{strip_ansi, DumpLines, LineEvent};
use crate::lexicon::{LexiconTable, TokenClass};

pub const TOPLEVEL: &str = "<toplevel>";
pub const UNRESOLVED: &str = "<unresolved>";
pub const UNKNOWN_ARG: &str = "<unknown>";

/// Node kinds that mark a function body (as opposed to a bare declaration).
const BODY_NODES: [&str; 2] = ["CompoundStmt", "CXXTryStmt"];

/// Declaration kinds that hold a value rather than name a function; calling
/// through one of these is a call through a function pointer.
const VARIABLE_DECL_KINDS: [&str; 5] = ["Var", "ParmVar", "Field", "ImplicitParam", "Binding"];

const MAX_RENDER_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgKind {
    Variable,
    StringLit,
    NumberLit,
    Subscript,
    MemberVar,
    NestedCall,
    BinaryOp,
    UnaryOp,
}

impl ArgKind {
    pub const ALL: [ArgKind; 8] = [
        ArgKind::Variable,
        ArgKind::StringLit,
        ArgKind::NumberLit,
        ArgKind::Subscript,
        ArgKind::MemberVar,
        ArgKind::NestedCall,
        ArgKind::BinaryOp,
        ArgKind::UnaryOp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArgKind::Variable => "Variable",
            ArgKind::StringLit => "StringLit",
            ArgKind::NumberLit => "NumberLit",
            ArgKind::Subscript => "Subscript",
            ArgKind::MemberVar => "MemberVar",
            ArgKind::NestedCall => "NestedCall",
            ArgKind::BinaryOp => "BinaryOp",
            ArgKind::UnaryOp => "UnaryOp",
        }
    }
}

impl FromStr for ArgKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ArgKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown argument kind `{s}`"))
    }
}

/// One classified call argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgValue {
    pub kind: ArgKind,
    pub display: String,
    /// Owning object, for `MemberVar` only.
    pub object: Option<String>,
}

impl ArgValue {
    pub fn new(kind: ArgKind, display: impl Into<String>) -> Self {
        Self {
            kind,
            display: display.into(),
            object: None,
        }
    }

    pub fn member(object: impl Into<String>, member: &str) -> Self {
        let object = object.into();
        Self {
            kind: ArgKind::MemberVar,
            display: format!("{object}.{member}"),
            object: Some(object),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReceiverKind {
    ThisImplied,
    MemberVariable,
    NamedObject,
    None,
}

impl ReceiverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::ThisImplied => "this_implied",
            ReceiverKind::MemberVariable => "member_variable",
            ReceiverKind::NamedObject => "named_object",
            ReceiverKind::None => "none",
        }
    }
}

impl FromStr for ReceiverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            ReceiverKind::ThisImplied,
            ReceiverKind::MemberVariable,
            ReceiverKind::NamedObject,
            ReceiverKind::None,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("unknown receiver kind `{s}`"))
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One extracted call site.
///
/// Field order doubles as the canonical sort order of fact files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallFact {
    pub file: String,
    pub caller_scope: String,
    /// Position of this call within its enclosing definition, from 0.
    pub seq: usize,
    pub caller_class: Option<String>,
    pub callee: String,
    pub receiver_class: Option<String>,
    pub receiver_kind: ReceiverKind,
    pub args: Vec<ArgValue>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DefKind {
    Member,
    Free,
}

impl DefKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DefKind::Member => "member",
            DefKind::Free => "free",
        }
    }
}

impl FromStr for DefKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "member" => Ok(DefKind::Member),
            "free" => Ok(DefKind::Free),
            other => Err(format!("unknown definition kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionDef {
    pub file: String,
    pub name: String,
    pub class_name: Option<String>,
    pub kind: DefKind,
}

impl FunctionDef {
    pub fn new(file: &str, name: &str, class_name: Option<&str>) -> Self {
        Self {
            file: file.to_string(),
            name: name.to_string(),
            class_name: class_name.map(str::to_string),
            kind: if class_name.is_some() {
                DefKind::Member
            } else {
                DefKind::Free
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionResult {
    pub facts: Vec<CallFact>,
    pub defs: Vec<FunctionDef>,
    pub warnings: Vec<String>,
}

impl ExtractionResult {
    /// Facts and definitions in fact-file order, warnings rebuilt to match.
    pub fn normalized(&self) -> Self {
        let mut facts = self.facts.clone();
        facts.sort();
        let mut defs = self.defs.clone();
        defs.sort();
        let warnings = warnings_from_facts(&facts);
        Self {
            facts,
            defs,
            warnings,
        }
    }
}

/// Result-level warning list: one entry per fact carrying a warning.
pub fn warnings_from_facts(facts: &[CallFact]) -> Vec<String> {
    facts
        .iter()
        .filter_map(|f| {
            f.warning
                .as_ref()
                .map(|w| format!("{}: {w}", f.caller_scope))
        })
        .collect()
}

/// Reduces a printed type to a bare class name: qualifiers, pointer and
/// reference markers, template arguments and namespaces are dropped.
///
/// Returns `None` for builtin, function, array and dependent types.
pub fn class_of_type(ty: &str) -> Option<String> {
    let mut t = ty.trim();
    if t.is_empty() || t.starts_with('<') || t.contains('(') || t.contains('[') {
        return None;
    }
    loop {
        let before = t;
        t = t.trim_end_matches(['*', '&', ' ']);
        for suffix in ["const", "volatile", "__restrict"] {
            if let Some(rest) = t.strip_suffix(suffix) {
                if rest.ends_with([' ', '*', '&']) {
                    t = rest;
                }
            }
        }
        for prefix in [
            "const ",
            "volatile ",
            "class ",
            "struct ",
            "union ",
            "enum ",
        ] {
            t = t.strip_prefix(prefix).unwrap_or(t);
        }
        if t == before {
            break;
        }
    }
    let mut bare = String::with_capacity(t.len());
    let mut nesting = 0usize;
    for c in t.chars() {
        match c {
            '<' => nesting += 1,
            '>' => nesting = nesting.saturating_sub(1),
            _ if nesting == 0 => bare.push(c),
            _ => {}
        }
    }
    let name = bare.rsplit("::").next().unwrap_or("").trim();
    let builtin = [
        "void", "bool", "char", "short", "int", "long", "float", "double", "unsigned", "signed",
        "wchar_t", "size_t", "id", "SEL", "Class", "auto",
    ];
    let identifier = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_alphanumeric() || c == '_');
    (identifier && !builtin.contains(&name)).then(|| name.to_string())
}

/// One line of a collected subtree, with the fact slot it opened (if it was a
/// call line).
#[derive(Debug, Clone)]
struct SubLine {
    depth: usize,
    line: Rc<LineEvent>,
    call_slot: Option<usize>,
}

/// A node-indexed view of one collected subtree (an argument, a callee
/// expression or a receiver expression). Node 0 is the subtree root.
#[derive(Debug, Clone)]
pub struct Subtree {
    lines: Vec<SubLine>,
    children: Vec<Vec<usize>>,
}

impl Subtree {
    fn build(lines: Vec<SubLine>) -> Self {
        let mut children = vec![Vec::new(); lines.len()];
        let mut open: Vec<usize> = Vec::new();
        for (i, l) in lines.iter().enumerate() {
            while open.last().is_some_and(|&p| lines[p].depth >= l.depth) {
                open.pop();
            }
            if let Some(&parent) = open.last() {
                children[parent].push(i);
            }
            open.push(i);
        }
        Self { lines, children }
    }

    /// Builds a subtree from already-scanned lines; the first line is the root.
    pub fn from_lines(lines: impl IntoIterator<Item = LineEvent>) -> Self {
        Self::build(
            lines
                .into_iter()
                .map(|l| SubLine {
                    depth: l.depth,
                    line: Rc::new(l),
                    call_slot: None,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn line(&self, node: usize) -> &LineEvent {
        &self.lines[node].line
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Nearest land node on the first-child chain starting at `node`.
    /// Water wrappers (implicit casts, parentheses, temporaries) are skipped.
    fn effective(&self, node: usize) -> Option<usize> {
        let mut cur = node;
        loop {
            if self.line(cur).land_class().is_some() {
                return Some(cur);
            }
            cur = *self.children[cur].first()?;
        }
    }

    /// First land node in preorder.
    fn first_land(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.line(i).land_class().is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receiver {
    pub class: Option<String>,
    pub kind: ReceiverKind,
    pub warning: Option<String>,
}

impl Receiver {
    pub fn none() -> Self {
        Self {
            class: None,
            kind: ReceiverKind::None,
            warning: None,
        }
    }
}

/// Class and kind of the object a member call is made on.
///
/// `object` is the object-expression node (the callee member expression's
/// first child). The kind comes from the first land node on its first-child
/// chain; the class from the object expression's printed type, which the
/// compiler has already resolved (iterators print their pointee class).
pub fn resolve_receiver_class(tree: &Subtree, object: Option<usize>) -> Receiver {
    let Some(object) = object else {
        return Receiver::none();
    };
    let land = tree.effective(object);
    let kind = match land.and_then(|i| tree.line(i).land_class()) {
        Some(TokenClass::ThisRef) => ReceiverKind::ThisImplied,
        Some(TokenClass::MemberRef) => ReceiverKind::MemberVariable,
        _ => ReceiverKind::NamedObject,
    };
    let class = if kind == ReceiverKind::ThisImplied {
        land.and_then(|i| tree.line(i).node_type())
            .and_then(class_of_type)
    } else {
        tree.line(object)
            .node_type()
            .and_then(class_of_type)
            .or_else(|| {
                land.and_then(|i| tree.line(i).node_type())
                    .and_then(class_of_type)
            })
    };
    match class {
        Some(class) => Receiver {
            class: Some(class),
            kind,
            warning: None,
        },
        None => Receiver {
            class: None,
            kind: ReceiverKind::None,
            warning: Some("receiver class could not be determined".to_string()),
        },
    }
}

/// Classifies one argument subtree into the eight argument kinds.
///
/// `nested_callee` maps the fact slot of a call found inside the argument to
/// that call's callee name. Unclassifiable subtrees yield
/// `Variable("<unknown>")` plus a warning.
pub fn classify_argument(
    tree: &Subtree,
    nested_callee: &dyn Fn(usize) -> Option<String>,
) -> (ArgValue, Option<String>) {
    let mut unknown = false;
    let value = if tree.is_empty() {
        None
    } else {
        render(tree, 0, nested_callee, &mut unknown, 0)
    };
    match value {
        Some(v) if !unknown => (v, None),
        Some(v) => (
            v,
            Some("argument contains an unrecognized expression".to_string()),
        ),
        None => (
            ArgValue::new(ArgKind::Variable, UNKNOWN_ARG),
            Some("unclassifiable argument".to_string()),
        ),
    }
}

fn render(
    tree: &Subtree,
    node: usize,
    nested_callee: &dyn Fn(usize) -> Option<String>,
    unknown: &mut bool,
    level: usize,
) -> Option<ArgValue> {
    if level > MAX_RENDER_DEPTH {
        return None;
    }
    let node = tree.effective(node)?;
    let line = tree.line(node);
    let kids = tree.children(node);
    let mut operand = |i: usize| -> String {
        match kids
            .get(i)
            .and_then(|&c| render(tree, c, nested_callee, unknown, level + 1))
        {
            Some(v) => v.display,
            None => {
                *unknown = true;
                UNKNOWN_ARG.to_string()
            }
        }
    };
    let value = match line.land_class()? {
        TokenClass::Argument => {
            let name = line.referenced_decl().map(|(_, n)| n.to_string())?;
            ArgValue::new(ArgKind::Variable, name)
        }
        TokenClass::ThisRef => ArgValue::new(ArgKind::Variable, "this"),
        TokenClass::String => ArgValue::new(ArgKind::StringLit, line.string_literal()?),
        TokenClass::Number => {
            let value = &line.plain_words().last()?.lexeme;
            ArgValue::new(ArgKind::NumberLit, number_display(value))
        }
        TokenClass::Subscript => {
            let base = operand(0);
            let index = operand(1);
            ArgValue::new(ArgKind::Subscript, format!("{base}[{index}]"))
        }
        TokenClass::MemberRef => {
            let member = line.member_name()?.to_string();
            ArgValue::member(operand(0), &member)
        }
        TokenClass::Call | TokenClass::MemberCall => {
            let callee = tree.lines[node]
                .call_slot
                .and_then(nested_callee)
                .unwrap_or_else(|| UNRESOLVED.to_string());
            ArgValue::new(ArgKind::NestedCall, format!("{callee}(...)"))
        }
        TokenClass::BinaryOp => {
            let op = line.last_type_text().unwrap_or("?").to_string();
            let lhs = operand(0);
            let rhs = operand(1);
            ArgValue::new(ArgKind::BinaryOp, format!("{lhs}{op}{rhs}"))
        }
        TokenClass::UnaryOp => {
            let op = line.last_type_text().unwrap_or("?").to_string();
            let inner = operand(0);
            let display = if line.has_word("postfix") {
                format!("{inner}{op}")
            } else {
                format!("{op}{inner}")
            };
            ArgValue::new(ArgKind::UnaryOp, display)
        }
        _ => return None,
    };
    Some(value)
}

/// Integer literals print as written; floating literals, which the dump
/// shows in exponent form (`3.140000e+00`), print in shortest form (`3.14`).
fn number_display(lexeme: &str) -> String {
    let floating = lexeme.contains(['.', 'e', 'E']) && !lexeme.starts_with("0x");
    match lexeme.parse::<f64>() {
        Ok(v) if floating && v.is_finite() => format!("{v:?}"),
        _ => lexeme.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CallLayout {
    /// Callee expression first, then arguments.
    CalleeFirst,
    /// Receiver expression first, then arguments (message sends).
    ReceiverFirst,
    /// Every child is an argument (class message sends).
    ArgsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotRole {
    Callee,
    Receiver,
    Argument,
}

impl CallLayout {
    fn role(self, child: usize) -> SlotRole {
        match (self, child) {
            (CallLayout::CalleeFirst, 0) => SlotRole::Callee,
            (CallLayout::ReceiverFirst, 0) => SlotRole::Receiver,
            _ => SlotRole::Argument,
        }
    }
}

#[derive(Debug)]
enum Frame {
    Class {
        depth: usize,
        name: Option<String>,
    },
    Function {
        depth: usize,
        scope: usize,
        def: usize,
        has_body: bool,
        emitted: bool,
    },
    Call {
        depth: usize,
        fact: usize,
        children: usize,
        layout: CallLayout,
    },
    Slot {
        depth: usize,
        fact: usize,
        role: SlotRole,
        lines: Vec<SubLine>,
    },
}

impl Frame {
    fn depth(&self) -> usize {
        match self {
            Frame::Class { depth, .. }
            | Frame::Function { depth, .. }
            | Frame::Call { depth, .. }
            | Frame::Slot { depth, .. } => *depth,
        }
    }
}

#[derive(Debug)]
struct Scope {
    name: String,
    class: Option<String>,
}

#[derive(Debug)]
struct PendingFact {
    scope: usize,
    class_hint: Option<String>,
    member_call: bool,
    callee: Option<String>,
    receiver: Receiver,
    args: Vec<ArgValue>,
    warnings: Vec<String>,
}

/// Streaming extractor for one dump file.
pub struct Extractor {
    file: String,
    stack: Vec<Frame>,
    scopes: Vec<Scope>,
    /// (scope, keep) per definition line, in dump order.
    defs: Vec<(usize, bool)>,
    facts: Vec<PendingFact>,
    records: HashMap<String, String>,
}

impl Extractor {
    pub fn new(file: impl Into<String>) -> Self {
        Self {
            file: file.into(),
            stack: Vec::new(),
            scopes: vec![Scope {
                name: TOPLEVEL.to_string(),
                class: None,
            }],
            defs: Vec::new(),
            facts: Vec::new(),
            records: HashMap::new(),
        }
    }

    pub fn feed(&mut self, event: LineEvent) {
        if !event.has_tokens() {
            return;
        }
        let depth = event.depth;
        while self.stack.last().is_some_and(|f| f.depth() >= depth) {
            let frame = self.stack.pop().expect("checked non-empty");
            self.finish(frame);
        }

        match self.stack.last_mut() {
            Some(Frame::Call {
                fact,
                children,
                layout,
                ..
            }) => {
                let role = layout.role(*children);
                *children += 1;
                let fact = *fact;
                self.stack.push(Frame::Slot {
                    depth,
                    fact,
                    role,
                    lines: Vec::new(),
                });
            }
            Some(Frame::Function {
                depth: fdepth,
                has_body,
                ..
            }) if depth == *fdepth + 1
                && event.head_lexeme().is_some_and(|h| BODY_NODES.contains(&h)) =>
            {
                *has_body = true;
            }
            _ => {}
        }

        let line = Rc::new(event);
        for frame in &mut self.stack {
            if let Frame::Slot { lines, .. } = frame {
                lines.push(SubLine {
                    depth,
                    line: Rc::clone(&line),
                    call_slot: None,
                });
            }
        }

        match line.land_class() {
            Some(class @ (TokenClass::Call | TokenClass::MemberCall)) => {
                let fact = self.open_call(&line, class, depth);
                for frame in &mut self.stack {
                    if let Frame::Slot { lines, .. } = frame {
                        if let Some(last) = lines.last_mut() {
                            last.call_slot = Some(fact);
                        }
                    }
                }
            }
            Some(class @ (TokenClass::FuncDef | TokenClass::MethodDef)) => {
                self.open_function(&line, class, depth);
            }
            Some(TokenClass::ClassDef) => self.open_class(&line, depth),
            Some(TokenClass::ThisRef) => self.observe_this(&line),
            _ => {}
        }
    }

    fn current_scope(&mut self) -> (usize, Option<String>) {
        let mut class_hint = None;
        for frame in self.stack.iter_mut().rev() {
            match frame {
                Frame::Function { scope, emitted, .. } => {
                    *emitted = true;
                    return (*scope, None);
                }
                Frame::Class { name, .. } if class_hint.is_none() => {
                    class_hint = name.clone();
                }
                _ => {}
            }
        }
        (0, class_hint)
    }

    fn open_call(&mut self, line: &LineEvent, class: TokenClass, depth: usize) -> usize {
        let (scope, class_hint) = self.current_scope();
        let mut pending = PendingFact {
            scope,
            class_hint,
            member_call: class == TokenClass::MemberCall,
            callee: None,
            receiver: Receiver::none(),
            args: Vec::new(),
            warnings: Vec::new(),
        };
        let mut layout = CallLayout::CalleeFirst;
        if class == TokenClass::MemberCall {
            if let Some(selector) = line.text_after("selector=") {
                pending.callee = Some(selector.to_string());
                layout = CallLayout::ReceiverFirst;
                if let Some(target) = line.text_after("class=") {
                    layout = CallLayout::ArgsOnly;
                    pending.receiver = match class_of_type(target) {
                        Some(c) => Receiver {
                            class: Some(c),
                            kind: ReceiverKind::NamedObject,
                            warning: None,
                        },
                        None => Receiver::none(),
                    };
                }
            }
        }
        let fact = self.facts.len();
        self.facts.push(pending);
        self.stack.push(Frame::Call {
            depth,
            fact,
            children: 0,
            layout,
        });
        fact
    }

    fn open_function(&mut self, line: &LineEvent, class: TokenClass, depth: usize) {
        let name = line
            .declared_name()
            .unwrap_or_else(|| "<anonymous>".to_string());
        let owner = if class == TokenClass::MethodDef {
            let parent = line
                .plain_words()
                .skip_while(|t| t.lexeme != "parent")
                .nth(1)
                .and_then(|addr| self.records.get(&addr.lexeme).cloned());
            parent.or_else(|| {
                self.stack.iter().rev().find_map(|f| match f {
                    Frame::Class { name, .. } => name.clone(),
                    _ => None,
                })
            })
        } else {
            None
        };
        let scope = self.scopes.len();
        self.scopes.push(Scope { name, class: owner });
        let def = self.defs.len();
        self.defs.push((scope, false));
        self.stack.push(Frame::Function {
            depth,
            scope,
            def,
            has_body: false,
            emitted: false,
        });
    }

    fn open_class(&mut self, line: &LineEvent, depth: usize) {
        let words: Vec<&str> = line.plain_words().map(|t| t.lexeme.as_str()).collect();
        let tagged = words
            .iter()
            .position(|w| matches!(*w, "class" | "struct" | "union"));
        // Records name the class after their tag keyword (anonymous records
        // have none); other class-like declarations end with the bare name.
        let name = match tagged {
            Some(i) => words.get(i + 1).filter(|w| **w != "definition").copied(),
            None => words
                .last()
                .copied()
                .filter(|w| words.len() > 2 && !w.starts_with("line:") && !w.starts_with("col:")),
        }
        .map(str::to_string);
        if let (Some(addr), Some(name)) = (line.tokens.get(1), &name) {
            if addr.lexeme.starts_with("0x") {
                self.records.insert(addr.lexeme.clone(), name.clone());
            }
        }
        self.stack.push(Frame::Class { depth, name });
    }

    /// A `this` expression reveals the enclosing class when the definition
    /// line did not.
    fn observe_this(&mut self, line: &LineEvent) {
        let Some(class) = line.node_type().and_then(class_of_type) else {
            return;
        };
        let mut inside_class = false;
        for frame in self.stack.iter().rev() {
            match frame {
                Frame::Function { scope, .. } => {
                    let scope = &mut self.scopes[*scope];
                    if scope.class.is_none() {
                        scope.class = Some(class);
                    }
                    return;
                }
                Frame::Class { .. } => inside_class = true,
                _ => {}
            }
        }
        if !inside_class && self.scopes[0].class.is_none() {
            self.scopes[0].class = Some(class);
        }
    }

    fn finish(&mut self, frame: Frame) {
        match frame {
            Frame::Slot {
                fact, role, lines, ..
            } => {
                let tree = Subtree::build(lines);
                match role {
                    SlotRole::Callee => self.resolve_callee(fact, &tree),
                    SlotRole::Receiver => {
                        let receiver = resolve_receiver_class(&tree, Some(0));
                        self.facts[fact].receiver = receiver;
                    }
                    SlotRole::Argument => {
                        let facts = &self.facts;
                        let lookup = |slot: usize| facts.get(slot).and_then(|f| f.callee.clone());
                        let (arg, warning) = classify_argument(&tree, &lookup);
                        let pending = &mut self.facts[fact];
                        pending.args.push(arg);
                        if let Some(w) = warning {
                            pending
                                .warnings
                                .push(format!("argument {}: {w}", pending.args.len()));
                        }
                    }
                }
            }
            Frame::Call { fact, .. } => {
                let pending = &mut self.facts[fact];
                if pending.callee.is_none() {
                    pending.callee = Some(UNRESOLVED.to_string());
                    pending
                        .warnings
                        .push("call has no callee expression".to_string());
                }
            }
            Frame::Function {
                def,
                has_body,
                emitted,
                ..
            } => {
                self.defs[def].1 = has_body || emitted;
            }
            Frame::Class { .. } => {}
        }
    }

    fn resolve_callee(&mut self, fact: usize, tree: &Subtree) {
        let pending = &mut self.facts[fact];
        let land = tree.first_land();
        let land_class = land.and_then(|i| tree.line(i).land_class());
        let unresolved = |pending: &mut PendingFact, why: String| {
            pending.callee = Some(UNRESOLVED.to_string());
            pending.warnings.push(why);
        };
        match (land_class, land) {
            (Some(TokenClass::MemberRef), Some(i)) if pending.member_call => {
                match tree.line(i).member_name() {
                    Some(name) => {
                        pending.callee = Some(name.to_string());
                        let object = tree.children(i).first().copied();
                        let receiver = resolve_receiver_class(tree, object);
                        if let Some(w) = &receiver.warning {
                            pending.warnings.push(w.clone());
                        }
                        pending.receiver = receiver;
                    }
                    None => unresolved(pending, "member call without a member name".into()),
                }
            }
            (Some(TokenClass::Argument), Some(i)) => match tree.line(i).referenced_decl() {
                Some((Some(kind), name)) if VARIABLE_DECL_KINDS.contains(&kind) => unresolved(
                    pending,
                    format!(
                        "call through function pointer `{name}`: target name cannot be resolved"
                    ),
                ),
                Some((_, name)) => pending.callee = Some(name.to_string()),
                None => unresolved(pending, "callee reference has no name".into()),
            },
            (Some(TokenClass::MemberRef), Some(i)) => {
                let name = tree.line(i).member_name().unwrap_or("?").to_string();
                unresolved(
                    pending,
                    format!("call through function pointer member `{name}`: target name cannot be resolved"),
                )
            }
            (Some(_), _) => unresolved(
                pending,
                "call through a computed function pointer: target name cannot be resolved".into(),
            ),
            (None, _) => unresolved(pending, "callee expression not recognized".into()),
        }
    }

    pub fn finish_all(mut self) -> ExtractionResult {
        while let Some(frame) = self.stack.pop() {
            self.finish(frame);
        }
        let mut counters: HashMap<(String, Option<String>), usize> = HashMap::new();
        let facts: Vec<CallFact> = self
            .facts
            .into_iter()
            .map(|p| {
                let scope = &self.scopes[p.scope];
                let caller_class =
                    scope
                        .class
                        .clone()
                        .or(if p.scope == 0 { p.class_hint } else { None });
                let counter = counters
                    .entry((scope.name.clone(), caller_class.clone()))
                    .or_default();
                let seq = *counter;
                *counter += 1;
                CallFact {
                    file: self.file.clone(),
                    caller_scope: scope.name.clone(),
                    seq,
                    caller_class,
                    callee: p.callee.unwrap_or_else(|| UNRESOLVED.to_string()),
                    receiver_class: p.receiver.class,
                    receiver_kind: p.receiver.kind,
                    args: p.args,
                    warning: (!p.warnings.is_empty()).then(|| p.warnings.join("; ")),
                }
            })
            .collect();
        let defs = self
            .defs
            .iter()
            .filter(|(_, keep)| *keep)
            .map(|&(scope, _)| {
                let scope = &self.scopes[scope];
                FunctionDef::new(&self.file, &scope.name, scope.class.as_deref())
            })
            .collect();
        let warnings = warnings_from_facts(&facts);
        ExtractionResult {
            facts,
            defs,
            warnings,
        }
    }
}

/// Extracts call facts and definitions from one dump. Never fails.
pub fn extract_facts(dump: &[u8], file: &str, lexicon: &LexiconTable) -> ExtractionResult {
    let text = strip_ansi(dump);
    extract_events(DumpLines::new(&text, lexicon), file)
}

pub fn extract_events(events: impl IntoIterator<Item = LineEvent>, file: &str) -> ExtractionResult {
    let mut extractor = Extractor::new(file);
    for event in events {
        extractor.feed(event);
    }
    extractor.finish_all()
}
