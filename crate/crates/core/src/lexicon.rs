//! Keyword tables that decide which AST-dump node kinds are land.
//!
//! A dialect file is plain text: one `keyword<TAB>TOKENCLASS` pair per line,
//! blank lines and `#` comments ignored. Everything the table does not list is
//! water to the grammar.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use thiserror::Error;

const CPP_TABLE: &str = include_str!("../dialects/cpp.lex");
const OBJC_TABLE: &str = include_str!("../dialects/objc.lex");

/// Identifiers may carry `_ : ~ < >` after the first character so qualified
/// names and operator spellings stay whole. Numeric runs (addresses, literal
/// values, exponents) are words too.
pub const DEFAULT_WORD_PATTERN: &str =
    r"[0-9](?:[eE][+-][0-9]+|[0-9A-Za-z_.])*|[A-Za-z_~][A-Za-z0-9_:~<>]*";
pub const DEFAULT_DQUOTE_PATTERN: &str = r#""(?:[^"\\]|\\.)*""#;
pub const DEFAULT_SQUOTE_PATTERN: &str = r"'[^']+'";

/// Class of a non-water lexeme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenClass {
    Call,
    MemberCall,
    Argument,
    MemberRef,
    ThisRef,
    FuncDef,
    MethodDef,
    ClassDef,
    Subscript,
    BinaryOp,
    UnaryOp,
    Number,
    /// Double-quoted literal text.
    String,
    /// Single-quoted type annotation.
    TypeText,
    Word,
}

impl TokenClass {
    pub const ALL: [TokenClass; 15] = [
        TokenClass::Call,
        TokenClass::MemberCall,
        TokenClass::Argument,
        TokenClass::MemberRef,
        TokenClass::ThisRef,
        TokenClass::FuncDef,
        TokenClass::MethodDef,
        TokenClass::ClassDef,
        TokenClass::Subscript,
        TokenClass::BinaryOp,
        TokenClass::UnaryOp,
        TokenClass::Number,
        TokenClass::String,
        TokenClass::TypeText,
        TokenClass::Word,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Call => "CALL",
            TokenClass::MemberCall => "MEMBER_CALL",
            TokenClass::Argument => "ARGUMENT",
            TokenClass::MemberRef => "MEMBER_REF",
            TokenClass::ThisRef => "THIS_REF",
            TokenClass::FuncDef => "FUNC_DEF",
            TokenClass::MethodDef => "METHOD_DEF",
            TokenClass::ClassDef => "CLASS_DEF",
            TokenClass::Subscript => "SUBSCRIPT",
            TokenClass::BinaryOp => "BINARY_OP",
            TokenClass::UnaryOp => "UNARY_OP",
            TokenClass::Number => "NUMBER",
            TokenClass::String => "STRING",
            TokenClass::TypeText => "TYPE_TEXT",
            TokenClass::Word => "WORD",
        }
    }

    pub fn is_call(self) -> bool {
        matches!(self, TokenClass::Call | TokenClass::MemberCall)
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenClass {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TokenClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LexiconError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("unknown dialect `{0}` (built-in dialects: cpp, objc)")]
    UnknownDialect(String),
    #[error("unknown token class `{0}`")]
    UnknownClass(String),
    #[error("{source_name}:{line}: {detail}")]
    Syntax {
        source_name: String,
        line: usize,
        detail: String,
    },
    #[error("keyword `{0}` does not match the word pattern")]
    KeywordShape(String),
    #[error("invalid pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An immutable keyword table plus the three lexeme patterns.
#[derive(Debug, Clone)]
pub struct LexiconTable {
    dialect_name: String,
    keyword_map: BTreeMap<String, TokenClass>,
    word_pattern: String,
    dquote_pattern: String,
    squote_pattern: String,
    pub(crate) scanner: Regex,
}

impl LexiconTable {
    pub fn new(
        dialect_name: impl Into<String>,
        keyword_map: BTreeMap<String, TokenClass>,
    ) -> Result<Self, LexiconError> {
        Self::with_patterns(
            dialect_name,
            keyword_map,
            DEFAULT_WORD_PATTERN,
            DEFAULT_DQUOTE_PATTERN,
            DEFAULT_SQUOTE_PATTERN,
        )
    }

    pub fn with_patterns(
        dialect_name: impl Into<String>,
        keyword_map: BTreeMap<String, TokenClass>,
        word_pattern: &str,
        dquote_pattern: &str,
        squote_pattern: &str,
    ) -> Result<Self, LexiconError> {
        for (keyword, class) in &keyword_map {
            if matches!(class, TokenClass::Word | TokenClass::TypeText) {
                return Err(LexiconError::UnknownClass(format!(
                    "{class} cannot be assigned to keyword `{keyword}`"
                )));
            }
        }
        let word_only = Regex::new(&format!("^(?:{word_pattern})$"))?;
        if let Some(bad) = keyword_map.keys().find(|k| !word_only.is_match(k)) {
            return Err(LexiconError::KeywordShape(bad.clone()));
        }
        // Alternation order is the lexer's priority order.
        let scanner = Regex::new(&format!(
            "(?P<dq>{dquote_pattern})|(?P<sq>{squote_pattern})|(?P<word>{word_pattern})"
        ))?;
        Ok(Self {
            dialect_name: dialect_name.into(),
            keyword_map,
            word_pattern: word_pattern.to_string(),
            dquote_pattern: dquote_pattern.to_string(),
            squote_pattern: squote_pattern.to_string(),
            scanner,
        })
    }

    /// Parses a dialect file body.
    pub fn parse(dialect_name: &str, text: &str) -> Result<Self, LexiconError> {
        let mut keyword_map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let syntax = |detail: String| LexiconError::Syntax {
                source_name: dialect_name.to_string(),
                line: idx + 1,
                detail,
            };
            let (keyword, class) = line
                .split_once('\t')
                .ok_or_else(|| syntax("expected `keyword<TAB>TOKENCLASS`".into()))?;
            let keyword = keyword.trim();
            if keyword.is_empty() {
                return Err(syntax("empty keyword".into()));
            }
            let class: TokenClass = class
                .trim()
                .parse()
                .map_err(|e: LexiconError| syntax(e.to_string()))?;
            if keyword_map.insert(keyword.to_string(), class).is_some() {
                return Err(syntax(format!("duplicate keyword `{keyword}`")));
            }
        }
        Self::new(dialect_name, keyword_map)
    }

    pub fn builtin(name: &str) -> Result<Self, LexiconError> {
        match name {
            "cpp" => Self::parse("cpp", CPP_TABLE),
            "objc" => Self::parse("objc", OBJC_TABLE),
            other => Err(LexiconError::UnknownDialect(other.to_string())),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".to_string());
        Self::parse(&name, &text)
    }

    /// A built-in dialect name, or a path to a dialect file.
    pub fn resolve(name_or_path: &str) -> Result<Self, LexiconError> {
        match Self::builtin(name_or_path) {
            Err(LexiconError::UnknownDialect(_)) if Path::new(name_or_path).is_file() => {
                Self::from_file(Path::new(name_or_path))
            }
            other => other,
        }
    }

    pub fn dialect_name(&self) -> &str {
        &self.dialect_name
    }

    /// Exact, case-sensitive lookup.
    pub fn keyword(&self, lexeme: &str) -> Option<TokenClass> {
        self.keyword_map.get(lexeme).copied()
    }

    pub fn keywords(&self) -> impl Iterator<Item = (&str, TokenClass)> {
        self.keyword_map.iter().map(|(k, c)| (k.as_str(), *c))
    }

    pub fn word_pattern(&self) -> &str {
        &self.word_pattern
    }

    pub fn dquote_pattern(&self) -> &str {
        &self.dquote_pattern
    }

    pub fn squote_pattern(&self) -> &str {
        &self.squote_pattern
    }
}
