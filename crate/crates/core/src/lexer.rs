//! Island tokenizer for textual AST dumps.
//!
//! Only lexemes matching the lexicon's patterns become tokens; every other
//! character is water and is dropped. Scanning never fails.

use crate::lexicon::{LexiconTable, TokenClass};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub class: TokenClass,
    /// Quote characters are stripped from TYPE_TEXT and quoted names; STRING
    /// lexemes keep their double quotes.
    pub lexeme: String,
    /// Character offset of the token's source span within the line.
    pub column: usize,
    /// Length of the source span in characters (quotes included).
    pub width: usize,
}

impl Token {
    pub fn end(&self) -> usize {
        self.column + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineEvent {
    pub depth: usize,
    pub tokens: Vec<Token>,
    pub raw: String,
}

const CONNECTORS: [char; 5] = [' ', '|', '`', '\'', '-'];

/// Removes ANSI escape sequences (CSI, OSC and two-byte escapes) and decodes
/// the rest as UTF-8, replacing invalid sequences.
pub fn strip_ansi(input: &[u8]) -> String {
    const ESC: u8 = 0x1b;
    const BEL: u8 = 0x07;
    let mut out = Vec::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        if input[i] != ESC {
            out.push(input[i]);
            i += 1;
            continue;
        }
        match input.get(i + 1) {
            // CSI: parameters and intermediates, then one final byte 0x40..=0x7e.
            Some(b'[') => {
                let mut j = i + 2;
                while j < input.len() && (0x20..=0x3f).contains(&input[j]) {
                    j += 1;
                }
                i = if j < input.len() && (0x40..=0x7e).contains(&input[j]) {
                    j + 1
                } else {
                    j
                };
            }
            // OSC: terminated by BEL or ST (ESC \).
            Some(b']') => {
                let mut j = i + 2;
                loop {
                    match input.get(j) {
                        None => break,
                        Some(&BEL) => {
                            j += 1;
                            break;
                        }
                        Some(&ESC) if input.get(j + 1) == Some(&b'\\') => {
                            j += 2;
                            break;
                        }
                        Some(_) => j += 1,
                    }
                }
                i = j;
            }
            Some(_) => i += 2,
            None => i += 1,
        }
    }
    match String::from_utf8(out) {
        Ok(s) => s,
        Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
    }
}

/// Width in characters of the leading tree-connector prefix.
pub fn prefix_width(line: &str) -> usize {
    line.chars().take_while(|c| CONNECTORS.contains(c)).count()
}

/// Tree depth implied by the connector prefix: two columns per level.
pub fn depth_of(line: &str) -> usize {
    prefix_width(line) / 2
}

fn is_hex_address(s: &str) -> bool {
    s.len() > 2 && s.starts_with("0x") && s[2..].bytes().all(|b| b.is_ascii_hexdigit())
}

/// Tokenizes one ANSI-free line. The connector prefix is water; the rest is
/// scanned left to right with priority double-quoted > single-quoted > word.
///
/// A single-quoted run directly after an address (`Var 0x55d 'cin'`) names the
/// referenced declaration and is emitted as a WORD rather than a type.
pub fn scan_line(line: &str, lexicon: &LexiconTable) -> LineEvent {
    let prefix_chars = prefix_width(line);
    let prefix_bytes: usize = line.chars().take(prefix_chars).map(char::len_utf8).sum();
    let body = &line[prefix_bytes..];

    let mut tokens: Vec<Token> = Vec::new();
    let mut char_pos = prefix_chars;
    let mut byte_pos = 0;
    for caps in lexicon.scanner.captures_iter(body) {
        let whole = caps.get(0).expect("group 0 always matches");
        if whole.as_str().is_empty() {
            continue;
        }
        char_pos += body[byte_pos..whole.start()].chars().count();
        byte_pos = whole.start();
        let text = whole.as_str();
        let width = text.chars().count();
        let (class, lexeme) = if caps.name("dq").is_some() {
            (TokenClass::String, text.to_string())
        } else if caps.name("sq").is_some() {
            let inner = &text[1..text.len() - 1];
            let after_address = tokens
                .last()
                .is_some_and(|t| t.class == TokenClass::Word && is_hex_address(&t.lexeme));
            let class = if after_address {
                TokenClass::Word
            } else {
                TokenClass::TypeText
            };
            (class, inner.to_string())
        } else {
            let class = lexicon.keyword(text).unwrap_or(TokenClass::Word);
            (class, text.to_string())
        };
        tokens.push(Token {
            class,
            lexeme,
            column: char_pos,
            width,
        });
    }
    LineEvent {
        depth: depth_of(line),
        tokens,
        raw: line.to_string(),
    }
}

/// Streams `LineEvent`s over a whole dump.
///
/// Depths are rebased so the first line carrying tokens sits at depth 0, and a
/// line never sits more than one level below the previous token-carrying line.
pub struct DumpLines<'a> {
    lines: std::str::Lines<'a>,
    lexicon: &'a LexiconTable,
    base: Option<usize>,
    last_depth: Option<usize>,
}

impl<'a> DumpLines<'a> {
    pub fn new(text: &'a str, lexicon: &'a LexiconTable) -> Self {
        Self {
            lines: text.lines(),
            lexicon,
            base: None,
            last_depth: None,
        }
    }
}

impl Iterator for DumpLines<'_> {
    type Item = LineEvent;

    fn next(&mut self) -> Option<LineEvent> {
        let line = self.lines.next()?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut event = scan_line(line, self.lexicon);
        if event.tokens.is_empty() {
            event.depth = event.depth.saturating_sub(self.base.unwrap_or(0));
            return Some(event);
        }
        let base = *self.base.get_or_insert(event.depth);
        let mut depth = event.depth.saturating_sub(base);
        if let Some(last) = self.last_depth {
            depth = depth.min(last + 1);
        } else {
            depth = 0;
        }
        self.last_depth = Some(depth);
        event.depth = depth;
        Some(event)
    }
}

/// strip_ansi, split into lines, scan each line.
pub fn scan_dump(input: &[u8], lexicon: &LexiconTable) -> Vec<LineEvent> {
    let text = strip_ansi(input);
    DumpLines::new(&text, lexicon).collect()
}

impl LineEvent {
    pub fn has_tokens(&self) -> bool {
        !self.tokens.is_empty()
    }

    /// The node-kind lexeme: the first token, when it starts right after the
    /// connector prefix.
    pub fn head(&self) -> Option<&Token> {
        let first = self.tokens.first()?;
        (first.column == prefix_width(&self.raw)).then_some(first)
    }

    /// Class of the node-kind keyword, if this line is land.
    pub fn land_class(&self) -> Option<TokenClass> {
        self.head()
            .map(|t| t.class)
            .filter(|c| *c != TokenClass::Word)
    }

    pub fn head_lexeme(&self) -> Option<&str> {
        self.head().map(|t| t.lexeme.as_str())
    }

    /// Character at a char offset of the raw line.
    fn char_at(&self, column: usize) -> Option<char> {
        self.raw.chars().nth(column)
    }

    fn is_quoted(&self, token: &Token) -> bool {
        self.char_at(token.column) == Some('\'')
    }

    /// Name of the declaration a reference line points at (`... Var 0x.. 'cin'`),
    /// together with the declaration kind word written before the address.
    pub fn referenced_decl(&self) -> Option<(Option<&str>, &str)> {
        let idx = self
            .tokens
            .iter()
            .position(|t| t.class == TokenClass::Word && self.is_quoted(t))?;
        let kind = idx
            .checked_sub(2)
            .map(|k| &self.tokens[k])
            .filter(|t| t.class == TokenClass::Word)
            .map(|t| t.lexeme.as_str());
        Some((kind, self.tokens[idx].lexeme.as_str()))
    }

    /// The lexeme written directly after `marker` in the raw text, e.g.
    /// `selector=` or `class=` on message-send lines.
    pub fn text_after(&self, marker: &str) -> Option<&str> {
        let chars: Vec<char> = self.raw.chars().collect();
        let marker: Vec<char> = marker.chars().collect();
        self.tokens.iter().skip(1).find_map(|t| {
            if t.column < marker.len() {
                return None;
            }
            (chars[t.column - marker.len()..t.column] == marker[..]).then_some(t.lexeme.as_str())
        })
    }

    /// The member name of a member-access line: the word after `->` or `.`.
    pub fn member_name(&self) -> Option<&str> {
        let chars: Vec<char> = self.raw.chars().collect();
        self.tokens.iter().skip(1).find_map(|t| {
            if t.class != TokenClass::Word || self.is_quoted(t) || t.column == 0 {
                return None;
            }
            let prev = chars[t.column - 1];
            let arrow = prev == '>' && t.column >= 2 && chars[t.column - 2] == '-';
            let dot = prev == '.' && (t.column < 2 || chars[t.column - 2] == ' ');
            (arrow || dot).then_some(t.lexeme.as_str())
        })
    }

    /// Quoted type annotations, each paired with its desugared form when the
    /// dump prints `'sugared':'desugared'`.
    pub fn type_groups(&self) -> Vec<(&str, Option<&str>)> {
        let chars: Vec<char> = self.raw.chars().collect();
        let mut groups = Vec::new();
        let mut i = 0;
        while i < self.tokens.len() {
            let t = &self.tokens[i];
            if t.class != TokenClass::TypeText {
                i += 1;
                continue;
            }
            let next = self.tokens.get(i + 1).filter(|n| {
                n.class == TokenClass::TypeText
                    && n.column == t.end() + 1
                    && chars.get(t.end()) == Some(&':')
            });
            match next {
                Some(n) => {
                    groups.push((t.lexeme.as_str(), Some(n.lexeme.as_str())));
                    i += 2;
                }
                None => {
                    groups.push((t.lexeme.as_str(), None));
                    i += 1;
                }
            }
        }
        groups
    }

    /// The node's own type: the first annotation, desugared when available.
    pub fn node_type(&self) -> Option<&str> {
        self.type_groups()
            .first()
            .map(|(sugared, desugared)| desugared.unwrap_or(sugared))
    }

    /// Last single-quoted run on the line (operator spellings, for instance).
    pub fn last_type_text(&self) -> Option<&str> {
        self.tokens
            .iter()
            .rev()
            .find(|t| t.class == TokenClass::TypeText)
            .map(|t| t.lexeme.as_str())
    }

    pub fn has_word(&self, word: &str) -> bool {
        self.tokens
            .iter()
            .any(|t| t.class == TokenClass::Word && t.lexeme == word && !self.is_quoted(t))
    }

    /// Unquoted words after the head, in order.
    pub fn plain_words(&self) -> impl Iterator<Item = &Token> {
        self.tokens
            .iter()
            .skip(1)
            .filter(|t| t.class == TokenClass::Word && !self.is_quoted(t))
    }

    pub fn string_literal(&self) -> Option<&str> {
        self.tokens
            .iter()
            .skip(1)
            .find(|t| t.class == TokenClass::String && t.lexeme.starts_with('"'))
            .map(|t| t.lexeme.as_str())
    }

    /// Declared name of a declaration line: the text right before its first
    /// type annotation (`col:5 main 'int ()'` gives `main`).
    pub fn declared_name(&self) -> Option<String> {
        let first_type = self
            .tokens
            .iter()
            .find(|t| t.class == TokenClass::TypeText)?;
        let before: String = self.raw.chars().take(first_type.column).collect();
        let name = before.split_whitespace().last()?;
        let location = name.starts_with("col:")
            || name.starts_with("line:")
            || name.starts_with('<')
            || is_hex_address(name)
            || (name.ends_with('>') && !name.starts_with("operator"));
        (!location).then(|| name.to_string())
    }
}
