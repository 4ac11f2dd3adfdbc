//! Python tokenization into logical lines. Comments are dropped, strings
//! kept verbatim as single tokens, bracketed and backslash continuations
//! joined.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Name,
    Str,
    Num,
    Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Tok {
    pub kind: Kind,
    pub text: String,
}

impl Tok {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == Kind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == Kind::Name && self.text == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LogicalLine {
    pub indent: usize,
    /// 1-based physical line where the logical line starts.
    pub line: usize,
    pub tokens: Vec<Tok>,
}

const STRING_PREFIXES: [&str; 8] = ["r", "u", "b", "f", "br", "rb", "fr", "rf"];

pub(crate) fn logical_lines(src: &str, warnings: &mut Vec<String>) -> Vec<LogicalLine> {
    let src = src.replace("\r\n", "\n");
    let chars: Vec<char> = src.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut cur: Option<LogicalLine> = None;
    let mut depth = 0usize;
    let mut line = 1;
    let mut at_line_start = true;
    let mut i = 0;

    while i < n {
        if at_line_start {
            at_line_start = false;
            let mut col = 0;
            while i < n && matches!(chars[i], ' ' | '\t' | '\x0c' | '\r') {
                col = match chars[i] {
                    '\t' => (col / 8 + 1) * 8,
                    ' ' => col + 1,
                    _ => col,
                };
                i += 1;
            }
            if i < n && !matches!(chars[i], '\n' | '#') && cur.is_none() {
                cur = Some(LogicalLine { indent: col, line, tokens: Vec::new() });
            }
            continue;
        }
        let c = chars[i];
        let mut push = |kind, text: String| {
            cur.get_or_insert_with(|| LogicalLine { indent: 0, line, tokens: Vec::new() })
                .tokens
                .push(Tok { kind, text })
        };
        match c {
            '\n' => {
                line += 1;
                i += 1;
                at_line_start = true;
                if depth == 0 {
                    out.extend(cur.take());
                }
            }
            ' ' | '\t' | '\x0c' | '\r' => i += 1,
            '#' => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                i += 2;
                line += 1;
            }
            '"' | '\'' => {
                let (end, lines) = scan_string(&chars, i, line, warnings);
                push(Kind::Str, chars[i..end].iter().collect());
                line += lines;
                i = end;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < n && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if i < n
                    && matches!(chars[i], '"' | '\'')
                    && STRING_PREFIXES.contains(&word.to_ascii_lowercase().as_str())
                {
                    let (end, lines) = scan_string(&chars, i, line, warnings);
                    push(Kind::Str, chars[start..end].iter().collect());
                    line += lines;
                    i = end;
                } else {
                    push(Kind::Name, word);
                }
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                while i < n && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                push(Kind::Num, chars[start..i].iter().collect());
            }
            _ => {
                match c {
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => depth = depth.saturating_sub(1),
                    _ => {}
                }
                push(Kind::Op, c.to_string());
                i += 1;
            }
        }
    }
    out.extend(cur);
    out
}

/// Returns the index one past the closing quote and the newlines consumed.
fn scan_string(chars: &[char], start: usize, line: usize, warnings: &mut Vec<String>) -> (usize, usize) {
    let q = chars[start];
    let triple = chars.get(start + 1) == Some(&q) && chars.get(start + 2) == Some(&q);
    let mut i = start + if triple { 3 } else { 1 };
    let mut lines = 0;
    while i < chars.len() {
        match chars[i] {
            '\\' => {
                if chars.get(i + 1) == Some(&'\n') {
                    lines += 1;
                }
                i += 2;
                continue;
            }
            '\n' if !triple => break,
            '\n' => lines += 1,
            c if c == q => {
                if !triple {
                    return (i + 1, lines);
                }
                if chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                    return (i + 3, lines);
                }
            }
            _ => {}
        }
        i += 1;
    }
    warnings.push(format!("line {line}: unterminated string"));
    (i.min(chars.len()), lines)
}
