//! Lexical checks over emitted sources: no heap allocation constructs and no
//! division outside the cone projection.

/// Replaces comments and string/char literals with spaces, keeping line
/// structure so reported line numbers stay meaningful.
pub fn strip_comments_and_strings(src: &str) -> String {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let next = bytes.get(i + 1).copied();
        if c == '/' && next == Some('/') {
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && next == Some('*') {
            i += 2;
            while i < bytes.len() && !(bytes[i] == '*' && bytes.get(i + 1) == Some(&'/')) {
                if bytes[i] == '\n' {
                    out.push('\n');
                }
                i += 1;
            }
            i += 2;
        } else if c == '"' {
            i += 1;
            while i < bytes.len() && bytes[i] != '"' {
                if bytes[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
            out.push_str("\"\"");
        } else if c == '\'' && bytes.get(i + 2) == Some(&'\'') {
            // single-char literal like '/'
            i += 3;
            out.push_str("' '");
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

const ALLOCATING: &[&str] = &[
    "Vec", "vec!", "Box", "String", "format!", "to_vec", "to_owned", "to_string", "collect", "Rc",
    "Arc", "HashMap", "BTreeMap", "alloc",
];

fn is_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// `(line, token)` for every allocation construct in `src`.
pub fn allocation_constructs(src: &str) -> Vec<(usize, String)> {
    let code = strip_comments_and_strings(src);
    let mut hits = Vec::new();
    for (ln, line) in code.lines().enumerate() {
        for tok in ALLOCATING {
            let word = tok.trim_end_matches('!');
            let mut from = 0;
            while let Some(pos) = line[from..].find(word) {
                let start = from + pos;
                let end = start + word.len();
                let before_ok = !line[..start].chars().next_back().is_some_and(is_ident);
                let after = line[end..].chars().next();
                let after_ok = if tok.ends_with('!') {
                    after == Some('!')
                } else {
                    !after.is_some_and(is_ident)
                };
                if before_ok && after_ok {
                    hits.push((ln + 1, tok.to_string()));
                }
                from = end;
            }
        }
    }
    hits
}

/// Lines (1-based) holding a `/` operator outside the body of `allowed_fn`.
pub fn divisions_outside(src: &str, allowed_fn: Option<&str>) -> Vec<usize> {
    let code = strip_comments_and_strings(src);
    let allowed = allowed_fn.and_then(|name| fn_body_span(&code, name));
    let mut hits = Vec::new();
    let mut offset = 0;
    for (ln, line) in code.split_inclusive('\n').enumerate() {
        for (i, c) in line.char_indices() {
            if c == '/' {
                let at = offset + i;
                if !allowed.is_some_and(|(s, e)| at >= s && at < e) {
                    hits.push(ln + 1);
                }
            }
        }
        offset += line.len();
    }
    hits.dedup();
    hits
}

/// Byte span of `fn name ... { ... }` in already-stripped code.
fn fn_body_span(code: &str, name: &str) -> Option<(usize, usize)> {
    let start = code.find(&format!("fn {name}"))?;
    let open = start + code[start..].find('{')?;
    let mut depth = 0usize;
    for (i, c) in code[open..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, open + i + 1));
                }
            }
            _ => {}
        }
    }
    None
}
