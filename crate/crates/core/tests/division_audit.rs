//! The online solve path must be free of division so that it maps onto
//! targets without a fast divider.

fn strip_comments_and_strings(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '/' if chars.peek() == Some(&'/') => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        out.push('\n');
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                for c in chars.by_ref() {
                    if prev == '*' && c == '/' {
                        break;
                    }
                    prev = c;
                }
            }
            '"' => {
                let mut escaped = false;
                for c in chars.by_ref() {
                    if !escaped && c == '"' {
                        break;
                    }
                    escaped = !escaped && c == '\\';
                }
            }
            _ => out.push(c),
        }
    }
    out
}

#[test]
fn stripper_removes_comments_and_literals() {
    let s = strip_comments_and_strings("a / b // c / d\n\"x/y\" /* e / f */ g");
    assert_eq!(s.matches('/').count(), 1);
}

#[test]
fn solver_source_has_no_division() {
    let src = include_str!("../src/solver.rs");
    let code = strip_comments_and_strings(src);
    let hits: Vec<(usize, &str)> = code
        .lines()
        .enumerate()
        .filter(|(_, l)| l.contains('/'))
        .map(|(i, l)| (i + 1, l))
        .collect();
    assert!(hits.is_empty(), "division in solver.rs: {hits:?}");
}

#[test]
fn box_projection_has_no_division() {
    let src = include_str!("../src/projection.rs");
    let code = strip_comments_and_strings(src);
    let start = code.find("pub fn project_box").unwrap();
    let end = start + code[start..].find("\n}\n").unwrap();
    assert!(!code[start..end].contains('/'));
}
