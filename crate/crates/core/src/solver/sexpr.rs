use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s) => Some(s),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(v) => Some(v),
            SExpr::Atom(_) => None,
        }
    }

    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(SExpr::atom)
    }

    pub fn mentions(&self, sym: &str) -> bool {
        match self {
            SExpr::Atom(s) => s == sym,
            SExpr::List(v) => v.iter().any(|e| e.mentions(sym)),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(s) => f.write_str(s),
            SExpr::List(v) => {
                f.write_str("(")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses a sequence of S-expressions. `;` comments are skipped, `|quoted|`
/// symbols are unquoted and string literals keep their quotes.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                if stack.len() < 2 {
                    return Err(format!("unbalanced ')' at offset {i}"));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(SExpr::List(done));
                i += 1;
            }
            '|' => {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i] != '|' {
                    i += 1;
                }
                if i >= chars.len() {
                    return Err("unterminated quoted symbol".into());
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(chars[start..i].iter().collect()));
                i += 1;
            }
            '"' => {
                let start = i;
                i += 1;
                loop {
                    if i >= chars.len() {
                        return Err("unterminated string".into());
                    }
                    if chars[i] == '"' {
                        // "" is an escaped quote inside SMT-LIB strings.
                        if chars.get(i + 1) == Some(&'"') {
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
                i += 1;
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(chars[start..i].iter().collect()));
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | ';' | '|' | '"')
                {
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".into());
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_lists_and_comments() {
        let v = parse_all("sat\n(\n ;; comment\n (define-fun |x'1| () Int (- 5)))").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], SExpr::Atom("sat".into()));
        assert_eq!(v[1].to_string(), "((define-fun x'1 () Int (- 5)))");
    }

    #[test]
    fn strings_keep_escaped_quotes() {
        let v = parse_all(r#"(error "line 1: ""x"" unknown")"#).unwrap();
        assert_eq!(v[0].list().unwrap()[1].atom().unwrap(), r#""line 1: ""x"" unknown""#);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
