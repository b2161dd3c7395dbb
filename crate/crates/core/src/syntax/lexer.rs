use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Lowercase-initial name.
    Ident(String),
    /// Uppercase- or underscore-initial name, primes allowed at the end.
    Var(String),
    Int(i64),
    Float(f64, String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Bar,
    Semi,
    Colon,
    Question,
    Plus,
    Star,
    Caret,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    PlusEq,
    MinEq,
    MaxEq,
    Turnstile,
    Implied,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(_, s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Bar => "|",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Question => "?",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Caret => "^",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::PlusEq => "+=",
            Tok::MinEq => "min=",
            Tok::MaxEq => "max=",
            Tok::Turnstile => ":-",
            Tok::Implied => "<==",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let peek = |k: usize| chars.get(i + k).copied();
        let number_start =
            c.is_ascii_digit() || (c == '-' && peek(1).is_some_and(|d| d.is_ascii_digit()));
        let tok = if c == '∞' {
            advance!(1);
            Tok::Ident("inf".to_string())
        } else if number_start {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut is_float = false;
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                is_float = true;
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    is_float = true;
                    j = k;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let lit: String = chars[i..j].iter().collect();
            let n = j - i;
            let tok = if is_float {
                let value = lit.parse::<f64>().map_err(|_| ParseError {
                    line: start_line,
                    col: start_col,
                    message: format!("malformed number `{lit}`"),
                })?;
                Tok::Float(value, lit)
            } else {
                let value = lit.parse::<i64>().map_err(|_| ParseError {
                    line: start_line,
                    col: start_col,
                    message: format!("integer `{lit}` out of range"),
                })?;
                Tok::Int(value)
            };
            advance!(n);
            tok
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let is_var = c.is_uppercase() || c == '_';
            if is_var {
                while j < chars.len() && chars[j] == '\'' {
                    j += 1;
                }
            }
            let word: String = chars[i..j].iter().collect();
            let n = j - i;
            let tok = if is_var {
                Tok::Var(word)
            } else if (word == "min" || word == "max") && chars.get(j) == Some(&'=') {
                advance!(1);
                if word == "min" {
                    Tok::MinEq
                } else {
                    Tok::MaxEq
                }
            } else {
                Tok::Ident(word)
            };
            advance!(n);
            tok
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            let (tok, n) = if three == "<==" {
                (Tok::Implied, 3)
            } else if two == "<=" {
                (Tok::Le, 2)
            } else if two == ">=" {
                (Tok::Ge, 2)
            } else if two == "+=" {
                (Tok::PlusEq, 2)
            } else if two == ":-" {
                (Tok::Turnstile, 2)
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '|' => Tok::Bar,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '?' => Tok::Question,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '^' => Tok::Caret,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '=' => Tok::Eq,
                    other => {
                        return Err(ParseError {
                            line,
                            col,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                (t, 1)
            };
            advance!(n);
            tok
        };
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn distinguishes_aggregators_and_operators() {
        assert_eq!(
            toks("a min= b <== c :- d += e <= f."),
            vec![
                Tok::Ident("a".into()),
                Tok::MinEq,
                Tok::Ident("b".into()),
                Tok::Implied,
                Tok::Ident("c".into()),
                Tok::Turnstile,
                Tok::Ident("d".into()),
                Tok::PlusEq,
                Tok::Ident("e".into()),
                Tok::Le,
                Tok::Ident("f".into()),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_terminating_dot() {
        assert_eq!(
            toks("a += 1. b += 0.25. c += -3."),
            vec![
                Tok::Ident("a".into()),
                Tok::PlusEq,
                Tok::Int(1),
                Tok::Dot,
                Tok::Ident("b".into()),
                Tok::PlusEq,
                Tok::Float(0.25, "0.25".into()),
                Tok::Dot,
                Tok::Ident("c".into()),
                Tok::PlusEq,
                Tok::Int(-3),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn primed_variables_and_comments() {
        assert_eq!(
            toks("edge(S,S') % trailing\n"),
            vec![
                Tok::Ident("edge".into()),
                Tok::LParen,
                Tok::Var("S".into()),
                Tok::Comma,
                Tok::Var("S'".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn reports_position_of_bad_character() {
        let err = lex("a.\n  b & c").unwrap_err();
        assert_eq!((err.line, err.col), (2, 5));
    }
}
