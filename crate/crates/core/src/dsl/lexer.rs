use super::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eq,
    Comma,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: Pos,
    /// Position of the last character of the token (inclusive).
    pub end: Pos,
}

pub(crate) struct LexError {
    pub pos: Pos,
    pub found: char,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-'
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    let mut last = Pos { line: 1, col: 1 };
    while let Some(c) = chars.next() {
        let start = Pos { line, col };
        last = start;
        let single = match c {
            '\n' => {
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                col += 1;
                continue;
            }
            '#' => {
                col += 1;
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                continue;
            }
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            ',' => Some(Tok::Comma),
            c if is_word_char(c) => None,
            other => {
                return Err(LexError {
                    pos: start,
                    found: other,
                })
            }
        };
        if let Some(tok) = single {
            col += 1;
            out.push(Token { tok, start, end: start });
            continue;
        }
        let mut word = String::from(c);
        let mut end = start;
        col += 1;
        while let Some(&n) = chars.peek() {
            if !is_word_char(n) {
                break;
            }
            end = Pos { line, col };
            word.push(n);
            chars.next();
            col += 1;
        }
        out.push(Token {
            tok: Tok::Word(word),
            start,
            end,
        });
    }
    let eof = if out.is_empty() { last } else { Pos { line, col } };
    out.push(Token {
        tok: Tok::Eof,
        start: eof,
        end: eof,
    });
    Ok(out)
}
