//! Total tokenizer for the supported ABC subset. Never fails: anything it
//! does not recognize becomes an `Unknown` token plus an UNKNOWN_TOKEN
//! warning carrying the position.

use super::{codes, BarKind, Diagnostic, Fraction, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// A whole `X:value` line. The letter keeps its case.
    Header { letter: char, value: String },
    /// Pitch letter as written (A-G or a-g), net octave marks, optional
    /// leading accidental, and the duration multiplier. `duration` is None
    /// when the suffix was present but unusable (zero or out of range).
    Note {
        letter: char,
        accidental: Option<i8>,
        octave: i8,
        duration: Option<Fraction>,
    },
    Rest {
        visible: bool,
        duration: Option<Fraction>,
    },
    Bar(BarKind),
    ChordStart,
    ChordEnd { duration: Option<Fraction> },
    Tie,
    /// `>` (gt = true) or `<` runs; count is the number of repeats, capped at 3.
    BrokenRhythm { gt: bool, count: u8 },
    /// `(p`, `(p:q`, or `(p:q:r`.
    Tuplet {
        p: u32,
        q: Option<u32>,
        r: Option<u32>,
    },
    /// Grace notes, `!..!` and `~` ornaments, slur parens, quoted chord
    /// symbols, staccato dots. Recognized so the parser can skip or reject
    /// them by mode.
    Decoration { text: String },
    /// `[X:...]` style inline field.
    InlineField { text: String },
    Unknown { text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

/// Duration suffix numerator/denominator sanity bound. Values beyond this
/// are rejected as BAD_DURATION by the parser rather than risking overflow
/// in tick arithmetic.
pub(crate) const MAX_DURATION_PART: i64 = 65536;

struct LineLexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    tokens: &'a mut Vec<Token>,
    diags: &'a mut Vec<Diagnostic>,
}

/// Tokenize arbitrary text. Returns the token stream and any UNKNOWN_TOKEN
/// warnings; the tokenizer itself never produces errors.
pub fn tokenize(source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    for (idx, raw_line) in source.split('\n').enumerate() {
        let line_no = (idx + 1) as u32;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        // Comments run from '%' to end of line.
        let line = match line.find('%') {
            Some(p) => &line[..p],
            None => line,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(tok) = header_token(line, line_no) {
            tokens.push(tok);
            continue;
        }
        let mut lexer = LineLexer {
            chars: line.chars().collect(),
            i: 0,
            line: line_no,
            tokens: &mut tokens,
            diags: &mut diags,
        };
        lexer.run();
    }
    (tokens, diags)
}

fn header_token(line: &str, line_no: u32) -> Option<Token> {
    let mut chars = line.chars();
    let letter = chars.next()?;
    if !letter.is_ascii_alphabetic() {
        return None;
    }
    if chars.next()? != ':' {
        return None;
    }
    Some(Token {
        kind: TokenKind::Header {
            letter,
            value: chars.as_str().trim().to_string(),
        },
        pos: Pos::new(line_no, 1),
    })
}

impl LineLexer<'_> {
    fn run(&mut self) {
        while self.i < self.chars.len() {
            let c = self.chars[self.i];
            let pos = self.pos();
            match c {
                ' ' | '\t' => {
                    self.i += 1;
                }
                '^' | '_' | '=' => self.accidental_then_note(pos),
                'A'..='G' | 'a'..='g' => {
                    let note = self.note(None);
                    self.push(note, pos);
                }
                'z' | 'x' => {
                    self.i += 1;
                    let duration = self.duration_suffix();
                    self.push(
                        TokenKind::Rest {
                            visible: c == 'z',
                            duration,
                        },
                        pos,
                    );
                }
                '|' => {
                    self.i += 1;
                    let kind = match self.peek() {
                        Some(':') => {
                            self.i += 1;
                            BarKind::RepeatStart
                        }
                        Some('|') => {
                            self.i += 1;
                            BarKind::Double
                        }
                        Some(']') => {
                            self.i += 1;
                            BarKind::Double
                        }
                        _ => BarKind::Single,
                    };
                    self.push(TokenKind::Bar(kind), pos);
                }
                ':' => {
                    if self.peek_at(1) == Some('|') {
                        self.i += 2;
                        self.push(TokenKind::Bar(BarKind::RepeatEnd), pos);
                    } else {
                        self.unknown_char(pos);
                    }
                }
                '[' => self.open_bracket(pos),
                ']' => {
                    self.i += 1;
                    let duration = self.duration_suffix();
                    self.push(TokenKind::ChordEnd { duration }, pos);
                }
                '-' => {
                    self.i += 1;
                    self.push(TokenKind::Tie, pos);
                }
                '>' | '<' => {
                    let gt = c == '>';
                    let mut count = 0u8;
                    while self.peek() == Some(c) && count < 3 {
                        self.i += 1;
                        count += 1;
                    }
                    // Extra repeats beyond three add nothing; swallow them.
                    while self.peek() == Some(c) {
                        self.i += 1;
                    }
                    self.push(TokenKind::BrokenRhythm { gt, count }, pos);
                }
                '(' => self.open_paren(pos),
                ')' => {
                    self.i += 1;
                    self.push(
                        TokenKind::Decoration {
                            text: ")".to_string(),
                        },
                        pos,
                    );
                }
                '{' => {
                    self.i += 1;
                    let inner = self.scan_until('}', true);
                    self.push(
                        TokenKind::Decoration {
                            text: format!("{{{inner}}}"),
                        },
                        pos,
                    );
                }
                '!' => {
                    self.i += 1;
                    let inner = self.scan_until('!', true);
                    self.push(
                        TokenKind::Decoration {
                            text: format!("!{inner}"),
                        },
                        pos,
                    );
                }
                '"' => {
                    self.i += 1;
                    let inner = self.scan_until('"', true);
                    self.push(
                        TokenKind::Decoration {
                            text: format!("\"{inner}"),
                        },
                        pos,
                    );
                }
                '~' | '.' => {
                    self.i += 1;
                    self.push(
                        TokenKind::Decoration {
                            text: c.to_string(),
                        },
                        pos,
                    );
                }
                _ => self.unknown_char(pos),
            }
        }
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, (self.i + 1) as u32)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.i + offset).copied()
    }

    fn push(&mut self, kind: TokenKind, pos: Pos) {
        self.tokens.push(Token { kind, pos });
    }

    fn accidental_then_note(&mut self, pos: Pos) {
        let start = self.i;
        let mut acc: i8 = 0;
        let mut explicit_natural = false;
        while let Some(c) = self.peek() {
            match c {
                '^' => {
                    acc = acc.saturating_add(1);
                    self.i += 1;
                }
                '_' => {
                    acc = acc.saturating_sub(1);
                    self.i += 1;
                }
                '=' => {
                    explicit_natural = true;
                    self.i += 1;
                }
                _ => break,
            }
        }
        match self.peek() {
            Some('A'..='G' | 'a'..='g') => {
                let accidental = if acc != 0 {
                    Some(acc.clamp(-2, 2))
                } else if explicit_natural {
                    Some(0)
                } else {
                    Some(0)
                };
                let note = self.note(accidental);
                self.push(note, pos);
            }
            _ => {
                let text: String = self.chars[start..self.i].iter().collect();
                self.push(TokenKind::Unknown { text: text.clone() }, pos);
                self.diags.push(Diagnostic::warning(
                    pos,
                    codes::UNKNOWN_TOKEN,
                    format!("accidental '{text}' not followed by a note"),
                ));
            }
        }
    }

    fn note(&mut self, accidental: Option<i8>) -> TokenKind {
        let letter = self.chars[self.i];
        self.i += 1;
        let mut octave: i8 = 0;
        while let Some(c) = self.peek() {
            match c {
                '\'' => {
                    octave = octave.saturating_add(1);
                    self.i += 1;
                }
                ',' => {
                    octave = octave.saturating_sub(1);
                    self.i += 1;
                }
                _ => break,
            }
        }
        let duration = self.duration_suffix();
        TokenKind::Note {
            letter,
            accidental,
            octave,
            duration,
        }
    }

    /// Parse the `n`, `/n`, `n/m`, `/` family. Returns Some(1/1) when no
    /// suffix is present and None when a suffix exists but is invalid.
    fn duration_suffix(&mut self) -> Option<Fraction> {
        let mut num: i64 = 1;
        let mut den: i64 = 1;
        let mut saw_any = false;
        let mut valid = true;

        if let Some(n) = self.scan_number() {
            saw_any = true;
            match n {
                Ok(v) => num = v,
                Err(()) => valid = false,
            }
        }
        while self.peek() == Some('/') {
            saw_any = true;
            self.i += 1;
            match self.scan_number() {
                Some(Ok(v)) => {
                    den = den.saturating_mul(v);
                }
                Some(Err(())) => valid = false,
                None => den = den.saturating_mul(2),
            }
        }
        if !saw_any {
            return Some(Fraction::new(1, 1));
        }
        if !valid
            || num < 1
            || den < 1
            || num > MAX_DURATION_PART
            || den > MAX_DURATION_PART
        {
            return None;
        }
        Some(Fraction::new(num, den))
    }

    /// Scan digits; Err(()) marks a number too large to use.
    fn scan_number(&mut self) -> Option<Result<i64, ()>> {
        let start = self.i;
        while matches!(self.peek(), Some('0'..='9')) {
            self.i += 1;
        }
        if self.i == start {
            return None;
        }
        let text: String = self.chars[start..self.i].iter().collect();
        Some(text.parse::<i64>().map_err(|_| ()))
    }

    fn scan_until(&mut self, close: char, consume_close: bool) -> String {
        let mut j = self.i;
        while j < self.chars.len() && self.chars[j] != close {
            j += 1;
        }
        let text: String = self.chars[self.i..j].iter().collect();
        self.i = j;
        if consume_close && self.peek() == Some(close) {
            self.i += 1;
        }
        text
    }

    fn open_bracket(&mut self, pos: Pos) {
        // `[|` is a bar, `[X:...]` an inline field, otherwise a chord start.
        if self.peek_at(1) == Some('|') {
            self.i += 2;
            self.push(TokenKind::Bar(BarKind::Double), pos);
            return;
        }
        let is_field = matches!(self.peek_at(1), Some(c) if c.is_ascii_alphabetic())
            && self.peek_at(2) == Some(':');
        if is_field {
            self.i += 1;
            let text = self.scan_until(']', true);
            self.push(TokenKind::InlineField { text }, pos);
        } else {
            self.i += 1;
            self.push(TokenKind::ChordStart, pos);
        }
    }

    fn open_paren(&mut self, pos: Pos) {
        if matches!(self.peek_at(1), Some('0'..='9')) {
            self.i += 1;
            let p = match self.scan_number() {
                Some(Ok(v)) => u32::try_from(v).unwrap_or(u32::MAX),
                _ => u32::MAX,
            };
            let mut q = None;
            let mut r = None;
            if self.peek() == Some(':') {
                self.i += 1;
                q = self
                    .scan_number()
                    .map(|n| n.map(|v| u32::try_from(v).unwrap_or(u32::MAX)).unwrap_or(u32::MAX));
                if self.peek() == Some(':') {
                    self.i += 1;
                    r = self
                        .scan_number()
                        .map(|n| n.map(|v| u32::try_from(v).unwrap_or(u32::MAX)).unwrap_or(u32::MAX));
                }
            }
            self.push(TokenKind::Tuplet { p, q, r }, pos);
        } else {
            self.i += 1;
            self.push(
                TokenKind::Decoration {
                    text: "(".to_string(),
                },
                pos,
            );
        }
    }

    fn unknown_char(&mut self, pos: Pos) {
        // Collapse a run of unrecognized characters into one token.
        let start = self.i;
        while let Some(c) = self.peek() {
            if recognized_start(c) {
                break;
            }
            self.i += 1;
        }
        if self.i == start {
            self.i += 1;
        }
        let text: String = self.chars[start..self.i].iter().collect();
        self.push(TokenKind::Unknown { text: text.clone() }, pos);
        self.diags.push(Diagnostic::warning(
            pos,
            codes::UNKNOWN_TOKEN,
            format!("unrecognized input '{text}'"),
        ));
    }
}

fn recognized_start(c: char) -> bool {
    matches!(
        c,
        ' ' | '\t'
            | '^'
            | '_'
            | '='
            | 'A'..='G'
            | 'a'..='g'
            | 'z'
            | 'x'
            | '|'
            | ':'
            | '['
            | ']'
            | '-'
            | '>'
            | '<'
            | '('
            | ')'
            | '{'
            | '!'
            | '"'
            | '~'
            | '.'
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(source: &str) -> Vec<TokenKind> {
        tokenize(source).0.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn four_plain_notes() {
        let ks = kinds("CDEF");
        assert_eq!(ks.len(), 4);
        for (k, letter) in ks.iter().zip(['C', 'D', 'E', 'F']) {
            assert_eq!(
                *k,
                TokenKind::Note {
                    letter,
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 1)),
                }
            );
        }
    }

    #[test]
    fn empty_input_no_tokens_no_diagnostics() {
        let (tokens, diags) = tokenize("");
        assert!(tokens.is_empty());
        assert!(diags.is_empty());
    }

    #[test]
    fn sharp_high_c_with_duration() {
        let ks = kinds("^c'2");
        assert_eq!(
            ks,
            vec![TokenKind::Note {
                letter: 'c',
                accidental: Some(1),
                octave: 1,
                duration: Some(Fraction::new(2, 1)),
            }]
        );
    }

    #[test]
    fn duration_suffix_variants() {
        assert_eq!(
            kinds("C/ D/4 E3/2 F//"),
            vec![
                TokenKind::Note {
                    letter: 'C',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 2)),
                },
                TokenKind::Note {
                    letter: 'D',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 4)),
                },
                TokenKind::Note {
                    letter: 'E',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(3, 2)),
                },
                TokenKind::Note {
                    letter: 'F',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 4)),
                },
            ]
        );
    }

    #[test]
    fn zero_duration_marked_invalid() {
        assert_eq!(
            kinds("C0"),
            vec![TokenKind::Note {
                letter: 'C',
                accidental: None,
                octave: 0,
                duration: None,
            }]
        );
        assert_eq!(
            kinds("z/0"),
            vec![TokenKind::Rest {
                visible: true,
                duration: None,
            }]
        );
    }

    #[test]
    fn bars_and_repeats() {
        assert_eq!(
            kinds("| |: :| || |] [|"),
            vec![
                TokenKind::Bar(BarKind::Single),
                TokenKind::Bar(BarKind::RepeatStart),
                TokenKind::Bar(BarKind::RepeatEnd),
                TokenKind::Bar(BarKind::Double),
                TokenKind::Bar(BarKind::Double),
                TokenKind::Bar(BarKind::Double),
            ]
        );
    }

    #[test]
    fn chords_and_inline_fields_distinguished() {
        let ks = kinds("[CEG]2 [K:G]");
        assert_eq!(ks[0], TokenKind::ChordStart);
        assert_eq!(
            ks[4],
            TokenKind::ChordEnd {
                duration: Some(Fraction::new(2, 1))
            }
        );
        assert_eq!(
            ks[5],
            TokenKind::InlineField {
                text: "K:G".to_string()
            }
        );
    }

    #[test]
    fn tuplet_forms() {
        assert_eq!(
            kinds("(3 (5:4 (3:2:4"),
            vec![
                TokenKind::Tuplet {
                    p: 3,
                    q: None,
                    r: None
                },
                TokenKind::Tuplet {
                    p: 5,
                    q: Some(4),
                    r: None
                },
                TokenKind::Tuplet {
                    p: 3,
                    q: Some(2),
                    r: Some(4)
                },
            ]
        );
    }

    #[test]
    fn decorations_tokenized_not_errored() {
        let (tokens, diags) = tokenize("{gc}C !trill!D ~E .F \"Am\"G (A)");
        let decos = tokens
            .iter()
            .filter(|t| matches!(t.kind, TokenKind::Decoration { .. }))
            .count();
        assert_eq!(decos, 7);
        assert!(diags.is_empty());
    }

    #[test]
    fn unknown_chars_warn_with_position() {
        let (tokens, diags) = tokenize("C @# D");
        assert_eq!(tokens.len(), 3);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::UNKNOWN_TOKEN);
        assert_eq!((diags[0].line, diags[0].col), (1, 3));
    }

    #[test]
    fn header_lines_capture_value() {
        let ks = kinds("X:1\nT: My Tune \nK:C");
        assert_eq!(
            ks[0],
            TokenKind::Header {
                letter: 'X',
                value: "1".to_string()
            }
        );
        assert_eq!(
            ks[1],
            TokenKind::Header {
                letter: 'T',
                value: "My Tune".to_string()
            }
        );
    }

    #[test]
    fn comments_stripped() {
        let ks = kinds("CD % trailing words | z");
        assert_eq!(ks.len(), 2);
    }

    #[test]
    fn broken_rhythm_runs() {
        assert_eq!(
            kinds("C>D E<<F"),
            vec![
                TokenKind::Note {
                    letter: 'C',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 1)),
                },
                TokenKind::BrokenRhythm { gt: true, count: 1 },
                TokenKind::Note {
                    letter: 'D',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 1)),
                },
                TokenKind::Note {
                    letter: 'E',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 1)),
                },
                TokenKind::BrokenRhythm {
                    gt: false,
                    count: 2
                },
                TokenKind::Note {
                    letter: 'F',
                    accidental: None,
                    octave: 0,
                    duration: Some(Fraction::new(1, 1)),
                },
            ]
        );
    }
}
