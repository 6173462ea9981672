//! ABC notation front end: tokenizer, parser, diagnostics, and canonical
//! serialization.
//!
//! The supported subset covers the header fields X, T, C, M, L, Q, K, V and
//! body tokens for notes, rests, bars, chords, ties, broken rhythm, and
//! tuplets. Decorations, grace notes, inline fields, and lyrics are skipped
//! with warnings in lenient mode and rejected in strict mode.

mod lexer;
mod parser;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, ParseMode, ParseResult};

use num_rational::Ratio;
use std::fmt;

/// Exact note-length arithmetic; multipliers and unit lengths are rationals.
pub type Fraction = Ratio<i64>;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes. These strings are part of the tool's contract:
/// they appear verbatim in regeneration prompts and in test assertions.
pub mod codes {
    pub const UNKNOWN_TOKEN: &str = "UNKNOWN_TOKEN";
    pub const MISSING_KEY: &str = "MISSING_KEY";
    pub const BAD_DURATION: &str = "BAD_DURATION";
    pub const UNBALANCED_CHORD: &str = "UNBALANCED_CHORD";
    pub const BAD_TUPLET: &str = "BAD_TUPLET";
    pub const BAD_HEADER: &str = "BAD_HEADER";
    pub const UNSUPPORTED: &str = "UNSUPPORTED";
    pub const BAD_BROKEN_RHYTHM: &str = "BAD_BROKEN_RHYTHM";
    pub const MULTI_TUNE: &str = "MULTI_TUNE";
    pub const EMPTY_BODY: &str = "EMPTY_BODY";
    pub const UNRESOLVED_TIE: &str = "UNRESOLVED_TIE";
}

/// One parser or tokenizer finding, with a stable code and 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub col: u32,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: Pos, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: pos.line,
            col: pos.col,
            code,
            message: message.into(),
        }
    }

    pub fn warning(pos: Pos, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            line: pos.line,
            col: pos.col,
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.severity == Severity::Warning {
            write!(f, "warning: ")?;
        }
        write!(
            f,
            "line {}, col {}: [{}] {}",
            self.line, self.col, self.code, self.message
        )
    }
}

/// Render diagnostics one per line, sorted by (line, column), in the exact
/// form embedded into regeneration prompts.
pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let mut sorted: Vec<&Diagnostic> = diags.iter().collect();
    sorted.sort_by_key(|d| (d.line, d.col));
    let mut out = String::new();
    for d in sorted {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Major,
    Minor,
}

/// Key signature resolved to per-letter semitone alterations via the circle
/// of fifths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySignature {
    pub tonic_letter: char,
    /// -1 flat, 0 natural, +1 sharp.
    pub tonic_accidental: i8,
    pub mode: Mode,
    /// Semitone offset per letter A..G, each in {-1, 0, +1}.
    alterations: [i8; 7],
}

const SHARP_ORDER: [char; 7] = ['F', 'C', 'G', 'D', 'A', 'E', 'B'];
const FLAT_ORDER: [char; 7] = ['B', 'E', 'A', 'D', 'G', 'C', 'F'];

fn letter_index(letter: char) -> usize {
    (letter as u8 - b'A') as usize
}

impl KeySignature {
    /// Build from tonic and mode; fails when the key would need more than
    /// seven sharps or flats.
    pub fn new(tonic_letter: char, tonic_accidental: i8, mode: Mode) -> Result<Self, String> {
        let letter = tonic_letter.to_ascii_uppercase();
        if !('A'..='G').contains(&letter) {
            return Err(format!("invalid tonic letter '{tonic_letter}'"));
        }
        // Position on the circle of fifths with C major = 0.
        let base = match letter {
            'F' => -1,
            'C' => 0,
            'G' => 1,
            'D' => 2,
            'A' => 3,
            'E' => 4,
            'B' => 5,
            _ => unreachable!(),
        };
        let fifths = base + 7 * i32::from(tonic_accidental)
            - if mode == Mode::Minor { 3 } else { 0 };
        if !(-7..=7).contains(&fifths) {
            return Err(format!(
                "key {}{} {} would need {} alterations",
                letter,
                match tonic_accidental {
                    1 => "#",
                    -1 => "b",
                    _ => "",
                },
                if mode == Mode::Minor { "minor" } else { "major" },
                fifths.abs()
            ));
        }
        let mut alterations = [0i8; 7];
        if fifths > 0 {
            for &l in SHARP_ORDER.iter().take(fifths as usize) {
                alterations[letter_index(l)] = 1;
            }
        } else {
            for &l in FLAT_ORDER.iter().take((-fifths) as usize) {
                alterations[letter_index(l)] = -1;
            }
        }
        Ok(KeySignature {
            tonic_letter: letter,
            tonic_accidental,
            mode,
            alterations,
        })
    }

    pub fn c_major() -> Self {
        KeySignature::new('C', 0, Mode::Major).expect("C major is a valid key")
    }

    /// Semitone offset the key applies to the given letter (any octave).
    pub fn offset_for(&self, letter: char) -> i8 {
        self.alterations[letter_index(letter.to_ascii_uppercase())]
    }

    /// Altered letters and their offsets, in sharp/flat application order.
    pub fn sharps_flats(&self) -> Vec<(char, i8)> {
        let order = if self.alterations.iter().any(|&a| a > 0) {
            &SHARP_ORDER
        } else {
            &FLAT_ORDER
        };
        order
            .iter()
            .map(|&l| (l, self.alterations[letter_index(l)]))
            .filter(|&(_, a)| a != 0)
            .collect()
    }
}

impl fmt::Display for KeySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tonic_letter)?;
        match self.tonic_accidental {
            1 => write!(f, "#")?,
            -1 => write!(f, "b")?,
            _ => {}
        }
        if self.mode == Mode::Minor {
            write!(f, "m")?;
        }
        Ok(())
    }
}

/// Time signature kept as written (6/8 is not reduced to 3/4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Meter {
    pub num: u32,
    pub den: u32,
}

impl Meter {
    pub fn new(num: u32, den: u32) -> Result<Self, String> {
        if num < 1 {
            return Err("meter numerator must be at least 1".into());
        }
        if ![1, 2, 4, 8, 16, 32].contains(&den) {
            return Err(format!("meter denominator {den} not in {{1,2,4,8,16,32}}"));
        }
        Ok(Meter { num, den })
    }

    /// Decimal value of the meter, used for the default unit-length rule.
    pub fn value(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Bar length in whole notes.
    pub fn bar_length(&self) -> Fraction {
        Fraction::new(i64::from(self.num), i64::from(self.den))
    }
}

impl Default for Meter {
    fn default() -> Self {
        Meter { num: 4, den: 4 }
    }
}

impl fmt::Display for Meter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A single note as written: letter keeps its case, `octave` counts only the
/// explicit `'` and `,` marks. `C` is middle C; lowercase raises one octave.
#[derive(Debug, Clone)]
pub struct Note {
    pub letter: char,
    /// None = take from key signature / bar state; Some(0) = explicit natural.
    pub accidental: Option<i8>,
    /// Net octave marks: each `'` +1, each `,` -1.
    pub octave: i8,
    /// Length multiplier applied to the unit note length.
    pub duration: Fraction,
    pub pos: Pos,
}

impl Note {
    /// Uppercase letter for key and accidental bookkeeping.
    pub fn base_letter(&self) -> char {
        self.letter.to_ascii_uppercase()
    }

    /// Octave displacement from the uppercase register, marks included.
    pub fn abs_octave(&self) -> i8 {
        self.octave + if self.letter.is_ascii_lowercase() { 1 } else { 0 }
    }
}

impl PartialEq for Note {
    fn eq(&self, other: &Self) -> bool {
        self.letter == other.letter
            && self.accidental == other.accidental
            && self.octave == other.octave
            && self.duration == other.duration
    }
}

#[derive(Debug, Clone)]
pub struct Chord {
    pub notes: Vec<Note>,
    /// Multiplier written after the closing bracket, times any tuplet or
    /// broken-rhythm adjustment.
    pub multiplier: Fraction,
    pub pos: Pos,
}

impl Chord {
    /// Sounding length of the chord: longest member times the multiplier.
    pub fn duration(&self) -> Fraction {
        let longest = self
            .notes
            .iter()
            .map(|n| n.duration)
            .max()
            .unwrap_or_else(|| Fraction::new(1, 1));
        longest * self.multiplier
    }
}

impl PartialEq for Chord {
    fn eq(&self, other: &Self) -> bool {
        self.notes == other.notes && self.multiplier == other.multiplier
    }
}

#[derive(Debug, Clone)]
pub struct Rest {
    pub duration: Fraction,
    /// `z` prints a rest sign, `x` is invisible; both advance time.
    pub visible: bool,
    pub pos: Pos,
}

impl PartialEq for Rest {
    fn eq(&self, other: &Self) -> bool {
        self.duration == other.duration && self.visible == other.visible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarKind {
    Single,
    Double,
    RepeatStart,
    RepeatEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Note(Note),
    Chord(Chord),
    Rest(Rest),
    Bar(BarKind),
    /// Binds the preceding note or chord to the next one of equal pitch.
    Tie(TiePos),
}

/// Tie position wrapper so element equality ignores source location.
#[derive(Debug, Clone, Copy)]
pub struct TiePos(pub Pos);

impl PartialEq for TiePos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Element {
    /// Notes, chords, and rests carry musical time; bars and ties do not.
    pub fn is_musical(&self) -> bool {
        matches!(self, Element::Note(_) | Element::Chord(_) | Element::Rest(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceBody {
    /// None for the implicit voice of a tune without V: headers.
    pub id: Option<String>,
    pub elements: Vec<Element>,
}

/// Parsed abstract syntax of one ABC tune.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcScore {
    pub index: u32,
    pub title: Option<String>,
    pub meter: Meter,
    pub unit_length: Fraction,
    /// Quarter notes per minute; 120 when no Q header is present.
    pub tempo_qpm: f64,
    pub key: KeySignature,
    pub voices: Vec<VoiceBody>,
}

impl AbcScore {
    /// Serialize back to canonical ABC: LF line endings, headers in the
    /// order X, T, M, L, Q, K, V, tuplets and broken rhythm resolved into
    /// plain fractional durations. Re-parsing the output yields a
    /// structurally equal score.
    pub fn to_canonical_abc(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("X:{}\n", self.index));
        if let Some(title) = &self.title {
            out.push_str(&format!("T:{title}\n"));
        }
        out.push_str(&format!("M:{}\n", self.meter));
        out.push_str(&format!(
            "L:{}/{}\n",
            self.unit_length.numer(),
            self.unit_length.denom()
        ));
        out.push_str(&format!("Q:1/4={}\n", self.tempo_qpm));
        out.push_str(&format!("K:{}\n", self.key));
        for voice in &self.voices {
            if let Some(id) = &voice.id {
                out.push_str(&format!("V:{id}\n"));
            }
            out.push_str(&serialize_elements(&voice.elements));
            out.push('\n');
        }
        out
    }
}

fn serialize_elements(elements: &[Element]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (i, elem) in elements.iter().enumerate() {
        match elem {
            Element::Note(n) => parts.push(serialize_note(n)),
            Element::Chord(c) => {
                let mut s = String::from("[");
                for n in &c.notes {
                    s.push_str(&serialize_note(n));
                }
                s.push(']');
                s.push_str(&duration_suffix(c.multiplier));
                parts.push(s);
            }
            Element::Rest(r) => {
                let mut s = String::from(if r.visible { "z" } else { "x" });
                s.push_str(&duration_suffix(r.duration));
                parts.push(s);
            }
            Element::Bar(kind) => parts.push(
                match kind {
                    BarKind::Single => "|",
                    BarKind::Double => "||",
                    BarKind::RepeatStart => "|:",
                    BarKind::RepeatEnd => ":|",
                }
                .to_string(),
            ),
            Element::Tie(_) => {
                // Attach the tie directly to the preceding token.
                if let Some(last) = parts.last_mut() {
                    last.push('-');
                } else {
                    parts.push("-".to_string());
                }
                let _ = i;
            }
        }
    }
    parts.join(" ")
}

fn serialize_note(n: &Note) -> String {
    let mut s = String::new();
    match n.accidental {
        Some(1) => s.push('^'),
        Some(2) => s.push_str("^^"),
        Some(-1) => s.push('_'),
        Some(-2) => s.push_str("__"),
        Some(0) => s.push('='),
        _ => {}
    }
    s.push(n.letter);
    if n.octave > 0 {
        for _ in 0..n.octave {
            s.push('\'');
        }
    } else {
        for _ in 0..(-n.octave) {
            s.push(',');
        }
    }
    s.push_str(&duration_suffix(n.duration));
    s
}

fn duration_suffix(d: Fraction) -> String {
    let (n, m) = (*d.numer(), *d.denom());
    if n == 1 && m == 1 {
        String::new()
    } else if m == 1 {
        format!("{n}")
    } else if n == 1 && m == 2 {
        "/".to_string()
    } else if n == 1 {
        format!("/{m}")
    } else {
        format!("{n}/{m}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_signature_circle_of_fifths() {
        let g = KeySignature::new('G', 0, Mode::Major).unwrap();
        assert_eq!(g.offset_for('F'), 1);
        assert_eq!(g.offset_for('C'), 0);
        assert_eq!(g.sharps_flats(), vec![('F', 1)]);

        let f = KeySignature::new('F', 0, Mode::Major).unwrap();
        assert_eq!(f.offset_for('B'), -1);
        assert_eq!(f.sharps_flats(), vec![('B', -1)]);

        let am = KeySignature::new('A', 0, Mode::Minor).unwrap();
        assert_eq!(am.sharps_flats(), vec![]);

        let fsm = KeySignature::new('F', 1, Mode::Minor).unwrap();
        assert_eq!(fsm.sharps_flats(), vec![('F', 1), ('C', 1), ('G', 1)]);

        let cs = KeySignature::new('C', 1, Mode::Major).unwrap();
        assert_eq!(cs.sharps_flats().len(), 7);

        let cb = KeySignature::new('C', -1, Mode::Major).unwrap();
        assert_eq!(cb.sharps_flats().len(), 7);
    }

    #[test]
    fn key_signature_rejects_impossible_keys() {
        assert!(KeySignature::new('D', 1, Mode::Major).is_err());
        assert!(KeySignature::new('F', -1, Mode::Major).is_err());
        assert!(KeySignature::new('X', 0, Mode::Major).is_err());
    }

    #[test]
    fn diagnostics_format_sorted_with_severity_prefix() {
        let diags = vec![
            Diagnostic::warning(Pos::new(5, 1), codes::UNSUPPORTED, "decoration skipped"),
            Diagnostic::error(Pos::new(3, 5), codes::BAD_DURATION, "zero length"),
        ];
        let text = format_diagnostics(&diags);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "line 3, col 5: [BAD_DURATION] zero length");
        assert_eq!(
            lines[1],
            "warning: line 5, col 1: [UNSUPPORTED] decoration skipped"
        );
    }

    #[test]
    fn meter_validation() {
        assert!(Meter::new(4, 4).is_ok());
        assert!(Meter::new(6, 8).is_ok());
        assert!(Meter::new(0, 4).is_err());
        assert!(Meter::new(4, 3).is_err());
    }

    #[test]
    fn duration_suffix_forms() {
        assert_eq!(duration_suffix(Fraction::new(1, 1)), "");
        assert_eq!(duration_suffix(Fraction::new(2, 1)), "2");
        assert_eq!(duration_suffix(Fraction::new(1, 2)), "/");
        assert_eq!(duration_suffix(Fraction::new(1, 4)), "/4");
        assert_eq!(duration_suffix(Fraction::new(3, 2)), "3/2");
    }
}
