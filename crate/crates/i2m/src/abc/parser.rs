//! Recursive token-stream parser producing an `AbcScore` or diagnostics.

use super::lexer::{tokenize, Token, TokenKind};
use super::{
    codes, AbcScore, BarKind, Chord, Diagnostic, Element, Fraction, KeySignature, Meter, Mode,
    Note, Pos, Rest, Severity, TiePos, VoiceBody,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Decorations, grace notes, inline fields, and unknown input are errors.
    Strict,
    /// The orchestrator default: skip them with warnings.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub score: AbcScore,
    pub warnings: Vec<Diagnostic>,
}

/// Parse one ABC tune. On failure the returned diagnostics contain at least
/// one error; warnings collected before the failure are included.
pub fn parse(source: &str, mode: ParseMode) -> Result<ParseResult, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(source);
    if mode == ParseMode::Strict {
        for d in &mut diags {
            if d.code == codes::UNKNOWN_TOKEN {
                d.severity = Severity::Error;
            }
        }
    }
    let end_pos = Pos::new(source.split('\n').count().max(1) as u32, 1);
    let parser = Parser {
        mode,
        diags,
        end_pos,
        index: None,
        title: None,
        meter: None,
        unit: None,
        tempo: None,
        key: None,
        voices: Vec::new(),
        current_voice: None,
        pending_tuplet: None,
        pending_broken: None,
        chord: None,
    };
    parser.run(tokens)
}

struct Parser {
    mode: ParseMode,
    diags: Vec<Diagnostic>,
    end_pos: Pos,
    index: Option<u32>,
    title: Option<String>,
    meter: Option<Meter>,
    unit: Option<Fraction>,
    tempo: Option<f64>,
    key: Option<KeySignature>,
    voices: Vec<VoiceBody>,
    current_voice: Option<usize>,
    /// (ratio, remaining elements) of an active tuplet.
    pending_tuplet: Option<(Fraction, u32)>,
    /// Duration factor waiting to be applied to the next musical element.
    pending_broken: Option<Fraction>,
    /// Open chord: position of `[` and members collected so far.
    chord: Option<(Pos, Vec<Note>)>,
}

impl Parser {
    fn run(mut self, tokens: Vec<Token>) -> Result<ParseResult, Vec<Diagnostic>> {
        for token in tokens {
            match token.kind {
                TokenKind::Header { letter, value } => {
                    if self.header(letter, value, token.pos) {
                        break; // second tune reached
                    }
                }
                other => {
                    if self.key.is_none() {
                        self.error(token.pos, codes::MISSING_KEY, "tune body begins before any K: header");
                        return Err(self.diags);
                    }
                    self.body_token(other, token.pos);
                }
            }
        }
        self.finish()
    }

    // Returns true when parsing should stop (a second tune started).
    fn header(&mut self, letter: char, value: String, pos: Pos) -> bool {
        let in_body = self.key.is_some();
        match letter.to_ascii_uppercase() {
            'X' if in_body => {
                self.warn_always(pos, codes::MULTI_TUNE, "second X: header found; only one tune per input is supported, remainder ignored");
                return true;
            }
            'X' => match value.trim().parse::<u32>() {
                Ok(v) => self.index = Some(v),
                Err(_) => self.mode_report(pos, codes::BAD_HEADER, format!("X: header value '{value}' is not a non-negative integer")),
            },
            'T' if !in_body => self.title = Some(value),
            'C' if !in_body => {} // composer: recognized, not stored
            'M' if !in_body => match parse_meter(&value) {
                Ok(m) => self.meter = Some(m),
                Err(e) => self.mode_report(pos, codes::BAD_HEADER, format!("M: header: {e}")),
            },
            'L' if !in_body => match parse_unit_length(&value) {
                Ok(u) => self.unit = Some(u),
                Err(e) => self.mode_report(pos, codes::BAD_HEADER, format!("L: header: {e}")),
            },
            'Q' if !in_body => match parse_tempo(&value) {
                Ok(q) => self.tempo = Some(q),
                Err(e) => self.mode_report(pos, codes::BAD_HEADER, format!("Q: header: {e}")),
            },
            'K' if !in_body => match parse_key(&value) {
                Ok(k) => self.key = Some(k),
                Err(e) => self.error(pos, codes::BAD_HEADER, format!("K: header: {e}")),
            },
            'V' => {
                let id = value.split_whitespace().next().unwrap_or("").to_string();
                if id.is_empty() {
                    self.mode_report(pos, codes::BAD_HEADER, "V: header has no voice id");
                } else {
                    self.switch_voice(id);
                }
            }
            other => {
                self.mode_report(
                    pos,
                    codes::UNSUPPORTED,
                    format!(
                        "header '{other}:' is not supported {}; line skipped",
                        if in_body { "inside the tune body" } else { "here" }
                    ),
                );
            }
        }
        false
    }

    fn body_token(&mut self, kind: TokenKind, pos: Pos) {
        match kind {
            TokenKind::Note {
                letter,
                accidental,
                octave,
                duration,
            } => {
                let duration = self.checked_duration(duration, pos);
                let note = Note {
                    letter,
                    accidental,
                    octave,
                    duration,
                    pos,
                };
                if let Some((_, members)) = &mut self.chord {
                    members.push(note);
                } else {
                    let mut note = note;
                    note.duration = self.apply_modifiers(note.duration);
                    self.push_element(Element::Note(note));
                }
            }
            TokenKind::Rest { visible, duration } => {
                if self.chord.is_some() {
                    self.mode_report(pos, codes::UNBALANCED_CHORD, "rest inside chord; skipped");
                    return;
                }
                let duration = self.checked_duration(duration, pos);
                let duration = self.apply_modifiers(duration);
                self.push_element(Element::Rest(Rest {
                    duration,
                    visible,
                    pos,
                }));
            }
            TokenKind::Bar(kind) => {
                if let Some((chord_pos, _)) = self.chord.take() {
                    self.error(chord_pos, codes::UNBALANCED_CHORD, "chord '[' is never closed");
                }
                if self.pending_broken.take().is_some() {
                    self.mode_report(pos, codes::BAD_BROKEN_RHYTHM, "broken rhythm has no following note");
                }
                self.pending_tuplet = None;
                self.push_element(Element::Bar(kind));
            }
            TokenKind::Tie => {
                if self.chord.is_some() {
                    self.mode_report(pos, codes::UNSUPPORTED, "tie inside chord; skipped");
                    return;
                }
                let follows_note = self
                    .current_elements()
                    .and_then(|els| els.last())
                    .map(|e| matches!(e, Element::Note(_) | Element::Chord(_)))
                    .unwrap_or(false);
                if follows_note {
                    self.push_element(Element::Tie(TiePos(pos)));
                } else {
                    self.mode_report(pos, codes::UNSUPPORTED, "tie does not follow a note or chord; skipped");
                }
            }
            TokenKind::BrokenRhythm { gt, count } => {
                if self.chord.is_some() {
                    self.mode_report(pos, codes::BAD_BROKEN_RHYTHM, "broken rhythm inside chord; skipped");
                    return;
                }
                let halves = Fraction::new(1, 1 << count.min(3));
                let long = Fraction::new(2, 1) - halves;
                let (prev_factor, next_factor) = if gt { (long, halves) } else { (halves, long) };
                let applied = self.scale_last_musical(prev_factor);
                if applied {
                    self.pending_broken = Some(next_factor);
                } else {
                    self.mode_report(pos, codes::BAD_BROKEN_RHYTHM, "broken rhythm has no preceding note");
                }
            }
            TokenKind::Tuplet { p, q, r } => {
                if self.chord.is_some() {
                    self.error(pos, codes::BAD_TUPLET, "tuplet marker inside chord");
                    return;
                }
                if !(2..=9).contains(&p) {
                    self.error(pos, codes::BAD_TUPLET, format!("tuplet count {p} outside 2..9"));
                    return;
                }
                let q = match q {
                    Some(q) if (1..=64).contains(&q) => q,
                    Some(q) => {
                        self.error(pos, codes::BAD_TUPLET, format!("tuplet time value {q} out of range"));
                        return;
                    }
                    None => match p {
                        2 => 3,
                        3 => 2,
                        4 => 3,
                        6 => 2,
                        8 => 3,
                        _ => 2,
                    },
                };
                let r = match r {
                    Some(r) if (1..=128).contains(&r) => r,
                    Some(r) => {
                        self.error(pos, codes::BAD_TUPLET, format!("tuplet note count {r} out of range"));
                        return;
                    }
                    None => p,
                };
                if self.pending_tuplet.is_some() {
                    self.error(pos, codes::BAD_TUPLET, "tuplet starts inside another tuplet");
                    return;
                }
                self.pending_tuplet = Some((Fraction::new(i64::from(q), i64::from(p)), r));
            }
            TokenKind::ChordStart => {
                if let Some((prev_pos, _)) = self.chord.take() {
                    self.error(prev_pos, codes::UNBALANCED_CHORD, "chord '[' is never closed");
                }
                self.chord = Some((pos, Vec::new()));
            }
            TokenKind::ChordEnd { duration } => {
                let Some((chord_pos, members)) = self.chord.take() else {
                    self.error(pos, codes::UNBALANCED_CHORD, "']' without matching '['");
                    return;
                };
                if members.is_empty() {
                    self.error(chord_pos, codes::UNBALANCED_CHORD, "chord contains no notes");
                    return;
                }
                let multiplier = self.checked_duration(duration, pos);
                let multiplier = self.apply_modifiers(multiplier);
                self.push_element(Element::Chord(Chord {
                    notes: members,
                    multiplier,
                    pos: chord_pos,
                }));
            }
            TokenKind::Decoration { text } => {
                self.mode_report(pos, codes::UNSUPPORTED, format!("decoration '{text}' skipped"));
            }
            TokenKind::InlineField { text } => {
                self.mode_report(pos, codes::UNSUPPORTED, format!("inline field '[{text}]' skipped"));
            }
            TokenKind::Unknown { .. } => {
                // The tokenizer already reported this span (upgraded to an
                // error in strict mode); nothing further to do.
            }
            TokenKind::Header { .. } => unreachable!("headers handled by caller"),
        }
    }

    fn finish(mut self) -> Result<ParseResult, Vec<Diagnostic>> {
        if let Some((chord_pos, _)) = self.chord.take() {
            self.error(chord_pos, codes::UNBALANCED_CHORD, "chord '[' is never closed");
        }
        if self.pending_broken.take().is_some() {
            let pos = self.end_pos;
            self.mode_report(pos, codes::BAD_BROKEN_RHYTHM, "broken rhythm has no following note");
        }
        let Some(key) = self.key.clone() else {
            self.error(self.end_pos, codes::MISSING_KEY, "no K: header before tune body");
            return Err(self.diags);
        };

        // Voices must each carry at least one musical element. In lenient
        // mode empty ones are dropped with a warning.
        let mut voices = Vec::new();
        for voice in std::mem::take(&mut self.voices) {
            if voice.elements.iter().any(Element::is_musical) {
                voices.push(voice);
            } else {
                let label = voice.id.clone().unwrap_or_else(|| "(implicit)".into());
                self.mode_report(
                    self.end_pos,
                    codes::EMPTY_BODY,
                    format!("voice {label} has no notes, chords, or rests; dropped"),
                );
            }
        }
        if voices.is_empty() {
            self.error(self.end_pos, codes::EMPTY_BODY, "tune body has no musical elements");
        }

        if self.index.is_none() {
            self.mode_report(self.end_pos, codes::BAD_HEADER, "missing X: header; using index 1");
        }

        if self.diags.iter().any(Diagnostic::is_error) {
            return Err(self.diags);
        }

        let meter = self.meter.unwrap_or_default();
        let unit = self.unit.unwrap_or_else(|| {
            if meter.value() < 0.75 {
                Fraction::new(1, 16)
            } else {
                Fraction::new(1, 8)
            }
        });
        Ok(ParseResult {
            score: AbcScore {
                index: self.index.unwrap_or(1),
                title: self.title,
                meter,
                unit_length: unit,
                tempo_qpm: self.tempo.unwrap_or(120.0),
                key,
                voices,
            },
            warnings: self.diags,
        })
    }

    fn switch_voice(&mut self, id: String) {
        if let Some(i) = self
            .voices
            .iter()
            .position(|v| v.id.as_deref() == Some(id.as_str()))
        {
            self.current_voice = Some(i);
        } else {
            self.voices.push(VoiceBody {
                id: Some(id),
                elements: Vec::new(),
            });
            self.current_voice = Some(self.voices.len() - 1);
        }
    }

    fn push_element(&mut self, element: Element) {
        let idx = match self.current_voice {
            Some(i) => i,
            None => {
                self.voices.push(VoiceBody {
                    id: None,
                    elements: Vec::new(),
                });
                let i = self.voices.len() - 1;
                self.current_voice = Some(i);
                i
            }
        };
        self.voices[idx].elements.push(element);
    }

    fn current_elements(&self) -> Option<&Vec<Element>> {
        self.current_voice.map(|i| &self.voices[i].elements)
    }

    fn scale_last_musical(&mut self, factor: Fraction) -> bool {
        let Some(i) = self.current_voice else {
            return false;
        };
        match self.voices[i].elements.last_mut() {
            Some(Element::Note(n)) => {
                n.duration *= factor;
                true
            }
            Some(Element::Chord(c)) => {
                c.multiplier *= factor;
                true
            }
            Some(Element::Rest(r)) => {
                r.duration *= factor;
                true
            }
            _ => false,
        }
    }

    /// Tuplet ratio and pending broken-rhythm factor, in source order.
    fn apply_modifiers(&mut self, mut duration: Fraction) -> Fraction {
        if let Some((ratio, remaining)) = &mut self.pending_tuplet {
            duration *= *ratio;
            *remaining -= 1;
            if *remaining == 0 {
                self.pending_tuplet = None;
            }
        }
        if let Some(factor) = self.pending_broken.take() {
            duration *= factor;
        }
        duration
    }

    fn checked_duration(&mut self, duration: Option<Fraction>, pos: Pos) -> Fraction {
        match duration {
            Some(d) => d,
            None => {
                self.error(pos, codes::BAD_DURATION, "note length is zero, negative, or out of range");
                Fraction::new(1, 1)
            }
        }
    }

    fn error(&mut self, pos: Pos, code: &'static str, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(pos, code, message));
    }

    fn warn_always(&mut self, pos: Pos, code: &'static str, message: impl Into<String>) {
        self.diags.push(Diagnostic::warning(pos, code, message));
    }

    /// Warning in lenient mode, error in strict mode.
    fn mode_report(&mut self, pos: Pos, code: &'static str, message: impl Into<String>) {
        let diag = match self.mode {
            ParseMode::Lenient => Diagnostic::warning(pos, code, message),
            ParseMode::Strict => Diagnostic::error(pos, code, message),
        };
        self.diags.push(diag);
    }
}

fn parse_meter(value: &str) -> Result<Meter, String> {
    let v = value.trim();
    if v == "C" {
        return Meter::new(4, 4);
    }
    if v == "C|" {
        return Meter::new(2, 2);
    }
    let (num, den) = v
        .split_once('/')
        .ok_or_else(|| format!("'{v}' is not of the form n/m"))?;
    let num: u32 = num.trim().parse().map_err(|_| format!("bad numerator '{num}'"))?;
    let den: u32 = den.trim().parse().map_err(|_| format!("bad denominator '{den}'"))?;
    Meter::new(num, den)
}

fn parse_unit_length(value: &str) -> Result<Fraction, String> {
    let v = value.trim();
    let (num, den) = v
        .split_once('/')
        .ok_or_else(|| format!("'{v}' is not of the form n/m"))?;
    let num: i64 = num.trim().parse().map_err(|_| format!("bad numerator '{num}'"))?;
    let den: i64 = den.trim().parse().map_err(|_| format!("bad denominator '{den}'"))?;
    if num < 1 || den < 1 {
        return Err("unit length must be positive".into());
    }
    let unit = Fraction::new(num, den);
    if unit > Fraction::new(1, 1) || unit < Fraction::new(1, 64) {
        return Err(format!("unit length {num}/{den} outside 1/64..1/1"));
    }
    Ok(unit)
}

fn parse_tempo(value: &str) -> Result<f64, String> {
    let v = value.trim();
    let qpm = if let Some((beat, count)) = v.split_once('=') {
        let (num, den) = beat
            .trim()
            .split_once('/')
            .ok_or_else(|| format!("beat unit '{beat}' is not of the form n/m"))?;
        let num: f64 = num.trim().parse().map_err(|_| format!("bad beat numerator '{num}'"))?;
        let den: f64 = den.trim().parse().map_err(|_| format!("bad beat denominator '{den}'"))?;
        let count: f64 = count.trim().parse().map_err(|_| format!("bad tempo value '{count}'"))?;
        if den <= 0.0 {
            return Err("beat denominator must be positive".into());
        }
        count * (num / den) * 4.0
    } else {
        v.parse::<f64>().map_err(|_| format!("bad tempo value '{v}'"))?
    };
    if !qpm.is_finite() || qpm <= 0.0 || qpm > 10000.0 {
        return Err(format!("tempo {qpm} out of range"));
    }
    Ok(qpm)
}

fn parse_key(value: &str) -> Result<KeySignature, String> {
    let v = value.trim();
    let mut chars = v.chars();
    let letter = chars
        .next()
        .ok_or_else(|| "empty key".to_string())?
        .to_ascii_uppercase();
    if !('A'..='G').contains(&letter) {
        return Err(format!("'{v}' does not start with a tonic letter A-G"));
    }
    let rest: String = chars.collect();
    let mut rest = rest.as_str();
    let accidental = if let Some(r) = rest.strip_prefix('#') {
        rest = r;
        1
    } else if let Some(r) = rest.strip_prefix('b') {
        rest = r;
        -1
    } else {
        0
    };
    let mode_text = rest.trim().to_ascii_lowercase();
    let mode = if mode_text.is_empty() || mode_text.starts_with("maj") || mode_text.starts_with("ion") {
        Mode::Major
    } else if mode_text == "m" || mode_text.starts_with("min") || mode_text.starts_with("aeo") {
        Mode::Minor
    } else {
        return Err(format!("unsupported mode '{mode_text}'"));
    };
    KeySignature::new(letter, accidental, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(source: &str) -> ParseResult {
        parse(source, ParseMode::Lenient).expect("tune should parse")
    }

    fn err(source: &str, mode: ParseMode) -> Vec<Diagnostic> {
        parse(source, mode).expect_err("tune should fail")
    }

    #[test]
    fn scale_parses_field_by_field() {
        let result = ok("X:1\nM:4/4\nL:1/8\nK:C\nCDEFGABc|");
        let score = result.score;
        assert_eq!(score.index, 1);
        assert_eq!(score.meter, Meter::new(4, 4).unwrap());
        assert_eq!(score.unit_length, Fraction::new(1, 8));
        assert_eq!(score.tempo_qpm, 120.0);
        assert_eq!(score.voices.len(), 1);
        let notes: Vec<&Note> = score.voices[0]
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::Note(n) => Some(n),
                _ => None,
            })
            .collect();
        assert_eq!(notes.len(), 8);
        assert_eq!(notes[0].letter, 'C');
        assert_eq!(notes[7].letter, 'c');
        assert!(result.warnings.is_empty());
    }

    #[test]
    fn missing_key_reports_first_body_line() {
        let diags = err("X:1\nM:4/4\nL:1/8\nCDEF|", ParseMode::Lenient);
        let e = diags.iter().find(|d| d.code == codes::MISSING_KEY).unwrap();
        assert_eq!((e.line, e.col), (4, 1));
    }

    #[test]
    fn grace_notes_lenient_warn_strict_error() {
        let result = ok("X:1\nK:C\n{gc}C|");
        let musical: usize = result.score.voices[0]
            .elements
            .iter()
            .filter(|e| e.is_musical())
            .count();
        assert_eq!(musical, 1);
        assert_eq!(result.warnings.len(), 1);
        assert_eq!(result.warnings[0].code, codes::UNSUPPORTED);

        let diags = err("X:1\nK:C\n{gc}C|", ParseMode::Strict);
        assert!(diags.iter().any(|d| d.code == codes::UNSUPPORTED && d.is_error()));
    }

    #[test]
    fn default_unit_length_follows_meter_value() {
        assert_eq!(ok("X:1\nM:4/4\nK:C\nC|").score.unit_length, Fraction::new(1, 8));
        assert_eq!(ok("X:1\nM:6/8\nK:C\nC|").score.unit_length, Fraction::new(1, 8));
        assert_eq!(ok("X:1\nM:2/4\nK:C\nC|").score.unit_length, Fraction::new(1, 16));
        // No meter at all: 4/4 assumed, so 1/8.
        assert_eq!(ok("X:1\nK:C\nC|").score.unit_length, Fraction::new(1, 8));
    }

    #[test]
    fn tempo_forms() {
        assert_eq!(ok("X:1\nQ:90\nK:C\nC|").score.tempo_qpm, 90.0);
        assert_eq!(ok("X:1\nQ:1/4=90\nK:C\nC|").score.tempo_qpm, 90.0);
        assert_eq!(ok("X:1\nQ:1/8=240\nK:C\nC|").score.tempo_qpm, 120.0);
        assert_eq!(ok("X:1\nK:C\nC|").score.tempo_qpm, 120.0);
    }

    #[test]
    fn bad_duration_is_an_error() {
        let diags = err("X:1\nK:C\nC0 D|", ParseMode::Lenient);
        let e = diags.iter().find(|d| d.code == codes::BAD_DURATION).unwrap();
        assert_eq!((e.line, e.col), (3, 1));
    }

    #[test]
    fn unbalanced_chord_is_an_error() {
        let diags = err("X:1\nK:C\n[CEG\n", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::UNBALANCED_CHORD));
    }

    #[test]
    fn tuplet_range_enforced() {
        let diags = err("X:1\nK:C\n(1C|", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::BAD_TUPLET));
        let diags = err("X:1\nK:C\n(10CDEFGABcde|", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::BAD_TUPLET));
        assert!(parse("X:1\nK:C\n(9CDEFGABcd|", ParseMode::Lenient).is_ok());
    }

    #[test]
    fn tuplet_scales_following_notes() {
        let result = ok("X:1\nM:4/4\nL:1/8\nK:C\n(3CDE F|");
        let durs: Vec<Fraction> = result.score.voices[0]
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::Note(n) => Some(n.duration),
                _ => None,
            })
            .collect();
        assert_eq!(
            durs,
            vec![
                Fraction::new(2, 3),
                Fraction::new(2, 3),
                Fraction::new(2, 3),
                Fraction::new(1, 1)
            ]
        );
    }

    #[test]
    fn broken_rhythm_adjusts_both_sides() {
        let result = ok("X:1\nM:4/4\nL:1/8\nK:C\nC>D E<F|");
        let durs: Vec<Fraction> = result.score.voices[0]
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::Note(n) => Some(n.duration),
                _ => None,
            })
            .collect();
        assert_eq!(
            durs,
            vec![
                Fraction::new(3, 2),
                Fraction::new(1, 2),
                Fraction::new(1, 2),
                Fraction::new(3, 2)
            ]
        );
    }

    #[test]
    fn voices_collected_in_order() {
        let result = ok("X:1\nM:4/4\nL:1/8\nK:C\nV:1\nCDEF|\nV:2\nGABc|\nV:1\ncBAG|");
        let score = result.score;
        assert_eq!(score.voices.len(), 2);
        assert_eq!(score.voices[0].id.as_deref(), Some("1"));
        assert_eq!(score.voices[1].id.as_deref(), Some("2"));
        assert_eq!(
            score.voices[0].elements.iter().filter(|e| e.is_musical()).count(),
            8
        );
    }

    #[test]
    fn second_tune_ignored_with_warning() {
        let result = ok("X:1\nK:C\nCDEF|\nX:2\nK:G\nGABc|");
        assert_eq!(result.score.voices[0].elements.iter().filter(|e| e.is_musical()).count(), 4);
        assert!(result.warnings.iter().any(|d| d.code == codes::MULTI_TUNE));
    }

    #[test]
    fn empty_body_is_an_error() {
        let diags = err("X:1\nM:4/4\nK:C\n", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::EMPTY_BODY));
    }

    #[test]
    fn empty_input_is_missing_key() {
        let diags = err("", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::MISSING_KEY));
        assert_eq!(diags[0].line, 1);
    }

    #[test]
    fn canonical_roundtrip_is_structurally_equal() {
        let sources = [
            "X:1\nT:Sample\nM:6/8\nL:1/8\nQ:1/4=96\nK:G\nGAB c2d|e3-e3|[GBd]2 z4|",
            "X:1\nM:4/4\nL:1/8\nK:Am\n(3ABc A>B z2|",
            "X:1\nK:C\nC,',D''|", // odd octave spellings survive
        ];
        for source in sources {
            let first = ok(source).score;
            let canon = first.to_canonical_abc();
            let second = ok(&canon).score;
            assert_eq!(first, second, "canonical form of {source:?} re-parses equal");
        }
    }

    #[test]
    fn strict_mode_rejects_unknown_tokens() {
        assert!(parse("X:1\nK:C\nC@D|", ParseMode::Lenient).is_ok());
        let diags = err("X:1\nK:C\nC@D|", ParseMode::Strict);
        assert!(diags.iter().any(|d| d.code == codes::UNKNOWN_TOKEN && d.is_error()));
    }

    #[test]
    fn key_parsing_variants() {
        assert!(parse("X:1\nK:F#m\nC|", ParseMode::Lenient).is_ok());
        assert!(parse("X:1\nK:Bb major\nC|", ParseMode::Lenient).is_ok());
        assert!(parse("X:1\nK:a minor\nC|", ParseMode::Lenient).is_ok());
        let diags = err("X:1\nK:H\nC|", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::BAD_HEADER));
        let diags = err("X:1\nK:D dorian\nC|", ParseMode::Lenient);
        assert!(diags.iter().any(|d| d.code == codes::BAD_HEADER));
    }
}
