use std::collections::BTreeMap;

use super::{SourceLoc, Token, TokenSequence, Tokenization};
use crate::config::Config;
use crate::duration::{
    decompose_into_rests, ticks_to_quarters, NoteType, Rational, SymbolicDuration, TimeModification,
    MAX_DOTS,
};
use crate::ingest::{Event, Measure, NoteEvent, Part, ScoreDoc, TupletMark, TupletMarkKind};
use crate::report::{Code, Diagnostic, Location, Stage};

/// Tokenizes every part of an unfolded score.
///
/// Each measure becomes a `Bar` followed by the padded and bracketed events
/// of all its voices, ordered by `(onset, voice)`. A measure whose gaps
/// cannot be padded keeps only its `Bar`.
pub fn tokenize(doc: &ScoreDoc, config: &Config) -> Tokenization {
    let mut out = Tokenization::default();
    for (pi, part) in doc.parts.iter().enumerate() {
        let mut seq = TokenSequence {
            part: part.id.clone(),
            part_index: pi,
            ..TokenSequence::default()
        };
        for m in &part.measures {
            let ctx = Ctx {
                doc,
                part,
                part_index: pi,
                m,
                min_unit: config.min_unit,
            };
            seq.push(Token::Bar { time: m.time }, ctx.source(None));
            if let Some(tokens) = tokenize_measure(&ctx, &mut out.diagnostics) {
                for (onset, token) in tokens {
                    seq.push(token, ctx.source(Some(onset)));
                }
            }
        }
        let end = part
            .measures
            .last()
            .map(|m| SourceLoc {
                measure: m.number_label.clone(),
                measure_index: m.source_index,
                playback_index: m.playback_index,
                onset: None,
            })
            .unwrap_or_default();
        seq.push(Token::EndOfScore, end);
        out.sequences.push(seq);
    }
    out
}

struct Ctx<'a> {
    doc: &'a ScoreDoc,
    part: &'a Part,
    part_index: usize,
    m: &'a Measure,
    min_unit: Rational,
}

impl Ctx<'_> {
    fn q(&self, ticks: i64) -> Rational {
        ticks_to_quarters(ticks, self.m.divisions).expect("parser guarantees positive divisions")
    }

    fn source(&self, onset: Option<Rational>) -> SourceLoc {
        SourceLoc {
            measure: self.m.number_label.clone(),
            measure_index: self.m.source_index,
            playback_index: self.m.playback_index,
            onset,
        }
    }

    fn diag(&self, code: Code, voice: u32, onset: Rational, msg: String) -> Diagnostic {
        Diagnostic::new(
            code,
            Stage::Contextual,
            Location {
                file: self.doc.source_name.clone(),
                part: self.part.id.clone(),
                part_index: self.part_index,
                measure: self.m.number_label.clone(),
                measure_index: self.m.source_index,
                playback_index: self.m.playback_index,
                voice: Some(voice),
                onset: Some(onset),
            },
            msg,
        )
    }
}

/// A written note value matching `q` exactly, at most `max_dots` dots.
fn symbol_for(q: Rational, max_dots: u8) -> Option<SymbolicDuration> {
    NoteType::ALL.iter().find_map(|&nt| {
        (0..=max_dots)
            .map(|d| SymbolicDuration::dotted(nt, d))
            .find(|s| s.quarters() == q)
    })
}

/// One timeline position of one voice: a single note or rest, a chord,
/// or a grace note.
struct Slot<'a> {
    onset: Rational,
    end: Rational,
    notes: Vec<&'a NoteEvent>,
    /// Resolved written values, parallel to `notes`.
    symbols: Vec<SymbolicDuration>,
    grace: bool,
}

impl Slot<'_> {
    fn tm(&self) -> Option<TimeModification> {
        self.symbols[0].time_modification
    }

    /// Length inside the enclosing tuplet's metric.
    fn content(&self) -> Rational {
        if self.grace {
            Rational::ZERO
        } else {
            self.symbols[0].without_modification().quarters()
        }
    }

    fn marks(&self) -> Vec<TupletMark> {
        let mut marks: Vec<TupletMark> = Vec::new();
        for n in &self.notes {
            for mark in &n.tuplet_marks {
                if !marks
                    .iter()
                    .any(|m| m.kind == mark.kind && m.number == mark.number)
                {
                    marks.push(*mark);
                }
            }
        }
        marks
    }

    fn unit_hint(&self) -> Option<SymbolicDuration> {
        self.notes.iter().find_map(|n| n.tuplet_unit)
    }
}

struct Pad {
    onset: Rational,
    /// Inner-metric factor of the enclosing tuplets (actual/normal).
    scale: Rational,
    rests: Vec<SymbolicDuration>,
}

impl Pad {
    fn end(&self) -> Rational {
        self.onset + self.rests.iter().map(|r| r.quarters()).sum::<Rational>() * self.scale_inverse()
    }

    fn scale_inverse(&self) -> Rational {
        Rational::ONE.checked_div(self.scale).expect("scale is positive")
    }
}

struct Bracket<'a> {
    actual: u32,
    normal: u32,
    hint: Option<SymbolicDuration>,
    children: Vec<Node<'a>>,
    unit: Option<SymbolicDuration>,
}

impl Bracket<'_> {
    fn ratio(&self) -> Rational {
        Rational::new(self.actual as i128, self.normal as i128).expect("counts are positive")
    }

    fn normal_duration(&self) -> Rational {
        self.unit.expect("unit resolved before use").quarters()
            * Rational::from_integer(self.normal as i128)
    }
}

enum Node<'a> {
    Slot(Slot<'a>),
    Pad(Pad),
    Bracket(Bracket<'a>),
}

impl Node<'_> {
    fn onset(&self) -> Rational {
        match self {
            Node::Slot(s) => s.onset,
            Node::Pad(p) => p.onset,
            Node::Bracket(b) => b.children[0].onset(),
        }
    }

    fn end(&self) -> Rational {
        match self {
            Node::Slot(s) => s.end,
            Node::Pad(p) => p.end(),
            Node::Bracket(b) => b
                .children
                .iter()
                .map(Node::end)
                .max()
                .expect("brackets are never empty"),
        }
    }

    fn content(&self) -> Rational {
        match self {
            Node::Slot(s) => s.content(),
            Node::Pad(p) => p.rests.iter().map(|r| r.quarters()).sum(),
            Node::Bracket(b) => b.normal_duration(),
        }
    }

    fn grace(&self) -> bool {
        matches!(self, Node::Slot(s) if s.grace)
    }
}

fn tokenize_measure(ctx: &Ctx, diags: &mut Vec<Diagnostic>) -> Option<Vec<(Rational, Token)>> {
    let mut voices: BTreeMap<u32, Vec<(usize, &NoteEvent)>> = BTreeMap::new();
    for (i, e) in ctx.m.events.iter().enumerate() {
        if let Event::Note(n) = e {
            voices.entry(n.voice).or_default().push((i, n));
        }
    }

    let mut slots_by_voice = Vec::new();
    for (&voice, notes) in &voices {
        slots_by_voice.push((voice, build_slots(ctx, voice, notes, diags)?));
    }

    let nominal = ctx.m.time.quarters();
    let target = slots_by_voice
        .iter()
        .flat_map(|(_, slots)| slots.iter().map(|s| s.end))
        .max()
        .map_or(Rational::ZERO, |e| e.min(nominal));

    let mut all: Vec<(Rational, u32, Token)> = Vec::new();
    for (voice, slots) in slots_by_voice {
        let grace_only = slots.iter().all(|s| s.grace);
        let full_rest = slots
            .iter()
            .any(|s| s.notes.iter().any(|n| n.full_measure_rest));
        let nodes = group_explicit(ctx, voice, slots, diags);
        let nodes = group_implicit(nodes);
        let nodes = if grace_only {
            nodes
        } else {
            let trailing = (!full_rest).then_some(target);
            pad_level(ctx, voice, nodes, Some(Rational::ZERO), trailing, Rational::ONE, diags)?
        };
        let mut nodes = nodes;
        nodes.iter_mut().for_each(resolve_units);
        let mut tokens = Vec::new();
        let mut last = Rational::ZERO;
        for n in &nodes {
            emit(n, voice, &mut tokens, &mut last);
        }
        all.extend(tokens.into_iter().map(|(o, t)| (o, voice, t)));
    }
    // voice sequences are already chronological; a stable sort interleaves
    // them without reordering any voice
    all.sort_by_key(|a| (a.0, a.1));
    Some(all.into_iter().map(|(o, _, t)| (o, t)).collect())
}

fn build_slots<'a>(
    ctx: &Ctx,
    voice: u32,
    notes: &[(usize, &'a NoteEvent)],
    diags: &mut Vec<Diagnostic>,
) -> Option<Vec<Slot<'a>>> {
    let mut sorted: Vec<(Rational, usize, &NoteEvent)> = notes
        .iter()
        .map(|&(i, n)| (ctx.q(n.onset_ticks), i, n))
        .collect();
    sorted.sort_by_key(|a| (a.0, a.1));

    let mut slots = Vec::new();
    let mut k = 0;
    while k < sorted.len() {
        let onset = sorted[k].0;
        let group: Vec<&NoteEvent> = sorted[k..]
            .iter()
            .take_while(|(o, _, _)| *o == onset)
            .map(|&(_, _, n)| n)
            .collect();
        k += group.len();

        let mut graces = Vec::new();
        let mut others: Vec<Vec<&NoteEvent>> = Vec::new();
        let mut pitched = Vec::new();
        for &n in &group {
            if n.grace {
                if !n.is_rest() {
                    graces.push(n);
                }
            } else if n.is_rest() {
                others.push(vec![n]);
            } else {
                if pitched.is_empty() {
                    others.push(Vec::new());
                }
                pitched.push(n);
            }
        }
        // the chord takes the position of its first member among the rests
        if let Some(chord) = others.iter_mut().find(|g| g.is_empty()) {
            *chord = pitched;
        }

        for g in graces {
            let sym = g
                .symbolic
                .unwrap_or(SymbolicDuration::plain(NoteType::Eighth));
            slots.push(Slot {
                onset,
                end: onset + ctx.q(g.ticks),
                notes: vec![g],
                symbols: vec![sym],
                grace: true,
            });
        }
        for members in others {
            let mut symbols = Vec::new();
            for n in &members {
                let sym = match n.symbolic {
                    Some(s) => s,
                    None if n.full_measure_rest => SymbolicDuration::plain(NoteType::Whole),
                    None => match symbol_for(ctx.q(n.ticks), MAX_DOTS) {
                        Some(s) => s,
                        None => {
                            diags.push(
                                ctx.diag(
                                    Code::MissingSymbolicDuration,
                                    voice,
                                    onset,
                                    format!(
                                        "measure not checked: {} has no <type> and lasts {} quarters, which no note value matches",
                                        n.describe(),
                                        ctx.q(n.ticks)
                                    ),
                                ),
                            );
                            return None;
                        }
                    },
                };
                symbols.push(sym);
            }
            let end = onset + members.iter().map(|n| ctx.q(n.ticks)).max().unwrap_or(Rational::ZERO);
            slots.push(Slot {
                onset,
                end,
                notes: members,
                symbols,
                grace: false,
            });
        }
    }
    Some(slots)
}

struct Open<'a> {
    numbers: Vec<u32>,
    bracket: Bracket<'a>,
}

fn close_top<'a>(stack: &mut Vec<Open<'a>>, top: &mut Vec<Node<'a>>) {
    let open = stack.pop().expect("caller checks the stack");
    let node = Node::Bracket(open.bracket);
    match stack.last_mut() {
        Some(parent) => parent.bracket.children.push(node),
        None => top.push(node),
    }
}

/// Brackets from `<tuplet type="start|stop">` notations.
fn group_explicit<'a>(
    ctx: &Ctx,
    voice: u32,
    slots: Vec<Slot<'a>>,
    diags: &mut Vec<Diagnostic>,
) -> Vec<Node<'a>> {
    let mut top = Vec::new();
    let mut stack: Vec<Open> = Vec::new();
    let mut absorbed: Vec<u32> = Vec::new();
    let mut warn = |onset: Rational, msg: String| {
        diags.push(ctx.diag(Code::MalformedTupletMarking, voice, onset, msg));
    };

    for slot in slots {
        let onset = slot.onset;
        let marks = slot.marks();
        let mut starts: Vec<&TupletMark> = marks
            .iter()
            .filter(|m| m.kind == TupletMarkKind::Start)
            .collect();
        starts.sort_by_key(|m| m.number);
        let mut stops: Vec<&TupletMark> = marks
            .iter()
            .filter(|m| m.kind == TupletMarkKind::Stop)
            .collect();
        stops.sort_by_key(|m| std::cmp::Reverse(m.number));

        if !starts.is_empty() {
            for s in &starts {
                if let Some(pos) = stack.iter().position(|o| o.numbers.contains(&s.number)) {
                    warn(onset, format!("tuplet {} restarted before it was stopped", s.number));
                    while stack.len() > pos {
                        close_top(&mut stack, &mut top);
                    }
                }
            }
            let from_tm = slot.tm().map(|t| (t.actual, t.normal));
            let levels: Vec<(Vec<u32>, Option<(u32, u32)>)> = if starts.len() == 1 {
                vec![(vec![starts[0].number], starts[0].explicit_ratio.or(from_tm))]
            } else if starts.iter().all(|s| s.explicit_ratio.is_some()) {
                starts
                    .iter()
                    .map(|s| (vec![s.number], s.explicit_ratio))
                    .collect()
            } else {
                warn(
                    onset,
                    "nested tuplets start on one note without <tuplet-actual>/<tuplet-normal>; treated as one tuplet".into(),
                );
                vec![(starts.iter().map(|s| s.number).collect(), from_tm)]
            };
            let innermost = levels.len() - 1;
            for (depth, (numbers, ratio)) in levels.into_iter().enumerate() {
                match ratio {
                    Some((actual, normal)) if actual > 0 && normal > 0 => stack.push(Open {
                        numbers,
                        bracket: Bracket {
                            actual,
                            normal,
                            hint: (depth == innermost).then(|| slot.unit_hint()).flatten(),
                            children: Vec::new(),
                            unit: None,
                        },
                    }),
                    _ => warn(onset, "tuplet start on a note without time modification".into()),
                }
            }
        }

        let node = Node::Slot(slot);
        match stack.last_mut() {
            Some(open) => open.bracket.children.push(node),
            None => top.push(node),
        }

        for s in stops {
            if let Some(pos) = stack.iter().rposition(|o| o.numbers.contains(&s.number)) {
                if pos + 1 != stack.len() {
                    warn(onset, "inner tuplet not stopped before its enclosing tuplet".into());
                }
                while stack.len() > pos + 1 {
                    close_top(&mut stack, &mut top);
                }
                absorbed.extend(stack[pos].numbers.iter().filter(|&&n| n != s.number));
                close_top(&mut stack, &mut top);
            } else if let Some(i) = absorbed.iter().position(|&n| n == s.number) {
                absorbed.remove(i);
            } else {
                warn(onset, format!("tuplet {} stopped but never started", s.number));
            }
        }
    }
    if !stack.is_empty() {
        let onset = stack[0].bracket.children[0].onset();
        warn(onset, "tuplet not stopped before the end of the measure".into());
        while !stack.is_empty() {
            close_top(&mut stack, &mut top);
        }
    }
    top
}

/// Unit for a bracket whose inner content is `content`: the written value
/// that fits `actual` times, if there is one.
fn unit_from_content(content: Rational, actual: u32) -> Option<SymbolicDuration> {
    let q = content.checked_div(Rational::from_integer(actual as i128))?;
    symbol_for(q, 2)
}

fn shortest_member(nodes: &[Node]) -> Option<SymbolicDuration> {
    nodes
        .iter()
        .filter_map(|n| match n {
            Node::Slot(s) if !s.grace => Some(s.symbols[0].without_modification()),
            _ => None,
        })
        .min_by_key(|s| s.quarters())
}

fn flush_run<'a>(pending: &mut Vec<Node<'a>>, run_tm: Option<TimeModification>, out: &mut Vec<Node<'a>>) {
    // trailing graces stay outside the bracket
    let mut tail = Vec::new();
    while pending.last().is_some_and(Node::grace) {
        tail.push(pending.pop().expect("checked"));
    }
    if let Some(tm) = run_tm.filter(|_| !pending.is_empty()) {
        out.extend(chunk_run(std::mem::take(pending), tm));
    }
    out.extend(tail.into_iter().rev());
}

/// Runs of time-modified notes outside any marked bracket.
fn group_implicit(nodes: Vec<Node>) -> Vec<Node> {
    let mut out = Vec::new();
    let mut pending: Vec<Node> = Vec::new();
    let mut run_tm: Option<TimeModification> = None;

    for node in nodes {
        let tm = match &node {
            Node::Slot(s) if !s.grace => s.tm(),
            _ => None,
        };
        match (&node, tm) {
            (Node::Slot(s), _) if s.grace && run_tm.is_some() => pending.push(node),
            (_, Some(tm)) if run_tm == Some(tm) => pending.push(node),
            (_, Some(tm)) => {
                flush_run(&mut pending, run_tm, &mut out);
                run_tm = Some(tm);
                pending.push(node);
            }
            _ => {
                flush_run(&mut pending, run_tm, &mut out);
                run_tm = None;
                out.push(node);
            }
        }
    }
    flush_run(&mut pending, run_tm, &mut out);
    out
}

fn chunk_run(run: Vec<Node>, tm: TimeModification) -> Vec<Node> {
    fn bracket(children: Vec<Node>, tm: TimeModification) -> Node {
        let hint = children.iter().find_map(|n| match n {
            Node::Slot(s) => s.unit_hint(),
            _ => None,
        });
        Node::Bracket(Bracket {
            actual: tm.actual,
            normal: tm.normal,
            hint,
            children,
            unit: None,
        })
    }
    let total: Rational = run.iter().map(Node::content).sum();
    if unit_from_content(total, tm.actual).is_some() {
        return vec![bracket(run, tm)];
    }
    let unit = run
        .iter()
        .find_map(|n| match n {
            Node::Slot(s) => s.unit_hint(),
            _ => None,
        })
        .or_else(|| shortest_member(&run))
        .expect("a run holds at least one non-grace slot");
    let target = unit.quarters() * Rational::from_integer(tm.actual as i128);

    let mut out = Vec::new();
    let mut chunk = Vec::new();
    let mut filled = Rational::ZERO;
    for n in run {
        filled += n.content();
        chunk.push(n);
        if filled >= target {
            out.push(bracket(std::mem::take(&mut chunk), tm));
            filled = Rational::ZERO;
        }
    }
    if !chunk.is_empty() {
        out.push(bracket(chunk, tm));
    }
    out
}

fn pad<'a>(
    ctx: &Ctx,
    voice: u32,
    from: Rational,
    to: Rational,
    scale: Rational,
    diags: &mut Vec<Diagnostic>,
) -> Option<Node<'a>> {
    let inner = (to - from) * scale;
    match decompose_into_rests(inner, ctx.min_unit) {
        Ok(Some(rests)) => Some(Node::Pad(Pad {
            onset: from,
            scale,
            rests,
        })),
        _ => {
            diags.push(
                ctx.diag(
                    Code::PaddingImpossible,
                    voice,
                    from,
                    format!(
                        "gap of {} quarters is not a sum of rests of at least {} quarters; measure not checked",
                        to - from,
                        ctx.min_unit
                    ),
                )
                .with_data("gap", to - from),
            );
            None
        }
    }
}

/// Fills gaps between consecutive nodes of one nesting level with rests.
fn pad_level<'a>(
    ctx: &Ctx,
    voice: u32,
    nodes: Vec<Node<'a>>,
    start: Option<Rational>,
    trailing: Option<Rational>,
    scale: Rational,
    diags: &mut Vec<Diagnostic>,
) -> Option<Vec<Node<'a>>> {
    let mut out = Vec::new();
    let mut cursor = start;
    for node in nodes {
        let node = match node {
            Node::Bracket(b) => {
                let inner_scale = scale * b.ratio();
                let children = pad_level(ctx, voice, b.children, None, None, inner_scale, diags)?;
                Node::Bracket(Bracket { children, ..b })
            }
            other => other,
        };
        let onset = node.onset();
        if let Some(c) = cursor {
            if onset > c {
                out.push(pad(ctx, voice, c, onset, scale, diags)?);
            }
        }
        let end = node.end();
        cursor = Some(cursor.map_or(end, |c| c.max(end)));
        out.push(node);
    }
    if let (Some(t), Some(c)) = (trailing, cursor) {
        if t > c {
            out.push(pad(ctx, voice, c, t, scale, diags)?);
        }
    }
    Some(out)
}

fn resolve_units(node: &mut Node) {
    if let Node::Bracket(b) = node {
        b.children.iter_mut().for_each(resolve_units);
        let content: Rational = b.children.iter().map(Node::content).sum();
        let unit = unit_from_content(content, b.actual)
            .or(b.hint)
            .or_else(|| shortest_member(&b.children))
            .unwrap_or(SymbolicDuration::plain(NoteType::Quarter));
        b.unit = Some(unit);
    }
}

fn emit(node: &Node, voice: u32, out: &mut Vec<(Rational, Token)>, last: &mut Rational) {
    match node {
        Node::Slot(s) => {
            *last = s.onset;
            if s.grace {
                let n = s.notes[0];
                out.push((
                    s.onset,
                    Token::Note {
                        voice,
                        pitch: n.pitch.expect("grace rests are dropped"),
                        duration: s.symbols[0].without_modification(),
                        is_grace: true,
                        is_tied: false,
                    },
                ));
                return;
            }
            let note = |n: &NoteEvent, sym: &SymbolicDuration| match n.pitch {
                Some(pitch) => Token::Note {
                    voice,
                    pitch,
                    duration: sym.without_modification(),
                    is_grace: false,
                    is_tied: n.tie_start,
                },
                None => Token::Rest {
                    voice,
                    duration: sym.without_modification(),
                    full_measure: n.full_measure_rest,
                    synthetic: false,
                },
            };
            if s.notes.len() == 1 {
                out.push((s.onset, note(s.notes[0], &s.symbols[0])));
            } else {
                out.push((
                    s.onset,
                    Token::ChordStart {
                        voice,
                        duration: s.symbols[0].without_modification(),
                        is_grace: false,
                    },
                ));
                for (n, sym) in s.notes.iter().zip(&s.symbols) {
                    out.push((s.onset, note(n, sym)));
                }
                out.push((s.onset, Token::ChordEnd { voice }));
            }
        }
        Node::Pad(p) => {
            let mut onset = p.onset;
            for r in &p.rests {
                *last = onset;
                out.push((
                    onset,
                    Token::Rest {
                        voice,
                        duration: *r,
                        full_measure: false,
                        synthetic: true,
                    },
                ));
                onset += r.quarters() * p.scale_inverse();
            }
        }
        Node::Bracket(b) => {
            let onset = node.onset();
            *last = onset;
            out.push((
                onset,
                Token::TupletStart {
                    voice,
                    base_unit: b.unit.expect("units resolved before emission"),
                    n_normal: b.normal,
                    n_actual: b.actual,
                },
            ));
            for c in &b.children {
                emit(c, voice, out, last);
            }
            out.push((*last, Token::TupletEnd { voice }));
        }
    }
}
