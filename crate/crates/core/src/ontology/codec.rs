//! Flat annotation strings of the form
//! `ACT:ACTIVITY [slot = value, ...] (request_slot, ...) <memory: id, ...> => API`.
//!
//! Empty sections are omitted, slots are sorted by name and memory ids ascending,
//! so flattening is canonical. Memory-valued slots render as `<memory: N>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use super::{ApiName, DialogAct, Frame, Intent, IntentActivity, SlotName, SlotValue};
use crate::memgraph::MemoryId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecErrorKind {
    #[error("missing intent")]
    MissingIntent,
    #[error("malformed intent {0:?}, expected ACT:ACTIVITY")]
    MalformedIntent(String),
    #[error("unknown act {0}")]
    UnknownAct(String),
    #[error("unknown activity {0}")]
    UnknownActivity(String),
    #[error("unknown slot {0}")]
    UnknownSlot(String),
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("duplicate slot {0}")]
    DuplicateSlot(String),
    #[error("malformed slot entry {0:?}, expected name = value")]
    MalformedSlot(String),
    #[error("unclosed {0:?}")]
    Unclosed(char),
    #[error("non-integer memory id {0:?}")]
    BadMemoryId(String),
    #[error("unexpected input {0:?}")]
    Trailing(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {position}")]
pub struct CodecError {
    pub position: usize,
    pub kind: CodecErrorKind,
}

fn err(position: usize, kind: CodecErrorKind) -> CodecError {
    CodecError { position, kind }
}

fn render_value(value: &SlotValue) -> String {
    match value {
        SlotValue::Text(s) => s.trim().to_string(),
        SlotValue::Memory { memory } => format!("<memory: {}>", memory.0),
    }
}

/// Renders a frame (and optionally the API it triggers) as a flat annotation string.
pub fn flatten_frame(frame: &Frame, api: Option<ApiName>) -> String {
    let mut out = frame.intent.to_string();
    if !frame.slots.is_empty() {
        let body: Vec<String> = frame
            .slots
            .iter()
            .map(|(k, v)| format!("{} = {}", k, render_value(v)))
            .collect();
        let _ = write!(out, " [{}]", body.join(", "));
    }
    if !frame.request_slots.is_empty() {
        let body: Vec<&str> = frame.request_slots.iter().map(|s| s.as_str()).collect();
        let _ = write!(out, " ({})", body.join(", "));
    }
    if !frame.memory_refs.is_empty() {
        let body: Vec<String> = frame.memory_refs.iter().map(|m| m.0.to_string()).collect();
        let _ = write!(out, " <memory: {}>", body.join(", "));
    }
    if let Some(api) = api {
        let _ = write!(out, " => {api}");
    }
    out
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Returns the text up to `close` (exclusive) and moves past `close`.
    fn until(&mut self, open_at: usize, open: char, close: char) -> Result<(usize, &'a str), CodecError> {
        let rest = self.rest();
        match rest.find(close) {
            Some(end) => {
                let start = self.pos;
                self.pos += end + close.len_utf8();
                Ok((start, &rest[..end]))
            }
            None => Err(err(open_at, CodecErrorKind::Unclosed(open))),
        }
    }
}

fn entry_boundary() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r",\s*[A-Za-z_]+\s*=").expect("static regex"))
}

fn parse_memory_ids(body: &str, offset: usize) -> Result<BTreeSet<MemoryId>, CodecError> {
    let mut ids = BTreeSet::new();
    if body.trim().is_empty() {
        return Ok(ids);
    }
    let mut at = offset;
    for piece in body.split(',') {
        let tok = piece.trim();
        let id = tok
            .parse::<u32>()
            .map_err(|_| err(at, CodecErrorKind::BadMemoryId(tok.to_string())))?;
        ids.insert(MemoryId(id));
        at += piece.len() + 1;
    }
    Ok(ids)
}

fn parse_slot_value(raw: &str, offset: usize) -> Result<SlotValue, CodecError> {
    let value = raw.trim();
    if let Some(inner) = value.strip_prefix("<memory:") {
        let inner = inner
            .strip_suffix('>')
            .ok_or_else(|| err(offset, CodecErrorKind::Unclosed('<')))?;
        let ids = parse_memory_ids(inner, offset)?;
        let mut it = ids.into_iter();
        return match (it.next(), it.next()) {
            (Some(id), None) => Ok(SlotValue::Memory { memory: id }),
            _ => Err(err(offset, CodecErrorKind::BadMemoryId(inner.trim().to_string()))),
        };
    }
    Ok(SlotValue::Text(value.to_string()))
}

fn parse_slots(body: &str, offset: usize) -> Result<BTreeMap<SlotName, SlotValue>, CodecError> {
    let mut slots = BTreeMap::new();
    if body.trim().is_empty() {
        return Ok(slots);
    }
    let mut starts: Vec<usize> = vec![0];
    starts.extend(entry_boundary().find_iter(body).map(|m| m.start()));
    starts.push(body.len());
    for pair in starts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mut entry = &body[lo..hi];
        let mut at = offset + lo;
        if lo > 0 {
            entry = &entry[1..];
            at += 1;
        }
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| err(at, CodecErrorKind::MalformedSlot(entry.trim().to_string())))?;
        let name_tok = name.trim();
        let slot: SlotName = name_tok
            .parse()
            .map_err(|_| err(at, CodecErrorKind::UnknownSlot(name_tok.to_string())))?;
        let value_at = at + name.len() + 1;
        let value = parse_slot_value(value, value_at)?;
        if slots.insert(slot, value).is_some() {
            return Err(err(at, CodecErrorKind::DuplicateSlot(name_tok.to_string())));
        }
    }
    Ok(slots)
}

fn parse_request_slots(body: &str, offset: usize) -> Result<BTreeSet<SlotName>, CodecError> {
    let mut out = BTreeSet::new();
    let mut at = offset;
    for piece in body.split(',') {
        let tok = piece.trim();
        if !tok.is_empty() {
            let slot = tok
                .parse()
                .map_err(|_| err(at, CodecErrorKind::UnknownSlot(tok.to_string())))?;
            out.insert(slot);
        }
        at += piece.len() + 1;
    }
    Ok(out)
}

/// Parses a flat annotation string back into a frame and optional API name.
pub fn parse_frame(text: &str) -> Result<(Frame, Option<ApiName>), CodecError> {
    let mut cur = Cursor { src: text, pos: 0 };
    cur.skip_ws();

    let intent_start = cur.pos;
    let intent_len = cur
        .rest()
        .find(|c: char| c.is_whitespace() || matches!(c, '[' | '(' | '<' | '='))
        .unwrap_or(cur.rest().len());
    if intent_len == 0 {
        return Err(err(intent_start, CodecErrorKind::MissingIntent));
    }
    let intent_tok = &cur.rest()[..intent_len];
    let (act_tok, activity_tok) = intent_tok
        .split_once(':')
        .ok_or_else(|| err(intent_start, CodecErrorKind::MalformedIntent(intent_tok.to_string())))?;
    let act: DialogAct = act_tok
        .parse()
        .map_err(|_| err(intent_start, CodecErrorKind::UnknownAct(act_tok.to_string())))?;
    let activity: IntentActivity = activity_tok.parse().map_err(|_| {
        err(
            intent_start + act_tok.len() + 1,
            CodecErrorKind::UnknownActivity(activity_tok.to_string()),
        )
    })?;
    cur.pos += intent_len;
    let mut frame = Frame::new(Intent::new(act, activity));

    cur.skip_ws();
    if cur.peek() == Some('[') {
        let open = cur.pos;
        cur.pos += 1;
        let (at, body) = cur.until(open, '[', ']')?;
        frame.slots = parse_slots(body, at)?;
    }

    cur.skip_ws();
    if cur.peek() == Some('(') {
        let open = cur.pos;
        cur.pos += 1;
        let (at, body) = cur.until(open, '(', ')')?;
        frame.request_slots = parse_request_slots(body, at)?;
    }

    cur.skip_ws();
    if cur.peek() == Some('<') {
        let open = cur.pos;
        if !cur.eat("<memory:") {
            return Err(err(open, CodecErrorKind::Trailing(cur.rest().to_string())));
        }
        let (at, body) = cur.until(open, '<', '>')?;
        frame.memory_refs = parse_memory_ids(body, at)?;
    }

    cur.skip_ws();
    let mut api = None;
    if cur.eat("=>") {
        cur.skip_ws();
        let start = cur.pos;
        let len = cur
            .rest()
            .find(char::is_whitespace)
            .unwrap_or(cur.rest().len());
        let tok = &cur.rest()[..len];
        api = Some(
            tok.parse()
                .map_err(|_| err(start, CodecErrorKind::UnknownApi(tok.to_string())))?,
        );
        cur.pos += len;
    }

    cur.skip_ws();
    if !cur.rest().is_empty() {
        return Err(err(cur.pos, CodecErrorKind::Trailing(cur.rest().to_string())));
    }
    Ok((frame, api))
}
