use thiserror::Error;

use super::MemoryGraph;

#[derive(Debug, Error)]
#[error("graph parse error at byte {offset}: {message}")]
pub struct GraphParseError {
    pub offset: usize,
    pub message: String,
}

/// Pretty JSON with struct-declared key order; byte-identical for equal graphs.
pub fn serialize_graph(graph: &MemoryGraph) -> String {
    let mut out = serde_json::to_string_pretty(graph).expect("graph serialises");
    out.push('\n');
    out
}

pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in bytes.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

pub fn parse_graph(bytes: &[u8]) -> Result<MemoryGraph, GraphParseError> {
    serde_json::from_slice(bytes).map_err(|e| GraphParseError {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })
}
