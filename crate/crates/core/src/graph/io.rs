//! Edge-list readers and writers.
//!
//! Plain text: one `src dst [weight]` per line, whitespace separated, weight
//! defaults to 1. `#` starts a comment. A comment of the form
//! `# vertices: N` fixes the vertex count; otherwise it is one more than the
//! largest endpoint.
//!
//! Binary: `b"TGRA"`, `u32` version (1), `u64` vertex count, `u64` edge
//! count, then one `(u32 src, u32 dst, u32 weight)` triple per edge. All
//! integers little-endian.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CsrGraph, Edge, GraphError};

pub const BINARY_MAGIC: &[u8; 4] = b"TGRA";
pub const BINARY_VERSION: u32 = 1;
const BINARY_HEADER_BYTES: usize = 4 + 4 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeListFormat {
    PlainText,
    Binary,
}

impl FromStr for EdgeListFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain_text" | "text" | "txt" => Ok(Self::PlainText),
            "binary" | "bin" | "tgra" => Ok(Self::Binary),
            other => Err(format!("unknown edge-list format `{other}`")),
        }
    }
}

impl EdgeListFormat {
    /// Guesses the format from a file extension; `.tgra`/`.bin` are binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tgra") | Some("bin") => Self::Binary,
            _ => Self::PlainText,
        }
    }
}

pub fn load_edge_list(path: &Path, format: EdgeListFormat) -> Result<CsrGraph, GraphError> {
    let bytes = fs::read(path)?;
    match format {
        EdgeListFormat::PlainText => {
            let text = String::from_utf8(bytes).map_err(|_| GraphError::Parse {
                line: 0,
                reason: "file is not valid UTF-8".into(),
            })?;
            parse_plain_text(&text)
        }
        EdgeListFormat::Binary => decode_binary(&bytes),
    }
}

pub fn save_edge_list(graph: &CsrGraph, path: &Path, format: EdgeListFormat) -> Result<(), GraphError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    match format {
        EdgeListFormat::PlainText => {
            writeln!(out, "# vertices: {}", graph.num_vertices())?;
            for e in graph.edges() {
                writeln!(out, "{} {} {}", e.src, e.dst, e.weight)?;
            }
        }
        EdgeListFormat::Binary => out.write_all(&encode_binary(graph))?,
    }
    out.flush()?;
    Ok(())
}

pub fn parse_plain_text(text: &str) -> Result<CsrGraph, GraphError> {
    let mut edges = Vec::new();
    let mut declared: Option<usize> = None;
    let mut max_endpoint: Option<u32> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (body, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if let Some(n) = comment.and_then(parse_vertex_header) {
            declared = Some(n.map_err(|reason| GraphError::Parse { line: line_no, reason })?);
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("expected `src dst [weight]`, found {} fields", fields.len()),
            });
        }
        let field = |idx: usize, name: &str| -> Result<u32, GraphError> {
            fields[idx].parse::<u32>().map_err(|e| GraphError::Parse {
                line: line_no,
                reason: format!("bad {name} `{}`: {e}", fields[idx]),
            })
        };
        let src = field(0, "source")?;
        let dst = field(1, "destination")?;
        let weight = if fields.len() == 3 { field(2, "weight")? } else { 1 };
        if weight == 0 {
            return Err(GraphError::Parse {
                line: line_no,
                reason: "zero-weight edge".into(),
            });
        }
        max_endpoint = max_endpoint.max(Some(src.max(dst)));
        edges.push(Edge::new(src, dst, weight));
    }

    let num_vertices = declared.unwrap_or_else(|| max_endpoint.map_or(0, |m| m as usize + 1));
    CsrGraph::build(num_vertices, &edges)
}

fn parse_vertex_header(comment: &str) -> Option<Result<usize, String>> {
    let rest = comment.trim().strip_prefix("vertices:")?;
    Some(
        rest.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad vertex-count header: {e}")),
    )
}

pub fn encode_binary(graph: &CsrGraph) -> Vec<u8> {
    let mut buf = Vec::with_capacity(BINARY_HEADER_BYTES + 12 * graph.num_edges());
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&(graph.num_vertices() as u64).to_le_bytes());
    buf.extend_from_slice(&(graph.num_edges() as u64).to_le_bytes());
    for e in graph.edges() {
        buf.extend_from_slice(&e.src.to_le_bytes());
        buf.extend_from_slice(&e.dst.to_le_bytes());
        buf.extend_from_slice(&e.weight.to_le_bytes());
    }
    buf
}

pub fn decode_binary(bytes: &[u8]) -> Result<CsrGraph, GraphError> {
    if bytes.len() < BINARY_HEADER_BYTES {
        return Err(GraphError::BadBinary("truncated header".into()));
    }
    if &bytes[0..4] != BINARY_MAGIC {
        return Err(GraphError::BadBinary("missing TGRA magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(GraphError::BadBinary(format!("unsupported version {version}")));
    }
    let num_vertices = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let num_edges = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let body = &bytes[BINARY_HEADER_BYTES..];
    if (body.len() as u64) != num_edges.saturating_mul(12) {
        return Err(GraphError::BadBinary(format!(
            "header declares {num_edges} edges but body holds {} bytes",
            body.len()
        )));
    }
    let word = |c: &[u8], i: usize| u32::from_le_bytes(c[4 * i..4 * i + 4].try_into().unwrap());
    let edges: Vec<Edge> = body
        .chunks_exact(12)
        .map(|c| Edge::new(word(c, 0), word(c, 1), word(c, 2)))
        .collect();
    CsrGraph::build(num_vertices as usize, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate::{generate_rmat, RmatParams};

    #[test]
    fn parses_weighted_lines() {
        let g = parse_plain_text("0 1 5\n1 2 2\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.weights(), &[5, 2]);
    }

    #[test]
    fn weight_defaults_to_one() {
        let g = parse_plain_text("0 1\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.weights(), &[1]);
    }

    #[test]
    fn comments_and_header() {
        let g = parse_plain_text("# vertices: 10\n# a comment\n\n3 4 7 # trailing\n").unwrap();
        assert_eq!(g.num_vertices(), 10);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn reports_line_numbers() {
        match parse_plain_text("0 1\n0 x\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_plain_text("0 1 2 3\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binary_round_trip_through_file() {
        let edges = generate_rmat(&RmatParams::new(8, 4, 3)).unwrap();
        let g = CsrGraph::build(1 << 8, &edges).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tgra");
        save_edge_list(&g, &path, EdgeListFormat::Binary).unwrap();
        let back = load_edge_list(&path, EdgeListFormat::Binary).unwrap();
        assert_eq!(back.offsets(), g.offsets());
        assert_eq!(back.dests(), g.dests());
        assert_eq!(back.weights(), g.weights());

        let text = dir.path().join("g.txt");
        save_edge_list(&g, &text, EdgeListFormat::PlainText).unwrap();
        assert_eq!(load_edge_list(&text, EdgeListFormat::PlainText).unwrap(), g);
    }

    #[test]
    fn binary_header_layout() {
        let g = CsrGraph::build(3, &[Edge::new(2, 0, 9)]).unwrap();
        let bytes = encode_binary(&g);
        assert_eq!(&bytes[..4], b"TGRA");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..16], 3u64.to_le_bytes());
        assert_eq!(bytes[16..24], 1u64.to_le_bytes());
        assert_eq!(bytes[24..], [2, 0, 0, 0, 0, 0, 0, 0, 9, 0, 0, 0]);
    }

    #[test]
    fn rejects_corrupt_binary() {
        let g = CsrGraph::build(3, &[Edge::new(2, 0, 9)]).unwrap();
        let mut bytes = encode_binary(&g);
        bytes.pop();
        assert!(matches!(decode_binary(&bytes), Err(GraphError::BadBinary(_))));
        bytes[0] = b'X';
        assert!(matches!(decode_binary(&bytes), Err(GraphError::BadBinary(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_edge_list(Path::new("/nonexistent/g.tgra"), EdgeListFormat::Binary);
        assert!(matches!(err, Err(GraphError::Io(_))));
    }
}
