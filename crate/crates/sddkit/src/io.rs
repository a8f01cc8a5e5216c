//! Text formats: Matrix Market coordinate files, graph edge lists, and
//! right-hand-side vectors.
//!
//! All parsers work on in-memory text and return typed errors with line
//! numbers; they never panic on malformed input. The `parse_*` entry points
//! are exercised directly by the fuzz targets.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::sdd::SddMatrix;

/// Parses a Matrix Market file: `coordinate real symmetric`, 1-based
/// indices, lower-triangle storage. The result is validated as an
/// [`SddMatrix`] (symmetry, dominance, finite entries).
pub fn parse_matrix_market(text: &str) -> Result<SddMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input, expected %%MatrixMarket header"))?;
    parse_header(header)?;

    let mut size_line = None;
    for (idx, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, trimmed));
        break;
    }
    let (size_lineno, size_line) =
        size_line.ok_or_else(|| Error::parse(2, "missing size line"))?;
    let mut it = size_line.split_whitespace();
    let rows: usize = parse_token(&mut it, size_lineno, "row count")?;
    let cols: usize = parse_token(&mut it, size_lineno, "column count")?;
    let nnz: usize = parse_token(&mut it, size_lineno, "nonzero count")?;
    if rows != cols {
        return Err(Error::parse(
            size_lineno,
            format!("matrix must be square, got {rows} x {cols}"),
        ));
    }
    if rows == 0 {
        return Err(Error::parse(size_lineno, "empty matrix"));
    }
    // guards allocation on hostile inputs claiming absurd sizes
    if nnz > text.len() {
        return Err(Error::parse(
            size_lineno,
            format!("claimed {nnz} entries exceeds input size"),
        ));
    }

    let mut entries = Vec::with_capacity(nnz);
    let mut count = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let i: usize = parse_token(&mut it, lineno, "row index")?;
        let j: usize = parse_token(&mut it, lineno, "column index")?;
        let v: f64 = parse_token(&mut it, lineno, "value")?;
        if it.next().is_some() {
            return Err(Error::parse(lineno, "trailing tokens after entry"));
        }
        if i == 0 || j == 0 || i > rows || j > rows {
            return Err(Error::parse(
                lineno,
                format!("index ({i}, {j}) out of range for n = {rows} (1-based)"),
            ));
        }
        if j > i {
            return Err(Error::parse(
                lineno,
                format!("entry ({i}, {j}) lies above the diagonal; symmetric files store the lower triangle"),
            ));
        }
        if !v.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite value {v}")));
        }
        entries.push((i - 1, j - 1, v));
        count += 1;
        if count > nnz {
            return Err(Error::parse(
                lineno,
                format!("more than the declared {nnz} entries"),
            ));
        }
    }
    if count < nnz {
        return Err(Error::parse(
            0,
            format!("expected {nnz} entries, found {count}"),
        ));
    }
    SddMatrix::from_entries(rows, entries)
}

fn parse_header(header: &str) -> Result<()> {
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    let expect = ["%%matrixmarket", "matrix", "coordinate", "real", "symmetric"];
    if fields.len() != expect.len() {
        return Err(Error::parse(
            1,
            format!("malformed header {header:?}; expected `%%MatrixMarket matrix coordinate real symmetric`"),
        ));
    }
    for (got, want) in fields.iter().zip(expect) {
        if got != want {
            return Err(Error::parse(
                1,
                format!("unsupported header field {got:?}, expected {want:?}"),
            ));
        }
    }
    Ok(())
}

fn parse_token<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace<'_>,
    lineno: usize,
    what: &str,
) -> Result<T> {
    let tok = it
        .next()
        .ok_or_else(|| Error::parse(lineno, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(lineno, format!("invalid {what}: {tok:?}")))
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SddMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

/// Serializes in canonical order: diagonal first within each row, then the
/// sub-diagonal entries, ascending. Values are written with Rust's shortest
/// round-trip float formatting, so load after store is exact.
pub fn matrix_market_to_string(a: &SddMatrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz());
    for (i, &d) in a.diag().iter().enumerate() {
        if d != 0.0 {
            entries.push((i, i, d));
        }
    }
    for &(i, j, v) in a.off_diagonals() {
        entries.push((j.max(i), j.min(i), v));
    }
    entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
    let _ = writeln!(out, "{} {} {}", a.n(), a.n(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
    }
    out
}

pub fn store_matrix_market(a: &SddMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, matrix_market_to_string(a))?;
    Ok(())
}

/// Parses the edge-list graph format: a `n m` header line followed by `m`
/// lines `u v w` with 0-based endpoints and positive weights.
pub fn parse_graph_text(text: &str) -> Result<WeightedGraph> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input, expected `n m` header"))?;
    let mut it = header.split_whitespace();
    let n: usize = parse_token(&mut it, 1, "vertex count")?;
    let m: usize = parse_token(&mut it, 1, "edge count")?;
    if m > text.len() {
        return Err(Error::parse(1, format!("claimed {m} edges exceeds input size")));
    }
    let mut edges = Vec::with_capacity(m);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut it = line.split_whitespace();
        let u: usize = parse_token(&mut it, lineno, "endpoint")?;
        let v: usize = parse_token(&mut it, lineno, "endpoint")?;
        let w: f64 = parse_token(&mut it, lineno, "weight")?;
        edges.push((u, v, w));
        if edges.len() > m {
            return Err(Error::parse(lineno, format!("more than the declared {m} edges")));
        }
    }
    if edges.len() < m {
        return Err(Error::parse(
            0,
            format!("expected {m} edges, found {}", edges.len()),
        ));
    }
    WeightedGraph::new(n, edges)
}

pub fn load_graph_text(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_graph_text(&text)
}

pub fn graph_to_string(g: &WeightedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.m());
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
    }
    out
}

pub fn store_graph_text(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, graph_to_string(g))?;
    Ok(())
}

/// Parses a right-hand-side vector: whitespace- or newline-separated reals.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        for tok in t.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("invalid value {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(idx + 1, format!("non-finite value {v}")));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::parse(0, "empty vector"));
    }
    Ok(out)
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_vector(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::grid2d;

    #[test]
    fn parses_a_small_laplacian() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n\
                    % a 2x2 Laplacian\n\
                    2 2 3\n1 1 1.0\n2 2 1.0\n2 1 -1.0\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a.diag(), &[1.0, 1.0]);
        assert_eq!(a.off_diagonals(), &[(0, 1, -1.0)]);
    }

    #[test]
    fn dominance_violation_names_the_row() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n\
                    2 2 3\n1 1 0.5\n2 2 2.0\n2 1 -1.0\n";
        match parse_matrix_market(text) {
            Err(Error::NotDominant { row, .. }) => assert_eq!(row, 0),
            other => panic!("expected NotDominant, got {other:?}"),
        }
    }

    #[test]
    fn header_and_shape_errors() {
        assert!(parse_matrix_market("").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real symmetric\n1 1 1\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n1 1 1\n").is_err());
        assert!(parse_matrix_market(
            "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1.0\n"
        )
        .is_err());
        // above-diagonal entry in symmetric storage
        assert!(parse_matrix_market(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n2 2 1.0\n1 2 -1.0\n"
        )
        .is_err());
        assert!(parse_matrix_market(
            "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 nan\n"
        )
        .is_err());
    }

    #[test]
    fn matrix_market_round_trip() {
        let g = grid2d(4, 4).unwrap();
        let a = SddMatrix::from_graph(&g);
        let text = matrix_market_to_string(&a);
        let b = parse_matrix_market(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn graph_text_round_trip() {
        let g = grid2d(3, 5).unwrap();
        let h = parse_graph_text(&graph_to_string(&g)).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn graph_text_errors() {
        assert!(parse_graph_text("").is_err());
        assert!(parse_graph_text("2 1\n0 0 1.0\n").is_err());
        assert!(parse_graph_text("2 2\n0 1 1.0\n").is_err());
        assert!(parse_graph_text("2 1\n0 1 -3.0\n").is_err());
    }

    #[test]
    fn vector_parsing() {
        assert_eq!(parse_vector("1.0\n2.5 -3\n").unwrap(), vec![1.0, 2.5, -3.0]);
        assert!(parse_vector("1.0\nxyz\n").is_err());
        assert!(parse_vector("inf\n").is_err());
        assert!(parse_vector("").is_err());
    }
}
