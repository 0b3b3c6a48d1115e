//! Model ingestion and emission: JSON bundles, JSON manifests, and Matrix
//! Market files.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use limred::lti::{make_model, StateSpaceModel};

/// Dense row-major (A, B, C) triple as stored in a JSON bundle.
#[derive(Debug, Serialize, Deserialize)]
struct Bundle {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    a: String,
    b: String,
    c: String,
}

/// Loads a stable state-space model from one file: either a JSON bundle with
/// dense row-major `a`, `b`, `c` arrays, or a JSON manifest whose `a`, `b`,
/// `c` entries are paths to Matrix Market files, resolved relative to the
/// manifest's directory.
pub fn load_model(path: &Path) -> Result<StateSpaceModel> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("a") {
        Some(serde_json::Value::Array(_)) => {
            let bundle: Bundle = serde_json::from_value(value)
                .map_err(|e| CliError::Invalid(format!("model bundle {}: {e}", path.display())))?;
            model_from_bundle(&bundle)
        }
        Some(serde_json::Value::String(_)) => {
            let manifest: Manifest = serde_json::from_value(value)
                .map_err(|e| CliError::Invalid(format!("manifest {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            load_model_triple(
                &resolve(base, &manifest.a),
                &resolve(base, &manifest.b),
                &resolve(base, &manifest.c),
            )
        }
        _ => Err(CliError::Invalid(format!(
            "{}: model file must map \"a\", \"b\", \"c\" to arrays or path strings",
            path.display()
        ))),
    }
}

/// Loads a stable state-space model from three Matrix Market files.
pub fn load_model_triple(a: &Path, b: &Path, c: &Path) -> Result<StateSpaceModel> {
    let a = read_matrix_market(a)?;
    let b = read_matrix_market(b)?;
    let c = read_matrix_market(c)?;
    make_model(a, b, c, true).map_err(CliError::from)
}

/// Writes a model as a pretty-printed JSON bundle.
pub fn write_model_bundle(path: &Path, model: &StateSpaceModel) -> Result<()> {
    let bundle = Bundle {
        a: rows_of(model.a()),
        b: rows_of(model.b()),
        c: rows_of(model.c()),
    };
    let mut text = serde_json::to_string_pretty(&bundle)
        .map_err(|e| CliError::Invalid(format!("bundle serialization: {e}")))?;
    text.push('\n');
    write_atomic(path, &text)
}

fn resolve(base: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn model_from_bundle(bundle: &Bundle) -> Result<StateSpaceModel> {
    let a = dense_from_rows("a", &bundle.a)?;
    let b = dense_from_rows("b", &bundle.b)?;
    let c = dense_from_rows("c", &bundle.c)?;
    make_model(a, b, c, true).map_err(CliError::from)
}

fn dense_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Invalid(format!("matrix \"{name}\" is empty")));
    }
    let ncols = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(CliError::Invalid(format!(
                "matrix \"{name}\": row {} has {} entries, expected {ncols}",
                i + 1,
                row.len()
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

/// Writes a file atomically: the content lands in a sibling temporary file
/// first and is renamed over the target.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

enum Layout {
    Coordinate,
    Array,
}

/// Reads a real general or symmetric Matrix Market file, coordinate or
/// array layout, into a dense matrix.
pub fn read_matrix_market(path: &Path) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    let fail = |line: usize, column: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };

    let mut lines = ContentLines::new(&text);
    let (header_line, header) = lines
        .next_raw()
        .ok_or_else(|| fail(1, 1, "empty file".into()))?;
    let toks = tokens(header);
    expect_token(&toks, 0, "%%MatrixMarket", header_line, header, &fail)?;
    expect_token(&toks, 1, "matrix", header_line, header, &fail)?;
    let layout = match toks.get(2) {
        Some(&(_, "coordinate")) => Layout::Coordinate,
        Some(&(_, "array")) => Layout::Array,
        Some(&(col, tok)) => {
            return Err(fail(
                header_line,
                col,
                format!("expected \"coordinate\" or \"array\", found \"{tok}\""),
            ))
        }
        None => {
            return Err(fail(
                header_line,
                header.len() + 1,
                "expected \"coordinate\" or \"array\", found end of line".into(),
            ))
        }
    };
    match toks.get(3) {
        Some(&(_, "real")) | Some(&(_, "integer")) => {}
        Some(&(col, tok)) => {
            return Err(fail(
                header_line,
                col,
                format!("unsupported field \"{tok}\"; only real data is handled"),
            ))
        }
        None => {
            return Err(fail(
                header_line,
                header.len() + 1,
                "expected a field keyword, found end of line".into(),
            ))
        }
    }
    let symmetric = match toks.get(4) {
        Some(&(_, "general")) => false,
        Some(&(_, "symmetric")) => true,
        Some(&(col, tok)) => {
            return Err(fail(
                header_line,
                col,
                format!("unsupported symmetry \"{tok}\"; only general and symmetric are handled"),
            ))
        }
        None => {
            return Err(fail(
                header_line,
                header.len() + 1,
                "expected a symmetry keyword, found end of line".into(),
            ))
        }
    };

    let (size_line, size) = lines
        .next_content()
        .ok_or_else(|| fail(lines.consumed + 1, 1, "missing size line".into()))?;
    let size_toks = tokens(size);
    let want = match layout {
        Layout::Coordinate => 3,
        Layout::Array => 2,
    };
    if size_toks.len() != want {
        return Err(fail(
            size_line,
            1,
            format!("size line needs {want} integers, found {}", size_toks.len()),
        ));
    }
    let nrows = parse_usize(&size_toks[0], size_line, &fail)?;
    let ncols = parse_usize(&size_toks[1], size_line, &fail)?;
    if nrows == 0 || ncols == 0 {
        return Err(fail(size_line, 1, "matrix dimensions must be positive".into()));
    }
    if symmetric && nrows != ncols {
        return Err(fail(size_line, 1, "symmetric matrices must be square".into()));
    }

    let mut m = DMatrix::zeros(nrows, ncols);
    match layout {
        Layout::Coordinate => {
            let nnz = parse_usize(&size_toks[2], size_line, &fail)?;
            let mut seen = vec![false; nrows * ncols];
            for k in 0..nnz {
                let (line_no, line) = lines.next_content().ok_or_else(|| {
                    fail(
                        lines.consumed + 1,
                        1,
                        format!("expected {nnz} entries, found {k}"),
                    )
                })?;
                let toks = tokens(line);
                if toks.len() != 3 {
                    return Err(fail(
                        line_no,
                        toks.get(3).map(|t| t.0).unwrap_or(1),
                        format!("entry needs \"row col value\", found {} tokens", toks.len()),
                    ));
                }
                let i = parse_usize(&toks[0], line_no, &fail)?;
                let j = parse_usize(&toks[1], line_no, &fail)?;
                if i == 0 || i > nrows || j == 0 || j > ncols {
                    return Err(fail(
                        line_no,
                        toks[0].0,
                        format!("index ({i}, {j}) outside {nrows}x{ncols}"),
                    ));
                }
                let v = parse_f64(&toks[2], line_no, &fail)?;
                let (i, j) = (i - 1, j - 1);
                if seen[i * ncols + j] {
                    return Err(fail(line_no, toks[0].0, format!("duplicate entry ({}, {})", i + 1, j + 1)));
                }
                seen[i * ncols + j] = true;
                m[(i, j)] = v;
                if symmetric && i != j {
                    seen[j * ncols + i] = true;
                    m[(j, i)] = v;
                }
            }
        }
        Layout::Array => {
            let total = if symmetric {
                nrows * (nrows + 1) / 2
            } else {
                nrows * ncols
            };
            let mut slots: Vec<(usize, usize)> = Vec::with_capacity(total);
            for j in 0..ncols {
                let start = if symmetric { j } else { 0 };
                for i in start..nrows {
                    slots.push((i, j));
                }
            }
            let mut filled = 0;
            while filled < total {
                let (line_no, line) = lines.next_content().ok_or_else(|| {
                    fail(
                        lines.consumed + 1,
                        1,
                        format!("expected {total} values, found {filled}"),
                    )
                })?;
                for tok in tokens(line) {
                    if filled == total {
                        return Err(fail(line_no, tok.0, "unexpected trailing value".into()));
                    }
                    let v = parse_f64(&tok, line_no, &fail)?;
                    let (i, j) = slots[filled];
                    m[(i, j)] = v;
                    if symmetric && i != j {
                        m[(j, i)] = v;
                    }
                    filled += 1;
                }
            }
        }
    }
    if let Some((line_no, _)) = lines.next_content() {
        return Err(fail(line_no, 1, "unexpected trailing data".into()));
    }
    Ok(m)
}

/// Writes a dense matrix as a real general coordinate Matrix Market file,
/// storing every nonzero entry with full round-trip precision.
pub fn write_matrix_market(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    out.push_str(&format!("{} {} {nnz}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push_str(&format!("{} {} {v:e}\n", i + 1, j + 1));
            }
        }
    }
    write_atomic(path, &out)
}

struct ContentLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    consumed: usize,
}

impl<'a> ContentLines<'a> {
    fn new(text: &'a str) -> Self {
        ContentLines {
            inner: text.lines().enumerate(),
            consumed: 0,
        }
    }

    /// Next line verbatim; used for the banner, which starts with '%'.
    fn next_raw(&mut self) -> Option<(usize, &'a str)> {
        let (idx, line) = self.inner.next()?;
        self.consumed = idx + 1;
        Some((idx + 1, line))
    }

    /// Next line that is neither blank nor a comment.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            self.consumed = idx + 1;
            let t = line.trim_start();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Some((idx + 1, line));
        }
        None
    }
}

/// Whitespace tokens of a line with their 1-based column positions.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    line.split_whitespace()
        .map(|tok| (tok.as_ptr() as usize - line.as_ptr() as usize + 1, tok))
        .collect()
}

fn expect_token(
    toks: &[(usize, &str)],
    idx: usize,
    want: &str,
    line_no: usize,
    line: &str,
    fail: &impl Fn(usize, usize, String) -> CliError,
) -> Result<()> {
    match toks.get(idx) {
        Some(&(_, tok)) if tok == want => Ok(()),
        Some(&(col, tok)) => Err(fail(
            line_no,
            col,
            format!("expected \"{want}\", found \"{tok}\""),
        )),
        None => Err(fail(
            line_no,
            line.len() + 1,
            format!("expected \"{want}\", found end of line"),
        )),
    }
}

fn parse_usize(
    tok: &(usize, &str),
    line_no: usize,
    fail: &impl Fn(usize, usize, String) -> CliError,
) -> Result<usize> {
    tok.1
        .parse::<usize>()
        .map_err(|_| fail(line_no, tok.0, format!("expected an integer, found \"{}\"", tok.1)))
}

fn parse_f64(
    tok: &(usize, &str),
    line_no: usize,
    fail: &impl Fn(usize, usize, String) -> CliError,
) -> Result<f64> {
    tok.1
        .parse::<f64>()
        .map_err(|_| fail(line_no, tok.0, format!("expected a number, found \"{}\"", tok.1)))
}
