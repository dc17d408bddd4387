//! File formats for tensors, masks, group generators, programs, and forms.
//!
//! Tensors travel in a small binary container; everything else is
//! line-oriented text. Text files share one set of conventions: `#` starts
//! a comment, blank lines are skipped, the first significant line is a
//! header naming the record type, and indices are 1-based on disk (they
//! become 0-based in memory).
//!
//! Binary tensor layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TSDP"
//! 4       2     format version (currently 1), u16
//! 6       12    extents n1, n2, n3, each u32
//! 18      8·n   payload, n = n1·n2·n3 doubles, slice-major:
//!               k outermost, then rows, then columns
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::algebra::StarMContext;
use crate::equivariance::GroupRep;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::sdp::{MSDPProblem, Sense};
use crate::sos::QuadraticForm;
use crate::tensor::Tensor3;

pub const TENSOR_MAGIC: [u8; 4] = *b"TSDP";
pub const TENSOR_VERSION: u16 = 1;

const HEADER_LEN: usize = 18;

/// Serialize a tensor into the binary container format.
pub fn tensor_to_bytes(a: &Tensor3<f64>) -> Vec<u8> {
    let (n1, n2, n3) = a.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n1 * n2 * n3);
    out.extend_from_slice(&TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    for extent in [n1, n2, n3] {
        out.extend_from_slice(&(extent as u32).to_le_bytes());
    }
    for k in 0..n3 {
        for i in 0..n1 {
            for j in 0..n2 {
                out.extend_from_slice(&a[(i, j, k)].to_le_bytes());
            }
        }
    }
    out
}

/// Deserialize a tensor from the binary container format.
pub fn tensor_from_bytes(bytes: &[u8]) -> Result<Tensor3<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "header truncated: expected at least {} bytes, got {}",
            HEADER_LEN,
            bytes.len()
        )));
    }
    if bytes[0..4] != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[0..4],
            TENSOR_MAGIC
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {}, expected {}",
            version, TENSOR_VERSION
        )));
    }
    let extent = |off: usize| {
        u32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as usize
    };
    let (n1, n2, n3) = (extent(6), extent(10), extent(14));
    let expected = HEADER_LEN + 8 * n1 * n2 * n3;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload truncated or oversized: expected {} bytes for a {}x{}x{} tensor, got {}",
            expected,
            n1,
            n2,
            n3,
            bytes.len()
        )));
    }
    let mut a = Tensor3::zeros(n1, n2, n3);
    let mut off = HEADER_LEN;
    for k in 0..n3 {
        for i in 0..n1 {
            for j in 0..n2 {
                let mut word = [0u8; 8];
                word.copy_from_slice(&bytes[off..off + 8]);
                a[(i, j, k)] = f64::from_le_bytes(word);
                off += 8;
            }
        }
    }
    Ok(a)
}

pub fn write_tensor(path: impl AsRef<Path>, a: &Tensor3<f64>) -> Result<()> {
    fs::write(path, tensor_to_bytes(a))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3<f64>> {
    tensor_from_bytes(&fs::read(path)?)
}

/// A tubal observation pattern over an `n1 x n2` grid, 0-based in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskData {
    pub n1: usize,
    pub n2: usize,
    pub omega: Vec<(usize, usize)>,
}

/// Iterator over significant lines with their 1-based line numbers.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            None
        } else {
            Some((idx + 1, line))
        }
    })
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(
    token: &str,
    path: &str,
    line: usize,
    what: &str,
) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {} from '{}'", what, token)))
}

/// Parse mask text. The header is `mask <n1> <n2>`, followed by one
/// 1-based `<i> <j>` pair per line. Duplicates and out-of-range indices
/// are rejected.
pub fn parse_mask(text: &str, path: &str) -> Result<MaskData> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected 'mask <n1> <n2>' header"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "mask" {
        return Err(parse_err(
            path,
            header_line,
            format!("expected 'mask <n1> <n2>', got '{}'", header),
        ));
    }
    let n1: usize = parse_num(tokens[1], path, header_line, "n1")?;
    let n2: usize = parse_num(tokens[2], path, header_line, "n2")?;
    if n1 == 0 || n2 == 0 {
        return Err(parse_err(path, header_line, "mask extents must be positive"));
    }
    let mut omega = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected '<i> <j>', got '{}'", line),
            ));
        }
        let i: usize = parse_num(tokens[0], path, lineno, "row index")?;
        let j: usize = parse_num(tokens[1], path, lineno, "column index")?;
        if i == 0 || i > n1 || j == 0 || j > n2 {
            return Err(parse_err(
                path,
                lineno,
                format!("index ({}, {}) outside the 1-based {}x{} grid", i, j, n1, n2),
            ));
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(path, lineno, format!("duplicate entry ({}, {})", i, j)));
        }
        omega.push((i - 1, j - 1));
    }
    if omega.is_empty() {
        return Err(parse_err(path, header_line, "mask lists no observations"));
    }
    Ok(MaskData { n1, n2, omega })
}

pub fn mask_to_string(mask: &MaskData) -> String {
    let mut out = format!("mask {} {}\n", mask.n1, mask.n2);
    for &(i, j) in &mask.omega {
        out.push_str(&format!("{} {}\n", i + 1, j + 1));
    }
    out
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskData> {
    let path = path.as_ref();
    parse_mask(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_mask(path: impl AsRef<Path>, mask: &MaskData) -> Result<()> {
    fs::write(path, mask_to_string(mask))?;
    Ok(())
}

/// Parse generator text. The header is `rep <n3> <count> <orthogonal|general>`,
/// followed by `count` generators, each given as `n3` rows of `n3` numbers.
pub fn parse_rep(text: &str, path: &str) -> Result<GroupRep<f64>> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| {
        parse_err(path, 1, "empty file, expected 'rep <n3> <count> <orthogonal|general>'")
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "rep" {
        return Err(parse_err(
            path,
            header_line,
            format!("expected 'rep <n3> <count> <orthogonal|general>', got '{}'", header),
        ));
    }
    let n3: usize = parse_num(tokens[1], path, header_line, "n3")?;
    let count: usize = parse_num(tokens[2], path, header_line, "generator count")?;
    let orthogonal = match tokens[3] {
        "orthogonal" => true,
        "general" => false,
        other => {
            return Err(parse_err(
                path,
                header_line,
                format!("expected 'orthogonal' or 'general', got '{}'", other),
            ))
        }
    };
    if n3 == 0 || count == 0 {
        return Err(parse_err(path, header_line, "n3 and count must be positive"));
    }
    let mut generators = Vec::with_capacity(count);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n3);
    let mut last_line = header_line;
    for (lineno, line) in lines {
        last_line = lineno;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_num(t, path, lineno, "matrix entry"))
            .collect::<Result<_>>()?;
        if row.len() != n3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} entries per row, got {}", n3, row.len()),
            ));
        }
        rows.push(row);
        if rows.len() == n3 {
            generators.push(Mat::from_rows(&std::mem::take(&mut rows)));
        }
    }
    if !rows.is_empty() {
        return Err(parse_err(
            path,
            last_line,
            format!("generator ends mid-matrix with {} of {} rows", rows.len(), n3),
        ));
    }
    if generators.len() != count {
        return Err(parse_err(
            path,
            last_line,
            format!("header announces {} generators, file holds {}", count, generators.len()),
        ));
    }
    GroupRep::new(generators, orthogonal)
}

pub fn rep_to_string(rep: &GroupRep<f64>) -> String {
    let n3 = rep.n3();
    let kind = if rep.is_orthogonal() { "orthogonal" } else { "general" };
    let mut out = format!("rep {} {} {}\n", n3, rep.generators().len(), kind);
    for g in rep.generators() {
        out.push('\n');
        for i in 0..n3 {
            let row: Vec<String> = (0..n3).map(|j| format!("{:?}", g[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_rep(path: impl AsRef<Path>) -> Result<GroupRep<f64>> {
    let path = path.as_ref();
    parse_rep(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_rep(path: impl AsRef<Path>, rep: &GroupRep<f64>) -> Result<()> {
    fs::write(path, rep_to_string(rep))?;
    Ok(())
}

/// Parse a plain text matrix: one row per line, whitespace-separated
/// numbers, all rows the same length.
pub fn parse_matrix(text: &str, path: &str) -> Result<Mat<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in significant_lines(text) {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_num(t, path, lineno, "matrix entry"))
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("row has {} entries, earlier rows have {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "matrix file has no rows"));
    }
    Ok(Mat::from_rows(&rows))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat<f64>> {
    let path = path.as_ref();
    parse_matrix(&fs::read_to_string(path)?, &path.display().to_string())
}

/// A program description referencing tensors by path. Paths are resolved
/// relative to the directory the problem file lives in.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub sense: Sense,
    pub cost_path: PathBuf,
    pub constraints: Vec<(PathBuf, f64)>,
}

/// Parse problem text. The header is `problem <min|max>`; it is followed
/// by exactly one `cost <path>` line and any number of
/// `constraint <path> <b>` lines.
pub fn parse_problem(text: &str, path: &str, base_dir: &Path) -> Result<ProblemSpec> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected 'problem <min|max>'"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 || tokens[0] != "problem" {
        return Err(parse_err(
            path,
            header_line,
            format!("expected 'problem <min|max>', got '{}'", header),
        ));
    }
    let sense = match tokens[1] {
        "min" => Sense::Min,
        "max" => Sense::Max,
        other => {
            return Err(parse_err(
                path,
                header_line,
                format!("expected 'min' or 'max', got '{}'", other),
            ))
        }
    };
    let mut cost_path: Option<PathBuf> = None;
    let mut constraints = Vec::new();
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["cost", p] => {
                if cost_path.is_some() {
                    return Err(parse_err(path, lineno, "cost given twice"));
                }
                cost_path = Some(base_dir.join(p));
            }
            ["constraint", p, b] => {
                let b: f64 = parse_num(b, path, lineno, "right-hand side")?;
                constraints.push((base_dir.join(p), b));
            }
            _ => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected 'cost <path>' or 'constraint <path> <b>', got '{}'", line),
                ))
            }
        }
    }
    let cost_path = cost_path
        .ok_or_else(|| parse_err(path, header_line, "problem file is missing a cost line"))?;
    Ok(ProblemSpec {
        sense,
        cost_path,
        constraints,
    })
}

pub fn read_problem_spec(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_problem(
        &fs::read_to_string(path)?,
        &path.display().to_string(),
        base_dir,
    )
}

/// Load every tensor a spec references and assemble the in-memory program.
pub fn load_problem(spec: &ProblemSpec, ctx: StarMContext<f64>) -> Result<MSDPProblem<f64>> {
    let cost = read_tensor(&spec.cost_path)?;
    let mut constraints = Vec::with_capacity(spec.constraints.len());
    for (p, b) in &spec.constraints {
        constraints.push((read_tensor(p)?, *b));
    }
    Ok(MSDPProblem {
        ctx,
        cost,
        constraints,
        sense: spec.sense,
    })
}

/// Parse quadratic-form text. The header is `form <m> <n3>`; it is
/// followed by the upper triangle of the `(m·n3) x (m·n3)` Gram matrix,
/// one row per line: line `i` holds the entries `Q[i][i..N]`.
pub fn parse_form(text: &str, path: &str) -> Result<QuadraticForm<f64>> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected 'form <m> <n3>'"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "form" {
        return Err(parse_err(
            path,
            header_line,
            format!("expected 'form <m> <n3>', got '{}'", header),
        ));
    }
    let m: usize = parse_num(tokens[1], path, header_line, "m")?;
    let n3: usize = parse_num(tokens[2], path, header_line, "n3")?;
    if m == 0 || n3 == 0 {
        return Err(parse_err(path, header_line, "m and n3 must be positive"));
    }
    let n = m * n3;
    let mut gram = Mat::zeros(n, n);
    let mut i = 0;
    let mut last_line = header_line;
    for (lineno, line) in lines {
        last_line = lineno;
        if i >= n {
            return Err(parse_err(
                path,
                lineno,
                format!("extra row after the {} expected triangle rows", n),
            ));
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_num(t, path, lineno, "coefficient"))
            .collect::<Result<_>>()?;
        if row.len() != n - i {
            return Err(parse_err(
                path,
                lineno,
                format!("triangle row {} needs {} entries, got {}", i + 1, n - i, row.len()),
            ));
        }
        for (off, &v) in row.iter().enumerate() {
            gram[(i, i + off)] = v;
            gram[(i + off, i)] = v;
        }
        i += 1;
    }
    if i != n {
        return Err(parse_err(
            path,
            last_line,
            format!("expected {} triangle rows, got {}", n, i),
        ));
    }
    QuadraticForm::new(m, n3, gram)
}

pub fn form_to_string(form: &QuadraticForm<f64>) -> String {
    let n = form.num_groups() * form.tube_len();
    let mut out = format!("form {} {}\n", form.num_groups(), form.tube_len());
    let gram = form.gram();
    for i in 0..n {
        let row: Vec<String> = (i..n).map(|j| format!("{:?}", gram[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_form(path: impl AsRef<Path>) -> Result<QuadraticForm<f64>> {
    let path = path.as_ref();
    parse_form(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_form(path: impl AsRef<Path>, form: &QuadraticForm<f64>) -> Result<()> {
    fs::write(path, form_to_string(form))?;
    Ok(())
}
