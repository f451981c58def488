//! On-disk formats: headered CSV matrices (plain or gzip), selection
//! and Pareto-sweep CSV exports, the `start:end:count` sweep-grid
//! notation, and the TOML experiment manifest that makes a run
//! repeatable from one file.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite binary64 value exactly, so save → load →
//! save is byte-identical. Parsers return [`Error::Parse`] with the
//! offending line number and never panic on malformed input.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::{Array2, ArrayView2};
use ndarray_linalg::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pivoting::Selection;
use crate::reconstruct::ParetoPoint;

/// Matrix payload of a loaded file.
#[derive(Debug, Clone)]
pub enum MatrixData {
    Real(Array2<f64>),
    Complex(Array2<c64>),
}

/// A parsed matrix file: the `kind=` tag from the header plus the data.
#[derive(Debug, Clone)]
pub struct MatrixFile {
    pub kind: String,
    pub data: MatrixData,
}

impl MatrixFile {
    /// The data as a real matrix, or a dimension error naming the file
    /// content type.
    pub fn into_real(self) -> Result<Array2<f64>> {
        match self.data {
            MatrixData::Real(m) => Ok(m),
            MatrixData::Complex(_) => {
                Err(Error::dims(format!("matrix of kind '{}' is complex, expected real", self.kind)))
            }
        }
    }

    pub fn into_complex(self) -> Result<Array2<c64>> {
        match self.data {
            MatrixData::Complex(m) => Ok(m),
            MatrixData::Real(_) => {
                Err(Error::dims(format!("matrix of kind '{}' is real, expected complex", self.kind)))
            }
        }
    }
}

/// One finite binary64 value in the canonical lossless text form.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_writer(path: &Path) -> Result<Box<dyn Write>> {
    let file = File::create(path)?;
    if path.extension().map(|e| e == "gz").unwrap_or(false) {
        Ok(Box::new(BufWriter::new(GzEncoder::new(file, Compression::default()))))
    } else {
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    if path.extension().map(|e| e == "gz").unwrap_or(false) {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Writes a real matrix with a self-describing header. Paths ending in
/// `.gz` are compressed transparently (with a zeroed timestamp, so
/// outputs stay reproducible).
pub fn save_matrix(path: impl AsRef<Path>, m: &ArrayView2<f64>, kind: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("matrix written to {}", path.as_ref().display())));
    }
    let mut w = open_writer(path.as_ref())?;
    writeln!(w, "# rows={} cols={} complex=false kind={}", m.nrows(), m.ncols(), kind)?;
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Complex variant of [`save_matrix`]: each matrix column stores as an
/// adjacent (re, im) field pair.
pub fn save_complex_matrix(path: impl AsRef<Path>, m: &ArrayView2<c64>, kind: &str) -> Result<()> {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite(format!("matrix written to {}", path.as_ref().display())));
    }
    let mut w = open_writer(path.as_ref())?;
    writeln!(w, "# rows={} cols={} complex=true kind={}", m.nrows(), m.ncols(), kind)?;
    for row in m.rows() {
        let line: Vec<String> =
            row.iter().flat_map(|v| [format_float(v.re), format_float(v.im)]).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, what: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, what: what.into() }
}

/// Reads a matrix file written by [`save_matrix`] /
/// [`save_complex_matrix`], validating the declared dimensions against
/// the data actually present.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<MatrixFile> {
    let path = path.as_ref();
    let reader = open_reader(path)?;

    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut data_lines: Vec<(usize, String)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(path, line_no, format!("unreadable line: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            }
        } else {
            data_lines.push((line_no, line));
        }
    }

    let get = |key: &str| -> Result<&String> {
        header.get(key).ok_or_else(|| parse_err(path, 1, format!("header is missing `{key}=`")))
    };
    let rows: usize = get("rows")?
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad rows count `{}`", header["rows"])))?;
    let cols: usize = get("cols")?
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad cols count `{}`", header["cols"])))?;
    let complex = match get("complex")?.as_str() {
        "true" => true,
        "false" => false,
        other => return Err(parse_err(path, 1, format!("complex must be true|false, got `{other}`"))),
    };
    let kind = get("kind")?.clone();

    if data_lines.len() != rows {
        return Err(parse_err(
            path,
            data_lines.last().map(|(n, _)| *n).unwrap_or(1),
            format!("header declares {rows} rows but file has {}", data_lines.len()),
        ));
    }

    let fields_per_line = if complex { 2 * cols } else { cols };
    let mut values = Vec::with_capacity(rows * fields_per_line);
    for (line_no, line) in &data_lines {
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, *line_no, format!("unparsable number `{}`", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(path, *line_no, format!("non-finite value `{}`", field.trim())));
            }
            values.push(v);
            count += 1;
        }
        if count != fields_per_line {
            return Err(parse_err(
                path,
                *line_no,
                format!("expected {fields_per_line} fields, found {count}"),
            ));
        }
    }

    let data = if complex {
        let mut m = Array2::from_elem((rows, cols), c64::new(0.0, 0.0));
        for i in 0..rows {
            for j in 0..cols {
                let base = i * 2 * cols + 2 * j;
                m[[i, j]] = c64::new(values[base], values[base + 1]);
            }
        }
        MatrixData::Complex(m)
    } else {
        MatrixData::Real(
            Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| parse_err(path, 1, format!("shape error: {e}")))?,
        )
    };
    Ok(MatrixFile { kind, data })
}

/// Writes a selection as `rank,index,cost` rows (rank is the 1-based
/// pivot order).
pub fn save_selection_csv(path: impl AsRef<Path>, sel: &Selection) -> Result<()> {
    let mut w = open_writer(path.as_ref())?;
    writeln!(w, "rank,index,cost")?;
    for (k, (&idx, &cost)) in sel.indices.iter().zip(sel.costs.iter()).enumerate() {
        writeln!(w, "{},{},{}", k + 1, idx, format_float(cost))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `rank,index,cost` file back into a [`Selection`]. Only the
/// placement fields survive the round trip; pivot diagnostics are not
/// persisted and come back empty.
pub fn load_selection_csv(path: impl AsRef<Path>) -> Result<Selection> {
    let path = path.as_ref();
    let reader = open_reader(path)?;
    let mut indices = Vec::new();
    let mut costs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(path, line_no, format!("unreadable line: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || line_no == 1 {
            if line_no == 1 && trimmed != "rank,index,cost" {
                return Err(parse_err(path, 1, format!("expected header `rank,index,cost`, got `{trimmed}`")));
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(path, line_no, format!("expected 3 fields, found {}", fields.len())));
        }
        let rank: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad rank `{}`", fields[0])))?;
        if rank != indices.len() + 1 {
            return Err(parse_err(path, line_no, format!("rank {rank} out of sequence")));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad index `{}`", fields[1])))?;
        let cost: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad cost `{}`", fields[2])))?;
        if !cost.is_finite() {
            return Err(parse_err(path, line_no, format!("non-finite cost `{}`", fields[2])));
        }
        indices.push(index);
        costs.push(cost);
    }
    let total_cost = costs.iter().sum();
    Ok(Selection {
        indices,
        costs,
        total_cost,
        gamma_used: 0.0,
        pivot_magnitudes: Vec::new(),
        rank_deficient: false,
        hybrid: false,
    })
}

/// Writes a cost-versus-error sweep as
/// `gamma,total_cost,error,metric,indices` rows; the selected indices
/// are semicolon-joined inside the final field, and any comma in the
/// metric name is replaced by a space so the row stays five fields.
pub fn save_pareto_csv(path: impl AsRef<Path>, points: &[ParetoPoint]) -> Result<()> {
    let mut w = open_writer(path.as_ref())?;
    writeln!(w, "gamma,total_cost,error,metric,indices")?;
    for pt in points {
        let indices: Vec<String> = pt.selection.indices.iter().map(|i| i.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            format_float(pt.gamma),
            format_float(pt.total_cost),
            format_float(pt.error),
            pt.metric.replace(',', " "),
            indices.join(";")
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the sweep-grid notation `start:end:count` into `count`
/// uniformly spaced values spanning [start, end] inclusive. Values must
/// be finite and non-negative; `count = 1` requires start = end.
pub fn parse_gamma_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!(
            "sweep grid must be `start:end:count`, got `{spec}`"
        )));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad sweep start `{}`", parts[0])))?;
    let end: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad sweep end `{}`", parts[1])))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad sweep count `{}`", parts[2])))?;
    if !start.is_finite() || !end.is_finite() || start < 0.0 || end < 0.0 {
        return Err(Error::invalid(format!("sweep bounds must be finite and ≥ 0, got `{spec}`")));
    }
    if count == 0 {
        return Err(Error::invalid("sweep count must be ≥ 1"));
    }
    if count == 1 {
        if start != end {
            return Err(Error::invalid(format!(
                "single-point sweep needs start = end, got `{spec}`"
            )));
        }
        return Ok(vec![start]);
    }
    let mut grid: Vec<f64> = (0..count)
        .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
        .collect();
    grid[count - 1] = end;
    Ok(grid)
}

/// Everything needed to repeat a run: tool version, root seed, and the
/// full parameter set of exactly one task. Demos write this next to
/// their artifacts; replaying the file reproduces them byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Version of the tool that produced the file.
    pub version: String,
    /// Root seed all randomized stages derive from.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select: Option<SelectConfig>,
}

/// Parameters of a named demo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub name: String,
    pub p: usize,
    /// Sweep grid in `start:end:count` notation.
    pub gammas: String,
    /// Random-baseline arrays drawn per comparison.
    pub trials: usize,
    /// Initial-condition sets averaged per evaluation.
    pub initial_conditions: usize,
    #[serde(default)]
    pub full_enumeration: bool,
}

/// Parameters of a one-off selection run on files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    /// Basis matrix file (modes in columns).
    pub basis: String,
    pub p: usize,
    /// Per-location cost file (single row or column); absent means
    /// zero cost everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<String>,
    #[serde(default)]
    pub gamma: f64,
    /// Candidate-restriction file (single row/column of indices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restrict: Option<String>,
}

impl ExperimentConfig {
    /// Structural checks: exactly one task section, a parseable sweep
    /// grid, and (for file-based tasks) referenced paths that exist.
    pub fn validate(&self) -> Result<()> {
        match (&self.demo, &self.select) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("config sets both `demo` and `select`; pick one"))
            }
            (None, None) => {
                return Err(Error::invalid("config needs a `demo` or `select` section"))
            }
            _ => {}
        }
        if let Some(demo) = &self.demo {
            parse_gamma_grid(&demo.gammas)?;
            if demo.p == 0 {
                return Err(Error::invalid("demo p must be ≥ 1"));
            }
            if demo.initial_conditions == 0 {
                return Err(Error::invalid("demo needs ≥ 1 initial-condition set"));
            }
        }
        if let Some(select) = &self.select {
            if select.p == 0 {
                return Err(Error::invalid("select p must be ≥ 1"));
            }
            if !(select.gamma.is_finite() && select.gamma >= 0.0) {
                return Err(Error::invalid(format!(
                    "select gamma must be finite and ≥ 0, got {}",
                    select.gamma
                )));
            }
            for path in [Some(&select.basis), select.cost.as_ref(), select.restrict.as_ref()]
                .into_iter()
                .flatten()
            {
                if !Path::new(path).exists() {
                    return Err(Error::invalid(format!("referenced file does not exist: {path}")));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a manifest.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| parse_err(path, e.span().map(|s| line_of(&text, s.start)).unwrap_or(1), e.message()))?;
    config.validate()?;
    Ok(config)
}

/// Writes a manifest (validated first, so a saved file always loads).
pub fn save_config(path: impl AsRef<Path>, config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let text = toml::to_string_pretty(config)
        .map_err(|e| Error::invalid(format!("unserializable config: {e}")))?;
    let mut w = open_writer(path.as_ref())?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn line_of(text: &str, byte_offset: usize) -> usize {
    text[..byte_offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn real_matrix_round_trips_byte_identically() {
        let dir = tmp();
        let path = dir.path().join("m.csv");
        let m = array![[1.0, 0.0], [0.0, 1.0]];
        save_matrix(&path, &m.view(), "identity").unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_matrix(&path).unwrap();
        assert_eq!(loaded.kind, "identity");
        let back = loaded.into_real().unwrap();
        assert_eq!(back, m);
        save_matrix(&path, &back.view(), "identity").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn awkward_values_survive_the_text_format() {
        let dir = tmp();
        let path = dir.path().join("m.csv");
        let m = array![[std::f64::consts::PI, 1.0 / 3.0, -0.0, 4.9e-324, f64::MAX]];
        save_matrix(&path, &m.view(), "stress").unwrap();
        let back = load_matrix(&path).unwrap().into_real().unwrap();
        for (a, b) in back.iter().zip(m.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn complex_scalar_uses_interleaved_fields() {
        let dir = tmp();
        let path = dir.path().join("z.csv");
        let m = array![[c64::new(1.0, 2.0)]];
        save_complex_matrix(&path, &m.view(), "sample").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# rows=1 cols=1 complex=true kind=sample");
        assert_eq!(lines.next().unwrap(), "1.0000000000000000e0,2.0000000000000000e0");
        let back = load_matrix(&path).unwrap().into_complex().unwrap();
        assert_eq!(back[[0, 0]], c64::new(1.0, 2.0));
    }

    #[test]
    fn gzip_path_round_trips_deterministically() {
        let dir = tmp();
        let path = dir.path().join("m.csv.gz");
        let m = array![[1.5, -2.25], [0.0, 3.125]];
        save_matrix(&path, &m.view(), "snapshots").unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = load_matrix(&path).unwrap().into_real().unwrap();
        assert_eq!(back, m);
        save_matrix(&path, &m.view(), "snapshots").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first, "gzip output not reproducible");
    }

    #[test]
    fn flattened_grid_snapshots_load_at_full_size() {
        // A 360×180 scalar field flattens to 64800 rows per snapshot.
        let dir = tmp();
        let path = dir.path().join("field.csv");
        let m = Array2::from_shape_fn((360 * 180, 2), |(i, j)| (i % 97) as f64 + j as f64 / 7.0);
        save_matrix(&path, &m.view(), "snapshots").unwrap();
        let back = load_matrix(&path).unwrap().into_real().unwrap();
        assert_eq!(back.dim(), (64800, 2));
        assert_eq!(back, m);
    }

    #[test]
    fn loader_reports_line_numbers_for_bad_input() {
        let dir = tmp();
        let path = dir.path().join("m.csv");

        std::fs::write(&path, "# rows=3 cols=1 complex=false kind=x\n1.0\n2.0\n").unwrap();
        match load_matrix(&path) {
            Err(Error::Parse { line, what, .. }) => {
                assert_eq!(line, 3);
                assert!(what.contains("declares 3 rows"), "{what}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "# rows=2 cols=1 complex=false kind=x\n1.0\npotato\n").unwrap();
        match load_matrix(&path) {
            Err(Error::Parse { line, what, .. }) => {
                assert_eq!(line, 3);
                assert!(what.contains("potato"), "{what}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "# rows=1 cols=1 complex=false kind=x\ninf\n").unwrap();
        assert!(matches!(load_matrix(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn loader_never_panics_on_garbled_files() {
        let dir = tmp();
        let path = dir.path().join("m.csv");
        let cases = [
            "",
            "# rows=2",
            "# cols=2 complex=false kind=x\n1,2\n3,4\n",
            "# rows=2 cols=2 complex=maybe kind=x\n1,2\n3,4\n",
            "# rows=2 cols=2 complex=false kind=x\n1,2,9\n3,4\n",
            "# rows=1 cols=2 complex=true kind=x\n1,2,3\n",
            "# rows=one cols=2 complex=false kind=x\n1,2\n",
            "# rows=1 cols=1 complex=false kind=x\n1.0\ntrailing\n",
        ];
        for (i, case) in cases.iter().enumerate() {
            std::fs::write(&path, case).unwrap();
            assert!(load_matrix(&path).is_err(), "case {i} should fail cleanly");
        }
    }

    #[test]
    fn selection_csv_round_trips_placement() {
        let dir = tmp();
        let path = dir.path().join("sensors.csv");
        let sel = Selection {
            indices: vec![7, 2, 9],
            costs: vec![0.5, 0.25, 1.0],
            total_cost: 1.75,
            gamma_used: 3.0,
            pivot_magnitudes: vec![2.0, 1.0, 0.5],
            rank_deficient: false,
            hybrid: false,
        };
        save_selection_csv(&path, &sel).unwrap();
        let back = load_selection_csv(&path).unwrap();
        assert_eq!(back.indices, sel.indices);
        assert_eq!(back.costs, sel.costs);
        assert_eq!(back.total_cost, sel.total_cost);
    }

    #[test]
    fn selection_csv_rejects_malformed_rows() {
        let dir = tmp();
        let path = dir.path().join("sensors.csv");
        std::fs::write(&path, "rank,index,cost\n2,7,0.5\n").unwrap();
        assert!(matches!(load_selection_csv(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(matches!(load_selection_csv(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn pareto_rows_have_five_fields() {
        let dir = tmp();
        let path = dir.path().join("pareto.csv");
        let sel = Selection {
            indices: vec![3, 1],
            costs: vec![0.1, 0.2],
            total_cost: 0.3,
            gamma_used: 2.0,
            pivot_magnitudes: vec![1.0, 0.5],
            rank_deficient: false,
            hybrid: false,
        };
        let pts = vec![ParetoPoint {
            gamma: 2.0,
            total_cost: 0.3,
            error: 0.125,
            metric: "mean error, fractional".to_string(),
            selection: sel,
        }];
        save_pareto_csv(&path, &pts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "gamma,total_cost,error,metric,indices");
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5, "metric comma must be sanitized: {row}");
        assert_eq!(fields[3], "mean error  fractional");
        assert_eq!(fields[4], "3;1");
    }

    #[test]
    fn gamma_grid_notation() {
        let grid = parse_gamma_grid("0:20:11").unwrap();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 20.0);
        assert!((grid[1] - 2.0).abs() < 1e-12);
        assert_eq!(parse_gamma_grid("5:5:1").unwrap(), vec![5.0]);
        for bad in ["", "1:2", "a:b:c", "-1:5:3", "0:20:0", "0:nan:3", "1:2:1"] {
            assert!(parse_gamma_grid(bad).is_err(), "`{bad}` should be rejected");
        }
    }

    #[test]
    fn config_round_trips_and_validates() {
        let dir = tmp();
        let path = dir.path().join("manifest.toml");
        let config = ExperimentConfig {
            version: "0.1.0".to_string(),
            seed: 7,
            demo: Some(DemoConfig {
                name: "membrane".to_string(),
                p: 55,
                gammas: "0:20:11".to_string(),
                trials: 100,
                initial_conditions: 50,
                full_enumeration: false,
            }),
            select: None,
        };
        save_config(&path, &config).unwrap();
        let back = load_config(&path).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn config_validation_rejects_structural_problems() {
        let both = ExperimentConfig {
            version: "0".into(),
            seed: 0,
            demo: Some(DemoConfig {
                name: "membrane".into(),
                p: 1,
                gammas: "0:1:2".into(),
                trials: 1,
                initial_conditions: 1,
                full_enumeration: false,
            }),
            select: Some(SelectConfig {
                basis: "nope.csv".into(),
                p: 1,
                cost: None,
                gamma: 0.0,
                restrict: None,
            }),
        };
        assert!(both.validate().is_err());

        let neither = ExperimentConfig { version: "0".into(), seed: 0, demo: None, select: None };
        assert!(neither.validate().is_err());

        let missing_file = ExperimentConfig {
            version: "0".into(),
            seed: 0,
            demo: None,
            select: Some(SelectConfig {
                basis: "/definitely/not/here.csv".into(),
                p: 3,
                cost: None,
                gamma: 1.0,
                restrict: None,
            }),
        };
        assert!(missing_file.validate().is_err());

        let bad_grid = ExperimentConfig {
            version: "0".into(),
            seed: 0,
            demo: Some(DemoConfig {
                name: "membrane".into(),
                p: 1,
                gammas: "9:1:-2".into(),
                trials: 1,
                initial_conditions: 1,
                full_enumeration: false,
            }),
            select: None,
        };
        assert!(bad_grid.validate().is_err());
    }

    #[test]
    fn config_load_reports_toml_errors_with_lines() {
        let dir = tmp();
        let path = dir.path().join("manifest.toml");
        std::fs::write(&path, "version = \"0\"\nseed = \"not a number\"\n").unwrap();
        match load_config(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
