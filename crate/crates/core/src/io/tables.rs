//! Pattern, mark and curve CSV files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::marks::{FunctionalMarkSet, TimeGrid};

/// Text written for undefined numeric entries.
pub const NA: &str = "NA";

/// 17 significant digits, enough to round-trip every finite f64.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        NA.to_string()
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Data rows with their 1-based line numbers (the header is line 1).
fn rows(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(format!("{}: {e}", display(path))))?;
        out.push((k + 2, rec));
    }
    Ok(out)
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    Ok(reader
        .headers()
        .map_err(|e| Error::schema(format!("{}: {e}", display(path))))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn parse_cell(path: &Path, row: usize, column: &str, cell: &str, allow_na: bool) -> Result<f64> {
    if allow_na && cell == NA {
        return Ok(f64::NAN);
    }
    let fail = |message: String| Error::Parse {
        file: display(path),
        row,
        column: column.to_string(),
        message,
    };
    if cell.is_empty() {
        return Err(fail("missing value".into()));
    }
    let v: f64 = cell.parse().map_err(|_| fail(format!("not a number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(fail(format!("value must be finite: {cell:?}")));
    }
    Ok(v)
}

/// Reads `id,x,y[,type]`. Ids must be unique.
pub fn read_pattern_csv(path: &Path, window: Window) -> Result<(Vec<String>, PointPattern)> {
    let mut reader = open_reader(path)?;
    let head = headers(path, &mut reader)?;
    let typed = match head.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["id", "x", "y"] => false,
        ["id", "x", "y", "type"] => true,
        _ => {
            return Err(Error::schema(format!(
                "{}: pattern header must be id,x,y[,type], found {}",
                display(path),
                head.join(",")
            )))
        }
    };
    let mut ids = Vec::new();
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, rec) in rows(path, &mut reader)? {
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::schema(format!("{}: duplicate point id {id:?}", display(path))));
        }
        let x = parse_cell(path, line, "x", &rec[1], false)?;
        let y = parse_cell(path, line, "y", &rec[2], false)?;
        if typed {
            let t: u32 = rec[3].parse().map_err(|_| Error::Parse {
                file: display(path),
                row: line,
                column: "type".into(),
                message: format!("type label must be a positive integer, got {:?}", &rec[3]),
            })?;
            labels.push(t);
        }
        ids.push(id);
        pts.push(Point::new(x, y));
    }
    let pattern = PointPattern::with_labels(window, pts, typed.then_some(labels))?;
    Ok((ids, pattern))
}

pub fn write_pattern_csv(path: &Path, ids: &[String], pattern: &PointPattern) -> Result<()> {
    if ids.len() != pattern.len() {
        return Err(Error::domain("one id per point required"));
    }
    let mut w = create(path)?;
    let labels = pattern.labels();
    let mut text = String::from(if labels.is_some() { "id,x,y,type\n" } else { "id,x,y\n" });
    for (i, p) in pattern.points().iter().enumerate() {
        text.push_str(&format!("{},{},{}", ids[i], format_number(p.x), format_number(p.y)));
        if let Some(l) = labels {
            text.push_str(&format!(",{}", l[i]));
        }
        text.push('\n');
    }
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// One mark channel: ids, the time grid from the header and one curve per row.
pub struct ChannelTable {
    pub ids: Vec<String>,
    pub grid: TimeGrid,
    pub curves: Vec<Vec<f64>>,
}

pub fn read_marks_csv(path: &Path) -> Result<ChannelTable> {
    let mut reader = open_reader(path)?;
    let head = headers(path, &mut reader)?;
    if head.first().map(String::as_str) != Some("id") || head.len() < 2 {
        return Err(Error::schema(format!(
            "{}: marks header must be id,t_<t0>,t_<t1>,...",
            display(path)
        )));
    }
    let times = head[1..]
        .iter()
        .map(|h| {
            h.strip_prefix("t_")
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|t| t.is_finite())
                .ok_or_else(|| {
                    Error::schema(format!("{}: bad time column header {h:?}", display(path)))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::schema(format!(
            "{}: time header values must be strictly increasing",
            display(path)
        )));
    }
    let grid = TimeGrid::new(times)?;
    let mut ids = Vec::new();
    let mut curves = Vec::new();
    for (line, rec) in rows(path, &mut reader)? {
        let curve = (1..head.len())
            .map(|c| parse_cell(path, line, &head[c], &rec[c], false))
            .collect::<Result<Vec<_>>>()?;
        ids.push(rec[0].to_string());
        curves.push(curve);
    }
    Ok(ChannelTable { ids, grid, curves })
}

fn time_header(grid: &TimeGrid) -> String {
    let mut s = String::from("id");
    for t in grid.values() {
        s.push_str(&format!(",t_{t}"));
    }
    s
}

/// Writes channel `h` of the mark set.
pub fn write_marks_csv(path: &Path, ids: &[String], marks: &FunctionalMarkSet, h: usize) -> Result<()> {
    if ids.len() != marks.n_points() {
        return Err(Error::domain("one id per point required"));
    }
    let mut text = time_header(marks.grid());
    text.push('\n');
    for (i, id) in ids.iter().enumerate() {
        text.push_str(id);
        for v in marks.curve(i, h) {
            text.push(',');
            text.push_str(&format_number(*v));
        }
        text.push('\n');
    }
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a pattern and one marks file per channel, joined on point id.
pub fn load_pattern(
    pattern_csv: &Path,
    marks_csvs: &[PathBuf],
    window: Window,
) -> Result<(Vec<String>, PointPattern, FunctionalMarkSet)> {
    let (ids, pattern) = read_pattern_csv(pattern_csv, window)?;
    if marks_csvs.is_empty() {
        return Err(Error::domain("at least one marks file is required"));
    }
    let index: std::collections::HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut grid: Option<TimeGrid> = None;
    let mut channels = Vec::new();
    for path in marks_csvs {
        let table = read_marks_csv(path)?;
        match &grid {
            None => grid = Some(table.grid.clone()),
            Some(g) if g.values() != table.grid.values() => {
                return Err(Error::schema(format!(
                    "{}: time header differs from the first marks file",
                    display(path)
                )))
            }
            _ => {}
        }
        let mut slot: Vec<Option<Vec<f64>>> = vec![None; ids.len()];
        for (id, curve) in table.ids.into_iter().zip(table.curves) {
            let i = *index.get(id.as_str()).ok_or_else(|| {
                Error::schema(format!("{}: point id {id:?} is not in the pattern file", display(path)))
            })?;
            if slot[i].replace(curve).is_some() {
                return Err(Error::schema(format!("{}: duplicate point id {id:?}", display(path))));
            }
        }
        let curves = slot
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| {
                    Error::schema(format!("{}: missing marks for point id {:?}", display(path), ids[i]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        channels.push(curves);
    }
    let marks = FunctionalMarkSet::from_channels(grid.unwrap(), &channels)?;
    Ok((ids, pattern, marks))
}

/// Columns of a curve file; optional columns are present together for envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub r: Vec<f64>,
    pub observed: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub theoretical: Option<Vec<f64>>,
}

impl From<&crate::estimators::SummaryCurve> for CurveTable {
    fn from(c: &crate::estimators::SummaryCurve) -> Self {
        Self {
            r: c.r.values().to_vec(),
            observed: c.values.clone(),
            lower: None,
            upper: None,
            theoretical: None,
        }
    }
}

impl From<&crate::inference::EnvelopeBand> for CurveTable {
    fn from(b: &crate::inference::EnvelopeBand) -> Self {
        Self {
            r: b.r.values().to_vec(),
            observed: b.observed.clone(),
            lower: Some(b.lower.clone()),
            upper: Some(b.upper.clone()),
            theoretical: b.theoretical.clone(),
        }
    }
}

impl CurveTable {
    fn columns(&self) -> Vec<(&'static str, &[f64])> {
        let mut cols: Vec<(&'static str, &[f64])> = vec![("r", &self.r), ("observed", &self.observed)];
        if let Some(v) = &self.lower {
            cols.push(("lower", v));
        }
        if let Some(v) = &self.upper {
            cols.push(("upper", v));
        }
        if let Some(v) = &self.theoretical {
            cols.push(("theoretical", v));
        }
        cols
    }

    pub fn to_csv_string(&self) -> String {
        let cols = self.columns();
        let mut s = cols.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        s.push('\n');
        for k in 0..self.r.len() {
            let row: Vec<String> = cols.iter().map(|c| format_number(c.1[k])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn write_curve_csv(path: &Path, table: &CurveTable) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(table.to_csv_string().as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<CurveTable> {
    let mut reader = open_reader(path)?;
    let head = headers(path, &mut reader)?;
    if head.len() < 2 || head[0] != "r" || head[1] != "observed" {
        return Err(Error::schema(format!(
            "{}: curve header must start with r,observed",
            display(path)
        )));
    }
    let known = ["r", "observed", "lower", "upper", "theoretical"];
    if let Some(bad) = head.iter().find(|h| !known.contains(&h.as_str())) {
        return Err(Error::schema(format!("{}: unknown curve column {bad:?}", display(path))));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); head.len()];
    for (line, rec) in rows(path, &mut reader)? {
        for (c, name) in head.iter().enumerate() {
            cols[c].push(parse_cell(path, line, name, &rec[c], c > 0)?);
        }
    }
    let take = |name: &str| head.iter().position(|h| h == name).map(|c| cols[c].clone());
    Ok(CurveTable {
        r: take("r").unwrap(),
        observed: take("observed").unwrap(),
        lower: take("lower"),
        upper: take("upper"),
        theoretical: take("theoretical"),
    })
}
