//! File formats: delimited datasets, model and study specs, cost specs,
//! CSV emission with fixed decimals, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::catalog::StudyRow;
use crate::disease_model::{CostPriorSpec, DiseaseModel};
use crate::error::{Error, Result};
use crate::estimators::{Class, LabeledSample, Outcome};

/// `x` with `decimals` places; never prints a negative zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Renders rows as comma-separated text with a header line.
pub fn csv_bytes<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|s| s.as_ref()))?;
    }
    w.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    write_bytes(path, &csv_bytes(header, rows)?)
}

/// Raw label strings for each class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEncoding {
    pub case: Vec<String>,
    pub control: Vec<String>,
}

impl Default for ClassEncoding {
    fn default() -> Self {
        Self {
            case: vec!["d".into(), "case".into(), "1".into()],
            control: vec!["h".into(), "control".into(), "0".into()],
        }
    }
}

impl ClassEncoding {
    fn decode(&self, raw: &str) -> Option<Class> {
        if self.case.iter().any(|c| c == raw) {
            Some(Class::Case)
        } else if self.control.iter().any(|c| c == raw) {
            Some(Class::Control)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DatasetOptions {
    /// Defaults to the first of `y`, `label`, `class`, `status` in the header.
    pub label_column: Option<String>,
    /// Comma or tab is detected from the header line when unset.
    pub delimiter: Option<u8>,
    pub encoding: ClassEncoding,
    /// Read the label column as a real-valued outcome.
    pub real_outcome: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub sample: LabeledSample,
    pub label_column: String,
    pub delimiter: u8,
    /// Per variable: sorted category strings when the column was not integer.
    pub dictionaries: Vec<Option<Vec<String>>>,
}

impl Dataset {
    /// One-line description: rows, variables and class counts.
    pub fn summary(&self) -> String {
        let s = &self.sample;
        match s.class_totals() {
            Some((d, h)) => format!("{} rows, {} variables, {d} cases, {h} controls", s.n_rows(), s.n_vars()),
            None => format!("{} rows, {} variables, real outcome", s.n_rows(), s.n_vars()),
        }
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub fn read_dataset(path: &Path, opts: &DatasetOptions) -> Result<Dataset> {
    parse_dataset(&read_text(path)?, &path.display().to_string(), opts)
}

/// Parses delimited text with a header row. Integer columns keep their
/// values as codes; any other column is coded by its sorted distinct values.
pub fn parse_dataset(text: &str, source: &str, opts: &DatasetOptions) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    if text.trim().is_empty() {
        return Err(parse_err(1, "empty file".into()));
    }
    let delimiter = opts.delimiter.unwrap_or_else(|| detect_delimiter(text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_column = match &opts.label_column {
        Some(l) => l.clone(),
        None => ["y", "label", "class", "status"]
            .iter()
            .find(|c| header.iter().any(|h| h == *c))
            .map(|c| c.to_string())
            .ok_or_else(|| {
                parse_err(
                    1,
                    "no label column (y, label, class or status); name it explicitly".into(),
                )
            })?,
    };
    let label_idx = header
        .iter()
        .position(|h| *h == label_column)
        .ok_or_else(|| parse_err(1, format!("label column {label_column:?} not in header")))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(parse_err(1, "no explanatory variables".into()));
    }

    let mut labels = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("{} fields, header has {}", rec.len(), header.len()),
            ));
        }
        let mut col = 0;
        for (j, field) in rec.iter().enumerate() {
            let field = field.trim();
            if j == label_idx {
                labels.push((line, field.to_string()));
            } else {
                raw[col].push(field.to_string());
                col += 1;
            }
        }
    }
    if labels.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }

    let outcome = if opts.real_outcome {
        Outcome::Real(
            labels
                .iter()
                .map(|(line, l)| {
                    l.parse::<f64>()
                        .map_err(|_| parse_err(*line, format!("outcome {l:?} is not a number")))
                })
                .collect::<Result<_>>()?,
        )
    } else {
        let classes: Vec<Class> = labels
            .iter()
            .map(|(line, l)| {
                opts.encoding
                    .decode(l)
                    .ok_or_else(|| parse_err(*line, format!("unknown label {l:?}")))
            })
            .collect::<Result<_>>()?;
        if !classes.contains(&Class::Case) || !classes.contains(&Class::Control) {
            return Err(Error::Data(format!("{source}: labels do not contain both classes")));
        }
        Outcome::TwoClass(classes)
    };

    let n_rows = labels.len();
    let mut columns = Vec::with_capacity(names.len());
    let mut dictionaries = Vec::with_capacity(names.len());
    for col in &raw {
        let ints: Option<Vec<u32>> = col.iter().map(|v| v.parse::<u32>().ok()).collect();
        match ints {
            Some(codes) => {
                columns.push(codes);
                dictionaries.push(None);
            }
            None => {
                let dict: Vec<String> = col
                    .iter()
                    .cloned()
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let index: BTreeMap<&str, u32> = dict.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
                columns.push(col.iter().map(|v| index[v.as_str()]).collect());
                dictionaries.push(Some(dict));
            }
        }
    }
    let mut values = Vec::with_capacity(n_rows * names.len());
    for i in 0..n_rows {
        values.extend(columns.iter().map(|c| c[i]));
    }
    Ok(Dataset {
        sample: LabeledSample::from_flat(outcome, values, names)?,
        label_column,
        delimiter,
        dictionaries,
    })
}

/// Renders a sample with the label column first. Categorical columns are
/// written back as their category strings when `dictionaries` is given.
pub fn dataset_bytes(
    sample: &LabeledSample,
    label_column: &str,
    delimiter: u8,
    dictionaries: Option<&[Option<Vec<String>>]>,
) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec![label_column.to_string()];
    header.extend(sample.names().iter().cloned());
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..sample.n_rows() {
        rec.clear();
        rec.push(match sample.outcome() {
            Outcome::TwoClass(c) => c[i].symbol().to_string(),
            Outcome::Real(v) => v[i].to_string(),
        });
        for (j, &code) in sample.row(i).iter().enumerate() {
            let dict = dictionaries.and_then(|d| d.get(j)).and_then(|d| d.as_ref());
            rec.push(match dict {
                Some(d) => d
                    .get(code as usize)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("code {code} outside dictionary of {}", sample.names()[j])))?,
                None => code.to_string(),
            });
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    write_bytes(
        path,
        &dataset_bytes(
            &dataset.sample,
            &dataset.label_column,
            dataset.delimiter,
            Some(&dataset.dictionaries),
        )?,
    )
}

/// `key = <JSON value>` entries grouped into sections. Values may continue
/// over several lines; `#` starts a comment outside strings.
struct Section {
    header: Option<String>,
    line: usize,
    entries: Vec<(usize, String, Value)>,
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_sections(text: &str, source: &str) -> Result<Vec<Section>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut sections = vec![Section {
        header: None,
        line: 0,
        entries: Vec::new(),
    }];
    let mut pending: Option<(usize, String, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if let Some((start, key, mut buf)) = pending.take() {
            buf.push('\n');
            buf.push_str(line);
            match serde_json::from_str::<Value>(&buf) {
                Ok(v) => sections.last_mut().unwrap().entries.push((start, key, v)),
                Err(e) if e.is_eof() => pending = Some((start, key, buf)),
                Err(e) => return Err(err(start, format!("value of {key}: {e}"))),
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            sections.push(Section {
                header: Some(name.trim().to_string()),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim().to_string();
        match serde_json::from_str::<Value>(value.trim()) {
            Ok(v) => sections.last_mut().unwrap().entries.push((line_no, key, v)),
            Err(e) if e.is_eof() => pending = Some((line_no, key, value.trim().to_string())),
            Err(e) => return Err(err(line_no, format!("value of {key}: {e}"))),
        }
    }
    if let Some((start, key, _)) = pending {
        return Err(err(start, format!("unterminated value of {key}")));
    }
    Ok(sections)
}

struct Fields<'a> {
    source: &'a str,
    line: usize,
    map: BTreeMap<String, (usize, Value)>,
}

impl<'a> Fields<'a> {
    fn new(section: &Section, source: &'a str, allowed: &[&str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (line, key, value) in &section.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Parse {
                    path: source.into(),
                    line: *line,
                    message: format!("unknown key {key:?}; expected one of {}", allowed.join(", ")),
                });
            }
            if map.insert(key.clone(), (*line, value.clone())).is_some() {
                return Err(Error::Parse {
                    path: source.into(),
                    line: *line,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Self {
            source,
            line: section.line,
            map,
        })
    }

    fn err(&self, key: &str, message: String) -> Error {
        let line = self.map.get(key).map(|e| e.0).unwrap_or(self.line);
        Error::Parse {
            path: self.source.into(),
            line,
            message,
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((_, v)) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| self.err(key, format!("{key}: {e}"))),
        }
    }

    fn require<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| self.err(key, format!("missing {key}")))
    }

    fn model(&self) -> Result<DiseaseModel> {
        let maf: Vec<f64> = self.require("maf")?;
        let influential: Vec<usize> = self.get("influential")?.unwrap_or_else(|| vec![0]);
        let t: BTreeMap<String, f64> = self.require("t")?;
        DiseaseModel::from_tuple_map(maf, influential, &t).map_err(|e| self.err("t", e.to_string()))
    }
}

const MODEL_KEYS: [&str; 3] = ["maf", "influential", "t"];

/// Model spec: `maf = [..]`, `influential = [..]` (0-based SNP indices,
/// default `[0]`) and `t = {"00": 0.95, ..}` keyed by genotype digits in
/// influential-list order.
pub fn parse_model_spec(text: &str, source: &str) -> Result<DiseaseModel> {
    let sections = parse_sections(text, source)?;
    if sections.len() > 1 {
        return Err(Error::Parse {
            path: source.into(),
            line: sections[1].line,
            message: "sections are not allowed in a model spec".into(),
        });
    }
    Fields::new(&sections[0], source, &MODEL_KEYS)?.model()
}

pub fn read_model_spec(path: &Path) -> Result<DiseaseModel> {
    parse_model_spec(&read_text(path)?, &path.display().to_string())
}

pub fn format_model_spec(model: &DiseaseModel) -> String {
    let t: serde_json::Map<String, Value> = model
        .tuple_map()
        .into_iter()
        .map(|(k, v)| (k, Value::from(v)))
        .collect();
    format!(
        "maf = {}\ninfluential = {}\nt = {}\n",
        serde_json::to_string(model.maf()).unwrap(),
        serde_json::to_string(model.influential()).unwrap(),
        Value::Object(t)
    )
}

/// Bias-study config: one `[[row]]` section per configuration, each with
/// the model keys plus `n`, optional `reps` (default 25) and `label`.
pub fn parse_study_config(text: &str, source: &str) -> Result<Vec<StudyRow>> {
    let sections = parse_sections(text, source)?;
    if let Some((line, key, _)) = sections[0].entries.first() {
        return Err(Error::Parse {
            path: source.into(),
            line: *line,
            message: format!("{key} appears before the first [[row]]"),
        });
    }
    let mut rows = Vec::new();
    for (i, s) in sections.iter().enumerate().skip(1) {
        if s.header.as_deref() != Some("row") {
            return Err(Error::Parse {
                path: source.into(),
                line: s.line,
                message: format!("unknown section [[{}]]", s.header.as_deref().unwrap_or("")),
            });
        }
        let f = Fields::new(s, source, &["maf", "influential", "t", "n", "reps", "label"])?;
        let n: usize = f.require("n")?;
        let reps: usize = f.get("reps")?.unwrap_or(25);
        if n == 0 || reps == 0 {
            return Err(f.err("n", "n and reps must be positive".into()));
        }
        rows.push(StudyRow {
            label: f.get("label")?.unwrap_or_else(|| format!("row{i}")),
            model: f.model()?,
            n,
            reps,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: source.into(),
            line: 1,
            message: "no [[row]] sections".into(),
        });
    }
    Ok(rows)
}

pub fn format_study_config(rows: &[StudyRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str("[[row]]\n");
        out.push_str(&format!("label = {}\n", Value::from(r.label.clone())));
        out.push_str(&format_model_spec(&r.model));
        out.push_str(&format!("n = {}\nreps = {}\n\n", r.n, r.reps));
    }
    out
}

/// `pi_d=0.3,c_d=2,c_h=1`; `pi_h` defaults to `1 − pi_d`, costs to 1.
pub fn parse_costs(spec: &str) -> Result<CostPriorSpec> {
    let mut vals: BTreeMap<&str, f64> = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("cost entry {part:?} is not key=value")))?;
        let k = k.trim();
        if !["pi_d", "pi_h", "c_d", "c_h"].contains(&k) {
            return Err(Error::Usage(format!("unknown cost key {k:?}")));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("cost {k} = {v:?} is not a number")))?;
        vals.insert(k, v);
    }
    let pi_d = vals.get("pi_d").copied().unwrap_or(0.5);
    let pi_h = vals.get("pi_h").copied().unwrap_or(1.0 - pi_d);
    CostPriorSpec::new(
        pi_d,
        pi_h,
        vals.get("c_d").copied().unwrap_or(1.0),
        vals.get("c_h").copied().unwrap_or(1.0),
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// What was run, on which inputs, producing which files. Contains no
/// timestamps so reruns write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], seed: Option<u64>, config: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: argv.to_vec(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// `dir/manifest.json` for directory outputs, else `<file>.manifest.json`.
    pub fn path_for(output: &Path, is_dir: bool) -> PathBuf {
        if is_dir {
            output.join("manifest.json")
        } else {
            let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            name.push(".manifest.json");
            output.with_file_name(name)
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        bytes.write_all(b"\n").expect("vec write");
        write_bytes(path, &bytes)
    }
}
