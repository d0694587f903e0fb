//! Output rows and their CSV / JSON-lines encodings.

use std::io::Write;

use crate::config::Format;
use crate::error::CliResult;

/// Column order of every output file.
pub const HEADER: [&str; 15] = [
    "estimator",
    "grid_index",
    "p",
    "k",
    "c",
    "pi0",
    "pi1",
    "sample",
    "component",
    "estimate",
    "bias",
    "mse",
    "se",
    "n",
    "flags",
];

/// Columns written as JSON numbers when they hold a single finite value.
const NUMERIC: [&str; 12] = [
    "grid_index",
    "p",
    "k",
    "c",
    "pi0",
    "pi1",
    "sample",
    "estimate",
    "bias",
    "mse",
    "se",
    "n",
];

/// The parameter columns of a row. Multi-valued entries (two-trait cells,
/// per-trait accuracies) are joined with `/`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamPoint {
    pub p: Vec<f64>,
    pub k: Option<u32>,
    pub c: Option<u32>,
    pub pi0: Vec<f64>,
    pub pi1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRecord {
    pub estimator: String,
    pub grid_index: usize,
    pub params: ParamPoint,
    /// A sample point, or `None` for rows summarising many replicates.
    pub sample: Option<Vec<u32>>,
    pub component: String,
    pub estimate: f64,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
    pub se: Option<f64>,
    pub n: Option<u64>,
    pub flags: Vec<String>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| number(*v)).collect::<Vec<_>>().join("/")
}

impl EstimateRecord {
    /// The row as text cells in [`HEADER`] order.
    pub fn cells(&self) -> [String; 15] {
        let opt = |v: Option<f64>| v.map(number).unwrap_or_default();
        [
            self.estimator.clone(),
            self.grid_index.to_string(),
            joined(&self.params.p),
            self.params.k.map(|v| v.to_string()).unwrap_or_default(),
            self.params.c.map(|v| v.to_string()).unwrap_or_default(),
            joined(&self.params.pi0),
            joined(&self.params.pi1),
            self.sample
                .as_ref()
                .map(|s| s.iter().map(u32::to_string).collect::<Vec<_>>().join("/"))
                .unwrap_or_default(),
            self.component.clone(),
            number(self.estimate),
            opt(self.bias),
            opt(self.mse),
            opt(self.se),
            self.n.map(|v| v.to_string()).unwrap_or_default(),
            self.flags.join(";"),
        ]
    }
}

pub fn write_records(records: &[EstimateRecord], format: Format, out: impl Write) -> CliResult<()> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Jsonl => write_jsonl(records, out),
    }
}

fn write_csv(records: &[EstimateRecord], out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::error::CliError::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        w.write_record(r.cells()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn json_cell(column: &str, cell: &str) -> String {
    if cell.is_empty() {
        return "null".into();
    }
    let numeric = NUMERIC.contains(&column)
        && !cell.contains('/')
        && cell.parse::<f64>().is_ok_and(f64::is_finite);
    if numeric {
        cell.to_string()
    } else {
        serde_json::Value::from(cell).to_string()
    }
}

fn write_jsonl(records: &[EstimateRecord], mut out: impl Write) -> CliResult<()> {
    for r in records {
        let fields: Vec<String> = HEADER
            .iter()
            .zip(r.cells())
            .map(|(h, cell)| format!("{}:{}", serde_json::Value::from(*h), json_cell(h, &cell)))
            .collect();
        writeln!(out, "{{{}}}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> EstimateRecord {
        EstimateRecord {
            estimator: "UB_ONE_PERFECT".into(),
            grid_index: 3,
            params: ParamPoint {
                p: vec![0.05],
                k: Some(10),
                c: Some(5),
                pi0: vec![1.0],
                pi1: vec![1.0],
            },
            sample: None,
            component: "p".into(),
            estimate: 0.1 + 0.2,
            bias: Some(-1e-5),
            mse: Some(2.5e-4),
            se: Some(f64::NAN),
            n: Some(100),
            flags: vec!["clamped=0".into()],
        }
    }

    #[test]
    fn empty_stream_is_header_only() {
        let mut buf = Vec::new();
        write_records(&[], Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), HEADER.join(",") + "\n");
        let mut buf = Vec::new();
        write_records(&[], Format::Jsonl, &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn one_record_one_row_in_header_order() {
        let mut buf = Vec::new();
        write_records(&[record()], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), HEADER.len());
        assert_eq!(cells[0], "UB_ONE_PERFECT");
        assert_eq!(cells[9].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(cells[14], "clamped=0");
    }

    #[test]
    fn csv_and_jsonl_carry_the_same_values() {
        let mut two = record();
        two.params.p = vec![0.1, 0.1, 0.05];
        two.sample = Some(vec![1, 1, 0]);
        two.bias = None;
        let records = [record(), two];
        let mut csv_buf = Vec::new();
        write_records(&records, Format::Csv, &mut csv_buf).unwrap();
        let mut json_buf = Vec::new();
        write_records(&records, Format::Jsonl, &mut json_buf).unwrap();

        let mut reader = csv::Reader::from_reader(csv_buf.as_slice());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        let json: Vec<serde_json::Value> = String::from_utf8(json_buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), json.len());
        for (row, obj) in rows.iter().zip(&json) {
            for (h, cell) in HEADER.iter().zip(row.iter()) {
                let v = &obj[*h];
                match v {
                    serde_json::Value::Null => assert_eq!(cell, ""),
                    serde_json::Value::Number(n) => {
                        assert_eq!(n.as_f64().unwrap(), cell.parse::<f64>().unwrap())
                    }
                    serde_json::Value::String(s) => assert_eq!(s, cell),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }
}
