//! Dataset files: JSON and CSV readers and writers.
//!
//! JSON:
//!
//! ```json
//! {"name": "delft",
//!  "outcome_labels": {"alice": ["+", "-"], "bob": ["+", "-"]},
//!  "tables": {"11": [[23, 3], [4, 23]], "12": ..., "21": ..., "22": ...}}
//! ```
//!
//! Rows are Alice's outcome and columns Bob's, `+` first. `outcome_labels`
//! may be omitted.
//!
//! CSV: header `setting_a,setting_b,n_pp,n_pm,n_mp,n_mm` and exactly four
//! data rows, one per setting pair.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use bell_core::{BellDataset, CountTable, OutcomeLabels, SettingPair, SETTING_PAIRS};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::Error;

pub const CSV_HEADER: [&str; 6] = ["setting_a", "setting_b", "n_pp", "n_pm", "n_mp", "n_mm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Guess from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown dataset format `{other}` (expected json or csv)")),
        }
    }
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Invalid {
        location: location.into(),
        message: message.into(),
    }
}

/// Parse and validate a dataset. `default_name` is used when the format
/// carries no name (CSV) or the JSON name is empty.
pub fn parse_dataset(input: &[u8], format: Format, default_name: &str) -> Result<BellDataset, Error> {
    match format {
        Format::Json => parse_json(input, default_name),
        Format::Csv => parse_csv(input, default_name),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    #[serde(default)]
    name: String,
    outcome_labels: Option<JsonLabels>,
    tables: JsonTables,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct JsonLabels {
    alice: [String; 2],
    bob: [String; 2],
}

/// Table entries in file order, so duplicates can be reported.
struct JsonTables(Vec<(String, [[i64; 2]; 2])>);

impl<'de> Deserialize<'de> for JsonTables {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = JsonTables;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping setting pairs to 2x2 count arrays")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<JsonTables, A::Error> {
                let mut out = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    let value = map
                        .next_value::<[[i64; 2]; 2]>()
                        .map_err(|e| de::Error::custom(format!("tables.{key}: {e}")))?;
                    out.push((key, value));
                }
                Ok(JsonTables(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn setting_from_key(key: &str) -> Option<SettingPair> {
    let b = key.as_bytes();
    if b.len() != 2 {
        return None;
    }
    let pair = SettingPair::new(b[0].wrapping_sub(b'0'), b[1].wrapping_sub(b'0'));
    pair.index().map(|_| pair)
}

fn parse_json(input: &[u8], default_name: &str) -> Result<BellDataset, Error> {
    let raw: JsonDataset = serde_json::from_slice(input).map_err(|e| Error::Syntax {
        format: "json",
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut slots: [Option<CountTable>; 4] = [None; 4];
    for (key, cells) in &raw.tables.0 {
        let pair = setting_from_key(key)
            .ok_or_else(|| invalid(format!("tables.{key}"), "setting pair key must be one of 11, 12, 21, 22"))?;
        let slot = &mut slots[pair.index().unwrap()];
        if slot.is_some() {
            return Err(invalid(format!("tables.{key}"), format!("duplicate setting pair {pair}")));
        }
        let mut counts = [[0u64; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let v = cells[x][y];
                if v < 0 {
                    return Err(invalid(format!("tables.{key}[{x}][{y}]"), format!("negative count {v}")));
                }
                counts[x][y] = v as u64;
            }
        }
        *slot = Some(CountTable::new(counts));
    }
    let tables = collect_tables(slots, |pair| format!("tables.{}{}", pair.alice, pair.bob))?;
    let labels = match raw.outcome_labels {
        Some(l) => OutcomeLabels {
            alice: l.alice,
            bob: l.bob,
        },
        None => OutcomeLabels::plus_minus(),
    };
    let name = if raw.name.is_empty() { default_name.to_string() } else { raw.name };
    Ok(BellDataset::new(name, tables, labels))
}

fn collect_tables(
    slots: [Option<CountTable>; 4],
    location: impl Fn(SettingPair) -> String,
) -> Result<[CountTable; 4], Error> {
    let mut tables = [CountTable::default(); 4];
    for (i, pair) in SETTING_PAIRS.iter().enumerate() {
        tables[i] = slots[i].ok_or_else(|| invalid(location(*pair), format!("missing setting pair {pair}")))?;
    }
    Ok(tables)
}

fn parse_csv(input: &[u8], default_name: &str) -> Result<BellDataset, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let syntax = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Syntax {
            format: "csv",
            line,
            column: 0,
            message: e.to_string(),
        }
    };
    let header = reader.headers().map_err(syntax)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(invalid(
            "row 1 (header)",
            format!("expected header `{}`, found `{}`", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut slots: [Option<CountTable>; 4] = [None; 4];
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(syntax)?;
        let line = record.position().map_or(rows + 2, |p| p.line() as usize);
        rows += 1;
        if rows > 4 {
            return Err(invalid(format!("row {line}"), "expected exactly four data rows"));
        }
        let field = |i: usize| -> Result<i64, Error> {
            let text = record.get(i).unwrap_or("");
            text.parse::<i64>().map_err(|_| {
                invalid(format!("row {line}, field {}", CSV_HEADER[i]), format!("not an integer: `{text}`"))
            })
        };
        let (a, b) = (field(0)?, field(1)?);
        let pair = match (a, b) {
            (1..=2, 1..=2) => SettingPair::new(a as u8, b as u8),
            _ => {
                return Err(invalid(
                    format!("row {line}, field setting_a/setting_b"),
                    format!("settings must be 1 or 2, found ({a},{b})"),
                ))
            }
        };
        let mut cells = [0u64; 4];
        for (k, cell) in cells.iter_mut().enumerate() {
            let v = field(2 + k)?;
            if v < 0 {
                return Err(invalid(
                    format!("row {line}, field {}", CSV_HEADER[2 + k]),
                    format!("negative count {v}"),
                ));
            }
            *cell = v as u64;
        }
        let slot = &mut slots[pair.index().unwrap()];
        if slot.is_some() {
            return Err(invalid(format!("row {line}"), format!("duplicate setting pair {pair}")));
        }
        *slot = Some(CountTable::from_cells(cells));
    }
    let tables = collect_tables(slots, |_| "csv".to_string())?;
    Ok(BellDataset::new(default_name, tables, OutcomeLabels::plus_minus()))
}

#[derive(Serialize)]
struct JsonOut<'a> {
    name: &'a str,
    outcome_labels: JsonLabels,
    tables: BTreeMap<String, [[u64; 2]; 2]>,
}

pub fn tables_by_key(ds: &BellDataset) -> BTreeMap<String, [[u64; 2]; 2]> {
    SETTING_PAIRS
        .iter()
        .zip(&ds.tables)
        .map(|(p, t)| (format!("{}{}", p.alice, p.bob), t.counts))
        .collect()
}

pub fn to_json(ds: &BellDataset) -> String {
    let out = JsonOut {
        name: &ds.name,
        outcome_labels: JsonLabels {
            alice: ds.outcome_labels.alice.clone(),
            bob: ds.outcome_labels.bob.clone(),
        },
        tables: tables_by_key(ds),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("dataset serializes");
    s.push('\n');
    s
}

/// CSV carries counts only; name and labels are not stored.
pub fn to_csv(ds: &BellDataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (p, t) in SETTING_PAIRS.iter().zip(&ds.tables) {
        let c = t.cells();
        w.write_record([
            p.alice.to_string(),
            p.bob.to_string(),
            c[0].to_string(),
            c[1].to_string(),
            c[2].to_string(),
            c[3].to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn serialize(ds: &BellDataset, format: Format) -> String {
    match format {
        Format::Json => to_json(ds),
        Format::Csv => to_csv(ds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bell_core::data::load_embedded;

    const GOOD_CSV: &str = "setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n1,1,23,3,4,23\n1,2,33,11,5,30\n2,1,22,10,6,24\n2,2,4,20,21,6\n";

    fn err_text(r: Result<BellDataset, Error>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn csv_four_rows() {
        let ds = parse_dataset(GOOD_CSV.as_bytes(), Format::Csv, "delft").unwrap();
        let mut want = load_embedded("delft").unwrap();
        want.canonical = false;
        assert_eq!(ds, want);
        assert!(!ds.canonical);
    }

    #[test]
    fn csv_rows_in_any_order() {
        let shuffled = "setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n2,2,4,20,21,6\n1,2,33,11,5,30\n1,1,23,3,4,23\n2,1,22,10,6,24\n";
        let a = parse_dataset(GOOD_CSV.as_bytes(), Format::Csv, "x").unwrap();
        let b = parse_dataset(shuffled.as_bytes(), Format::Csv, "x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_missing_pair() {
        let text = "setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n1,1,23,3,4,23\n1,2,33,11,5,30\n2,2,4,20,21,6\n";
        let msg = err_text(parse_dataset(text.as_bytes(), Format::Csv, "x"));
        assert!(msg.contains("missing setting pair (2,1)"), "{msg}");
    }

    #[test]
    fn csv_negative_and_duplicate_located() {
        let text = GOOD_CSV.replace("2,1,22,10,6,24", "2,1,22,-10,6,24");
        let msg = err_text(parse_dataset(text.as_bytes(), Format::Csv, "x"));
        assert!(msg.contains("row 4, field n_pm") && msg.contains("negative count -10"), "{msg}");

        let text = GOOD_CSV.replace("2,1,22,10,6,24", "1,1,22,10,6,24");
        let msg = err_text(parse_dataset(text.as_bytes(), Format::Csv, "x"));
        assert!(msg.contains("row 4") && msg.contains("duplicate setting pair (1,1)"), "{msg}");
    }

    #[test]
    fn csv_bad_header_and_garbage() {
        let text = GOOD_CSV.replace("n_pm", "n_xx");
        assert!(err_text(parse_dataset(text.as_bytes(), Format::Csv, "x")).contains("header"));
        let text = GOOD_CSV.replace("33,11", "33,eleven");
        let msg = err_text(parse_dataset(text.as_bytes(), Format::Csv, "x"));
        assert!(msg.contains("row 3, field n_pm"), "{msg}");
        let text = format!("{GOOD_CSV}1,1,1,1,1,1\n");
        assert!(err_text(parse_dataset(text.as_bytes(), Format::Csv, "x")).contains("exactly four"));
        let text = GOOD_CSV.replace("2,2,4,20,21,6", "2,3,4,20,21,6");
        assert!(err_text(parse_dataset(text.as_bytes(), Format::Csv, "x")).contains("settings must be 1 or 2"));
    }

    #[test]
    fn json_round_trip_of_embedded() {
        for name in bell_core::data::EMBEDDED_NAMES {
            let mut ds = load_embedded(name).unwrap();
            let back = parse_dataset(to_json(&ds).as_bytes(), Format::Json, "unused").unwrap();
            ds.canonical = false;
            assert_eq!(back, ds);
        }
    }

    #[test]
    fn json_errors_located() {
        let good = to_json(&load_embedded("munich").unwrap());
        let missing = good.replace("\"21\"", "\"xx\"");
        assert!(err_text(parse_dataset(missing.as_bytes(), Format::Json, "x")).contains("tables.xx"));

        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["tables"].as_object_mut().unwrap().remove("21");
        let msg = err_text(parse_dataset(v.to_string().as_bytes(), Format::Json, "x"));
        assert!(msg.contains("missing setting pair (2,1)"), "{msg}");

        v["tables"]["21"] = serde_json::json!([[1, -2], [3, 4]]);
        let msg = err_text(parse_dataset(v.to_string().as_bytes(), Format::Json, "x"));
        assert!(msg.contains("tables.21[0][1]") && msg.contains("negative count -2"), "{msg}");

        let dup = r#"{"name":"d","tables":{"11":[[1,1],[1,1]],"12":[[1,1],[1,1]],"11":[[2,2],[2,2]],"21":[[1,1],[1,1]],"22":[[1,1],[1,1]]}}"#;
        let msg = err_text(parse_dataset(dup.as_bytes(), Format::Json, "x"));
        assert!(msg.contains("duplicate setting pair (1,1)"), "{msg}");

        let msg = err_text(parse_dataset(b"{\"name\": \"x\",\n \"tables\": [", Format::Json, "x"));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn json_without_labels_defaults() {
        let text = r#"{"tables":{"11":[[1,1],[1,1]],"12":[[1,1],[1,1]],"21":[[1,1],[1,1]],"22":[[1,1],[1,1]]}}"#;
        let ds = parse_dataset(text.as_bytes(), Format::Json, "fallback").unwrap();
        assert_eq!(ds.name, "fallback");
        assert_eq!(ds.outcome_labels, OutcomeLabels::plus_minus());
    }
}
