use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::targets::TargetColumn;
use super::ReprError;

/// Size of the phoneme inventory (CMU set with allophones merged).
pub const NUM_PHONEMES: usize = 39;
/// Number of acoustic summary targets (six tracks x min/mean/median/max).
pub const NUM_ACOUSTIC: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn class_index(self) -> usize {
        self as usize
    }
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M" | "m" => Ok(Gender::M),
            "F" | "f" => Ok(Gender::F),
            other => Err(format!("unknown gender `{other}`")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "M",
            Gender::F => "F",
        })
    }
}

/// First-language background used by the accent probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum L1Accent {
    Arabic,
    Hindi,
    Korean,
    Mandarin,
    Spanish,
    Vietnamese,
}

impl L1Accent {
    pub const ALL: [L1Accent; 6] = [
        L1Accent::Arabic,
        L1Accent::Hindi,
        L1Accent::Korean,
        L1Accent::Mandarin,
        L1Accent::Spanish,
        L1Accent::Vietnamese,
    ];

    pub fn class_index(self) -> usize {
        self as usize
    }
}

impl FromStr for L1Accent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        L1Accent::ALL
            .into_iter()
            .find(|a| format!("{a:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown L1 accent `{s}`"))
    }
}

impl fmt::Display for L1Accent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One labelled frame. `frame_index` addresses the frame axis of the paired stack.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub utterance_id: String,
    pub frame_index: usize,
    pub speaker_id: Option<String>,
    pub gender: Option<Gender>,
    pub accent_l1: Option<L1Accent>,
    pub phoneme: Option<u16>,
    pub duration_ms: Option<f64>,
    pub acoustic: [Option<f64>; NUM_ACOUSTIC],
}

impl LabelRow {
    pub fn new(utterance_id: impl Into<String>, frame_index: usize) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            frame_index,
            speaker_id: None,
            gender: None,
            accent_l1: None,
            phoneme: None,
            duration_ms: None,
            acoustic: [None; NUM_ACOUSTIC],
        }
    }

    pub fn has(&self, column: TargetColumn) -> bool {
        match column {
            TargetColumn::Gender => self.gender.is_some(),
            TargetColumn::Accent => self.accent_l1.is_some(),
            TargetColumn::Phoneme => self.phoneme.is_some(),
            TargetColumn::Duration => self.duration_ms.is_some(),
            TargetColumn::Acoustic(k) => self.acoustic[k].is_some(),
        }
    }
}

/// Frame- and segment-level probe targets for one dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    pub rows: Vec<LabelRow>,
}

fn header() -> Vec<String> {
    let mut cols: Vec<String> =
        ["utterance_id", "frame_index", "speaker_id", "gender", "accent_l1", "phoneme", "duration_ms"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    cols.extend((0..NUM_ACOUSTIC).map(|k| format!("acoustic_{k:02}")));
    cols
}

fn parse_opt<T: FromStr>(cell: &str, column: &str, line: usize) -> Result<Option<T>, ReprError>
where
    T::Err: fmt::Display,
{
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<T>().map(Some).map_err(|e| ReprError::Format(format!("line {line}, column {column}: {e}")))
}

fn fmt_opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl LabelTable {
    pub fn new(rows: Vec<LabelRow>) -> Self {
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted, de-duplicated utterance ids.
    pub fn utterances(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.utterance_id.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn column_present(&self, column: TargetColumn) -> bool {
        self.rows.iter().any(|r| r.has(column))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, ReprError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let head = rdr.headers().map_err(|e| ReprError::Format(e.to_string()))?.clone();
        let expected = header();
        let position = |name: &str| head.iter().position(|h| h.trim() == name);
        let mut idx = Vec::with_capacity(expected.len());
        for name in &expected {
            idx.push(position(name));
        }
        if idx[0].is_none() || idx[1].is_none() {
            return Err(ReprError::Format("label table needs utterance_id and frame_index columns".into()));
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| ReprError::Format(format!("line {line}: {e}")))?;
            let cell = |k: usize| idx[k].and_then(|j| record.get(j)).unwrap_or("");
            let utterance_id = cell(0).trim().to_string();
            if utterance_id.is_empty() {
                return Err(ReprError::Format(format!("line {line}: empty utterance_id")));
            }
            let frame_index = parse_opt::<usize>(cell(1), "frame_index", line)?
                .ok_or_else(|| ReprError::Format(format!("line {line}: empty frame_index")))?;
            let mut row = LabelRow::new(utterance_id, frame_index);
            row.speaker_id = Some(cell(2).trim().to_string()).filter(|s| !s.is_empty());
            row.gender = parse_opt(cell(3), "gender", line)?;
            row.accent_l1 = parse_opt(cell(4), "accent_l1", line)?;
            row.phoneme = parse_opt(cell(5), "phoneme", line)?;
            row.duration_ms = parse_opt(cell(6), "duration_ms", line)?;
            for k in 0..NUM_ACOUSTIC {
                row.acoustic[k] = parse_opt(cell(7 + k), &expected[7 + k], line)?;
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, ReprError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ReprError::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<(), ReprError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let fmt_err = |e: csv::Error| ReprError::Data(e.to_string());
        wtr.write_record(header()).map_err(fmt_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.utterance_id.clone(),
                r.frame_index.to_string(),
                fmt_opt(&r.speaker_id),
                fmt_opt(&r.gender),
                fmt_opt(&r.accent_l1),
                fmt_opt(&r.phoneme),
                fmt_opt(&r.duration_ms),
            ];
            rec.extend(r.acoustic.iter().map(fmt_opt));
            wtr.write_record(rec).map_err(fmt_err)?;
        }
        wtr.flush().map_err(|e| ReprError::Data(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ReprError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| ReprError::io(path, e))?;
        self.to_writer(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_absent_cells() {
        let mut a = LabelRow::new("u1", 0);
        a.speaker_id = Some("spk".into());
        a.gender = Some(Gender::F);
        a.accent_l1 = Some(L1Accent::Korean);
        a.phoneme = Some(38);
        a.duration_ms = Some(120.5);
        a.acoustic[3] = Some(-1.25);
        let b = LabelRow::new("u2", 1);
        let table = LabelTable::new(vec![a, b]);
        let mut buf = Vec::new();
        table.to_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "utterance_id,frame_index,speaker_id,gender,accent_l1,phoneme,duration_ms,acoustic_00,"
        ));
        assert!(text.lines().next().unwrap().ends_with("acoustic_23"));
        let back = LabelTable::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn missing_optional_columns_read_as_absent() {
        let text = "utterance_id,frame_index,gender\nu1,0,M\nu1,1,M\n";
        let t = LabelTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.column_present(TargetColumn::Gender));
        assert!(!t.column_present(TargetColumn::Accent));
    }

    #[test]
    fn unparseable_cells_are_format_errors() {
        let text = "utterance_id,frame_index,gender\nu1,0,X\n";
        assert!(matches!(LabelTable::from_reader(text.as_bytes()), Err(ReprError::Format(_))));
        let text = "utterance_id,frame_index\nu1,-3\n";
        assert!(LabelTable::from_reader(text.as_bytes()).is_err());
    }
}
