//! Per-recording disorder labels: `recording_id,patient_id,<disorder...>`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub patient_id: String,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTable {
    pub disorders: Vec<String>,
    pub rows: BTreeMap<String, LabelRow>,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

impl LabelTable {
    pub fn disorder_index(&self, name: &str) -> Result<usize> {
        self.disorders
            .iter()
            .position(|d| d == name)
            .ok_or_else(|| Error::Data(format!("labels have no column for disorder {name:?}")))
    }

    pub fn get(&self, recording_id: &str) -> Option<&LabelRow> {
        self.rows.get(recording_id)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "recording_id" || &header[1] != "patient_id" {
            return Err(Error::Data(
                "labels must have columns recording_id,patient_id,<disorder...>".into(),
            ));
        }
        let mut table = LabelTable {
            disorders: header.iter().skip(2).map(str::to_string).collect(),
            rows: BTreeMap::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            let labels = rec
                .iter()
                .skip(2)
                .map(|c| parse_flag(c).ok_or_else(|| Error::Data(format!("label value {c:?} is not 0/1"))))
                .collect::<Result<Vec<_>>>()?;
            let row = LabelRow {
                patient_id: rec[1].to_string(),
                labels,
            };
            if table.rows.insert(rec[0].to_string(), row).is_some() {
                return Err(Error::Data(format!("recording {:?} labelled twice", &rec[0])));
            }
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["recording_id".to_string(), "patient_id".to_string()];
        header.extend(self.disorders.iter().cloned());
        wtr.write_record(&header)?;
        for (id, row) in &self.rows {
            let mut rec = vec![id.clone(), row.patient_id.clone()];
            rec.extend(row.labels.iter().map(|&l| (l as u8).to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
