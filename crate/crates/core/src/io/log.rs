// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use serde::Serialize;

use super::IoError;
use crate::elements::ElementKind;
use crate::engine::{Board, SampleRun};

/// One row per sampled run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionRow {
    pub run: u64,
    pub seed: u64,
    pub inputs: Vec<bool>,
    pub detectors: Vec<bool>,
    pub outputs: Vec<i64>,
    pub detection_step: Option<usize>,
}

/// Per-run input bits, detector bits and output values, columns in board
/// order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionLog {
    pub input_ids: Vec<String>,
    pub detector_ids: Vec<String>,
    pub output_ids: Vec<String>,
    pub rows: Vec<DetectionRow>,
}

impl DetectionLog {
    pub fn from_runs(board: &Board, runs: &[SampleRun]) -> Self {
        let owned = |v: Vec<&str>| v.into_iter().map(String::from).collect::<Vec<_>>();
        let input_ids = owned(
            board.ids_of(|e| matches!(e.kind, ElementKind::Switch | ElementKind::RandomSwitch)),
        );
        let detector_ids = owned(board.detector_ids());
        let output_ids = owned(board.ids_of(|e| e.kind == ElementKind::OutputVariable));
        let rows = runs
            .iter()
            .map(|r| DetectionRow {
                run: r.run,
                seed: r.seed,
                inputs: input_ids
                    .iter()
                    .map(|id| r.classical.inputs.get(id).copied().unwrap_or(false))
                    .collect(),
                detectors: detector_ids
                    .iter()
                    .map(|id| r.classical.detector_bit(id))
                    .collect(),
                outputs: output_ids
                    .iter()
                    .map(|id| r.classical.values.get(id).copied().unwrap_or(0))
                    .collect(),
                detection_step: r.first_detection_step(),
            })
            .collect();
        Self {
            input_ids,
            detector_ids,
            output_ids,
            rows,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["run".to_string(), "seed".to_string()];
        h.extend(self.input_ids.iter().map(|i| format!("in:{i}")));
        h.extend(self.detector_ids.iter().map(|i| format!("det:{i}")));
        h.extend(self.output_ids.iter().map(|i| format!("out:{i}")));
        h.push("detection_step".into());
        h
    }

    /// Bits are written as 0/1; a run without detections has an empty
    /// `detection_step`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), IoError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let bit = |b: &bool| if *b { "1".to_string() } else { "0".to_string() };
        for r in &self.rows {
            let mut rec = vec![r.run.to_string(), r.seed.to_string()];
            rec.extend(r.inputs.iter().map(bit));
            rec.extend(r.detectors.iter().map(bit));
            rec.extend(r.outputs.iter().map(|v| v.to_string()));
            rec.push(r.detection_step.map(|s| s.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn detection_csv(board: &Board, runs: &[SampleRun]) -> Result<String, IoError> {
    let mut buf = Vec::new();
    DetectionLog::from_runs(board, runs).write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}
