use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::diagnostic::{sort_diagnostics, Code, DataValue, Diagnostic, Location, Severity, Stage};
use crate::duration::Rational;

pub const SCHEMA_VERSION: u32 = 1;

/// `file:measure:voice: severity code — message`, one line per finding.
pub fn render_text(diags: &[Diagnostic]) -> String {
    let mut sorted = diags.to_vec();
    sort_diagnostics(&mut sorted);
    let mut out = String::new();
    for d in &sorted {
        let voice = d
            .location
            .voice
            .map_or_else(|| "-".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{}:{}:{}: {} {} — {}",
            d.location.file, d.location.measure, voice, d.severity, d.code, d.message
        );
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonReport {
    schema_version: u32,
    file: String,
    diagnostics: Vec<JsonDiagnostic>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDiagnostic {
    code: Code,
    stage: Stage,
    severity: Severity,
    part: String,
    part_index: usize,
    measure: String,
    measure_index: usize,
    #[serde(default)]
    playback_index: Option<usize>,
    voice: Option<u32>,
    onset: Option<Rational>,
    message: String,
    data: BTreeMap<String, DataValue>,
}

/// One JSON document for the diagnostics of `file`.
pub fn render_json(file: &str, diags: &[Diagnostic]) -> Vec<u8> {
    let mut sorted = diags.to_vec();
    sort_diagnostics(&mut sorted);
    let report = JsonReport {
        schema_version: SCHEMA_VERSION,
        file: file.to_string(),
        diagnostics: sorted
            .into_iter()
            .map(|d| JsonDiagnostic {
                code: d.code,
                stage: d.stage,
                severity: d.severity,
                part: d.location.part,
                part_index: d.location.part_index,
                measure: d.location.measure,
                measure_index: d.location.measure_index,
                playback_index: d.location.playback_index,
                voice: d.location.voice,
                onset: d.location.onset,
                message: d.message,
                data: d.data,
            })
            .collect(),
    };
    serde_json::to_vec(&report).expect("report serialization is infallible")
}

/// Inverse of [`render_json`].
pub fn parse_json(bytes: &[u8]) -> serde_json::Result<(String, Vec<Diagnostic>)> {
    let report: JsonReport = serde_json::from_slice(bytes)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(serde::de::Error::custom(format!(
            "unsupported schema_version {}",
            report.schema_version
        )));
    }
    let file = report.file;
    let diags = report
        .diagnostics
        .into_iter()
        .map(|j| Diagnostic {
            code: j.code,
            stage: j.stage,
            severity: j.severity,
            location: Location {
                file: file.clone(),
                part: j.part,
                part_index: j.part_index,
                measure: j.measure,
                measure_index: j.measure_index,
                playback_index: j.playback_index,
                voice: j.voice,
                onset: j.onset,
            },
            message: j.message,
            data: j.data,
        })
        .collect();
    Ok((file, diags))
}
