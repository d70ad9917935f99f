//! Timeline CSV: `run_id,cohort,stage_index,start_s`.
//!
//! Each run contributes one row per stage start plus a final row whose
//! `stage_index` equals the stage count and whose `start_s` is the
//! completion time. Seconds are decimals with at most millisecond
//! precision and convert to integer milliseconds exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::timeline::Timeline;
use super::EvalError;

pub const TIMELINE_HEADER: [&str; 4] = ["run_id", "cohort", "stage_index", "start_s"];

/// Parses a non-negative decimal seconds value into exact milliseconds.
/// Digits beyond the third decimal must be zero.
pub fn parse_seconds(text: &str) -> Result<u64, EvalError> {
    let bad = || EvalError::BadSeconds(text.to_owned());
    let t = text.trim();
    let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !digits(whole) || !digits(frac) {
        return Err(bad());
    }
    let (ms_part, rest) = frac.split_at(frac.len().min(3));
    if rest.bytes().any(|b| b != b'0') {
        return Err(bad());
    }
    let secs: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    let ms: u64 = format!("{ms_part:0<3}").parse().map_err(|_| bad())?;
    secs.checked_mul(1000).and_then(|v| v.checked_add(ms)).ok_or_else(bad)
}

pub fn format_seconds(ms: u64) -> String {
    format!("{}.{:03}", ms / 1000, ms % 1000)
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    run_id: String,
    cohort: String,
    stage_index: usize,
    start_s: String,
}

/// Rows for a possibly incomplete run: stage starts only, without the
/// completion row.
pub fn write_partial_run<W: Write>(
    out: W,
    run_id: &str,
    cohort: &str,
    stage_starts: &[u64],
) -> Result<(), EvalError> {
    let mut w = ::csv::Writer::from_writer(out);
    for (i, &start) in stage_starts.iter().enumerate() {
        w.serialize(Row {
            run_id: run_id.to_owned(),
            cohort: cohort.to_owned(),
            stage_index: i,
            start_s: format_seconds(start),
        })?;
    }
    if stage_starts.is_empty() {
        w.write_record(TIMELINE_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timelines<W: Write>(out: W, timelines: &[Timeline]) -> Result<(), EvalError> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(TIMELINE_HEADER)?;
    for t in timelines {
        for (i, b) in t.boundaries().into_iter().enumerate() {
            w.write_record([
                t.run_id.as_str(),
                t.cohort.as_str(),
                &i.to_string(),
                &format_seconds(b),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn timelines_to_csv(timelines: &[Timeline]) -> String {
    let mut buf = Vec::new();
    write_timelines(&mut buf, timelines).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Reads every run from a Timeline CSV, in order of first appearance.
pub fn read_timelines<R: Read>(input: R) -> Result<Vec<Timeline>, EvalError> {
    let mut r = ::csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TIMELINE_HEADER) {
        return Err(EvalError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    struct Pending {
        run_id: String,
        cohort: String,
        bounds: Vec<u64>,
    }
    let mut runs: Vec<Pending> = Vec::new();
    for (line, rec) in r.deserialize::<Row>().enumerate() {
        let row = rec?;
        let ms = parse_seconds(&row.start_s)?;
        match runs.last_mut() {
            Some(p) if p.run_id == row.run_id => {
                if row.cohort != p.cohort || row.stage_index != p.bounds.len() {
                    return Err(EvalError::BadRow { line: line + 2, run_id: row.run_id });
                }
                p.bounds.push(ms);
            }
            _ => {
                if row.stage_index != 0 || runs.iter().any(|p| p.run_id == row.run_id) {
                    return Err(EvalError::BadRow { line: line + 2, run_id: row.run_id });
                }
                runs.push(Pending { run_id: row.run_id, cohort: row.cohort, bounds: vec![ms] });
            }
        }
    }
    runs.into_iter()
        .map(|p| Timeline::from_boundaries(p.run_id, p.cohort, &p.bounds))
        .collect()
}

pub fn timelines_from_csv(text: &str) -> Result<Vec<Timeline>, EvalError> {
    read_timelines(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seconds_convert_exactly() {
        assert_eq!(parse_seconds("4.333").unwrap(), 4333);
        assert_eq!(parse_seconds("12").unwrap(), 12_000);
        assert_eq!(parse_seconds("0.5").unwrap(), 500);
        assert_eq!(parse_seconds(".25").unwrap(), 250);
        assert_eq!(parse_seconds("7.1000").unwrap(), 7100);
        assert!(parse_seconds("7.1005").is_err());
        assert!(parse_seconds("-1").is_err());
        assert!(parse_seconds("1e3").is_err());
        assert!(parse_seconds("").is_err());
        assert!(parse_seconds(".").is_err());
        assert_eq!(format_seconds(4333), "4.333");
        assert_eq!(format_seconds(50), "0.050");
    }

    #[test]
    fn layout() {
        let t = Timeline::from_starts("run-0", "fast", &[0, 4333], 9000).unwrap();
        let text = timelines_to_csv(&[t]);
        assert_eq!(
            text,
            "run_id,cohort,stage_index,start_s\n\
             run-0,fast,0,0.000\n\
             run-0,fast,1,4.333\n\
             run-0,fast,2,9.000\n"
        );
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            timelines_from_csv("run,cohort,stage,start\n"),
            Err(EvalError::BadHeader(_))
        ));
        let skipped = "run_id,cohort,stage_index,start_s\nr,fast,0,0\nr,fast,2,4\n";
        assert!(matches!(timelines_from_csv(skipped), Err(EvalError::BadRow { line: 3, .. })));
        let split = "run_id,cohort,stage_index,start_s\nr,f,0,0\nr,f,1,1\nq,f,0,0\nq,f,1,1\nr,f,0,0\n";
        assert!(matches!(timelines_from_csv(split), Err(EvalError::BadRow { .. })));
        let lone = "run_id,cohort,stage_index,start_s\nr,f,0,0\n";
        assert!(matches!(timelines_from_csv(lone), Err(EvalError::NoStages)));
        let backwards = "run_id,cohort,stage_index,start_s\nr,f,0,5\nr,f,1,4\n";
        assert!(timelines_from_csv(backwards).is_err());
    }

    #[test]
    fn partial_rows_have_no_completion() {
        let mut buf = Vec::new();
        write_partial_run(&mut buf, "live", "run", &[0, 1500]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "run_id,cohort,stage_index,start_s\nlive,run,0,0.000\nlive,run,1,1.500\n");
    }

    proptest! {
        #[test]
        fn round_trip(runs in prop::collection::vec(prop::collection::vec(0u64..20_000, 1..14), 0..6)) {
            let timelines: Vec<Timeline> = runs
                .into_iter()
                .enumerate()
                .map(|(i, gaps)| {
                    let mut acc = 0;
                    let bounds: Vec<u64> = std::iter::once(0)
                        .chain(gaps.iter().map(|g| { acc += g; acc }))
                        .collect();
                    Timeline::from_boundaries(format!("run-{i}"), if i % 2 == 0 { "fast" } else { "slow" }, &bounds).unwrap()
                })
                .collect();
            let text = timelines_to_csv(&timelines);
            prop_assert_eq!(timelines_from_csv(&text).unwrap(), timelines);
        }
    }
}
