//! Trace files: one CSV row per step, fixed column order, floats at nine
//! significant digits, booleans as `0`/`1`.
//!
//! The trace is the run's complete observable record — every verification
//! check and plot reads it back from disk, and the determinism contract is
//! stated on its bytes: same config and seed, byte-identical file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

/// Fixed column order. Parsers reject any header that differs.
pub const COLUMNS: [&str; 31] = [
    "t",
    "c",
    "e",
    "n",
    "s",
    "f_base",
    "eps_t",
    "grad_norm_pre",
    "grad_norm_post",
    "i_pred",
    "md",
    "mce",
    "delta_s",
    "fired",
    "phase_shift",
    "reward_base",
    "reward_spikes",
    "reward_penalty",
    "reward_dg",
    "reward_baseline",
    "reward_md",
    "reward_mce",
    "reward_ext",
    "reward_total",
    "capability",
    "goals_active",
    "goals_noise",
    "toll_l1",
    "k_max",
    "h_norm",
    "in_region",
];

/// The CSV header line (no trailing newline).
pub fn header() -> String {
    COLUMNS.join(",")
}

/// Nine significant digits, normalized scientific notation. This is the
/// single float encoding used everywhere in a trace.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One step of the loop, as recorded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: u64,
    /// Metacognitive state: confidence, predicted error, novelty, success.
    pub c: f64,
    pub e: f64,
    pub n: f64,
    pub s: f64,
    /// Emotion potential f(v_t).
    pub f_base: f64,
    /// Scalar drive ε_t.
    pub eps_t: f64,
    /// Gradient norm before and after clipping.
    pub grad_norm_pre: f64,
    pub grad_norm_post: f64,
    /// Predictive-information lower bound driving the trigger.
    pub i_pred: f64,
    /// Meaning density and conversion efficiency.
    pub md: f64,
    pub mce: f64,
    /// Novel raw bits admitted this step.
    pub delta_s: f64,
    /// Trigger and phase-shift flags.
    pub fired: bool,
    pub phase_shift: bool,
    /// Itemized reward channels, in composition order, then the total.
    pub reward_base: f64,
    pub reward_spikes: f64,
    pub reward_penalty: f64,
    pub reward_dg: f64,
    pub reward_baseline: f64,
    pub reward_md: f64,
    pub reward_mce: f64,
    pub reward_ext: f64,
    pub reward_total: f64,
    /// Probe capability (argmax accuracy on the frozen probe).
    pub capability: f64,
    /// Goal ledger occupancy.
    pub goals_active: u64,
    pub goals_noise: u64,
    /// Toll L1 mass, active clip threshold, hidden-offset norm.
    pub toll_l1: f64,
    pub k_max: f64,
    pub h_norm: f64,
    /// Safety-region flag from the most recent audit.
    pub in_region: bool,
}

impl TraceRow {
    /// Encode as one CSV line (no trailing newline).
    pub fn to_line(&self) -> String {
        let mut out = String::with_capacity(480);
        out.push_str(&self.t.to_string());
        for v in [
            self.c,
            self.e,
            self.n,
            self.s,
            self.f_base,
            self.eps_t,
            self.grad_norm_pre,
            self.grad_norm_post,
            self.i_pred,
            self.md,
            self.mce,
            self.delta_s,
        ] {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push(',');
        out.push_str(fmt_bool(self.fired));
        out.push(',');
        out.push_str(fmt_bool(self.phase_shift));
        for v in [
            self.reward_base,
            self.reward_spikes,
            self.reward_penalty,
            self.reward_dg,
            self.reward_baseline,
            self.reward_md,
            self.reward_mce,
            self.reward_ext,
            self.reward_total,
            self.capability,
        ] {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push(',');
        out.push_str(&self.goals_active.to_string());
        out.push(',');
        out.push_str(&self.goals_noise.to_string());
        for v in [self.toll_l1, self.k_max, self.h_norm] {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push(',');
        out.push_str(fmt_bool(self.in_region));
        out
    }

    /// Parse one data line. `line_no` is 1-based and names the offending
    /// line in errors.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(Error::TraceParse {
                line: line_no,
                message: format!("expected {} fields, got {}", COLUMNS.len(), fields.len()),
            });
        }
        let mut idx = 0usize;
        let mut next = || {
            let f = fields[idx];
            idx += 1;
            f
        };
        let parse_u64 = |s: &str, col: &str| {
            s.parse::<u64>().map_err(|_| Error::TraceParse {
                line: line_no,
                message: format!("column {col}: bad integer {s:?}"),
            })
        };
        let parse_f64 = |s: &str, col: &str| {
            s.parse::<f64>().map_err(|_| Error::TraceParse {
                line: line_no,
                message: format!("column {col}: bad float {s:?}"),
            })
        };
        let parse_bool = |s: &str, col: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::TraceParse {
                line: line_no,
                message: format!("column {col}: bad flag {other:?} (want 0 or 1)"),
            }),
        };

        Ok(Self {
            t: parse_u64(next(), "t")?,
            c: parse_f64(next(), "c")?,
            e: parse_f64(next(), "e")?,
            n: parse_f64(next(), "n")?,
            s: parse_f64(next(), "s")?,
            f_base: parse_f64(next(), "f_base")?,
            eps_t: parse_f64(next(), "eps_t")?,
            grad_norm_pre: parse_f64(next(), "grad_norm_pre")?,
            grad_norm_post: parse_f64(next(), "grad_norm_post")?,
            i_pred: parse_f64(next(), "i_pred")?,
            md: parse_f64(next(), "md")?,
            mce: parse_f64(next(), "mce")?,
            delta_s: parse_f64(next(), "delta_s")?,
            fired: parse_bool(next(), "fired")?,
            phase_shift: parse_bool(next(), "phase_shift")?,
            reward_base: parse_f64(next(), "reward_base")?,
            reward_spikes: parse_f64(next(), "reward_spikes")?,
            reward_penalty: parse_f64(next(), "reward_penalty")?,
            reward_dg: parse_f64(next(), "reward_dg")?,
            reward_baseline: parse_f64(next(), "reward_baseline")?,
            reward_md: parse_f64(next(), "reward_md")?,
            reward_mce: parse_f64(next(), "reward_mce")?,
            reward_ext: parse_f64(next(), "reward_ext")?,
            reward_total: parse_f64(next(), "reward_total")?,
            capability: parse_f64(next(), "capability")?,
            goals_active: parse_u64(next(), "goals_active")?,
            goals_noise: parse_u64(next(), "goals_noise")?,
            toll_l1: parse_f64(next(), "toll_l1")?,
            k_max: parse_f64(next(), "k_max")?,
            h_norm: parse_f64(next(), "h_norm")?,
            in_region: parse_bool(next(), "in_region")?,
        })
    }
}

/// Streaming trace writer: header on create, one line per append, explicit
/// finish to flush.
pub struct TraceWriter {
    out: BufWriter<File>,
    rows: u64,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(header().as_bytes())?;
        out.write_all(b"\n")?;
        Ok(Self { out, rows: 0 })
    }

    pub fn append(&mut self, row: &TraceRow) -> Result<()> {
        self.out.write_all(row.to_line().as_bytes())?;
        self.out.write_all(b"\n")?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows_written(&self) -> u64 {
        self.rows
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        Ok(self.rows)
    }
}

/// Encode a whole trace to a string (header + rows). The byte-for-byte
/// determinism contract is stated on this encoding.
pub fn to_csv_string(rows: &[TraceRow]) -> String {
    let mut out = header();
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_line());
        out.push('\n');
    }
    out
}

/// Parse a whole trace document. Line 1 must be exactly the fixed header.
pub fn parse_csv_str(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header() => {}
        Some(h) => {
            return Err(Error::TraceParse {
                line: 1,
                message: format!("bad header: {h:?}"),
            })
        }
        None => return Err(Error::TraceParse { line: 1, message: "empty file".to_string() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        rows.push(TraceRow::parse_line(line, i + 2)?);
    }
    Ok(rows)
}

/// Read and parse a trace file.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_csv_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_row() -> TraceRow {
        TraceRow {
            t: 17,
            c: 0.5,
            e: 1.0,
            n: 0.0,
            s: 0.25,
            f_base: 1.2676198407023676,
            eps_t: 0.044,
            grad_norm_pre: 2.9000552041659393,
            grad_norm_post: 2.9000552041659393,
            i_pred: 0.1234,
            md: 0.0957544,
            mce: 0.012558,
            delta_s: 56.0,
            fired: true,
            phase_shift: false,
            reward_base: 1.2676198407023676,
            reward_spikes: 0.2,
            reward_penalty: -0.5,
            reward_dg: 0.06,
            reward_baseline: 0.0,
            reward_md: 0.0669695,
            reward_mce: 0.0125527,
            reward_ext: 0.03,
            reward_total: 1.367570,
            capability: 0.75,
            goals_active: 3,
            goals_noise: 2,
            toll_l1: 0.2001,
            k_max: 10.0,
            h_norm: 0.05,
            in_region: true,
        }
    }

    #[test]
    fn header_is_the_fixed_column_order() {
        assert_eq!(
            header(),
            "t,c,e,n,s,f_base,eps_t,grad_norm_pre,grad_norm_post,i_pred,md,mce,delta_s,\
             fired,phase_shift,reward_base,reward_spikes,reward_penalty,reward_dg,\
             reward_baseline,reward_md,reward_mce,reward_ext,reward_total,capability,\
             goals_active,goals_noise,toll_l1,k_max,h_norm,in_region"
        );
        assert_eq!(COLUMNS.len(), 31);
    }

    #[test]
    fn floats_have_nine_significant_digits() {
        assert_eq!(fmt_float(std::f64::consts::PI), "3.14159265e0");
        assert_eq!(fmt_float(-0.000123456789), "-1.23456789e-4");
        assert_eq!(fmt_float(0.0), "0.00000000e0");
        assert_eq!(fmt_float(2.9000552041659393), "2.90005520e0");
    }

    #[test]
    fn row_roundtrip_preserves_nine_digits() {
        let row = sample_row();
        let line = row.to_line();
        assert_eq!(line.split(',').count(), COLUMNS.len());
        let back = TraceRow::parse_line(&line, 2).unwrap();
        assert_eq!(back.t, row.t);
        assert_eq!(back.fired, row.fired);
        assert_eq!(back.phase_shift, row.phase_shift);
        assert_eq!(back.in_region, row.in_region);
        assert_eq!(back.goals_active, row.goals_active);
        assert_relative_eq!(back.f_base, row.f_base, max_relative = 1e-8);
        assert_relative_eq!(back.reward_total, row.reward_total, max_relative = 1e-8);
        assert_relative_eq!(back.mce, row.mce, max_relative = 1e-8);
        // A reparse of the reprint is exact: the encoding is idempotent.
        assert_eq!(back.to_line(), line);
    }

    #[test]
    fn csv_roundtrip_and_empty_trace() {
        let rows = vec![sample_row(), TraceRow { t: 18, ..sample_row() }];
        let text = to_csv_string(&rows);
        let back = parse_csv_str(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].t, 18);
        // Header-only document: a zero-step run.
        let empty = parse_csv_str(&to_csv_string(&[])).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut text = to_csv_string(&[sample_row()]);
        text.push_str("not,a,row\n");
        match parse_csv_str(&text) {
            Err(Error::TraceParse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("fields"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let good = sample_row().to_line();
        let bad = good.replacen("2.90005520e0", "bogus", 1);
        match TraceRow::parse_line(&bad, 7) {
            Err(Error::TraceParse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("bad float"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_is_rejected_at_line_one() {
        match parse_csv_str("time,stuff\n1,2\n") {
            Err(Error::TraceParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn flags_only_accept_zero_or_one() {
        let good = sample_row().to_line();
        // fired is field 13 (0-based); replace it with "2".
        let mut fields: Vec<String> = good.split(',').map(str::to_string).collect();
        fields[13] = "2".to_string();
        let bad = fields.join(",");
        assert!(matches!(
            TraceRow::parse_line(&bad, 4),
            Err(Error::TraceParse { line: 4, .. })
        ));
    }

    #[test]
    fn file_roundtrip_with_streaming_writer() {
        let dir = std::env::temp_dir().join("autotelic-trace-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        let mut w = TraceWriter::create(&path).unwrap();
        for t in 0..5u64 {
            w.append(&TraceRow { t, ..sample_row() }).unwrap();
        }
        assert_eq!(w.finish().unwrap(), 5);
        let rows = read_trace(&path).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[4].t, 4);
        std::fs::remove_file(&path).unwrap();
    }
}
