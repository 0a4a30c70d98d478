use std::io::{BufRead, Write};

use super::HarnessError;

pub const CSV_HEADER: &str = "t,error,avg_error_so_far,phase,side_length,oracle_called,matched_dim";

/// One row of the per-query log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    /// 1-based query index.
    pub t: u64,
    /// `|z^t - w* . q^t|`
    pub error: f64,
    pub avg_error_so_far: f64,
    /// Phase in which the answer was given.
    pub phase: u32,
    /// Side length of the box that produced the answer.
    pub side_length: f64,
    pub oracle_called: bool,
    /// Matched basis direction, `-1` when the angle gate rejected the query.
    pub matched_dim: i64,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

fn float(x: f64) -> String {
    // 17 significant digits round-trip every f64.
    format!("{x:.16e}")
}

pub fn write_record<W: Write>(out: &mut W, r: &RunRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        r.t,
        float(r.error),
        float(r.avg_error_so_far),
        r.phase,
        float(r.side_length),
        u8::from(r.oracle_called),
        r.matched_dim
    )
}

/// Streams records to a writer, header first.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvSink { out })
    }

    pub fn push(&mut self, r: &RunRecord) -> std::io::Result<()> {
        write_record(&mut self.out, r)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Parses a CSV produced by [`CsvSink`].
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<RunRecord>, HarnessError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header != CSV_HEADER {
        return Err(HarnessError::Parse { line: 1, message: format!("unexpected header `{header}`") });
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let bad = |what: &str| HarnessError::Parse { line: line_no, message: format!("bad {what}") };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("field count"));
        }
        out.push(RunRecord {
            t: f[0].parse().map_err(|_| bad("t"))?,
            error: f[1].parse().map_err(|_| bad("error"))?,
            avg_error_so_far: f[2].parse().map_err(|_| bad("avg_error_so_far"))?,
            phase: f[3].parse().map_err(|_| bad("phase"))?,
            side_length: f[4].parse().map_err(|_| bad("side_length"))?,
            oracle_called: match f[5] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("oracle_called")),
            },
            matched_dim: f[6].parse().map_err(|_| bad("matched_dim"))?,
        });
    }
    Ok(out)
}

/// Recomputes the prefix means of the error column and returns the first
/// row (1-based `t`) whose stored average disagrees beyond `rel_tol`.
pub fn check_prefix_means(records: &[RunRecord], rel_tol: f64) -> Option<u64> {
    let mut sum = KahanSum::default();
    for (i, r) in records.iter().enumerate() {
        sum.add(r.error);
        let mean = sum.value() / (i + 1) as f64;
        if (mean - r.avg_error_so_far).abs() > rel_tol * mean.abs().max(1e-300) {
            return Some(r.t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kahan_beats_naive_summation() {
        let mut k = KahanSum::default();
        let mut naive = 0.0;
        for _ in 0..1_000_000 {
            k.add(0.1);
            naive += 0.1;
        }
        assert!((k.value() - 100_000.0).abs() < (naive - 100_000.0f64).abs());
        assert!((k.value() - 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn header_is_checked() {
        let text = "t,error\n1,0\n";
        assert!(matches!(read_records(text.as_bytes()), Err(HarnessError::Parse { line: 1, .. })));
    }

    #[test]
    fn row_format() {
        let mut buf = Vec::new();
        let r = RunRecord {
            t: 3,
            error: 0.1,
            avg_error_so_far: 1.0 / 3.0,
            phase: 2,
            side_length: 2.25,
            oracle_called: true,
            matched_dim: -1,
        };
        write_record(&mut buf, &r).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "3,1.0000000000000001e-1,3.3333333333333331e-1,2,2.2500000000000000e0,1,-1\n"
        );
    }

    proptest! {
        #[test]
        fn csv_round_trips(
            rows in proptest::collection::vec(
                (0.0f64..1e6, 0u32..40, any::<bool>(), -1i64..8),
                1..20,
            )
        ) {
            let mut sink = CsvSink::new(Vec::new()).unwrap();
            let mut sum = KahanSum::default();
            let mut written = Vec::new();
            for (i, (e, phase, called, dim)) in rows.into_iter().enumerate() {
                sum.add(e);
                let r = RunRecord {
                    t: i as u64 + 1,
                    error: e,
                    avg_error_so_far: sum.value() / (i + 1) as f64,
                    phase,
                    side_length: 0.75f64.powi(phase as i32),
                    oracle_called: called,
                    matched_dim: dim,
                };
                sink.push(&r).unwrap();
                written.push(r);
            }
            let bytes = sink.finish().unwrap();
            let back = read_records(bytes.as_slice()).unwrap();
            prop_assert_eq!(&back, &written);
        }
    }
}
