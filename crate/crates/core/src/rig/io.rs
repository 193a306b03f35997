use std::io::{Read, Write};

use super::{CellResult, RigError};
use crate::resample::SmoteParams;

pub const RESULT_COLUMNS: [&str; 15] = [
    "dataset", "learner", "prefilter", "measure", "repeat", "bin", "value", "baseline", "delta",
    "seconds", "goal", "k", "m", "r", "reason",
];

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io_err(e: impl std::fmt::Display) -> RigError {
    RigError::InvalidPlan(format!("results csv: {e}"))
}

/// Writes results with full-precision floats. Missing values are empty
/// fields.
pub fn write_results_csv<W: Write>(out: W, results: &[CellResult]) -> Result<(), RigError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS).map_err(io_err)?;
    for r in results {
        let p = r.params;
        w.write_record([
            r.dataset.clone(),
            r.learner.name().to_string(),
            r.prefilter.name().to_string(),
            r.measure.name().to_string(),
            r.repeat.to_string(),
            r.bin.to_string(),
            num(r.value),
            num(r.baseline),
            num(r.delta),
            r.seconds.to_string(),
            r.goal.map(|g| g.name().to_string()).unwrap_or_default(),
            p.map(|p| p.k.to_string()).unwrap_or_default(),
            p.map(|p| p.m.to_string()).unwrap_or_default(),
            num(p.map(|p| p.r)),
            r.reason.clone().unwrap_or_default(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Inverse of [`write_results_csv`]. `test_digest` is not persisted and
/// reads back as 0.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<CellResult>, RigError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(io_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| io_err(format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = RESULT_COLUMNS.iter().map(|c| col(c)).collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
        let bad = |what: &str| io_err(format!("line {}: bad {what} `{}`", line + 2, field(RESULT_COLUMNS.iter().position(|c| *c == what).unwrap())));
        let opt_f64 = |i: usize, what: &str| -> Result<Option<f64>, RigError> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(what)),
            }
        };
        let params = match (field(11), field(12), field(13)) {
            ("", "", "") => None,
            (k, m, r) => Some(SmoteParams {
                k: k.parse().map_err(|_| bad("k"))?,
                m: m.parse().map_err(|_| bad("m"))?,
                r: r.parse().map_err(|_| bad("r"))?,
            }),
        };
        out.push(CellResult {
            dataset: field(0).to_string(),
            learner: field(1).parse().map_err(|_| bad("learner"))?,
            prefilter: field(2).parse().map_err(|_| bad("prefilter"))?,
            measure: field(3).parse().map_err(|_| bad("measure"))?,
            repeat: field(4).parse().map_err(|_| bad("repeat"))?,
            bin: field(5).parse().map_err(|_| bad("bin"))?,
            value: opt_f64(6, "value")?,
            baseline: opt_f64(7, "baseline")?,
            delta: opt_f64(8, "delta")?,
            seconds: field(9).parse().map_err(|_| bad("seconds"))?,
            goal: match field(10) {
                "" => None,
                g => Some(g.parse().map_err(|_| bad("goal"))?),
            },
            params,
            reason: Some(field(14).to_string()).filter(|s| !s.is_empty()),
            test_digest: 0,
        });
    }
    Ok(out)
}
