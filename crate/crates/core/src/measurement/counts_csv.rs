//! Counts files: `axis,shots,n_g,n_plus,n_minus`, one row per setting.

use std::io::{Read, Write};

use super::tomography::CountsRecord;
use crate::error::{Error, Result};
use crate::qcore::Axis;

pub const COUNTS_HEADER: [&str; 5] = ["axis", "shots", "n_g", "n_plus", "n_minus"];

/// Reads counts records. Extra columns are ignored; row numbers in errors
/// are 1-based file lines.
pub fn read_counts_csv<R: Read>(reader: R) -> Result<Vec<CountsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::DataFormat(format!("cannot read header: {e}")))?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(COUNTS_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::DataFormat(format!("missing column `{name}`")))?;
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Data { row, message: e.to_string() }
        })?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let axis = Axis::parse(field(0))
            .ok_or_else(|| Error::Data { row, message: format!("unknown axis `{}`", field(0)) })?;
        let mut nums = [0u64; 4];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = field(k + 1).parse().map_err(|_| Error::Data {
                row,
                message: format!("`{}` is not a non-negative integer in column `{}`", field(k + 1), COUNTS_HEADER[k + 1]),
            })?;
        }
        let [shots, n_g, n_plus, n_minus] = nums;
        if shots == 0 {
            return Err(Error::Data { row, message: "zero-shot row".into() });
        }
        let total = n_g.checked_add(n_plus).and_then(|s| s.checked_add(n_minus));
        if total != Some(shots) {
            return Err(Error::Data {
                row,
                message: format!("counts {n_g}+{n_plus}+{n_minus} do not sum to shots {shots}"),
            });
        }
        out.push(CountsRecord { axis, shots, counts: [n_g, n_plus, n_minus], exact: None });
    }
    Ok(out)
}

/// Writes sampled records; exact (zero-shot) records have no integer counts.
pub fn write_counts_csv<W: Write>(writer: W, records: &[CountsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::DataFormat(e.to_string());
    w.write_record(COUNTS_HEADER).map_err(io)?;
    for r in records {
        if r.exact.is_some() {
            return Err(Error::DataFormat("exact records cannot be written as counts".into()));
        }
        w.write_record([
            r.axis.name().to_string(),
            r.shots.to_string(),
            r.counts[0].to_string(),
            r.counts[1].to_string(),
            r.counts[2].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![
            CountsRecord::new(Axis::X, 10, [1, 4, 5]).unwrap(),
            CountsRecord::new(Axis::Z, 3, [0, 3, 0]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &recs).unwrap();
        assert!(buf.starts_with(b"axis,shots,n_g,n_plus,n_minus\n"));
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_counts_csv("axis,shots,n_g,n_minus\nX,1,0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("n_plus"), "{err}");
    }

    #[test]
    fn bad_rows_report_line() {
        let src = "axis,shots,n_g,n_plus,n_minus\nX,10,1,4,5\nY,10,1,4,4\n";
        match read_counts_csv(src.as_bytes()) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let zero = "axis,shots,n_g,n_plus,n_minus\nZ,0,0,0,0\n";
        assert!(matches!(read_counts_csv(zero.as_bytes()), Err(Error::Data { row: 2, .. })));
        let junk = "axis,shots,n_g,n_plus,n_minus\nQ,1,1,0,0\n";
        assert!(read_counts_csv(junk.as_bytes()).is_err());
        let neg = "axis,shots,n_g,n_plus,n_minus\nX,1,-1,1,1\n";
        assert!(read_counts_csv(neg.as_bytes()).is_err());
    }
}
