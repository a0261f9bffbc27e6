//! Line-delimited dataset files.
//!
//! ```text
//! {"format":"kforr-dataset","version":1,"spec":{"n":3,"k":3,"count_pos":1,...}}
//! {"n":3,"k":3,"bits":"111000111","label":1,"phi":1.0000000000000000e0,"provenance":"constructive"}
//! ```
//!
//! Records are written by hand so the field order is fixed; `phi` carries 17
//! significant digits, which round-trips every f64.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{promise_label, DatagenError, DatasetSpec, LabeledSample, Provenance, Result};
use crate::classify::Label;
use crate::forrelation::EncodedSample;

const FORMAT: &str = "kforr-dataset";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub spec: Option<DatasetSpec>,
    pub samples: Vec<LabeledSample>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    spec: Option<DatasetSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    n: usize,
    k: usize,
    bits: String,
    label: i64,
    phi: f64,
    provenance: String,
}

fn record_line(s: &LabeledSample) -> String {
    format!(
        r#"{{"n":{},"k":{},"bits":"{}","label":{},"phi":{:.16e},"provenance":"{}"}}"#,
        s.sample.n(),
        s.sample.k(),
        s.sample.bit_string(),
        s.label.as_i8(),
        s.phi,
        s.provenance.as_str()
    )
}

pub fn write_dataset_to<W: Write>(dataset: &Dataset, mut w: W) -> Result<()> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        spec: dataset.spec,
    };
    writeln!(
        w,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for s in &dataset.samples {
        writeln!(w, "{}", record_line(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_to(dataset, BufWriter::new(File::create(path)?))
}

fn parse_record(
    line: &str,
    spec: Option<&DatasetSpec>,
) -> std::result::Result<LabeledSample, String> {
    let r: Record = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if let Some(spec) = spec {
        if (r.n, r.k) != (spec.n, spec.k) {
            return Err(format!(
                "record has n = {}, k = {} but header has n = {}, k = {}",
                r.n, r.k, spec.n, spec.k
            ));
        }
    }
    let sample = EncodedSample::parse(r.n, r.k, &r.bits).map_err(|e| e.to_string())?;
    let label = Label::from_i64(r.label)
        .ok_or_else(|| format!("label must be 1 or -1, got {}", r.label))?;
    let provenance = Provenance::parse(&r.provenance)
        .ok_or_else(|| format!("unknown provenance {:?}", r.provenance))?;
    if promise_label(r.phi) != Some(label) {
        return Err(format!("phi {} does not satisfy label {}", r.phi, label));
    }
    Ok(LabeledSample {
        sample,
        label,
        phi: r.phi,
        provenance,
    })
}

pub fn read_dataset_from<R: BufRead>(r: R) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let number = i + 1;
        let parse_err = |message: String| DatagenError::Parse {
            line: number,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            let h: Header =
                serde_json::from_str(&line).map_err(|e| parse_err(format!("bad header: {e}")))?;
            if h.format != FORMAT || h.version != VERSION {
                return Err(parse_err(format!(
                    "unsupported format {} v{}",
                    h.format, h.version
                )));
            }
            dataset.spec = h.spec;
            seen_header = true;
            continue;
        }
        dataset
            .samples
            .push(parse_record(&line, dataset.spec.as_ref()).map_err(parse_err)?);
    }
    Ok(dataset)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::super::{generate_dataset, make_negative_sample, make_positive_sample};
    use super::*;

    fn roundtrip(d: &Dataset) -> Dataset {
        let mut buf = Vec::new();
        write_dataset_to(d, &mut buf).unwrap();
        read_dataset_from(buf.as_slice()).unwrap()
    }

    #[test]
    fn record_layout() {
        let s = make_positive_sample(3, 3, (1, 2, 3)).unwrap();
        assert_eq!(
            record_line(&s),
            r#"{"n":3,"k":3,"bits":"111000111","label":1,"phi":1.0000000000000000e0,"provenance":"constructive"}"#
        );
        let s = make_negative_sample(3, 3, 1, [1, 2, 3]).unwrap();
        assert!(record_line(&s).contains(r#""label":-1,"phi":0.0000000000000000e0"#));
    }

    #[test]
    fn roundtrip_generated() {
        let spec = DatasetSpec {
            n: 4,
            k: 3,
            count_pos: 4,
            count_neg: 6,
            seed: 11,
            max_rejection_tries: 5000,
        };
        let (samples, _) = generate_dataset(&spec).unwrap();
        let d = Dataset {
            spec: Some(spec),
            samples,
        };
        assert_eq!(roundtrip(&d), d);
    }

    #[test]
    fn phi_keeps_all_bits() {
        let mut s = make_negative_sample(3, 3, 2, [1, 2, 3]).unwrap();
        for phi in [0.0078125f64, -1.0 / 3.0 / 100.0, 0.1 / 17.0, -0.0] {
            s.phi = phi;
            let d = Dataset {
                spec: None,
                samples: vec![s.clone()],
            };
            assert_eq!(roundtrip(&d).samples[0].phi.to_bits(), phi.to_bits());
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(read_dataset_from(&b""[..]).unwrap(), Dataset::default());
        assert_eq!(roundtrip(&Dataset::default()), Dataset::default());
    }

    fn err_line(text: &str) -> usize {
        match read_dataset_from(text.as_bytes()) {
            Err(DatagenError::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        let header = r#"{"format":"kforr-dataset","version":1,"spec":null}"#;
        let good =
            r#"{"n":3,"k":3,"bits":"111000111","label":1,"phi":1.0,"provenance":"constructive"}"#;
        let four_ones =
            r#"{"n":4,"k":2,"bits":"11110000","label":-1,"phi":0.0,"provenance":"constructive"}"#;
        assert_eq!(err_line(&format!("{header}\n{good}\n{four_ones}\n")), 3);
        let bad_label = good.replace(r#""label":1"#, r#""label":-1"#);
        assert_eq!(err_line(&format!("{header}\n{bad_label}\n")), 2);
        let bad_prov = good.replace("constructive", "magic");
        assert_eq!(err_line(&format!("{header}\n{bad_prov}\n")), 2);
        assert_eq!(err_line(&format!("{header}\n{{not json\n")), 2);
        assert_eq!(err_line(good), 1);
        let wrong_shape = r#"{"format":"kforr-dataset","version":1,"spec":{"n":4,"k":3,"count_pos":0,"count_neg":0,"seed":0,"max_rejection_tries":0}}"#;
        assert_eq!(err_line(&format!("{wrong_shape}\n{good}\n")), 2);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let d = Dataset {
            spec: None,
            samples: vec![make_positive_sample(5, 7, (2, 3, 5)).unwrap()],
        };
        write_dataset(&d, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), d);
        assert!(matches!(
            read_dataset(dir.path().join("missing")),
            Err(DatagenError::Io(_))
        ));
    }
}
