use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Location, Result};

/// Real-valued training samples.
///
/// On disk this is a CSV file whose header names the input columns `x0..x{n-1}`
/// followed by the target columns `y0..y{m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidConfig("dataset has no rows".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} input rows but {} target rows",
                inputs.len(),
                targets.len()
            )));
        }
        let (n, m) = (inputs[0].len(), targets[0].len());
        if n == 0 || m == 0 {
            return Err(Error::Shape("inputs and targets need at least one column".into()));
        }
        for (i, (x, y)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != n || y.len() != m {
                return Err(Error::Shape(format!("row {i} has the wrong number of columns")));
            }
            if !x.iter().chain(y).all(|v| v.is_finite()) {
                return Err(Error::NonFiniteInput(format!("row {i}")));
            }
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let n = count_prefixed(&header, "x", 0);
        let m = count_prefixed(&header, "y", n);
        if n == 0 || m == 0 || n + m != header.len() {
            return Err(Error::Parse {
                location: Location { line: 1, column: 1 },
                message: format!(
                    "header must be x0..x(n-1) followed by y0..y(m-1), found {:?}",
                    header.iter().collect::<Vec<_>>()
                ),
            });
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let values = record
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    field.parse::<f64>().map_err(|e| Error::Parse {
                        location: Location { line, column: c + 1 },
                        message: format!("field {:?}: {e}", header.get(c).unwrap_or("?")),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != n + m {
                return Err(Error::Parse {
                    location: Location { line, column: 1 },
                    message: format!("expected {} fields, found {}", n + m, values.len()),
                });
            }
            inputs.push(values[..n].to_vec());
            targets.push(values[n..].to_vec());
        }
        Dataset::new(inputs, targets)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.input_dim())
            .map(|i| format!("x{i}"))
            .chain((0..self.output_dim()).map(|j| format!("y{j}")))
            .collect();
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            w.write_record(x.iter().chain(y).map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of consecutive columns named `{prefix}0, {prefix}1, ...` starting at `from`.
fn count_prefixed(header: &csv::StringRecord, prefix: &str, from: usize) -> usize {
    header
        .iter()
        .skip(from)
        .enumerate()
        .take_while(|(i, name)| *name == format!("{prefix}{i}"))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let data = Dataset::new(
            vec![vec![0.1, -2.0], vec![1e-300, 3.5]],
            vec![vec![1.0 / 3.0], vec![-0.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x0,x1,y0\n"));
        let back = Dataset::from_csv_reader(&buf[..]).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "a,b\n1,2\n";
        assert!(matches!(Dataset::from_csv_reader(text.as_bytes()), Err(Error::Parse { .. })));
        let text = "x0,x2,y0\n1,2,3\n";
        assert!(Dataset::from_csv_reader(text.as_bytes()).is_err());
    }

    #[test]
    fn bad_field_reports_line() {
        let text = "x0,y0\n1,2\n3,oops\n";
        match Dataset::from_csv_reader(text.as_bytes()) {
            Err(Error::Parse { location, .. }) => {
                assert_eq!(location.line, 3);
                assert_eq!(location.column, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_rules() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![vec![1.0]]).is_err());
    }
}
