//! Line-oriented certificate files.
//!
//! ```text
//! format pepcert/1
//! N 5
//! alpha 1.6...
//! r 0.04...
//! delta 1.1e-16
//! d:
//! 0.17...
//! ...
//! a:
//! ...
//! ```
//!
//! Numbers are written with the shortest decimal that parses back to the same
//! `f64`, so a render/parse round trip is bit-exact. Only `d` is required; the
//! derived blocks `a`, `b`, `c`, `eps` are informational.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::recursion::FullCertificate;

pub const FORMAT_TAG: &str = "pepcert/1";

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("block `{name}` has {got} values, expected {expected} for N = {n}")]
    Length {
        name: String,
        n: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateFile {
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
    pub delta: f64,
    pub d: Vec<f64>,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

impl CertificateFile {
    pub fn from_certificate(cert: &FullCertificate) -> Self {
        Self {
            n: cert.n(),
            alpha: cert.params.alpha,
            r: cert.params.r,
            delta: cert.delta(),
            d: cert.d.clone(),
            a: Some(cert.a.clone()),
            b: Some(cert.b.clone()),
            c: Some(cert.c.clone()),
            eps: Some(cert.eps.clone()),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format {FORMAT_TAG}").unwrap();
        writeln!(out, "N {}", self.n).unwrap();
        writeln!(out, "alpha {}", num(self.alpha)).unwrap();
        writeln!(out, "r {}", num(self.r)).unwrap();
        writeln!(out, "delta {}", num(self.delta)).unwrap();
        let blocks = [
            ("d", Some(&self.d)),
            ("a", self.a.as_ref()),
            ("b", self.b.as_ref()),
            ("c", self.c.as_ref()),
            ("eps", self.eps.as_ref()),
        ];
        for (name, values) in blocks {
            if let Some(values) = values {
                writeln!(out, "{name}:").unwrap();
                for &v in values {
                    writeln!(out, "{}", num(v)).unwrap();
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut format = None;
        let mut n = None;
        let mut alpha = None;
        let mut r = None;
        let mut delta = None;
        let mut blocks: Vec<(String, usize, Vec<f64>)> = Vec::new();

        let float = |s: &str, line: usize| {
            s.parse::<f64>().map_err(|_| FileError::Syntax {
                line,
                msg: format!("`{s}` is not a number"),
            })
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(name) = t.strip_suffix(':') {
                if !matches!(name, "d" | "a" | "b" | "c" | "eps") {
                    return Err(FileError::Syntax {
                        line,
                        msg: format!("unknown block `{name}`"),
                    });
                }
                if blocks.iter().any(|(b, _, _)| b == name) {
                    return Err(FileError::Syntax {
                        line,
                        msg: format!("duplicate block `{name}`"),
                    });
                }
                blocks.push((name.to_string(), line, Vec::new()));
                continue;
            }
            if let Some((_, _, values)) = blocks.last_mut() {
                values.push(float(t, line)?);
                continue;
            }
            let (key, value) = t.split_once(char::is_whitespace).ok_or_else(|| FileError::Syntax {
                line,
                msg: format!("expected `key value`, got `{t}`"),
            })?;
            let value = value.trim();
            match key {
                "format" => format = Some(value.to_string()),
                "N" => {
                    n = Some(value.parse::<usize>().map_err(|_| FileError::Syntax {
                        line,
                        msg: format!("`{value}` is not a step count"),
                    })?)
                }
                "alpha" => alpha = Some(float(value, line)?),
                "r" => r = Some(float(value, line)?),
                "delta" => delta = Some(float(value, line)?),
                other => {
                    return Err(FileError::Syntax {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        match format.as_deref() {
            Some(FORMAT_TAG) => {}
            Some(other) => {
                return Err(FileError::Syntax {
                    line: 1,
                    msg: format!("unsupported format `{other}`"),
                })
            }
            None => return Err(FileError::Missing("format")),
        }
        let n = n.ok_or(FileError::Missing("N"))?;
        if n < 3 {
            return Err(FileError::Syntax {
                line: 2,
                msg: format!("N = {n} is below 3"),
            });
        }

        let mut take = |name: &str, expected: usize| -> Result<Option<Vec<f64>>, FileError> {
            match blocks.iter().position(|(b, _, _)| b == name) {
                None => Ok(None),
                Some(i) => {
                    let (name, _, values) = blocks.swap_remove(i);
                    if values.len() != expected {
                        return Err(FileError::Length {
                            name,
                            n,
                            expected,
                            got: values.len(),
                        });
                    }
                    Ok(Some(values))
                }
            }
        };
        let d = take("d", n - 1)?.ok_or(FileError::Missing("d"))?;
        let a = take("a", n)?;
        let b = take("b", n - 1)?;
        let c = take("c", n + 1)?;
        let eps = take("eps", n + 1)?;

        Ok(Self {
            n,
            alpha: alpha.ok_or(FileError::Missing("alpha"))?,
            r: r.ok_or(FileError::Missing("r"))?,
            delta: delta.ok_or(FileError::Missing("delta"))?,
            d,
            a,
            b,
            c,
            eps,
        })
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        std::fs::write(path, self.render()).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Bitwise equality of every numeric field.
    pub fn bit_identical(&self, other: &Self) -> bool {
        fn same(x: &[f64], y: &[f64]) -> bool {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits())
        }
        fn same_opt(x: &Option<Vec<f64>>, y: &Option<Vec<f64>>) -> bool {
            match (x, y) {
                (Some(x), Some(y)) => same(x, y),
                (None, None) => true,
                _ => false,
            }
        }
        self.n == other.n
            && same(&[self.alpha, self.r, self.delta], &[other.alpha, other.r, other.delta])
            && same(&self.d, &other.d)
            && same_opt(&self.a, &other.a)
            && same_opt(&self.b, &other.b)
            && same_opt(&self.c, &other.c)
            && same_opt(&self.eps, &other.eps)
    }
}

/// Default file name for the certificate of `n` steps.
pub fn certificate_name(n: usize) -> String {
    format!("cert_{n:05}.txt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CertificateFile {
        CertificateFile {
            n: 3,
            alpha: 1.5,
            r: 0.125,
            delta: 0.0,
            d: vec![0.1, 0.2],
            a: None,
            b: Some(vec![1e-300, -0.0]),
            c: None,
            eps: None,
        }
    }

    #[test]
    fn render_layout() {
        let text = sample().render();
        assert_eq!(
            text,
            "format pepcert/1\nN 3\nalpha 1.5\nr 0.125\ndelta 0.0\nd:\n0.1\n0.2\nb:\n1e-300\n-0.0\n"
        );
        assert!(CertificateFile::parse(&text).unwrap().bit_identical(&sample()));
    }

    #[test]
    fn parse_errors() {
        let good = sample().render();
        assert!(matches!(
            CertificateFile::parse(&good.replace("pepcert/1", "pepcert/9")),
            Err(FileError::Syntax { .. })
        ));
        assert!(matches!(
            CertificateFile::parse(&good.replace("r 0.125\n", "")),
            Err(FileError::Missing("r"))
        ));
        assert!(matches!(
            CertificateFile::parse(&good.replace("0.2\n", "")),
            Err(FileError::Length { .. })
        ));
        assert!(matches!(
            CertificateFile::parse(&good.replace("0.2\n", "zero\n")),
            Err(FileError::Syntax { line: 8, .. })
        ));
        assert!(matches!(
            CertificateFile::parse(&good.replace("d:\n0.1\n0.2\n", "")),
            Err(FileError::Missing("d"))
        ));
        assert!(CertificateFile::parse(&format!("{good}q:\n1.0\n")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            n in 3usize..12,
            seed in prop::collection::vec(any::<f64>(), 64),
            alpha in any::<f64>(),
            r in any::<f64>(),
        ) {
            let pick = |len: usize, off: usize| (0..len).map(|i| seed[(i + off) % seed.len()]).collect::<Vec<_>>();
            let file = CertificateFile {
                n,
                alpha,
                r,
                delta: seed[0],
                d: pick(n - 1, 1),
                a: Some(pick(n, 2)),
                b: Some(pick(n - 1, 3)),
                c: Some(pick(n + 1, 4)),
                eps: Some(pick(n + 1, 5)),
            };
            let back = CertificateFile::parse(&file.render()).unwrap();
            prop_assert!(back.bit_identical(&file));
        }
    }
}
