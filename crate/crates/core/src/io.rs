//! Instance and model files.
//!
//! # MBCS1 binary layout (all integers and floats little-endian)
//!
//! ```text
//! offset  size  field
//! 0       5     magic "MBCS1"
//! 5       8     n   (u64)
//! 13      8     p   (u64)
//! 21      4     flags (u32)
//!                 bit 0      ground truth present
//!                 bit 1      corruption set present
//!                 bit 2      Laplace features are standardized
//!                 bits 8-15  distribution code: 0 unknown, 1 gaussian,
//!                            2 student-t, 3 uniform, 4 laplace, 5 rademacher
//!                 bits 16-31 Student-t degrees of freedom (0 otherwise)
//! 25      8     seed (u64)
//! 33      ...   payload blocks
//! ```
//!
//! Each payload block is a `u64` count `c` followed by `c` f64 values.
//! Blocks, in order: the `p` feature columns (each a block of `n`
//! values), the labels (`n` values, ±1.0), the ground truth (`p` values,
//! if flagged), the corruption indices (`k` values holding exact
//! integers, if flagged).
//!
//! # CSV layout
//!
//! Optional metadata comment lines `# key=value` (keys `seed`,
//! `distribution`, `dof`, `standardize_laplace`, `ground_truth` and
//! `corruptions`, list values separated by `;`), then a header
//! `x0,...,x{p-1},label`, then one row per sample with the label last.
//! Floats are written in shortest round-trip form, so the export is
//! lossless.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::datagen::FeatureDistribution;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::types::{Instance, Model};

pub const MAGIC: &[u8; 5] = b"MBCS1";

const FLAG_GROUND_TRUTH: u32 = 1;
const FLAG_CORRUPTIONS: u32 = 1 << 1;
const FLAG_STANDARDIZED: u32 = 1 << 2;

fn distribution_code(d: Option<FeatureDistribution>) -> (u32, u32) {
    match d {
        None => (0, 0),
        Some(FeatureDistribution::Gaussian) => (1, 0),
        Some(FeatureDistribution::StudentT { dof }) => (2, dof),
        Some(FeatureDistribution::Uniform) => (3, 0),
        Some(FeatureDistribution::Laplace) => (4, 0),
        Some(FeatureDistribution::Rademacher) => (5, 0),
    }
}

fn distribution_from_code(code: u32, dof: u32) -> Result<Option<FeatureDistribution>> {
    Ok(match code {
        0 => None,
        1 => Some(FeatureDistribution::Gaussian),
        2 => Some(FeatureDistribution::StudentT { dof }),
        3 => Some(FeatureDistribution::Uniform),
        4 => Some(FeatureDistribution::Laplace),
        5 => Some(FeatureDistribution::Rademacher),
        other => return Err(Error::Format(format!("unknown distribution code {other}"))),
    })
}

fn write_block<W: Write>(out: &mut W, values: impl ExactSizeIterator<Item = f64>) -> Result<()> {
    out.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(instance: &Instance, mut out: W) -> Result<()> {
    let (code, dof) = distribution_code(instance.distribution());
    let mut flags = (code << 8) | (dof << 16);
    if instance.ground_truth().is_some() {
        flags |= FLAG_GROUND_TRUTH;
    }
    if !instance.corruptions().is_empty() {
        flags |= FLAG_CORRUPTIONS;
    }
    if instance.standardized_laplace() {
        flags |= FLAG_STANDARDIZED;
    }
    out.write_all(MAGIC)?;
    out.write_all(&(instance.n() as u64).to_le_bytes())?;
    out.write_all(&(instance.p() as u64).to_le_bytes())?;
    out.write_all(&flags.to_le_bytes())?;
    out.write_all(&instance.seed().to_le_bytes())?;
    for j in 0..instance.p() {
        write_block(&mut out, instance.features().column(j).iter().copied())?;
    }
    write_block(&mut out, instance.labels().iter().map(|&y| f64::from(y)))?;
    if let Some(gt) = instance.ground_truth() {
        write_block(&mut out, gt.iter().copied())?;
    }
    if !instance.corruptions().is_empty() {
        write_block(&mut out, instance.corruptions().iter().map(|&i| i as f64))?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated MBCS1 file: {e}")))?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn block(&mut self, expected: usize) -> Result<Vec<f64>> {
        let count = self.u64()? as usize;
        if count != expected {
            return Err(Error::Format(format!(
                "block holds {count} values, expected {expected}"
            )));
        }
        (0..count)
            .map(|_| Ok(f64::from_le_bytes(self.bytes()?)))
            .collect()
    }
}

pub fn read_binary<R: Read>(input: R) -> Result<Instance> {
    let mut r = Reader { inner: input };
    if &r.bytes::<5>()? != MAGIC {
        return Err(Error::Format("bad magic, expected MBCS1".into()));
    }
    let n = r.u64()? as usize;
    let p = r.u64()? as usize;
    let flags = u32::from_le_bytes(r.bytes()?);
    let seed = r.u64()?;
    let mut data = vec![0.0; n * p];
    for j in 0..p {
        for (i, v) in r.block(n)?.into_iter().enumerate() {
            data[i * p + j] = v;
        }
    }
    let labels = r
        .block(n)?
        .into_iter()
        .map(|v| match v {
            1.0 => Ok(1),
            -1.0 => Ok(-1),
            other => Err(Error::Format(format!("label {other} is not ±1"))),
        })
        .collect::<Result<Vec<i8>>>()?;
    let ground_truth = if flags & FLAG_GROUND_TRUTH != 0 {
        Some(r.block(p)?)
    } else {
        None
    };
    let corruptions = if flags & FLAG_CORRUPTIONS != 0 {
        let count = r.u64()? as usize;
        (0..count)
            .map(|_| {
                let v = f64::from_le_bytes(r.bytes()?);
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Format(format!("corruption index {v} is not an integer")))
                }
            })
            .collect::<Result<Vec<usize>>>()?
    } else {
        Vec::new()
    };
    let distribution = distribution_from_code((flags >> 8) & 0xFF, flags >> 16)?;
    let features = Matrix::from_row_major(n, p, data)?;
    let instance = Instance::new(features, labels, ground_truth, corruptions, seed)?
        .with_distribution(distribution)
        .with_standardized_laplace(flags & FLAG_STANDARDIZED != 0);
    Ok(instance)
}

fn join(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(";")
}

pub fn write_csv<W: Write>(instance: &Instance, mut out: W) -> Result<()> {
    writeln!(out, "# seed={}", instance.seed())?;
    if let Some(d) = instance.distribution() {
        writeln!(out, "# distribution={}", d.name())?;
        if let FeatureDistribution::StudentT { dof } = d {
            writeln!(out, "# dof={dof}")?;
        }
    }
    if instance.standardized_laplace() {
        writeln!(out, "# standardize_laplace=true")?;
    }
    if let Some(gt) = instance.ground_truth() {
        writeln!(out, "# ground_truth={}", join(gt.iter().map(|v| v.to_string())))?;
    }
    if !instance.corruptions().is_empty() {
        writeln!(
            out,
            "# corruptions={}",
            join(instance.corruptions().iter().map(|v| v.to_string()))
        )?;
    }
    let header: Vec<String> = (0..instance.p()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for i in 0..instance.n() {
        let row: Vec<String> = instance.features().row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{}", row.join(","), instance.labels()[i])?;
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("not a number: '{s}'")))
}

pub fn read_csv<R: Read>(input: R) -> Result<Instance> {
    let mut seed = 0;
    let mut dist_name: Option<String> = None;
    let mut dof = None;
    let mut standardized = false;
    let mut ground_truth = None;
    let mut corruptions = Vec::new();
    let mut p = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| Error::Format(format!("bad seed '{value}'")))?
                }
                "distribution" => dist_name = Some(value.to_string()),
                "dof" => {
                    dof = Some(
                        value
                            .parse()
                            .map_err(|_| Error::Format(format!("bad dof '{value}'")))?,
                    )
                }
                "standardize_laplace" => standardized = value == "true",
                "ground_truth" => {
                    ground_truth = Some(value.split(';').map(parse_f64).collect::<Result<Vec<_>>>()?)
                }
                "corruptions" => {
                    corruptions = value
                        .split(';')
                        .map(|v| {
                            v.trim()
                                .parse()
                                .map_err(|_| Error::Format(format!("bad index '{v}'")))
                        })
                        .collect::<Result<Vec<usize>>>()?
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if p.is_none() {
            if fields.last().map(|f| f.trim()) != Some("label") {
                return Err(Error::Format("CSV header must end with 'label'".into()));
            }
            p = Some(fields.len() - 1);
            continue;
        }
        let width = p.unwrap_or(0) + 1;
        if fields.len() != width {
            return Err(Error::Format(format!(
                "row has {} fields, expected {width}",
                fields.len()
            )));
        }
        for f in &fields[..width - 1] {
            data.push(parse_f64(f)?);
        }
        labels.push(match fields[width - 1].trim() {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(Error::Format(format!("label '{other}' is not ±1"))),
        });
    }
    let p = p.ok_or_else(|| Error::Format("missing CSV header".into()))?;
    let distribution = match dist_name {
        Some(name) => Some(FeatureDistribution::parse(&name, dof)?),
        None => None,
    };
    let features = Matrix::from_row_major(labels.len(), p, data)?;
    Ok(Instance::new(features, labels, ground_truth, corruptions, seed)?
        .with_distribution(distribution)
        .with_standardized_laplace(standardized))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Saves as CSV when the extension is `.csv`, MBCS1 otherwise.
pub fn save_instance(instance: &Instance, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    if is_csv(path) {
        write_csv(instance, &mut buf)?;
    } else {
        write_binary(instance, &mut buf)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let bytes = fs::read(path)?;
    if is_csv(path) {
        read_csv(bytes.as_slice())
    } else {
        read_binary(bytes.as_slice())
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model.to_json()? + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    Model::from_json(&fs::read_to_string(path)?)
}
