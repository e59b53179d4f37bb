//! Plain-text import/export for joints and full instances.
//!
//! Joint files: header `vubjoint,v1,<nx>,<ny>` then nx comma-separated rows.
//! Instance files: header `vubinst,v1,<nx>,<ny>,<nz>` then the joint rows,
//! encoder rows (nx lines of nz values), classifier rows (nz lines of ny
//! values) and one prior line. Floats are written with 17 significant digits
//! so `f64` round-trips exactly. Loaded channels keep exact zeros.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::{DiscreteChannel, DiscreteInstance, DiscreteJoint, DiscretePrior};

pub const JOINT_MAGIC: &str = "vubjoint";
pub const INSTANCE_MAGIC: &str = "vubinst";

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid float {s:?}")))
}

fn parse_row(line_text: &str, line: usize, expected: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line_text.split(',').collect();
    if fields.len() != expected {
        return Err(Error::parse(
            line,
            format!("expected {expected} fields, got {}", fields.len()),
        ));
    }
    fields.iter().map(|f| parse_float(f, line)).collect()
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines(),
            line: 0,
        }
    }

    fn next_required(&mut self) -> Result<(&'a str, usize)> {
        self.line += 1;
        match self.iter.next() {
            Some(l) => Ok((l, self.line)),
            None => Err(Error::parse(self.line, "unexpected end of file")),
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        loop {
            self.line += 1;
            match self.iter.next() {
                None => return Ok(()),
                Some(l) if l.trim().is_empty() => continue,
                Some(_) => return Err(Error::parse(self.line, "trailing content")),
            }
        }
    }
}

fn parse_header(line_text: &str, magic: &str, n_dims: usize) -> Result<Vec<usize>> {
    let fields: Vec<&str> = line_text.split(',').collect();
    if fields.len() != 2 + n_dims || fields[0] != magic || fields[1] != "v1" {
        return Err(Error::parse(
            1,
            format!("expected header {magic},v1,<{n_dims} sizes>"),
        ));
    }
    fields[2..]
        .iter()
        .map(|f| {
            f.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(1, format!("invalid size {f:?}")))
        })
        .collect()
}

pub fn joint_to_string(joint: &DiscreteJoint<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{JOINT_MAGIC},v1,{},{}", joint.nx(), joint.ny());
    for x in 0..joint.nx() {
        let row: Vec<String> = (0..joint.ny())
            .map(|y| format_float(joint.prob(x, y)))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn joint_from_string(text: &str) -> Result<DiscreteJoint<f64>> {
    let mut lines = Lines::new(text);
    let (header, _) = lines.next_required()?;
    let sizes = parse_header(header, JOINT_MAGIC, 2)?;
    let (nx, ny) = (sizes[0], sizes[1]);
    let mut rows = Vec::with_capacity(nx);
    for _ in 0..nx {
        let (l, n) = lines.next_required()?;
        rows.push(parse_row(l, n, ny)?);
    }
    lines.expect_end()?;
    DiscreteJoint::from_rows(&rows)
}

pub fn save_joint(joint: &DiscreteJoint<f64>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, joint_to_string(joint))?;
    Ok(())
}

pub fn load_joint(path: impl AsRef<Path>) -> Result<DiscreteJoint<f64>> {
    joint_from_string(&std::fs::read_to_string(path)?)
}

pub fn instance_to_string(inst: &DiscreteInstance<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{INSTANCE_MAGIC},v1,{},{},{}",
        inst.nx(),
        inst.ny(),
        inst.nz()
    );
    let push_row = |out: &mut String, row: Vec<f64>| {
        let cells: Vec<String> = row.into_iter().map(format_float).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    };
    for x in 0..inst.nx() {
        push_row(&mut out, (0..inst.ny()).map(|y| inst.joint.prob(x, y)).collect());
    }
    for x in 0..inst.nx() {
        push_row(&mut out, inst.encoder.row(x).to_vec());
    }
    for z in 0..inst.nz() {
        push_row(&mut out, inst.classifier.row(z).to_vec());
    }
    push_row(&mut out, inst.prior.probs().to_vec());
    out
}

pub fn instance_from_string(text: &str) -> Result<DiscreteInstance<f64>> {
    let mut lines = Lines::new(text);
    let (header, _) = lines.next_required()?;
    let sizes = parse_header(header, INSTANCE_MAGIC, 3)?;
    let (nx, ny, nz) = (sizes[0], sizes[1], sizes[2]);
    let mut read_rows = |count: usize, width: usize| -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, n) = lines.next_required()?;
            rows.push(parse_row(l, n, width)?);
        }
        Ok(rows)
    };
    let joint = DiscreteJoint::from_rows(&read_rows(nx, ny)?)?;
    let encoder = DiscreteChannel::new_exact(&read_rows(nx, nz)?)?;
    let classifier = DiscreteChannel::new_exact(&read_rows(nz, ny)?)?;
    let (prior_line, n) = lines.next_required()?;
    let prior = DiscretePrior::new(parse_row(prior_line, n, nz)?)?;
    lines.expect_end()?;
    DiscreteInstance::new(joint, encoder, classifier, prior)
}

pub fn save_instance(inst: &DiscreteInstance<f64>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_string(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<DiscreteInstance<f64>> {
    instance_from_string(&std::fs::read_to_string(path)?)
}
