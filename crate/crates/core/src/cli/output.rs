use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::diagnostics::EnsembleSummary;

/// A float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats always carry 17 significant digits.
struct SignificantDigits<'a>(PrettyFormatter<'a>);

impl Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with a trailing newline. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Column order of the trajectory table, shared by every experiment.
pub fn trajectory_header(adagrad: bool) -> &'static str {
    if adagrad {
        "n,mean_g,q10_g,q50_g,q90_g,mean_grad_sq,mean_dist_J,mean_S"
    } else {
        "n,mean_g,q10_g,q50_g,q90_g,mean_grad_sq,mean_dist_J,mean_v_sq"
    }
}

/// The trajectory table: one row per recorded step, LF line endings.
/// Without a summary (every run diverged) only the header is written.
pub fn trajectory_csv(summary: Option<&EnsembleSummary>, adagrad: bool) -> String {
    let mut out = String::from(trajectory_header(adagrad));
    out.push('\n');
    let Some(s) = summary else {
        return out;
    };
    let last = if adagrad { s.s.as_ref() } else { s.v_sq.as_ref() };
    for k in 0..s.n.len() {
        let cols = [
            s.g.mean[k],
            s.g.q10[k],
            s.g.q50[k],
            s.g.q90[k],
            s.grad_sq.mean[k],
            s.dist_j.mean[k],
            last.map_or(f64::NAN, |c| c.mean[k]),
        ];
        out.push_str(&s.n[k].to_string());
        for c in cols {
            out.push(',');
            out.push_str(&format_f64(c));
        }
        out.push('\n');
    }
    out
}
