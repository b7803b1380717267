//! JSON and CSV writers with fixed 17-significant-digit float formatting.

use std::io;

use serde::{Serialize, Serializer};
use serde_json::ser::Formatter;

use crate::monitors::MonitorSeries;
use crate::radial_ode::Profile;
use crate::shooting::SweepTable;

/// Formats every float as `{:.16e}`.
#[derive(Debug, Clone, Default)]
pub struct FixedFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"` and `"nan"`.
pub fn serialize_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn serialize_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Pretty JSON with fixed float formatting and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Reads a float written by `serialize_f64`.
pub fn read_f64(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

fn e17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Profile CSV with header `r,u,du,v`.
pub fn profile_csv(profile: &Profile) -> String {
    let mut s = String::from("r,u,du,v\n");
    for nd in &profile.nodes {
        s.push_str(&format!(
            "{},{},{},{}\n",
            e17(nd.r),
            e17(nd.u),
            e17(nd.du),
            e17(nd.v)
        ));
    }
    s
}

/// Sweep CSV with header `alpha,tag,event_radius`.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("alpha,tag,event_radius\n");
    for row in &table.rows {
        let er = row.event_radius.map(e17).unwrap_or_default();
        s.push_str(&format!("{},{},{}\n", e17(row.alpha), row.tag.as_str(), er));
    }
    s
}

pub fn series_csv(series: &MonitorSeries) -> String {
    series.to_csv()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        #[serde(serialize_with = "serialize_f64")]
        b: f64,
        c: Vec<f64>,
    }

    #[test]
    fn floats_have_seventeen_digits_and_inf_is_a_string() {
        let text = to_json(&Sample {
            a: 0.1,
            b: f64::INFINITY,
            c: vec![2.0],
        })
        .unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"inf\""));
        assert!(text.contains("2.0000000000000000e0"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(read_f64(&v["a"]), Some(0.1));
        assert_eq!(read_f64(&v["b"]), Some(f64::INFINITY));
    }
}
