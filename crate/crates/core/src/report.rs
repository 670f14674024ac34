//! JSON output with a fixed float format, so reports are byte-for-byte
//! reproducible.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

/// Compact JSON whose floats are written with 17 significant digits.
#[derive(Default)]
pub struct FixedFloatFormatter(CompactFormatter);

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn write_json<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FixedFloatFormatter::default());
    value.serialize(&mut ser)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("serializing to memory does not fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({"x": 1.0_f64, "y": [0.1_f64]}));
        assert_eq!(s, r#"{"x":1.0000000000000000e0,"y":[1.0000000000000001e-1]}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["y"][0].as_f64(), Some(0.1));
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_json_string(&[f64::INFINITY]), "[null]");
    }
}
