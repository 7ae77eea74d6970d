//! Machine-readable check outcomes shared by the library and the CLI.

use serde::{Deserialize, Serialize};

/// One verified inequality or identity: `lhs` against `rhs` with the
/// measured slack (`rhs - lhs` for one-sided checks, tolerance minus
/// deviation for identities).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    /// One-sided check `lhs <= rhs + tol`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs + tol,
        }
    }

    /// Identity check `|lhs - rhs| < tol`; slack is the remaining margin.
    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let dev = (lhs - rhs).abs();
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack: tol - dev,
            pass: dev < tol,
        }
    }

    pub fn bool(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            lhs: if pass { 1.0 } else { 0.0 },
            rhs: 1.0,
            slack: 0.0,
            pass,
        }
    }
}

/// Serializes any value to JSON with every float printed at 17 significant
/// digits, so records diff exactly across runs.
pub fn to_json_17<T: Serialize>(value: &T) -> serde_json::Result<String> {
    struct SigDigits17;
    impl serde_json::ser::Formatter for SigDigits17 {
        fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
        where
            W: ?Sized + std::io::Write,
        {
            write!(writer, "{value:.16e}")
        }

        fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
        where
            W: ?Sized + std::io::Write,
        {
            write!(writer, "{value:.16e}")
        }
    }

    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}
