//! Machine-readable verification reports.
//!
//! Reports serialize to compact JSON with a fixed field order. Every float is
//! written in scientific notation with 17 significant digits so that repeated
//! runs produce byte-identical output.

use std::collections::BTreeMap;
use std::io;

use serde::ser::Serialize;
use serde::Serialize as DeriveSerialize;
use serde_json::Value;

/// Report schema identifier.
pub const SCHEMA_VERSION: &str = "v1";

/// Library version embedded in every report.
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Multiplier on the standard error in the pass rule.
pub const K_SIGMA: f64 = 4.0;

/// Default tolerance for quadrature comparisons.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Default tolerance floor for Monte Carlo comparisons.
pub const MC_TOL: f64 = 1e-2;

/// Default tolerance for exact (enumerated) comparisons.
pub const EXACT_TOL: f64 = 1e-14;

/// Significance level for distributional tests.
pub const TEST_LEVEL: f64 = 0.01;

/// LHS/RHS comparison record. `pass` holds exactly when
/// `abs_error <= max(tolerance, K_SIGMA * std_error)`.
#[derive(Clone, Debug, DeriveSerialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub check_name: String,
    pub parameters: BTreeMap<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub std_error: Option<f64>,
    pub tolerance: f64,
    pub n_samples: Option<usize>,
    pub seed: u64,
    pub pass: bool,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn new(check_name: impl Into<String>, seed: u64) -> Self {
        VerificationReport {
            schema: SCHEMA_VERSION,
            version: LIBRARY_VERSION,
            check_name: check_name.into(),
            parameters: BTreeMap::new(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_error: f64::NAN,
            std_error: None,
            tolerance: 0.0,
            n_samples: None,
            seed,
            pass: false,
            warnings: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), to_value(value));
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_string(), to_value(value));
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Fills the comparison fields and evaluates the pass rule.
    pub fn finish(mut self, lhs: f64, rhs: f64, std_error: Option<f64>, tolerance: f64, n_samples: Option<usize>) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.abs_error = (lhs - rhs).abs();
        self.std_error = std_error;
        self.tolerance = tolerance;
        self.n_samples = n_samples;
        let bound = match std_error {
            Some(se) => tolerance.max(K_SIGMA * se),
            None => tolerance,
        };
        self.pass = self.abs_error <= bound;
        self
    }

    /// Serializes to the canonical JSON form (one line, no trailing newline).
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        write_canonical_json(&mut buf, self).expect("serializing into memory cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// JSON formatter that prints floats with 17 significant digits.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Writes any serializable value with the canonical float format.
pub fn write_canonical_json<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FixedDigits);
    value.serialize(&mut ser)
}
