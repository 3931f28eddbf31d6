//! Serde helpers for JSON reports: non-finite floats become the strings
//! `"inf"` and `"-inf"`, and `NaN` is refused.

use serde::ser::Error as _;
use serde::Serializer;

pub fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        Err(S::Error::custom("NaN in report"))
    }
}
