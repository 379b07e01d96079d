//! Fixed-precision JSON numbers for diff-stable output files.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

fn raw<S: Serializer>(text: String, serializer: S) -> Result<S::Ok, S::Error> {
    let value = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
    value.serialize(serializer)
}

fn fixed<S: Serializer>(x: f64, places: usize, serializer: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom("non-finite number"));
    }
    raw(format!("{x:.places$}"), serializer)
}

pub fn six_places<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    fixed(*x, 6, serializer)
}

pub fn four_places<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    fixed(*x, 4, serializer)
}

pub fn four_places_seq<S: Serializer>(xs: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(serde::ser::Error::custom("non-finite number"));
    }
    raw(format!("[{}]", items.join(",")), serializer)
}

pub fn scientific<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom("non-finite number"));
    }
    raw(format!("{x:.3e}"), serializer)
}
