//! Canonical JSON: object keys sorted, no insignificant whitespace. Values
//! pass through `serde_json::Value`, whose maps are ordered.

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn to_canonical_value<T: Serialize>(v: &T) -> serde_json::Result<serde_json::Value> {
    serde_json::to_value(v)
}

pub fn canonical_bytes<T: Serialize>(v: &T) -> serde_json::Result<Vec<u8>> {
    serde_json::to_vec(&to_canonical_value(v)?)
}

pub fn canonical_string<T: Serialize>(v: &T) -> serde_json::Result<String> {
    serde_json::to_string(&to_canonical_value(v)?)
}

/// Pretty form of the canonical value, for files meant to be read.
pub fn canonical_pretty<T: Serialize>(v: &T) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&to_canonical_value(v)?)
}

pub fn from_bytes<T: DeserializeOwned>(bytes: &[u8]) -> serde_json::Result<T> {
    serde_json::from_slice(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[derive(Serialize)]
    struct Unordered {
        zeta: u8,
        alpha: u8,
        nested: HashMap<String, i64>,
    }

    #[test]
    fn keys_are_sorted() {
        let mut nested = HashMap::new();
        for (i, k) in ["q", "b", "x", "a"].iter().enumerate() {
            nested.insert(k.to_string(), i as i64);
        }
        let s = canonical_string(&Unordered {
            zeta: 1,
            alpha: 2,
            nested,
        })
        .unwrap();
        assert_eq!(s, r#"{"alpha":2,"nested":{"a":3,"b":1,"q":0,"x":2},"zeta":1}"#);
    }

    #[test]
    fn large_integers_stay_exact() {
        let v = vec![i64::MAX, i64::MIN];
        let bytes = canonical_bytes(&v).unwrap();
        assert_eq!(from_bytes::<Vec<i64>>(&bytes).unwrap(), v);
    }
}
