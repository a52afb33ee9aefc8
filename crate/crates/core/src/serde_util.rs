//! Serialization helpers: big integers travel as decimal strings and
//! rationals as `[numerator, denominator]` string pairs.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::ser::SerializeSeq;
use serde::Serializer;

pub fn big<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn big_signed<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn big_vec<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

pub fn rational<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&v.numer().to_string())?;
    seq.serialize_element(&v.denom().to_string())?;
    seq.end()
}
