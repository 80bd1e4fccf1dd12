//! Big integers and rationals as decimal strings in JSON.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serializer};

fn parse_int<E: serde::de::Error>(s: &str) -> Result<BigInt, E> {
    s.parse().map_err(|_| E::custom(format!("invalid integer `{s}`")))
}

fn parse_ratio<E: serde::de::Error>(s: &str) -> Result<BigRational, E> {
    super::frequency::parse_ratio(s)
        .or_else(|| (s.trim() == "0").then(|| BigRational::from_integer(0.into())))
        .ok_or_else(|| E::custom(format!("invalid rational `{s}`")))
}

pub mod int {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        parse_int(&String::deserialize(d)?)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_int(s))
            .collect()
    }
}

pub mod ratio {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        parse_ratio(&String::deserialize(d)?)
    }
}

pub mod ratio_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_ratio(s))
            .collect()
    }
}
