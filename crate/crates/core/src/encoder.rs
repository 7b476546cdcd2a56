//! Sign and double-threshold encoders.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{CodeKind, CodeSet, FeatureSet};
use crate::packed::{PackedBinaryCode, PackedTernaryCode};
use crate::threshold::{ThresholdPair, ThresholdTable};
use crate::trit::Trit;

fn finite(v: f64, i: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::data(format!("non-finite output {v} at position {i}")))
    }
}

/// `+1` iff the output is strictly positive; zero maps to `-1`.
#[inline]
pub fn sign_bit(v: f64) -> bool {
    v > 0.0
}

/// `-1` below `t1`, `0` on the closed band `[t1, t2]`, `+1` above `t2`.
#[inline]
pub fn ternarize(v: f64, pair: &ThresholdPair) -> Trit {
    if v < pair.t1 {
        Trit::Neg
    } else if v > pair.t2 {
        Trit::Pos
    } else {
        Trit::Unknown
    }
}

pub fn encode_binary<T: Copy + Into<f64>>(raw: &[T]) -> Result<PackedBinaryCode> {
    let bits = raw
        .iter()
        .enumerate()
        .map(|(i, &v)| finite(v.into(), i).map(sign_bit))
        .collect::<Result<Vec<bool>>>()?;
    Ok(PackedBinaryCode::from_bits(&bits))
}

pub fn encode_ternary<T: Copy + Into<f64>>(
    raw: &[T],
    table: &ThresholdTable,
) -> Result<PackedTernaryCode> {
    if raw.len() != table.num_bits() {
        return Err(Error::dimension(table.num_bits(), raw.len()));
    }
    let trits = raw
        .iter()
        .zip(table.pairs())
        .enumerate()
        .map(|(i, (&v, pair))| finite(v.into(), i).map(|v| ternarize(v, pair)))
        .collect::<Result<Vec<Trit>>>()?;
    Ok(PackedTernaryCode::pack(&trits))
}

/// Sign-encodes every sample; samples are processed in parallel.
pub fn encode_features_binary(features: &FeatureSet) -> Result<CodeSet> {
    let codes = (0..features.len())
        .into_par_iter()
        .map(|i| encode_binary(features.row(i)))
        .collect::<Result<Vec<_>>>()?;
    if codes.is_empty() {
        return CodeSet::new(CodeKind::Binary, features.bits(), Vec::new(), Vec::new());
    }
    CodeSet::from_binary(&codes, features.labels().to_vec())
}

pub fn encode_features_ternary(features: &FeatureSet, table: &ThresholdTable) -> Result<CodeSet> {
    if features.bits() != table.num_bits() {
        return Err(Error::dimension(table.num_bits(), features.bits()));
    }
    let codes = (0..features.len())
        .into_par_iter()
        .map(|i| encode_ternary(features.row(i), table))
        .collect::<Result<Vec<_>>>()?;
    if codes.is_empty() {
        return CodeSet::new(CodeKind::Ternary, features.bits(), Vec::new(), Vec::new());
    }
    CodeSet::from_ternary(&codes, features.labels().to_vec())
}
