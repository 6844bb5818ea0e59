//! Binary classifiers as decision regions, error rates and the Bayes rule.
//!
//! A classifier is a region `R` of the alphabet: symbols inside `R` are
//! labelled class 1, everything else class 2.

use crate::error::{check_dim, CdpError, Result};
use crate::prob::{push_forward, Alphabet, Channel, MixtureSource};
use crate::scalar::Scalar;

/// Indicator of the symbols assigned to class 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecisionRegion {
    members: Vec<bool>,
}

impl DecisionRegion {
    pub fn from_indicator(members: Vec<bool>) -> Result<Self> {
        Alphabet::new(members.len())?;
        Ok(DecisionRegion { members })
    }

    pub fn from_symbols(alphabet: Alphabet, symbols: &[usize]) -> Result<Self> {
        let mut members = vec![false; alphabet.size()];
        for &s in symbols {
            if s >= alphabet.size() {
                return Err(CdpError::Argument(format!(
                    "region symbol {s} is outside an alphabet of size {}",
                    alphabet.size()
                )));
            }
            members[s] = true;
        }
        Ok(DecisionRegion { members })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        DecisionRegion {
            members: vec![false; alphabet.size()],
        }
    }

    pub fn full(alphabet: Alphabet) -> Self {
        DecisionRegion {
            members: vec![true; alphabet.size()],
        }
    }

    /// Region whose membership is the bit pattern of `mask`.
    pub(crate) fn from_mask(alphabet: Alphabet, mask: u64) -> Self {
        DecisionRegion {
            members: alphabet.symbols().map(|x| mask >> x & 1 == 1).collect(),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.members.len()).expect("nonempty by construction")
    }

    pub fn contains(&self, symbol: usize) -> bool {
        self.members[symbol]
    }

    pub fn indicator(&self) -> &[bool] {
        &self.members
    }

    pub fn symbols(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn is_full(&self) -> bool {
        self.members.iter().all(|&m| m)
    }

    /// Both decision regions are non-empty.
    pub fn is_proper(&self) -> bool {
        !self.is_empty() && !self.is_full()
    }
}

/// Strict-positive, strict-negative and tied symbols of `P1 p1 - P2 p2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    pub plus: DecisionRegion,
    pub minus: DecisionRegion,
    pub zero: DecisionRegion,
}

/// `P2 * sum_{x in R} p2(x) + P1 * sum_{x not in R} p1(x)`.
pub fn error_rate<T: Scalar>(src: &MixtureSource<T>, region: &DecisionRegion) -> Result<T> {
    check_dim("error_rate region", src.alphabet().size(), region.alphabet().size())?;
    let mut in_region = T::zero();
    let mut outside = T::zero();
    for x in src.alphabet().symbols() {
        if region.contains(x) {
            in_region = in_region + src.class2().get(x).clone();
        } else {
            outside = outside + src.class1().get(x).clone();
        }
    }
    Ok(src.prior2().clone() * in_region + src.prior1().clone() * outside)
}

/// `{x : P1 p1(x) >= P2 p2(x)}`; ties go to class 1.
pub fn bayes_region<T: Scalar>(src: &MixtureSource<T>) -> DecisionRegion {
    DecisionRegion {
        members: src
            .alphabet()
            .symbols()
            .map(|x| src.weighted1(x) >= src.weighted2(x))
            .collect(),
    }
}

pub fn region_partition<T: Scalar>(src: &MixtureSource<T>) -> RegionPartition {
    let n = src.alphabet().size();
    let tol = T::tie_tol();
    let (mut plus, mut minus, mut zero) = (vec![false; n], vec![false; n], vec![false; n]);
    for x in 0..n {
        let diff = src.weighted1(x) - src.weighted2(x);
        if diff.clone().abs() <= tol {
            zero[x] = true;
        } else if diff > T::zero() {
            plus[x] = true;
        } else {
            minus[x] = true;
        }
    }
    RegionPartition {
        plus: DecisionRegion { members: plus },
        minus: DecisionRegion { members: minus },
        zero: DecisionRegion { members: zero },
    }
}

/// Bayes error `sum_x min(P1 p1(x), P2 p2(x))`.
pub fn bayes_error<T: Scalar>(src: &MixtureSource<T>) -> T {
    src.alphabet()
        .symbols()
        .map(|x| T::min_of(src.weighted1(x), src.weighted2(x)))
        .fold(T::zero(), |acc, m| acc + m)
}

/// Bayes error through the absolute-difference form
/// `1/2 - 1/2 sum_x |P1 p1(x) - P2 p2(x)|`.
pub fn bayes_error_abs_form<T: Scalar>(src: &MixtureSource<T>) -> T {
    let half = T::one() / (T::one() + T::one());
    let spread = src
        .alphabet()
        .symbols()
        .map(|x| (src.weighted1(x) - src.weighted2(x)).abs())
        .fold(T::zero(), |acc, m| acc + m);
    half.clone() - half * spread
}

/// Whether `ch` leaves the Bayes error of `src` unchanged: no output symbol
/// is reachable from both a strictly-class-1 and a strictly-class-2 input.
///
/// Channel entries are compared against exact zero.
pub fn dpi_equality_holds<T: Scalar>(src: &MixtureSource<T>, ch: &Channel<T>) -> Result<bool> {
    check_dim("dpi_equality_holds source vs channel input", ch.input().size(), src.alphabet().size())?;
    let part = region_partition(src);
    let plus = part.plus.symbols();
    let minus = part.minus.symbols();
    for y in ch.output().symbols() {
        let from_plus = plus.iter().any(|&x| !ch.entry(x, y).is_zero());
        let from_minus = minus.iter().any(|&x| !ch.entry(x, y).is_zero());
        if from_plus && from_minus {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bayes error of `src` after passing through `ch`.
pub fn bayes_error_after<T: Scalar>(src: &MixtureSource<T>, ch: &Channel<T>) -> Result<T> {
    Ok(bayes_error(&push_forward(src, ch)?))
}
