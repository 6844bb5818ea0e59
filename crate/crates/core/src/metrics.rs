//! Perceptual divergences `d(p, q)` and the expected distortion
//! `E[Δ(X, X̂)]`.
//!
//! Conventions: total variation is `1/2 sum |p - q|` (range `[0, 1]`),
//! Kullback-Leibler is in nats, Hellinger is the squared form
//! `1/2 sum (sqrt p - sqrt q)^2`. Divergences that are undefined because of a
//! support mismatch evaluate to `+inf` instead of failing.

use crate::error::{check_dim, CdpError, Result};
use crate::prob::{compose, Alphabet, Channel, MixtureSource, ProbVector};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    TotalVariation,
    KullbackLeibler,
    Hellinger,
    /// Rényi divergence of order `alpha > 0`, `alpha != 1`.
    Renyi { alpha: f64 },
}

impl DivergenceKind {
    pub fn renyi(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
            return Err(CdpError::Argument(format!(
                "Rényi order must be positive and different from 1, got {alpha}"
            )));
        }
        Ok(DivergenceKind::Renyi { alpha })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivergenceKind::TotalVariation => "total_variation",
            DivergenceKind::KullbackLeibler => "kullback_leibler",
            DivergenceKind::Hellinger => "hellinger",
            DivergenceKind::Renyi { .. } => "renyi",
        }
    }
}

/// `1/2 sum |p - q|`; needs only field operations.
pub fn total_variation<T: Scalar>(p: &ProbVector<T>, q: &ProbVector<T>) -> Result<T> {
    check_dim("total_variation", p.len(), q.len())?;
    let s = p
        .mass()
        .iter()
        .zip(q.mass())
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(T::zero(), |acc, d| acc + d);
    Ok(s / (T::one() + T::one()))
}

pub fn divergence<T: Real>(kind: DivergenceKind, p: &ProbVector<T>, q: &ProbVector<T>) -> Result<T> {
    check_dim("divergence", p.len(), q.len())?;
    Ok(divergence_unchecked(kind, p.mass(), q.mass()))
}

/// Divergence on raw mass slices of equal length.
pub(crate) fn divergence_unchecked<T: Real>(kind: DivergenceKind, p: &[T], q: &[T]) -> T {
    let zero = T::zero();
    let half = T::lit(0.5);
    match kind {
        DivergenceKind::TotalVariation => {
            half * p
                .iter()
                .zip(q)
                .fold(zero, |acc, (&a, &b)| acc + num_traits::Float::abs(a - b))
        }
        DivergenceKind::KullbackLeibler => {
            let mut s = zero;
            for (&a, &b) in p.iter().zip(q) {
                if a <= zero {
                    continue;
                }
                if b <= zero {
                    return T::infinity();
                }
                s = s + a * (a / b).ln();
            }
            T::max_of(s, zero)
        }
        DivergenceKind::Hellinger => {
            let s = p.iter().zip(q).fold(zero, |acc, (&a, &b)| {
                let d = a.sqrt() - b.sqrt();
                acc + d * d
            });
            half * s
        }
        DivergenceKind::Renyi { alpha } => {
            let a_t = T::lit(alpha);
            let mut s = zero;
            for (&a, &b) in p.iter().zip(q) {
                if a <= zero {
                    continue;
                }
                if b <= zero {
                    if alpha > 1.0 {
                        return T::infinity();
                    }
                    continue;
                }
                s = s + a.powf(a_t) * b.powf(T::one() - a_t);
            }
            if s <= zero {
                return T::infinity();
            }
            T::max_of(s.ln() / (a_t - T::one()), zero)
        }
    }
}

/// Gradient of `q -> d(p, q)`, with `q` clamped below by `floor` so that
/// support boundaries produce large finite slopes.
pub(crate) fn divergence_gradient<T: Real>(kind: DivergenceKind, p: &[T], q: &[T], floor: T) -> Vec<T> {
    let zero = T::zero();
    match kind {
        DivergenceKind::TotalVariation => p
            .iter()
            .zip(q)
            .map(|(&a, &b)| {
                if b > a {
                    T::lit(0.5)
                } else if b < a {
                    T::lit(-0.5)
                } else {
                    zero
                }
            })
            .collect(),
        DivergenceKind::KullbackLeibler => p
            .iter()
            .zip(q)
            .map(|(&a, &b)| if a <= zero { zero } else { -a / T::max_of(b, floor) })
            .collect(),
        DivergenceKind::Hellinger => p
            .iter()
            .zip(q)
            .map(|(&a, &b)| T::lit(0.5) - T::lit(0.5) * (a / T::max_of(b, floor)).sqrt())
            .collect(),
        DivergenceKind::Renyi { alpha } => {
            let a_t = T::lit(alpha);
            let s = p.iter().zip(q).fold(zero, |acc, (&a, &b)| {
                if a <= zero {
                    acc
                } else {
                    acc + a.powf(a_t) * T::max_of(b, floor).powf(T::one() - a_t)
                }
            });
            let s = T::max_of(s, floor);
            p.iter()
                .zip(q)
                .map(|(&a, &b)| {
                    if a <= zero {
                        zero
                    } else {
                        -a.powf(a_t) * T::max_of(b, floor).powf(-a_t) / s
                    }
                })
                .collect()
        }
    }
}

/// Per-pair cost `Δ(x, x̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix<T> {
    cost: Vec<Vec<T>>,
}

impl<T: Scalar> DistortionMatrix<T> {
    pub fn new(cost: Vec<Vec<T>>) -> Result<Self> {
        let width = cost.first().map(Vec::len).unwrap_or(0);
        if cost.is_empty() || width == 0 {
            return Err(CdpError::Argument("distortion matrix is empty".into()));
        }
        for (x, row) in cost.iter().enumerate() {
            check_dim("distortion matrix row", width, row.len())?;
            for (xh, c) in row.iter().enumerate() {
                if !c.is_finite_value() || *c < T::zero() {
                    return Err(CdpError::Argument(format!(
                        "distortion cost ({x}, {xh}) = {c} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(DistortionMatrix { cost })
    }

    /// `Δ(x, x̂) = [x != x̂]`.
    pub fn hamming(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let cost = (0..n)
            .map(|x| (0..n).map(|xh| if x == xh { T::zero() } else { T::one() }).collect())
            .collect();
        DistortionMatrix { cost }
    }

    /// `Δ(x, x̂) = (x - x̂)^2` on symbol indices.
    pub fn squared_index(source: Alphabet, restored: Alphabet) -> Self {
        let cost = source
            .symbols()
            .map(|x| {
                restored
                    .symbols()
                    .map(|xh| {
                        let d = T::from_count(x.abs_diff(xh));
                        d.clone() * d
                    })
                    .collect()
            })
            .collect();
        DistortionMatrix { cost }
    }

    pub fn source(&self) -> Alphabet {
        Alphabet::new(self.cost.len()).expect("nonempty")
    }

    pub fn restored(&self) -> Alphabet {
        Alphabet::new(self.cost[0].len()).expect("nonempty")
    }

    pub fn cost(&self, x: usize, xh: usize) -> &T {
        &self.cost[x][xh]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.cost
    }
}

/// `sum_{x,y,x̂} p_X(x) p(y|x) p(x̂|y) Δ(x, x̂)`.
pub fn expected_distortion<T: Scalar>(
    src: &MixtureSource<T>,
    degrade: &Channel<T>,
    restore: &Channel<T>,
    delta: &DistortionMatrix<T>,
) -> Result<T> {
    check_dim("expected_distortion degrade input", src.alphabet().size(), degrade.input().size())?;
    check_dim("expected_distortion delta source", src.alphabet().size(), delta.source().size())?;
    check_dim("expected_distortion restore input", degrade.output().size(), restore.input().size())?;
    check_dim("expected_distortion delta restored", restore.output().size(), delta.restored().size())?;
    let end_to_end = compose(degrade, restore)?;
    let marginal = src.marginal();
    let mut total = T::zero();
    for x in src.alphabet().symbols() {
        let px = marginal.get(x);
        if px.is_zero() {
            continue;
        }
        let inner = end_to_end
            .row(x)
            .mass()
            .iter()
            .zip(delta.cost[x].iter())
            .fold(T::zero(), |acc, (p, c)| acc + p.clone() * c.clone());
        total = total + px.clone() * inner;
    }
    Ok(total)
}
