//! Finite-alphabet probability objects and the `X -> Y -> X̂` pipeline.
//!
//! Symbols are dense indices `0..size`. Every constructor validates its
//! input: entries must be nonnegative and finite, and masses must sum to one
//! within [`Scalar::normalization_tol`]. Sums that drift by no more than
//! [`Scalar::renormalization_limit`] are rescaled; anything further off is
//! rejected as malformed rather than silently repaired.

use std::ops::Range;

use crate::error::{check_dim, CdpError, Result};
use crate::scalar::Scalar;

/// A finite symbol set `{0, .., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(CdpError::Argument("alphabet must have at least one symbol".into()));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn symbols(self) -> Range<usize> {
        0..self.0
    }
}

/// Checks a lambda weight for convex combinations.
pub(crate) fn check_weight<T: Scalar>(lambda: &T) -> Result<()> {
    if *lambda < T::zero() || *lambda > T::one() || !lambda.is_finite_value() {
        return Err(CdpError::Argument(format!("blend weight {lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// A probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<T> {
    mass: Vec<T>,
}

impl<T: Scalar> ProbVector<T> {
    pub fn new(mass: Vec<T>) -> Result<Self> {
        if mass.is_empty() {
            return Err(CdpError::InvalidDistribution("empty mass vector".into()));
        }
        for (i, m) in mass.iter().enumerate() {
            if !m.is_finite_value() {
                return Err(CdpError::InvalidDistribution(format!("entry {i} is not finite")));
            }
            if *m < T::zero() {
                return Err(CdpError::InvalidDistribution(format!("entry {i} is negative ({m})")));
            }
        }
        let total = mass.iter().cloned().fold(T::zero(), |acc, m| acc + m);
        let drift = (total.clone() - T::one()).abs();
        if drift <= T::normalization_tol() {
            Ok(ProbVector { mass })
        } else if drift <= T::renormalization_limit() {
            let mass = mass.into_iter().map(|m| m / total.clone()).collect();
            Ok(ProbVector { mass })
        } else {
            Err(CdpError::InvalidDistribution(format!("masses sum to {total}, not 1")))
        }
    }

    pub fn point_mass(alphabet: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= alphabet.size() {
            return Err(CdpError::Argument(format!(
                "symbol {symbol} is outside an alphabet of size {}",
                alphabet.size()
            )));
        }
        let mut mass = vec![T::zero(); alphabet.size()];
        mass[symbol] = T::one();
        Ok(ProbVector { mass })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let w = T::one() / T::from_count(alphabet.size());
        ProbVector {
            mass: vec![w; alphabet.size()],
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.mass.len())
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn get(&self, symbol: usize) -> &T {
        &self.mass[symbol]
    }

    pub fn into_inner(self) -> Vec<T> {
        self.mass
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn blend(&self, other: &Self, lambda: &T) -> Result<Self> {
        check_dim("probability blend", self.len(), other.len())?;
        check_weight(lambda)?;
        let rest = T::one() - lambda.clone();
        let mass = self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| lambda.clone() * a.clone() + rest.clone() * b.clone())
            .collect();
        ProbVector::new(mass)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(i, _)| i)
    }
}

/// A row-stochastic conditional mass function `p(out | in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    rows: Vec<ProbVector<T>>,
}

impl<T: Scalar> Channel<T> {
    pub fn from_prob_rows(rows: Vec<ProbVector<T>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| CdpError::InvalidDistribution("channel has no rows".into()))?;
        let width = first.len();
        for row in &rows {
            check_dim("channel row", width, row.len())?;
        }
        Ok(Channel { rows })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| {
                ProbVector::new(r).map_err(|e| {
                    CdpError::InvalidDistribution(format!("channel row {x}: {e}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_prob_rows(rows)
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        let rows = alphabet
            .symbols()
            .map(|x| ProbVector::point_mass(alphabet, x).expect("symbol in range"))
            .collect();
        Channel { rows }
    }

    /// Every input mapped to the same output distribution.
    pub fn constant(input: Alphabet, row: ProbVector<T>) -> Self {
        Channel {
            rows: vec![row; input.size()],
        }
    }

    /// Deterministic channel sending input `x` to `map[x]`.
    pub fn deterministic(map: &[usize], output: Alphabet) -> Result<Self> {
        let rows = map
            .iter()
            .map(|&y| ProbVector::point_mass(output, y))
            .collect::<Result<Vec<_>>>()?;
        Self::from_prob_rows(rows)
    }

    /// Binary symmetric channel with crossover probability `flip`.
    pub fn binary_symmetric(flip: T) -> Result<Self> {
        check_weight(&flip)?;
        let keep = T::one() - flip.clone();
        Self::from_rows(vec![
            vec![keep.clone(), flip.clone()],
            vec![flip, keep],
        ])
    }

    pub fn input(&self) -> Alphabet {
        Alphabet(self.rows.len())
    }

    pub fn output(&self) -> Alphabet {
        self.rows[0].alphabet()
    }

    pub fn rows(&self) -> &[ProbVector<T>] {
        &self.rows
    }

    pub fn row(&self, input: usize) -> &ProbVector<T> {
        &self.rows[input]
    }

    pub fn entry(&self, input: usize, output: usize) -> &T {
        self.rows[input].get(output)
    }

    /// Output distribution for input distribution `p`.
    pub fn apply(&self, p: &ProbVector<T>) -> Result<ProbVector<T>> {
        check_dim("channel input", self.input().size(), p.len())?;
        let mut out = vec![T::zero(); self.output().size()];
        for (px, row) in p.mass().iter().zip(&self.rows) {
            if px.is_zero() {
                continue;
            }
            for (o, r) in out.iter_mut().zip(row.mass()) {
                *o = o.clone() + px.clone() * r.clone();
            }
        }
        ProbVector::new(out)
    }

    /// `lambda * self + (1 - lambda) * other`, row by row.
    pub fn blend(&self, other: &Self, lambda: &T) -> Result<Self> {
        check_dim("channel blend inputs", self.input().size(), other.input().size())?;
        check_dim("channel blend outputs", self.output().size(), other.output().size())?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.blend(b, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(Channel { rows })
    }

    /// True when every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.mass().iter().all(|m| m.is_zero() || m.is_one()))
    }

    /// Converts entries to another scalar type.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<Channel<U>> {
        Channel::from_rows(
            self.rows
                .iter()
                .map(|r| r.mass().iter().map(&f).collect())
                .collect(),
        )
    }
}

/// A two-class source: priors `(P1, P2)` and one class-conditional mass
/// function per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSource<T> {
    prior1: T,
    prior2: T,
    class1: ProbVector<T>,
    class2: ProbVector<T>,
}

impl<T: Scalar> MixtureSource<T> {
    pub fn new(prior1: T, prior2: T, class1: ProbVector<T>, class2: ProbVector<T>) -> Result<Self> {
        check_dim("class-conditional alphabets", class1.len(), class2.len())?;
        for (name, p) in [("prior1", &prior1), ("prior2", &prior2)] {
            if !p.is_finite_value() || *p < T::zero() || *p > T::one() {
                return Err(CdpError::InvalidMixture(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        let total = prior1.clone() + prior2.clone();
        let drift = (total.clone() - T::one()).abs();
        let (prior1, prior2) = if drift <= T::normalization_tol() {
            (prior1, prior2)
        } else if drift <= T::renormalization_limit() {
            (prior1 / total.clone(), prior2 / total)
        } else {
            return Err(CdpError::InvalidMixture(format!("priors sum to {total}, not 1")));
        };
        Ok(MixtureSource {
            prior1,
            prior2,
            class1,
            class2,
        })
    }

    /// Source with `P2 = 1 - P1`.
    pub fn with_prior1(prior1: T, class1: ProbVector<T>, class2: ProbVector<T>) -> Result<Self> {
        let prior2 = T::one() - prior1.clone();
        Self::new(prior1, prior2, class1, class2)
    }

    pub fn alphabet(&self) -> Alphabet {
        self.class1.alphabet()
    }

    pub fn prior1(&self) -> &T {
        &self.prior1
    }

    pub fn prior2(&self) -> &T {
        &self.prior2
    }

    pub fn class1(&self) -> &ProbVector<T> {
        &self.class1
    }

    pub fn class2(&self) -> &ProbVector<T> {
        &self.class2
    }

    /// `P1 * p1(x)`.
    pub fn weighted1(&self, x: usize) -> T {
        self.prior1.clone() * self.class1.get(x).clone()
    }

    /// `P2 * p2(x)`.
    pub fn weighted2(&self, x: usize) -> T {
        self.prior2.clone() * self.class2.get(x).clone()
    }

    /// `P1 * p1 + P2 * p2`.
    pub fn marginal(&self) -> ProbVector<T> {
        let mass = self
            .alphabet()
            .symbols()
            .map(|x| self.weighted1(x) + self.weighted2(x))
            .collect();
        ProbVector::new(mass).expect("convex combination of distributions is a distribution")
    }

    pub fn same_priors(&self, other: &Self) -> bool {
        let tol = T::normalization_tol();
        (self.prior1.clone() - other.prior1.clone()).abs() <= tol
            && (self.prior2.clone() - other.prior2.clone()).abs() <= tol
    }
}

/// Sends each class-conditional through `ch`; priors are unchanged.
pub fn push_forward<T: Scalar>(src: &MixtureSource<T>, ch: &Channel<T>) -> Result<MixtureSource<T>> {
    check_dim("push_forward source vs channel input", ch.input().size(), src.alphabet().size())?;
    Ok(MixtureSource {
        prior1: src.prior1.clone(),
        prior2: src.prior2.clone(),
        class1: ch.apply(&src.class1)?,
        class2: ch.apply(&src.class2)?,
    })
}

/// `first` followed by `second`: `p(z|x) = sum_y p(y|x) p(z|y)`.
pub fn compose<T: Scalar>(first: &Channel<T>, second: &Channel<T>) -> Result<Channel<T>> {
    check_dim("compose", first.output().size(), second.input().size())?;
    let rows = first
        .rows
        .iter()
        .map(|row| second.apply(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(Channel { rows })
}

/// Per-class blend `lambda * u + (1 - lambda) * v` under shared priors.
pub fn mix_mixtures<T: Scalar>(
    u: &MixtureSource<T>,
    v: &MixtureSource<T>,
    lambda: &T,
) -> Result<MixtureSource<T>> {
    if u.alphabet() != v.alphabet() {
        return Err(CdpError::InvalidMixture(format!(
            "alphabet sizes differ ({} vs {})",
            u.alphabet().size(),
            v.alphabet().size()
        )));
    }
    if !u.same_priors(v) {
        return Err(CdpError::InvalidMixture(format!(
            "priors differ: ({}, {}) vs ({}, {})",
            u.prior1, u.prior2, v.prior1, v.prior2
        )));
    }
    Ok(MixtureSource {
        prior1: u.prior1.clone(),
        prior2: u.prior2.clone(),
        class1: u.class1.blend(&v.class1, lambda)?,
        class2: u.class2.blend(&v.class2, lambda)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::exact;
    use num_rational::BigRational;

    fn pv(m: &[f64]) -> ProbVector<f64> {
        ProbVector::new(m.to_vec()).unwrap()
    }

    fn canonical() -> MixtureSource<f64> {
        MixtureSource::new(0.5, 0.5, pv(&[0.8, 0.2]), pv(&[0.2, 0.8])).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn constructor_renormalizes_small_drift_only() {
        let v = ProbVector::new(vec![0.5 + 5e-10, 0.5]).unwrap();
        let s: f64 = v.mass().iter().sum();
        assert!((s - 1.0).abs() <= 1e-15);
        assert!(ProbVector::new(vec![0.5 + 1e-6, 0.5]).is_err());
        assert!(ProbVector::new(vec![1.1, -0.1]).is_err());
        assert!(ProbVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbVector::<f64>::new(vec![]).is_err());
        assert!(Alphabet::new(0).is_err());
    }

    #[test]
    fn exact_vectors_keep_zero_drift() {
        let v = ProbVector::new(vec![exact(1, 3), exact(2, 3)]).unwrap();
        assert_eq!(v.mass()[0], exact(1, 3));
    }

    #[test]
    fn priors_must_sum_to_one() {
        assert!(MixtureSource::new(0.6, 0.6, pv(&[1.0]), pv(&[1.0])).is_err());
        assert!(MixtureSource::new(-0.1, 1.1, pv(&[1.0]), pv(&[1.0])).is_err());
        assert!(MixtureSource::new(0.5, 0.5, pv(&[1.0]), pv(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn identity_push_forward_is_a_no_op() {
        let src = canonical();
        let out = push_forward(&src, &Channel::identity(src.alphabet())).unwrap();
        assert_eq!(out, src);
    }

    #[test]
    fn bsc_push_forward() {
        let src = canonical();
        let out = push_forward(&src, &Channel::binary_symmetric(0.1).unwrap()).unwrap();
        assert!(close(out.class1().mass(), &[0.74, 0.26], 1e-15));
        assert!(close(out.class2().mass(), &[0.26, 0.74], 1e-15));
        assert_eq!(out.prior1(), &0.5);
    }

    #[test]
    fn constant_channel_erases_class_information() {
        let src = canonical();
        let q = pv(&[0.3, 0.7]);
        let out = push_forward(&src, &Channel::constant(src.alphabet(), q.clone())).unwrap();
        assert!(close(out.class1().mass(), q.mass(), 1e-15));
        assert!(close(out.class2().mass(), q.mass(), 1e-15));
    }

    #[test]
    fn push_forward_rejects_mismatched_alphabets() {
        let src = canonical();
        let ch = Channel::<f64>::identity(Alphabet::new(3).unwrap());
        assert!(matches!(push_forward(&src, &ch), Err(CdpError::Dimension { .. })));
    }

    #[test]
    fn bsc_composition() {
        let b = Channel::binary_symmetric(0.1).unwrap();
        let bb = compose(&b, &b).unwrap();
        assert!(close(bb.row(0).mass(), &[0.82, 0.18], 1e-15));
        assert!(close(bb.row(1).mass(), &[0.18, 0.82], 1e-15));
        // exact version
        let e = Channel::binary_symmetric(exact(1, 10)).unwrap();
        let ee = compose(&e, &e).unwrap();
        assert_eq!(ee.entry(0, 1), &exact(18, 100));
    }

    #[test]
    fn composition_with_identity_and_constant() {
        let b = Channel::binary_symmetric(0.3).unwrap();
        let id = Channel::identity(b.input());
        assert_eq!(compose(&id, &b).unwrap(), b);
        let q = pv(&[0.25, 0.75]);
        let c = Channel::constant(b.output(), q.clone());
        let bc = compose(&b, &c).unwrap();
        for row in bc.rows() {
            assert!(close(row.mass(), q.mass(), 1e-15));
        }
        assert!(compose(&b, &Channel::identity(Alphabet::new(3).unwrap())).is_err());
    }

    #[test]
    fn mix_endpoints_and_midpoint() {
        let u = MixtureSource::new(0.5, 0.5, pv(&[1.0, 0.0]), pv(&[0.3, 0.7])).unwrap();
        let v = MixtureSource::new(0.5, 0.5, pv(&[0.0, 1.0]), pv(&[0.6, 0.4])).unwrap();
        assert_eq!(mix_mixtures(&u, &v, &1.0).unwrap(), u);
        assert_eq!(mix_mixtures(&u, &v, &0.0).unwrap(), v);
        let m = mix_mixtures(&u, &v, &0.5).unwrap();
        assert_eq!(m.class1().mass(), &[0.5, 0.5]);
    }

    #[test]
    fn mix_rejects_mismatched_priors_and_weights() {
        let u = MixtureSource::new(0.5, 0.5, pv(&[1.0, 0.0]), pv(&[0.3, 0.7])).unwrap();
        let v = MixtureSource::new(0.4, 0.6, pv(&[0.0, 1.0]), pv(&[0.6, 0.4])).unwrap();
        assert!(matches!(mix_mixtures(&u, &v, &0.5), Err(CdpError::InvalidMixture(_))));
        assert!(mix_mixtures(&u, &u, &1.5).is_err());
    }

    #[test]
    fn exact_marginal_matches_channel_action() {
        let src = MixtureSource::new(
            exact(1, 3),
            exact(2, 3),
            ProbVector::new(vec![exact(1, 2), exact(1, 4), exact(1, 4)]).unwrap(),
            ProbVector::new(vec![exact(0, 1), exact(1, 5), exact(4, 5)]).unwrap(),
        )
        .unwrap();
        let ch: Channel<BigRational> = Channel::from_rows(vec![
            vec![exact(1, 2), exact(1, 2)],
            vec![exact(1, 7), exact(6, 7)],
            vec![exact(1, 1), exact(0, 1)],
        ])
        .unwrap();
        let pushed = push_forward(&src, &ch).unwrap();
        assert_eq!(pushed.marginal(), ch.apply(&src.marginal()).unwrap());
    }
}
