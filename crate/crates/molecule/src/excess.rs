//! Excess bookkeeping with exact arithmetic.
//!
//! The excess of an elementary component is the power of epsilon by which
//! its integral beats the trivial bound. A value is tracked symbolically as
//! `eps^a * (eps*)^s * prod_k p_k^{m_k}` with `a` an exact rational, `s` an
//! integer power of the sub-polynomial `eps* = exp(-sqrt(|log eps|))`, and
//! named dyadic parameters `p_k` ranging over `[eps^{r_k}, 1]`. Certificate
//! verification compares exact rational epsilon-exponents; `eps*` powers are
//! sub-polynomial (their epsilon-exponent vanishes as eps -> 0) and are
//! reported separately.

use crate::classify::ElementaryKind;
use crate::restriction::{eps_star, Bound};
use std::collections::BTreeMap;
use std::fmt;

pub type Rational = num_rational::Rational64;

/// `eps^eps_pow * (eps*)^star_pow * prod dyadic^pow`.
#[derive(Debug, Clone, PartialEq)]
pub struct Excess {
    pub eps_pow: Rational,
    pub star_pow: i64,
    /// name -> (power, range-min exponent of the parameter)
    pub dyadic: BTreeMap<String, (i64, Rational)>,
}

impl Excess {
    pub fn one() -> Self {
        Excess {
            eps_pow: Rational::from_integer(0),
            star_pow: 0,
            dyadic: BTreeMap::new(),
        }
    }

    pub fn eps_pow(num: i64, den: i64) -> Self {
        Excess {
            eps_pow: Rational::new(num, den),
            star_pow: 0,
            dyadic: BTreeMap::new(),
        }
    }

    fn mul_bound_pow(&mut self, bound: &Bound, power: i64) {
        match bound {
            Bound::Eps(r) => {
                self.eps_pow += *r * Rational::from_integer(power);
            }
            Bound::EpsStar => {
                self.star_pow += power;
            }
            Bound::Dyadic { name, min_pow } => {
                let entry = self
                    .dyadic
                    .entry(name.clone())
                    .or_insert((0, *min_pow));
                entry.0 += power;
                if entry.0 == 0 {
                    self.dyadic.remove(name);
                }
            }
        }
    }

    pub fn mul(&self, other: &Excess) -> Excess {
        let mut out = self.clone();
        out.eps_pow += other.eps_pow;
        out.star_pow += other.star_pow;
        for (name, (pow, min_pow)) in &other.dyadic {
            let entry = out.dyadic.entry(name.clone()).or_insert((0, *min_pow));
            entry.0 += pow;
            if entry.0 == 0 {
                out.dyadic.remove(name);
            }
        }
        out
    }

    /// Worst-case (largest-value) epsilon exponent over the dyadic parameter
    /// ranges: positive powers of a parameter `<= 1` contribute nothing;
    /// negative powers are largest at the range minimum `eps^{min_pow}`.
    pub fn worst_case_eps_pow(&self) -> Rational {
        let mut a = self.eps_pow;
        for (pow, min_pow) in self.dyadic.values() {
            if *pow < 0 {
                a += *min_pow * Rational::from_integer(*pow);
            }
        }
        a
    }

    /// Numeric value at a configured epsilon with a dyadic assignment.
    pub fn value(&self, eps: f64, params: &dyn Fn(&str) -> f64) -> f64 {
        let mut v = eps.powf(*self.eps_pow.numer() as f64 / *self.eps_pow.denom() as f64);
        v *= eps_star(eps).powi(self.star_pow as i32);
        for (name, (pow, _)) in &self.dyadic {
            v *= params(name).powi(*pow as i32);
        }
        v
    }

    /// Upper bound over dyadic parameter ranges at a configured epsilon.
    pub fn worst_case_value(&self, eps: f64) -> f64 {
        let mut v = eps.powf(
            *self.worst_case_eps_pow().numer() as f64
                / *self.worst_case_eps_pow().denom() as f64,
        );
        v *= eps_star(eps).powi(self.star_pow as i32);
        v
    }

    /// The symbolic claim `sigma <= 1` over the parameter ranges (epsilon
    /// powers nonnegative after worst-case folding and no net negative
    /// eps* power without epsilon gain).
    pub fn at_most_one(&self) -> bool {
        let a = self.worst_case_eps_pow();
        if a < Rational::from_integer(0) {
            return false;
        }
        if self.star_pow < 0 && a == Rational::from_integer(0) {
            return false;
        }
        true
    }
}

impl fmt::Display for Excess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eps^({}/{})", self.eps_pow.numer(), self.eps_pow.denom())?;
        if self.star_pow != 0 {
            write!(f, " eps*^{}", self.star_pow)?;
        }
        for (name, (pow, _)) in &self.dyadic {
            write!(f, " {name}^{pow}")?;
        }
        Ok(())
    }
}

/// Case tags from the excess table, mapping restriction families to their
/// certified excess.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcessTag {
    /// good component: `eps^{1/(8d)}`
    Good,
    /// {3}/{4} with a lambda-restriction: `lambda`
    Lambda(Bound),
    /// double-root restriction: `eps^{d-1}`
    DoubleRoot,
    /// {4} with the double-root restriction on both pairs: `eps^d`
    DoubleRootTwoPair,
    /// {3} against an external point: `mu * mu'^{-1}`
    MuRatio { mu: Bound, mu_prime: Bound },
    /// {33A} with phase separation `>= lambda`: `eps * lambda^{-1}`
    A33Separation(Bound),
    /// {33A} with time separation `>= mu`: `eps^{d-1} mu^{-d}`
    A33TimeSep(Bound),
    /// {333A}/{334T}: `eps^{d-1/2} (mu mu')^{-2d}`
    Triple { mu: Bound, mu_prime: Bound },
}

impl ExcessTag {
    pub fn sigma(&self, d: i64) -> Excess {
        let mut out = Excess::one();
        match self {
            ExcessTag::Good => {
                out.eps_pow = Rational::new(1, 8 * d);
            }
            ExcessTag::Lambda(b) => {
                out.mul_bound_pow(b, 1);
            }
            ExcessTag::DoubleRoot => {
                out.eps_pow = Rational::from_integer(d - 1);
            }
            ExcessTag::DoubleRootTwoPair => {
                out.eps_pow = Rational::from_integer(d);
            }
            ExcessTag::MuRatio { mu, mu_prime } => {
                out.mul_bound_pow(mu, 1);
                out.mul_bound_pow(mu_prime, -1);
            }
            ExcessTag::A33Separation(lambda) => {
                out.eps_pow = Rational::from_integer(1);
                out.mul_bound_pow(lambda, -1);
            }
            ExcessTag::A33TimeSep(mu) => {
                out.eps_pow = Rational::from_integer(d - 1);
                out.mul_bound_pow(mu, -d);
            }
            ExcessTag::Triple { mu, mu_prime } => {
                out.eps_pow = Rational::from_integer(d) - Rational::new(1, 2);
                out.mul_bound_pow(mu, -2 * d);
                out.mul_bound_pow(mu_prime, -2 * d);
            }
        }
        out
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExcessTag::Good => "good",
            ExcessTag::Lambda(_) => "lambda",
            ExcessTag::DoubleRoot => "double-root",
            ExcessTag::DoubleRootTwoPair => "double-root-two-pair",
            ExcessTag::MuRatio { .. } => "mu-ratio",
            ExcessTag::A33Separation(_) => "33A-separation",
            ExcessTag::A33TimeSep(_) => "33A-time-sep",
            ExcessTag::Triple { .. } => "triple",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LedgerEntry {
    /// Index of the component in the outcome's ordered component list.
    pub component: usize,
    pub kind: ElementaryKind,
    pub tag: ExcessTag,
    pub sigma: Excess,
}

/// Certificate side of a cutting outcome: per-component excesses with their
/// justification tags.
#[derive(Debug, Clone, Default)]
pub struct ExcessLedger {
    pub entries: Vec<LedgerEntry>,
}

impl ExcessLedger {
    pub fn record(&mut self, component: usize, kind: ElementaryKind, tag: ExcessTag, d: i64) {
        let sigma = tag.sigma(d);
        debug_assert!(sigma.at_most_one(), "sigma > 1 recorded: {sigma}");
        self.entries.push(LedgerEntry {
            component,
            kind,
            tag,
            sigma,
        });
    }

    /// Product of all recorded excesses (empty product = 1).
    pub fn product(&self) -> Excess {
        self.entries
            .iter()
            .fold(Excess::one(), |acc, e| acc.mul(&e.sigma))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
