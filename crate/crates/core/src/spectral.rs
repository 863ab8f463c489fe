use std::cmp::Ordering;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// ρ = √λ on the branch arg ρ ∈ (−π/2, π/2].
pub fn rho(lam: C64) -> C64 {
    let r = lam.sqrt();
    if r.re < 0.0 || (r.re == 0.0 && r.im < 0.0) {
        -r
    } else {
        r
    }
}

/// Numbering order: |ρ| then arg ρ, then the raw bits as a final tiebreak
/// so the order is total.
pub fn order_cmp(a: C64, b: C64) -> Ordering {
    let (ra, rb) = (rho(a), rho(b));
    ra.norm()
        .total_cmp(&rb.norm())
        .then(ra.arg().total_cmp(&rb.arg()))
        .then(a.re.total_cmp(&b.re))
        .then(a.im.total_cmp(&b.im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cluster {
    /// 0-based index of the first repeated entry.
    pub start: usize,
    pub multiplicity: usize,
}

/// Eigenvalues repeated per multiplicity, weight numbers α_n and the
/// cluster partition. `n_head` is the cut index N: entries with 1-based
/// index < N form the head.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub p: usize,
    pub n_head: usize,
    pub eigenvalues: Vec<C64>,
    pub weights: Vec<C64>,
    pub clusters: Vec<Cluster>,
}

/// One pole of M: the eigenvalue and its α_{n}, …, α_{n+m−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub lambda: C64,
    pub alphas: Vec<C64>,
}

impl Pole {
    pub fn simple(lambda: C64, alpha: C64) -> Self {
        Self { lambda, alphas: vec![alpha] }
    }

    pub fn multiplicity(&self) -> usize {
        self.alphas.len()
    }
}

impl SpectralData {
    /// Builds sorted data from poles in any order.
    pub fn from_poles(p: usize, n_head: usize, mut poles: Vec<Pole>) -> Result<Self> {
        if poles.iter().any(|q| q.alphas.is_empty()) {
            return Err(invalid("pole with zero multiplicity"));
        }
        poles.sort_by(|a, b| {
            order_cmp(a.lambda, b.lambda).then_with(|| {
                // identical eigenvalues cannot come from one problem, but keep the order total
                a.alphas
                    .iter()
                    .zip(&b.alphas)
                    .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(a.alphas.len().cmp(&b.alphas.len()))
            })
        });
        let mut eigenvalues = Vec::new();
        let mut weights = Vec::new();
        let mut clusters = Vec::new();
        for q in poles {
            clusters.push(Cluster { start: eigenvalues.len(), multiplicity: q.multiplicity() });
            for a in q.alphas {
                eigenvalues.push(q.lambda);
                weights.push(a);
            }
        }
        let sd = Self { p, n_head, eigenvalues, weights, clusters };
        sd.validate()?;
        Ok(sd)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn poles(&self) -> Vec<Pole> {
        self.clusters
            .iter()
            .map(|c| Pole {
                lambda: self.eigenvalues[c.start],
                alphas: self.weights[c.start..c.start + c.multiplicity].to_vec(),
            })
            .collect()
    }

    /// Poles whose entries all have 1-based index < n.
    pub fn head_poles(&self, n: usize) -> Vec<Pole> {
        let cut = n.saturating_sub(1);
        self.poles()
            .into_iter()
            .zip(&self.clusters)
            .filter(|(_, c)| c.start < cut)
            .map(|(q, _)| q)
            .collect()
    }

    /// Head eigenvalues (1-based index < n), repeated per multiplicity.
    pub fn head_eigenvalues(&self, n: usize) -> &[C64] {
        &self.eigenvalues[..n.saturating_sub(1).min(self.len())]
    }

    /// Whether index n−1 (0-based) starts a cluster, so the head 1..n−1
    /// is a union of whole clusters.
    pub fn is_cut(&self, n: usize) -> bool {
        let cut = n.saturating_sub(1);
        cut == 0 || cut == self.len() || self.clusters.iter().any(|c| c.start == cut)
    }

    pub fn multiplicity_at(&self, idx: usize) -> usize {
        self.clusters
            .iter()
            .find(|c| c.start <= idx && idx < c.start + c.multiplicity)
            .map_or(0, |c| c.multiplicity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.eigenvalues.len() {
            return Err(invalid("eigenvalue and weight lists differ in length"));
        }
        if self.eigenvalues.iter().chain(&self.weights).any(|z| !z.is_finite()) {
            return Err(invalid("spectral data contains non-finite values"));
        }
        let mut next = 0;
        for c in &self.clusters {
            if c.start != next || c.multiplicity == 0 {
                return Err(invalid("clusters do not partition the index range"));
            }
            let lam = self.eigenvalues[c.start];
            if self.eigenvalues[c.start..c.start + c.multiplicity].iter().any(|&l| l != lam) {
                return Err(invalid(format!("cluster at index {} is not constant", c.start + 1)));
            }
            if c.start + 1 >= self.n_head && c.multiplicity > 1 && self.n_head > 0 {
                return Err(invalid(format!(
                    "multiple eigenvalue at index {} lies beyond the head N = {}",
                    c.start + 1,
                    self.n_head
                )));
            }
            next += c.multiplicity;
        }
        if next != self.len() {
            return Err(invalid("clusters do not cover every eigenvalue"));
        }
        for w in self.clusters.windows(2) {
            let (a, b) = (self.eigenvalues[w[0].start], self.eigenvalues[w[1].start]);
            if order_cmp(a, b) != Ordering::Less {
                return Err(invalid(format!("eigenvalues out of order at index {}", w[1].start + 1)));
            }
        }
        if !self.is_cut(self.n_head.min(self.len() + 1)) {
            return Err(invalid("head cut N splits a multiple eigenvalue"));
        }
        self.check_tail_decay()
    }

    /// ϰ_n = ρ_n − (n − p − 1) must look square summable: finite, with
    /// the last third of the stored range no larger than the first third.
    fn check_tail_decay(&self) -> Result<()> {
        let start = self.n_head.saturating_sub(1);
        let kappa: Vec<f64> = (start..self.len())
            .map(|i| (rho(self.eigenvalues[i]) - (i as f64 + 1.0 - self.p as f64 - 1.0)).norm_sqr())
            .collect();
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(invalid("tail deviations are not finite"));
        }
        if kappa.len() >= 6 {
            let third = kappa.len() / 3;
            let first = kappa[..third].iter().cloned().fold(0.0, f64::max);
            let last = kappa[kappa.len() - third..].iter().cloned().fold(0.0, f64::max);
            if last > first + 1e-6 && last > 0.25 {
                return Err(invalid("eigenvalue tail does not approach (n − p − 1)²"));
            }
        }
        Ok(())
    }

    /// M_N(λ) = Σ_{n<N} Σ_k α_{n+k}/(λ − λ_n)^{k+1}.
    pub fn weyl_partial(&self, n: usize, lam: C64) -> C64 {
        partial_fractions(&self.head_poles(n), lam)
    }
}

pub fn partial_fractions(poles: &[Pole], lam: C64) -> C64 {
    poles
        .iter()
        .map(|q| {
            let inv = 1.0 / (lam - q.lambda);
            let mut pw = inv;
            let mut s = C64::new(0.0, 0.0);
            for a in &q.alphas {
                s += a * pw;
                pw *= inv;
            }
            s
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn branch() {
        assert_eq!(rho(c(-4.0, 0.0)), c(0.0, 2.0));
        assert_eq!(rho(c(-4.0, -0.0)), c(0.0, 2.0));
        assert!(rho(c(4.0, -1.0)).re > 0.0);
    }

    #[test]
    fn partial_examples() {
        let empty = SpectralData::from_poles(0, 1, vec![]).unwrap();
        assert_eq!(empty.weyl_partial(1, c(3.0, 0.0)), c(0.0, 0.0));
        let one = SpectralData::from_poles(0, 2, vec![Pole::simple(c(0.0, 0.0), c(1.0 / std::f64::consts::PI, 0.0))])
            .unwrap();
        assert!((one.weyl_partial(2, c(1.0, 0.0)) - 1.0 / std::f64::consts::PI).norm() < 1e-15);
        let (a1, a2) = (c(0.3, 0.1), c(-0.2, 0.5));
        let dbl = SpectralData::from_poles(1, 3, vec![Pole { lambda: c(0.0, 0.0), alphas: vec![a1, a2] }]).unwrap();
        assert!((dbl.weyl_partial(3, c(2.0, 0.0)) - (a1 / 2.0 + a2 / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_clusters() {
        let mut sd = SpectralData::from_poles(
            0,
            3,
            vec![Pole::simple(c(0.0, 0.0), c(1.0, 0.0)), Pole::simple(c(1.0, 0.0), c(1.0, 0.0))],
        )
        .unwrap();
        sd.clusters[1].start = 0;
        assert!(sd.validate().is_err());
        // multiple eigenvalue past the head
        assert!(SpectralData::from_poles(0, 1, vec![Pole { lambda: c(4.0, 0.0), alphas: vec![c(1.0, 0.0); 2] }])
            .is_err());
    }

    proptest! {
        #[test]
        fn sort_is_total_and_deterministic(
            pts in proptest::collection::vec((-50.0f64..50.0, -5.0f64..5.0), 1..12),
            seed in 0u64..1000,
        ) {
            let poles: Vec<Pole> = pts.iter().map(|&(a, b)| Pole::simple(c(a, b), c(1.0, 0.0))).collect();
            let mut shuffled = poles.clone();
            // deterministic permutation from the seed
            let n = shuffled.len();
            for i in 0..n {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % n;
                shuffled.swap(i, j);
            }
            let a = SpectralData::from_poles(0, n + 1, poles);
            let b = SpectralData::from_poles(0, n + 1, shuffled);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.eigenvalues.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>(),
                                    b.eigenvalues.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>());
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "sorting disagreed on validity"),
            }
        }
    }
}
