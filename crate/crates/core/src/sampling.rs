//! Seeded generation of sequences under the three generation models:
//! i.i.d. pairs from a joint law, `X ~ prod p(x_i | y_i)` given `y`, and
//! i.i.d. triples from a Markov triple.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Zeta};

use crate::alphabet::Symbol;
use crate::empirical::SequenceTriple;
use crate::error::{Error, Result};
use crate::model::{JointPmf2, Kernel, MarkovTriple, Pmf, PmfKind};

/// The generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// A `(seed, stream_id)` pair naming one independent random stream.
///
/// The same pair always yields the same draws, whichever worker consumes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A draw-ready form of a [`Pmf`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Point(Symbol),
    Alias {
        symbols: Vec<Symbol>,
        index: WeightedAliasIndex<f64>,
    },
    /// `floor(ln U / ln(1 - p))`.
    Geometric { ln_q: f64 },
    /// `K - 1` with `K ~ Zeta(s)` on `{1, 2, ...}`.
    Zipf(Zeta<f64>),
}

impl Sampler {
    pub fn new(pmf: &Pmf) -> Result<Self> {
        Ok(match pmf.kind() {
            PmfKind::Explicit(table) => {
                let (symbols, weights): (Vec<Symbol>, Vec<f64>) =
                    table.iter().filter(|(_, p)| **p > 0.0).map(|(s, p)| (*s, *p)).unzip();
                if symbols.len() == 1 {
                    Sampler::Point(symbols[0])
                } else {
                    let index = WeightedAliasIndex::new(weights)
                        .map_err(|e| Error::InvalidPmf(format!("cannot build alias table: {e}")))?;
                    Sampler::Alias { symbols, index }
                }
            }
            PmfKind::Geometric { p } => Sampler::Geometric { ln_q: (1.0 - p).ln() },
            PmfKind::Zipf { s } => Sampler::Zipf(
                Zeta::new(*s).map_err(|e| Error::InvalidPmf(format!("zipf exponent {s}: {e}")))?,
            ),
        })
    }

    /// A sampler over the values of a finite weight table.
    pub fn from_weights(weights: &BTreeMap<Symbol, f64>) -> Result<Self> {
        let (support, probs): (Vec<Symbol>, Vec<f64>) = weights.iter().map(|(s, p)| (*s, *p)).unzip();
        let total: f64 = crate::sum::sum(probs.iter().copied());
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        Sampler::new(&Pmf::explicit(&support, &probs)?)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        match self {
            Sampler::Point(s) => *s,
            Sampler::Alias { symbols, index } => symbols[index.sample(rng)],
            Sampler::Geometric { ln_q } => {
                if *ln_q == f64::NEG_INFINITY {
                    0
                } else {
                    (open_unit(rng).ln() / ln_q).floor() as Symbol
                }
            }
            Sampler::Zipf(z) => {
                let k: f64 = z.sample(rng);
                (k as Symbol).saturating_sub(1)
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Symbol> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Alias sampler over the cells of a [`JointPmf2`].
#[derive(Debug, Clone)]
pub struct PairSampler {
    cells: Vec<(Symbol, Symbol)>,
    index: Option<WeightedAliasIndex<f64>>,
}

impl PairSampler {
    pub fn new(joint: &JointPmf2) -> Result<Self> {
        let (cells, weights): (Vec<_>, Vec<_>) =
            joint.entries().filter(|(_, _, p)| *p > 0.0).map(|(a, b, p)| ((a, b), p)).unzip();
        let index = if cells.len() > 1 {
            Some(
                WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::InvalidPmf(format!("cannot build alias table: {e}")))?,
            )
        } else {
            None
        };
        Ok(PairSampler { cells, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Symbol, Symbol) {
        match &self.index {
            Some(index) => self.cells[index.sample(rng)],
            None => self.cells[0],
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Vec<Symbol>, Vec<Symbol>) {
        (0..n).map(|_| self.sample(rng)).unzip()
    }
}

/// One [`Sampler`] per kernel row.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    rows: BTreeMap<Symbol, Sampler>,
}

impl KernelSampler {
    pub fn new(kernel: &Kernel) -> Result<Self> {
        let rows = kernel.rows().map(|(y, row)| Ok((y, Sampler::new(row)?))).collect::<Result<_>>()?;
        Ok(KernelSampler { rows })
    }

    pub fn sample<R: Rng + ?Sized>(&self, y: Symbol, rng: &mut R) -> Result<Symbol> {
        self.rows.get(&y).map(|s| s.sample(rng)).ok_or(Error::MissingKernelRow(y))
    }

    /// Independent draws `X_i ~ p(. | y_i)`.
    pub fn sample_given<R: Rng + ?Sized>(&self, y: &[Symbol], rng: &mut R) -> Result<Vec<Symbol>> {
        y.iter().map(|&yi| self.sample(yi, rng)).collect()
    }
}

/// Every sampler a harness needs for one [`MarkovTriple`].
#[derive(Debug, Clone)]
pub struct TripleSampler {
    pub side: PairSampler,
    pub kernel: KernelSampler,
    pub y: Sampler,
    pub z: Sampler,
}

impl TripleSampler {
    pub fn new(triple: &MarkovTriple) -> Result<Self> {
        Ok(TripleSampler {
            side: PairSampler::new(triple.side())?,
            kernel: KernelSampler::new(triple.kernel())?,
            y: Sampler::from_weights(triple.y_marginal())?,
            z: Sampler::from_weights(triple.z_marginal())?,
        })
    }

    /// `n` i.i.d. triples from `p(x|y) p(yz)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SequenceTriple> {
        let (y, z) = self.side.sample_n(n, rng);
        let x = self.kernel.sample_given(&y, rng)?;
        SequenceTriple::new(x, y, z)
    }
}

/// `n` i.i.d. draws from `p(yz)`.
pub fn sample_iid_pair<R: Rng + ?Sized>(p_yz: &JointPmf2, n: usize, rng: &mut R) -> Result<(Vec<Symbol>, Vec<Symbol>)> {
    Ok(PairSampler::new(p_yz)?.sample_n(n, rng))
}

/// `X_i ~ p(. | y_i)` independently.
pub fn sample_conditional<R: Rng + ?Sized>(kernel: &Kernel, y: &[Symbol], rng: &mut R) -> Result<Vec<Symbol>> {
    KernelSampler::new(kernel)?.sample_given(y, rng)
}

/// `n` i.i.d. draws from `p(xy)`.
pub fn sample_joint_pair<R: Rng + ?Sized>(p_xy: &JointPmf2, n: usize, rng: &mut R) -> Result<(Vec<Symbol>, Vec<Symbol>)> {
    sample_iid_pair(p_xy, n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::variational_distance;
    use crate::empirical::EmpiricalType;
    use crate::alphabet::Vars;

    fn uniform_pairs() -> JointPmf2 {
        JointPmf2::new([(0, 0, 0.25), (0, 1, 0.25), (1, 0, 0.25), (1, 1, 0.25)]).unwrap()
    }

    #[test]
    fn point_joint_is_constant() {
        let j = JointPmf2::new([(3, 5, 1.0)]).unwrap();
        let (y, z) = sample_iid_pair(&j, 50, &mut RngStream::new(1, 0).rng()).unwrap();
        assert!(y.iter().all(|&v| v == 3) && z.iter().all(|&v| v == 5));
    }

    #[test]
    fn pair_draws_converge() {
        let (y, z) = sample_iid_pair(&uniform_pairs(), 1_000_000, &mut RngStream::new(11, 0).rng()).unwrap();
        let q = EmpiricalType::from_pair(&y, &z).probs(Vars::YZ);
        let p = q.keys().map(|k| (*k, 0.25)).collect();
        assert_eq!(q.len(), 4);
        assert!(variational_distance(&q, &p) < 0.01);
    }

    #[test]
    fn streams_replay_and_differ() {
        let j = uniform_pairs();
        let a = sample_iid_pair(&j, 200, &mut RngStream::new(7, 3).rng()).unwrap();
        let b = sample_iid_pair(&j, 200, &mut RngStream::new(7, 3).rng()).unwrap();
        let c = sample_iid_pair(&j, 200, &mut RngStream::new(7, 4).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let x1 = sample_joint_pair(&j, 100, &mut RngStream::new(9, 0).rng()).unwrap();
        let x2 = sample_joint_pair(&j, 100, &mut RngStream::new(9, 0).rng()).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn deterministic_kernel_maps_y() {
        let k = Kernel::new([(0, Pmf::point(4)), (1, Pmf::point(2))]);
        let x = sample_conditional(&k, &[0, 1, 1, 0], &mut RngStream::new(0, 0).rng()).unwrap();
        assert_eq!(x, vec![4, 2, 2, 4]);
        assert!(matches!(
            sample_conditional(&k, &[0, 7], &mut RngStream::new(0, 0).rng()),
            Err(Error::MissingKernelRow(7))
        ));
    }

    #[test]
    fn bernoulli_row_frequency() {
        let k = Kernel::new([(0, Pmf::bernoulli(0.25).unwrap())]);
        let x = sample_conditional(&k, &vec![0; 100_000], &mut RngStream::new(5, 0).rng()).unwrap();
        let f = x.iter().filter(|&&v| v == 1).count() as f64 / 1e5;
        assert!((f - 0.25).abs() < 0.01);
    }

    #[test]
    fn geometric_row_mean() {
        let s = Sampler::new(&Pmf::geometric(0.5).unwrap()).unwrap();
        let x = s.sample_n(100_000, &mut RngStream::new(5, 1).rng());
        let mean = x.iter().sum::<u64>() as f64 / 1e5;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    fn within_5_sigma(pmf: &Pmf, draws: &[Symbol], support: impl IntoIterator<Item = Symbol>) {
        let n = draws.len() as f64;
        let mut counts = BTreeMap::new();
        for d in draws {
            *counts.entry(*d).or_insert(0u64) += 1;
        }
        for s in support {
            let p = pmf.mass(s);
            let f = counts.get(&s).copied().unwrap_or(0) as f64 / n;
            let sigma = (p * (1.0 - p) / n).sqrt();
            assert!((f - p).abs() <= 5.0 * sigma + 1e-12, "symbol {s}: {f} vs {p}");
        }
    }

    #[test]
    fn finite_pmfs_pass_count_check() {
        let pmfs = [
            Pmf::explicit(&[0, 1, 2, 3], &[0.1, 0.2, 0.3, 0.4]).unwrap(),
            Pmf::explicit(&[2, 9, 40], &[0.001, 0.5, 0.499]).unwrap(),
            Pmf::bernoulli(0.03).unwrap(),
        ];
        for (i, pmf) in pmfs.iter().enumerate() {
            let s = Sampler::new(pmf).unwrap();
            let draws = s.sample_n(100_000, &mut RngStream::new(21, i as u64).rng());
            let support: Vec<Symbol> = match pmf.kind() {
                PmfKind::Explicit(t) => t.keys().copied().collect(),
                _ => unreachable!(),
            };
            within_5_sigma(pmf, &draws, support);
        }
    }

    #[test]
    fn parametric_pmfs_pass_count_check() {
        let geo = Pmf::geometric(0.3).unwrap();
        let draws = Sampler::new(&geo).unwrap().sample_n(100_000, &mut RngStream::new(3, 0).rng());
        within_5_sigma(&geo, &draws, 0..15);
        let zipf = Pmf::zipf(2.5).unwrap();
        let draws = Sampler::new(&zipf).unwrap().sample_n(100_000, &mut RngStream::new(3, 1).rng());
        within_5_sigma(&zipf, &draws, 0..15);
    }

    #[test]
    fn product_joint_marginals() {
        let a = Pmf::bernoulli(0.3).unwrap();
        let b = Pmf::explicit(&[0, 1, 2], &[0.2, 0.5, 0.3]).unwrap();
        let j = JointPmf2::product(&a, &b).unwrap();
        let (x, y) = sample_joint_pair(&j, 100_000, &mut RngStream::new(8, 0).rng()).unwrap();
        within_5_sigma(&a, &x, 0..2);
        within_5_sigma(&b, &y, 0..3);
        let corr = JointPmf2::new([(0, 0, 0.6), (1, 1, 0.4)]).unwrap();
        let (x, y) = sample_joint_pair(&corr, 1000, &mut RngStream::new(8, 1).rng()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn conditional_counts_have_kernel_mean() {
        // E[N(x,y,z; X,y,z)] = p(x|y) N(y,z; y,z) at fixed (y, z)
        let side = JointPmf2::new([(0, 0, 0.4), (0, 1, 0.1), (1, 0, 0.2), (1, 1, 0.3)]).unwrap();
        let kernel = Kernel::new([
            (0, Pmf::explicit(&[0, 1, 2], &[0.6, 0.3, 0.1]).unwrap()),
            (1, Pmf::bernoulli(0.8).unwrap()),
        ]);
        let triple = MarkovTriple::new(side, kernel.clone()).unwrap();
        let ts = TripleSampler::new(&triple).unwrap();
        let base = ts.sample(60, &mut RngStream::new(1, 0).rng()).unwrap();
        let (y, z) = (base.y().to_vec(), base.z().to_vec());
        let ks = KernelSampler::new(&kernel).unwrap();
        let reps = 10_000u64;
        let atoms: Vec<[u64; 3]> = [0, 1, 2].iter().flat_map(|&x| [[x, 0, 0], [x, 0, 1], [x, 1, 0], [x, 1, 1]]).collect();
        let mut totals = vec![0u64; atoms.len()];
        for r in 0..reps {
            let x = ks.sample_given(&y, &mut RngStream::new(2, r).rng()).unwrap();
            let s = SequenceTriple::new(x, y.clone(), z.clone()).unwrap();
            for (t, a) in totals.iter_mut().zip(&atoms) {
                *t += crate::empirical::count_occurrences(&s, a);
            }
        }
        for (t, a) in totals.iter().zip(&atoms) {
            let nyz = y.iter().zip(&z).filter(|(yi, zi)| **yi == a[1] && **zi == a[2]).count() as f64;
            let p = kernel.mass(a[0], a[1]);
            let mean = p * nyz;
            let sd = (nyz * p * (1.0 - p) / reps as f64).sqrt();
            let avg = *t as f64 / reps as f64;
            assert!((avg - mean).abs() <= 5.0 * sd + 1e-12, "{a:?}: {avg} vs {mean}");
        }
    }
}
