use std::collections::BTreeMap;

use super::joint::{JointPmf2, JointTable};
use super::pmf::{Estimate, Pmf, TABLE_CAP};
use crate::alphabet::{Atom, Symbol, Vars};
use crate::error::{Error, Result};
use crate::measures::Table;
use crate::sum::{self, CompensatedSum};

/// Default rejection cap on the log-moment bound, in bits^2.
pub const DEFAULT_MOMENT_CAP: f64 = 1e6;

/// The conditional law `p(x | y)`, one pmf per conditioning symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kernel {
    rows: BTreeMap<Symbol, Pmf>,
}

impl Kernel {
    pub fn new(rows: impl IntoIterator<Item = (Symbol, Pmf)>) -> Self {
        Kernel {
            rows: rows.into_iter().collect(),
        }
    }

    pub fn row(&self, y: Symbol) -> Option<&Pmf> {
        self.rows.get(&y)
    }

    pub fn rows(&self) -> impl Iterator<Item = (Symbol, &Pmf)> {
        self.rows.iter().map(|(y, p)| (*y, p))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `p(x | y)`, zero when the row is missing.
    pub fn mass(&self, x: Symbol, y: Symbol) -> f64 {
        self.rows.get(&y).map_or(0.0, |r| r.mass(x))
    }
}

/// `sup_y sum_x p(x|y) (log2 p(x|y))^2`, in bits^2.
///
/// Explicit rows are summed exactly; geometric rows use the closed form;
/// zipf rows use Euler-Maclaurin sums whose error bound is added before
/// comparing against `cap`.
pub fn check_log_moment_bound(kernel: &Kernel) -> Result<f64> {
    check_log_moment_bound_with_cap(kernel, DEFAULT_MOMENT_CAP)
}

pub fn check_log_moment_bound_with_cap(kernel: &Kernel, cap: f64) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (y, row) in kernel.rows() {
        let m = row.log_moment();
        let upper = m.value + m.err;
        if !upper.is_finite() || upper > cap {
            return Err(Error::BoundViolation { row: y, value: upper, cap });
        }
        sup = sup.max(m.value);
    }
    Ok(sup)
}

/// A joint law `p(xyz) = p(x|y) p(yz)`, so that `X - Y - Z` is Markov.
///
/// Construction certifies the log-moment bound and finiteness of every
/// entropy, and precomputes the seven marginal entropies of the law.
#[derive(Debug, Clone)]
pub struct MarkovTriple {
    side: JointPmf2,
    kernel: Kernel,
    moment_bound: f64,
    p_y: BTreeMap<Symbol, f64>,
    p_z: BTreeMap<Symbol, f64>,
    side_by_z: BTreeMap<Symbol, Vec<(Symbol, f64)>>,
    row_entropy: BTreeMap<Symbol, Estimate>,
    entropies: [Estimate; 8],
}

impl MarkovTriple {
    pub fn new(side: JointPmf2, kernel: Kernel) -> Result<Self> {
        Self::with_moment_cap(side, kernel, DEFAULT_MOMENT_CAP)
    }

    pub fn with_moment_cap(side: JointPmf2, kernel: Kernel, cap: f64) -> Result<Self> {
        let mut p_y = BTreeMap::new();
        let mut p_z = BTreeMap::new();
        let mut side_by_z: BTreeMap<Symbol, Vec<(Symbol, f64)>> = BTreeMap::new();
        for (y, z, p) in side.entries() {
            if p == 0.0 {
                continue;
            }
            if kernel.row(y).is_none() {
                return Err(Error::MissingKernelRow(y));
            }
            *p_y.entry(y).or_insert(0.0) += p;
            *p_z.entry(z).or_insert(0.0) += p;
            side_by_z.entry(z).or_default().push((y, p));
        }
        let moment_bound = check_log_moment_bound_with_cap(&kernel, cap)?;
        let row_entropy: BTreeMap<_, _> = kernel.rows().map(|(y, r)| (y, r.entropy())).collect();

        let mut triple = MarkovTriple {
            side,
            kernel,
            moment_bound,
            p_y,
            p_z,
            side_by_z,
            row_entropy,
            entropies: [Estimate::exact(0.0); 8],
        };
        triple.entropies = triple.compute_entropies()?;
        if triple.entropies.iter().any(|e| !e.value.is_finite()) {
            return Err(Error::Precondition("joint entropy is not finite".into()));
        }
        Ok(triple)
    }

    pub fn side(&self) -> &JointPmf2 {
        &self.side
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// The certified bound `C = sup_y sum_x p(x|y) (log2 p(x|y))^2`.
    pub fn log_moment_bound(&self) -> f64 {
        self.moment_bound
    }

    pub fn p_y(&self, y: Symbol) -> f64 {
        self.p_y.get(&y).copied().unwrap_or(0.0)
    }

    pub fn p_z(&self, z: Symbol) -> f64 {
        self.p_z.get(&z).copied().unwrap_or(0.0)
    }

    /// Support of `Y` under the side law, with probabilities.
    pub fn y_marginal(&self) -> &BTreeMap<Symbol, f64> {
        &self.p_y
    }

    pub fn z_marginal(&self) -> &BTreeMap<Symbol, f64> {
        &self.p_z
    }

    /// `H(P_{X|Y=y})` in bits; zero for rows absent from the kernel.
    pub fn row_entropy(&self, y: Symbol) -> f64 {
        self.row_entropy.get(&y).map_or(0.0, |e| e.value)
    }

    /// `H(P_{X|YZ}) = sum_y p(y) H(P_{X|Y=y})`.
    pub fn conditional_entropy_x(&self) -> f64 {
        sum::sum(self.p_y.iter().map(|(y, p)| p * self.row_entropy(*y)))
    }

    /// Marginal mass of the law on `vars` at `atom` (other coordinates ignored).
    pub fn mass(&self, vars: Vars, atom: &Atom) -> f64 {
        let [x, y, z] = *atom;
        match vars {
            Vars::XYZ => self.kernel.mass(x, y) * self.side.mass(y, z),
            Vars::XY => self.kernel.mass(x, y) * self.p_y(y),
            Vars::YZ => self.side.mass(y, z),
            Vars::Y => self.p_y(y),
            Vars::Z => self.p_z(z),
            Vars::X => sum::sum(self.p_y.iter().map(|(yy, p)| p * self.kernel.mass(x, *yy))),
            Vars::XZ => self.side_by_z.get(&z).map_or(0.0, |col| {
                sum::sum(col.iter().map(|(yy, p)| p * self.kernel.mass(x, *yy)))
            }),
            _ => 1.0,
        }
    }

    /// Entropy of the marginal on `vars`, with its truncation error bound.
    pub fn entropy_estimate(&self, vars: Vars) -> Estimate {
        self.entropies[vars.bits() as usize]
    }

    pub fn entropy(&self, vars: Vars) -> f64 {
        self.entropy_estimate(vars).value
    }

    fn compute_entropies(&self) -> Result<[Estimate; 8]> {
        let mut out = [Estimate::exact(0.0); 8];
        let h_y = crate::measures::entropy(self.p_y.values().copied());
        let h_z = crate::measures::entropy(self.p_z.values().copied());
        let h_yz = self.side.entropy();
        let mut cond = CompensatedSum::new();
        let mut cond_err = 0.0;
        for (y, p) in &self.p_y {
            let e = self.row_entropy[y];
            cond.add(p * e.value);
            cond_err += p * e.err;
        }
        let cond = cond.value();
        out[Vars::Y.bits() as usize] = Estimate::exact(h_y);
        out[Vars::Z.bits() as usize] = Estimate::exact(h_z);
        out[Vars::YZ.bits() as usize] = Estimate::exact(h_yz);
        out[Vars::XY.bits() as usize] = Estimate { value: h_y + cond, err: cond_err };
        out[Vars::XYZ.bits() as usize] = Estimate { value: h_yz + cond, err: cond_err };

        let xs = self.x_grid()?;
        out[Vars::X.bits() as usize] = self.mixture_entropy(&xs, self.p_y.iter().map(|(y, p)| (*y, *p)).collect());
        let columns: Vec<Vec<(Symbol, f64)>> = self.side_by_z.values().cloned().collect();
        let mut acc = CompensatedSum::new();
        let mut err = 0.0;
        for col in columns {
            let e = self.mixture_entropy(&xs, col);
            acc.add(e.value);
            err += e.err;
        }
        out[Vars::XZ.bits() as usize] = Estimate { value: acc.value(), err };
        Ok(out)
    }

    /// `sum_x -m(x) log2 m(x)` for the sub-probability mixture
    /// `m(x) = sum_y w_y p(x|y)` over the grid, plus a tail bound.
    ///
    /// Beyond the grid, `-t log t` is subadditive, so the tail is bounded by
    /// `sum_y w_y (tail_mass_y * log2(1/w_y) + tail_entropy_y)`.
    fn mixture_entropy(&self, grid: &XGrid, weights: Vec<(Symbol, f64)>) -> Estimate {
        let mut acc = CompensatedSum::new();
        for &x in &grid.symbols {
            let m = sum::sum(weights.iter().map(|(y, w)| w * self.kernel.mass(x, *y)));
            if m > 0.0 {
                acc.add(-m * m.log2());
            }
        }
        let mut tail = 0.0;
        for (y, w) in &weights {
            let row = &self.kernel.rows[y];
            if row.is_finite() || *w == 0.0 {
                continue;
            }
            tail += w * (row.tail_mass(grid.cut) * (-w.log2()) + row.tail_entropy(grid.cut));
        }
        Estimate {
            value: acc.value(),
            err: tail,
        }
    }

    fn x_grid(&self) -> Result<XGrid> {
        let mut explicit = std::collections::BTreeSet::new();
        let mut cut = 0;
        for y in self.p_y.keys() {
            let row = &self.kernel.rows[y];
            match row.kind() {
                super::pmf::PmfKind::Explicit(t) => explicit.extend(t.keys().copied()),
                _ => {
                    let t = row.tabulate()?;
                    cut = cut.max(t.cut.unwrap_or(0));
                }
            }
        }
        let mut symbols: Vec<Symbol> = if self.has_infinite_rows() { (0..=cut).collect() } else { Vec::new() };
        symbols.extend(explicit.into_iter().filter(|x| !self.has_infinite_rows() || *x > cut));
        if symbols.len() > TABLE_CAP {
            return Err(Error::Truncation {
                tail: f64::NAN,
                tail_eps: 0.0,
                cap: TABLE_CAP,
            });
        }
        Ok(XGrid { symbols, cut })
    }

    fn has_infinite_rows(&self) -> bool {
        self.p_y.keys().any(|y| !self.kernel.rows[y].is_finite())
    }

    /// The induced law `p(x|y) p(yz)` tabulated up to each row's truncation point.
    pub fn induced_joint(&self) -> Result<JointTable> {
        let mut table: Table<Atom> = Table::new();
        let mut residual = CompensatedSum::new();
        let mut rows = BTreeMap::new();
        for y in self.p_y.keys() {
            rows.insert(*y, self.kernel.rows[y].tabulate()?);
        }
        let mut cells = 0usize;
        for (y, z, pyz) in self.side.entries() {
            if pyz == 0.0 {
                continue;
            }
            let row = &rows[&y];
            cells += row.atoms.len();
            if cells > TABLE_CAP {
                return Err(Error::Truncation {
                    tail: row.residual,
                    tail_eps: self.kernel.rows[&y].tail_eps(),
                    cap: TABLE_CAP,
                });
            }
            for &(x, px) in &row.atoms {
                table.insert([x, y, z], px * pyz);
            }
            residual.add(pyz * row.residual);
        }
        Ok(JointTable {
            vars: Vars::XYZ,
            table,
            residual: residual.value(),
        })
    }
}

struct XGrid {
    symbols: Vec<Symbol>,
    cut: Symbol,
}
