//! Block operators, preconditioners and right-hand sides of the coupled
//! problems and their single-domain subproblems.

mod darcy_stokes;
pub mod mms;
mod poisson;
mod stokes_navier;
mod subproblems;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use darcy_stokes::build_darcy_stokes;
pub use poisson::build_poisson_interface;
pub use stokes_navier::build_stokes_navier;
pub use subproblems::{
    build_darcy_subproblem, build_navier_subproblem, build_stokes_subproblem, build_strong_subproblem,
    StrongKind, SubDomain,
};

use crate::error::{Error, Result};
use crate::fem::{apply_dirichlet, SparseMatrix, TripletBuilder};
use crate::interface::Flavor;
use crate::solve::{
    condition_number, minres, random_guess, Factorization, MinresOptions, MinresResult, Spectrum,
    SpectrumOptions,
};

/// Physical and experimental parameters. The slip coefficient
/// `D = alpha_bjs * sqrt(mu / perm)` is derived on demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterSet {
    /// Fluid viscosity.
    pub mu: f64,
    /// Hydraulic conductivity `K`.
    pub perm: f64,
    pub alpha_bjs: f64,
    /// Second Lame constant; `f64::INFINITY` drops the penalty block.
    pub eta: f64,
    /// Time-step coupling weight.
    pub k: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self {
            mu: 1.0,
            perm: 1.0,
            alpha_bjs: 1.0,
            eta: f64::INFINITY,
            k: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
        }
    }
}

impl ParameterSet {
    pub fn slip(&self) -> f64 {
        self.alpha_bjs * (self.mu / self.perm).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("mu", self.mu),
            ("K", self.perm),
            ("alpha_bjs", self.alpha_bjs),
            ("k", self.k),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ndof: usize,
}

impl Field {
    pub fn new(name: &str, ndof: usize) -> Self {
        Self {
            name: name.to_string(),
            ndof,
        }
    }
}

/// Square block matrix over named fields.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub fields: Vec<Field>,
    blocks: BTreeMap<(usize, usize), SparseMatrix>,
}

impl BlockOperator {
    pub fn new(fields: Vec<Field>) -> Self {
        Self {
            fields,
            blocks: BTreeMap::new(),
        }
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for f in &self.fields {
            off.push(off.last().unwrap() + f.ndof);
        }
        off
    }

    pub fn dim(&self) -> usize {
        self.fields.iter().map(|f| f.ndof).sum()
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// Adds `m` to block `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, m: SparseMatrix) -> Result<()> {
        if m.nrows() != self.fields[i].ndof || m.ncols() != self.fields[j].ndof {
            return Err(Error::DimensionMismatch(format!(
                "block ({}, {}) expects {}x{}, got {}x{}",
                self.fields[i].name,
                self.fields[j].name,
                self.fields[i].ndof,
                self.fields[j].ndof,
                m.nrows(),
                m.ncols()
            )));
        }
        let entry = match self.blocks.remove(&(i, j)) {
            Some(old) => old.add_scaled(&m, 1.0)?,
            None => m,
        };
        self.blocks.insert((i, j), entry);
        Ok(())
    }

    /// Puts `b` at `(i, j)` and its transpose at `(j, i)`.
    pub fn add_coupling(&mut self, i: usize, j: usize, b: SparseMatrix) -> Result<()> {
        let bt = b.transpose();
        self.add(i, j, b)?;
        self.add(j, i, bt)
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&SparseMatrix> {
        self.blocks.get(&(i, j))
    }

    pub fn to_matrix(&self) -> SparseMatrix {
        let off = self.offsets();
        let n = self.dim();
        let nnz = self.blocks.values().map(|b| b.nnz()).sum();
        let mut t = TripletBuilder::with_capacity(n, n, nnz);
        for (&(i, j), b) in &self.blocks {
            t.add_matrix(b, off[i], off[j], 1.0);
        }
        t.build()
    }
}

/// An assembled problem: operator, block-diagonal preconditioner matrix,
/// right-hand side and bookkeeping for constraints and kernels.
#[derive(Clone, Debug)]
pub struct SystemBundle {
    pub problem: String,
    pub fields: Vec<Field>,
    /// Operator before boundary conditions.
    pub operator: BlockOperator,
    /// Monolithic operator with Dirichlet rows/columns eliminated.
    pub a: SparseMatrix,
    /// Monolithic preconditioner matrix (the Riesz map, not its inverse).
    pub precond: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Global indices of strongly constrained dofs.
    pub constrained: Vec<usize>,
    /// Kernel (or near-kernel) vector to deflate, if any.
    pub deflation: Option<Vec<f64>>,
    /// Discrete field the right-hand side was generated from.
    pub reference: Option<Vec<f64>>,
}

/// Ingredients collected by the builders.
pub(crate) struct Assembly {
    pub problem: String,
    pub op: BlockOperator,
    pub prec: BlockOperator,
    /// Constrained dofs per field (local numbering).
    pub constrained: Vec<Vec<usize>>,
    pub deflation: Option<Vec<f64>>,
}

impl Assembly {
    pub fn new(problem: &str, fields: Vec<Field>) -> Self {
        let n = fields.len();
        Self {
            problem: problem.to_string(),
            op: BlockOperator::new(fields.clone()),
            prec: BlockOperator::new(fields),
            constrained: vec![Vec::new(); n],
            deflation: None,
        }
    }

    fn global_constrained(&self) -> Vec<usize> {
        let off = self.op.offsets();
        let mut out: Vec<usize> = self
            .constrained
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                let o = off[i];
                c.iter().map(move |&d| o + d)
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Finalizes with right-hand side `A x*` for the given reference
    /// field (its constrained entries are zeroed first).
    pub fn finish_with_reference(self, mut reference: Vec<f64>) -> Result<SystemBundle> {
        let constrained = self.global_constrained();
        for &d in &constrained {
            reference[d] = 0.0;
        }
        let mut bundle = self.finish(None)?;
        bundle.rhs = bundle.a.mul_vec(&reference);
        bundle.reference = Some(reference);
        Ok(bundle)
    }

    /// Finalizes with an explicit right-hand side and Dirichlet values
    /// (`None` means homogeneous data and a zero right-hand side).
    pub fn finish(self, data: Option<(Vec<f64>, Vec<f64>)>) -> Result<SystemBundle> {
        let constrained = self.global_constrained();
        let n = self.op.dim();
        let mut a = self.op.to_matrix();
        let (mut rhs, full_values) = data.unwrap_or_else(|| (vec![0.0; n], vec![0.0; n]));
        if rhs.len() != n || full_values.len() != n {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let values: Vec<f64> = constrained.iter().map(|&d| full_values[d]).collect();
        apply_dirichlet(&mut a, &mut rhs, &constrained, &values)?;
        let mut mask = vec![false; n];
        constrained.iter().for_each(|&d| mask[d] = true);
        let precond = self.prec.to_matrix().constrain(&mask, &mask, Some(1.0));
        let deflation = self.deflation.map(|mut z| {
            constrained.iter().for_each(|&d| z[d] = 0.0);
            z
        });
        Ok(SystemBundle {
            problem: self.problem,
            fields: self.op.fields.clone(),
            operator: self.op,
            a,
            precond,
            rhs,
            constrained,
            deflation,
            reference: None,
        })
    }
}

impl SystemBundle {
    pub fn ndof(&self) -> usize {
        self.a.nrows()
    }

    /// Dofs not fixed by Dirichlet conditions.
    pub fn free_dofs(&self) -> Vec<usize> {
        let mut mask = vec![true; self.ndof()];
        self.constrained.iter().for_each(|&d| mask[d] = false);
        (0..self.ndof()).filter(|&i| mask[i]).collect()
    }

    pub fn field_offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for f in &self.fields {
            off.push(off.last().unwrap() + f.ndof);
        }
        off
    }

    /// Slice of `x` belonging to field `name`.
    pub fn field_values<'a>(&self, x: &'a [f64], name: &str) -> Option<&'a [f64]> {
        let i = self.fields.iter().position(|f| f.name == name)?;
        let off = self.field_offsets();
        Some(&x[off[i]..off[i + 1]])
    }

    pub fn factorize_precond(&self) -> Result<Factorization> {
        Factorization::cholesky(&self.precond)
    }

    /// Preconditioned MinRes from a seeded random initial guess. With
    /// `deflate`, the right-hand side is projected onto the range of a
    /// singular operator and the iterate starts orthogonal to the kernel.
    pub fn solve(&self, opts: &MinresOptions, deflate: bool) -> Result<MinresResult> {
        let fact = self.factorize_precond()?;
        self.solve_with(&fact, opts, deflate)
    }

    pub fn solve_with(&self, fact: &Factorization, opts: &MinresOptions, deflate: bool) -> Result<MinresResult> {
        let mut x0 = random_guess(self.ndof(), opts.seed);
        for &d in &self.constrained {
            x0[d] = self.rhs[d];
        }
        let mut b = self.rhs.clone();
        if deflate {
            if let Some(z) = &self.deflation {
                let zz: f64 = z.iter().map(|v| v * v).sum();
                let c: f64 = z.iter().zip(&b).map(|(z, b)| z * b).sum::<f64>() / zz;
                b.iter_mut().zip(z).for_each(|(b, z)| *b -= c * z);
                let nz = self.precond.mul_vec(z);
                let c = nz.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>()
                    / nz.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
                x0.iter_mut().zip(z).for_each(|(x, z)| *x -= c * z);
            }
        }
        minres(&self.a, &b, x0, |r| fact.solve(r), opts)
    }

    /// Condition number of the preconditioned operator on the free dofs,
    /// optionally on the complement of the deflation vector.
    pub fn condition(&self, opts: &SpectrumOptions, deflate: bool) -> Result<Spectrum> {
        let free = self.free_dofs();
        let z = if deflate { self.deflation.as_deref() } else { None };
        if deflate && z.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{} has no deflation vector",
                self.problem
            )));
        }
        condition_number(&self.a, &self.precond, Some(&free), z, opts)
    }
}

/// Preconditioner variants across all problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Precond {
    /// Default robust preconditioner of the problem.
    Robust,
    /// Literal naive Darcy-Stokes preconditioner.
    Naive,
    Free,
    Zero00,
    N0,
    T0,
    Nd,
    Dd,
    Nn,
}

impl Precond {
    pub fn flavor(self) -> Option<Flavor> {
        match self {
            Precond::Free => Some(Flavor::Free),
            Precond::Zero00 => Some(Flavor::Zero00),
            _ => None,
        }
    }
}

impl fmt::Display for Precond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Precond::Robust => "robust",
            Precond::Naive => "naive",
            Precond::Free => "free",
            Precond::Zero00 => "zero00",
            Precond::N0 => "n0",
            Precond::T0 => "t0",
            Precond::Nd => "nd",
            Precond::Dd => "dd",
            Precond::Nn => "nn",
        };
        f.write_str(s)
    }
}

impl FromStr for Precond {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "robust" => Precond::Robust,
            "naive" => Precond::Naive,
            "free" => Precond::Free,
            "zero00" | "00" => Precond::Zero00,
            "n0" => Precond::N0,
            "t0" => Precond::T0,
            "nd" => Precond::Nd,
            "dd" => Precond::Dd,
            "nn" => Precond::Nn,
            other => return Err(Error::InvalidArgument(format!("unknown preconditioner '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcMode {
    /// Interface meets only Neumann boundaries.
    Mixed,
    /// Dirichlet conditions on every outer side.
    AllDirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoissonCase {
    Nd,
    Dd,
    Nn,
}

/// Problem identifiers understood by the experiment driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    PoissonNd,
    PoissonDd,
    PoissonNn,
    DarcyStokes,
    DarcyStokesDirichlet,
    StokesSub,
    DarcySub,
    NavierSub,
    StokesNavier,
    StokesNavierDirichlet,
}

impl Problem {
    pub const ALL: [Problem; 10] = [
        Problem::PoissonNd,
        Problem::PoissonDd,
        Problem::PoissonNn,
        Problem::DarcyStokes,
        Problem::DarcyStokesDirichlet,
        Problem::StokesSub,
        Problem::DarcySub,
        Problem::NavierSub,
        Problem::StokesNavier,
        Problem::StokesNavierDirichlet,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Problem::PoissonNd => "poisson-nd",
            Problem::PoissonDd => "poisson-dd",
            Problem::PoissonNn => "poisson-nn",
            Problem::DarcyStokes => "darcy-stokes",
            Problem::DarcyStokesDirichlet => "darcy-stokes-dirichlet",
            Problem::StokesSub => "stokes-sub",
            Problem::DarcySub => "darcy-sub",
            Problem::NavierSub => "navier-sub",
            Problem::StokesNavier => "stokes-navier",
            Problem::StokesNavierDirichlet => "stokes-navier-dirichlet",
        }
    }

    /// Preconditioner used when none is requested.
    pub fn default_precond(self) -> Precond {
        match self {
            Problem::PoissonNd => Precond::Nd,
            Problem::PoissonDd => Precond::Dd,
            Problem::PoissonNn => Precond::Nn,
            Problem::StokesSub | Problem::NavierSub => Precond::Free,
            Problem::DarcySub => Precond::Zero00,
            _ => Precond::Robust,
        }
    }

    /// Builds the system at mesh size `h`.
    pub fn build(self, params: &ParameterSet, h: f64, precond: Precond) -> Result<SystemBundle> {
        params.validate()?;
        let bad = || {
            Err(Error::InvalidArgument(format!(
                "preconditioner {precond} does not apply to {}",
                self.id()
            )))
        };
        match self {
            Problem::PoissonNd | Problem::PoissonDd | Problem::PoissonNn => {
                let case = match self {
                    Problem::PoissonNd => PoissonCase::Nd,
                    Problem::PoissonDd => PoissonCase::Dd,
                    _ => PoissonCase::Nn,
                };
                let pc = match precond {
                    Precond::Nd => PoissonCase::Nd,
                    Precond::Dd => PoissonCase::Dd,
                    Precond::Nn => PoissonCase::Nn,
                    Precond::Robust => case,
                    _ => return bad(),
                };
                build_poisson_interface(params, h, case, pc)
            }
            Problem::DarcyStokes | Problem::DarcyStokesDirichlet => {
                let bc = if self == Problem::DarcyStokes { BcMode::Mixed } else { BcMode::AllDirichlet };
                match precond {
                    Precond::Robust | Precond::Naive => build_darcy_stokes(params, h, precond, bc),
                    _ => bad(),
                }
            }
            Problem::StokesSub | Problem::DarcySub => {
                let flavor = match precond {
                    Precond::Robust => self.default_precond().flavor().unwrap(),
                    p => match p.flavor() {
                        Some(f) => f,
                        None => return bad(),
                    },
                };
                if self == Problem::StokesSub {
                    build_stokes_subproblem(params, h, flavor, SubDomain::UnitSquare)
                } else {
                    build_darcy_subproblem(params, h, flavor, SubDomain::UnitSquare)
                }
            }
            Problem::NavierSub => {
                let p = if precond == Precond::Robust { Precond::Free } else { precond };
                match p {
                    Precond::Free | Precond::Zero00 | Precond::N0 | Precond::T0 => {
                        build_navier_subproblem(params, h, p, SubDomain::UnitSquare)
                    }
                    _ => bad(),
                }
            }
            Problem::StokesNavier | Problem::StokesNavierDirichlet => {
                if precond != Precond::Robust {
                    return bad();
                }
                let bc = if self == Problem::StokesNavier { BcMode::Mixed } else { BcMode::AllDirichlet };
                build_stokes_navier(params, h, bc)
            }
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem '{s}'")))
    }
}

/// Smooth reference fields used to generate right-hand sides.
pub(crate) mod reference {
    use std::f64::consts::PI;

    pub fn vector(x: [f64; 2]) -> [f64; 2] {
        [
            (PI * x[0]).sin() * (PI * x[1]).cos() + 0.5,
            (2.0 * PI * x[1]).sin() * (PI * x[0]).cos(),
        ]
    }

    pub fn scalar(x: [f64; 2]) -> [f64; 2] {
        [(PI * x[0]).cos() * (PI * x[1]).cos() + x[1], 0.0]
    }

    pub fn interface(y: f64) -> [f64; 2] {
        [(PI * y).sin() + 0.25, (2.0 * PI * y).cos()]
    }
}
