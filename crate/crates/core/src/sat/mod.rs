//! Fitness landscapes over binary genomes.

mod dimacs;
mod generator;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use dimacs::{emit_dimacs, emit_dimacs_with_comments, parse_dimacs, read_dimacs_file};
pub use generator::{distinct_clause_capacity, gen_uniform_ksat, uniform_clause_count};

/// A possibly negated variable. Packed as `variable << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub fn new(variable: usize, negated: bool) -> Self {
        let variable = u32::try_from(variable).expect("variable index exceeds u32");
        Literal(variable << 1 | u32::from(negated))
    }

    /// Literal from a 1-based signed DIMACS integer.
    pub fn from_dimacs(value: i64) -> Self {
        debug_assert!(value != 0);
        Literal::new(value.unsigned_abs() as usize - 1, value < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.variable() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn variable(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn is_satisfied_by(self, bits: &[u8]) -> bool {
        (bits[self.variable()] ^ (self.0 & 1) as u8) == 1
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A fixed-length binary vector: one individual, one candidate assignment.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Genome(Vec<u8>);

impl Genome {
    /// Panics if any element is not 0 or 1.
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "genome bits must be 0 or 1");
        Genome(bits)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Genome(bits.iter().map(|&b| u8::from(b)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Genome(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn flip(&mut self, position: usize) {
        self.0[position] ^= 1;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn hamming(&self, other: &Genome) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        write!(f, "Genome({s})")
    }
}

impl From<Vec<u8>> for Genome {
    fn from(bits: Vec<u8>) -> Self {
        Genome::new(bits)
    }
}

/// A CNF formula over `num_variables` Boolean variables.
///
/// Invariants, checked on construction: every literal's variable is in
/// range, no clause repeats a variable, no clause is empty, and no two
/// clauses contain the same set of literals.
#[derive(Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_variables: usize,
    literals: Vec<Literal>,
    // clause c spans literals[starts[c]..starts[c + 1]]
    starts: Vec<u32>,
    // variable -> clauses containing it
    occurrences: Vec<Vec<u32>>,
}

impl CnfInstance {
    pub fn new(num_variables: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        if num_variables == 0 {
            return Err(Error::InvalidParameter(
                "an instance needs at least one variable".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        let mut literals = Vec::with_capacity(clauses.iter().map(Vec::len).sum());
        let mut starts = Vec::with_capacity(clauses.len() + 1);
        let mut occurrences = vec![Vec::new(); num_variables];
        starts.push(0);
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::EmptyClause { clause: c });
            }
            let mut key = clause.clone();
            key.sort_unstable();
            for (i, lit) in key.iter().enumerate() {
                if lit.variable() >= num_variables {
                    return Err(Error::VariableOutOfRange {
                        var: lit.variable(),
                        num_variables,
                    });
                }
                if i > 0 && key[i - 1].variable() == lit.variable() {
                    return Err(Error::DuplicateVariable {
                        clause: c,
                        var: lit.variable(),
                    });
                }
            }
            if !seen.insert(key) {
                return Err(Error::DuplicateClause { clause: c });
            }
            for lit in clause {
                occurrences[lit.variable()].push(c as u32);
            }
            literals.extend_from_slice(clause);
            starts.push(literals.len() as u32);
        }
        Ok(CnfInstance {
            num_variables,
            literals,
            starts,
            occurrences,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn num_clauses(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn clause(&self, index: usize) -> &[Literal] {
        &self.literals[self.starts[index] as usize..self.starts[index + 1] as usize]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Literal]> + '_ {
        (0..self.num_clauses()).map(move |c| self.clause(c))
    }

    /// Clause size when every clause has the same length.
    pub fn uniform_clause_size(&self) -> Option<usize> {
        let mut sizes = self.clauses().map(<[Literal]>::len);
        let first = sizes.next()?;
        sizes.all(|s| s == first).then_some(first)
    }

    #[inline]
    fn clause_satisfied(&self, index: usize, bits: &[u8]) -> bool {
        self.clause(index).iter().any(|l| l.is_satisfied_by(bits))
    }

    pub fn satisfied_count(&self, genome: &Genome) -> Result<usize> {
        self.check_len(genome)?;
        Ok(self.satisfied_count_unchecked(genome.bits()))
    }

    fn satisfied_count_unchecked(&self, bits: &[u8]) -> usize {
        (0..self.num_clauses())
            .filter(|&c| self.clause_satisfied(c, bits))
            .count()
    }

    /// Change in the number of satisfied clauses between `parent` and
    /// `child`, where the two differ exactly at `flipped` positions. Only
    /// clauses touching a flipped variable are re-examined.
    pub fn satisfied_delta(&self, parent: &Genome, child: &Genome, flipped: &[usize]) -> i64 {
        let mut touched: Vec<u32> = flipped
            .iter()
            .flat_map(|&v| self.occurrences[v].iter().copied())
            .collect();
        if flipped.len() > 1 {
            touched.sort_unstable();
            touched.dedup();
        }
        touched
            .into_iter()
            .map(|c| {
                let before = self.clause_satisfied(c as usize, parent.bits());
                let after = self.clause_satisfied(c as usize, child.bits());
                i64::from(after) - i64::from(before)
            })
            .sum()
    }

    fn check_len(&self, genome: &Genome) -> Result<()> {
        if genome.len() != self.num_variables {
            return Err(Error::Dimension {
                expected: self.num_variables,
                found: genome.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for CnfInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CnfInstance")
            .field("num_variables", &self.num_variables)
            .field("num_clauses", &self.num_clauses())
            .finish()
    }
}

/// Fraction of clauses satisfied by `genome`. An instance without clauses
/// has fitness 1.
pub fn eval_maxsat(instance: &CnfInstance, genome: &Genome) -> Result<f64> {
    let satisfied = instance.satisfied_count(genome)?;
    Ok(clause_fraction(satisfied, instance.num_clauses()))
}

#[inline]
fn clause_fraction(satisfied: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        satisfied as f64 / total as f64
    }
}

/// 1 when the genome holds an even number of ones, 0 otherwise.
pub fn eval_parity(genome: &Genome) -> f64 {
    if genome.count_ones() % 2 == 0 {
        1.0
    } else {
        0.0
    }
}

/// A fitness landscape `{0,1}^n -> [0,1]`.
#[derive(Clone, Debug)]
pub enum FitnessFn {
    MaxSat(Arc<CnfInstance>),
    EvenParity { num_variables: usize },
}

impl FitnessFn {
    pub fn max_sat(instance: CnfInstance) -> Self {
        FitnessFn::MaxSat(Arc::new(instance))
    }

    pub fn even_parity(num_variables: usize) -> Self {
        FitnessFn::EvenParity { num_variables }
    }

    pub fn num_variables(&self) -> usize {
        match self {
            FitnessFn::MaxSat(instance) => instance.num_variables(),
            FitnessFn::EvenParity { num_variables } => *num_variables,
        }
    }

    pub fn evaluate(&self, genome: &Genome) -> Result<f64> {
        if genome.len() != self.num_variables() {
            return Err(Error::Dimension {
                expected: self.num_variables(),
                found: genome.len(),
            });
        }
        Ok(match self {
            FitnessFn::MaxSat(instance) => clause_fraction(
                instance.satisfied_count_unchecked(genome.bits()),
                instance.num_clauses(),
            ),
            FitnessFn::EvenParity { .. } => eval_parity(genome),
        })
    }

    /// Fitness of `child`, which equals `parent` with the `flipped` positions
    /// inverted. Produces exactly the value `evaluate(child)` would.
    pub fn evaluate_mutant(
        &self,
        parent: &Genome,
        parent_fitness: f64,
        child: &Genome,
        flipped: &[usize],
    ) -> f64 {
        match self {
            FitnessFn::MaxSat(instance) => {
                let m = instance.num_clauses();
                if m == 0 {
                    return 1.0;
                }
                let parent_count = (parent_fitness * m as f64).round() as i64;
                let count = parent_count + instance.satisfied_delta(parent, child, flipped);
                clause_fraction(count as usize, m)
            }
            FitnessFn::EvenParity { .. } => {
                if flipped.len() % 2 == 0 {
                    parent_fitness
                } else {
                    1.0 - parent_fitness
                }
            }
        }
    }
}
