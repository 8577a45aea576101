//! Dense tables and probability distributions over product domains.
//!
//! A [`Table`] stores one non-negative real per cell, row-major in schema
//! order; it may hold counts or any other non-negative masses. A
//! [`Distribution`] is a table whose cells sum to one. Marginalization,
//! conditioning, outer products, pseudo-count regularization, and the
//! information divergence all live here.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::schema::Schema;

/// Tolerance for the unit-mass invariant of [`Distribution`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An ordered subset of schema variables, addressed by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalSpec(Vec<String>);

impl MarginalSpec {
    /// The spec must be non-empty and free of duplicates.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidSchema("empty marginal spec".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[i + 1..].contains(n) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate variable `{n}` in marginal spec"
                )));
            }
        }
        Ok(MarginalSpec(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    /// Resolves the names against `schema`, returning axis positions in
    /// schema order regardless of how the spec was written.
    pub(crate) fn resolve(&self, schema: &Schema) -> Result<Vec<usize>> {
        let mut axes = Vec::with_capacity(self.0.len());
        for name in &self.0 {
            match schema.index_of(name) {
                Some(i) => axes.push(i),
                None => return Err(Error::UnknownVariable(name.clone())),
            }
        }
        axes.sort_unstable();
        Ok(axes)
    }
}

/// Projected schema plus, for every cell of the parent, the index of the
/// marginal bucket it falls into. Shared by marginalization, conditioning,
/// and the IPF scaling loop.
pub(crate) fn bucket_map(schema: &Schema, axes: &[usize]) -> (Schema, Vec<usize>) {
    let projected = schema.project(axes);
    let pstrides = projected.strides();
    let mut digits = vec![0usize; schema.variables().len()];
    let mut map = vec![0usize; schema.cell_count()];
    for (cell, slot) in map.iter_mut().enumerate() {
        schema.decode(cell, &mut digits);
        *slot = axes
            .iter()
            .zip(&pstrides)
            .map(|(&ax, &st)| digits[ax] * st)
            .sum();
    }
    (projected, map)
}

/// Re-lays the cells of `src` out in the variable order of `onto`.
///
/// Both schemas must cover the same variables with identical level lists;
/// only the variable order may differ (an outer product, say, lists the
/// exposure first even when the parent schema does not).
pub(crate) fn aligned_cells(src: &Table, onto: &Schema) -> Result<Vec<f64>> {
    let sv = src.schema().variables();
    if sv.len() != onto.variables().len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} variables, found {}",
            onto.variables().len(),
            sv.len()
        )));
    }
    let mut positions = Vec::with_capacity(sv.len());
    for v in sv {
        let j = onto
            .index_of(&v.name)
            .ok_or_else(|| Error::SchemaMismatch(format!("variable `{}` missing", v.name)))?;
        if onto.variables()[j].levels != v.levels {
            return Err(Error::SchemaMismatch(format!(
                "levels of `{}` disagree",
                v.name
            )));
        }
        positions.push(j);
    }
    let onto_strides = onto.strides();
    let mut digits = vec![0usize; sv.len()];
    let mut out = vec![0.0; onto.cell_count()];
    for (cell, &value) in src.cells().iter().enumerate() {
        src.schema().decode(cell, &mut digits);
        let idx: usize = digits
            .iter()
            .zip(&positions)
            .map(|(&d, &p)| d * onto_strides[p])
            .sum();
        out[idx] = value;
    }
    Ok(out)
}

/// A dense non-negative table over the product of a schema's levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    cells: Vec<f64>,
}

impl Table {
    /// Cell count must match the schema's product domain; cells must be
    /// finite and non-negative.
    pub fn new(schema: Schema, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != schema.cell_count() {
            return Err(Error::InvalidSchema(format!(
                "expected {} cells, got {}",
                schema.cell_count(),
                cells.len()
            )));
        }
        for (i, &c) in cells.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidSchema(format!(
                    "cell {i} holds {c}, cells must be finite and non-negative"
                )));
            }
        }
        Ok(Table { schema, cells })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Total mass (`N` when the table holds counts).
    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Adds `epsilon` to every cell. Renormalization is the caller's business.
    pub fn regularize(&self, epsilon: f64) -> Table {
        assert!(epsilon >= 0.0, "pseudo-count must be non-negative");
        Table {
            schema: self.schema.clone(),
            cells: self.cells.iter().map(|&c| c + epsilon).collect(),
        }
    }

    /// Divides every cell by the total mass.
    pub fn normalize(&self) -> Result<Distribution> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let cells = self.cells.iter().map(|&c| c / total).collect();
        Distribution::new(Table {
            schema: self.schema.clone(),
            cells,
        })
    }
}

/// A [`Table`] normalized to unit mass: a point on the simplex over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    table: Table,
}

impl Deref for Distribution {
    type Target = Table;

    fn deref(&self) -> &Table {
        &self.table
    }
}

impl Distribution {
    /// Checks the unit-mass invariant (within [`MASS_TOLERANCE`]).
    pub fn new(table: Table) -> Result<Self> {
        let total = table.total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Distribution { table })
    }

    /// The uniform distribution over the schema's domain.
    pub fn uniform(schema: Schema) -> Distribution {
        let n = schema.cell_count();
        Distribution {
            table: Table {
                schema,
                cells: vec![1.0 / n as f64; n],
            },
        }
    }

    pub fn into_table(self) -> Table {
        self.table
    }

    /// The table of expected counts at study size `total`.
    pub fn to_counts(&self, total: f64) -> Table {
        Table {
            schema: self.schema().clone(),
            cells: self.cells().iter().map(|&c| c * total).collect(),
        }
    }

    /// Pseudo-count smoothing: adds `epsilon` mass to every cell and
    /// renormalizes, keeping every cell strictly positive for `epsilon > 0`.
    pub fn regularized(&self, epsilon: f64) -> Distribution {
        self.table
            .regularize(epsilon)
            .normalize()
            .expect("regularized distribution keeps positive mass")
    }

    /// Sums out every variable not listed in `keep`. Mass is preserved.
    pub fn marginalize(&self, keep: &MarginalSpec) -> Result<Distribution> {
        let axes = keep.resolve(self.schema())?;
        let (projected, map) = bucket_map(self.schema(), &axes);
        let mut cells = vec![0.0; projected.cell_count()];
        for (i, &v) in self.cells().iter().enumerate() {
            cells[map[i]] += v;
        }
        Ok(Distribution {
            table: Table {
                schema: projected,
                cells,
            },
        })
    }

    /// Divides each cell by the mass of its `given` group. The result lives
    /// on the full domain; the cells of any fixed group sum to one.
    pub fn condition(&self, given: &MarginalSpec) -> Result<Table> {
        let axes = given.resolve(self.schema())?;
        let (projected, map) = bucket_map(self.schema(), &axes);
        let mut groups = vec![0.0; projected.cell_count()];
        for (i, &v) in self.cells().iter().enumerate() {
            groups[map[i]] += v;
        }
        if let Some(g) = groups.iter().position(|&m| m <= 0.0) {
            return Err(Error::ConditioningOnNull(projected.describe_cell(g)));
        }
        let cells = self
            .cells()
            .iter()
            .enumerate()
            .map(|(i, &v)| v / groups[map[i]])
            .collect();
        Ok(Table {
            schema: self.schema().clone(),
            cells,
        })
    }

    /// Product distribution over the disjoint union of both variable sets,
    /// with `self`'s variables leading.
    pub fn outer_product(&self, other: &Distribution) -> Result<Distribution> {
        for v in self.schema().variables() {
            if other.schema().index_of(&v.name).is_some() {
                return Err(Error::OverlappingVariables(v.name.clone()));
            }
        }
        let mut variables = self.schema().variables().to_vec();
        variables.extend(other.schema().variables().iter().cloned());
        let event = self
            .schema()
            .event_level()
            .or(other.schema().event_level())
            .map(String::from);
        let reference = self
            .schema()
            .reference_exposure()
            .or(other.schema().reference_exposure())
            .map(String::from);
        let schema = Schema::from_parts(variables, event, reference);
        let mut cells = Vec::with_capacity(self.cells().len() * other.cells().len());
        for &a in self.cells() {
            for &b in other.cells() {
                cells.push(a * b);
            }
        }
        Ok(Distribution {
            table: Table { schema, cells },
        })
    }

    /// Information divergence (Kullback-Leibler) from `reference`, in nats,
    /// with the convention `0 * log(0/x) = 0`. Mass of `self` outside the
    /// support of `reference` yields `+inf`.
    pub fn i_divergence(&self, reference: &Distribution) -> Result<f64> {
        if !self.schema().same_domain(reference.schema()) {
            return Err(Error::SchemaMismatch(
                "divergence requires identical domains".into(),
            ));
        }
        let mut sum = 0.0;
        for (&p, &f) in self.cells().iter().zip(reference.cells()) {
            if p > 0.0 {
                if f <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                sum += p * (p / f).ln();
            }
        }
        // Gibbs' inequality holds exactly; rounding may leave a tiny negative.
        Ok(sum.max(0.0))
    }
}
