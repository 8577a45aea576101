//! Combinatorial sampling likelihoods for contingency tables.
//!
//! Exact multinomial and hypergeometric log-likelihoods (via log-gamma, so
//! population sizes far beyond factorial range stay representable), plus the
//! three-term large-population expansion of the log-hypergeometric whose
//! leading term is `-N * D(p || f)`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::table::{Distribution, Table};

/// Integer cell counts over a schema's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCounts {
    schema: Schema,
    counts: Vec<u64>,
}

impl SampleCounts {
    pub fn new(schema: Schema, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != schema.cell_count() {
            return Err(Error::InvalidSchema(format!(
                "expected {} counts, got {}",
                schema.cell_count(),
                counts.len()
            )));
        }
        Ok(SampleCounts { schema, counts })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total sample size `N`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Relative cell counts as a distribution.
    pub fn to_distribution(&self) -> Result<Distribution> {
        let cells: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        Table::new(self.schema.clone(), cells)?.normalize()
    }
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Log-probability of drawing `sample` from `N` multinomial trials with cell
/// probabilities `f`.
pub fn log_multinomial(sample: &SampleCounts, f: &Distribution) -> Result<f64> {
    if !sample.schema().same_domain(f.schema()) {
        return Err(Error::SchemaMismatch(
            "sample and reference must share a domain".into(),
        ));
    }
    let mut log_p = ln_factorial(sample.total());
    for (cell, (&n, &p)) in sample.counts().iter().zip(f.cells()).enumerate() {
        if n == 0 {
            continue;
        }
        if p <= 0.0 {
            return Err(Error::SupportViolation(cell));
        }
        log_p += n as f64 * p.ln() - ln_factorial(n);
    }
    Ok(log_p)
}

/// Log-probability of drawing `sample` without replacement from `population`.
pub fn log_hypergeometric(sample: &SampleCounts, population: &SampleCounts) -> Result<f64> {
    if !sample.schema().same_domain(population.schema()) {
        return Err(Error::SchemaMismatch(
            "sample and population must share a domain".into(),
        ));
    }
    let n = sample.total();
    let m = population.total();
    let mut log_p = -ln_binomial(m, n);
    for (cell, (&ni, &mi)) in sample.counts().iter().zip(population.counts()).enumerate() {
        if ni > mi {
            return Err(Error::InfeasibleSample {
                cell,
                sample: ni,
                population: mi,
            });
        }
        log_p += ln_binomial(mi, ni);
    }
    Ok(log_p)
}

/// Three-term expansion of `log_hypergeometric` for a population much larger
/// than the squared sample size:
///
/// `-N * D(p || f) - (|D| - 1)/2 * ln(2 pi N) - 1/2 * sum_cells ln p`
///
/// Higher-order remainder terms are dropped. `p` must be strictly positive;
/// unlike the exact likelihoods, `N * p` need not be integral here.
pub fn asymptotic_log_hypergeometric(p: &Distribution, f: &Distribution, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be at least 1".into()));
    }
    if let Some(cell) = p.cells().iter().position(|&c| c <= 0.0) {
        return Err(Error::NonpositiveCell(cell));
    }
    let divergence = p.i_divergence(f)?;
    let cells = p.cells().len() as f64;
    let n = n as f64;
    let log_sum: f64 = p.cells().iter().map(|&c| c.ln()).sum();
    Ok(-n * divergence - (cells - 1.0) / 2.0 * (2.0 * std::f64::consts::PI * n).ln() - 0.5 * log_sum)
}
