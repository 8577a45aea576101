//! Deterministic table generators shared by the benchmark targets.

use deconfound_core::schema::{Role, Schema, Variable};
use deconfound_core::table::{Distribution, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A study schema with one confounder of the given cardinality.
pub fn study_schema(confounder_levels: usize) -> Schema {
    let levels: Vec<String> = (0..confounder_levels).map(|i| format!("s{i}")).collect();
    Schema::new(
        vec![
            Variable::new("outcome", ["no event", "event"], Role::Outcome),
            Variable::new("arm", ["control", "exposed"], Role::Exposure),
            Variable::new("profile", levels, Role::Confounder),
        ],
        "event",
        "control",
    )
    .expect("valid schema")
}

/// Strictly positive random distribution over the schema.
pub fn dense_study(seed: u64, schema: &Schema) -> Distribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<f64> = (0..schema.cell_count())
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    Table::new(schema.clone(), cells)
        .expect("valid cells")
        .normalize()
        .expect("positive mass")
}

/// Observational-study shape: 12 confounder profiles with sampling zeros.
pub fn sparse_study(seed: u64) -> Distribution {
    let schema = study_schema(12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<f64> = (0..schema.cell_count())
        .map(|_| {
            let v: f64 = rng.random_range(0.0..1.0);
            if v < 0.15 {
                0.0
            } else {
                v
            }
        })
        .collect();
    Table::new(schema, cells)
        .expect("valid cells")
        .normalize()
        .expect("positive mass")
}
