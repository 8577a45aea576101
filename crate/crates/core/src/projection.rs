//! I-projection engine (iterative proportional fitting) and the named
//! projections built on it.
//!
//! [`ipf_project`] minimizes the information divergence from a seed subject to
//! a family of marginal constraints by cyclic proportional scaling. On top of
//! it sit the de-confounding projection ([`pr_projection`]), its
//! disparity-controlled relaxation ([`dp_projection`]), the maximum-entropy
//! logistic fit ([`logit_maxent`]), and the closed-form parity-preserving
//! rescaling of a fitted logit ([`parity_logit`]).

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::table::{aligned_cells, bucket_map, Distribution, MarginalSpec, Table};

/// A marginal target: the projection must reproduce `target` when
/// marginalized onto `spec`.
#[derive(Debug, Clone)]
pub struct MarginalConstraint {
    spec: MarginalSpec,
    target: Distribution,
}

impl MarginalConstraint {
    /// The target must range over exactly the spec's variables (any order).
    pub fn new(spec: MarginalSpec, target: Distribution) -> Result<Self> {
        let target_vars = target.schema().variables();
        if target_vars.len() != spec.names().len()
            || spec
                .names()
                .iter()
                .any(|n| target.schema().index_of(n).is_none())
        {
            return Err(Error::InvalidConstraint(format!(
                "target variables do not match spec {:?}",
                spec.names()
            )));
        }
        Ok(MarginalConstraint { spec, target })
    }

    pub fn spec(&self) -> &MarginalSpec {
        &self.spec
    }

    pub fn target(&self) -> &Distribution {
        &self.target
    }
}

/// IPF solver parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Convergence threshold on the max-abs marginal residual, measured after
    /// each full sweep.
    pub tolerance: f64,
    /// Maximum number of full sweeps over the constraint family.
    pub max_iterations: usize,
    /// Pseudo-mass added to every seed cell (relative to unit total mass)
    /// before projecting, so sampling zeros stay on the simplex interior.
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: 10_000,
            epsilon: 1e-12,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Mixing weight for the disparity-controlled projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta(f64);

impl Delta {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidDelta(value));
        }
        Ok(Delta(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Converged (or abandoned) projection plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub distribution: Distribution,
    /// Full sweeps performed.
    pub iterations: usize,
    /// Max-abs marginal residual at exit.
    pub residual: f64,
    /// `D(result || seed)` in nats.
    pub divergence_from_seed: f64,
    /// False when `max_iterations` ran out first; the caller decides what a
    /// stale result is worth.
    pub converged: bool,
}

struct Prepared {
    map: Vec<usize>,
    target: Vec<f64>,
    buckets: usize,
}

/// Projects `seed` onto the constraint family by cyclic proportional scaling.
///
/// Each sweep visits the constraints in the given order and rescales every
/// cell by `target(bucket) / current_marginal(bucket)`. The fixed point is the
/// I-projection of the seed; constraint order only affects the iteration
/// count and which constraint is satisfied exactly at exit (the last one).
/// Non-convergence is reported through [`ProjectionResult::converged`], not
/// as an error.
pub fn ipf_project(
    seed: &Distribution,
    constraints: &[MarginalConstraint],
    cfg: &SolverConfig,
) -> Result<ProjectionResult> {
    cfg.validate()?;
    let schema = seed.schema();

    let mut prepared = Vec::with_capacity(constraints.len());
    for c in constraints {
        let axes = c.spec.resolve(schema)?;
        let (projected, map) = bucket_map(schema, &axes);
        let target = aligned_cells(&c.target, &projected)
            .map_err(|e| Error::InvalidConstraint(e.to_string()))?;
        let buckets = projected.cell_count();
        prepared.push(Prepared { map, target, buckets });
    }

    let mut cells = seed.cells().to_vec();
    let mut sums: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut residual = 0.0_f64;
    let mut converged = constraints.is_empty();

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        for pc in &prepared {
            sums.clear();
            sums.resize(pc.buckets, 0.0);
            for (i, &v) in cells.iter().enumerate() {
                sums[pc.map[i]] += v;
            }
            for (i, cell) in cells.iter_mut().enumerate() {
                let g = pc.map[i];
                let mass = sums[g];
                if mass > 0.0 {
                    *cell *= pc.target[g] / mass;
                }
                // A zero-mass bucket facing a positive target cannot be
                // scaled; the residual stays above tolerance and the run
                // ends as not converged.
            }
        }

        residual = 0.0;
        for pc in &prepared {
            sums.clear();
            sums.resize(pc.buckets, 0.0);
            for (i, &v) in cells.iter().enumerate() {
                sums[pc.map[i]] += v;
            }
            for (g, &t) in pc.target.iter().enumerate() {
                residual = residual.max((sums[g] - t).abs());
            }
        }
        converged = residual <= cfg.tolerance;
    }

    let total: f64 = cells.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConstraint(
            "seed support is disjoint from the constraint targets".into(),
        ));
    }
    if (total - 1.0).abs() > 1e-13 {
        // Mass leaks only when a positive target met an empty bucket; keep
        // the reported distribution well-formed for diagnostics.
        for c in &mut cells {
            *c /= total;
        }
    }

    let distribution = Distribution::new(Table::new(schema.clone(), cells)?)?;
    let divergence_from_seed = distribution.i_divergence(seed)?;
    Ok(ProjectionResult {
        distribution,
        iterations,
        residual,
        divergence_from_seed,
        converged,
    })
}

struct StudySpecs {
    exposure: MarginalSpec,
    confounders: MarginalSpec,
    outcome_confounders: MarginalSpec,
    exposure_confounders: MarginalSpec,
}

fn study_specs(schema: &Schema) -> Result<StudySpecs> {
    let outcome = schema
        .outcome_index()
        .ok_or_else(|| Error::InvalidSchema("no outcome variable".into()))?;
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let confounders = schema.confounder_indices();
    if confounders.is_empty() {
        return Err(Error::InvalidSchema(
            "at least one confounder variable is required".into(),
        ));
    }
    let name = |i: usize| schema.variables()[i].name.clone();
    let s_names: Vec<String> = confounders.iter().map(|&i| name(i)).collect();
    Ok(StudySpecs {
        exposure: MarginalSpec::new([name(exposure)])?,
        confounders: MarginalSpec::new(s_names.clone())?,
        outcome_confounders: MarginalSpec::new(
            std::iter::once(name(outcome)).chain(s_names.clone()),
        )?,
        exposure_confounders: MarginalSpec::new(
            std::iter::once(name(exposure)).chain(s_names),
        )?,
    })
}

/// Projection of `f` onto the confounding-free scenario: the exposure and
/// confounder profiles become independent (their joint marginal turns into
/// the product of the observed one-way marginals) while the joint
/// outcome-confounder marginal stays as observed. The seed is `f` smoothed by
/// `cfg.epsilon`, and the constraint targets are recomputed from the smoothed
/// seed so the family is exactly consistent.
pub fn pr_projection(f: &Distribution, cfg: &SolverConfig) -> Result<ProjectionResult> {
    cfg.validate()?;
    let specs = study_specs(f.schema())?;
    let f_reg = f.regularized(cfg.epsilon);
    let parity = f_reg
        .marginalize(&specs.exposure)?
        .outer_product(&f_reg.marginalize(&specs.confounders)?)?;
    let realism = f_reg.marginalize(&specs.outcome_confounders)?;
    // The exposure-confounder constraint runs last in each sweep so the
    // exposure and confounder marginals are exact at exit.
    let constraints = [
        MarginalConstraint::new(specs.outcome_confounders, realism)?,
        MarginalConstraint::new(specs.exposure_confounders, parity)?,
    ];
    ipf_project(&f_reg, &constraints, cfg)
}

/// Disparity-controlled projection: like [`pr_projection`] but the
/// exposure-confounder target is the delta-mixture of the parity product and
/// the observed joint marginal. `delta = 0` reproduces the (smoothed) input;
/// `delta = 1` is the full parity projection.
pub fn dp_projection(f: &Distribution, delta: Delta, cfg: &SolverConfig) -> Result<ProjectionResult> {
    cfg.validate()?;
    let specs = study_specs(f.schema())?;
    let f_reg = f.regularized(cfg.epsilon);
    let observed = f_reg.marginalize(&specs.exposure_confounders)?;
    let parity = f_reg
        .marginalize(&specs.exposure)?
        .outer_product(&f_reg.marginalize(&specs.confounders)?)?;
    let parity_cells = aligned_cells(&parity, observed.schema())?;
    let d = delta.value();
    let mixed: Vec<f64> = observed
        .cells()
        .iter()
        .zip(&parity_cells)
        .map(|(&o, &p)| d * p + (1.0 - d) * o)
        .collect();
    let mixture = Distribution::new(Table::new(observed.schema().clone(), mixed)?)?;
    let realism = f_reg.marginalize(&specs.outcome_confounders)?;
    let constraints = [
        MarginalConstraint::new(specs.outcome_confounders, realism)?,
        MarginalConstraint::new(specs.exposure_confounders, mixture)?,
    ];
    ipf_project(&f_reg, &constraints, cfg)
}

/// Maximum-entropy logistic fit: the distribution closest to uniform that
/// reproduces the outcome-exposure marginal, each pairwise outcome-confounder
/// marginal, and the full joint predictor marginal of (the smoothed) `f`.
pub fn logit_maxent(f: &Distribution, cfg: &SolverConfig) -> Result<ProjectionResult> {
    cfg.validate()?;
    let schema = f.schema();
    let outcome = schema
        .outcome_index()
        .ok_or_else(|| Error::InvalidSchema("no outcome variable".into()))?;
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let confounders = schema.confounder_indices();
    if confounders.is_empty() {
        return Err(Error::InvalidSchema(
            "at least one confounder variable is required".into(),
        ));
    }
    let name = |i: usize| schema.variables()[i].name.clone();

    let f_reg = f.regularized(cfg.epsilon);
    let mut constraints = Vec::with_capacity(confounders.len() + 2);
    let yx = MarginalSpec::new([name(outcome), name(exposure)])?;
    constraints.push(MarginalConstraint::new(yx.clone(), f_reg.marginalize(&yx)?)?);
    for &s in &confounders {
        let ys = MarginalSpec::new([name(outcome), name(s)])?;
        constraints.push(MarginalConstraint::new(ys.clone(), f_reg.marginalize(&ys)?)?);
    }
    // One joint predictor constraint over exposure and all confounders, last
    // in the sweep so the predictor joint is exact at exit.
    let xs = MarginalSpec::new(
        std::iter::once(name(exposure)).chain(confounders.iter().map(|&s| name(s))),
    )?;
    constraints.push(MarginalConstraint::new(xs.clone(), f_reg.marginalize(&xs)?)?);

    ipf_project(&Distribution::uniform(schema.clone()), &constraints, cfg)
}

/// Closed-form parity rescaling of a fitted logit: keeps the conditional
/// outcome distribution of `l` given every predictor profile and replaces the
/// predictor joint with the parity product of `f`'s one-way marginals.
pub fn parity_logit(l: &Distribution, f: &Distribution) -> Result<Distribution> {
    if !l.schema().same_domain(f.schema()) {
        return Err(Error::SchemaMismatch(
            "logit and study distributions must share a domain".into(),
        ));
    }
    let specs = study_specs(l.schema())?;
    let conditional = l.condition(&specs.exposure_confounders)?;
    let product = f
        .marginalize(&specs.exposure)?
        .outer_product(&f.marginalize(&specs.confounders)?)?;
    let axes = specs.exposure_confounders.resolve(l.schema())?;
    let (projected, map) = bucket_map(l.schema(), &axes);
    let weights = aligned_cells(&product, &projected)?;
    let cells: Vec<f64> = conditional
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| c * weights[map[i]])
        .collect();
    Distribution::new(Table::new(l.schema().clone(), cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators;
    use crate::schema::{Role, Variable};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn study_schema(outcome: &[&str], exposure: &[&str], sites: &[&str]) -> Schema {
        Schema::new(
            vec![
                Variable::new("outcome", outcome.to_vec(), Role::Outcome),
                Variable::new("arm", exposure.to_vec(), Role::Exposure),
                Variable::new("site", sites.to_vec(), Role::Confounder),
            ],
            outcome[1],
            exposure[0],
        )
        .unwrap()
    }

    fn ideal() -> Distribution {
        let schema = study_schema(&["no event", "event"], &["control", "intervention"], &["A", "B"]);
        Table::new(
            schema,
            vec![145.0, 55.0, 95.0, 5.0, 5.0, 95.0, 55.0, 145.0],
        )
        .unwrap()
        .normalize()
        .unwrap()
    }

    fn random_positive(rng: &mut ChaCha8Rng, schema: &Schema) -> Distribution {
        let cells: Vec<f64> = (0..schema.cell_count())
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        Table::new(schema.clone(), cells).unwrap().normalize().unwrap()
    }

    /// Parity holds by construction: p(y,x,s) = c(y|x,s) * a(x) * b(s).
    fn random_parity(rng: &mut ChaCha8Rng, schema: &Schema) -> Distribution {
        let card: Vec<usize> = schema.variables().iter().map(|v| v.levels.len()).collect();
        let (cy, cx, cs) = (card[0], card[1], card[2..].iter().product::<usize>());
        let mut a: Vec<f64> = (0..cx).map(|_| rng.random_range(0.05..1.0)).collect();
        let ta: f64 = a.iter().sum();
        a.iter_mut().for_each(|v| *v /= ta);
        let mut b: Vec<f64> = (0..cs).map(|_| rng.random_range(0.05..1.0)).collect();
        let tb: f64 = b.iter().sum();
        b.iter_mut().for_each(|v| *v /= tb);
        let mut cells = vec![0.0; cy * cx * cs];
        for x in 0..cx {
            for s in 0..cs {
                let mut c: Vec<f64> = (0..cy).map(|_| rng.random_range(0.05..1.0)).collect();
                let tc: f64 = c.iter().sum();
                c.iter_mut().for_each(|v| *v /= tc);
                for (y, &cv) in c.iter().enumerate() {
                    cells[y * cx * cs + x * cs + s] = cv * a[x] * b[s];
                }
            }
        }
        Table::new(schema.clone(), cells).unwrap().normalize().unwrap()
    }

    #[test]
    fn fixed_point_returns_seed_in_one_sweep() {
        let f = ideal();
        let spec = MarginalSpec::new(["outcome", "site"]).unwrap();
        let target = f.marginalize(&spec).unwrap();
        let constraints = [MarginalConstraint::new(spec, target).unwrap()];
        let r = ipf_project(&f, &constraints, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.divergence_from_seed, 0.0);
        assert_eq!(r.distribution.cells(), f.cells());
    }

    #[test]
    fn single_constraint_is_one_exact_scaling() {
        let schema = Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "1",
            "a",
        )
        .unwrap();
        let u = Distribution::uniform(schema);
        let spec = MarginalSpec::new(["y"]).unwrap();
        let target_schema = u.schema().project(&[0]);
        let target =
            Distribution::new(Table::new(target_schema, vec![0.3, 0.7]).unwrap()).unwrap();
        let constraints = [MarginalConstraint::new(spec, target).unwrap()];
        let r = ipf_project(&u, &constraints, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.distribution.cells(), &[0.15, 0.15, 0.35, 0.35]);
    }

    #[test]
    fn pr_projection_of_parity_input_is_a_fixed_point() {
        let f = ideal();
        let r = pr_projection(&f, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2, "took {} sweeps", r.iterations);
        assert!(r.divergence_from_seed <= 1e-12);
        for (q, p) in r.distribution.cells().iter().zip(f.cells()) {
            assert_relative_eq!(*q, *p, epsilon = 1e-9);
        }
    }

    #[test]
    fn pr_projection_requires_confounders() {
        let schema = Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "1",
            "a",
        )
        .unwrap();
        let u = Distribution::uniform(schema);
        assert!(pr_projection(&u, &SolverConfig::default()).is_err());
    }

    /// Independent optimality oracle for 2x2xK studies: with both marginal
    /// targets fixed, each confounder stratum is a 2x2 table with both
    /// margins pinned, leaving exactly one degree of freedom per stratum.
    /// The divergence is strictly convex in it, so a golden-section search
    /// per stratum finds the constrained minimizer without any IPF.
    #[test]
    fn pr_projection_matches_per_stratum_search_oracle() {
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B"]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let f = random_positive(&mut rng, &schema);
            let cfg = SolverConfig::default();
            let r = pr_projection(&f, &cfg).unwrap();
            assert!(r.converged);

            let f_reg = f.regularized(cfg.epsilon);
            let fx = f_reg.marginalize(&MarginalSpec::new(["arm"]).unwrap()).unwrap();
            let fs = f_reg.marginalize(&MarginalSpec::new(["site"]).unwrap()).unwrap();
            let fys = f_reg
                .marginalize(&MarginalSpec::new(["outcome", "site"]).unwrap())
                .unwrap();

            // cell(y, x, s) = 4y + 2x + s
            let mut oracle = vec![0.0f64; 8];
            for s in 0..2usize {
                let r1 = fys.cells()[2 + s]; // outcome = 1
                let p1 = fx.cells()[1] * fs.cells()[s]; // arm = b
                let total = fys.cells()[s] + fys.cells()[2 + s];
                let lo = (r1 + p1 - total).max(0.0);
                let hi = r1.min(p1);
                let stratum_kl = |t: f64| -> f64 {
                    let q = [total - r1 - p1 + t, p1 - t, r1 - t, t]; // (0,a) (0,b) (1,a) (1,b)
                    let fr = [
                        f_reg.cells()[s],
                        f_reg.cells()[2 + s],
                        f_reg.cells()[4 + s],
                        f_reg.cells()[6 + s],
                    ];
                    q.iter()
                        .zip(&fr)
                        .map(|(&qi, &fi)| if qi > 0.0 { qi * (qi / fi).ln() } else { 0.0 })
                        .sum()
                };
                let (mut a, mut b) = (lo, hi);
                let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
                let (mut c, mut d) = (b - inv_phi * (b - a), a + inv_phi * (b - a));
                for _ in 0..120 {
                    if stratum_kl(c) < stratum_kl(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                    c = b - inv_phi * (b - a);
                    d = a + inv_phi * (b - a);
                }
                let t = 0.5 * (a + b);
                oracle[s] = total - r1 - p1 + t;
                oracle[2 + s] = p1 - t;
                oracle[4 + s] = r1 - t;
                oracle[6 + s] = t;
            }

            let mut d_oracle = 0.0;
            for (q, fr) in oracle.iter().zip(f_reg.cells()) {
                if *q > 0.0 {
                    d_oracle += q * (q / fr).ln();
                }
            }
            assert!((r.divergence_from_seed - d_oracle).abs() <= 1e-9);
            for (got, want) in r.distribution.cells().iter().zip(&oracle) {
                assert!((got - want).abs() <= 1e-6, "cell off: {got} vs {want}");
            }
        }
    }

    #[test]
    fn dp_projection_delta_zero_returns_smoothed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B", "C"]);
        let f = random_positive(&mut rng, &schema);
        let cfg = SolverConfig::default();
        let r = dp_projection(&f, Delta::new(0.0).unwrap(), &cfg).unwrap();
        let f_reg = f.regularized(cfg.epsilon);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.distribution.cells(), f_reg.cells());
    }

    #[test]
    fn dp_projection_delta_one_equals_pr_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B"]);
        let f = random_positive(&mut rng, &schema);
        let cfg = SolverConfig::default();
        let dp = dp_projection(&f, Delta::new(1.0).unwrap(), &cfg).unwrap();
        let pr = pr_projection(&f, &cfg).unwrap();
        assert_eq!(dp.distribution.cells(), pr.distribution.cells());
    }

    #[test]
    fn dp_projection_preserves_stratified_odds_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B"]);
        let f = random_positive(&mut rng, &schema);
        let cfg = SolverConfig::default();
        let f_reg = f.regularized(cfg.epsilon);
        let base = estimators::stratified_or(&f_reg).unwrap();
        let r = dp_projection(&f, Delta::new(0.5).unwrap(), &cfg).unwrap();
        let moved = estimators::stratified_or(&r.distribution).unwrap();
        for ((_, b), (_, m)) in base.iter().zip(&moved) {
            let (b, m) = (b.finite().unwrap(), m.finite().unwrap());
            assert_relative_eq!(b, m, max_relative = 1e-10);
        }
    }

    #[test]
    fn logit_maxent_of_independent_outcome_is_the_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B"]);
        // f = f_Y (x) f_{X,S}
        let mut fy: Vec<f64> = (0..2).map(|_| rng.random_range(0.2..1.0)).collect();
        let ty: f64 = fy.iter().sum();
        fy.iter_mut().for_each(|v| *v /= ty);
        let mut fxs: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let txs: f64 = fxs.iter().sum();
        fxs.iter_mut().for_each(|v| *v /= txs);
        let cells: Vec<f64> = fy
            .iter()
            .flat_map(|&y| fxs.iter().map(move |&m| y * m))
            .collect();
        let f = Table::new(schema, cells.clone()).unwrap().normalize().unwrap();
        let r = logit_maxent(&f, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        for (got, want) in r.distribution.cells().iter().zip(&cells) {
            assert!((got - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn logit_maxent_homogenizes_stratified_odds_ratios() {
        let f = ideal();
        let r = logit_maxent(&f, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        let ors = estimators::stratified_or(&r.distribution).unwrap();
        let first = ors[0].1.finite().unwrap();
        for (_, e) in &ors {
            assert_relative_eq!(e.finite().unwrap(), first, max_relative = 1e-9);
        }
    }

    #[test]
    fn parity_logit_fixes_the_predictor_joint_and_keeps_parity_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B"]);
        let l = random_parity(&mut rng, &schema);
        let out = parity_logit(&l, &l).unwrap();
        for (got, want) in out.cells().iter().zip(l.cells()) {
            assert_relative_eq!(*got, *want, max_relative = 1e-12);
        }

        // General inputs: the exposure-confounder joint of the output is the
        // parity product exactly.
        let f = random_positive(&mut rng, &schema);
        let l2 = logit_maxent(&f, &SolverConfig::default()).unwrap().distribution;
        let out2 = parity_logit(&l2, &f).unwrap();
        let xs = MarginalSpec::new(["arm", "site"]).unwrap();
        let got = out2.marginalize(&xs).unwrap();
        let want = f
            .marginalize(&MarginalSpec::new(["arm"]).unwrap())
            .unwrap()
            .outer_product(&f.marginalize(&MarginalSpec::new(["site"]).unwrap()).unwrap())
            .unwrap();
        let aligned = aligned_cells(&want, got.schema()).unwrap();
        for (a, b) in got.cells().iter().zip(&aligned) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn ipf_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let schema = study_schema(&["0", "1"], &["a", "b"], &["A", "B", "C"]);
        let f = random_positive(&mut rng, &schema);
        let a = pr_projection(&f, &SolverConfig::default()).unwrap();
        let b = pr_projection(&f, &SolverConfig::default()).unwrap();
        let bits_a: Vec<u64> = a.distribution.cells().iter().map(|c| c.to_bits()).collect();
        let bits_b: Vec<u64> = b.distribution.cells().iter().map(|c| c.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn inconsistent_family_reports_non_convergence() {
        let schema = Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "1",
            "a",
        )
        .unwrap();
        let u = Distribution::uniform(schema.clone());
        let spec = MarginalSpec::new(["y"]).unwrap();
        let t1 = Distribution::new(
            Table::new(schema.project(&[0]), vec![0.3, 0.7]).unwrap(),
        )
        .unwrap();
        let t2 = Distribution::new(
            Table::new(schema.project(&[0]), vec![0.6, 0.4]).unwrap(),
        )
        .unwrap();
        let constraints = [
            MarginalConstraint::new(spec.clone(), t1).unwrap(),
            MarginalConstraint::new(spec, t2).unwrap(),
        ];
        let cfg = SolverConfig {
            max_iterations: 50,
            ..SolverConfig::default()
        };
        let r = ipf_project(&u, &constraints, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 50);
        assert!(r.residual > cfg.tolerance);
    }

    #[test]
    fn delta_and_config_validation() {
        assert!(Delta::new(-0.1).is_err());
        assert!(Delta::new(1.1).is_err());
        assert!(Delta::new(0.0).is_ok());
        assert!(Delta::new(1.0).is_ok());
        let bad = SolverConfig {
            tolerance: 0.0,
            ..SolverConfig::default()
        };
        assert!(ipf_project(&ideal(), &[], &bad).is_err());
    }

    #[test]
    fn constraint_target_must_match_spec() {
        let f = ideal();
        let spec = MarginalSpec::new(["outcome", "site"]).unwrap();
        let wrong = f.marginalize(&MarginalSpec::new(["arm"]).unwrap()).unwrap();
        assert!(MarginalConstraint::new(spec, wrong).is_err());
    }
}
