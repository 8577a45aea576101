//! Two-way and stratified risk metrics plus Mantel-Haenszel pooled
//! estimators, all computed top-down from a distribution: marginalize the
//! confounders for the crude metrics, condition on them for the stratified
//! ones, pool across strata for the MH metrics.
//!
//! Zero cells make odds ratios hit 0 or infinity; those are legal values and
//! are carried in-band by [`Estimate`] rather than raised as errors, so a
//! report over a sparse table always completes.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::table::Distribution;

/// An extended-real estimator value: finite (possibly zero), infinite, or
/// undefined (a 0/0 cross-ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Finite(f64),
    Infinite,
    Undefined,
}

impl Estimate {
    fn from_ratio(numerator: f64, denominator: f64) -> Estimate {
        if denominator > 0.0 {
            Estimate::Finite(numerator / denominator)
        } else if numerator > 0.0 {
            Estimate::Infinite
        } else {
            Estimate::Undefined
        }
    }

    fn from_f64(value: f64) -> Estimate {
        if value.is_infinite() {
            Estimate::Infinite
        } else {
            Estimate::Finite(value)
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Estimate::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Estimate::Finite(v) => serializer.serialize_f64(*v),
            Estimate::Infinite => serializer.serialize_str("inf"),
            Estimate::Undefined => serializer.serialize_none(),
        }
    }
}

/// Per-stratum odds ratio and risk ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumEffects {
    pub levels: Vec<String>,
    pub or: Estimate,
    pub rr: Estimate,
}

/// Crude, stratified, and Mantel-Haenszel effect sizes of one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub crude_or: f64,
    pub crude_rr: f64,
    pub mh_or: f64,
    pub mh_rr: f64,
    pub strata: Vec<StratumEffects>,
}

impl EffectReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

impl Serialize for EffectReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("EffectReport", 5)?;
        st.serialize_field("crude_or", &Estimate::from_f64(self.crude_or))?;
        st.serialize_field("crude_rr", &Estimate::from_f64(self.crude_rr))?;
        st.serialize_field("mh_or", &Estimate::from_f64(self.mh_or))?;
        st.serialize_field("mh_rr", &Estimate::from_f64(self.mh_rr))?;
        st.serialize_field("strata", &self.strata)?;
        st.end()
    }
}

struct EffectAxes {
    outcome: usize,
    event: usize,
    exposure: usize,
    reference: usize,
    comparison: usize,
    confounders: Vec<usize>,
    strata: usize,
}

/// Axes for a pairwise comparison of `comparison` against the reference
/// exposure. Other exposure levels, if any, are left out of the 2x2 counts.
fn axes_for(schema: &Schema, comparison: usize) -> Result<EffectAxes> {
    let outcome = schema
        .outcome_index()
        .ok_or_else(|| Error::InvalidSchema("no outcome variable".into()))?;
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let o = &schema.variables()[outcome];
    if o.levels.len() != 2 {
        return Err(Error::InvalidSchema(format!(
            "effect metrics need a binary outcome, `{}` has {} levels",
            o.name,
            o.levels.len()
        )));
    }
    let event_label = schema
        .event_level()
        .ok_or_else(|| Error::InvalidSchema("no designated event level".into()))?;
    let event = o
        .levels
        .iter()
        .position(|l| l == event_label)
        .ok_or_else(|| Error::InvalidSchema("event level not found".into()))?;
    let reference_label = schema
        .reference_exposure()
        .ok_or_else(|| Error::InvalidSchema("no designated reference exposure".into()))?;
    let reference = schema.variables()[exposure]
        .levels
        .iter()
        .position(|l| l == reference_label)
        .ok_or_else(|| Error::InvalidSchema("reference exposure not found".into()))?;
    if comparison == reference {
        return Err(Error::InvalidSchema(
            "comparison level equals the reference exposure".into(),
        ));
    }
    let confounders = schema.confounder_indices();
    let strata = confounders
        .iter()
        .map(|&i| schema.variables()[i].levels.len())
        .product::<usize>()
        .max(1);
    Ok(EffectAxes {
        outcome,
        event,
        exposure,
        reference,
        comparison,
        confounders,
        strata,
    })
}

/// Axes for the two-group case; multi-level exposures must go through
/// [`effect_reports`], one pairwise comparison per non-reference level.
fn effect_axes(schema: &Schema) -> Result<EffectAxes> {
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let x = &schema.variables()[exposure];
    if x.levels.len() != 2 {
        return Err(Error::InvalidSchema(format!(
            "scalar effect metrics compare two exposure groups, `{}` has {} levels",
            x.name,
            x.levels.len()
        )));
    }
    let reference_label = schema
        .reference_exposure()
        .ok_or_else(|| Error::InvalidSchema("no designated reference exposure".into()))?;
    let reference = x
        .levels
        .iter()
        .position(|l| l == reference_label)
        .ok_or_else(|| Error::InvalidSchema("reference exposure not found".into()))?;
    axes_for(schema, 1 - reference)
}

/// The classic four masses per confounder stratum: `a`/`b` are the event and
/// no-event masses in the comparison arm, `c`/`d` the same in the reference
/// arm.
struct StratumMasses {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

fn stratum_masses(dist: &Distribution, axes: &EffectAxes) -> StratumMasses {
    let schema = dist.schema();
    let mut m = StratumMasses {
        a: vec![0.0; axes.strata],
        b: vec![0.0; axes.strata],
        c: vec![0.0; axes.strata],
        d: vec![0.0; axes.strata],
    };
    let mut digits = vec![0usize; schema.variables().len()];
    for (cell, &v) in dist.cells().iter().enumerate() {
        schema.decode(cell, &mut digits);
        let x = digits[axes.exposure];
        if x != axes.comparison && x != axes.reference {
            continue;
        }
        let mut stratum = 0usize;
        for &s in &axes.confounders {
            stratum = stratum * schema.variables()[s].levels.len() + digits[s];
        }
        let is_event = digits[axes.outcome] == axes.event;
        let slot = match (is_event, x == axes.comparison) {
            (true, true) => &mut m.a,
            (false, true) => &mut m.b,
            (true, false) => &mut m.c,
            (false, false) => &mut m.d,
        };
        slot[stratum] += v;
    }
    m
}

fn stratum_labels(schema: &Schema, axes: &EffectAxes, stratum: usize) -> Vec<String> {
    let mut rest = stratum;
    let mut labels = vec![String::new(); axes.confounders.len()];
    for (k, &s) in axes.confounders.iter().enumerate().rev() {
        let card = schema.variables()[s].levels.len();
        labels[k] = schema.variables()[s].levels[rest % card].clone();
        rest /= card;
    }
    labels
}

fn odds_from_masses(event: f64, no_event: f64, group: &str) -> Result<f64> {
    if event + no_event <= 0.0 {
        return Err(Error::EmptyGroup(group.to_string()));
    }
    if no_event == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(event / no_event)
}

fn scalar_ratio(numerator: f64, denominator: f64, what: &str) -> Result<f64> {
    let both_zero = numerator == 0.0 && denominator == 0.0;
    let both_infinite = numerator.is_infinite() && denominator.is_infinite();
    if both_zero || both_infinite {
        return Err(Error::UndefinedRatio(what.to_string()));
    }
    if denominator == 0.0 {
        return Ok(f64::INFINITY);
    }
    if denominator.is_infinite() {
        return Ok(0.0);
    }
    Ok(numerator / denominator)
}

/// Odds of the event in one exposure group, optionally within a fixed
/// confounder stratum (`stratum` lists one level per confounder, in schema
/// order). The no-event mass is the group's complement of the event mass.
pub fn odds(dist: &Distribution, exposure_level: &str, stratum: Option<&[&str]>) -> Result<f64> {
    let schema = dist.schema();
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let outcome = schema
        .outcome_index()
        .ok_or_else(|| Error::InvalidSchema("no outcome variable".into()))?;
    let event_label = schema
        .event_level()
        .ok_or_else(|| Error::InvalidSchema("no designated event level".into()))?;
    let event = schema.variables()[outcome]
        .levels
        .iter()
        .position(|l| l == event_label)
        .expect("validated by schema construction");
    let x_level = schema.variables()[exposure]
        .levels
        .iter()
        .position(|l| l == exposure_level)
        .ok_or_else(|| Error::UnknownVariable(format!("exposure level `{exposure_level}`")))?;

    let confounders = schema.confounder_indices();
    let stratum_levels: Option<Vec<usize>> = match stratum {
        None => None,
        Some(labels) => {
            if labels.len() != confounders.len() {
                return Err(Error::InvalidSchema(format!(
                    "expected {} stratum levels, got {}",
                    confounders.len(),
                    labels.len()
                )));
            }
            let mut idx = Vec::with_capacity(labels.len());
            for (&s, &label) in confounders.iter().zip(labels) {
                let j = schema.variables()[s]
                    .levels
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| Error::UnknownVariable(format!("stratum level `{label}`")))?;
                idx.push(j);
            }
            Some(idx)
        }
    };

    let mut event_mass = 0.0;
    let mut rest_mass = 0.0;
    let mut digits = vec![0usize; schema.variables().len()];
    for (cell, &v) in dist.cells().iter().enumerate() {
        schema.decode(cell, &mut digits);
        if digits[exposure] != x_level {
            continue;
        }
        if let Some(idx) = &stratum_levels {
            if confounders.iter().zip(idx).any(|(&s, &j)| digits[s] != j) {
                continue;
            }
        }
        if digits[outcome] == event {
            event_mass += v;
        } else {
            rest_mass += v;
        }
    }
    let group = match stratum {
        None => format!("{exposure_level}"),
        Some(labels) => format!("{exposure_level}, {}", labels.join(", ")),
    };
    odds_from_masses(event_mass, rest_mass, &group)
}

fn crude_or_from(m: &StratumMasses) -> Result<f64> {
    let (a, b): (f64, f64) = (m.a.iter().sum(), m.b.iter().sum());
    let (c, d): (f64, f64) = (m.c.iter().sum(), m.d.iter().sum());
    let odds_cmp = odds_from_masses(a, b, "comparison arm")?;
    let odds_ref = odds_from_masses(c, d, "reference arm")?;
    scalar_ratio(odds_cmp, odds_ref, "crude odds ratio")
}

fn crude_rr_from(m: &StratumMasses) -> Result<f64> {
    let (a, b): (f64, f64) = (m.a.iter().sum(), m.b.iter().sum());
    let (c, d): (f64, f64) = (m.c.iter().sum(), m.d.iter().sum());
    if a + b <= 0.0 {
        return Err(Error::EmptyGroup("comparison arm".into()));
    }
    if c + d <= 0.0 {
        return Err(Error::EmptyGroup("reference arm".into()));
    }
    scalar_ratio(a / (a + b), c / (c + d), "crude risk ratio")
}

fn stratified_or_from(
    schema: &Schema,
    axes: &EffectAxes,
    m: &StratumMasses,
) -> Vec<(Vec<String>, Estimate)> {
    (0..axes.strata)
        .map(|s| {
            let labels = stratum_labels(schema, axes, s);
            (labels, Estimate::from_ratio(m.a[s] * m.d[s], m.b[s] * m.c[s]))
        })
        .collect()
}

fn stratified_rr_from(
    schema: &Schema,
    axes: &EffectAxes,
    m: &StratumMasses,
) -> Vec<(Vec<String>, Estimate)> {
    (0..axes.strata)
        .map(|s| {
            let labels = stratum_labels(schema, axes, s);
            let numerator = m.a[s] * (m.c[s] + m.d[s]);
            let denominator = m.c[s] * (m.a[s] + m.b[s]);
            (labels, Estimate::from_ratio(numerator, denominator))
        })
        .collect()
}

fn mh_or_from(m: &StratumMasses) -> Result<f64> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for s in 0..m.a.len() {
        let w = m.a[s] + m.b[s] + m.c[s] + m.d[s];
        if w <= 0.0 {
            continue;
        }
        numerator += m.a[s] * m.d[s] / w;
        denominator += m.b[s] * m.c[s] / w;
    }
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(numerator / denominator)
}

fn mh_rr_from(m: &StratumMasses) -> Result<f64> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for s in 0..m.a.len() {
        let w = m.a[s] + m.b[s] + m.c[s] + m.d[s];
        if w <= 0.0 {
            continue;
        }
        numerator += m.a[s] * (m.c[s] + m.d[s]) / w;
        denominator += m.c[s] * (m.a[s] + m.b[s]) / w;
    }
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(numerator / denominator)
}

fn report_from(dist: &Distribution, axes: &EffectAxes) -> Result<EffectReport> {
    let m = stratum_masses(dist, axes);
    let strata = stratified_or_from(dist.schema(), axes, &m)
        .into_iter()
        .zip(stratified_rr_from(dist.schema(), axes, &m))
        .map(|((levels, or), (_, rr))| StratumEffects { levels, or, rr })
        .collect();
    Ok(EffectReport {
        crude_or: crude_or_from(&m)?,
        crude_rr: crude_rr_from(&m)?,
        mh_or: mh_or_from(&m)?,
        mh_rr: mh_rr_from(&m)?,
        strata,
    })
}

/// Crude odds ratio of the comparison exposure against the reference, after
/// marginalizing all confounders.
pub fn two_way_or(dist: &Distribution) -> Result<f64> {
    let axes = effect_axes(dist.schema())?;
    crude_or_from(&stratum_masses(dist, &axes))
}

/// Crude risk ratio of the comparison exposure against the reference.
pub fn two_way_rr(dist: &Distribution) -> Result<f64> {
    let axes = effect_axes(dist.schema())?;
    crude_rr_from(&stratum_masses(dist, &axes))
}

/// Odds ratio within each confounder stratum; 0, infinity, and undefined
/// entries are carried in-band.
pub fn stratified_or(dist: &Distribution) -> Result<Vec<(Vec<String>, Estimate)>> {
    let axes = effect_axes(dist.schema())?;
    let m = stratum_masses(dist, &axes);
    Ok(stratified_or_from(dist.schema(), &axes, &m))
}

/// Risk ratio within each confounder stratum.
pub fn stratified_rr(dist: &Distribution) -> Result<Vec<(Vec<String>, Estimate)>> {
    let axes = effect_axes(dist.schema())?;
    let m = stratum_masses(dist, &axes);
    Ok(stratified_rr_from(dist.schema(), &axes, &m))
}

/// Mantel-Haenszel pooled odds ratio:
/// `sum_s a_s d_s / w_s` over `sum_s b_s c_s / w_s`, with `w_s` the stratum
/// mass. Scale-invariant, so probabilities and counts give the same value.
pub fn mh_or(dist: &Distribution) -> Result<f64> {
    let axes = effect_axes(dist.schema())?;
    mh_or_from(&stratum_masses(dist, &axes))
}

/// Mantel-Haenszel pooled risk ratio (the standard epidemiological pool):
/// `sum_s a_s n0_s / w_s` over `sum_s c_s n1_s / w_s`, where `n1_s`/`n0_s`
/// are the comparison/reference arm masses of stratum `s`.
pub fn mh_rr(dist: &Distribution) -> Result<f64> {
    let axes = effect_axes(dist.schema())?;
    mh_rr_from(&stratum_masses(dist, &axes))
}

/// Bundles the crude, stratified, and pooled metrics of one distribution
/// with a two-group exposure.
pub fn effect_report(dist: &Distribution) -> Result<EffectReport> {
    let axes = effect_axes(dist.schema())?;
    report_from(dist, &axes)
}

/// One pairwise report per non-reference exposure level; cells from the
/// other levels stay out of that comparison's counts. For a two-group
/// exposure this is the single [`effect_report`].
pub fn effect_reports(dist: &Distribution) -> Result<Vec<(String, EffectReport)>> {
    let schema = dist.schema();
    let exposure = schema
        .exposure_index()
        .ok_or_else(|| Error::InvalidSchema("no exposure variable".into()))?;
    let reference_label = schema
        .reference_exposure()
        .ok_or_else(|| Error::InvalidSchema("no designated reference exposure".into()))?;
    let mut reports = Vec::new();
    for (i, level) in schema.variables()[exposure].levels.iter().enumerate() {
        if level == reference_label {
            continue;
        }
        let axes = axes_for(schema, i)?;
        reports.push((level.clone(), report_from(dist, &axes)?));
    }
    Ok(reports)
}
