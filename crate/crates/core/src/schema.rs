//! Variable schemas for tables over product domains.
//!
//! A [`Schema`] lists named categorical variables in a fixed order, each with
//! an ordered set of levels and a role tag. Cell storage everywhere in this
//! crate is dense and row-major with respect to that variable order.

use std::fmt;

use crate::error::{Error, Result};

/// Role a variable plays in the study design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Outcome,
    Exposure,
    Confounder,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Outcome => write!(f, "outcome"),
            Role::Exposure => write!(f, "exposure"),
            Role::Confounder => write!(f, "confounder"),
        }
    }
}

/// A named categorical variable with an ordered list of levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub levels: Vec<String>,
    pub role: Role,
}

impl Variable {
    pub fn new<N, L>(name: N, levels: impl IntoIterator<Item = L>, role: Role) -> Self
    where
        N: Into<String>,
        L: Into<String>,
    {
        Variable {
            name: name.into(),
            levels: levels.into_iter().map(Into::into).collect(),
            role,
        }
    }
}

/// An ordered set of variables plus the designated event and reference levels.
///
/// [`Schema::new`] enforces the full study invariants (exactly one outcome,
/// exactly one exposure, two or more levels everywhere, designations resolve).
/// Marginalization produces sub-schemas that keep whatever variables remain;
/// the designations survive only while their variable does.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    variables: Vec<Variable>,
    event_level: Option<String>,
    reference_exposure: Option<String>,
}

impl Schema {
    /// Builds a full study schema and checks every invariant.
    pub fn new(
        variables: Vec<Variable>,
        event_level: impl Into<String>,
        reference_exposure: impl Into<String>,
    ) -> Result<Self> {
        let event_level = event_level.into();
        let reference_exposure = reference_exposure.into();

        if variables.is_empty() {
            return Err(Error::InvalidSchema("no variables".into()));
        }
        for (i, v) in variables.iter().enumerate() {
            if v.levels.len() < 2 {
                return Err(Error::InvalidSchema(format!(
                    "variable `{}` needs at least 2 levels",
                    v.name
                )));
            }
            for (a, la) in v.levels.iter().enumerate() {
                if v.levels[a + 1..].contains(la) {
                    return Err(Error::InvalidSchema(format!(
                        "duplicate level `{la}` in variable `{}`",
                        v.name
                    )));
                }
            }
            if variables[i + 1..].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate variable name `{}`",
                    v.name
                )));
            }
        }
        let outcomes: Vec<_> = variables.iter().filter(|v| v.role == Role::Outcome).collect();
        let exposures: Vec<_> = variables.iter().filter(|v| v.role == Role::Exposure).collect();
        if outcomes.len() != 1 {
            return Err(Error::InvalidSchema(format!(
                "expected exactly one outcome variable, found {}",
                outcomes.len()
            )));
        }
        if exposures.len() != 1 {
            return Err(Error::InvalidSchema(format!(
                "expected exactly one exposure variable, found {}",
                exposures.len()
            )));
        }
        if !outcomes[0].levels.contains(&event_level) {
            return Err(Error::InvalidSchema(format!(
                "event level `{event_level}` is not a level of outcome `{}`",
                outcomes[0].name
            )));
        }
        if !exposures[0].levels.contains(&reference_exposure) {
            return Err(Error::InvalidSchema(format!(
                "reference exposure `{reference_exposure}` is not a level of exposure `{}`",
                exposures[0].name
            )));
        }
        Ok(Schema {
            variables,
            event_level: Some(event_level),
            reference_exposure: Some(reference_exposure),
        })
    }

    /// Assembles a sub-schema without re-running the study-level checks.
    /// Per-variable invariants are inherited from an already validated parent.
    pub(crate) fn from_parts(
        variables: Vec<Variable>,
        event_level: Option<String>,
        reference_exposure: Option<String>,
    ) -> Self {
        Schema {
            variables,
            event_level,
            reference_exposure,
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn event_level(&self) -> Option<&str> {
        self.event_level.as_deref()
    }

    pub fn reference_exposure(&self) -> Option<&str> {
        self.reference_exposure.as_deref()
    }

    /// Number of cells in the dense product domain.
    pub fn cell_count(&self) -> usize {
        self.variables.iter().map(|v| v.levels.len()).product()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn outcome_index(&self) -> Option<usize> {
        self.variables.iter().position(|v| v.role == Role::Outcome)
    }

    pub fn exposure_index(&self) -> Option<usize> {
        self.variables.iter().position(|v| v.role == Role::Exposure)
    }

    pub fn confounder_indices(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == Role::Confounder)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row-major strides, one per variable.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.variables.len()];
        for i in (0..self.variables.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.variables[i + 1].levels.len();
        }
        strides
    }

    /// Writes the level indices of `cell` into `digits` (one entry per variable).
    pub fn decode(&self, cell: usize, digits: &mut [usize]) {
        let mut rest = cell;
        for i in (0..self.variables.len()).rev() {
            let card = self.variables[i].levels.len();
            digits[i] = rest % card;
            rest /= card;
        }
    }

    /// Sub-schema over the variables at `keep` (ascending positions).
    pub(crate) fn project(&self, keep: &[usize]) -> Schema {
        let variables: Vec<Variable> = keep.iter().map(|&i| self.variables[i].clone()).collect();
        let event_level = self
            .event_level
            .clone()
            .filter(|_| variables.iter().any(|v| v.role == Role::Outcome));
        let reference_exposure = self
            .reference_exposure
            .clone()
            .filter(|_| variables.iter().any(|v| v.role == Role::Exposure));
        Schema::from_parts(variables, event_level, reference_exposure)
    }

    /// True when both schemas describe the same product domain
    /// (variable names and level lists agree position by position).
    pub fn same_domain(&self, other: &Schema) -> bool {
        self.variables.len() == other.variables.len()
            && self
                .variables
                .iter()
                .zip(&other.variables)
                .all(|(a, b)| a.name == b.name && a.levels == b.levels)
    }

    /// Comma-separated level labels of `cell`, used in group error messages.
    pub(crate) fn describe_cell(&self, cell: usize) -> String {
        let mut digits = vec![0usize; self.variables.len()];
        self.decode(cell, &mut digits);
        self.variables
            .iter()
            .zip(&digits)
            .map(|(v, &d)| format!("{}={}", v.name, v.levels[d]))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study() -> Result<Schema> {
        Schema::new(
            vec![
                Variable::new("outcome", ["no event", "event"], Role::Outcome),
                Variable::new("arm", ["control", "intervention"], Role::Exposure),
                Variable::new("site", ["A", "B"], Role::Confounder),
            ],
            "event",
            "control",
        )
    }

    #[test]
    fn valid_schema() {
        let s = study().unwrap();
        assert_eq!(s.cell_count(), 8);
        assert_eq!(s.outcome_index(), Some(0));
        assert_eq!(s.exposure_index(), Some(1));
        assert_eq!(s.confounder_indices(), vec![2]);
        assert_eq!(s.event_level(), Some("event"));
        assert_eq!(s.strides(), vec![4, 2, 1]);
    }

    #[test]
    fn rejects_single_level_variable() {
        let err = Schema::new(
            vec![
                Variable::new("y", ["only"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "only",
            "a",
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSchema(_)));
    }

    #[test]
    fn rejects_missing_roles_and_bad_designations() {
        assert!(Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("z", ["0", "1"], Role::Outcome),
            ],
            "1",
            "0",
        )
        .is_err());
        assert!(Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "2",
            "a",
        )
        .is_err());
    }

    #[test]
    fn rejects_duplicate_names_and_levels() {
        assert!(Schema::new(
            vec![
                Variable::new("y", ["0", "0"], Role::Outcome),
                Variable::new("x", ["a", "b"], Role::Exposure),
            ],
            "0",
            "a",
        )
        .is_err());
        assert!(Schema::new(
            vec![
                Variable::new("y", ["0", "1"], Role::Outcome),
                Variable::new("y", ["a", "b"], Role::Exposure),
            ],
            "0",
            "a",
        )
        .is_err());
    }

    #[test]
    fn decode_round_trip() {
        let s = study().unwrap();
        let mut digits = vec![0usize; 3];
        for cell in 0..s.cell_count() {
            s.decode(cell, &mut digits);
            let strides = s.strides();
            let back: usize = digits.iter().zip(&strides).map(|(d, st)| d * st).sum();
            assert_eq!(back, cell);
        }
    }

    #[test]
    fn projection_keeps_designations_with_their_variables() {
        let s = study().unwrap();
        let p = s.project(&[1, 2]);
        assert_eq!(p.event_level(), None);
        assert_eq!(p.reference_exposure(), Some("control"));
        assert_eq!(p.cell_count(), 4);
    }
}
