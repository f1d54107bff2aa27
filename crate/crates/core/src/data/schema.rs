//! Column schema: roles, kinds and the encoding layout they induce.
//!
//! Schema files are JSON documents of the form
//!
//! ```json
//! { "columns": [
//!     { "name": "age",    "role": "covariate", "kind": "continuous" },
//!     { "name": "sex",    "role": "sensitive", "kind": "categorical", "categories": ["F", "M"] },
//!     { "name": "income", "role": "outcome",   "kind": "categorical", "categories": ["<=50K", ">50K"] }
//! ] }
//! ```
//!
//! `categories` fixes the one-hot column order. Continuous columns may carry
//! `"standardize": false` to be used as-is, and frozen `"mean"`/`"std"` once
//! fitted on a training split. Outcome columns are never standardized.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Covariate,
    Sensitive,
    Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Continuous,
    Categorical,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: Role,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl ColumnSpec {
    pub fn continuous(name: &str, role: Role) -> Self {
        Self {
            name: name.to_string(),
            role,
            kind: Kind::Continuous,
            categories: Vec::new(),
            standardize: true,
            mean: None,
            std: None,
        }
    }

    pub fn categorical(name: &str, role: Role, categories: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            role,
            kind: Kind::Categorical,
            categories: categories.iter().map(|c| c.to_string()).collect(),
            standardize: false,
            mean: None,
            std: None,
        }
    }

    /// Continuous column that is used without standardization.
    pub fn raw(mut self) -> Self {
        self.standardize = false;
        self
    }

    /// Number of encoded columns.
    pub fn width(&self) -> usize {
        match self.kind {
            Kind::Continuous => 1,
            Kind::Categorical => self.categories.len(),
        }
    }

    pub(crate) fn scales(&self) -> bool {
        self.kind == Kind::Continuous && self.standardize && self.role != Role::Outcome
    }

    /// `(mean, std)` applied when encoding; identity when not standardized.
    pub fn stats(&self) -> (f64, f64) {
        if self.scales() {
            (self.mean.unwrap_or(0.0), self.std.unwrap_or(1.0))
        } else {
            (0.0, 1.0)
        }
    }
}

/// Supervised task implied by the outcome column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Contiguous block of encoded columns belonging to one original variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableBlock {
    pub name: String,
    pub start: usize,
    pub width: usize,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let s = Self { columns };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            row: None,
            column: None,
            reason: e.to_string(),
        })?;
        let s: Schema = serde_json::from_str(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            row: None,
            column: None,
            reason: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let count = |r: Role| self.columns.iter().filter(|c| c.role == r).count();
        if count(Role::Outcome) != 1 {
            return Err(Error::Input("schema needs exactly one outcome column".into()));
        }
        if count(Role::Covariate) == 0 {
            return Err(Error::Input("schema needs at least one covariate".into()));
        }
        if count(Role::Sensitive) == 0 {
            return Err(Error::Input("schema needs at least one sensitive column".into()));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Input(format!("duplicate column `{}`", c.name)));
            }
            match c.kind {
                Kind::Categorical if c.categories.len() < 2 => {
                    return Err(Error::Input(format!(
                        "categorical column `{}` needs at least 2 categories",
                        c.name
                    )))
                }
                Kind::Continuous if !c.categories.is_empty() => {
                    return Err(Error::Input(format!(
                        "continuous column `{}` cannot list categories",
                        c.name
                    )))
                }
                _ => {}
            }
            if let Some(sd) = c.std {
                if !(sd > 0.0) {
                    return Err(Error::Input(format!("column `{}` has std {sd}", c.name)));
                }
            }
        }
        let outcome = self.outcome();
        if outcome.kind == Kind::Categorical && outcome.categories.len() != 2 {
            return Err(Error::Input(format!(
                "categorical outcome `{}` must be binary",
                outcome.name
            )));
        }
        Ok(())
    }

    pub fn outcome(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == Role::Outcome)
            .expect("validated schema has an outcome")
    }

    pub fn task(&self) -> Task {
        match self.outcome().kind {
            Kind::Categorical => Task::Classification,
            Kind::Continuous => Task::Regression,
        }
    }

    pub fn role_columns(&self, role: Role) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    fn blocks(&self, role: Role) -> Vec<VariableBlock> {
        let mut start = 0;
        self.role_columns(role)
            .map(|c| {
                let b = VariableBlock {
                    name: c.name.clone(),
                    start,
                    width: c.width(),
                    kind: c.kind,
                };
                start += c.width();
                b
            })
            .collect()
    }

    /// Layout of the encoded covariate matrix.
    pub fn covariate_blocks(&self) -> Vec<VariableBlock> {
        self.blocks(Role::Covariate)
    }

    /// Layout of the encoded sensitive matrix.
    pub fn sensitive_blocks(&self) -> Vec<VariableBlock> {
        self.blocks(Role::Sensitive)
    }

    pub fn x_width(&self) -> usize {
        self.role_columns(Role::Covariate).map(ColumnSpec::width).sum()
    }

    pub fn a_width(&self) -> usize {
        self.role_columns(Role::Sensitive).map(ColumnSpec::width).sum()
    }

    /// Whether `other` encodes to the same layout (names, kinds, categories).
    pub fn same_layout(&self, other: &Schema) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.role == b.role && a.kind == b.kind && a.categories == b.categories)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basic() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::continuous("age", Role::Covariate),
            ColumnSpec::categorical("edu", Role::Covariate, &["a", "b", "c"]),
            ColumnSpec::categorical("sex", Role::Sensitive, &["f", "m"]),
            ColumnSpec::categorical("y", Role::Outcome, &["0", "1"]),
        ]
    }

    #[test]
    fn layout() {
        let s = Schema::new(basic()).unwrap();
        assert_eq!(s.x_width(), 4);
        assert_eq!(s.a_width(), 2);
        assert_eq!(s.task(), Task::Classification);
        let b = s.covariate_blocks();
        assert_eq!((b[1].start, b[1].width), (1, 3));
    }

    #[test]
    fn validation_errors() {
        let mut c = basic();
        c.pop();
        assert!(Schema::new(c).is_err());
        let mut c = basic();
        c[1].categories.truncate(1);
        assert!(Schema::new(c).is_err());
        let mut c = basic();
        c.retain(|c| c.role != Role::Sensitive);
        assert!(Schema::new(c).is_err());
        let mut c = basic();
        c[3].categories.push("2".into());
        assert!(Schema::new(c).is_err());
    }

    #[test]
    fn json_keys() {
        let text = r#"{"columns":[
            {"name":"x","role":"covariate","kind":"continuous"},
            {"name":"a","role":"sensitive","kind":"categorical","categories":["0","1"]},
            {"name":"y","role":"outcome","kind":"continuous"}]}"#;
        let s: Schema = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
        assert!(s.columns[0].standardize);
        assert_eq!(s.task(), Task::Regression);
    }
}
