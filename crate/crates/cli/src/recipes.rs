//! Canned, versioned configurations that reproduce the acceptance checks.

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy)]
pub struct Recipe {
    pub name: &'static str,
    pub version: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

impl Recipe {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(self.source).expect("built-in recipe parses")
    }
}

macro_rules! recipe {
    ($name:literal, $summary:literal) => {
        Recipe {
            name: $name,
            version: "v1",
            summary: $summary,
            source: include_str!(concat!("../recipes/", $name, ".toml")),
        }
    };
}

pub const RECIPES: &[Recipe] = &[
    recipe!("gamma-fk", "series sums of the Gamma(1.5) Lévy measure against the Gamma CDF"),
    recipe!("stable-cross", "stable series sum against summed product-model points"),
    recipe!("cluster-poisson", "Poisson counts of summed cluster points"),
    recipe!("laplace-identity", "Monte Carlo against analytic Laplace functionals"),
    recipe!("iid-conditions", "condition estimators on i.i.d. Pareto rows"),
    recipe!("blocks-appendix", "block lengths for polynomial mixing"),
    recipe!("linear-converge", "row sums of a linear process against its stable limit"),
    recipe!("ad1-trend", "block-factorization gap for dependent rows"),
];

pub fn find(name: &str) -> CliResult<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name).ok_or_else(|| CliError::Unresolved {
        kind: "recipe",
        name: name.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_validates() {
        for r in RECIPES {
            let c = r.config();
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", r.name));
            assert_eq!(c.name.as_deref(), Some(r.name));
        }
    }
}
