//! Flat INI-style experiment configuration: `[section]` headers and
//! `key = value` pairs, `#` or `;` comments. Parse errors carry line
//! numbers; lookups name the missing `section.key`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Raw parsed INI document.
#[derive(Debug, Default)]
pub struct IniDoc {
    // section -> key -> (value, line)
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl IniDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = IniDoc::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(Some(line_no), "unterminated section header"))?
                    .trim()
                    .to_string();
                if name.is_empty() {
                    return Err(err(Some(line_no), "empty section name"));
                }
                doc.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(Some(line_no), format!("expected `key = value`, got `{line}`")))?;
            let section = current
                .clone()
                .ok_or_else(|| err(Some(line_no), "key outside of any [section]"))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(err(Some(line_no), "empty key"));
            }
            let value = value.trim().to_string();
            if let Some((_, prev_line)) = doc
                .sections
                .get(&section)
                .and_then(|keys| keys.get(&key))
            {
                return Err(err(
                    Some(line_no),
                    format!("duplicate key `{section}.{key}` (first set on line {prev_line})"),
                ));
            }
            doc.sections
                .get_mut(&section)
                .expect("section created above")
                .insert(key, (value, line_no));
        }
        Ok(doc)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|keys| keys.get(key))
            .map(|(value, _)| value.as_str())
    }

    fn require(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.get(section, key)
            .ok_or_else(|| err(None, format!("missing required key `{section}.{key}`")))
    }

    fn parse_value<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        value: &str,
    ) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        value.parse::<T>().map_err(|e| {
            let line = self
                .sections
                .get(section)
                .and_then(|keys| keys.get(key))
                .map(|(_, l)| *l);
            err(line, format!("invalid value for `{section}.{key}`: {e}"))
        })
    }

    pub fn get_parsed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
    ) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(value) => Ok(Some(self.parse_value(section, key, value)?)),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
    ) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let value = self.require(section, key)?;
        self.parse_value(section, key, value)
    }

    pub fn get_list<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
    ) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(value) => {
                let mut out = Vec::new();
                for token in value.split(',') {
                    let token = token.trim();
                    if token.is_empty() {
                        continue;
                    }
                    out.push(self.parse_value(section, key, token)?);
                }
                Ok(Some(out))
            }
        }
    }

    pub fn unknown_key_check(
        &self,
        known: &[(&str, &[&str])],
    ) -> Result<(), ConfigError> {
        for (section, keys) in &self.sections {
            let Some((_, known_keys)) = known.iter().find(|(s, _)| s == section) else {
                return Err(err(None, format!("unknown section `[{section}]`")));
            };
            for (key, (_, line)) in keys {
                if !known_keys.contains(&key.as_str()) {
                    return Err(err(
                        Some(*line),
                        format!("unknown key `{section}.{key}`"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    Identity,
    Affine,
    Diffusion,
    AdvectionDiffusion,
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Parameter dimension (and KL mode count for the diffusion problem).
    pub d: usize,
    /// State dimension for the identity/affine kinds.
    pub n: usize,
    /// Interior grid size for the PDE kinds.
    pub m: usize,
    pub seed: u64,
    pub spd: bool,
    pub kl_scale: f64,
    pub cov_scale: f64,
    pub corr_len_sq: f64,
    pub upwind: bool,
}

#[derive(Debug, Clone)]
pub enum BasisConfig {
    TotalDegree(usize),
    Tensor(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct SolverSection {
    pub method: Option<String>,
    pub rtol: f64,
    pub maxiter: Option<usize>,
    pub record_history: bool,
}

#[derive(Debug, Clone)]
pub struct PreconditionerSection {
    pub kind: String,
    pub mean_order: usize,
    pub seed: u64,
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub write_coefficients: bool,
    pub write_moments: bool,
    pub write_history: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub basis: BasisConfig,
    /// Per-dimension quadrature orders.
    pub quadrature_orders: Vec<usize>,
    pub solver: SolverSection,
    pub preconditioner: PreconditionerSection,
    pub output: OutputSection,
    pub benchmark_random_runs: usize,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "problem",
        &[
            "kind",
            "d",
            "n",
            "m",
            "seed",
            "spd",
            "kl_scale",
            "cov_scale",
            "corr_len_sq",
            "upwind",
        ],
    ),
    ("basis", &["kind", "n", "orders"]),
    ("quadrature", &["order", "orders"]),
    ("solver", &["method", "rtol", "maxiter", "record_history"]),
    (
        "preconditioner",
        &["kind", "mean_order", "seed", "point"],
    ),
    ("output", &["dir", "write_coefficients", "write_moments", "write_history"]),
    ("benchmark", &["random_runs"]),
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let doc = IniDoc::parse(text)?;
        doc.unknown_key_check(KNOWN_KEYS)?;

        let kind = match doc.require("problem", "kind")? {
            "identity" => ProblemKind::Identity,
            "affine" => ProblemKind::Affine,
            "diffusion" => ProblemKind::Diffusion,
            "advection-diffusion" => ProblemKind::AdvectionDiffusion,
            other => {
                return Err(err(
                    None,
                    format!(
                        "unknown problem kind `{other}` (expected identity, affine, \
                         diffusion, or advection-diffusion)"
                    ),
                ))
            }
        };
        let d: usize = doc.require_parsed("problem", "d")?;
        if d == 0 {
            return Err(err(None, "`problem.d` must be >= 1"));
        }
        let problem = ProblemConfig {
            kind: kind.clone(),
            d,
            n: doc.get_parsed("problem", "n")?.unwrap_or(4),
            m: doc.get_parsed("problem", "m")?.unwrap_or(8),
            seed: doc.get_parsed("problem", "seed")?.unwrap_or(0),
            spd: doc.get_parsed("problem", "spd")?.unwrap_or(true),
            kl_scale: doc.get_parsed("problem", "kl_scale")?.unwrap_or(2.0),
            cov_scale: doc.get_parsed("problem", "cov_scale")?.unwrap_or(2.0),
            corr_len_sq: doc.get_parsed("problem", "corr_len_sq")?.unwrap_or(2.0),
            upwind: doc.get_parsed("problem", "upwind")?.unwrap_or(true),
        };

        let basis_kind: String = doc
            .get_parsed::<String>("basis", "kind")?
            .unwrap_or_else(|| "total-degree".to_string());
        let basis = match basis_kind.as_str() {
            "total-degree" => BasisConfig::TotalDegree(doc.require_parsed("basis", "n")?),
            "tensor" => {
                let orders: Vec<usize> = doc
                    .get_list("basis", "orders")?
                    .ok_or_else(|| err(None, "missing required key `basis.orders`"))?;
                if orders.len() != d {
                    return Err(err(
                        None,
                        format!(
                            "`basis.orders` has {} entries but `problem.d` is {d}",
                            orders.len()
                        ),
                    ));
                }
                BasisConfig::Tensor(orders)
            }
            other => {
                return Err(err(
                    None,
                    format!("unknown basis kind `{other}` (expected total-degree or tensor)"),
                ))
            }
        };

        let default_order = match &basis {
            BasisConfig::TotalDegree(n) => n + 1,
            BasisConfig::Tensor(orders) => orders.iter().copied().max().unwrap_or(0) + 1,
        };
        let quadrature_orders = match doc.get_list::<usize>("quadrature", "orders")? {
            Some(orders) => {
                if orders.len() != d {
                    return Err(err(
                        None,
                        format!(
                            "`quadrature.orders` has {} entries but `problem.d` is {d}",
                            orders.len()
                        ),
                    ));
                }
                orders
            }
            None => {
                let order = doc
                    .get_parsed("quadrature", "order")?
                    .unwrap_or(default_order);
                vec![order; d]
            }
        };
        if quadrature_orders.iter().any(|&o| o == 0) {
            return Err(err(None, "quadrature orders must all be >= 1"));
        }

        let solver = SolverSection {
            method: doc.get_parsed("solver", "method")?,
            rtol: doc.get_parsed("solver", "rtol")?.unwrap_or(1e-8),
            maxiter: doc.get_parsed("solver", "maxiter")?,
            record_history: doc.get_parsed("solver", "record_history")?.unwrap_or(true),
        };
        if solver.rtol <= 0.0 {
            return Err(err(None, "`solver.rtol` must be positive"));
        }

        let preconditioner = PreconditionerSection {
            kind: doc
                .get_parsed::<String>("preconditioner", "kind")?
                .unwrap_or_else(|| "none".to_string()),
            mean_order: doc.get_parsed("preconditioner", "mean_order")?.unwrap_or(2),
            seed: doc.get_parsed("preconditioner", "seed")?.unwrap_or(0),
            point: doc.get_list("preconditioner", "point")?,
        };

        let output = OutputSection {
            dir: PathBuf::from(
                doc.get_parsed::<String>("output", "dir")?
                    .unwrap_or_else(|| "out".to_string()),
            ),
            write_coefficients: doc
                .get_parsed("output", "write_coefficients")?
                .unwrap_or(true),
            write_moments: doc.get_parsed("output", "write_moments")?.unwrap_or(true),
            write_history: doc.get_parsed("output", "write_history")?.unwrap_or(true),
        };

        Ok(ExperimentConfig {
            problem,
            basis,
            quadrature_orders,
            solver,
            preconditioner,
            output,
            benchmark_random_runs: doc.get_parsed("benchmark", "random_runs")?.unwrap_or(5),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[problem]
kind = identity
d = 2
n = 3

[basis]
n = 1
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(config.problem.kind, ProblemKind::Identity);
        assert_eq!(config.quadrature_orders, vec![2, 2]);
        assert_eq!(config.solver.rtol, 1e-8);
        assert_eq!(config.preconditioner.kind, "none");
        assert_eq!(config.benchmark_random_runs, 5);
    }

    #[test]
    fn missing_kind_names_the_key() {
        let text = "[problem]\nd = 2\n\n[basis]\nn = 1\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("problem.kind"), "{e}");
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "[problem]\nkind = identity\nd two\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = "[problem]\nkind = identity\nkind = affine\nd = 1\n\n[basis]\nn = 1\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "[problem]\nkind = identity\nd = 1\nbogus = 3\n\n[basis]\nn = 1\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("problem.bogus"), "{e}");
    }

    #[test]
    fn tensor_basis_orders_must_match_dimension() {
        let text = "\
[problem]
kind = identity
d = 3
n = 2

[basis]
kind = tensor
orders = 1,2
";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(e.to_string().contains("basis.orders"), "{e}");
    }
}
