//! Dense joint distributions over named discrete variables.
//!
//! The table is stored row-major over the cross product of the variable
//! domains, first variable slowest. Everything here is exact enumeration;
//! there is no sampling or approximation.

use crate::error::CausalError;
use crate::tol;

#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    variables: Vec<String>,
    domains: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from an already-normalized dense table.
    pub fn new(
        variables: Vec<String>,
        domains: Vec<Vec<String>>,
        probs: Vec<f64>,
    ) -> Result<Self, CausalError> {
        if variables.len() != domains.len() {
            return Err(CausalError::InvalidSpec {
                detail: "variable and domain counts differ".into(),
            });
        }
        let mut expected: usize = 1;
        for (v, d) in variables.iter().zip(&domains) {
            if d.is_empty() {
                return Err(CausalError::InvalidSpec {
                    detail: format!("variable '{v}' has an empty domain"),
                });
            }
            expected = expected.checked_mul(d.len()).ok_or(CausalError::StateSpaceTooLarge {
                states: u128::MAX,
                cap: tol::STATE_CAP,
            })?;
        }
        if probs.len() != expected {
            return Err(CausalError::InvalidSpec {
                detail: format!("table has {} entries, expected {expected}", probs.len()),
            });
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(CausalError::InvalidSpec {
                detail: format!("table entry {p} is not a probability"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol::JOINT_SUM {
            return Err(CausalError::InvalidSpec {
                detail: format!("table sums to {sum}, expected 1"),
            });
        }
        Ok(Self { variables, domains, probs })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn domain(&self, variable: &str) -> Result<&[String], CausalError> {
        let i = self.index_of(variable)?;
        Ok(&self.domains[i])
    }

    pub fn states(&self) -> usize {
        self.probs.len()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn index_of(&self, variable: &str) -> Result<usize, CausalError> {
        self.variables
            .iter()
            .position(|v| v == variable)
            .ok_or_else(|| CausalError::UnknownVariable { name: variable.to_string() })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.domains.len()];
        for i in (0..self.domains.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.domains[i + 1].len();
        }
        strides
    }

    /// Probability of one full assignment, given as (variable, value) pairs
    /// covering every variable exactly once.
    pub fn prob(&self, assignment: &[(&str, &str)]) -> Result<f64, CausalError> {
        if assignment.len() != self.variables.len() {
            return Err(CausalError::InvalidEvidence {
                detail: format!(
                    "assignment names {} variables, distribution has {}",
                    assignment.len(),
                    self.variables.len()
                ),
            });
        }
        let strides = self.strides();
        let mut offset = 0usize;
        let mut seen = vec![false; self.variables.len()];
        for (name, value) in assignment {
            let i = self.index_of(name)?;
            if seen[i] {
                return Err(CausalError::InvalidEvidence {
                    detail: format!("variable '{name}' assigned twice"),
                });
            }
            seen[i] = true;
            let vi = self.value_index(i, value)?;
            offset += strides[i] * vi;
        }
        Ok(self.probs[offset])
    }

    fn value_index(&self, var: usize, value: &str) -> Result<usize, CausalError> {
        self.domains[var].iter().position(|v| v == value).ok_or_else(|| {
            CausalError::UnknownValue {
                variable: self.variables[var].clone(),
                value: value.to_string(),
            }
        })
    }

    /// Iterates (assignment digits, probability) over every state.
    pub(crate) fn raw_entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let sizes: Vec<usize> = self.domains.iter().map(|d| d.len()).collect();
        let mut digits = vec![0usize; sizes.len()];
        let mut first = true;
        self.probs.iter().enumerate().map(move |(i, p)| {
            if first {
                first = false;
            } else {
                increment(&mut digits, &sizes);
            }
            debug_assert_eq!(i, encode(&digits, &sizes));
            (digits.clone(), *p)
        })
    }

    /// Iterates every state as (value labels, probability).
    pub fn entries(&self) -> impl Iterator<Item = (Vec<&str>, f64)> + '_ {
        self.raw_entries().map(move |(digits, p)| {
            let labels: Vec<&str> = digits
                .iter()
                .enumerate()
                .map(|(vi, &d)| self.domains[vi][d].as_str())
                .collect();
            (labels, p)
        })
    }

    /// Conditions on the given evidence and renormalizes. Conditioned
    /// variables are dropped from the result.
    pub fn condition(&self, evidence: &[(&str, &str)]) -> Result<Self, CausalError> {
        if evidence.is_empty() {
            return Err(CausalError::InvalidEvidence { detail: "empty evidence".into() });
        }
        let mut fixed: Vec<Option<usize>> = vec![None; self.variables.len()];
        for (name, value) in evidence {
            let i = self.index_of(name)?;
            if fixed[i].is_some() {
                return Err(CausalError::InvalidEvidence {
                    detail: format!("variable '{name}' assigned twice"),
                });
            }
            fixed[i] = Some(self.value_index(i, value)?);
        }
        if fixed.iter().all(|f| f.is_some()) {
            return Err(CausalError::InvalidEvidence {
                detail: "evidence covers every variable, nothing is left to condition".into(),
            });
        }

        let keep: Vec<usize> =
            (0..self.variables.len()).filter(|i| fixed[*i].is_none()).collect();
        let keep_sizes: Vec<usize> = keep.iter().map(|&i| self.domains[i].len()).collect();
        let mut table = vec![0.0f64; keep_sizes.iter().product()];
        let sizes: Vec<usize> = self.domains.iter().map(|d| d.len()).collect();
        let mut digits = vec![0usize; sizes.len()];
        for p in &self.probs {
            let matches = fixed
                .iter()
                .zip(&digits)
                .all(|(f, d)| f.map_or(true, |want| want == *d));
            if matches {
                let kept: Vec<usize> = keep.iter().map(|&i| digits[i]).collect();
                table[encode(&kept, &keep_sizes)] += p;
            }
            increment(&mut digits, &sizes);
        }

        let mass: f64 = table.iter().sum();
        if mass <= tol::EVIDENCE_FLOOR {
            return Err(CausalError::ZeroProbabilityEvidence {
                evidence: evidence
                    .iter()
                    .map(|(n, v)| format!("{n}={v}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                probability: mass,
            });
        }
        for p in &mut table {
            *p /= mass;
        }
        Ok(Self {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            domains: keep.iter().map(|&i| self.domains[i].clone()).collect(),
            probs: table,
        })
    }

    /// Sums out the named variables.
    pub fn marginalize_out(&self, drop: &[&str]) -> Result<Self, CausalError> {
        let mut dropped = vec![false; self.variables.len()];
        for name in drop {
            let i = self.index_of(name)?;
            if dropped[i] {
                return Err(CausalError::InvalidEvidence {
                    detail: format!("variable '{name}' listed twice"),
                });
            }
            dropped[i] = true;
        }
        if dropped.iter().all(|d| *d) {
            return Err(CausalError::InvalidEvidence {
                detail: "cannot marginalize out every variable".into(),
            });
        }
        let keep: Vec<usize> = (0..self.variables.len()).filter(|i| !dropped[*i]).collect();
        let keep_sizes: Vec<usize> = keep.iter().map(|&i| self.domains[i].len()).collect();
        let mut table = vec![0.0f64; keep_sizes.iter().product()];
        let sizes: Vec<usize> = self.domains.iter().map(|d| d.len()).collect();
        let mut digits = vec![0usize; sizes.len()];
        for p in &self.probs {
            let kept: Vec<usize> = keep.iter().map(|&i| digits[i]).collect();
            table[encode(&kept, &keep_sizes)] += p;
            increment(&mut digits, &sizes);
        }
        Ok(Self {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            domains: keep.iter().map(|&i| self.domains[i].clone()).collect(),
            probs: table,
        })
    }

    /// Marginal over exactly the named variables, in the given order.
    pub fn marginal(&self, keep: &[&str]) -> Result<Self, CausalError> {
        let drop: Vec<&str> = self
            .variables
            .iter()
            .map(String::as_str)
            .filter(|v| !keep.contains(v))
            .collect();
        for name in keep {
            self.index_of(name)?;
        }
        let mut out = if drop.is_empty() { self.clone() } else { self.marginalize_out(&drop)? };
        // Reorder axes to match the requested order.
        if out.variables.iter().map(String::as_str).ne(keep.iter().copied()) {
            let perm: Vec<usize> = keep
                .iter()
                .map(|name| out.variables.iter().position(|v| v == name).unwrap())
                .collect();
            let sizes: Vec<usize> = out.domains.iter().map(|d| d.len()).collect();
            let new_sizes: Vec<usize> = perm.iter().map(|&i| sizes[i]).collect();
            let mut table = vec![0.0f64; out.probs.len()];
            let mut digits = vec![0usize; sizes.len()];
            for p in &out.probs {
                let new_digits: Vec<usize> = perm.iter().map(|&i| digits[i]).collect();
                table[encode(&new_digits, &new_sizes)] = *p;
                increment(&mut digits, &sizes);
            }
            out = Self {
                variables: perm.iter().map(|&i| out.variables[i].clone()).collect(),
                domains: perm.iter().map(|&i| out.domains[i].clone()).collect(),
                probs: table,
            };
        }
        Ok(out)
    }

    /// Mutual information I(X;Y) in nats over this distribution's marginal
    /// of the two variables. Zero-probability cells contribute zero.
    pub fn mutual_information(&self, x: &str, y: &str) -> Result<f64, CausalError> {
        if x == y {
            return Err(CausalError::InvalidEvidence {
                detail: format!("mutual information needs two distinct variables, got '{x}' twice"),
            });
        }
        let m = self.marginal(&[x, y])?;
        let nx = m.domains[0].len();
        let ny = m.domains[1].len();
        let mut px = vec![0.0f64; nx];
        let mut py = vec![0.0f64; ny];
        for i in 0..nx {
            for j in 0..ny {
                let p = m.probs[i * ny + j];
                px[i] += p;
                py[j] += p;
            }
        }
        let mut mi = 0.0f64;
        for i in 0..nx {
            for j in 0..ny {
                let p = m.probs[i * ny + j];
                if p > 0.0 {
                    mi += p * (p / (px[i] * py[j])).ln();
                }
            }
        }
        if mi < 0.0 && mi >= tol::MI_NEGATIVE_FLOOR {
            mi = 0.0;
        }
        Ok(mi)
    }
}

fn encode(digits: &[usize], sizes: &[usize]) -> usize {
    let mut idx = 0usize;
    for (d, s) in digits.iter().zip(sizes) {
        idx = idx * s + d;
    }
    idx
}

fn increment(digits: &mut [usize], sizes: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < sizes[i] {
            return;
        }
        digits[i] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_pair() -> DiscreteDistribution {
        // Two independent biased coins.
        DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![vec!["0".into(), "1".into()], vec!["0".into(), "1".into()]],
            vec![0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4],
        )
        .unwrap()
    }

    #[test]
    fn prob_reads_the_right_cell() {
        let d = coin_pair();
        assert!((d.prob(&[("a", "1"), ("b", "0")]).unwrap() - 0.42).abs() < 1e-15);
        assert!((d.prob(&[("b", "0"), ("a", "1")]).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn condition_drops_the_variable_and_renormalizes() {
        let d = coin_pair();
        let c = d.condition(&[("a", "1")]).unwrap();
        assert_eq!(c.variables(), ["b".to_string()]);
        assert!((c.prob(&[("b", "0")]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_is_rejected() {
        let d = DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![vec!["0".into(), "1".into()], vec!["0".into(), "1".into()]],
            vec![0.5, 0.0, 0.5, 0.0],
        )
        .unwrap();
        let err = d.condition(&[("b", "1")]).unwrap_err();
        assert!(matches!(err, CausalError::ZeroProbabilityEvidence { .. }));
    }

    #[test]
    fn independent_variables_have_zero_mi() {
        let d = coin_pair();
        let mi = d.mutual_information("a", "b").unwrap();
        assert!(mi >= 0.0 && mi < 1e-15, "mi {mi}");
    }

    #[test]
    fn copied_variable_has_mi_equal_to_entropy() {
        // b is a deterministic copy of a, so I(a;b) = H(a).
        let p = 0.3f64;
        let d = DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![vec!["0".into(), "1".into()], vec!["0".into(), "1".into()]],
            vec![1.0 - p, 0.0, 0.0, p],
        )
        .unwrap();
        let h = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((d.mutual_information("a", "b").unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn marginal_reorders_axes() {
        let d = coin_pair();
        let m = d.marginal(&["b", "a"]).unwrap();
        assert_eq!(m.variables(), ["b".to_string(), "a".to_string()]);
        assert!((m.prob(&[("b", "0"), ("a", "1")]).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn unknown_variable_is_reported() {
        let d = coin_pair();
        assert!(matches!(
            d.mutual_information("a", "zz").unwrap_err(),
            CausalError::UnknownVariable { .. }
        ));
    }
}
