use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::choice::{Attribute, ChoiceFit, ChoiceModelParams};
use crate::count::{CountFit, CountModelParams, CvRow, Standardization};
use crate::domain::OperatorGroup;
use crate::error::{Error, Result};

use super::{read_json, write_json};

/// Stored second-stage model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceModelFile {
    pub operator: OperatorGroup,
    pub reference_shell: usize,
    pub asc: Vec<f64>,
    /// Civil, commercial, defense and other payloads, then collision rate.
    pub beta: Vec<f64>,
    /// Access cost coefficient.
    pub gamma: f64,
    #[serde(default)]
    pub log_likelihood: Option<f64>,
    #[serde(default)]
    pub n_obs: Option<usize>,
    #[serde(default)]
    pub asc_penalty: f64,
}

impl ChoiceModelFile {
    pub fn from_params(operator: OperatorGroup, params: &ChoiceModelParams) -> Self {
        Self {
            operator,
            reference_shell: params.reference_shell,
            asc: params.asc.clone(),
            beta: params.beta.to_vec(),
            gamma: params.gamma,
            log_likelihood: None,
            n_obs: None,
            asc_penalty: params.asc_penalty,
        }
    }

    pub fn from_fit(fit: &ChoiceFit) -> Self {
        Self {
            log_likelihood: Some(fit.log_likelihood),
            n_obs: Some(fit.n_obs),
            ..Self::from_params(fit.group, &fit.params)
        }
    }

    pub fn params(&self) -> Result<ChoiceModelParams> {
        let beta: [f64; Attribute::COUNT] = self.beta.as_slice().try_into().map_err(|_| Error::DimensionMismatch {
            what: format!("{} beta", self.operator),
            expected: Attribute::COUNT,
            found: self.beta.len(),
        })?;
        let p = ChoiceModelParams {
            asc: self.asc.clone(),
            beta,
            gamma: self.gamma,
            reference_shell: self.reference_shell,
            asc_penalty: self.asc_penalty,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Stored first-stage model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountModelFile {
    pub operator: OperatorGroup,
    pub omega: Vec<f64>,
    pub lambda: f64,
    pub standardization: Standardization,
    #[serde(default)]
    pub cv_table: Vec<CvRow>,
    #[serde(default)]
    pub n_obs: Option<usize>,
}

impl CountModelFile {
    pub fn from_params(operator: OperatorGroup, params: &CountModelParams) -> Self {
        Self {
            operator,
            omega: params.omega.clone(),
            lambda: params.lambda,
            standardization: params.standardization.clone(),
            cv_table: Vec::new(),
            n_obs: None,
        }
    }

    pub fn from_fit(fit: &CountFit) -> Self {
        Self {
            cv_table: fit.cv_table.clone(),
            n_obs: Some(fit.n_obs),
            ..Self::from_params(fit.group, &fit.params)
        }
    }

    pub fn params(&self) -> Result<CountModelParams> {
        let p = self.omega.len();
        let s = &self.standardization;
        if p == 0 || s.means.len() + 1 != p || s.scales.len() + 1 != p {
            return Err(Error::invalid(format!(
                "{} count model: {} coefficients with {} means and {} scales",
                self.operator,
                p,
                s.means.len(),
                s.scales.len()
            )));
        }
        if s.scales.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("{} count model scales must be positive", self.operator)));
        }
        Ok(CountModelParams {
            omega: self.omega.clone(),
            lambda: self.lambda,
            standardization: s.clone(),
        })
    }
}

pub fn write_choice_model(path: &Path, model: &ChoiceModelFile) -> Result<()> {
    write_json(path, model)
}

pub fn load_choice_model(path: &Path) -> Result<ChoiceModelFile> {
    let m: ChoiceModelFile = read_json(path)?;
    m.params().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(m)
}

pub fn write_count_model(path: &Path, model: &CountModelFile) -> Result<()> {
    write_json(path, model)
}

pub fn load_count_model(path: &Path) -> Result<CountModelFile> {
    let m: CountModelFile = read_json(path)?;
    m.params().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = ChoiceModelParams::zeros(24);
        params.asc[3] = 0.1 + 0.2;
        params.beta = [-0.006, 0.015, -0.021, -0.001, -0.003];
        params.gamma = -0.017;
        params.reference_shell = 8;
        params.asc[8] = 0.0;
        let file = ChoiceModelFile::from_params(OperatorGroup::Commercial, &params);
        let p = dir.path().join("m.json");
        write_choice_model(&p, &file).unwrap();
        let back = load_choice_model(&p).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.params().unwrap(), params);
        let text = std::fs::read_to_string(&p).unwrap();
        for key in ["operator", "reference_shell", "asc", "beta", "gamma", "log_likelihood", "n_obs"] {
            assert!(text.contains(&format!("\"{key}\"")), "{key}");
        }
    }

    #[test]
    fn count_model_round_trip_and_shape_check() {
        let dir = tempfile::tempdir().unwrap();
        let params = CountModelParams {
            omega: vec![8.677, -3.917, 1.0 / 3.0],
            lambda: 0.25,
            standardization: Standardization {
                means: vec![0.75, 2.0],
                scales: vec![0.175, 0.48],
            },
        };
        let file = CountModelFile::from_params(OperatorGroup::Commercial, &params);
        let p = dir.path().join("c.json");
        write_count_model(&p, &file).unwrap();
        assert_eq!(load_count_model(&p).unwrap().params().unwrap(), params);
        let mut bad = file.clone();
        bad.omega.pop();
        write_count_model(&p, &bad).unwrap();
        assert!(load_count_model(&p).is_err());
    }
}
