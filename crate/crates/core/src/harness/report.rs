use crate::error::{Error, Result};
use std::fmt::Write;

/// Errors against one parameter axis, with the configuration that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub parameter_axis: Vec<f64>,
    pub errors: Vec<f64>,
    /// `key = value` lines of the resolved configuration.
    pub metadata: Vec<String>,
    /// Extra named columns reported alongside (written as comment lines).
    pub auxiliary: Vec<(String, Vec<f64>)>,
    pub monotone_flag: bool,
    /// Set when a run aborted and the report holds only the rows before it.
    pub partial: Option<String>,
}

/// `true` iff `errors` is non-increasing.
pub fn non_increasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0])
}

impl ExperimentReport {
    pub fn new(
        experiment_id: impl Into<String>,
        parameter_axis: Vec<f64>,
        errors: Vec<f64>,
        metadata: Vec<String>,
    ) -> Result<Self> {
        if parameter_axis.len() != errors.len() {
            return Err(Error::Shape(format!(
                "{} parameters for {} errors",
                parameter_axis.len(),
                errors.len()
            )));
        }
        if let Some(e) = errors.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::Validation(format!(
                "errors must be non-negative, got {e}"
            )));
        }
        let monotone_flag = non_increasing(&errors);
        Ok(ExperimentReport {
            experiment_id: experiment_id.into(),
            parameter_axis,
            errors,
            metadata,
            auxiliary: Vec::new(),
            monotone_flag,
            partial: None,
        })
    }

    /// `param,error,monotone` rows, then `#` lines with the auxiliary columns
    /// and the configuration echo.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,error,monotone\n");
        for (p, e) in self.parameter_axis.iter().zip(&self.errors) {
            let _ = writeln!(out, "{p:.16e},{e:.16e},{}", self.monotone_flag);
        }
        let _ = writeln!(out, "# experiment: {}", self.experiment_id);
        if let Some(reason) = &self.partial {
            let _ = writeln!(out, "# partial: {reason}");
        }
        for (name, col) in &self.auxiliary {
            let joined: Vec<String> = col.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "# {name}: {}", joined.join(","));
        }
        for line in &self.metadata {
            let _ = writeln!(out, "# config: {line}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_csv_layout() {
        let mut r = ExperimentReport::new(
            "xi",
            vec![0.1, 0.01],
            vec![0.3, 0.1],
            vec!["grid.n = 8".into()],
        )
        .unwrap();
        r.auxiliary.push(("kernel_residual".into(), vec![1.0, 0.5]));
        assert!(r.monotone_flag);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("param,error,monotone"));
        assert_eq!(
            lines.next(),
            Some("1.0000000000000001e-1,2.9999999999999999e-1,true")
        );
        assert!(csv.contains("# config: grid.n = 8"));
        assert!(ExperimentReport::new("x", vec![1.0], vec![], vec![]).is_err());
        assert!(
            !ExperimentReport::new("x", vec![1.0, 2.0], vec![1.0, 2.0], vec![])
                .unwrap()
                .monotone_flag
        );
    }
}
