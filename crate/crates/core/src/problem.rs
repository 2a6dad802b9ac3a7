use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::PotentialExpr;

/// Sample count used to check that a potential is finite on its segment.
const POTENTIAL_PROBES: usize = 257;

/// Parameters of the two-segment problem on [-1, 0) and (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a1: f64,
    pub a2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub q_left: PotentialExpr,
    pub q_right: PotentialExpr,
    pub strict_validation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a1: f64,
    pub a2: f64,
    pub beta: [f64; 2],
    pub delta: [f64; 2],
    pub q_left: PotentialExpr,
    pub q_right: PotentialExpr,
    #[serde(default = "default_strict")]
    pub strict_validation: bool,
}

fn default_strict() -> bool {
    true
}

impl Problem {
    /// The reference configuration: unit coefficients, `beta = (0, 1)`,
    /// `delta = (1, 1)` and no potential.
    pub fn reference() -> Self {
        Self {
            a1: 1.0,
            a2: 1.0,
            beta1: 0.0,
            beta2: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            q_left: PotentialExpr::constant(0.0),
            q_right: PotentialExpr::constant(0.0),
            strict_validation: true,
        }
    }

    pub fn from_config(cfg: ProblemConfig) -> Result<Self> {
        let p = Self {
            a1: cfg.a1,
            a2: cfg.a2,
            beta1: cfg.beta[0],
            beta2: cfg.beta[1],
            delta1: cfg.delta[0],
            delta2: cfg.delta[1],
            q_left: cfg.q_left,
            q_right: cfg.q_right,
            strict_validation: cfg.strict_validation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_config(&self) -> ProblemConfig {
        ProblemConfig {
            a1: self.a1,
            a2: self.a2,
            beta: [self.beta1, self.beta2],
            delta: [self.delta1, self.delta2],
            q_left: self.q_left.clone(),
            q_right: self.q_right.clone(),
            strict_validation: self.strict_validation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a1", self.a1),
            ("a2", self.a2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Constraint(format!("{name} must be finite")));
            }
        }
        if self.a1 <= 0.0 {
            return Err(Error::Constraint("a1 must be > 0".into()));
        }
        if self.a2 <= 0.0 {
            return Err(Error::Constraint("a2 must be > 0".into()));
        }
        if self.strict_validation {
            if self.beta1.abs() + self.beta2.abs() == 0.0 {
                return Err(Error::Constraint(
                    "|beta1|+|beta2| must be nonzero (|β₁|+|β₂|≠0)".into(),
                ));
            }
            if self.delta1.abs() + self.delta2.abs() == 0.0 {
                return Err(Error::Constraint(
                    "|delta1|+|delta2| must be nonzero (|δ₁|+|δ₂|≠0)".into(),
                ));
            }
        }
        check_potential("q_left", &self.q_left, -1.0, 0.0)?;
        check_potential("q_right", &self.q_right, 0.0, 1.0)?;
        Ok(())
    }

    pub fn a_min(&self) -> f64 {
        self.a1.min(self.a2)
    }

    pub fn a_max(&self) -> f64 {
        self.a1.max(self.a2)
    }

    pub fn potential_is_zero(&self) -> bool {
        self.q_left.as_constant() == Some(0.0) && self.q_right.as_constant() == Some(0.0)
    }
}

fn check_potential(name: &str, q: &PotentialExpr, lo: f64, hi: f64) -> Result<()> {
    for i in 0..POTENTIAL_PROBES {
        let x = lo + (hi - lo) * i as f64 / (POTENTIAL_PROBES - 1) as f64;
        if let Err(e) = q.eval(x) {
            return Err(Error::Constraint(format!("{name} must be finite on [{lo}, {hi}]: {e}")));
        }
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<Problem> {
    let cfg: ProblemConfig = match serde_json::from_str(text) {
        Ok(cfg) => cfg,
        Err(e) if e.is_data() => {
            // Potentials that fail to parse surface here as data errors.
            return Err(Error::Constraint(e.to_string()));
        }
        Err(e) => return Err(Error::ConfigSyntax(e.to_string())),
    };
    Problem::from_config(cfg)
}

pub fn parse_potential(text: &str) -> Result<PotentialExpr> {
    Ok(PotentialExpr::parse(text)?)
}

/// `lambda` together with its principal fourth root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub lambda: Complex64,
    pub s: Complex64,
}

impl SpectralParam {
    pub fn from_lambda(lambda: Complex64) -> Self {
        Self {
            lambda,
            s: principal_fourth_root(lambda),
        }
    }

    pub fn from_s(s: Complex64) -> Self {
        let s2 = s * s;
        Self { lambda: s2 * s2, s }
    }
}

/// Fourth root with argument in (-pi/4, pi/4].
pub fn principal_fourth_root(lambda: Complex64) -> Complex64 {
    if lambda.re == 0.0 && lambda.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // Treat -0.0 imaginary parts on the negative axis as the upper side.
    let theta = if lambda.im == 0.0 && lambda.re < 0.0 {
        PI
    } else {
        lambda.im.atan2(lambda.re)
    };
    Complex64::from_polar(lambda.norm().sqrt().sqrt(), theta / 4.0)
}

/// Real axis parametrization used by the scans: `lambda = sign(r) * r^4`.
pub fn axis_lambda(r: f64) -> f64 {
    let r2 = r * r;
    r.signum() * r2 * r2
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: &str = r#"{"a1":1,"a2":1,"beta":[0,1],"delta":[1,1],"q_left":"0","q_right":"0"}"#;

    #[test]
    fn reference_config_parses() {
        let p = parse_config(REF).unwrap();
        assert_eq!(p, Problem::reference());
        assert!(p.potential_is_zero());
    }

    #[test]
    fn negative_a1_named() {
        let text = REF.replace(r#""a1":1"#, r#""a1":-1"#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("a1 must be > 0"), "{err}");
    }

    #[test]
    fn zero_delta_strict_rejected() {
        let text = REF.replace("[1,1]", "[0,0]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("|δ₁|+|δ₂|≠0"), "{err}");
    }

    #[test]
    fn zero_delta_relaxed_accepted() {
        let text = REF
            .replace("[1,1]", "[0,0]")
            .replace('}', r#","strict_validation":false}"#);
        let p = parse_config(&text).unwrap();
        assert!(!p.strict_validation);
    }

    #[test]
    fn syntax_error_is_distinguished() {
        assert!(matches!(parse_config("{\"a1\": 1,"), Err(Error::ConfigSyntax(_))));
    }

    #[test]
    fn bad_potential_rejected() {
        let text = REF.replace(r#""q_left":"0""#, r#""q_left":"1/x""#);
        assert!(matches!(parse_config(&text), Err(Error::Constraint(_))));
        let text = REF.replace(r#""q_right":"0""#, r#""q_right":"sin(x""#);
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let text = REF.replace('}', r#","gamma":3}"#);
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn config_round_trip() {
        let p = parse_config(REF).unwrap();
        let text = serde_json::to_string(&p.to_config()).unwrap();
        assert_eq!(parse_config(&text).unwrap(), p);
    }

    #[test]
    fn fourth_root_branch() {
        let s = principal_fourth_root(Complex64::new(-16.0, 0.0));
        assert!((s - Complex64::from_polar(2.0, PI / 4.0)).norm() < 1e-15);
        let s = principal_fourth_root(Complex64::new(-16.0, -0.0));
        assert!((s.arg() - PI / 4.0).abs() < 1e-15);
        let s = principal_fourth_root(Complex64::new(81.0, 0.0));
        assert_eq!(s, Complex64::new(3.0, 0.0));
        assert_eq!(
            principal_fourth_root(Complex64::new(0.0, 0.0)),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn axis_parametrization() {
        assert_eq!(axis_lambda(2.0), 16.0);
        assert_eq!(axis_lambda(-2.0), -16.0);
        assert_eq!(axis_lambda(0.0), 0.0);
    }
}
