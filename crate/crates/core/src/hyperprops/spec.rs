use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltlf::{parse, AtomicPredicate, Formula, HyperFormula, Quantifier};
use crate::region::StateRegion;

/// An observational property with its probability threshold `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PropertySpec {
    InitialDetect { eps: f64, lam: f64, p: f64 },
    CurrentDetect { eps: f64, lam: f64, p: f64 },
    InitialOpacity { eps: f64, p: f64, secret: StateRegion },
    CurrentOpacity { eps: f64, p: f64, secret: StateRegion },
    Custom {
        formula: String,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        secret: Option<StateRegion>,
    },
}

impl PropertySpec {
    pub fn p(&self) -> f64 {
        match self {
            PropertySpec::InitialDetect { p, .. }
            | PropertySpec::CurrentDetect { p, .. }
            | PropertySpec::InitialOpacity { p, .. }
            | PropertySpec::CurrentOpacity { p, .. }
            | PropertySpec::Custom { p, .. } => *p,
        }
    }

    pub fn secret(&self) -> Option<&StateRegion> {
        match self {
            PropertySpec::InitialOpacity { secret, .. } | PropertySpec::CurrentOpacity { secret, .. } => Some(secret),
            PropertySpec::Custom { secret, .. } => secret.as_ref(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("threshold p = {p} must lie in (0, 1]")));
        }
        let radii: &[f64] = match self {
            PropertySpec::InitialDetect { eps, lam, .. } | PropertySpec::CurrentDetect { eps, lam, .. } => &[*eps, *lam],
            PropertySpec::InitialOpacity { eps, .. } | PropertySpec::CurrentOpacity { eps, .. } => &[*eps],
            PropertySpec::Custom { .. } => &[],
        };
        if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config("eps and lam must be finite and nonnegative".into()));
        }
        let h = self.to_formula()?;
        if h.body.atoms().iter().any(AtomicPredicate::uses_secret) && self.secret().is_none() {
            return Err(Error::MissingSecret);
        }
        Ok(())
    }

    /// The hyperformula encoding of the property.
    pub fn to_formula(&self) -> Result<HyperFormula> {
        use AtomicPredicate::*;
        let atom = Formula::atom;
        Ok(match self {
            PropertySpec::InitialDetect { eps, lam, .. } => HyperFormula::new(
                Quantifier::Forall,
                Formula::implies(Formula::always(atom(OutClose(*eps))), atom(StateClose(*lam))),
            ),
            PropertySpec::CurrentDetect { eps, lam, .. } => HyperFormula::new(
                Quantifier::Forall,
                Formula::implies(
                    Formula::always(atom(OutClose(*eps))),
                    Formula::eventually(Formula::always(atom(StateClose(*lam)))),
                ),
            ),
            PropertySpec::InitialOpacity { eps, .. } => HyperFormula::new(
                Quantifier::Exists,
                Formula::implies(
                    atom(SecFirst),
                    Formula::and(Formula::always(atom(OutClose(*eps))), atom(NonsecSecond)),
                ),
            ),
            PropertySpec::CurrentOpacity { eps, .. } => HyperFormula::new(
                Quantifier::Exists,
                Formula::implies(
                    Formula::eventually(Formula::always(atom(SecFirst))),
                    Formula::and(
                        Formula::always(atom(OutClose(*eps))),
                        Formula::eventually(Formula::always(atom(NonsecSecond))),
                    ),
                ),
            ),
            PropertySpec::Custom { formula, .. } => parse(formula)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::BoxRegion;

    #[test]
    fn named_encodings() {
        let cd = PropertySpec::CurrentDetect { eps: 0.5, lam: 0.8, p: 0.9 };
        assert_eq!(cd.to_formula().unwrap(), parse("forall s2. G out_close(0.5) -> F G state_close(0.8)").unwrap());
        let id = PropertySpec::InitialDetect { eps: 0.5, lam: 0.8, p: 0.9 };
        assert_eq!(id.to_formula().unwrap(), parse("forall s2. G out_close(0.5) -> state_close(0.8)").unwrap());
        let secret = StateRegion::from_box(BoxRegion::symmetric(1, 1.0));
        let io = PropertySpec::InitialOpacity { eps: 0.25, p: 0.9, secret: secret.clone() };
        assert_eq!(io.to_formula().unwrap(), parse("exists s2. sec1 -> (G out_close(0.25) & nonsec2)").unwrap());
        let co = PropertySpec::CurrentOpacity { eps: 0.25, p: 0.9, secret };
        assert_eq!(
            co.to_formula().unwrap(),
            parse("exists s2. F G sec1 -> (G out_close(0.25) & F G nonsec2)").unwrap()
        );
    }

    #[test]
    fn custom_passes_through() {
        let text = "exists s2. X true U sec1";
        let spec = PropertySpec::Custom { formula: text.into(), p: 0.5, secret: None };
        assert_eq!(spec.to_formula().unwrap(), parse(text).unwrap());
        assert!(matches!(spec.validate(), Err(Error::MissingSecret)));
    }

    #[test]
    fn thresholds_are_checked() {
        assert!(PropertySpec::CurrentDetect { eps: 0.5, lam: 0.8, p: 0.0 }.validate().is_err());
        assert!(PropertySpec::CurrentDetect { eps: -0.5, lam: 0.8, p: 0.5 }.validate().is_err());
        assert!(PropertySpec::CurrentDetect { eps: 0.5, lam: 0.8, p: 1.0 }.validate().is_ok());
    }
}
