use std::fmt;

use serde::{Deserialize, Serialize};

use super::FormulaError;

/// A parsed `response ~ terms` model formula.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub response: String,
    /// Set by the `.` term: every column except the response.
    pub include_all: bool,
    pub included_terms: Vec<String>,
    pub excluded_terms: Vec<String>,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        let mut first = true;
        if self.include_all {
            f.write_str(".")?;
            first = false;
        }
        for term in &self.included_terms {
            if !first {
                f.write_str(" + ")?;
            }
            f.write_str(term)?;
            first = false;
        }
        for term in &self.excluded_terms {
            write!(f, " - {term}")?;
        }
        Ok(())
    }
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Parses `response ~ term (+ term | - term)*` where a term is a column name or `.`.
///
/// The response is never treated as a predictor, so naming it on the right-hand
/// side is a no-op.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let (lhs, rhs) = text.split_once('~').ok_or(FormulaError::MissingTilde)?;
    let response = lhs.trim();
    if response.is_empty() {
        return Err(FormulaError::EmptyResponse);
    }
    if !valid_identifier(response) {
        return Err(FormulaError::InvalidIdentifier(response.to_string()));
    }
    if rhs.trim().is_empty() {
        return Err(FormulaError::EmptyRhs);
    }

    // Split into signed terms; the leading term is implicitly `+`.
    let mut terms: Vec<(bool, &str)> = Vec::new();
    let mut start = 0;
    let mut plus = true;
    for (i, c) in rhs.char_indices() {
        if c == '+' || c == '-' {
            terms.push((plus, rhs[start..i].trim()));
            plus = c == '+';
            start = i + 1;
        }
    }
    terms.push((plus, rhs[start..].trim()));

    let mut formula = Formula {
        response: response.to_string(),
        include_all: false,
        included_terms: Vec::new(),
        excluded_terms: Vec::new(),
    };
    for (plus, term) in terms {
        if term == "." {
            if !plus {
                return Err(FormulaError::InvalidIdentifier("-.".into()));
            }
            formula.include_all = true;
            continue;
        }
        if !valid_identifier(term) {
            return Err(FormulaError::InvalidIdentifier(term.to_string()));
        }
        if !plus && !formula.include_all {
            return Err(FormulaError::MinusWithoutDot(term.to_string()));
        }
        if term == response {
            continue;
        }
        let list = if plus {
            &mut formula.included_terms
        } else {
            &mut formula.excluded_terms
        };
        if !list.iter().any(|t| t == term) {
            list.push(term.to_string());
        }
    }
    // `.` already covers every explicitly included column.
    if formula.include_all {
        formula.included_terms.clear();
    }
    if !formula.include_all && formula.included_terms.is_empty() {
        return Err(FormulaError::EmptyRhs);
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dot_formula() {
        let f = parse_formula("label ~ .").unwrap();
        assert_eq!(f.response, "label");
        assert!(f.include_all);
        assert!(f.excluded_terms.is_empty());
        assert_eq!(parse_formula("label~.").unwrap(), f);
    }

    #[test]
    fn explicit_terms() {
        let f = parse_formula("y ~ x1 + x2").unwrap();
        assert_eq!(f.response, "y");
        assert!(!f.include_all);
        assert_eq!(f.included_terms, vec!["x1", "x2"]);
    }

    #[test]
    fn dot_minus_term() {
        let f = parse_formula("y ~ . - x3").unwrap();
        assert!(f.include_all);
        assert_eq!(f.excluded_terms, vec!["x3"]);
    }

    #[test]
    fn duplicates_collapse() {
        let f = parse_formula("y ~ a + b + a").unwrap();
        assert_eq!(f.included_terms, vec!["a", "b"]);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_formula("y x1"), Err(FormulaError::MissingTilde));
        assert_eq!(parse_formula(" ~ x"), Err(FormulaError::EmptyResponse));
        assert_eq!(parse_formula("y ~  "), Err(FormulaError::EmptyRhs));
        assert!(matches!(parse_formula("y ~ x - z"), Err(FormulaError::MinusWithoutDot(_))));
        assert!(matches!(parse_formula("y ~ x$"), Err(FormulaError::InvalidIdentifier(_))));
        assert!(matches!(parse_formula("y ~ x +"), Err(FormulaError::InvalidIdentifier(_))));
        assert!(matches!(parse_formula("y ~ a ~ b"), Err(FormulaError::InvalidIdentifier(_))));
        assert!(matches!(parse_formula("y ~ a b"), Err(FormulaError::InvalidIdentifier(_))));
    }

    #[test]
    fn display_reparses() {
        for text in ["y ~ .", "y ~ a + b", "y ~ . - a - b"] {
            let f = parse_formula(text).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        }
    }

    proptest! {
        #[test]
        fn total_over_arbitrary_input(s in "[ a-z0-9_.~+\\-$]{0,24}") {
            // Either parses or yields one of the named errors; never panics.
            if let Ok(f) = parse_formula(&s) {
                prop_assert!(!f.included_terms.contains(&f.response));
                prop_assert!(!f.excluded_terms.contains(&f.response));
                prop_assert!(f.include_all || !f.included_terms.is_empty());
                prop_assert!(f.include_all || f.excluded_terms.is_empty());
            }
        }
    }
}
