//! Machine-readable reports: deterministic JSON and CSV renderings of
//! per-method estimates plus the reconciled bracket.

use crate::estimate::{ExponentEstimate, Witness};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub estimates: Vec<ExponentEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconciled: Option<ExponentEstimate>,
    /// spectral-radius view of the reconciled (or single) bracket
    pub r_lower: f64,
    pub r_upper: f64,
}

impl Report {
    pub fn new(estimates: Vec<ExponentEstimate>, reconciled: Option<ExponentEstimate>) -> Self {
        let main = reconciled
            .as_ref()
            .or_else(|| estimates.first())
            .expect("a report needs at least one estimate");
        let (r_lower, r_upper) = main.r_bracket();
        Report { estimates, reconciled, r_lower, r_upper }
    }

    /// Deterministic JSON: serde_json writes struct fields in
    /// declaration order and f64 values canonically, so identical
    /// inputs give byte-identical output.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,lower,upper,r_lower,r_upper,n_used,exactness,witness\n");
        let mut rows: Vec<&ExponentEstimate> = self.estimates.iter().collect();
        if let Some(r) = &self.reconciled {
            rows.push(r);
        }
        for e in rows {
            let (rl, ru) = e.r_bracket();
            let exact = serde_json::to_value(e.exactness)
                .expect("exactness serializes")
                .as_str()
                .expect("exactness is a string")
                .to_string();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.method,
                fmt_num(e.lower),
                fmt_num(e.upper),
                fmt_num(rl),
                fmt_num(ru),
                e.n_used,
                exact,
                witness_cell(&e.witness),
            ));
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn witness_cell(w: &Option<Witness>) -> String {
    match w {
        None => String::new(),
        Some(Witness::Orbit { states }) => format!(
            "\"orbit:{}\"",
            states.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
        ),
        Some(Witness::Measure { atoms }) => format!(
            "\"measure:{}\"",
            atoms
                .iter()
                .map(|(s, p)| format!("{s}={p}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        Some(Witness::Direction { entries }) => format!(
            "\"direction:{}\"",
            entries
                .iter()
                .map(|(re, im)| format!("{re}+{im}i"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trips_and_is_deterministic() {
        let e = ExponentEstimate::new(0.5, 1.5, "gelfand", 100)
            .with_witness(Witness::Orbit { states: vec![0, 1] });
        let rep = Report::new(vec![e], None);
        let a = rep.to_json();
        let b = rep.to_json();
        assert_eq!(a, b);
        let back: Report = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), a);
    }

    #[test]
    fn csv_has_the_published_columns() {
        let e = ExponentEstimate::new(f64::NEG_INFINITY, 0.0, "karp", 4);
        let rep = Report::new(vec![e], None);
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,lower,upper,r_lower,r_upper,n_used,exactness,witness"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("karp,-inf,0,0,1,4,"));
    }
}
