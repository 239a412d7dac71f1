//! Text renderings of determining systems.

use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::det_eqs::{DetEquation, DetSystem, DetTerm, TermKind};
use crate::exact::Rational;

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetFormat {
    #[default]
    Json,
    Latex,
}

impl FromStr for DetFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(DetFormat::Json),
            "latex" | "tex" => Ok(DetFormat::Latex),
            other => Err(ReportError::UnknownFormat(other.into())),
        }
    }
}

/// Render a determining system as pretty JSON or a LaTeX `align*` block.
pub fn emit_detsystem(sys: &DetSystem, format: DetFormat) -> String {
    match format {
        DetFormat::Json => {
            let mut s = serde_json::to_string_pretty(sys).expect("det system serializes");
            s.push('\n');
            s
        }
        DetFormat::Latex => latex(sys),
    }
}

/// Inverse of the JSON rendering.
pub fn parse_detsystem_json(text: &str) -> Result<DetSystem, ReportError> {
    Ok(serde_json::from_str(text)?)
}

fn indices(ix: &[usize]) -> String {
    ix.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

fn tensor(rank: usize, upper: &str) -> String {
    if upper.is_empty() {
        format!("K_{{{rank}}}")
    } else {
        format!("K_{{{rank}}}^{{{upper}}}")
    }
}

fn coefficient(c: &Rational, first: bool) -> String {
    let sign = match (c.is_negative(), first) {
        (true, _) => "- ",
        (false, true) => "",
        (false, false) => "+ ",
    };
    let mag = c.abs();
    let body = if mag.is_one() {
        String::new()
    } else if mag.denom().is_one() {
        mag.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", mag.numer(), mag.denom())
    };
    format!("{sign}{body}")
}

fn mass(p: i32) -> String {
    match p {
        0 => String::new(),
        1 => "M\\,".into(),
        p => format!("M^{{{p}}}\\,"),
    }
}

fn term_body(t: &DetTerm, free: &[usize]) -> String {
    match &t.kind {
        TermKind::TimeDerivative => format!("\\partial_t {}", tensor(t.rank, &indices(free))),
        TermKind::SymGradient => match free.len() {
            0 => "0".into(),
            1 => format!("\\partial^{{{}}} {}", free[0], tensor(t.rank, "")),
            _ => format!(
                "\\partial^{{({}}} {}",
                free[0],
                tensor(t.rank, &format!("{})", indices(&free[1..])))
            ),
        },
        TermKind::PotentialContraction { order } => {
            let bs: Vec<String> = (1..=*order).map(|b| format!("b_{{{b}}}")).collect();
            let mut upper = indices(free);
            if !bs.is_empty() {
                if !upper.is_empty() {
                    upper.push(' ');
                }
                upper.push_str(&bs.join(" "));
            }
            let grads: String = bs.iter().map(|b| format!("\\partial_{{{b}}}")).collect();
            format!("{}\\,{grads} V", tensor(t.rank, &upper))
        }
    }
}

fn equation_line(eq: &DetEquation) -> String {
    let mut s = String::new();
    for (k, t) in eq.terms.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{}{}{}", coefficient(&t.coefficient, k == 0), mass(t.mass_power), term_body(t, &eq.free)).unwrap();
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

fn latex(sys: &DetSystem) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "% determining equations: order {}, dimension {}{}",
        sys.order,
        sys.dim,
        if sys.stationary { ", stationary" } else { "" }
    )
    .unwrap();
    writeln!(out, "% (a b) denotes averaged symmetrization; repeated b indices are summed").unwrap();
    out.push_str("\\begin{align*}\n");
    let n = sys.equations.len();
    for (k, eq) in sys.equations.iter().enumerate() {
        let end = if k + 1 < n { " \\\\" } else { "" };
        writeln!(out, "  {} &= 0{end}", equation_line(eq)).unwrap();
    }
    out.push_str("\\end{align*}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det_eqs::generate_det_system;

    #[test]
    fn json_round_trip() {
        for (n, m, st) in [(1, 1, false), (2, 2, false), (3, 1, true), (2, 3, true)] {
            let sys = generate_det_system(n, m, st);
            let text = emit_detsystem(&sys, DetFormat::Json);
            assert_eq!(parse_detsystem_json(&text).unwrap(), sys);
        }
    }

    #[test]
    fn latex_brackets_and_time_tokens() {
        let sys = generate_det_system(2, 2, false);
        let tex = emit_detsystem(&sys, DetFormat::Latex);
        assert!(tex.contains("\\partial^{(1} K_{1}^{2)}"), "{tex}");
        assert!(tex.contains("\\partial_t"));
        let st = emit_detsystem(&generate_det_system(3, 1, true), DetFormat::Latex);
        assert!(!st.contains("\\partial_t"));
    }

    #[test]
    fn first_order_latex() {
        let tex = emit_detsystem(&generate_det_system(1, 1, false), DetFormat::Latex);
        assert!(tex.contains("K_{1}^{b_{1}}\\,\\partial_{b_{1}} V"), "{tex}");
    }

    #[test]
    fn format_names() {
        assert_eq!("LaTeX".parse::<DetFormat>().unwrap(), DetFormat::Latex);
        assert!("xml".parse::<DetFormat>().is_err());
    }
}
