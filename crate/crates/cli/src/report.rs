use std::fmt::Write;

use orbitdemand::choice::{Attribute, ChoiceFit};
use orbitdemand::count::{CountFit, COUNT_COVARIATES};

/// Row labels of the choice coefficient table in print order, with the
/// index into `beta` (`None` for the access-cost coefficient).
pub const CHOICE_ROWS: [(&str, Option<usize>); 6] = [
    ("Civil payloads", Some(0)),
    ("Commercial payloads", Some(1)),
    ("Defense payloads", Some(2)),
    ("Other payloads", Some(3)),
    ("Access cost", None),
    ("Total PIB collision rate", Some(Attribute::COUNT - 1)),
];

fn cell(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

pub fn choice_table(fits: &[ChoiceFit]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<26}", "");
    for f in fits {
        let _ = write!(out, "{:>14}", f.group.name());
    }
    out.push('\n');
    for (label, idx) in CHOICE_ROWS {
        let _ = write!(out, "{label:<26}");
        for f in fits {
            let v = idx.map_or(f.params.gamma, |k| f.params.beta[k]);
            let _ = write!(out, "{:>14}", cell(v));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<26}", "Shell constants");
    for _ in fits {
        let _ = write!(out, "{:>14}", "yes");
    }
    out.push('\n');
    let _ = write!(out, "{:<26}", "Reference shell");
    for f in fits {
        let _ = write!(out, "{:>14}", f.params.reference_shell);
    }
    out.push('\n');
    let _ = write!(out, "{:<26}", "Log-likelihood");
    for f in fits {
        let _ = write!(out, "{:>14.2}", f.log_likelihood);
    }
    out.push('\n');
    let _ = write!(out, "{:<26}", "Observations");
    for f in fits {
        let _ = write!(out, "{:>14}", f.n_obs);
    }
    out.push('\n');
    out
}

/// Coefficients on the standardised scale, as estimated.
pub fn count_table(fits: &[CountFit]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<36}", "");
    for f in fits {
        let _ = write!(out, "{:>14}", f.group.name());
    }
    out.push('\n');
    let labels = std::iter::once("intercept").chain(COUNT_COVARIATES);
    for (k, label) in labels.enumerate() {
        let _ = write!(out, "{label:<36}");
        for f in fits {
            let v = f.params.omega.get(k).copied().unwrap_or(f64::NAN);
            let _ = write!(out, "{:>14}", cell(v));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<36}", "lambda");
    for f in fits {
        let _ = write!(out, "{:>14}", cell(f.params.lambda));
    }
    out.push('\n');
    let _ = write!(out, "{:<36}", "Observations");
    for f in fits {
        let _ = write!(out, "{:>14}", f.n_obs);
    }
    out.push('\n');
    out
}
