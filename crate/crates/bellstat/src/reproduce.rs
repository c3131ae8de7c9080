//! Re-run every analysis on the six embedded experiments and compare with
//! the published figures.

use std::fmt::Write as _;

use bell_core::data::{load_embedded, EMBEDDED_NAMES};
use bell_core::dist::chebyshev_p;
use serde::Serialize;

use crate::report::{analyze, sig7, AnalysisReport, Selection};
use crate::Error;

/// How a computed number is judged against its published value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    Rel { want: f64, tol: f64 },
    Abs { want: f64, tol: f64 },
    Interval { lo: f64, hi: f64 },
    Decimals { want: f64, places: usize },
    SigFigs { want: f64, figs: usize },
    Exact { want: f64 },
    Above { bound: f64 },
}

impl Check {
    pub fn passes(&self, x: f64) -> bool {
        match *self {
            Check::Rel { want, tol } => ((x - want) / want).abs() <= tol,
            Check::Abs { want, tol } => (x - want).abs() <= tol,
            Check::Interval { lo, hi } => (lo..=hi).contains(&x),
            Check::Decimals { want, places } => format!("{x:.places$}") == format!("{want:.places$}"),
            Check::SigFigs { want, figs } => {
                let d = figs.saturating_sub(1);
                format!("{x:.d$e}") == format!("{want:.d$e}")
            }
            Check::Exact { want } => x == want,
            Check::Above { bound } => x > bound,
        }
    }

    pub fn describe(&self) -> String {
        let quote = |x: f64| if x != 0.0 && x.abs() < 1e-3 { format!("{x:e}") } else { format!("{x}") };
        match *self {
            Check::Rel { want, tol } => format!("{} (rel {tol:e})", quote(want)),
            Check::Abs { want, tol } => format!("{} (abs {tol:e})", quote(want)),
            Check::Interval { lo, hi } => format!("in [{lo}, {hi}]"),
            Check::Decimals { want, places } => format!("{want:.places$} ({places} decimals)"),
            Check::SigFigs { want, figs } => format!("{want:e} ({figs} sig. fig.)"),
            Check::Exact { want } => format!("{want} exactly"),
            Check::Above { bound } => format!("> {bound}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub criterion: u8,
    pub dataset: &'static str,
    pub quantity: &'static str,
    pub computed: f64,
    pub check: Check,
    pub pass: bool,
}

fn rel(want: f64, tol: f64) -> Check {
    Check::Rel { want, tol }
}

/// The relative precision at which seven-digit quotes are compared.
const QUOTE_REL: f64 = 1e-5;
/// Optimizer-dependent likelihood quantities.
const WILKS_REL: f64 = 1e-3;
/// A 1e-3 relative tolerance on W = 57.2 moves the mixture p by about 3%.
const NIST_WILKS_P_REL: f64 = 3e-2;

type Extract = fn(&AnalysisReport) -> f64;

struct Expected {
    criterion: u8,
    dataset: &'static str,
    quantity: &'static str,
    extract: Extract,
    check: Check,
}

macro_rules! expected {
    ($c:expr, $ds:expr, $q:expr, $ex:expr, $check:expr) => {
        Expected {
            criterion: $c,
            dataset: $ds,
            quantity: $q,
            extract: $ex,
            check: $check,
        }
    };
}

fn gls(r: &AnalysisReport) -> &crate::report::GlsReport {
    r.gls.as_ref().expect("reproduce runs every method")
}

fn wilks(r: &AnalysisReport) -> &crate::report::WilksReport {
    r.mle.as_ref().expect("reproduce runs every method")
}

fn game(r: &AnalysisReport) -> &crate::report::GameReport {
    r.bellgame.as_ref().expect("reproduce runs every method")
}

fn expectations() -> Vec<Expected> {
    vec![
        expected!(1, "delft", "naive S", |r| gls(r).naive.s.value, Check::Abs { want: 2.4225, tol: 1e-4 }),
        expected!(1, "delft", "naive S se", |r| gls(r).naive.s.se, rel(0.2038266, QUOTE_REL)),
        expected!(1, "delft", "naive S z", |r| gls(r).naive.s.z, rel(2.07284, QUOTE_REL)),
        expected!(1, "delft", "naive S p", |r| gls(r).naive.s.p.p, rel(0.0190936, QUOTE_REL)),
        expected!(1, "delft", "naive J", |r| gls(r).naive.j.value, rel(0.1195162, QUOTE_REL)),
        expected!(1, "delft", "naive J se", |r| gls(r).naive.j.se, rel(0.09475703, QUOTE_REL)),
        expected!(2, "delft", "optimized S", |r| gls(r).optimized.s.value, rel(2.462658, QUOTE_REL)),
        expected!(2, "delft", "optimized S p", |r| gls(r).optimized.s.p.p, Check::Interval { lo: 0.009, hi: 0.012 }),
        expected!(3, "delft", "Wilks p", |r| wilks(r).p.p, rel(0.02352081, WILKS_REL)),
        expected!(4, "munich", "naive S", |r| gls(r).naive.s.value, rel(2.609047, QUOTE_REL)),
        expected!(4, "munich", "naive S se", |r| gls(r).naive.s.se, rel(0.2484456, QUOTE_REL)),
        expected!(4, "munich", "naive S p", |r| gls(r).naive.s.p.p, rel(0.007114475, QUOTE_REL)),
        expected!(4, "munich", "optimized S", |r| gls(r).optimized.s.value, rel(2.582261, QUOTE_REL)),
        expected!(4, "munich", "optimized S p", |r| gls(r).optimized.s.p.p, rel(0.008782296, QUOTE_REL)),
        expected!(4, "munich", "Wilks p", |r| wilks(r).p.p, rel(0.04104834 / 2.0, WILKS_REL)),
        expected!(5, "nist", "naive S", |r| gls(r).naive.s.value, rel(2.000092, QUOTE_REL)),
        expected!(5, "nist", "naive S se", |r| gls(r).naive.s.se, rel(1.572689e-05, QUOTE_REL)),
        expected!(5, "nist", "naive S z", |r| gls(r).naive.s.z, rel(5.859873, QUOTE_REL)),
        expected!(5, "nist", "naive S p", |r| gls(r).naive.s.p.p, rel(2.062969e-09, QUOTE_REL)),
        expected!(5, "nist", "naive J z", |r| gls(r).naive.j.z, rel(4.778576, QUOTE_REL)),
        expected!(5, "nist", "naive J p", |r| gls(r).naive.j.p.p, rel(8.827054e-07, QUOTE_REL)),
        expected!(5, "nist", "optimized S z", |r| gls(r).optimized.s.z, rel(7.637903, QUOTE_REL)),
        expected!(5, "nist", "optimized S p", |r| gls(r).optimized.s.p.p, rel(1.110193e-14, QUOTE_REL)),
        expected!(5, "nist", "Wilks statistic", |r| wilks(r).statistic, rel(57.19689, WILKS_REL)),
        expected!(5, "nist", "Wilks p", |r| wilks(r).p.p, rel(1.971474e-14, NIST_WILKS_P_REL)),
        expected!(6, "vienna", "naive S", |r| gls(r).naive.s.value, rel(2.000028, QUOTE_REL)),
        expected!(6, "vienna", "naive S se", |r| gls(r).naive.s.se, rel(3.283419e-06, QUOTE_REL)),
        expected!(6, "vienna", "naive S z", |r| gls(r).naive.s.z, rel(8.527696, QUOTE_REL)),
        expected!(6, "vienna", "optimized S z", |r| gls(r).optimized.s.z, Check::Interval { lo: 12.0, hi: 12.5 }),
        expected!(6, "vienna", "Wilks sqrt(W)", |r| wilks(r).z_equivalent, Check::Interval { lo: 17.0, hi: 18.0 }),
        expected!(7, "weihs", "naive S", |r| gls(r).naive.s.value, Check::Decimals { want: 2.73, places: 2 }),
        expected!(7, "weihs", "optimized S", |r| gls(r).optimized.s.value, Check::Decimals { want: 2.71, places: 2 }),
        expected!(7, "weihs", "naive S z", |r| gls(r).naive.s.z, Check::Above { bound: 25.0 }),
        expected!(8, "zhang", "naive S", |r| gls(r).naive.s.value, Check::Decimals { want: 2.58, places: 2 }),
        expected!(8, "zhang", "naive S z", |r| gls(r).naive.s.z, Check::Interval { lo: 6.5, hi: 7.5 }),
        expected!(8, "zhang", "Bell-game wins", |r| game(r).wins as f64, Check::Exact { want: 1357.0 }),
        expected!(8, "zhang", "Bell-game trials", |r| game(r).trials as f64, Check::Exact { want: 1649.0 }),
        expected!(8, "zhang", "Bell-game p", |r| game(r).p.p, Check::SigFigs { want: 5e-13, figs: 1 }),
        expected!(
            8,
            "zhang",
            "optimized S / naive S",
            |r| gls(r).optimized.s.value / gls(r).naive.s.value,
            Check::Abs { want: 1.0, tol: 0.005 }
        ),
    ]
}

pub fn analyze_embedded() -> Result<Vec<AnalysisReport>, Error> {
    // one thread per experiment; collected in the fixed dataset order
    std::thread::scope(|scope| {
        let handles: Vec<_> = EMBEDDED_NAMES
            .iter()
            .map(|name| {
                scope.spawn(move || -> Result<AnalysisReport, Error> {
                    analyze(&load_embedded(name)?, "embedded", Selection::ALL)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("analysis thread panicked")).collect()
    })
}

pub fn compare(reports: &[AnalysisReport]) -> Vec<Row> {
    let mut rows: Vec<Row> = expectations()
        .into_iter()
        .map(|s| {
            let report = reports
                .iter()
                .find(|r| r.dataset.name == s.dataset)
                .expect("every embedded dataset analysed");
            let computed = (s.extract)(report);
            Row {
                criterion: s.criterion,
                dataset: s.dataset,
                quantity: s.quantity,
                computed,
                check: s.check,
                pass: s.check.passes(computed),
            }
        })
        .collect();
    let cheb = chebyshev_p(17.5).map(|t| t.p).unwrap_or(f64::NAN);
    rows.push(Row {
        criterion: 9,
        dataset: "-",
        quantity: "Chebyshev 1/17.5^2",
        computed: cheb,
        check: rel(1.0 / 306.25, 1e-15),
        pass: rel(1.0 / 306.25, 1e-15).passes(cheb),
    });
    let printed = Check::SigFigs { want: 0.0033, figs: 2 };
    rows.push(Row {
        criterion: 9,
        dataset: "-",
        quantity: "Chebyshev 1/17.5^2 printed",
        computed: cheb,
        check: printed,
        pass: printed.passes(cheb),
    });
    rows
}

pub fn reproduce() -> Result<Vec<Row>, Error> {
    Ok(compare(&analyze_embedded()?))
}

pub fn render_text(rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<3} {:<8} {:<28} {:>16}  {:<34} result",
        "#", "dataset", "quantity", "computed", "published"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<3} {:<8} {:<28} {:>16}  {:<34} {}",
            r.criterion,
            r.dataset,
            r.quantity,
            sig7(r.computed),
            r.check.describe(),
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let _ = writeln!(out, "\n{} of {} checks pass", rows.len() - failed, rows.len());
    out
}

pub fn render_json(rows: &[Row]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_semantics() {
        assert!(Check::SigFigs { want: 5e-13, figs: 1 }.passes(5.15e-13));
        assert!(!Check::SigFigs { want: 5e-13, figs: 1 }.passes(8.04e-13));
        assert!(Check::SigFigs { want: 0.0033, figs: 2 }.passes(1.0 / 306.25));
        assert!(Check::Decimals { want: 2.73, places: 2 }.passes(2.727572));
        assert!(!Check::Decimals { want: 2.71, places: 2 }.passes(2.7151));
        assert!(Check::Interval { lo: 0.009, hi: 0.012 }.passes(0.01096));
        assert!(!Check::Above { bound: 25.0 }.passes(25.0));
    }
}
