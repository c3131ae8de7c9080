//! Analysis reports: orchestration of the three test pipelines and
//! rendering as text or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bell_core::data::{canonicalize, chsh_all_signs, correlations};
use bell_core::dist::chebyshev_p;
use bell_core::game::bell_game_test;
use bell_core::gls::{naive_estimate, optimized_estimate};
use bell_core::mle::{wilks_test, FitOptions, MleFit};
use bell_core::{BellDataset, CanonicalTransform, Estimate, FunctionalKind, Sign, TailProb};
use serde::{Deserialize, Serialize};

use crate::format::tables_by_key;
use crate::Error;

/// p-values below this get the asymptotics warning and a Chebyshev bound.
pub const EXTREME_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gls,
    Mle,
    Bellgame,
    All,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gls" => Ok(Method::Gls),
            "mle" => Ok(Method::Mle),
            "bellgame" => Ok(Method::Bellgame),
            "all" => Ok(Method::All),
            other => Err(format!("unknown method `{other}` (expected gls, mle, bellgame or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Selection {
    pub gls: bool,
    pub mle: bool,
    pub bellgame: bool,
}

impl Selection {
    pub const ALL: Selection = Selection {
        gls: true,
        mle: true,
        bellgame: true,
    };

    pub fn from_methods(methods: &[Method]) -> Selection {
        let mut s = Selection::default();
        for m in methods {
            match m {
                Method::Gls => s.gls = true,
                Method::Mle => s.mle = true,
                Method::Bellgame => s.bellgame = true,
                Method::All => s = Selection::ALL,
            }
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        !(self.gls || self.mle || self.bellgame)
    }

    fn names(&self) -> Vec<String> {
        [(self.gls, "gls"), (self.mle, "mle"), (self.bellgame, "bellgame")]
            .into_iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| n.to_string())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probability {
    pub p: f64,
    /// Natural log, finite even where `p` underflows.
    pub log_p: f64,
}

impl From<TailProb> for Probability {
    fn from(t: TailProb) -> Self {
        Probability { p: t.p, log_p: t.log_p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformReport {
    pub identity: bool,
    pub alice_flip: [bool; 2],
    pub bob_flip: [bool; 2],
    pub alice_setting_swap: bool,
    pub bob_setting_swap: bool,
    pub tie: bool,
}

impl From<CanonicalTransform> for TransformReport {
    fn from(t: CanonicalTransform) -> Self {
        TransformReport {
            identity: t.is_identity(),
            alice_flip: t.alice_flip.map(|s| s == Sign::Minus),
            bob_flip: t.bob_flip.map(|s| s == Sign::Minus),
            alice_setting_swap: t.alice_setting_swap,
            bob_setting_swap: t.bob_setting_swap,
            tie: t.tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEcho {
    pub name: String,
    pub source: String,
    pub outcome_labels: BTreeMap<String, [String; 2]>,
    /// Counts as analysed, after canonical relabelling.
    pub tables: BTreeMap<String, [[u64; 2]; 2]>,
    pub trials: [u64; 4],
    pub total_trials: u64,
    pub transform: TransformReport,
    pub correlations: [f64; 4],
    pub chsh_all_signs: [f64; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateReport {
    pub value: f64,
    pub se: f64,
    pub z: f64,
    pub p: Probability,
    pub c: [f64; 4],
    pub regularized: bool,
}

impl From<&Estimate> for EstimateReport {
    fn from(e: &Estimate) -> Self {
        EstimateReport {
            value: e.value,
            se: e.se,
            z: e.z,
            p: e.p.into(),
            c: e.c,
            regularized: e.regularized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "UPPERCASE")]
pub struct EstimatePair {
    pub s: EstimateReport,
    pub j: EstimateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlsReport {
    pub naive: EstimatePair,
    pub optimized: EstimatePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub pa: [f64; 2],
    pub qb: [f64; 2],
    pub rho: [f64; 4],
    pub chsh: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub terminated_at_start: bool,
    pub active_constraint: Option<usize>,
}

impl From<&MleFit> for FitReport {
    fn from(f: &MleFit) -> Self {
        FitReport {
            pa: f.params.pa,
            qb: f.params.qb,
            rho: f.params.rho,
            chsh: f.params.chsh(),
            loglik: f.loglik,
            converged: f.converged,
            iterations: f.iterations,
            grad_norm: f.grad_norm,
            terminated_at_start: f.terminated_at_start,
            active_constraint: f.active_constraint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilksReport {
    pub statistic: f64,
    pub z_equivalent: f64,
    pub p: Probability,
    pub no_signalling: FitReport,
    pub local_realism: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameReport {
    pub wins: u64,
    pub trials: u64,
    pub win_rate: f64,
    pub p: Probability,
    pub lr_bound: f64,
    pub tsirelson_rate: f64,
    pub block_trials: [u64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChebyshevEntry {
    /// Which statistic the z came from, e.g. `gls.optimized.S`.
    pub statistic: String,
    pub z: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub dataset: DatasetEcho,
    pub methods: Vec<String>,
    pub gls: Option<GlsReport>,
    pub mle: Option<WilksReport>,
    pub bellgame: Option<GameReport>,
    pub chebyshev: Vec<ChebyshevEntry>,
    pub warnings: Vec<String>,
}

/// Canonicalize, then run the selected pipelines.
pub fn analyze(ds: &BellDataset, source: &str, methods: Selection) -> Result<AnalysisReport, Error> {
    if methods.is_empty() {
        return Err(Error::Usage("no analysis method selected".into()));
    }
    let (ds, transform) = canonicalize(ds)?;
    let mut warnings = Vec::new();
    if transform.tie {
        warnings.push("canonicalize: maximal one-sided CHSH value is tied; first sign pattern used".to_string());
    }
    if !transform.is_identity() {
        warnings.push("canonicalize: outcome or setting labels were recoded; counts shown are after recoding".into());
    }
    let mut z_values: Vec<(String, f64)> = Vec::new();
    let mut tails: Vec<(String, Probability)> = Vec::new();

    let gls = if methods.gls {
        let mut pair = |est: fn(&BellDataset, FunctionalKind) -> bell_core::Result<Estimate>,
                        label: &str|
         -> Result<EstimatePair, Error> {
            let s = est(&ds, FunctionalKind::S)?;
            let j = est(&ds, FunctionalKind::J)?;
            for e in [&s, &j] {
                let key = format!("gls.{label}.{}", e.kind.name());
                if e.regularized {
                    warnings.push(format!("{key}: constraint covariance near-singular, pseudo-inverse used"));
                }
                z_values.push((key.clone(), e.z));
                tails.push((key, e.p.into()));
            }
            Ok(EstimatePair {
                s: (&s).into(),
                j: (&j).into(),
            })
        };
        let naive = pair(naive_estimate, "naive")?;
        let optimized = pair(optimized_estimate, "optimized")?;
        Some(GlsReport { naive, optimized })
    } else {
        None
    };

    let mle = if methods.mle {
        let w = wilks_test(&ds, &FitOptions::default())?;
        for (label, f) in [("no-signalling", &w.fit_ns), ("local-realism", &w.fit_lr)] {
            if !f.converged {
                warnings.push(format!("mle.{label}: iteration cap reached before convergence"));
            }
            if f.terminated_at_start {
                warnings.push(format!(
                    "mle.{label}: optimizer terminated at the starting point (no resolvable improvement)"
                ));
            }
        }
        if w.unconverged {
            warnings.push("mle: Wilks statistic computed from unconverged fits".into());
        }
        if bell_core::gls::project_nosignalling(&bell_core::data::flatten(&ds)?)?.clamped {
            warnings.push("mle: projected starting point had negative cells; clamped".into());
        }
        z_values.push(("mle.wilks".into(), w.z_equivalent()));
        tails.push(("mle.wilks".into(), w.p.into()));
        Some(WilksReport {
            statistic: w.statistic,
            z_equivalent: w.z_equivalent(),
            p: w.p.into(),
            no_signalling: (&w.fit_ns).into(),
            local_realism: (&w.fit_lr).into(),
        })
    } else {
        None
    };

    let bellgame = if methods.bellgame {
        let g = bell_game_test(&ds)?;
        tails.push(("bellgame".into(), g.p.into()));
        let n = g.block_trials;
        let (lo, hi) = (*n.iter().min().unwrap(), *n.iter().max().unwrap());
        if lo == 0 || hi > 2 * lo {
            warnings.push(format!(
                "bellgame: setting pairs are far from uniform (trials {n:?}); the 3/4 bound assumes uniform settings"
            ));
        }
        Some(GameReport {
            wins: g.wins,
            trials: g.trials,
            win_rate: g.win_rate,
            p: g.p.into(),
            lr_bound: g.lr_bound,
            tsirelson_rate: g.tsirelson_rate,
            block_trials: g.block_trials,
        })
    } else {
        None
    };

    let chebyshev: Vec<ChebyshevEntry> = z_values
        .iter()
        .filter(|(_, z)| *z > 0.0)
        .map(|(k, z)| ChebyshevEntry {
            statistic: k.clone(),
            z: *z,
            p: chebyshev_p(*z).map(|t| t.p).unwrap_or(1.0),
        })
        .collect();
    for (key, p) in &tails {
        if p.p < EXTREME_TAIL {
            let bound = chebyshev.iter().find(|c| &c.statistic == key);
            let note = match bound {
                Some(c) => format!("; Chebyshev bound 1/z^2 = {}", sci(c.p)),
                None => String::new(),
            };
            warnings.push(format!(
                "{key}: p = {} is an extreme tail; asymptotic approximation unreliable{note}",
                pval(p)
            ));
        }
    }

    let rho = correlations(&ds)?.rho;
    let labels = BTreeMap::from([
        ("alice".to_string(), ds.outcome_labels.alice.clone()),
        ("bob".to_string(), ds.outcome_labels.bob.clone()),
    ]);
    Ok(AnalysisReport {
        dataset: DatasetEcho {
            name: ds.name.clone(),
            source: source.to_string(),
            outcome_labels: labels,
            tables: tables_by_key(&ds),
            trials: ds.trials(),
            total_trials: ds.total_trials(),
            transform: transform.into(),
            correlations: rho,
            chsh_all_signs: chsh_all_signs(&ds)?,
        },
        methods: methods.names(),
        gls,
        mle,
        bellgame,
        chebyshev,
        warnings,
    })
}

/// Seven significant digits, switching to scientific notation for very
/// small or large magnitudes.
pub fn sig7(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..7).contains(&e) {
        let decimals = (6 - e).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci(x)
    }
}

pub fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// p-values: scientific below the extreme-tail threshold, and from the log
/// when the value itself underflowed.
fn pval(p: &Probability) -> String {
    if p.p == 0.0 && p.log_p.is_finite() {
        let l10 = p.log_p / std::f64::consts::LN_10;
        let e = l10.floor();
        return format!("{:.6}e{}", 10f64.powf(l10 - e), e as i64);
    }
    if p.p < EXTREME_TAIL {
        sci(p.p)
    } else {
        sig7(p.p)
    }
}

pub fn render_json(r: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let d = &r.dataset;
    let _ = writeln!(out, "dataset {} ({}), {} trials", d.name, d.source, d.total_trials);
    for (key, t) in &d.tables {
        let _ = writeln!(
            out,
            "  ({},{})  ++ {:>10}  +- {:>10}  -+ {:>10}  -- {:>10}",
            &key[..1],
            &key[1..],
            t[0][0],
            t[0][1],
            t[1][0],
            t[1][1]
        );
    }
    let rho: Vec<String> = d.correlations.iter().map(|&x| sig7(x)).collect();
    let _ = writeln!(out, "  correlations {}", rho.join(" "));
    if !d.transform.identity {
        let _ = writeln!(out, "  relabelled to canonical form: {:?}", d.transform);
    }

    if let Some(g) = &r.gls {
        let _ = writeln!(out, "\nGLS estimates (one-sided p)");
        let _ = writeln!(
            out,
            "  {:<14} {:>14} {:>14} {:>14} {:>14}",
            "", "value", "se", "z", "p"
        );
        for (label, pair) in [("naive", &g.naive), ("optimized", &g.optimized)] {
            for (kind, e) in [("S", &pair.s), ("J", &pair.j)] {
                let _ = writeln!(
                    out,
                    "  {:<14} {:>14} {:>14} {:>14} {:>14}{}",
                    format!("{label} {kind}"),
                    sig7(e.value),
                    sig7(e.se),
                    sig7(e.z),
                    pval(&e.p),
                    if e.regularized { "  (regularized)" } else { "" }
                );
            }
        }
    }

    if let Some(w) = &r.mle {
        let _ = writeln!(out, "\nLikelihood ratio (Wilks, 50-50 chi2(1)/chi2(0))");
        let _ = writeln!(out, "  statistic     {}", sig7(w.statistic));
        let _ = writeln!(out, "  z-equivalent  {}", sig7(w.z_equivalent));
        let _ = writeln!(out, "  p             {}", pval(&w.p));
        for (label, f) in [("no-signalling", &w.no_signalling), ("local realism", &w.local_realism)] {
            let rho: Vec<String> = f.rho.iter().map(|&x| sig7(x)).collect();
            let _ = writeln!(
                out,
                "  {label:<14} S {}  rho {}  loglik {}  iterations {}{}",
                sig7(f.chsh),
                rho.join(" "),
                sig7(f.loglik),
                f.iterations,
                if f.converged { "" } else { "  (not converged)" }
            );
        }
    }

    if let Some(g) = &r.bellgame {
        let _ = writeln!(out, "\nBell game");
        let _ = writeln!(out, "  wins          {} of {}", g.wins, g.trials);
        let _ = writeln!(
            out,
            "  win rate      {}  (local bound {}, Tsirelson {})",
            sig7(g.win_rate),
            g.lr_bound,
            sig7(g.tsirelson_rate)
        );
        let _ = writeln!(out, "  p             {}  (Bin({}, 3/4) tail)", pval(&g.p), g.trials);
    }

    if !r.chebyshev.is_empty() {
        let _ = writeln!(out, "\nChebyshev bounds 1/z^2");
        for c in &r.chebyshev {
            let _ = writeln!(out, "  {:<20} z {:>14}  p <= {}", c.statistic, sig7(c.z), sig7(c.p));
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out, "\nwarnings");
        for w in &r.warnings {
            let _ = writeln!(out, "  - {w}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bell_core::data::load_embedded;

    #[test]
    fn sig7_formats() {
        assert_eq!(sig7(2.4225), "2.422500");
        assert_eq!(sig7(0.2038266), "0.2038266");
        assert_eq!(sig7(57.19689), "57.19689");
        assert_eq!(sig7(1.572689e-05), "1.572689e-5");
        assert_eq!(sig7(-0.0190936), "-0.01909360");
        assert_eq!(sig7(1649.0), "1649.000");
    }

    #[test]
    fn underflowed_p_printed_from_log() {
        let p = Probability { p: 0.0, log_p: -800.0 * std::f64::consts::LN_10 + 0.5f64.ln() };
        assert_eq!(pval(&p), "5.000000e-801");
    }

    #[test]
    fn delft_report_contents() {
        let r = analyze(&load_embedded("delft").unwrap(), "embedded", Selection::ALL).unwrap();
        let g = r.gls.as_ref().unwrap();
        assert!((g.naive.s.value - 2.4225).abs() < 1e-4);
        let w = r.mle.as_ref().unwrap();
        assert!(((w.p.p - 0.02352081) / 0.02352081).abs() < 1e-3);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        let text = render_text(&r);
        assert!(text.contains("2.422500"), "{text}");
    }

    #[test]
    fn nist_flags_extreme_tails() {
        let r = analyze(&load_embedded("nist").unwrap(), "embedded", Selection::ALL).unwrap();
        assert!(r.warnings.iter().any(|w| w.starts_with("gls.optimized.S") && w.contains("Chebyshev")));
        assert!(r.warnings.iter().any(|w| w.starts_with("mle.wilks")));
    }

    #[test]
    fn selection_limits_sections() {
        let r = analyze(
            &load_embedded("zhang").unwrap(),
            "embedded",
            Selection::from_methods(&[Method::Bellgame]),
        )
        .unwrap();
        assert!(r.gls.is_none() && r.mle.is_none());
        assert_eq!(r.bellgame.as_ref().unwrap().wins, 1357);
        assert!(r.chebyshev.is_empty());
        assert_eq!(r.methods, vec!["bellgame"]);
        assert!(analyze(&load_embedded("zhang").unwrap(), "x", Selection::default()).is_err());
    }
}
