//! Welch t-tests, least squares, and the benchmark suite report.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::protocol::{Arm, RunResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased; `None` below two values.
    pub sd: Option<f64>,
}

impl SampleSummary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Degenerate("empty sample".into()));
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (n >= 2).then(|| variance(xs, mean).sqrt());
        Ok(Self { n, mean, sd })
    }
}

fn variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_tailed: f64,
}

/// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate(format!(
            "Welch test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let qa = variance(a, ma) / na;
    let qb = variance(b, mb) / nb;
    let se2 = qa + qb;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(TestResult {
                t: 0.0,
                df: na + nb - 2.0,
                p_two_tailed: 1.0,
            });
        }
        return Err(Error::Degenerate("both samples are constant with different means".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Degenerate(e.to_string()))?;
    let p = if t == 0.0 { 1.0 } else { (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0) };
    Ok(TestResult { t, df, p_two_tailed: p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`. Constant `y` gives slope 0 and
/// R² 0.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Degenerate(format!(
            "regression needs two equal-length samples of at least 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("x is constant".into()));
    }
    if syy == 0.0 {
        return Ok(Regression {
            slope: 0.0,
            intercept: my,
            r2: 0.0,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(Regression {
        slope,
        intercept,
        r2: 1.0 - ss_res / syy,
    })
}

pub fn stars(p: f64) -> &'static str {
    if p < 1e-4 {
        "****"
    } else if p < 1e-3 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub pool_hybrid: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { pool_hybrid: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub markdown: String,
    pub summary_csv: String,
    pub tests_csv: String,
    pub regression_csv: String,
    pub warnings: Vec<String>,
}

const METRICS: [(&str, &str); 4] = [
    ("EOC", "eoc"),
    ("Min val loss", "min_val_loss"),
    ("Val acc at EOC", "acc_at_eoc"),
    ("Val AUC at EOC", "auc_at_eoc"),
];

struct Group {
    title: String,
    key: String,
    runs: Vec<RunResult>,
}

impl Group {
    fn metric(&self, m: usize) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| match m {
                0 => Some(r.eoc as f64),
                1 => Some(r.min_val_loss),
                2 => Some(r.acc_at_eoc),
                _ => r.auc_at_eoc,
            })
            .collect()
    }
}

fn fmt_mean(m: usize, v: f64) -> String {
    if m == 0 {
        format!("{v:.1}")
    } else {
        format!("{v:.4}")
    }
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

fn try_test(a: &[f64], b: &[f64]) -> Option<TestResult> {
    welch_t_test(a, b).ok()
}

/// Per-arm means and standard deviations with stars against the control,
/// all pairwise Welch tests, and per-arm regressions of minimum validation
/// loss on EOC. A pure function of `results`.
pub fn summarize_suite(results: &[RunResult], opts: &SuiteOptions) -> SuiteReport {
    let mut warnings = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    for arm in [Arm::WhiteNoise, Arm::Shuffle, Arm::Mix, Arm::Hybrid] {
        let runs: Vec<RunResult> = results.iter().filter(|r| r.arm == arm).cloned().collect();
        if runs.is_empty() {
            warnings.push(format!("no results for arm `{arm}`, row omitted"));
        } else {
            groups.push(Group {
                title: arm.title().into(),
                key: arm.short_name().into(),
                runs,
            });
        }
    }
    let pooled: Vec<RunResult> = results
        .iter()
        .filter(|r| r.arm != Arm::None && (opts.pool_hybrid || r.arm != Arm::Hybrid))
        .cloned()
        .collect();
    if !pooled.is_empty() {
        groups.push(Group {
            title: "Pooled".into(),
            key: "pooled".into(),
            runs: pooled,
        });
    }
    let control: Vec<RunResult> = results.iter().filter(|r| r.arm == Arm::None).cloned().collect();
    if control.is_empty() {
        warnings.push("no results for arm `none`, row omitted and no stars".into());
    } else {
        groups.push(Group {
            title: Arm::None.title().into(),
            key: Arm::None.short_name().into(),
            runs: control,
        });
    }
    if groups.iter().any(|g| g.runs.len() < 2) {
        warnings.push("fewer than 2 repeats for some arms (n<2): no p-values for those rows".into());
    }
    let control_idx = groups.iter().position(|g| g.key == "none");

    // Summary table.
    let mut md = String::from("## Mean performance per pre-training\n\n");
    md.push_str("| Pre-training | n |");
    for (title, _) in METRICS {
        let _ = write!(md, " {title} |");
    }
    md.push_str("\n|---|---|---|---|---|---|\n");
    let mut summary_csv = String::from("pretraining,metric,n,mean,sd,p_vs_none,stars\n");
    for (gi, g) in groups.iter().enumerate() {
        let _ = write!(md, "| {} | {} |", g.title, g.runs.len());
        for (m, (_, key)) in METRICS.iter().enumerate() {
            let xs = g.metric(m);
            let Ok(s) = SampleSummary::of(&xs) else {
                md.push_str(" NA |");
                let _ = writeln!(summary_csv, "{},{key},0,NA,NA,NA,", g.key);
                continue;
            };
            let test = control_idx
                .filter(|&c| c != gi)
                .and_then(|c| try_test(&xs, &groups[c].metric(m)));
            let star = test.map_or("", |t| stars(t.p_two_tailed));
            let sd = s.sd.map_or("NA".to_string(), |v| fmt_mean(m, v));
            let _ = write!(md, " {} ({sd}){star} |", fmt_mean(m, s.mean));
            let _ = writeln!(
                summary_csv,
                "{},{key},{},{},{},{},{star}",
                g.key,
                s.n,
                s.mean,
                s.sd.map_or("NA".into(), |v| v.to_string()),
                test.map_or("NA".into(), |t| t.p_two_tailed.to_string()),
            );
        }
        md.push('\n');
    }
    md.push_str("\nValues in parentheses are standard deviations. Stars mark a difference from None.\n");

    // Pairwise tests.
    md.push_str("\n## Pairwise Welch t-tests\n\n| Comparison | Metric | t | df | p | |\n|---|---|---|---|---|---|\n");
    let mut tests_csv = String::from("a,b,metric,t,df,p,stars\n");
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (a, b) = (&groups[i], &groups[j]);
            // Pooled is only compared against the control.
            if (a.key == "pooled" || b.key == "pooled") && b.key != "none" {
                continue;
            }
            for (m, (title, key)) in METRICS.iter().enumerate() {
                let Some(t) = try_test(&a.metric(m), &b.metric(m)) else {
                    continue;
                };
                let star = stars(t.p_two_tailed);
                let _ = writeln!(
                    md,
                    "| {} vs {} | {title} | {:.3} | {:.2} | {} | {star} |",
                    a.title,
                    b.title,
                    t.t,
                    t.df,
                    fmt_p(t.p_two_tailed)
                );
                let _ = writeln!(tests_csv, "{},{},{key},{},{},{},{star}", a.key, b.key, t.t, t.df, t.p_two_tailed);
            }
        }
    }

    // Regressions, ascending R².
    let mut regs: Vec<(&Group, Regression)> = Vec::new();
    for g in &groups {
        let x = g.metric(0);
        let y = g.metric(1);
        match linear_regression(&x, &y) {
            Ok(r) => regs.push((g, r)),
            Err(e) => warnings.push(format!("no regression for `{}`: {e}", g.key)),
        }
    }
    regs.sort_by(|a, b| a.1.r2.total_cmp(&b.1.r2));
    md.push_str("\n## Regression of minimum validation loss on EOC\n\n| Pre-training | n | Slope | Intercept | R² |\n|---|---|---|---|---|\n");
    let mut regression_csv = String::from("pretraining,n,slope,intercept,r2\n");
    for (g, r) in &regs {
        let _ = writeln!(
            md,
            "| {} | {} | {:.3e} | {:.4} | {:.4} |",
            g.title,
            g.runs.len(),
            r.slope,
            r.intercept,
            r.r2
        );
        let _ = writeln!(regression_csv, "{},{},{},{},{}", g.key, g.runs.len(), r.slope, r.intercept, r.r2);
    }

    md.push_str(
        "\np-values come from two-tailed Welch t-tests with no correction for multiple comparisons. \
         Stars: * p < 0.05, ** p < 0.01, *** p < 0.001, **** p < 0.0001.\n",
    );
    if !opts.pool_hybrid {
        md.push_str("Pooled excludes Hybrid.\n");
    }
    if !warnings.is_empty() {
        md.push_str("\nWarnings:\n");
        for w in &warnings {
            let _ = writeln!(md, "- {w}");
        }
    }
    SuiteReport {
        markdown: md,
        summary_csv,
        tests_csv,
        regression_csv,
        warnings,
    }
}
