//! Text rendering of an `EvalReport`. Numbers use Rust's shortest
//! round-trip formatting, so every printed value parses back to exactly the
//! value in the JSON report.

use std::fmt::Write;

use lemmings_core::EvalReport;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn render(report: &EvalReport) -> String {
    let mut out = String::new();
    let s = &report.solver;
    let _ = writeln!(out, "solver\t{}", s.kind);
    let _ = writeln!(out, "lambda\t{}", s.hyper.lambda);
    if s.kind.is_local() {
        let _ = writeln!(out, "anchors\t{}", s.hyper.anchors);
        let _ = writeln!(out, "sigma\t{}", s.hyper.sigma);
        let _ = writeln!(out, "anchor_method\t{}", s.hyper.anchor_method);
    }
    let _ = writeln!(out, "folds\t{}", report.folds);
    let _ = writeln!(out, "runs\t{}", report.runs);
    let _ = writeln!(out, "seed\t{}", report.seed);
    let _ = writeln!(out, "stratified\t{}", report.stratified);
    let _ = writeln!(out, "tuned\t{}", report.tuning.is_some());
    let _ = writeln!(out);
    let _ = writeln!(out, "metric\tmean\tstd");
    for (name, summary) in report.summary.rows() {
        let _ = writeln!(out, "{name}\t{}\t{}", summary.mean, summary.std);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "run\taccuracy\tauc_roc\tauc_roc_0.1\tauc_pr\tpairwise_accuracy");
    for r in &report.run_metrics {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.run + 1,
            opt(r.accuracy),
            opt(r.auc_roc),
            opt(r.auc_roc_01),
            opt(r.auc_pr),
            opt(r.pairwise_accuracy)
        );
    }
    if report.tuning.is_some() {
        let local = s.kind.is_local();
        let _ = writeln!(out);
        let header = if local {
            "run\tfold\tlambda\tanchors\tsigma\tanchor_method"
        } else {
            "run\tfold\tlambda"
        };
        let _ = writeln!(out, "{header}");
        for f in &report.fold_results {
            let _ = write!(out, "{}\t{}\t{}", f.run + 1, f.fold + 1, f.hyper.lambda);
            if local {
                let _ = write!(
                    out,
                    "\t{}\t{}\t{}",
                    f.hyper.anchors, f.hyper.sigma, f.hyper.anchor_method
                );
            }
            out.push('\n');
        }
    }
    out
}

/// Per-run wall-clock seconds, kept apart from the reproducible report.
pub fn render_timing(report: &EvalReport) -> String {
    let mut out = String::from("run\tseconds\n");
    for (r, s) in report.seconds.iter().enumerate() {
        let _ = writeln!(out, "{}\t{s:.3}", r + 1);
    }
    out
}
