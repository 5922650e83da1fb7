//! Aligned text tables for reports.

use ctxsum_core::human_eval::ScoreReport;
use ctxsum_core::metrics::{BaselineScore, MetricsReport};
use ctxsum_core::sampling::SamplingPlan;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header) + "\n";
        out += &width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ");
        out += "\n";
        for r in &self.rows {
            out += &line(r);
            out += "\n";
        }
        out
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn opt(v: Option<f64>, scale: f64) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.2}", x * scale))
}

pub fn metrics(report: &MetricsReport) -> String {
    let mut out = format!("Setting: {}\n\n", report.setting);
    let with_base = report.videos.iter().any(|v| v.baseline.is_some());
    let mut t = if with_base {
        Table::new(&["video", "avg-f", "max-f", "frames", "random avg-f", "random max-f"])
    } else {
        Table::new(&["video", "avg-f", "max-f", "frames"])
    };
    for v in &report.videos {
        let mut cells = vec![
            v.video_id.clone(),
            pct(v.avg_f),
            pct(v.max_f),
            v.summary_frames.to_string(),
        ];
        if with_base {
            let b = v.baseline.as_ref();
            cells.push(b.map_or("-".into(), |b| pct(b.avg_f)));
            cells.push(b.map_or("-".into(), |b| pct(b.max_f)));
        }
        t.row(cells);
    }
    out += &t.render();

    let mut agg = Table::new(&["dataset", "avg", "max", "top-5"]);
    agg.row(vec![
        "avg-f".into(),
        pct(report.avg_f.avg),
        pct(report.avg_f.max),
        pct(report.avg_f.top5),
    ]);
    agg.row(vec![
        "max-f".into(),
        pct(report.max_f.avg),
        pct(report.max_f.max),
        pct(report.max_f.top5),
    ]);
    out += "\n";
    out += &agg.render();

    if let Some(s) = &report.splits {
        let mut st = Table::new(&["split", "test videos", "avg-f", "max-f"]);
        for r in &s.rows {
            st.row(vec![
                r.split.to_string(),
                r.test_videos.len().to_string(),
                pct(r.avg_f),
                pct(r.max_f),
            ]);
        }
        out += &format!(
            "\nSplits ({} x {:.0}% test, seed {})\n",
            s.settings.count,
            100.0 * s.settings.test_fraction,
            s.settings.seed
        );
        out += &st.render();
        out += &format!("mean avg-f {}  best avg-f {}\n", pct(s.mean_avg_f), pct(s.best_avg_f));
    }
    if let Some(b) = &report.baseline {
        out += &format!(
            "\nRandom baseline ({} repeats, seed {}): avg-f {}  max-f {}\n",
            b.repeats,
            b.seed,
            pct(b.avg_f),
            pct(b.max_f)
        );
    }
    out
}

pub fn baseline(rows: &[(String, BaselineScore)]) -> String {
    let mut t = Table::new(&["video", "avg-f", "max-f"]);
    for (id, b) in rows {
        t.row(vec![id.clone(), pct(b.avg_f), pct(b.max_f)]);
    }
    let n = rows.len().max(1) as f64;
    t.row(vec![
        "mean".into(),
        pct(rows.iter().map(|r| r.1.avg_f).sum::<f64>() / n),
        pct(rows.iter().map(|r| r.1.max_f).sum::<f64>() / n),
    ]);
    t.render()
}

pub fn survey(report: &ScoreReport) -> String {
    let c = report.display_scale;
    let mut out = format!("Scores on a 0-{c} scale from {} answers\n\n", report.records);
    let mut v = Table::new(&["video", "user summary", "machine summary"]);
    for row in &report.videos {
        v.row(vec![
            row.video_id.clone(),
            opt(row.scores.user_summary, c),
            opt(row.scores.machine_summary, c),
        ]);
    }
    v.row(vec![
        "method".into(),
        opt(report.method.user_summary, c),
        opt(report.method.machine_summary, c),
    ]);
    out += &v.render();
    let mut q = Table::new(&["question", "video", "type", "user summary", "machine summary"]);
    for row in &report.questions {
        q.row(vec![
            row.question.clone(),
            row.video_id.clone(),
            format!("{:?}", row.kind).to_lowercase(),
            opt(row.scores.user_summary, c),
            opt(row.scores.machine_summary, c),
        ]);
    }
    out += "\n";
    out += &q.render();
    out
}

pub fn sample_plan(plan: &SamplingPlan) -> String {
    let idx: Vec<String> = plan.indexes().iter().map(|i| i.to_string()).collect();
    format!(
        "snippet length {}\nsamples {}\nsample fps {:.4}\nindexes {}\n",
        plan.snippet_len,
        plan.count,
        plan.achieved_fps(),
        idx.join(",")
    )
}
