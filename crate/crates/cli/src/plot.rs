use std::fmt::Write;

use crate::output::AggregateRow;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Panel {
    x0: f64,
    width: f64,
    rounds: (f64, f64),
    values: (f64, f64),
}

impl Panel {
    fn new(x0: f64, rows: &[&AggregateRow], value: impl Fn(&AggregateRow) -> (f64, f64)) -> Self {
        let mut rounds = (f64::INFINITY, f64::NEG_INFINITY);
        let mut values = (f64::INFINITY, f64::NEG_INFINITY);
        for r in rows {
            let (lo, hi) = value(r);
            rounds = (rounds.0.min(r.round as f64), rounds.1.max(r.round as f64));
            if lo.is_finite() && hi.is_finite() {
                values = (values.0.min(lo), values.1.max(hi));
            }
        }
        if !(values.1 > values.0) {
            let c = if values.0.is_finite() { values.0 } else { 0.0 };
            values = (c - 0.5, c + 0.5);
        }
        if !(rounds.1 > rounds.0) {
            rounds = (0.0, rounds.0.max(0.0) + 1.0);
        }
        Panel {
            x0,
            width: WIDTH / 2.0 - 2.0 * MARGIN,
            rounds,
            values,
        }
    }

    fn px(&self, round: usize) -> f64 {
        self.x0 + (round as f64 - self.rounds.0) / (self.rounds.1 - self.rounds.0) * self.width
    }

    fn py(&self, v: f64) -> f64 {
        let h = HEIGHT - 2.0 * MARGIN;
        MARGIN + h - (v - self.values.0) / (self.values.1 - self.values.0) * h
    }

    fn frame(&self, out: &mut String, title: &str) {
        let h = HEIGHT - 2.0 * MARGIN;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{MARGIN:.1}" width="{:.1}" height="{h:.1}" fill="none" stroke="gray"/>"#,
            self.x0, self.width
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{title}</text>"#,
            self.x0 + self.width / 2.0,
            MARGIN - 12.0
        );
        for (v, y) in [(self.values.0, self.py(self.values.0)), (self.values.1, self.py(self.values.1))] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.3}</text>"#,
                self.x0 - 4.0,
                y + 3.0
            );
        }
        for r in [self.rounds.0, self.rounds.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{r}</text>"#,
                self.px(r as usize),
                HEIGHT - MARGIN + 14.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">round</text>"#,
            self.x0 + self.width / 2.0,
            HEIGHT - MARGIN + 30.0
        );
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

/// Two panels: mean best-so-far reward with a ±1 std band, and mean
/// cumulative regret, one curve per algorithm.
pub fn render_svg(benchmark: &str, rows: &[AggregateRow]) -> String {
    let mut algorithms: Vec<&str> = Vec::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    let all: Vec<&AggregateRow> = rows.iter().collect();
    let reward = Panel::new(MARGIN, &all, |r| (r.mean_reward - r.std_reward, r.mean_reward + r.std_reward));
    let regret = Panel::new(WIDTH / 2.0 + MARGIN, &all, |r| (r.mean_regret, r.mean_regret));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    reward.frame(&mut out, &format!("{benchmark}: best-so-far reward"));
    regret.frame(&mut out, &format!("{benchmark}: cumulative regret"));

    for (k, alg) in algorithms.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let series: Vec<&AggregateRow> = rows.iter().filter(|r| r.algorithm == *alg).collect();
        let upper = series.iter().map(|r| (reward.px(r.round), reward.py(r.mean_reward + r.std_reward)));
        let lower = series
            .iter()
            .rev()
            .map(|r| (reward.px(r.round), reward.py(r.mean_reward - r.std_reward)));
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            polyline(upper.chain(lower))
        );
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            polyline(series.iter().map(|r| (reward.px(r.round), reward.py(r.mean_reward))))
        );
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            polyline(series.iter().map(|r| (regret.px(r.round), regret.py(r.mean_regret))))
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{alg}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}
