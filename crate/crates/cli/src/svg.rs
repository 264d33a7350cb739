//! Control chart rendering: statistic against stream index with the lower
//! control limit, points colored by phase, misclassified Phase II points
//! drawn as crosses.

use std::fmt::Write;

use depthwatch::charting::SignalRecord;
use depthwatch::reference::Phase;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn color(phase: Phase) -> &'static str {
    match phase {
        Phase::PhaseI => "#4c72b0",
        Phase::PhaseIIInControl => "#55a868",
        Phase::PhaseIIOutOfControl => "#c44e52",
        Phase::Unlabeled => "#8c8c8c",
    }
}

/// `misclassified` is aligned with `phase2`.
pub fn render_chart(
    title: &str,
    phase1: &[SignalRecord],
    phase2: &[SignalRecord],
    misclassified: &[Option<bool>],
    lcl: f64,
) -> String {
    let max_index = phase1.iter().chain(phase2).map(|s| s.index).max().unwrap_or(0).max(1) as f64;
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / max_index;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v.clamp(0.0, 1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}"/></g>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{tick}</text>"#,
            MARGIN - 6.0,
            y(tick) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line class="lcl" x1="{MARGIN}" y1="{ly:.2}" x2="{r}" y2="{ly:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
        ly = y(lcl),
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{:.2}" font-size="11">LCL {lcl:.4}</text>"#,
        WIDTH - MARGIN + 4.0,
        y(lcl) + 4.0
    );

    let _ = writeln!(s, r#"<g class="points">"#);
    for p in phase1 {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" data-phase="{}"/>"#,
            x(p.index),
            y(p.statistic),
            color(p.phase),
            p.phase
        );
    }
    for (i, p) in phase2.iter().enumerate() {
        let (cx, cy) = (x(p.index), y(p.statistic));
        if misclassified.get(i).copied().flatten() == Some(true) {
            let _ = writeln!(
                s,
                r#"<path class="misclassified" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{}" stroke-width="1.5" data-phase="{}"/>"#,
                cx - 3.0,
                cy - 3.0,
                cx + 3.0,
                cy + 3.0,
                cx - 3.0,
                cy + 3.0,
                cx + 3.0,
                cy - 3.0,
                color(p.phase),
                p.phase
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}" data-phase="{}"/>"#,
                color(p.phase),
                p.phase
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let legend = [
        ("Phase I", Phase::PhaseI),
        ("Phase II in-control", Phase::PhaseIIInControl),
        ("Phase II out-of-control", Phase::PhaseIIOutOfControl),
        ("unlabeled", Phase::Unlabeled),
    ];
    let _ = writeln!(s, r#"<g class="legend" font-size="11">"#);
    for (i, (name, phase)) in legend.iter().enumerate() {
        let lx = MARGIN + 10.0 + 170.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{lx}" cy="20" r="4" fill="{}"/><text x="{}" y="24">{name}</text>"#,
            color(*phase),
            lx + 8.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="40">x = misclassified</text>"#, MARGIN + 10.0);
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use depthwatch::reference::{ClassId, RefClass};

    fn sig(index: usize, statistic: f64, phase: Phase) -> SignalRecord {
        SignalRecord {
            index,
            class_used: RefClass::Class(ClassId(0)),
            statistic,
            signal: statistic <= 0.05,
            phase,
        }
    }

    #[test]
    fn structure() {
        let p1 = vec![sig(0, 0.5, Phase::PhaseI), sig(1, 0.9, Phase::PhaseI)];
        let p2 = vec![
            sig(2, 0.01, Phase::PhaseIIOutOfControl),
            sig(3, 0.4, Phase::PhaseIIInControl),
        ];
        let svg = render_chart("MD <r>", &p1, &p2, &[Some(true), Some(false)], 0.05);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3 + 4);
        assert_eq!(svg.matches(r#"class="misclassified""#).count(), 1);
        assert_eq!(svg.matches(r#"class="lcl""#).count(), 1);
        assert!(svg.contains("MD &lt;r&gt;"));
    }
}
