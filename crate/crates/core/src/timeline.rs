use crate::phase::Phase;
use crate::role::Role;
use crate::schedule::{Generation, Schedule};
use crate::tick::Tick;
use std::fmt::Write;

const RAMP_GLYPH: char = '.';
const ACTIVE_GLYPH: char = '#';
const PASSIVE_GLYPH: char = '~';

fn glyph(g: &Generation, t: Tick) -> Option<char> {
    match g.phase_at(t) {
        Phase::RampUp => Some(RAMP_GLYPH),
        Phase::Active => Some(ACTIVE_GLYPH),
        Phase::Passive => Some(PASSIVE_GLYPH),
        _ => None,
    }
}

fn extent(schedule: &Schedule) -> u64 {
    let mut end = schedule.horizon.0;
    for strand in &schedule.roles {
        for g in &strand.generations {
            end = end.max(g.verify_until().0.saturating_add(1));
        }
    }
    end
}

/// One row per generation, one column per `bucket` ticks. A column shows
/// the phase at its first tick, so with `bucket = 1` every phase boundary
/// lands exactly where the schedule says. The final row marks the
/// planning horizon.
pub fn render_text(schedule: &Schedule, bucket: u64) -> String {
    let bucket = bucket.max(1);
    let end = extent(schedule);
    let cols = end.div_ceil(bucket) as usize;
    let label_width = Role::ALL
        .iter()
        .map(|r| r.name().len())
        .max()
        .unwrap_or(0)
        + 6;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "u = {} ticks, horizon = {} ticks, one column = {} tick(s)",
        schedule.u, schedule.horizon, bucket
    );
    let _ = writeln!(
        out,
        "legend: '{RAMP_GLYPH}' ramp-up, '{ACTIVE_GLYPH}' active, '{PASSIVE_GLYPH}' passive"
    );
    out.push('\n');

    for role in Role::ALL {
        for g in schedule.generations(role) {
            let label = format!("{} g{}", role.name(), g.index);
            let _ = write!(out, "{label:<label_width$}");
            let mut row = String::with_capacity(cols);
            for c in 0..cols {
                row.push(glyph(g, Tick(c as u64 * bucket)).unwrap_or(' '));
            }
            out.push_str(row.trim_end());
            out.push('\n');
        }
    }

    let horizon_col = (schedule.horizon.0 / bucket) as usize;
    let _ = write!(out, "{:<label_width$}", "horizon");
    for _ in 0..horizon_col {
        out.push(' ');
    }
    out.push('^');
    out.push('\n');
    out
}

const PHASE_FILLS: [(Phase, &str); 3] = [
    (Phase::RampUp, "#b9c6d8"),
    (Phase::Active, "#4e8a57"),
    (Phase::Passive, "#d9b36a"),
];

/// The same picture as vector art: one band per generation, one rectangle
/// per phase, a vertical rule at the horizon.
pub fn render_svg(schedule: &Schedule) -> String {
    let end = extent(schedule).max(1);
    let label_px = 170.0;
    let plot_px = 900.0;
    let row_h = 16.0;
    let px_per_tick = plot_px / end as f64;

    let mut rows: Vec<(String, Generation)> = Vec::new();
    for role in Role::ALL {
        for g in schedule.generations(role) {
            rows.push((format!("{} g{}", role.name(), g.index), *g));
        }
    }
    let height = 30.0 + rows.len() as f64 * row_h;
    let width = label_px + plot_px + 20.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    out.push_str("<style>text{font-family:monospace;font-size:11px;fill:#222}</style>\n");
    let _ = writeln!(
        out,
        "<text x=\"4\" y=\"14\">u = {} ticks, horizon = {} ticks</text>",
        schedule.u, schedule.horizon
    );

    for (i, (label, g)) in rows.iter().enumerate() {
        let y = 24.0 + i as f64 * row_h;
        let _ = writeln!(out, "<text x=\"4\" y=\"{:.1}\">{label}</text>", y + row_h - 5.0);
        let spans = [
            (g.verify_from().0, g.issue_from().0, Phase::RampUp),
            (g.issue_from().0, g.issue_until().0, Phase::Active),
            (g.issue_until().0, g.verify_until().0 + 1, Phase::Passive),
        ];
        for (from, until, phase) in spans {
            if until <= from {
                continue;
            }
            let fill = PHASE_FILLS
                .iter()
                .find(|(p, _)| *p == phase)
                .map(|(_, f)| *f)
                .unwrap_or("#000");
            let x = label_px + from as f64 * px_per_tick;
            let w = (until - from) as f64 * px_per_tick;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{:.1}\" width=\"{w:.2}\" height=\"{:.1}\" fill=\"{fill}\"/>",
                y + 2.0,
                row_h - 4.0
            );
        }
    }

    let hx = label_px + schedule.horizon.0 as f64 * px_per_tick;
    let _ = writeln!(
        out,
        "<line x1=\"{hx:.2}\" y1=\"20\" x2=\"{hx:.2}\" y2=\"{:.1}\" stroke=\"#a33\" stroke-dasharray=\"3 2\"/>",
        height - 4.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{default_first_root_active, plan_schedule};
    use crate::profile::baseline_minimums;

    fn planned() -> Schedule {
        plan_schedule(12, Tick(120), &baseline_minimums(12), default_first_root_active(12))
            .unwrap()
    }

    fn row<'a>(text: &'a str, label: &str) -> &'a str {
        text.lines()
            .find(|l| l.starts_with(label))
            .unwrap_or_else(|| panic!("no row {label}"))
    }

    #[test]
    fn phase_boundaries_land_on_exact_columns() {
        let schedule = planned();
        let text = render_text(&schedule, 1);
        let line = row(&text, "root-ca g2");
        let glyphs: Vec<char> = line.chars().collect();
        // the first glyph of this row sits at tick 24
        let first = glyphs.iter().position(|c| "#.~".contains(*c)).unwrap();
        let at = |tick: usize| glyphs.get(first + tick - 24).copied();
        // ramp [24, 36), active [36, 60), passive [60, 84]
        assert_eq!(at(24), Some('.'));
        assert_eq!(at(35), Some('.'));
        assert_eq!(at(36), Some('#'));
        assert_eq!(at(59), Some('#'));
        assert_eq!(at(60), Some('~'));
        assert_eq!(at(84), Some('~'));
        assert!(at(85).is_none() || at(85) == Some(' '));
    }

    #[test]
    fn wider_buckets_sample_the_first_tick_of_each_column() {
        let schedule = planned();
        let text = render_text(&schedule, 12);
        let line = row(&text, "root-ca g1");
        let body: String = line.chars().skip_while(|c| !"#.~".contains(*c)).collect();
        // ticks 0,12,24 are active; 36 and 48 are passive
        assert!(body.starts_with("###~~"), "got {body:?}");
    }

    #[test]
    fn every_generation_appears_once() {
        let schedule = planned();
        let text = render_text(&schedule, 1);
        let rows = text
            .lines()
            .filter(|l| l.contains(" g") && (l.contains('#') || l.contains('.')))
            .count();
        assert_eq!(rows, schedule.generation_count());
        assert!(text.lines().last().is_some_and(|l| l.is_empty() || l.contains('^')));
    }

    #[test]
    fn svg_is_deterministic_and_draws_every_phase_span() {
        let schedule = planned();
        let a = render_svg(&schedule);
        let b = render_svg(&schedule);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        let expected_rects: usize = schedule
            .roles
            .iter()
            .flat_map(|s| &s.generations)
            .map(|g| {
                [g.ramp > 0, g.active > 0, true]
                    .into_iter()
                    .filter(|x| *x)
                    .count()
            })
            .sum();
        assert_eq!(a.matches("<rect").count(), expected_rects);
        assert_eq!(a.matches("<line").count(), 1);
    }
}
