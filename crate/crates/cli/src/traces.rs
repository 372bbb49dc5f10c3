//! Episode trace files (JSON lines, one record per step): writing during
//! evaluation and pretty-printing with structural validation for inspection.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use lexi_morl_core::eval::TraceStep;

pub fn write_trace(path: &Path, steps: &[TraceStep]) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("cannot create trace {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for s in steps {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceStep>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let step: TraceStep = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad trace record", path.display(), i + 1))?;
        steps.push(step);
    }
    Ok(steps)
}

fn fmt_set(set: &[usize]) -> String {
    let inner: Vec<String> = set.iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

/// Pretty-print a trace. Rejects structurally corrupt traces: the acceptable
/// sets of each step must be monotone nested and non-empty.
pub fn render_trace(steps: &[TraceStep]) -> Result<String> {
    let mut out = String::new();
    if steps.is_empty() {
        out.push_str("(empty trace)\n");
        return Ok(out);
    }
    for s in steps {
        if let Some(sel) = &s.selection {
            let mut prev: Option<&Vec<usize>> = None;
            for (i, set) in sel.sets.iter().enumerate() {
                if set.is_empty() {
                    bail!("step {}: acceptable set A{} is empty (corrupt trace)", s.step, i);
                }
                if let Some(p) = prev {
                    if !set.iter().all(|a| p.contains(a)) {
                        bail!(
                            "step {}: acceptable sets are not monotone nested at A{} (corrupt trace)",
                            s.step,
                            i
                        );
                    }
                }
                prev = Some(set);
            }
        }
        let _ = write!(out, "#{:<5} {:<10}", s.step, format!("{:?}", s.action));
        let _ = write!(out, " v={:5.2}", s.v);
        let _ = write!(out, " r=[{:+.3},{:+.3}]", s.reward.safety, s.reward.speed);
        if !s.q_rows.is_empty() {
            let rows: Vec<String> = s
                .q_rows
                .iter()
                .map(|r| {
                    let vals: Vec<String> = r.iter().map(|v| format!("{v:+.3}")).collect();
                    format!("[{}]", vals.join(","))
                })
                .collect();
            let _ = write!(out, " q={}", rows.join(""));
        }
        if let Some(sel) = &s.selection {
            let sets: Vec<String> = sel.sets.iter().map(|s| fmt_set(s)).collect();
            let _ = write!(out, " A={}", sets.join("⊇"));
            match sel.explored {
                Some(i) => {
                    let _ = write!(out, " explored=obj{i}");
                }
                None => {
                    let _ = write!(out, " greedy");
                }
            }
        }
        let _ = write!(out, " event={:?}", s.event);
        if let Some(reason) = s.reason {
            let _ = write!(out, " done={reason:?}");
        }
        out.push('\n');
    }
    Ok(out)
}
