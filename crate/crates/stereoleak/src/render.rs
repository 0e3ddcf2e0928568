//! Text renderings of report data: DOT flow graphs, coefficient tables and
//! radar series.

use std::fmt::Write;

use stereoleak_core::flow::{CoefficientMatrix, FlowGraph, MatrixCell, RadarData};

/// Edge pen width per unit of coefficient.
pub const PENWIDTH_SCALE: f64 = 10.0;

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Two decimals, with negative zero printed as zero.
pub fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Directed graph with human source languages in the left cluster and the
/// model's target languages in the right one. Pen width is proportional to
/// the coefficient.
pub fn flow_dot(graph: &FlowGraph) -> String {
    let mut out = String::new();
    let id = dot_escape(&graph.model_id);
    writeln!(out, "digraph \"flow_{id}\" {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  label=\"{id}\";").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    writeln!(out, "  subgraph cluster_sources {{").unwrap();
    writeln!(out, "    label=\"human source\";").unwrap();
    for l in &graph.sources {
        writeln!(out, "    \"src_{l}\" [label=\"{l}\"];").unwrap();
    }
    writeln!(out, "  }}").unwrap();
    writeln!(out, "  subgraph cluster_targets {{").unwrap();
    writeln!(out, "    label=\"{id} target\";").unwrap();
    for l in &graph.targets {
        writeln!(out, "    \"tgt_{l}\" [label=\"{l}\"];").unwrap();
    }
    writeln!(out, "  }}").unwrap();
    for e in &graph.edges {
        writeln!(
            out,
            "  \"src_{}\" -> \"tgt_{}\" [label=\"{}\", penwidth={:.3}, coefficient=\"{}\", p_value=\"{:e}\"];",
            e.source,
            e.target,
            fixed2(e.weight),
            e.weight * PENWIDTH_SCALE,
            e.weight,
            e.p_value
        )
        .unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

pub const TSV_HEADER: &str = "model\tinclude_monolingual\tpredictor\ttarget\tcoefficient\tp_value\tsignificant";

/// Long-format table at full precision; floats use the shortest
/// representation that parses back to the same value.
pub fn tables_tsv(matrices: &[CoefficientMatrix]) -> String {
    let mut out = String::new();
    writeln!(out, "{TSV_HEADER}").unwrap();
    for m in matrices {
        for (row, cells) in m.rows.iter().zip(&m.cells) {
            for (target, cell) in m.targets.iter().zip(cells) {
                if let Some(c) = cell {
                    writeln!(
                        out,
                        "{}\t{}\t{row}\t{target}\t{}\t{}\t{}",
                        m.model_id, m.include_monolingual, c.coefficient, c.p_value, c.significant
                    )
                    .unwrap();
                }
            }
        }
    }
    out
}

fn text_block(out: &mut String, m: &CoefficientMatrix, title: &str, value: impl Fn(&MatrixCell) -> String) {
    let width = m.rows.iter().map(|r| r.to_string().len()).max().unwrap_or(0).max(6);
    writeln!(out, "{title}").unwrap();
    write!(out, "{:<width$}", "source").unwrap();
    for t in &m.targets {
        write!(out, " {:>6}", t.as_str()).unwrap();
    }
    out.push('\n');
    for (row, cells) in m.rows.iter().zip(&m.cells) {
        write!(out, "{:<width$}", row.to_string()).unwrap();
        for cell in cells {
            let s = cell.as_ref().map_or_else(|| "-".to_string(), &value);
            write!(out, " {s:>6}").unwrap();
        }
        out.push('\n');
    }
}

/// Human-readable tables at two decimals: a coefficient block and a p-value
/// block per matrix. Columns are target languages; `*` marks significance.
pub fn tables_text(matrices: &[CoefficientMatrix]) -> String {
    let mut out = String::new();
    for (i, m) in matrices.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let variant = if m.include_monolingual { " with monolingual predictor" } else { "" };
        writeln!(out, "model {}{variant}", m.model_id).unwrap();
        text_block(&mut out, m, "coefficients", |c| fixed2(c.coefficient));
        text_block(&mut out, m, "p-values", |c| {
            format!("{}{}", fixed2(c.p_value), if c.significant { "*" } else { "" })
        });
    }
    out
}

/// One row per series: source, language, then one column per axis.
pub fn radar_csv(radar: &RadarData) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["source".to_string(), "language".to_string()];
    header.extend(radar.axes.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for s in &radar.series {
        let mut row = vec![s.source.to_string(), s.language.to_string()];
        row.extend(s.values.iter().map(|v| v.to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
