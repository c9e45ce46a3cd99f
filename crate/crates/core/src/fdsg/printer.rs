use crate::cybersign::Dimension;

use super::ast::{ComponentBlock, Cyberstatement, IntegrationDirective, IntegrationOperator};

/// Canonical single-line surface form: blocks in P, S, T, C order, slots in
/// insertion order, ASCII operator aliases, one space after `:` and `,`.
/// The statement id is never printed.
pub fn print_canonical(stmt: &Cyberstatement) -> String {
    let mut parts: Vec<String> = stmt.blocks.values().map(print_block).collect();
    if !stmt.omega.is_empty() {
        parts.push(print_omega(&stmt.omega));
    }
    parts.join(" ")
}

pub fn print_block(block: &ComponentBlock) -> String {
    let slots: Vec<String> = block
        .slots
        .iter()
        .map(|(k, v)| format!("{k}={}", v.canonical()))
        .collect();
    format!("[{}: {}]", block.dimension, slots.join(", "))
}

pub fn print_directive(d: &IntegrationDirective) -> String {
    match d {
        IntegrationDirective::Precedence { higher, lower } => format!("{higher}>{lower}"),
        IntegrationDirective::Parallel(a, b) => format!("{a}||{b}"),
        IntegrationDirective::Blend(w) => w
            .iter()
            .map(|(dim, x)| format!("{dim}~{}", print_weight(*x)))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

pub fn print_omega(omega: &IntegrationOperator) -> String {
    let directives: Vec<String> = omega.directives.iter().map(print_directive).collect();
    format!("[+O: {}]", directives.join(", "))
}

fn print_weight(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        x.to_string()
    }
}

/// Letter list used in diagnostics and reports, e.g. `P, S`.
pub fn dims_list(dims: &[Dimension]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
}
