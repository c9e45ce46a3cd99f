use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::Path;

use cyberlang::bus::{
    export_corpus, import_corpus, run_scenario, serve as serve_bus, Broker, BusError, ScenarioScript,
};
use cyberlang::compiler::{compile as compile_to, CompiledForm, TargetProfile};
use cyberlang::fdsg::{parse_document, Diagnostic};
use cyberlang::semantics::{check_fusion, evaluate_meaning, MeaningError, Origin, Overlay, Verdict};
use cyberlang::{print_canonical, Cybersign, Cyberstatement, IdGenerator, SemanticValue};
use serde_json::{json, Value};

use crate::config::{read, CliConfig, Format};
use crate::{Exit, Failure, TargetArg};

type Outcome = Result<Exit, Failure>;

/// `println!` that tolerates a closed standard output, e.g. when piped into
/// `head`.
macro_rules! out {
    (nl: $($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn print_json(value: &Value) {
    out!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value serializes")
    );
}

fn render_diagnostic(path: &Path, source: &str, d: &Diagnostic) -> String {
    let line = source.lines().nth(d.span.line - 1).unwrap_or("");
    let pad = " ".repeat(d.span.column - 1);
    let marks = "^".repeat(d.span.length.max(1));
    format!("{}:{d}\n  | {line}\n  | {pad}{marks}", path.display())
}

/// Statements of a .cyl file with the 1-based line each starts on.
/// Diagnostics of the first bad paragraph end the command.
fn statements(cfg: &CliConfig, path: &Path) -> Result<Vec<(usize, Cyberstatement)>, Failure> {
    let source = read(path)?;
    let mut ids = IdGenerator::seeded(cfg.seed);
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for parsed in parse_document(&source, &mut ids) {
        match parsed.result {
            Ok(stmt) => out.push((parsed.line, stmt)),
            Err(diags) => errors.extend(diags.iter().map(|d| render_diagnostic(path, &source, d))),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::invalid(errors.join("\n")));
    }
    Ok(out)
}

pub fn parse(cfg: &CliConfig, path: &Path) -> Outcome {
    let source = read(path)?;
    let mut ids = IdGenerator::seeded(cfg.seed);
    let mut exit = Exit::Ok;
    let mut docs = Vec::new();
    for parsed in parse_document(&source, &mut ids) {
        match parsed.result {
            Ok(stmt) => match cfg.format {
                Format::Text => out!("{}", print_canonical(&stmt)),
                Format::Json => docs.push(json!({
                    "line": parsed.line,
                    "statement_id": stmt.statement_id,
                    "canonical": print_canonical(&stmt),
                })),
            },
            Err(diags) => {
                exit = Exit::Invalid;
                match cfg.format {
                    Format::Text => {
                        for d in &diags {
                            eprintln!("{}", render_diagnostic(path, &source, d));
                        }
                    }
                    Format::Json => docs.push(json!({ "line": parsed.line, "diagnostics": diags })),
                }
            }
        }
    }
    if cfg.format == Format::Json {
        print_json(&Value::Array(docs));
    }
    Ok(exit)
}

/// Distinct identifiers in `stmt` that name at least one registered sign.
fn bound_lambdas(stmt: &Cyberstatement) -> BTreeSet<&str> {
    stmt.slots()
        .filter_map(|(_, _, v)| match v {
            SemanticValue::Identifier(lambda) => Some(lambda.as_str()),
            _ => None,
        })
        .collect()
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Coherent => "coherent".into(),
        Verdict::Incoherent { maps_to } => format!("incoherent (maps to {maps_to})"),
        Verdict::Unverifiable => "unverifiable".into(),
    }
}

pub fn check(cfg: &CliConfig, path: &Path) -> Outcome {
    let loaded = cfg.load()?;
    let mut exit = Exit::Ok;
    let mut docs = Vec::new();
    for (line, stmt) in statements(cfg, path)? {
        let violations: Vec<String> = loaded.dialect.check(&stmt).iter().map(|v| v.to_string()).collect();
        let reports: Vec<_> = bound_lambdas(&stmt)
            .into_iter()
            .flat_map(|lambda| loaded.signs.lookup(lambda))
            .map(|sign| check_fusion(&loaded.mappings, sign))
            .collect();
        let verdicts = || reports.iter().flat_map(|r| r.verdicts.values());
        let verdict = if !violations.is_empty() || verdicts().any(|v| matches!(v, Verdict::Incoherent { .. })) {
            "incoherent"
        } else if verdicts().any(|v| *v == Verdict::Unverifiable) {
            "unverifiable"
        } else {
            "coherent"
        };
        if verdict != "coherent" {
            exit = Exit::Invalid;
        }
        match cfg.format {
            Format::Text => {
                out!("line {line}: {verdict}");
                if violations.is_empty() {
                    out!("  dialect {}: ok", loaded.dialect.name);
                }
                for v in &violations {
                    out!("  dialect {}: {v}", loaded.dialect.name);
                }
                for r in &reports {
                    let parts: Vec<String> = r
                        .verdicts
                        .iter()
                        .map(|(d, v)| format!("{d} {}", verdict_text(v)))
                        .collect();
                    out!("  sign {}: {}", r.lambda, parts.join(", "));
                }
            }
            Format::Json => docs.push(json!({
                "line": line,
                "statement_id": stmt.statement_id,
                "verdict": verdict,
                "violations": violations,
                "signs": reports,
            })),
        }
    }
    if cfg.format == Format::Json {
        print_json(&Value::Array(docs));
    }
    Ok(exit)
}

fn form_text(form: &CompiledForm) -> String {
    match &form.payload {
        Value::String(s) => s.clone(),
        other => serde_json::to_string_pretty(other).expect("json value serializes"),
    }
}

pub fn compile(cfg: &CliConfig, path: &Path, target: TargetArg) -> Outcome {
    let loaded = cfg.load()?;
    let targets = match target {
        TargetArg::One(t) => vec![t],
        TargetArg::All => TargetProfile::ALL.to_vec(),
    };
    let mut exit = Exit::Ok;
    let mut docs = Vec::new();
    let stmts = statements(cfg, path)?;
    for (i, (line, stmt)) in stmts.iter().enumerate() {
        if cfg.format == Format::Text && i > 0 {
            out!();
        }
        let mut forms = serde_json::Map::new();
        for &t in &targets {
            let result = compile_to(stmt, t, &loaded.dialect);
            if result.is_err() {
                exit = Exit::Invalid;
            }
            match (cfg.format, result) {
                (Format::Text, Ok(form)) => {
                    if targets.len() > 1 {
                        out!("# {t}");
                    }
                    out!("{}", form_text(&form));
                }
                (Format::Text, Err(e)) => {
                    if targets.len() > 1 {
                        out!("# {t}");
                    }
                    eprintln!("cyl: line {line}: {t}: {e}");
                }
                (Format::Json, Ok(form)) => {
                    forms.insert(t.to_string(), form.payload);
                }
                (Format::Json, Err(e)) => {
                    forms.insert(t.to_string(), json!({ "error": e.to_string() }));
                }
            }
        }
        if cfg.format == Format::Json {
            docs.push(json!({ "line": line, "statement_id": stmt.statement_id, "forms": forms }));
        }
    }
    if cfg.format == Format::Json {
        print_json(&Value::Array(docs));
    }
    Ok(exit)
}

fn origin_name(o: Origin) -> &'static str {
    match o {
        Origin::Expression => "expression",
        Origin::Context => "context",
    }
}

fn sense_text(sign: &Cybersign) -> String {
    sign.dyads()
        .map(|(d, dyad)| format!("{d} {}", dyad.signified))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn resolve(cfg: &CliConfig, path: &Path) -> Outcome {
    let loaded = cfg.load()?;
    let mut exit = Exit::Ok;
    let mut docs = Vec::new();
    for (line, stmt) in statements(cfg, path)? {
        let result = evaluate_meaning(&stmt, &loaded.context, &loaded.signs, &loaded.mappings, &Overlay);
        match (cfg.format, result) {
            (Format::Text, Ok(meaning)) => {
                out!("line {line}: resolved {}", meaning.digest());
                let weights: Vec<String> = meaning.weights.iter().map(|(d, w)| format!("{d}={w}")).collect();
                out!("  weights {}", weights.join(" "));
                for (d, slots) in &meaning.resolved {
                    for (key, slot) in slots {
                        let origin = match slot.origin {
                            Origin::Expression => "",
                            Origin::Context => " (context)",
                        };
                        out!("  {d}.{key} = {}{origin}", slot.value);
                    }
                }
                for c in &meaning.conflicts {
                    out!(
                        "  conflict {}.{}: expression {}, context {}; {} wins",
                        c.dimension,
                        c.key,
                        c.expression_value,
                        c.context_value,
                        origin_name(c.winner)
                    );
                }
                for (lambda, sign) in &meaning.sign_bindings {
                    out!("  sign {lambda}: {}", sense_text(sign));
                }
            }
            (Format::Json, Ok(meaning)) => docs.push(json!({
                "line": line,
                "digest": meaning.digest(),
                "meaning": meaning,
            })),
            (format, Err(MeaningError::Ambiguity(a))) => {
                exit = exit.max(Exit::Ambiguous);
                match format {
                    Format::Text => {
                        out!(
                            "line {line}: ambiguous `{}` in {}.{}, {} senses",
                            a.lambda,
                            a.dimension,
                            a.key,
                            a.candidates.len()
                        );
                        for (i, sign) in a.candidates.iter().enumerate() {
                            out!("  [{i}] {}", sense_text(sign));
                        }
                    }
                    Format::Json => docs.push(json!({
                        "line": line,
                        "statement_id": stmt.statement_id,
                        "ambiguity": {
                            "dimension": a.dimension,
                            "key": a.key,
                            "lambda": a.lambda,
                            "candidates": a.candidates,
                        },
                    })),
                }
            }
            (_, Err(e)) => {
                exit = exit.max(Exit::Invalid);
                eprintln!("cyl: line {line}: {e}");
            }
        }
    }
    if cfg.format == Format::Json {
        print_json(&Value::Array(docs));
    }
    Ok(exit)
}

fn bus_failure(e: BusError) -> Failure {
    match e {
        BusError::Io(m) => Failure::env(m),
        other => Failure::invalid(other.to_string()),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::env(format!("{}: {e}", p.display()))),
        None => {
            out!(nl: "{text}");
            Ok(())
        }
    }
}

/// Scenario scripts name their own signs, mappings and dialect; only the
/// seed is taken from the configuration.
pub fn simulate(cfg: &CliConfig, scenario: &Path, out: Option<&Path>) -> Outcome {
    let (script, base) = ScenarioScript::load(scenario).map_err(bus_failure)?;
    let run = run_scenario(&script, &base, cfg.seed).map_err(bus_failure)?;
    write_out(out, &export_corpus(&run.corpus))?;
    for e in &run.expectations {
        if e.passed {
            eprintln!("ok     event {}: {}", e.event, e.assert);
        } else {
            eprintln!("FAILED event {}: {} (actual {})", e.event, e.assert, e.actual);
        }
    }
    Ok(if run.all_passed() { Exit::Ok } else { Exit::Invalid })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

pub fn serve(cfg: &CliConfig, addr: SocketAddr, corpus_out: Option<&Path>) -> Outcome {
    let loaded = cfg.load()?;
    let mut broker = Broker::new(
        loaded.dialect,
        loaded.signs,
        loaded.mappings,
        IdGenerator::seeded(cfg.seed),
    );
    if cfg.context.is_some() {
        broker.update_context(loaded.context).map_err(bus_failure)?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::env(e.to_string()))?;
    let broker = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::env(format!("cannot listen on {addr}: {e}")))?;
        serve_bus(listener, broker, shutdown_signal())
            .await
            .map_err(bus_failure)
    })?;
    if let Some(p) = corpus_out {
        write_out(Some(p), &export_corpus(broker.corpus()))?;
    }
    Ok(Exit::Ok)
}

pub fn corpus_validate(cfg: &CliConfig, path: &Path) -> Outcome {
    let text = read(path)?;
    let result = import_corpus(&text);
    let (exit, doc) = match &result {
        Ok(records) => (Exit::Ok, json!({ "records": records.len(), "valid": true })),
        Err(e) => (Exit::Invalid, json!({ "error": e.to_string(), "valid": false })),
    };
    match (cfg.format, result) {
        (Format::Json, _) => print_json(&doc),
        (Format::Text, Ok(records)) => out!("{}: {} records ok", path.display(), records.len()),
        (Format::Text, Err(e)) => eprintln!("cyl: {}: {e}", path.display()),
    }
    Ok(exit)
}
