//! Output framing: provenance header, number formatting, file writing.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sha256` over the command, tool version and the serialised config. No
/// timestamp, so reruns hash identically.
pub fn provenance(command: &str, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(format!("cwspin {VERSION} {command}\n"));
    h.update(config_json(cfg));
    format!("sha256:{:x}", h.finalize())
}

pub fn config_json(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("config serialises")
}

/// Comment block that opens every CSV file.
pub fn csv_header(command: &str, cfg: &RunConfig) -> String {
    format!(
        "# cwspin {VERSION} {command}\n# config {}\n# provenance {}\n",
        config_json(cfg),
        provenance(command, cfg)
    )
}

/// The JSON report layout shared by all subcommands.
pub fn report(
    command: &str,
    cfg: &RunConfig,
    results: Value,
    residuals: Value,
    status: &str,
) -> String {
    let doc = json!({
        "header": {
            "tool": "cwspin",
            "version": VERSION,
            "command": command,
            "provenance": provenance(command, cfg),
        },
        "config": cfg,
        "results": results,
        "residuals": residuals,
        "status": status,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    text
}

/// Twelve significant digits, positional notation where that stays short.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // The exponent after rounding to 12 digits decides the layout.
    let sci = format!("{v:.11e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

pub fn write(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {path}: {e}"))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
        }
    }
}
