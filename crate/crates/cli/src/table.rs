//! Result table and its CSV codec. One row per grid cell, then a footer of
//! `#`-prefixed records after a blank line: model names, per-p selection
//! reports, the knee, stability estimates when requested, and one record
//! per failed cell. Floats are written with 17 significant digits, so
//! emit -> parse -> emit is byte-identical and every value round-trips
//! bit-exactly.

pub const HEADER: &str = "p,model_id,replication,val_loss,test_loss,leak_count,chosen,seed_path";

/// One grid cell. A failed cell keeps its row, with NaN losses, a zero leak
/// count and a matching `# error` record in the footer.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub p: f64,
    pub model_id: usize,
    pub replication: usize,
    pub val_loss: f64,
    /// NaN when the config has no test split (or the cell failed).
    pub test_loss: f64,
    pub leak_count: usize,
    pub chosen: bool,
    pub seed_path: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelRecord {
    pub id: usize,
    pub name: String,
}

/// Per-p selection summary over the replications in which every model
/// succeeded; all-`none` when no replication is complete at that p.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionRecord {
    pub p: f64,
    pub chosen: Option<usize>,
    pub min_gap: Option<f64>,
    pub bias: Option<bool>,
    pub bias_magnitude: Option<f64>,
    pub val_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRecord {
    pub quantity: String,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub p_index: usize,
    pub model: usize,
    pub replication: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub models: Vec<ModelRecord>,
    pub selections: Vec<SelectionRecord>,
    /// Outer: whether a knee record is present; inner: the knee p, if any.
    pub knee: Option<Option<f64>>,
    pub stability: Vec<StabilityRecord>,
    pub errors: Vec<ErrorRecord>,
}

impl ResultTable {
    fn has_footer(&self) -> bool {
        !self.models.is_empty()
            || !self.selections.is_empty()
            || self.knee.is_some()
            || !self.stability.is_empty()
            || !self.errors.is_empty()
    }
}

/// 17 significant digits; enough for exact f64 round-trips.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad float {s:?}"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("bad count {s:?}"))
}

fn fmt_opt(v: Option<String>) -> String {
    v.unwrap_or_else(|| "none".to_string())
}

/// Render the table to its CSV text.
pub fn render(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_float(r.p),
            r.model_id,
            r.replication,
            fmt_float(r.val_loss),
            fmt_float(r.test_loss),
            r.leak_count,
            u8::from(r.chosen),
            r.seed_path
        ));
    }
    if !table.has_footer() {
        return out;
    }
    out.push('\n');
    for m in &table.models {
        out.push_str(&format!("# model,id={},name={}\n", m.id, m.name));
    }
    for s in &table.selections {
        let losses: Vec<String> = s.val_losses.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&format!(
            "# selection,p={},chosen={},min_gap={},bias={},bias_magnitude={},val_losses={}\n",
            fmt_float(s.p),
            fmt_opt(s.chosen.map(|c| c.to_string())),
            fmt_opt(s.min_gap.map(fmt_float)),
            fmt_opt(s.bias.map(|b| u8::from(b).to_string())),
            fmt_opt(s.bias_magnitude.map(fmt_float)),
            losses.join("|")
        ));
    }
    if let Some(knee) = &table.knee {
        match knee {
            Some(p) => out.push_str(&format!("# knee,p={}\n", fmt_float(*p))),
            None => out.push_str("# knee,none\n"),
        }
    }
    for s in &table.stability {
        out.push_str(&format!(
            "# stability,quantity={},mean={},std_error={},trials={}\n",
            s.quantity,
            fmt_float(s.mean),
            fmt_float(s.std_error),
            s.trials
        ));
    }
    for e in &table.errors {
        out.push_str(&format!(
            "# error,p_index={},model={},replication={},message={}\n",
            e.p_index, e.model, e.replication, e.message
        ));
    }
    out
}

/// Write the table to a file.
pub fn emit_results(table: &ResultTable, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, render(table))
}

fn strip_kv<'a>(part: &'a str, key: &str) -> Result<&'a str, String> {
    part.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| format!("expected {key}=... (got {part:?})"))
}

fn opt_kv<T>(
    part: &str,
    key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, String> {
    let v = strip_kv(part, key)?;
    if v == "none" {
        Ok(None)
    } else {
        parse(v).map(Some)
    }
}

/// Parse text produced by [`render`] back into the exact same table.
pub fn parse_results(text: &str) -> Result<ResultTable, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(format!("missing header (got {other:?})")),
    }
    let mut table = ResultTable::default();
    let mut in_footer = false;
    for (i, line) in lines.enumerate() {
        let context = |e: String| format!("line {}: {e}", i + 2);
        if line.is_empty() {
            if in_footer {
                return Err(context("unexpected blank line in footer".to_string()));
            }
            in_footer = true;
            continue;
        }
        if !in_footer {
            let fields: Vec<&str> = line.splitn(8, ',').collect();
            if fields.len() != 8 {
                return Err(context(format!("expected 8 row fields, got {}", fields.len())));
            }
            table.rows.push(ResultRow {
                p: parse_float(fields[0]).map_err(context)?,
                model_id: parse_usize(fields[1]).map_err(context)?,
                replication: parse_usize(fields[2]).map_err(context)?,
                val_loss: parse_float(fields[3]).map_err(context)?,
                test_loss: parse_float(fields[4]).map_err(context)?,
                leak_count: parse_usize(fields[5]).map_err(context)?,
                chosen: match fields[6] {
                    "0" => false,
                    "1" => true,
                    other => return Err(context(format!("bad chosen flag {other:?}"))),
                },
                seed_path: fields[7].to_string(),
            });
            continue;
        }
        let record = line
            .strip_prefix("# ")
            .ok_or_else(|| context("footer lines must start with \"# \"".to_string()))?;
        let (tag, rest) = record.split_once(',').unwrap_or((record, ""));
        match tag {
            "model" => {
                let parts: Vec<&str> = rest.splitn(2, ',').collect();
                if parts.len() != 2 {
                    return Err(context("model record needs id and name".to_string()));
                }
                table.models.push(ModelRecord {
                    id: parse_usize(strip_kv(parts[0], "id").map_err(context)?).map_err(context)?,
                    name: strip_kv(parts[1], "name").map_err(context)?.to_string(),
                });
            }
            "selection" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 6 {
                    return Err(context(format!(
                        "selection record needs 6 fields, got {}",
                        parts.len()
                    )));
                }
                let losses_text = strip_kv(parts[5], "val_losses").map_err(context)?;
                let val_losses = if losses_text.is_empty() {
                    Vec::new()
                } else {
                    losses_text
                        .split('|')
                        .map(parse_float)
                        .collect::<Result<Vec<f64>, String>>()
                        .map_err(context)?
                };
                table.selections.push(SelectionRecord {
                    p: parse_float(strip_kv(parts[0], "p").map_err(context)?).map_err(context)?,
                    chosen: opt_kv(parts[1], "chosen", parse_usize).map_err(context)?,
                    min_gap: opt_kv(parts[2], "min_gap", parse_float).map_err(context)?,
                    bias: opt_kv(parts[3], "bias", |s| match s {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(format!("bad bias flag {other:?}")),
                    })
                    .map_err(context)?,
                    bias_magnitude: opt_kv(parts[4], "bias_magnitude", parse_float)
                        .map_err(context)?,
                    val_losses,
                });
            }
            "knee" => {
                if table.knee.is_some() {
                    return Err(context("duplicate knee record".to_string()));
                }
                table.knee = Some(if rest == "none" {
                    None
                } else {
                    Some(parse_float(strip_kv(rest, "p").map_err(context)?).map_err(context)?)
                });
            }
            "stability" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 4 {
                    return Err(context(format!(
                        "stability record needs 4 fields, got {}",
                        parts.len()
                    )));
                }
                table.stability.push(StabilityRecord {
                    quantity: strip_kv(parts[0], "quantity").map_err(context)?.to_string(),
                    mean: parse_float(strip_kv(parts[1], "mean").map_err(context)?)
                        .map_err(context)?,
                    std_error: parse_float(strip_kv(parts[2], "std_error").map_err(context)?)
                        .map_err(context)?,
                    trials: parse_usize(strip_kv(parts[3], "trials").map_err(context)?)
                        .map_err(context)?,
                });
            }
            "error" => {
                let parts: Vec<&str> = rest.splitn(4, ',').collect();
                if parts.len() != 4 {
                    return Err(context("error record needs 4 fields".to_string()));
                }
                table.errors.push(ErrorRecord {
                    p_index: parse_usize(strip_kv(parts[0], "p_index").map_err(context)?)
                        .map_err(context)?,
                    model: parse_usize(strip_kv(parts[1], "model").map_err(context)?)
                        .map_err(context)?,
                    replication: parse_usize(strip_kv(parts[2], "replication").map_err(context)?)
                        .map_err(context)?,
                    message: strip_kv(parts[3], "message").map_err(context)?.to_string(),
                });
            }
            other => return Err(context(format!("unknown record tag {other:?}"))),
        }
    }
    Ok(table)
}
