use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gam_edit::edit::Selection;
use gam_edit::io::{self, Dataset, DatasetOptions, EditScript, LoadedModel};
use gam_edit::metrics::Scope;
use gam_edit::session::{run_script, Session, SessionOptions};
use serde_json::json;

use crate::{ApplyArgs, DataArgs, ExportArgs, MetricsArgs};

pub fn read_model(path: &Path) -> Result<LoadedModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    io::load_model(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn read_dataset(args: &DataArgs, loaded: &LoadedModel) -> Result<Dataset> {
    let Some(path) = &args.data else {
        return Ok(Dataset {
            samples: Vec::new(),
            skipped: Vec::new(),
        });
    };
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let opts = DatasetOptions {
        label_column: args.label_column.clone(),
        lenient: args.lenient,
    };
    io::load_dataset(&bytes, &loaded.model, &opts).with_context(|| format!("loading {}", path.display()))
}

/// Loads the model and dataset named by `args` into a fresh session.
pub fn open_session(args: &DataArgs) -> Result<(Session, Dataset)> {
    let loaded = read_model(&args.model)?;
    let mut data = read_dataset(args, &loaded)?;
    let samples = std::mem::take(&mut data.samples);
    let opts = SessionOptions {
        threshold: args.threshold,
        ..Default::default()
    };
    let session = Session::new(loaded, samples, opts)?;
    Ok((session, data))
}

fn report_skipped(data: &Dataset, err: &mut dyn Write) -> Result<()> {
    if !data.skipped.is_empty() {
        writeln!(err, "skipped {} malformed rows", data.skipped.len())?;
        for e in &data.skipped {
            writeln!(err, "  {e}")?;
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

pub fn apply(args: &ApplyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let (mut session, data) = open_session(&args.data)?;
    report_skipped(&data, err)?;
    let bytes = fs::read(&args.script).with_context(|| format!("reading {}", args.script.display()))?;
    let script = EditScript::parse(&bytes).with_context(|| format!("parsing {}", args.script.display()))?;
    let outcome = run_script(&mut session, &script)?;
    let saved = io::save_model(session.committed(), Some(session.history()));
    write_atomic(&args.out, &saved)?;
    serde_json::to_writer_pretty(&mut *out, &outcome)?;
    writeln!(out)?;
    writeln!(
        err,
        "applied {} edits, wrote {}",
        outcome.commits.len(),
        args.out.display()
    )?;
    Ok(())
}

fn parse_bins(spec: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| anyhow!("bad bin index `{s}`"));
    match spec.split_once('-') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let b = parse(spec)?;
            Ok((b, b))
        }
    }
}

pub fn metrics_scope(args: &MetricsArgs) -> Result<Scope> {
    match (&args.term, &args.bins, &args.label) {
        (None, _, _) => Ok(Scope::Global),
        (Some(term), Some(bins), None) => {
            let (first, last) = parse_bins(bins)?;
            if first > last {
                bail!("empty bin range `{bins}`");
            }
            Ok(Scope::Selected {
                selection: Selection::range(term.clone(), first, last),
            })
        }
        (Some(term), None, Some(label)) => Ok(Scope::Slice {
            term: term.clone(),
            label: label.clone(),
        }),
        (Some(_), _, _) => bail!("--term needs either --bins or --label"),
    }
}

pub fn metrics(args: &MetricsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if args.data.data.is_none() {
        bail!("metrics need a dataset (--data)");
    }
    let scope = metrics_scope(args)?;
    let (session, data) = open_session(&args.data)?;
    report_skipped(&data, err)?;
    let report = session.metrics(&scope)?;
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

pub fn validate(args: &DataArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let (session, data) = open_session(args)?;
    report_skipped(&data, err)?;
    let h = session.history();
    let summary = json!({
        "terms": session.committed().feature_count(),
        "interactions": session.committed().interactions().len(),
        "commits": h.commits().len(),
        "head": h.head_revision(),
        "unconfirmed": h.commits().iter().filter(|c| !c.confirmed).count(),
        "samples": session.dataset().len(),
        "skipped_rows": data.skipped.len(),
    });
    writeln!(out, "{summary}")?;
    Ok(())
}

pub fn export(args: &ExportArgs, err: &mut dyn Write) -> Result<()> {
    let loaded = read_model(&args.model)?;
    let history = (!args.no_history).then_some(&loaded.history);
    write_atomic(&args.out, &io::save_model(&loaded.model, history))?;
    writeln!(err, "wrote {}", args.out.display())?;
    Ok(())
}
