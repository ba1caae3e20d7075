//! Saving a run report, replaying one partition from it, and exporting the
//! pruned network of that partition.
//!
//! `cargo run --example replay_export`

use std::path::Path;

use faircheck::verifier::{self, export_pruned, replay, sidecar_path, VerifyOptions};
use faircheck::report::RunReport;

fn main() -> faircheck::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let report = verifier::run(
        &data.join("credit_model.json"),
        &data.join("credit_query.json"),
        VerifyOptions::default(),
    )?;
    let dir = std::env::temp_dir().join("faircheck_replay_example");
    std::fs::create_dir_all(&dir).map_err(|e| faircheck::Error::io(&dir, e))?;
    let path = dir.join("report.json");
    report.save(&path)?;
    print!("{}", report.summary_table());

    let stored = RunReport::load(&path)?;
    let id = stored.first_sat.unwrap_or(stored.results[0].id);
    let out = replay(&stored, id, None, None)?;
    println!(
        "replayed partition {id}: stored {}, now {}, consistent {}",
        out.original.status, out.replayed.status, out.consistent
    );
    if let Some(valid) = out.stored_counterexample_valid {
        println!("stored counterexample still violates fairness: {valid}");
    }

    let pruned = dir.join(format!("pruned_{id}.json"));
    let side = export_pruned(&stored, id, &pruned, None)?;
    println!(
        "wrote {} and {} ({} neurons removed)",
        pruned.display(),
        sidecar_path(&pruned).display(),
        side.removed.len()
    );
    for r in &side.removed {
        println!("  {} {:?}", r.id(), r.provenance);
    }
    Ok(())
}
