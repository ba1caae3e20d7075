//! Splitting an input domain into regions of bounded width.
//!
//! `cargo run --example partitioning`

use faircheck::{partition, Attribute, AttributeSchema, FairnessQuery, InputBox};

fn main() -> faircheck::Result<()> {
    let schema = AttributeSchema::new(vec![
        Attribute::new("age", 18.0, 95.0, true),
        Attribute::new("balance", -1.0, 1699.0, true),
        Attribute::new("duration", 0.0, 1000.0, true),
        Attribute::new("previous", 0.0, 275.0, true),
        Attribute::new("day", 1.0, 31.0, true),
    ])?;
    let domain = InputBox::from_schema(&schema);
    for ms in [1000, 100, 10] {
        let q = FairnessQuery::individual(0, ms);
        let parts = partition(&domain, &q, 7);
        let cuts: Vec<String> = schema
            .attributes
            .iter()
            .zip(&parts.attributes)
            .map(|(a, c)| format!("{}:{}", a.name, c.count))
            .collect();
        println!("MS = {ms:>4}: {:>7} partitions ({})", parts.len(), cuts.join(" "));
    }

    let parts = partition(&domain, &FairnessQuery::individual(0, 100), 7);
    println!("first regions in visiting order:");
    for p in parts.iter_shuffled().take(3) {
        let r: Vec<String> = p.region.ranges.iter().map(|r| format!("[{}, {}]", r.lo, r.hi)).collect();
        println!("  #{:<4} {}", p.id, r.join(" "));
    }
    let x = [40.0, 512.0, 300.0, 3.0, 15.0];
    let id = parts.locate(&x).expect("point lies in the domain");
    println!("{x:?} lies in partition {id}");
    Ok(())
}
