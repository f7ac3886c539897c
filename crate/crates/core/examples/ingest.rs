//! Stream files: write ids in both formats, read them back and check the
//! smooth-histogram invariants on the result.

use semismooth::stream_io::{ingest_file, verify_histograms, write_ids, Format, GeneratorSpec};
use semismooth::Universe;

fn main() -> semismooth::Result<()> {
    let ids = "zipf:s=1.0,u=300,len=2000"
        .parse::<GeneratorSpec>()?
        .generate()?;
    let dir = std::env::temp_dir().join("semismooth-ingest-example");
    std::fs::create_dir_all(&dir).map_err(|source| semismooth::Error::Io {
        path: dir.clone(),
        source,
    })?;

    for format in [Format::Text, Format::U64le] {
        let path = dir.join(format!("stream.{format}"));
        std::fs::write(&path, write_ids(&ids, format)).map_err(|source| semismooth::Error::Io {
            path: path.clone(),
            source,
        })?;
        let back = ingest_file(&path, format, Some(Universe::new(300)?))?;
        assert_eq!(back, ids);
        println!("{format}: {} ids from {}", back.len(), path.display());
    }

    let report = verify_histograms(&ids, 256, 0.2)?;
    println!(
        "l2: {} violations, at most {} buckets; distinct: {} violations, at most {} buckets",
        report.l2.violations(),
        report.l2.max_buckets,
        report.distinct.violations(),
        report.distinct.max_buckets
    );
    Ok(())
}
