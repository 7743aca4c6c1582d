use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::load::{CITATION_HEADER, IPC_HEADER, PATENT_HEADER, UPC_HEADER};
use super::{ClassSystem, CorpusError, CorpusPaths, CorpusStore};

fn clean(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Writes `store` in the ingest TSV layout under `dir` and returns the paths.
/// Reloading the output yields an identical store.
pub fn write_corpus(store: &CorpusStore, dir: &Path) -> Result<CorpusPaths, CorpusError> {
    let paths = CorpusPaths::in_dir(dir);
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CorpusError::Io { path: path.clone(), source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let open = |path: &Path| File::create(path).map(BufWriter::new).map_err(io(path));

    let mut w = open(&paths.patents)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", PATENT_HEADER.join("\t"))?;
        for p in store.patents() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                p.id,
                p.grant_date.format("%Y-%m-%d"),
                p.kind,
                clean(&p.title),
                clean(&p.abstract_text)
            )?;
        }
        w.flush()
    })()
    .map_err(io(&paths.patents))?;

    let lists = store.class_lists();
    let mut upc = open(&paths.upc)?;
    let mut ipc = open(&paths.ipc)?;
    (|| -> std::io::Result<()> {
        writeln!(upc, "{}", UPC_HEADER.join("\t"))?;
        writeln!(ipc, "{}", IPC_HEADER.join("\t"))?;
        for m in store.memberships() {
            let id = &store.patent(m.patent).id;
            match m.system {
                ClassSystem::Upc => writeln!(upc, "{}\t{}\t{}", id, lists.upc.label(m.class), u8::from(m.is_primary))?,
                ClassSystem::Ipc => writeln!(ipc, "{}\t{}", id, lists.ipc.label(m.class))?,
            }
        }
        upc.flush()?;
        ipc.flush()
    })()
    .map_err(io(&paths.upc))?;

    let mut w = open(&paths.citations)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", CITATION_HEADER.join("\t"))?;
        for c in store.citations() {
            writeln!(w, "{}\t{}", store.patent(c.citing).id, store.patent(c.cited).id)?;
        }
        w.flush()
    })()
    .map_err(io(&paths.citations))?;

    for (path, list) in [(&paths.upc_classes, &lists.upc), (&paths.ipc_classes, &lists.ipc)] {
        let mut w = open(path)?;
        (|| -> std::io::Result<()> {
            for label in list.labels() {
                writeln!(w, "{label}")?;
            }
            w.flush()
        })()
        .map_err(io(path))?;
    }
    Ok(paths)
}
