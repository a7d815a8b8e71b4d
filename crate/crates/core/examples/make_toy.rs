//! Regenerates `data/toy.conll`.

fn main() -> stackptr::Result<()> {
    let text = stackptr::treebank::write_conll(&stackptr::synthetic::toy_generate()?)?;
    std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.conll"), text)?;
    Ok(())
}
