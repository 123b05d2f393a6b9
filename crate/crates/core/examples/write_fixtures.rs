//! Regenerates the files under `fixtures/` at the workspace root.
//!
//! cargo run -p cardlake-core --example write_fixtures

#[path = "../tests/common/mod.rs"]
mod common;

fn main() -> std::io::Result<()> {
    let root = common::fixtures_dir();
    for (path, body) in common::fixture_files() {
        let path = root.join(path);
        std::fs::create_dir_all(path.parent().expect("fixture paths have a directory"))?;
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
