//! The configuration example in the README must stay loadable.

use cogvid_cli::config::parse_config;

#[test]
fn readme_toml_example_parses_and_validates() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .expect("README.md at the workspace root");
    let start = readme
        .find("```toml\n")
        .expect("README contains a toml example")
        + "```toml\n".len();
    let end = start + readme[start..].find("```").expect("fenced block closes");
    let example = &readme[start..end];

    let cfg = parse_config(example, "README.md").expect("README example validates");
    assert_eq!(cfg.experiment, "demo");
    assert_eq!(cfg.channels.len(), 1);
    assert!(cfg.sweep.is_some());
    cfg.envs()
        .expect("README example builds channel environments");
}
