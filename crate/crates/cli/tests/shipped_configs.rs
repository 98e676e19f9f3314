//! The shipped config files stay loadable and the battery file stays in sync
//! with the built-in default battery.
//!
//! Regenerate the battery file after an intentional change with
//! `UPDATE_GOLDEN=1 cargo test -p econprobe-cli --test shipped_configs`.

use std::path::PathBuf;

use econprobe_cli::config::RunConfig;
use econprobe_core::gamespec::{default_battery, load_battery, save_battery};

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_configs_load_and_validate() {
    for name in ["synthetic.toml", "remote_template.toml"] {
        let path = workspace_root().join("configs").join(name);
        let config = RunConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        assert!(!config.subjects.is_empty());
        for game in &config.games {
            game.to_grid(path.parent().unwrap())
                .unwrap_or_else(|e| panic!("{name}: {e:#}"));
        }
        config.variant_specs().unwrap();
    }
}

#[test]
fn battery_file_matches_builtin_default() {
    let path = workspace_root().join("configs/default_battery.toml");
    let serialized = save_battery(&default_battery());
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::write(&path, &serialized).unwrap();
        return;
    }
    let on_disk = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing {}: {e}", path.display()));
    assert_eq!(on_disk, serialized, "configs/default_battery.toml drifted from the built-in battery");
    let loaded = load_battery(&on_disk).unwrap();
    assert_eq!(loaded, default_battery());
}
