// Channel draws can be written to JSON and read back; reloading reproduces
// the alignment report exactly.

use ia3::metrics::Trial;
use ia3::network::{generate_channels, ChannelSet, NetworkConfig};
use ia3::numerics::Tolerance;

pub fn run_example() -> ia3::Result<()> {
    let cfg = NetworkConfig::new(6, 4, 2, 1)?;
    let tol = Tolerance::default();
    let ch = generate_channels(&cfg, 7)?;
    let text = ch.to_json()?;
    println!("dump is {} bytes, first entry H[1,1,1](1,1) = {}", text.len(), ch.h(0, 0, 0)[(0, 0)]);

    let path = std::env::temp_dir().join(format!("ia3-channels-{}.json", std::process::id()));
    std::fs::write(&path, &text).map_err(|e| ia3::Error::Serialization(e.to_string()))?;
    let loaded = std::fs::read_to_string(&path).map_err(|e| ia3::Error::Serialization(e.to_string()))?;
    let _ = std::fs::remove_file(&path);
    let reloaded = ChannelSet::from_json(&loaded)?;
    assert_eq!(reloaded, ch);

    let a = Trial::from_channels(ch, &tol)?.report;
    let b = Trial::from_channels(reloaded, &tol)?.report;
    println!("reports identical after reload: {}", a == b);
    println!("{}", b.to_json()?);
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
