//! Two echoes closer than the periodogram resolution, separated by MUSIC.
//!
//! ```sh
//! cargo run --release --example music_two_targets
//! ```

use thz_isac::channel::{self, ChannelRealization, PathSpec, Propagation};
use thz_isac::numerics::RngStream;
use thz_isac::rx;
use thz_isac::sensing::{self, MusicGrid, SensingCfrMatrix, SensingGeometry};
use thz_isac::waveform::{self, FrameConfig, Waveform};
use thz_isac::Complex64;

fn main() -> thz_isac::Result<()> {
    let cfg = FrameConfig::cp(64, 32, 8, 1, 7.68e6);
    let resolution = thz_isac::SPEED_OF_LIGHT / (2.0 * 32.0 * cfg.subcarrier_spacing);
    let ranges = [3.0, 3.0 + 0.6 * resolution];
    println!("periodogram resolution {:.3} m, targets at {:.3} m and {:.3} m", resolution, ranges[0], ranges[1]);

    let paths = ranges
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let (delay, doppler) = channel::geometry_to_path(Propagation::Sensing, r, 0.0, cfg.carrier);
            PathSpec::new(Complex64::from_polar(1.0, 0.9 * i as f64), delay, doppler)
        })
        .collect();
    let ch = ChannelRealization::new(paths).with_snr_db(30.0);
    let mut rng = RngStream::new(3, 0);
    let tx = waveform::random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng)?;
    let (y, _) = channel::transmit(&cfg, &ch, &waveform::modulate(&cfg, &tx)?, &mut rng)?;
    let cfr = SensingCfrMatrix::from_rx(&rx::demap_to_freq(&cfg, &y)?, SensingGeometry::Monostatic)?;

    let per = sensing::estimate_range_periodogram(&cfr, 16, 2)?;
    let music = sensing::music_range(&cfr, 2, &MusicGrid::default())?;
    let show = |name: &str, est: &[sensing::TargetEstimate]| {
        let r: Vec<String> = est.iter().map(|e| format!("{:.3}", e.range_m)).collect();
        println!("{name:<12} {}", r.join(", "));
    };
    show("periodogram", &per);
    show("MUSIC", &music.estimates);
    Ok(())
}
