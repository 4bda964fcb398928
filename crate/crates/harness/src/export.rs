//! Figure data: spectrogram and PSD as CSV, spectrogram as a PNG image.

use std::path::Path;

use image::{GrayImage, Luma};
use rfmix_core::metrics::{Spectrogram, Spectrum};

use crate::error::{HarnessError, Result};

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// One row per frame: start time, then magnitude in dB for each bin from
/// `-fs/2` upward. The header row holds the bin frequencies.
pub fn spectrogram_csv(sg: &Spectrogram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["time_s".to_string()];
    header.extend((0..sg.n_bins).map(|b| format!("{}", sg.freq_of_bin(b))));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let db = sg.to_db();
    for f in 0..sg.n_frames {
        let mut rec = vec![format!("{}", sg.frame_time_s(f))];
        rec.extend(db[f * sg.n_bins..(f + 1) * sg.n_bins].iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn psd_csv(spec: &Spectrum, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["freq_hz", "psd_db_per_hz"]).map_err(|e| csv_error(path, e))?;
    for (f, p) in spec.to_db() {
        w.write_record([format!("{f}"), format!("{p}")])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Grayscale image with time left to right and frequency rising upward;
/// the top `dynamic_range_db` below the peak map onto 0..=255.
pub fn spectrogram_image(sg: &Spectrogram, dynamic_range_db: f64) -> GrayImage {
    let db = sg.to_db();
    let peak = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = peak - dynamic_range_db.max(1e-9);
    GrayImage::from_fn(sg.n_frames as u32, sg.n_bins as u32, |x, y| {
        let bin = sg.n_bins - 1 - y as usize;
        let v = (db[x as usize * sg.n_bins + bin] - floor) / (peak - floor);
        Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

pub fn spectrogram_png(sg: &Spectrogram, dynamic_range_db: f64, path: &Path) -> Result<()> {
    spectrogram_image(sg, dynamic_range_db)
        .save(path)
        .map_err(|e| HarnessError::io(path, std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rfmix_core::metrics::stft_spectrogram;
    use rfmix_core::{Complex64, IqBuffer};
    use std::f64::consts::PI;

    #[test]
    fn tone_lands_in_the_upper_half_of_the_image() {
        let fs = 1e6;
        let samples = (0..4096)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * 250e3 * k as f64 / fs))
            .collect();
        let sg = stft_spectrogram(&IqBuffer::new(samples, fs).unwrap(), 64, 32).unwrap();
        let img = spectrogram_image(&sg, 60.0);
        assert_eq!(img.dimensions(), (sg.n_frames as u32, 64));
        // +fs/4 sits a quarter of the way down from the top
        let col: Vec<u8> = (0..64).map(|y| img.get_pixel(3, y).0[0]).collect();
        let brightest = (0..64).max_by_key(|&y| col[y]).unwrap();
        assert_eq!(brightest, 64 - 1 - (32 + 16));
    }

    #[test]
    fn csv_has_header_and_one_row_per_frame() {
        let buf = IqBuffer::new(vec![Complex64::new(1.0, 0.0); 256], 1e3).unwrap();
        let sg = stft_spectrogram(&buf, 32, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sg.csv");
        spectrogram_csv(&sg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), sg.n_frames + 1);
        assert_eq!(lines[0].split(',').count(), 33);
        assert!(lines[0].starts_with("time_s,-500"));
    }
}
