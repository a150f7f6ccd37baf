mod common;

use common::*;
use speechaug::audio::{istft, stft, StftParams, WindowKind};
use speechaug::speed::{speed_perturb, ResamplerParams, SpeedFactor};
use speechaug::vtlp::{vtlp_perturb, WarpSpec};
use speechaug::wsola::{tempo_perturb, TempoFactor, WsolaParams};
use speechaug::{read_wav, write_wav};

#[test]
fn speed_does_not_alias() {
    let rate = 16000;
    let f0 = 0.43 * rate as f64;
    let alpha = 1.15;
    let out = speed_perturb(
        &tone(f0, 6 * rate as usize, rate),
        SpeedFactor::new(alpha).unwrap(),
        &ResamplerParams::default(),
    )
    .unwrap();
    // 1 s analysis, 1 Hz bins. Kaiser beta 8.6 keeps the main lobe inside
    // three bins while its sidelobes stay below -60 dB.
    let (db, bin_hz) = kaiser_spectrum_db(interior(out.samples(), rate as usize), rate, 8.6);
    let peak_bin = (0..db.len()).max_by(|&a, &b| db[a].total_cmp(&db[b])).unwrap();
    assert!((peak_bin as f64 * bin_hz - alpha * f0).abs() <= bin_hz);
    let from = (alpha * f0 / bin_hz).round() as usize + 3;
    let above = db[from..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(above <= db[peak_bin] - 60.0, "{:.1} dB", above - db[peak_bin]);

    let far = db
        .iter()
        .enumerate()
        .filter(|(k, _)| (*k as f64 * bin_hz - alpha * f0).abs() > 20.0)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(far <= db[peak_bin] - 80.0, "{:.1} dB", far - db[peak_bin]);
}

#[test]
fn speed_scales_spectral_centroid() {
    let rate = 16000;
    let x = speech_like(32000, rate, 3);
    let out = speed_perturb(&x, SpeedFactor::new(0.9).unwrap(), &ResamplerParams::default()).unwrap();
    assert_eq!(out.len(), 35556);
    let ratio = centroid_hz(out.samples(), rate) / centroid_hz(x.samples(), rate);
    assert!((ratio / 0.9 - 1.0).abs() < 0.03, "ratio {ratio}");
}

#[test]
fn vtlp_round_trip_restores_tone() {
    let rate = 16000;
    let x = tone(700.0, 3 * rate as usize, rate);
    let up = vtlp_perturb(&x, &WarpSpec::new(1.1, 4800.0).unwrap()).unwrap();
    let back = vtlp_perturb(&up, &WarpSpec::new(1.0 / 1.1, 4800.0).unwrap()).unwrap();
    let f = peak_hz(interior(back.samples(), rate as usize), rate);
    assert!((f - 700.0).abs() <= 1.0, "{f}");
}

#[test]
fn vtlp_energy_is_reasonable_on_speech() {
    let rate = 16000;
    let x = speech_like(2 * rate as usize, rate, 11);
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    for alpha in [0.85, 0.9, 1.1, 1.15] {
        let y = vtlp_perturb(&x, &WarpSpec::new(alpha, 4800.0).unwrap()).unwrap();
        let ratio = rms(y.samples()) / rms(x.samples());
        assert!((0.5..=2.0).contains(&ratio), "alpha {alpha}: {ratio}");
    }
}

#[test]
fn tempo_on_speech_keeps_amplitude_and_alignment() {
    let rate = 16000;
    let x = speech_like(3 * rate as usize, rate, 5);
    let peak_in = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for f in [0.85, 1.0, 1.15] {
        let y = tempo_perturb(&x, TempoFactor::new(f).unwrap(), &WsolaParams::default()).unwrap();
        let peak_out = y.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak_out <= 1.1 * peak_in);
        assert!((y.len() as f64 - x.len() as f64 / f).abs() <= 512.0);
    }
    let y = tempo_perturb(&x, TempoFactor::new(1.0).unwrap(), &WsolaParams::default()).unwrap();
    let a = &x.samples()[4000..44000];
    let b = &y.samples()[4000..44000];
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(dot / (na * nb) > 0.99);
}

#[test]
fn stft_round_trip_on_speech_and_rectangular_window() {
    let x = speech_like(20000, 16000, 8);
    for params in [
        StftParams::default(),
        StftParams {
            frame_len: 256,
            hop: 256,
            window: WindowKind::Rectangular,
        },
    ] {
        let y = istft(&stft(&x, params).unwrap()).unwrap();
        assert_eq!(y.len(), x.len());
        assert!(rel_rms(y.samples(), x.samples()) < 1e-9);
    }
}

#[test]
fn processed_audio_survives_wav_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let x = speech_like(16000, 16000, 2);
    let y = speed_perturb(&x, SpeedFactor::new(1.05).unwrap(), &ResamplerParams::default()).unwrap();
    let path = dir.path().join("y.wav");
    write_wav(&y, &path).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.len(), y.len());
    let worst = back
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1.0 / 32768.0);
}
