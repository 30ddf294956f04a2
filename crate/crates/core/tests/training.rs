use frele_core::loss::{FreleConfig, TimeLossKind};
use frele_core::models::{Forecaster, LinearForecaster, LinearMode};
use frele_core::series::{fit_apply_scaler, make_windows, MultiSeries, WindowPair};
use frele_core::spectral::BandPartition;
use frele_core::trainer::{evaluate, evaluate_loss, TrainConfig, Trainer};
use frele_core::{rng, Error, Matrix};
use rand::Rng;
use rand_distr::StandardNormal;

/// Windows whose targets are produced by a hidden plain linear model.
fn realizable(n: usize, t: usize, s: usize, c: usize, seed: u64) -> (LinearForecaster, Vec<WindowPair>) {
    let truth = LinearForecaster::new(LinearMode::Plain, t, s, c, true, seed).unwrap();
    let mut rng = rng::seeded(seed + 1);
    let windows = (0..n)
        .map(|i| {
            let input = Matrix::from_fn(t, c, |_, _| rng.sample(StandardNormal));
            let target = truth.forecast(&input).unwrap();
            WindowPair {
                input,
                target,
                origin_index: i,
            }
        })
        .collect();
    (truth, windows)
}

fn noise_windows(len: usize, seed: u64) -> Vec<WindowPair> {
    let mut rng = rng::seeded(seed);
    let ch: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    let series = MultiSeries::from_channels(vec![ch]).unwrap();
    make_windows(&series, 16, 8, 1).unwrap()
}

#[test]
fn realizable_linear_data_is_fitted() {
    let (_, windows) = realizable(96, 12, 6, 2, 3);
    let (train, val) = windows.split_at(64);
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 64,
        lr: 0.01,
        patience: 0,
        seed: 1,
        shuffle: true,
    };
    let model = LinearForecaster::new(LinearMode::Plain, 12, 6, 2, true, 99).unwrap();
    let out = Trainer::new(FreleConfig::time_only(TimeLossKind::Mse), cfg)
        .fit(model, train, val)
        .unwrap();
    assert_eq!(out.logs.len(), 200);
    let mse = evaluate(&out.model, train).unwrap().mse;
    assert!(mse < 1e-6, "train mse {mse:e}");
}

#[test]
fn zero_learning_rate_stops_after_patience() {
    let windows = noise_windows(200, 1);
    let cfg = TrainConfig {
        epochs: 50,
        lr: 0.0,
        patience: 1,
        ..TrainConfig::default()
    };
    let model = LinearForecaster::new(LinearMode::DLINEAR, 16, 8, 1, true, 0).unwrap();
    let before = model.params().to_vec();
    let out = Trainer::new(FreleConfig::default(), cfg)
        .fit(model, &windows[..120], &windows[120..])
        .unwrap();
    assert_eq!(out.logs.len(), 2);
    assert_eq!(out.best_epoch, 0);
    assert_eq!(out.model.params(), &before[..]);
    let epochs: Vec<usize> = out.logs.iter().map(|l| l.epoch).collect();
    assert_eq!(epochs, vec![0, 1]);
}

#[test]
fn training_is_deterministic() {
    let windows = noise_windows(300, 2);
    let cfg = TrainConfig {
        epochs: 4,
        ..TrainConfig::default()
    };
    let run = || {
        let model = LinearForecaster::new(LinearMode::DLINEAR, 16, 8, 1, true, 5).unwrap();
        Trainer::new(FreleConfig::default(), cfg)
            .track_bands(BandPartition::standard(5).unwrap())
            .fit(model, &windows[..200], &windows[200..])
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(a.logs, b.logs);
    assert!(a.logs.iter().all(|l| l.val_bands.is_some() && l.val_metrics.is_some()));

    let other = {
        let model = LinearForecaster::new(LinearMode::DLINEAR, 16, 8, 1, true, 5).unwrap();
        Trainer::new(FreleConfig::default(), TrainConfig { seed: 7, ..cfg })
            .fit(model, &windows[..200], &windows[200..])
            .unwrap()
    };
    assert_ne!(a.model.params(), other.model.params());
}

#[test]
fn zero_delta_equals_time_only() {
    let windows = noise_windows(250, 4);
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let fit = |loss: FreleConfig| {
        let model = LinearForecaster::new(LinearMode::DLINEAR, 16, 8, 1, true, 8).unwrap();
        Trainer::new(loss, cfg)
            .fit(model, &windows[..180], &windows[180..])
            .unwrap()
    };
    let frele = fit(FreleConfig {
        delta: 0.0,
        ..FreleConfig::default()
    });
    let plain = fit(FreleConfig::time_only(TimeLossKind::Mse));
    assert_eq!(frele.model.params(), plain.model.params());
    for (a, b) in frele.logs.iter().zip(&plain.logs) {
        assert_eq!(a.val.combined, b.val.combined);
        assert_eq!(a.val.time_loss, b.val.time_loss);
    }
}

#[test]
fn best_parameters_are_returned() {
    let windows = noise_windows(300, 6);
    let cfg = TrainConfig {
        epochs: 8,
        lr: 0.05,
        patience: 0,
        ..TrainConfig::default()
    };
    let loss = FreleConfig::default();
    let model = LinearForecaster::new(LinearMode::DLINEAR, 16, 8, 1, true, 1).unwrap();
    let out = Trainer::new(loss, cfg)
        .fit(model, &windows[..200], &windows[200..])
        .unwrap();
    let best = out
        .logs
        .iter()
        .min_by(|a, b| a.val.combined.total_cmp(&b.val.combined))
        .unwrap();
    assert_eq!(best.epoch, out.best_epoch);
    let again = evaluate_loss(&out.model, &windows[200..], &loss).unwrap();
    assert!((again.combined - best.val.combined).abs() < 1e-12);
}

#[test]
fn empty_or_invalid_inputs() {
    let windows = noise_windows(100, 1);
    let model = LinearForecaster::new(LinearMode::Plain, 16, 8, 1, true, 0).unwrap();
    let trainer = Trainer::new(FreleConfig::default(), TrainConfig::default());
    assert!(matches!(trainer.fit(model.clone(), &[], &windows), Err(Error::NoData)));
    assert!(matches!(trainer.fit(model.clone(), &windows, &[]), Err(Error::NoData)));
    let bad = Trainer::new(
        FreleConfig::default(),
        TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        },
    );
    assert!(bad.fit(model.clone(), &windows, &windows).is_err());
    assert!(matches!(evaluate(&model, &[]), Err(Error::NoData)));
}

#[test]
fn zero_forecast_on_standardised_data_has_unit_mse() {
    let mut rng = rng::seeded(10);
    let raw: Vec<f64> = (0..20_000).map(|_| 3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let series = MultiSeries::from_channels(vec![raw]).unwrap();
    let (scaled, _, _) = fit_apply_scaler(&series, &[]).unwrap();
    let windows = make_windows(&scaled, 16, 8, 8).unwrap();
    let zeros = vec![0.0; LinearForecaster::new(LinearMode::Plain, 16, 8, 1, true, 0).unwrap().num_params()];
    let model = LinearForecaster::from_params(LinearMode::Plain, 16, 8, 1, true, zeros).unwrap();
    let m = evaluate(&model, &windows).unwrap();
    assert!((m.mse - 1.0).abs() < 0.03, "mse {}", m.mse);
    // E|N(0,1)| = sqrt(2/pi).
    assert!((m.mae - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.03, "mae {}", m.mae);
}
