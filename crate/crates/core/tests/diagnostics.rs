use frele_core::diagnostics::{
    ablation_matrix, band_report_row, delta_sweep, frequency_trajectory, point_seed,
    pruning_sweep, spectral_bias_report, sweep_point, AblationSetting, BiasProfile, Experiment,
    ModelSpec, SpectralBiasExperiment, SweepKind, BAND_REPORT_COLUMNS,
};
use frele_core::loss::FreleConfig;
use frele_core::models::{Activation, Forecaster, Mlp};
use frele_core::series::{fit_apply_scaler, make_windows, time_split, MultiSeries, SplitSpec, WindowPair};
use frele_core::spectral::{irfft, rfft, BandPartition, Spectrum};
use frele_core::synthetic::SineSumSpec;
use frele_core::trainer::{Metrics, TrainConfig, Trainer};
use frele_core::{rng, Error, Matrix, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Looks up the true target of a known input and returns a filtered copy.
struct Oracle {
    pairs: Vec<(Matrix, Matrix)>,
    keep_bins: usize,
    horizon: usize,
}

impl Oracle {
    fn new(windows: &[WindowPair], keep_bins: usize) -> Self {
        Oracle {
            pairs: windows.iter().map(|w| (w.input.clone(), w.target.clone())).collect(),
            keep_bins,
            horizon: windows[0].horizon(),
        }
    }
}

impl Forecaster for Oracle {
    fn lookback(&self) -> usize {
        self.pairs[0].0.rows()
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn channels(&self) -> usize {
        self.pairs[0].0.cols()
    }
    fn params(&self) -> &[f64] {
        &[]
    }
    fn params_mut(&mut self) -> &mut [f64] {
        &mut []
    }
    fn forecast(&self, input: &Matrix) -> Result<Matrix> {
        let target = &self.pairs.iter().find(|(i, _)| i == input).ok_or(Error::NoData)?.1;
        let mut out = target.clone();
        for c in 0..target.cols() {
            let s = rfft(&target.column(c))?;
            let bins: Vec<Complex64> = s
                .bins()
                .iter()
                .enumerate()
                .map(|(k, z)| if k < self.keep_bins { *z } else { Complex64::new(0.0, 0.0) })
                .collect();
            out.set_column(c, &irfft(&Spectrum::new(bins, self.horizon)?)?);
        }
        Ok(out)
    }
    fn backprop(&self, _: &Matrix, _: &Matrix, _: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

fn noisy_series(len: usize, channels: usize, seed: u64) -> MultiSeries {
    let mut rng = rng::seeded(seed);
    let rows = (0..channels)
        .map(|c| {
            (0..len)
                .map(|t| {
                    let x = t as f64;
                    (x * 0.13 + c as f64).sin() + 0.5 * (x * 0.71).cos()
                        + 0.3 * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect();
    MultiSeries::from_channels(rows).unwrap()
}

fn small_experiment(seed: u64) -> Experiment {
    let series = noisy_series(900, 2, 1);
    let spec = SplitSpec::fractional(0.7, 0.1, 0.2).unwrap();
    let (train, val, test) = time_split(&series, &spec).unwrap();
    let (train, rest, _) = fit_apply_scaler(&train, &[&val, &test]).unwrap();
    let windows = |s: &MultiSeries| make_windows(s, 32, 16, 1).unwrap();
    Experiment {
        model: ModelSpec::default(),
        train: windows(&train),
        val: windows(&rest[0]),
        test: windows(&rest[1]),
        train_cfg: TrainConfig {
            epochs: 3,
            seed,
            ..TrainConfig::default()
        },
    }
}

#[test]
fn low_pass_oracle_has_clean_low_band() {
    let exp = small_experiment(0);
    let partition = BandPartition::standard(9).unwrap();
    assert_eq!((partition.lf.clone(), partition.mf.clone()), (0..1, 1..5));
    let oracle = Oracle::new(&exp.test, partition.lf.end);
    let report = spectral_bias_report(&oracle, &exp.test, &partition).unwrap();
    assert!(report.lf_rmse < 1e-12, "{report:?}");
    assert!(report.mf_rmse > 0.1 && report.hf_rmse > 0.1, "{report:?}");

    let perfect = Oracle::new(&exp.test, 9);
    let report = spectral_bias_report(&perfect, &exp.test, &partition).unwrap();
    assert!(report.gf_rmse < 1e-12);
    assert_eq!(spectral_bias_report(&perfect, &[], &partition), Err(Error::NoData));
}

#[test]
fn band_rows_follow_table_order() {
    assert_eq!(BAND_REPORT_COLUMNS, ["LF", "MF", "HF", "GF", "MAE", "MSE"]);
    let bands = frele_core::spectral::BandReport {
        lf_rmse: 1.0,
        mf_rmse: 2.0,
        hf_rmse: 3.0,
        gf_rmse: 4.0,
    };
    let row = band_report_row(&bands, &Metrics { mse: 6.0, mae: 5.0 });
    assert_eq!(row, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
}

#[test]
fn bias_profile_needs_band_tracking() {
    let exp = small_experiment(2);
    let model = exp.build_model(2).unwrap();
    let tracked = Trainer::new(FreleConfig::default(), exp.train_cfg)
        .track_bands(BandPartition::standard(9).unwrap())
        .fit(model.clone(), &exp.train, &exp.val)
        .unwrap();
    let profile = BiasProfile::from_logs(&tracked.logs).unwrap();
    assert_eq!(profile.rows.len(), tracked.logs.len());
    assert!(profile.rows.iter().all(|r| r.bands.gf_rmse > 0.0));

    let untracked = Trainer::new(FreleConfig::default(), exp.train_cfg)
        .fit(model, &exp.train, &exp.val)
        .unwrap();
    assert!(BiasProfile::from_logs(&untracked.logs).is_err());
}

#[test]
fn trajectory_of_zero_and_exact_models() {
    let spec = SineSumSpec::default();
    let truth = frele_core::synthetic::gen_sine_sum(&spec).unwrap().channel(0).to_vec();
    let probe: Vec<f64> = (0..truth.len()).map(|i| i as f64).collect();
    let freqs = [8.0, 16.0, 24.0];
    let zero = Mlp::from_params(1, 4, 1, Activation::Tanh, vec![0.0; 13]).unwrap();
    let traj = frequency_trajectory(&[(0, zero.clone()), (50, zero)], &probe, &truth, &freqs).unwrap();
    assert_eq!(traj.iterations, vec![0, 50]);
    for row in &traj.errors {
        assert_eq!(row, &vec![1.0, 1.0, 1.0]);
    }
    assert_eq!(traj.first_below(0, 0.3), None);
    assert!(matches!(
        frequency_trajectory(&[], &probe, &truth, &[8.5]),
        Err(Error::NonIntegerFrequency(_))
    ));
}

#[test]
fn spectral_bias_run_is_reproducible() {
    let exp = SpectralBiasExperiment {
        hidden: 32,
        iterations: 200,
        record_every: 20,
        ..SpectralBiasExperiment::default()
    };
    let (a, b) = (exp.run().unwrap(), exp.run().unwrap());
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.trajectory.iterations.len(), 11);
    assert_eq!(a.losses.len(), 11);
    assert_eq!(exp.target_freqs(), vec![8.0, 16.0, 24.0]);
    // Training reduces the error.
    assert!(a.losses.last().unwrap() < &a.losses[0]);
    let other = SpectralBiasExperiment { seed: 1, ..exp }.run().unwrap();
    assert_ne!(a.trajectory, other.trajectory);
}

#[test]
fn delta_sweep_records_every_point() {
    let exp = small_experiment(10);
    let grid = [0.0, 0.5, 1.0];
    let sweep = delta_sweep(&exp, &FreleConfig::default(), &grid).unwrap();
    assert_eq!(sweep.kind, SweepKind::Delta);
    assert_eq!(sweep.records.len(), 3);
    for (i, r) in sweep.records.iter().enumerate() {
        assert_eq!(r.grid_value, grid[i]);
        assert_eq!(r.seed, point_seed(10, i));
        assert!(r.mse.is_finite() && r.mae.is_finite());
    }
    let best = sweep.records.iter().map(|r| r.mse).fold(f64::INFINITY, f64::min);
    assert_eq!(sweep.best().mse, best);

    // A single point run on its own reproduces the sweep entry.
    let again = sweep_point(&exp, &FreleConfig::default(), SweepKind::Delta, 1, 0.5).unwrap();
    assert_eq!(again, sweep.records[1]);
    assert!(delta_sweep(&exp, &FreleConfig::default(), &[]).is_err());
    assert!(delta_sweep(&exp, &FreleConfig::default(), &[1.5]).is_err());
}

#[test]
fn full_retention_is_unpruned() {
    let exp = small_experiment(4);
    let base = FreleConfig::default();
    let sweep = pruning_sweep(&exp, &base, &[1.0, 0.8]).unwrap();
    let plain = exp.run(&base, point_seed(4, 0)).unwrap();
    assert_eq!(sweep.records[0].mse, plain.metrics.mse);
    assert_eq!(sweep.records[0].freq_loss, plain.test_loss.freq_loss);
    assert!(sweep.records[1].mse.is_finite());
}

#[test]
fn ablation_covers_three_settings() {
    let exp = small_experiment(6);
    let table = ablation_matrix(&exp, &FreleConfig::default()).unwrap();
    assert_eq!(table.seed, 6);
    let labels: Vec<&str> = table.rows.iter().map(|r| r.setting.label()).collect();
    assert_eq!(labels, ["EFR-IFR", "EFR", "EFR-AN"]);
    let ifr = table.get(AblationSetting::EfrIfr).unwrap();
    let direct = exp.run(&FreleConfig::default(), 6).unwrap();
    assert_eq!(ifr, &direct.metrics);
    let zero_delta = FreleConfig {
        delta: 0.0,
        ..FreleConfig::default()
    };
    assert!(ablation_matrix(&exp, &zero_delta).is_err());
}
