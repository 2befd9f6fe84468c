use pspl_core::trainkit::{
    batch_gradient, evaluate, evaluate_with, psnr_from_mse, records_to_csv, run_benchmark,
    toy_images, train, train_epoch, Target, PSNR_CAP_DB,
};
use pspl_core::{
    AdamState, Architecture, AttentionSchedule, ImageGrid, LossKind, PatchDataset, SrModel,
    TrainConfig,
};

fn small_dataset(seed: u64) -> PatchDataset {
    PatchDataset::new(toy_images(4, 24, seed).unwrap(), 12, 2, seed, 6).unwrap()
}

fn small_config() -> TrainConfig {
    let mut c = TrainConfig::new(Architecture::residual(1, &[4], 3, 2).unwrap());
    c.batch_size = 4;
    c.epochs = 3;
    c
}

#[test]
fn wide_attention_reduces_to_scaled_plain_loss() {
    let ds = small_dataset(1);
    let plain = small_config();
    let pspl = TrainConfig {
        pspl_enabled: true,
        schedule: AttentionSchedule {
            beta: 1e9,
            ..AttentionSchedule::default()
        },
        ..plain.clone()
    };
    let gamma = pspl.schedule.gamma;
    let model = SrModel::initialized(plain.architecture.clone(), 3).unwrap();
    for index in 0..4 {
        let batch = ds.sample_batch(1, index, 4).unwrap();
        let (lp, gp) = batch_gradient(&model, &batch, &plain, 1).unwrap();
        let (lw, gw) = batch_gradient(&model, &batch, &pspl, 1).unwrap();
        assert!(
            (lw - gamma * lp).abs() <= 1e-4 * gamma * lp,
            "{lw} vs {gamma}·{lp}"
        );
        let scale = gp.values().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in gw.values().zip(gp.values()) {
            assert!((a - gamma * b).abs() <= 1e-4 * gamma * scale);
        }
    }
}

#[test]
fn one_epoch_is_bitwise_reproducible() {
    let ds = small_dataset(2);
    for pspl_enabled in [false, true] {
        let config = TrainConfig {
            pspl_enabled,
            ..small_config()
        };
        let run = || {
            let mut model = SrModel::initialized(config.architecture.clone(), 9).unwrap();
            let mut opt = AdamState::new(&model, config.learning_rate);
            let (record, step) = train_epoch(&mut model, &mut opt, &ds, &config, 1, 0).unwrap();
            (record, step, model)
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.1, 2, "6 patches in batches of 4 is two updates");
    }
}

#[test]
fn records_have_nondecreasing_delta_and_validation() {
    let ds = small_dataset(3);
    let val = toy_images(2, 16, 30).unwrap();
    let config = TrainConfig {
        pspl_enabled: true,
        epochs: 5,
        validation_interval: 2,
        ..small_config()
    };
    let run = train(&ds, &val, &config, |_| {}).unwrap();
    let epochs: Vec<usize> = run.records.iter().map(|r| r.epoch).collect();
    assert_eq!(epochs, vec![1, 2, 3, 4, 5]);
    for pair in run.records.windows(2) {
        assert!(pair[1].delta >= pair[0].delta);
    }
    let validated: Vec<bool> = run.records.iter().map(|r| r.psnr_db.is_some()).collect();
    assert_eq!(validated, vec![false, true, false, true, true]);
    assert!(run.records.iter().all(|r| r.delta > 0.0));

    let again = train(&ds, &val, &config, |_| {}).unwrap();
    assert_eq!(run.model, again.model);
    assert_eq!(
        records_to_csv(&run.records, false),
        records_to_csv(&again.records, false)
    );
}

#[test]
fn evaluation_anchors() {
    // A constant image survives degradation, so adding 0.1 to the input
    // gives MSE = 0.01 on the normalized scale, i.e. 20 dB.
    let val = vec![ImageGrid::filled(16, 16, 1, 102.0, 255.0).unwrap()];
    let off = evaluate_with(&val, 2, |x| x.map(|v| v + 0.1)).unwrap();
    assert!((off.psnr_db - 20.0).abs() < 1e-9, "{}", off.psnr_db);

    let exact = evaluate_with(&val, 2, |x| Ok(x.clone())).unwrap();
    assert_eq!(exact.psnr_db, PSNR_CAP_DB);
    assert!((exact.mean_ssim - 1.0).abs() < 1e-12);

    // The zero model is an identity map, i.e. plain bicubic.
    let imgs = toy_images(2, 32, 4).unwrap();
    let model = SrModel::new(Architecture::standard(1, 2)).unwrap();
    let via_model = evaluate(&model, &imgs, 2).unwrap();
    let via_bicubic = evaluate_with(&imgs, 2, |x| Ok(x.clone())).unwrap();
    assert_eq!(via_model, via_bicubic);
    assert!(via_model.psnr_db > 15.0 && via_model.psnr_db < PSNR_CAP_DB);

    assert_eq!(psnr_from_mse(0.01, 1.0), 20.0);
    assert!(evaluate_with(&[], 2, |x| Ok(x.clone())).is_err());
}

#[test]
fn control_benchmark_has_unit_ratio() {
    let ds = small_dataset(5);
    let val = toy_images(2, 16, 50).unwrap();
    let config = TrainConfig {
        epochs: 4,
        ..small_config()
    };
    let report = run_benchmark(
        &config,
        &config,
        &ds,
        &val,
        Target::ReferenceEpoch(3),
        |_, _| {},
    )
    .unwrap();
    assert_eq!(report.ratio(), Some(1.0));
    assert_eq!(
        records_to_csv(&report.reference, false),
        records_to_csv(&report.candidate, false)
    );
    assert!(report.summary().contains("ratio=1.000000\n"));
}

#[test]
fn benchmark_rejects_confounded_arms() {
    let ds = small_dataset(6);
    let val = toy_images(1, 16, 60).unwrap();
    let a = small_config();
    let b = TrainConfig {
        pspl_enabled: true,
        loss: LossKind::L2,
        ..a.clone()
    };
    assert!(run_benchmark(&a, &b, &ds, &val, Target::Absolute(30.0), |_, _| {}).is_err());
    let late = Target::ReferenceEpoch(a.epochs + 1);
    assert!(run_benchmark(&a, &a, &ds, &val, late, |_, _| {}).is_err());
}
