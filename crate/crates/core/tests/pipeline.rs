//! The harness phases at toy scale.

use std::path::Path;

use mtgm_core::harness::pipeline::*;
use mtgm_core::harness::RunConfig;
use mtgm_core::metrics::{from_csv, CSV_HEADER};

fn tiny() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.collect_episodes = 16;
    cfg.vae_train.epochs = 1;
    cfg.rbm_train.epochs = 2;
    cfg.eval_episodes = 5;
    cfg
}

fn run_all(cfg: &RunConfig, out: &Path) {
    cmd_collect(cfg, out).unwrap();
    cmd_train_vae(cfg, out).unwrap();
    cmd_train_rbm(cfg, out).unwrap();
    for kind in AgentKind::ALL {
        cmd_eval(cfg, kind, out).unwrap();
    }
}

#[test]
fn phases_write_their_artefacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    run_all(&cfg, dir.path());
    for f in [DATASET_FILE, VAE_FILE, RBM_FILE, VAE_LOSS_FILE, RBM_LOSS_FILE] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    for kind in AgentKind::ALL {
        let text = std::fs::read_to_string(dir.path().join(eval_file(kind))).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let rows = from_csv(&text).unwrap();
        assert_eq!(rows.len(), cfg.eval_episodes);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.episode, i);
            assert!((1..=200).contains(&r.steps));
            assert!([-1.0, 0.0, 1.0].contains(&r.reward));
            assert_eq!(r.forced_termination, r.reward == 0.0);
        }
    }
    let loaded = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded.len(), cfg.collect_episodes);
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let cfg = tiny();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(&cfg, a.path());
    run_all(&cfg, b.path());
    let other = RunConfig { seed: 1, ..cfg.clone() };
    let c = tempfile::tempdir().unwrap();
    cmd_collect(&other, c.path()).unwrap();

    for kind in AgentKind::ALL {
        let f = eval_file(kind);
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap(), "{f}");
    }
    let read = |d: &Path| std::fs::read(d.join(DATASET_FILE)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn model_agents_need_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    assert!(cmd_eval(&cfg, AgentKind::Mtrl0, dir.path()).is_err());
    assert!(cmd_eval(&cfg, AgentKind::MtrlAlpha, dir.path()).is_err());
    assert!(cmd_train_vae(&cfg, dir.path()).is_err());
    cmd_eval(&cfg, AgentKind::Strl, dir.path()).unwrap();
}

#[test]
fn visualize_writes_ppm_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    cmd_collect(&cfg, dir.path()).unwrap();
    cmd_train_vae(&cfg, dir.path()).unwrap();
    cmd_train_rbm(&cfg, dir.path()).unwrap();
    for what in [Visual::Jacobian, Visual::RbmClusters, Visual::VaeRecon] {
        let path = cmd_visualize(&cfg, what, dir.path()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P6\n"), "{}", path.display());
    }
    let heat = std::fs::read(dir.path().join(Visual::Jacobian.file_name())).unwrap();
    assert!(heat.starts_with(b"P6\n28 28\n255\n"));
    assert_eq!(heat.len(), b"P6\n28 28\n255\n".len() + 28 * 28 * 3);
}
