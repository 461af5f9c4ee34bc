use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvc::cli::{RunConfig, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use cvc::data::SyntheticSpec;
use cvc::model::ModelConfig;

fn cvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), EXIT_OK, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

/// A tiny configuration whose every phase runs in a few seconds.
fn tiny_config(dir: &Path) -> PathBuf {
    let mut cfg = RunConfig::default();
    cfg.data_dir = dir.join("data").to_string_lossy().into_owned();
    cfg.model = ModelConfig::tiny();
    let m = &cfg.model;
    cfg.synthetic = SyntheticSpec::desk(m.channels, m.height, m.width, 5);
    cfg.synthetic.train = 6;
    cfg.synthetic.val = 2;
    cfg.synthetic.test = 2;
    for t in [&mut cfg.pretrain, &mut cfg.finetune, &mut cfg.rd_sweep.train] {
        t.steps = 4;
        t.warmup = 1;
        t.batch = 2;
        t.val_every = 2;
        t.checkpoint_every = 2;
    }
    cfg.rd_sweep.lambdas = vec![0.5, 2.0];
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let config = tiny_config(d);
    let config = config.to_str().unwrap();
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();

    ok(cvc(&["gen-data", "--config", config]));
    assert!(d.join("data/train/00005.grd").exists());
    ok(cvc(&["stats", "--config", config]));
    assert!(d.join("data/stats.toml").exists());

    ok(cvc(&["pretrain", "--config", config, "--out", &p("pre")]));
    for f in ["best.ckpt", "last.ckpt", "optimizer.ckpt", "train_log.jsonl", "resolved_config.toml"] {
        assert!(d.join("pre").join(f).exists(), "missing {f}");
    }

    // the snapshot replays the run bit for bit
    ok(cvc(&["pretrain", "--config", &p("pre/resolved_config.toml"), "--out", &p("replay")]));
    assert_eq!(std::fs::read(d.join("pre/best.ckpt")).unwrap(), std::fs::read(d.join("replay/best.ckpt")).unwrap());

    ok(cvc(&["finetune", "--config", config, "--checkpoint", &p("pre/best.ckpt"), "--lambda", "2", "--out", &p("ft")]));
    let snap = std::fs::read_to_string(d.join("ft/resolved_config.toml")).unwrap();
    let snap: RunConfig = toml::from_str(&snap).unwrap();
    assert_eq!(snap.finetune.lambda, 2.0);

    let input = p("data/test/00000.grd");
    let ckpt = p("ft/best.ckpt");
    ok(cvc(&["compress", "--config", config, "--checkpoint", &ckpt, "--out", &p("x.cvc"), &input]));
    ok(cvc(&["decompress", "--config", config, "--checkpoint", &ckpt, "--out", &p("x.grd"), &p("x.cvc")]));
    assert!(d.join("x.cvc.config.toml").exists());

    let out = ok(cvc(&["eval", "--config", config, "--checkpoint", &ckpt, "--out", &p("eval"), "--baseline"]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("overall_mse_x100"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("eval/report.json")).unwrap()).unwrap();
    let (bpsp, ratio) = (report["bpsp"].as_f64().unwrap(), report["compression_ratio"].as_f64().unwrap());
    assert!((bpsp * ratio - 32.0).abs() < 1e-6);

    let out = ok(cvc(&["rd-sweep", "--config", config, "--checkpoint", &p("pre/best.ckpt"), "--out", &p("rd")]));
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(d.join("rd/lambda_0.5/best.ckpt").exists());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(&cvc(&["--help"])), EXIT_OK);
    for sub in ["gen-data", "stats", "pretrain", "finetune", "compress", "decompress", "eval", "rd-sweep"] {
        let out = cvc(&[sub, "--help"]);
        assert_eq!(code(&out), EXIT_OK);
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in ["--config", "--out", "--seed", "--lambda", "--checkpoint", "--stats", "--set"] {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    assert_eq!(code(&cvc(&["no-such-command"])), EXIT_USAGE);
    assert_eq!(code(&cvc(&["stats", "--set", "model.no_such_key=3"])), EXIT_USAGE);
    assert_eq!(code(&cvc(&["stats", "--set", "pretrain.lr=-1"])), EXIT_USAGE);
    assert_eq!(code(&cvc(&["finetune", "--checkpoint", d.join("absent.ckpt").to_str().unwrap()])), EXIT_USAGE);

    // a corrupt container is a data error
    let config = tiny_config(d);
    let config = config.to_str().unwrap();
    ok(cvc(&["gen-data", "--config", config]));
    ok(cvc(&["stats", "--config", config]));
    let junk = d.join("junk.cvc");
    std::fs::write(&junk, b"CVC1 not really").unwrap();
    let model = cvc::model::VaeFormer::new(ModelConfig::tiny()).unwrap();
    let ckpt = d.join("m.ckpt");
    model.save(&ckpt, "pretrain", None).unwrap();
    let out = cvc(&["decompress", "--config", config, "--checkpoint", ckpt.to_str().unwrap(), junk.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_DATA);
    assert!(!junk.with_extension("grd").exists());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn run_config_rejects_unknown_keys_and_applies_overrides() {
    assert!(RunConfig::resolve(Some("[model]\nbogus = 1\n"), &[]).is_err());
    assert!(RunConfig::resolve(Some("extra = 1\n"), &[]).is_err());
    let cfg = RunConfig::resolve(Some("[pretrain]\nsteps = 4200\n"), &["pretrain.steps=4300".into(), "data_dir=elsewhere".into()]).unwrap();
    assert_eq!(cfg.pretrain.steps, 4300);
    assert_eq!(cfg.data_dir, "elsewhere");
}
