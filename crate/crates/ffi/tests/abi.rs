use std::ffi::{CStr, CString};
use std::ptr;

use mamnet::checkpoint::Checkpoint;
use mamnet::data::NormStats;
use mamnet::model::predict_window;
use mamnet::numerics::{Rng, Tensor};
use mamnet::{ModelParams, RunConfig};
use mamnet_ffi::*;

fn fixture() -> (tempfile::TempDir, CString, Checkpoint) {
    let mut config = RunConfig::default();
    config.window_len = 8;
    config.state_dim = 3;
    config.fusion_dim = 4;
    let selected = vec![0, 2];
    let params = ModelParams::init(&config.model_config(2), &mut Rng::new(11)).unwrap();
    let ck = Checkpoint {
        config,
        columns: vec!["bytes".into(), "port".into(), "packets".into()],
        selected,
        norm: NormStats {
            min: vec![0.0, 10.0],
            max: vec![100.0, 20.0],
            fitted_rows: 50,
        },
        params,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ck.save(&path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    (dir, c, ck)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(mamnet_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn load_and_predict_matches_library() {
    let (_dir, path, ck) = fixture();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mamnet_model_load(path.as_ptr(), &mut model) }, MAMNET_OK);
    assert_eq!(unsafe { mamnet_model_window_len(model) }, 8);
    assert_eq!(unsafe { mamnet_model_feature_count(model) }, 3);

    let mut rng = Rng::new(3);
    let raw: Vec<f64> = (0..8 * 3).map(|_| rng.uniform(0.0, 120.0)).collect();
    let mut score = f64::NAN;
    let rc = unsafe { mamnet_model_predict_window(model, raw.as_ptr(), 8, 3, &mut score) };
    assert_eq!(rc, MAMNET_OK, "{}", last_error());

    let rows: Vec<f64> = raw.chunks(3).flat_map(|r| ck.transform_row(r).unwrap()).collect();
    let window = Tensor::from_vec(&[8, 2], rows).unwrap();
    let expect = predict_window(&ck.params, &ck.model_config(), &window).unwrap();
    assert_eq!(score.to_bits(), expect.to_bits());
    assert!(score > 0.0 && score < 1.0);
    unsafe { mamnet_model_free(model) };
}

#[test]
fn error_codes_and_messages() {
    let (_dir, path, _) = fixture();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mamnet_model_load(ptr::null(), &mut model) }, MAMNET_ERR_NULL);

    let missing = CString::new("/definitely/not/here.ckpt").unwrap();
    assert_eq!(unsafe { mamnet_model_load(missing.as_ptr(), &mut model) }, MAMNET_ERR_DATA);
    assert!(last_error().contains("not/here.ckpt"));

    assert_eq!(unsafe { mamnet_model_load(path.as_ptr(), &mut model) }, MAMNET_OK);
    let raw = vec![1.0; 8 * 2];
    let mut score = 0.0;
    let rc = unsafe { mamnet_model_predict_window(model, raw.as_ptr(), 8, 2, &mut score) };
    assert_eq!(rc, MAMNET_ERR_DATA);
    assert!(last_error().contains("8x3"), "{}", last_error());
    let rc = unsafe { mamnet_model_predict_window(model, ptr::null(), 8, 3, &mut score) };
    assert_eq!(rc, MAMNET_ERR_NULL);
    let mut bad = vec![1.0; 8 * 3];
    bad[3] = f64::NAN; // row 1, a selected column
    let rc = unsafe { mamnet_model_predict_window(model, bad.as_ptr(), 8, 3, &mut score) };
    assert_ne!(rc, MAMNET_OK);
    unsafe { mamnet_model_free(model) };

    assert_eq!(unsafe { mamnet_model_window_len(ptr::null()) }, 0);
    unsafe { mamnet_model_free(ptr::null_mut()) };
}

#[test]
fn version_and_helpers() {
    let v = unsafe { CStr::from_ptr(mamnet_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));

    let x = [1.0, 0.0, -1.0, 0.0];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { mamnet_dft_magnitudes(x.as_ptr(), 4, 3, out.as_mut_ptr()) }, MAMNET_OK);
    assert!((out[0]).abs() < 1e-12 && (out[1] - 0.5).abs() < 1e-12 && out[2].abs() < 1e-12);
    assert_ne!(unsafe { mamnet_dft_magnitudes(x.as_ptr(), 4, 5, out.as_mut_ptr()) }, MAMNET_OK);

    let a = [1.0, 2.0, 3.0, 4.0];
    let b = [3.0, 4.0, 5.0, 6.0];
    let (mut t, mut df, mut p) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { mamnet_welch(a.as_ptr(), 4, b.as_ptr(), 4, &mut t, &mut df, &mut p) }, MAMNET_OK);
    // equal variances 5/3: t = -2 / sqrt(5/6), df = 6
    assert!((t + 2.0 / (5.0f64 / 6.0).sqrt()).abs() < 1e-12);
    assert!((df - 6.0).abs() < 1e-12);
    assert!(p > 0.0 && p < 0.1);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mamnet.h")).unwrap();
    for name in [
        "typedef struct MamnetModel MamnetModel",
        "mamnet_model_load",
        "mamnet_model_predict_window",
        "mamnet_last_error",
        "#define MAMNET_ERR_NUMERIC 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
