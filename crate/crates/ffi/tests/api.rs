use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use csix::dataset::{generate_synthetic, save_csv, MinMax, SynthConfig};
use csix::lrp::explain;
use csix::mlp::{init_random, model_to_json, predict, save_model, Init};
use csix_ffi::*;

fn small_config() -> SynthConfig {
    SynthConfig {
        locations: 3,
        train_per_loc: 6,
        test_per_loc: 2,
        ..SynthConfig::default()
    }
}

fn last_error() -> String {
    let p = csix_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn model_round_trip_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let params = init_random(&[120, 16, 3], 5, Init::Scaled).unwrap();
    let path = dir.path().join("m.json");
    save_model(&params, &path).unwrap();
    let (train, _) = generate_synthetic(&small_config()).unwrap();
    let x = &train.samples()[0].channels;

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_load(cpath.as_ptr(), &mut model), CsixStatus::Ok);
        assert!(csix_last_error().is_null());
        assert_eq!(csix_model_input_dim(model), 120);
        assert_eq!(csix_model_classes(model), 3);

        let mut class = usize::MAX;
        assert_eq!(csix_model_predict(model, x.as_ptr(), x.len(), &mut class), CsixStatus::Ok);
        assert_eq!(class, predict(&params, x).unwrap());

        let mut probs = [0.0; 3];
        assert_eq!(
            csix_model_probabilities(model, x.as_ptr(), x.len(), probs.as_mut_ptr(), 3),
            CsixStatus::Ok
        );
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut h = vec![0.0; 120];
        assert_eq!(
            csix_explain(model, x.as_ptr(), x.len(), 0, 2, h.as_mut_ptr(), h.len()),
            CsixStatus::Ok
        );
        assert_eq!(h, explain(&params, x, 0, 2).unwrap().h_prime);

        let mut scores = vec![0.0; 30];
        assert_eq!(
            csix_subcarrier_scores(h.as_ptr(), 120, 30, 4, scores.as_mut_ptr(), 30),
            CsixStatus::Ok
        );
        let brute = (h[7] + h[37] + h[67] + h[97]) / 4.0;
        assert!((scores[7] - brute).abs() < 1e-12);
        csix_model_free(model);
    }
}

#[test]
fn scaled_model_takes_raw_amplitudes() {
    let (train, _) = generate_synthetic(&small_config()).unwrap();
    let mut params = init_random(&[120, 16, 3], 8, Init::Scaled).unwrap();
    let scaler = MinMax::fit(&train);
    params.input_scaling = Some(scaler.clone());
    let json = CString::new(model_to_json(&params)).unwrap();
    let x = &train.samples()[4].channels;
    let scaled = scaler.apply_row(x).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_from_json(json.as_ptr(), &mut model), CsixStatus::Ok);
        let mut class = usize::MAX;
        assert_eq!(csix_model_predict(model, x.as_ptr(), x.len(), &mut class), CsixStatus::Ok);
        assert_eq!(class, predict(&params, &scaled).unwrap());
        let mut h = vec![0.0; 120];
        assert_eq!(
            csix_explain(model, x.as_ptr(), x.len(), 1, 1, h.as_mut_ptr(), h.len()),
            CsixStatus::Ok
        );
        assert_eq!(h, explain(&params, &scaled, 1, 1).unwrap().h_prime);
        csix_model_free(model);
    }
}

#[test]
fn model_from_json_text() {
    let params = init_random(&[4, 3, 2], 1, Init::Scaled).unwrap();
    let json = CString::new(model_to_json(&params)).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_from_json(json.as_ptr(), &mut model), CsixStatus::Ok);
        assert_eq!(csix_model_input_dim(model), 4);
        csix_model_free(model);
    }
    let bad = CString::new("{\"format\": 1").unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_from_json(bad.as_ptr(), &mut model), CsixStatus::Format);
    }
    assert!(model.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn errors_are_reported() {
    let params = init_random(&[4, 3, 2], 1, Init::Scaled).unwrap();
    let json = CString::new(model_to_json(&params)).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_from_json(json.as_ptr(), &mut model), CsixStatus::Ok);
        let x = [1.0; 5];
        let mut class = 0;
        assert_eq!(csix_model_predict(model, x.as_ptr(), 5, &mut class), CsixStatus::Dimension);
        assert!(last_error().contains('5'));
        assert_eq!(csix_model_predict(model, ptr::null(), 4, &mut class), CsixStatus::NullPointer);
        assert_eq!(csix_model_predict(ptr::null(), x.as_ptr(), 4, &mut class), CsixStatus::NullPointer);

        let mut short = [0.0; 3];
        assert_eq!(
            csix_explain(model, x.as_ptr(), 4, 0, 1, short.as_mut_ptr(), 3),
            CsixStatus::Dimension
        );
        let mut h = [0.0; 4];
        assert_eq!(
            csix_explain(model, x.as_ptr(), 4, 0, 9, h.as_mut_ptr(), 4),
            CsixStatus::InvalidArgument
        );
        assert_eq!(csix_model_classes(ptr::null()), 0);
        csix_model_free(model);
        csix_model_free(ptr::null_mut());
    }

    let missing = CString::new("/nonexistent/model.json").unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_model_load(missing.as_ptr(), &mut model), CsixStatus::Io);
    }
    assert!(last_error().contains("/nonexistent/model.json"));
}

#[test]
fn dataset_access_and_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = generate_synthetic(&small_config()).unwrap();
    let path = dir.path().join("train.csv");
    save_csv(&train, &path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let params = init_random(&[120, 8, 3], 2, Init::Scaled).unwrap();
    let json = CString::new(model_to_json(&params)).unwrap();

    let mut ds = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(csix_dataset_load(cpath.as_ptr(), &mut ds), CsixStatus::Ok);
        assert_eq!(csix_model_from_json(json.as_ptr(), &mut model), CsixStatus::Ok);
        assert_eq!(csix_dataset_len(ds), 18);
        assert_eq!(csix_dataset_channels(ds), 120);

        let mut x = vec![0.0; 120];
        let mut loc = 0;
        assert_eq!(csix_dataset_sample(ds, 17, x.as_mut_ptr(), 120, &mut loc), CsixStatus::Ok);
        assert_eq!(x, train.samples()[17].channels);
        assert_eq!(loc, train.samples()[17].location);
        assert_eq!(
            csix_dataset_sample(ds, 18, x.as_mut_ptr(), 120, &mut loc),
            CsixStatus::InvalidArgument
        );

        let mut acc = -1.0;
        assert_eq!(csix_model_accuracy(model, ds, &mut acc), CsixStatus::Ok);
        let expected = train
            .samples()
            .iter()
            .filter(|s| predict(&params, &s.channels).unwrap() == s.class())
            .count() as f64
            / 18.0;
        assert_eq!(acc, expected);
        csix_model_free(model);
        csix_dataset_free(ds);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/csix.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["csix_model_load", "csix_explain", "csix_dataset_sample", "CSIX_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler, skipping syntax check");
        return;
    };
    assert!(status.success());
}
