use std::ffi::{CStr, CString};
use std::ptr;

use opgan::models::{build_discriminator, build_generator};
use opgan::trainer::{restore, Checkpoint};
use opgan_ffi::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn last_error() -> String {
    unsafe {
        let n = opgan_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; n + 1];
        opgan_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn write_checkpoint(dir: &std::path::Path) -> (CString, Checkpoint) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = build_generator(2, &mut rng).unwrap();
    let d = build_discriminator(2, &mut rng).unwrap();
    let ckpt = Checkpoint::from_models(&g, Some(&d), Some(16000)).unwrap();
    let path = dir.join("model.ckpt");
    ckpt.write(&path).unwrap();
    (CString::new(path.to_str().unwrap()).unwrap(), ckpt)
}

#[test]
fn load_query_restore_free() {
    let dir = tempfile::tempdir().unwrap();
    let (path, ckpt) = write_checkpoint(dir.path());
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(opgan_model_load(path.as_ptr(), &mut model), OpganStatus::Ok);
        assert!(!model.is_null());

        let mut q = 0;
        assert_eq!(opgan_model_order(model, &mut q), OpganStatus::Ok);
        assert_eq!(q, 2);
        let (mut gp, mut dp) = (0usize, 0usize);
        assert_eq!(opgan_model_param_counts(model, &mut gp, &mut dp), OpganStatus::Ok);
        assert_eq!((gp, dp), (ckpt.generator_params(), ckpt.discriminator_params()));
        let mut rate = 0;
        assert_eq!(opgan_model_sample_rate(model, &mut rate), OpganStatus::Ok);
        assert_eq!(rate, 16000);

        let x: Vec<f32> = (0..40000).map(|i| (i as f32 * 0.01).sin() * 0.3).collect();
        let mut y = vec![0.0f32; x.len()];
        assert_eq!(opgan_restore(model, x.as_ptr(), x.len(), y.as_mut_ptr()), OpganStatus::Ok);
        assert_eq!(y, restore(&x, &ckpt.generator().unwrap()).unwrap());

        // In-place restoration.
        let mut z = x.clone();
        assert_eq!(opgan_restore(model, z.as_ptr(), z.len(), z.as_mut_ptr()), OpganStatus::Ok);
        assert_eq!(z, y);

        opgan_model_free(model);
        opgan_model_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        let missing = CString::new(dir.path().join("nope.ckpt").to_str().unwrap()).unwrap();
        assert_eq!(opgan_model_load(missing.as_ptr(), &mut model), OpganStatus::Io);
        assert!(model.is_null());
        assert!(last_error().contains("nope.ckpt"));

        let junk = dir.path().join("junk.ckpt");
        std::fs::write(&junk, b"not a model").unwrap();
        let junk = CString::new(junk.to_str().unwrap()).unwrap();
        assert_eq!(opgan_model_load(junk.as_ptr(), &mut model), OpganStatus::Format);

        assert_eq!(opgan_model_load(ptr::null(), &mut model), OpganStatus::NullPointer);
        let mut q = 0;
        assert_eq!(opgan_model_order(ptr::null(), &mut q), OpganStatus::NullPointer);

        let a = [0.5f32; 8];
        let b = [0.5f32; 7];
        let mut out = 0.0;
        assert_eq!(opgan_sdr(a.as_ptr(), b.as_ptr(), 8, ptr::null_mut()), OpganStatus::NullPointer);
        let silent = [0.0f32; 8];
        assert_eq!(opgan_sdr(silent.as_ptr(), a.as_ptr(), 8, &mut out), OpganStatus::Input);
        assert!(!last_error().is_empty());
        assert_eq!(opgan_sdr(a.as_ptr(), a.as_ptr(), 8, &mut out), OpganStatus::Ok);
        assert_eq!(out, 100.0);
        assert!(last_error().is_empty());
    }
}

#[test]
fn metrics_match_the_library() {
    let x: Vec<f32> = (0..48000).map(|i| (i as f32 * 0.031).sin() * ((i / 4000) % 2) as f32).collect();
    let y: Vec<f32> = x.iter().enumerate().map(|(i, v)| v + 0.1 * ((i * 7919 % 13) as f32 / 13.0 - 0.5)).collect();
    let mut s = 0.0;
    let mut t = 0.0;
    unsafe {
        assert_eq!(opgan_sdr(x.as_ptr(), y.as_ptr(), x.len(), &mut s), OpganStatus::Ok);
        assert_eq!(opgan_stoi(x.as_ptr(), y.as_ptr(), x.len(), 16000, &mut t), OpganStatus::Ok);
    }
    assert_eq!(s, opgan::metrics::sdr(&x, &y).unwrap());
    assert_eq!(t, opgan::metrics::stoi(&x, &y, 16000).unwrap());
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/opgan.h")).unwrap();
    for name in [
        "opgan_model_load",
        "opgan_model_free",
        "opgan_restore",
        "opgan_sdr",
        "opgan_stoi",
        "opgan_last_error_message",
        "OPGAN_STATUS_OK",
        "typedef struct OpganModel OpganModel",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(opgan_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
