use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use devforge::pv::{EmbeddingModel, Hyperparams};
use devforge::synthetic::{topic_corpus, TopicCorpusSpec};
use devforge_ffi::*;

fn tiny_model(dir: &Path) -> PathBuf {
    let corpus = topic_corpus(&TopicCorpusSpec {
        docs_per_topic: 10,
        ..TopicCorpusSpec::default()
    });
    let hyper = Hyperparams {
        vector_size: 8,
        epochs: 3,
        ..Hyperparams::default()
    };
    let path = dir.join("tiny.model");
    EmbeddingModel::train(&corpus.docs, &hyper).unwrap().save(&path).unwrap();
    path
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = dv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(tiny_model(dir.path()).to_str().unwrap());
    let reference = EmbeddingModel::load(Path::new(path.to_str().unwrap())).unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(dv_model_load(path.as_ptr(), &mut model), DvStatus::Ok);
        assert!(dv_last_error().is_null());
        assert_eq!(dv_model_dim(model), 8);

        let tag = cstr("t1d004");
        let mut v = [0f32; 8];
        assert_eq!(dv_model_doc_vector(model, tag.as_ptr(), v.as_mut_ptr(), 8), DvStatus::Ok);
        assert_eq!(&v[..], reference.doc_vector("t1d004").unwrap());
        let missing = cstr("nobody");
        assert_eq!(dv_model_doc_vector(model, missing.as_ptr(), v.as_mut_ptr(), 8), DvStatus::NotFound);
        assert!(last_error().contains("nobody"));

        let toks = [cstr("topic2w3"), cstr("noise1")];
        let ptrs: Vec<*const c_char> = toks.iter().map(|t| t.as_ptr()).collect();
        let mut a = [0f32; 8];
        let mut b = [0f32; 8];
        assert_eq!(dv_model_infer(model, ptrs.as_ptr(), 2, 4, 17, a.as_mut_ptr(), 8), DvStatus::Ok);
        assert_eq!(dv_model_infer(model, ptrs.as_ptr(), 2, 4, 17, b.as_mut_ptr(), 8), DvStatus::Ok);
        assert_eq!(a, b);
        assert_eq!(
            dv_model_infer(model, ptr::null(), 2, 4, 17, a.as_mut_ptr(), 8),
            DvStatus::NullPointer
        );

        let names = [cstr("topic0w1"), cstr("TOPIC0W2"), cstr("unknown")];
        let np: Vec<*const c_char> = names.iter().map(|t| t.as_ptr()).collect();
        let counts = [2u64, 1, 5];
        let mut api = [0f64; 8];
        assert_eq!(
            dv_embed_apis(model, np.as_ptr(), counts.as_ptr(), 3, DvWeighting::Frequency as u32, api.as_mut_ptr(), 8),
            DvStatus::Ok
        );
        let w1 = reference.word_vector("topic0w1").unwrap();
        let w2 = reference.word_vector("topic0w2").unwrap();
        for i in 0..8 {
            let want = (2.0 * f64::from(w1[i]) + f64::from(w2[i])) / 3.0;
            assert!((api[i] - want).abs() < 1e-12);
        }
        assert_eq!(
            dv_embed_apis(model, np.as_ptr(), counts.as_ptr(), 3, 9, api.as_mut_ptr(), 8),
            DvStatus::InvalidArgument
        );
        dv_model_free(model);
        dv_model_free(ptr::null_mut());
    }
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.model");
    std::fs::write(&junk, b"DV2V\x01\x00garbage").unwrap();
    let junk = cstr(junk.to_str().unwrap());
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(dv_model_load(junk.as_ptr(), &mut model), DvStatus::CorruptModel);
        assert!(model.is_null());
        assert_eq!(dv_model_load(ptr::null(), &mut model), DvStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(dv_model_load(bad.as_ptr().cast(), &mut model), DvStatus::InvalidUtf8);
    }
}

#[test]
fn strings_and_metrics() {
    unsafe {
        let mut list = ptr::null_mut();
        let text = cstr("Fast C++ parser for node.js, with the #rust bindings");
        assert_eq!(dv_tokenize(text.as_ptr(), &mut list), DvStatus::Ok);
        let got: Vec<String> = (0..dv_string_list_len(list))
            .map(|i| CStr::from_ptr(dv_string_list_get(list, i)).to_string_lossy().into_owned())
            .collect();
        assert_eq!(got, devforge::corpus::clean_tokenize("Fast C++ parser for node.js, with the #rust bindings"));
        dv_string_list_free(list);

        let src = cstr("#include <stdio.h>\n");
        let lang = cstr("klingon");
        assert_eq!(dv_extract_imports(src.as_ptr(), lang.as_ptr(), &mut list), DvStatus::UnknownLanguage);
        assert!(list.is_null());
        assert!(last_error().contains("klingon"));

        let t = [1u8, 1, 1, 0, 0, 2];
        let p = [1u8, 1, 0, 0, 1, 2];
        let mut s = DvScores::default();
        assert_eq!(dv_macro_weighted_metrics(t.as_ptr(), p.as_ptr(), 6, &mut s), DvStatus::Ok);
        assert!((s.recall - 4.0 / 6.0).abs() < 1e-15);
        let bad = [7u8; 6];
        assert_eq!(dv_macro_weighted_metrics(bad.as_ptr(), p.as_ptr(), 6, &mut s), DvStatus::InvalidArgument);
    }
}

/// Builds `tests/c/smoke.c` against the generated header and the static
/// library, then runs it on a freshly trained model.
#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in <target>/<profile>/deps; the libraries one level up.
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libdevforge_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("run cc");
    assert!(status.success(), "C build failed");

    let model = tiny_model(dir.path());
    let out = Command::new(&bin).arg(&model).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
