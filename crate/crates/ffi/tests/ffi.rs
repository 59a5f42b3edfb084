use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use lexcourt_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn cpath(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = lc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn write_corpus(dir: &Path) {
    let cases = dir.join("cases");
    std::fs::create_dir(&cases).unwrap();
    let docs = [
        ("q1", "Judicial review of the refugee protection decision under section 96 of the IRPA."),
        ("a", "[1] The refugee claimant sought protection.\n[2] Section 96 of the IRPA governs refugee status."),
        ("b", "[1] A contract dispute about shipping containers.\n[2] Damages were awarded."),
        ("c", "[1] Protection officers reviewed the claimant file.\n[2] Costs were refused."),
    ];
    for (id, text) in docs {
        std::fs::write(cases.join(format!("{id}.txt")), text).unwrap();
    }
    std::fs::write(dir.join("qrels.tsv"), "q1\ta\n").unwrap();
    std::fs::write(dir.join("titles.txt"), "Immigration and Refugee Protection Act\n").unwrap();
}

#[test]
fn load_index_retrieve() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    unsafe {
        let mut coll = ptr::null_mut();
        let st = lc_collection_load(cpath(&dir.path().join("cases")).as_ptr(), cpath(&dir.path().join("qrels.tsv")).as_ptr(), &mut coll);
        assert_eq!(st, LcStatus::Ok);
        assert!(lc_last_error().is_null());
        assert_eq!(lc_collection_case_count(coll), 4);
        assert_eq!(lc_collection_query_count(coll), 1);

        let mut index = ptr::null_mut();
        let titles = cpath(&dir.path().join("titles.txt"));
        assert_eq!(lc_index_build(coll, titles.as_ptr(), LcGranularity::Passage, &mut index), LcStatus::Ok);
        assert_eq!(lc_index_unit_count(index), 7);

        let saved = dir.path().join("idx");
        assert_eq!(lc_index_save(index, cpath(&saved).as_ptr()), LcStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(lc_index_load(cpath(&saved).as_ptr(), &mut loaded), LcStatus::Ok);
        assert_eq!(lc_index_unit_count(loaded), 7);

        let mut ranking = ptr::null_mut();
        let cfg = c("P_b = 2\ns_b = 1\n");
        assert_eq!(lc_retrieve(loaded, coll, cfg.as_ptr(), c("q1").as_ptr(), &mut ranking), LcStatus::Ok);
        assert_eq!(CStr::from_ptr(lc_ranking_query_id(ranking)).to_str().unwrap(), "q1");
        let n = lc_ranking_len(ranking);
        assert!(n >= 1);
        assert_eq!(CStr::from_ptr(lc_ranking_case_id(ranking, 0)).to_str().unwrap(), "a");
        for i in 1..n {
            assert!(lc_ranking_score(ranking, i - 1) >= lc_ranking_score(ranking, i));
            assert_ne!(CStr::from_ptr(lc_ranking_case_id(ranking, i)).to_str().unwrap(), "q1");
        }
        assert!(lc_ranking_case_id(ranking, n).is_null());
        assert!(lc_ranking_score(ranking, n).is_nan());

        lc_ranking_free(ranking);
        lc_index_free(loaded);
        lc_index_free(index);
        lc_collection_free(coll);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut coll = ptr::null_mut();
        let st = lc_collection_load(ptr::null(), ptr::null(), &mut coll);
        assert_eq!(st, LcStatus::NullPointer);
        assert!(last_error().contains("cases_dir"));
        assert!(coll.is_null());

        let missing = cpath(&dir.path().join("nope"));
        assert_eq!(lc_collection_load(missing.as_ptr(), ptr::null(), &mut coll), LcStatus::Io);

        assert_eq!(lc_collection_load(cpath(dir.path()).as_ptr(), ptr::null(), &mut coll), LcStatus::Validation);

        let bad = [0xffu8, 0];
        assert_eq!(lc_index_load(bad.as_ptr().cast(), &mut ptr::null_mut()), LcStatus::InvalidUtf8);

        let junk = dir.path().join("junk.idx");
        std::fs::write(&junk, b"not an index").unwrap();
        let mut index = ptr::null_mut();
        assert_eq!(lc_index_load(cpath(&junk).as_ptr(), &mut index), LcStatus::Format);

        write_corpus(dir.path());
        assert_eq!(
            lc_collection_load(cpath(&dir.path().join("cases")).as_ptr(), ptr::null(), &mut coll),
            LcStatus::Ok
        );
        assert_eq!(lc_index_build(coll, ptr::null(), LcGranularity::Document, &mut index), LcStatus::Ok);
        let mut ranking = ptr::null_mut();
        let st = lc_retrieve(index, coll, c("lambda = 2\n").as_ptr(), c("q1").as_ptr(), &mut ranking);
        assert_eq!(st, LcStatus::Argument);
        let st = lc_retrieve(index, coll, ptr::null(), c("zz").as_ptr(), &mut ranking);
        assert_ne!(st, LcStatus::Ok);
        assert!(ranking.is_null());
        assert_eq!(lc_retrieve(index, coll, ptr::null(), c("q1").as_ptr(), ptr::null_mut()), LcStatus::NullPointer);

        // null handles are tolerated by accessors and free functions
        assert_eq!(lc_index_unit_count(ptr::null()), 0);
        assert_eq!(lc_ranking_len(ptr::null()), 0);
        lc_ranking_free(ptr::null_mut());
        lc_index_free(index);
        lc_collection_free(coll);
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(lc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lexcourt.h");
    let header = std::fs::read_to_string(&header_path).unwrap();
    for name in [
        "lc_last_error",
        "lc_version",
        "lc_collection_load",
        "lc_collection_free",
        "lc_index_build",
        "lc_index_load",
        "lc_index_save",
        "lc_index_free",
        "lc_retrieve",
        "lc_ranking_case_id",
        "lc_ranking_score",
        "lc_ranking_free",
        "typedef struct LcIndex LcIndex;",
        "LC_STATUS_PANIC = 8",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    // handles stay opaque
    assert!(!header.contains("struct LcIndex {"));

    // the header must compile as C when a compiler is around
    let src = header_path.parent().unwrap().join("..").join("tests/header_check.c");
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header_path.parent().unwrap())
        .arg(&src)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
