use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn header() -> String {
    std::fs::read_to_string(crate_dir().join("include/proxlogit.h")).expect("header was generated")
}

#[test]
fn header_declares_public_api() {
    let h = header();
    for decl in [
        "typedef struct PlrDataset PlrDataset;",
        "typedef struct PlrFitResult PlrFitResult;",
        "PLR_STATUS_OK = 0",
        "PLR_STATUS_PANIC = 9",
        "PLR_PENALTY_KIND_CAPPED_L1 = 3",
        "PLR_VARIANT_FISTA_VANILLA = 4",
        "const char *plr_last_error_message(void);",
        "enum PlrStatus plr_dataset_from_dense(",
        "enum PlrStatus plr_dataset_load_csv(",
        "enum PlrStatus plr_dataset_load_libsvm(",
        "void plr_dataset_free(struct PlrDataset *data);",
        "enum PlrStatus plr_lambda_max(",
        "enum PlrStatus plr_lipschitz_constant(",
        "struct PlrSolverOptions plr_solver_options_default(void);",
        "enum PlrStatus plr_fit(",
        "enum PlrStatus plr_prox_scalar(",
        "size_t plr_fit_result_dim(",
        "void plr_fit_result_free(struct PlrFitResult *result);",
    ] {
        assert!(h.contains(decl), "header lacks {decl:?}");
    }
}

fn find_cc() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok()?;
    Some(cc)
}

/// Directory holding the library artifacts for the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("libproxlogit_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("plr_smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");

    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "smoke program failed: {stdout} {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("converged=1"), "{stdout}");
}
