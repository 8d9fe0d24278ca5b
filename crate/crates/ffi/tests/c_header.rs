use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "visrecon.h"

int check(void) {
    double a[3] = {50.0, 2.6772, -79.7751};
    double b[3] = {50.0, 0.0, -82.7485};
    double d = 0.0;
    VrColormap *cm = NULL;
    if (vr_ciede2000(a, b, &d) != VR_STATUS_OK) return 1;
    if (vr_colormap_bundled("viridis", &cm) != VR_STATUS_OK) return 2;
    vr_colormap_free(cm);
    return vr_last_error() == NULL ? 0 : 3;
}
"#;

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
