//! Black box checks of the gdrm binary: exit codes and the shape of
//! what it prints, driven through a shell-less process spawn.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gdrm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdrm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning gdrm")
}

fn assert_exit(output: &Output, expected: i32) {
    let code = output.status.code().expect("gdrm was killed by a signal");
    assert_eq!(
        code,
        expected,
        "exit {code}, wanted {expected}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn write_app(root: &Path) {
    fs::create_dir_all(root.join("media")).unwrap();
    fs::write(
        root.join("main.ncl"),
        "<ncl><body><media id=\"m\" src=\"media/clip.txt\"/></body></ncl>",
    )
    .unwrap();
    fs::write(root.join("media/clip.txt"), b"forty-two bytes of perfectly normal text").unwrap();
}

#[test]
fn pack_simulate_unpack_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_app(&dir.path().join("app"));

    let packed = gdrm(
        dir.path(),
        &["pack", "app", "-o", "cap.gdrm", "--entry", "main.ncl#start", "--repetitions", "2"],
    );
    assert_exit(&packed, 0);
    assert!(stdout_of(&packed).contains("packed"), "{}", stdout_of(&packed));

    // a clean channel passes the capture through unchanged
    let simulated = gdrm(
        dir.path(),
        &["simulate", "cap.gdrm", "-o", "clean.gdrm", "--loss", "0", "--seed", "9"],
    );
    assert_exit(&simulated, 0);
    assert_eq!(
        fs::read(dir.path().join("cap.gdrm")).unwrap(),
        fs::read(dir.path().join("clean.gdrm")).unwrap(),
    );

    let unpacked = gdrm(dir.path(), &["unpack", "clean.gdrm", "-o", "out"]);
    assert_exit(&unpacked, 0);
    let text = stdout_of(&unpacked);
    assert!(text.contains("selected entry point: main.ncl#start"), "{text}");
    assert!(text.contains("2 files recovered"), "{text}");
    assert_eq!(
        fs::read(dir.path().join("out/main.ncl")).unwrap(),
        fs::read(dir.path().join("app/main.ncl")).unwrap(),
    );
    assert_eq!(
        fs::read(dir.path().join("out/media/clip.txt")).unwrap(),
        fs::read(dir.path().join("app/media/clip.txt")).unwrap(),
    );
}

#[test]
fn unpack_after_total_loss_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write_app(&dir.path().join("app"));
    assert_exit(
        &gdrm(dir.path(), &["pack", "app", "-o", "cap.gdrm", "--entry", "main.ncl"]),
        0,
    );
    let simulated =
        gdrm(dir.path(), &["simulate", "cap.gdrm", "-o", "gone.gdrm", "--loss", "1"]);
    assert_exit(&simulated, 0);
    assert!(stdout_of(&simulated).contains("kept 0 of"), "{}", stdout_of(&simulated));

    let unpacked = gdrm(dir.path(), &["unpack", "gone.gdrm"]);
    assert_exit(&unpacked, 1);
    let text = stdout_of(&unpacked);
    assert!(text.contains("0 files recovered"), "{text}");
    assert!(text.contains("incomplete: no directory recovered"), "{text}");
}

#[test]
fn unpack_json_report_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    write_app(&dir.path().join("app"));
    assert_exit(
        &gdrm(
            dir.path(),
            &["pack", "app", "-o", "cap.gdrm", "--entry", "main.ncl", "--timebase-every", "4"],
        ),
        0,
    );
    let unpacked = gdrm(dir.path(), &["unpack", "cap.gdrm", "--json"]);
    assert_exit(&unpacked, 0);

    let report: serde_json::Value = serde_json::from_str(&stdout_of(&unpacked)).unwrap();
    assert_eq!(report["complete"], serde_json::json!(true));
    assert_eq!(report["entry_points"]["1"], serde_json::json!("main.ncl"));
    assert_eq!(report["files"].as_array().unwrap().len(), 2);
    assert_eq!(report["files"][0]["name"], serde_json::json!("main.ncl"));
    assert!(report["trace"].as_array().unwrap().iter().any(|e| e["event"] == "time_base"));
}

#[test]
fn inspect_describes_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    write_app(&dir.path().join("app"));
    assert_exit(
        &gdrm(dir.path(), &["pack", "app", "-o", "cap.gdrm", "--entry", "2:main.ncl"]),
        0,
    );
    let inspected = gdrm(dir.path(), &["inspect", "cap.gdrm"]);
    assert_exit(&inspected, 0);
    let text = stdout_of(&inspected);
    assert!(text.contains("MOT directory"), "{text}");
    assert!(text.contains("entry point, profile 2: main.ncl"), "{text}");
}

#[test]
fn adm_messages_compose_and_trace_back() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&gdrm(dir.path(), &["adm", "timebase", "--tbv", "0tbv", "-o", "aux.gdrm"]), 0);
    assert_exit(
        &gdrm(
            dir.path(),
            &["adm", "edit", "--event-id", "9", "--now", "--payload-hex", "0a0b", "--append", "aux.gdrm"],
        ),
        0,
    );
    assert_exit(
        &gdrm(dir.path(), &["adm", "timebase", "--tbv", "1000", "--append", "aux.gdrm"]),
        0,
    );
    assert_exit(
        &gdrm(
            dir.path(),
            &["adm", "sign", "--event-id", "3", "--at", "2000tbv", "--private-hex", "02", "--append", "aux.gdrm"],
        ),
        0,
    );

    // no carousel ever arrives, so recovery reports incomplete, but
    // the auxiliary trace is all there
    let unpacked = gdrm(dir.path(), &["unpack", "aux.gdrm", "--trace"]);
    assert_exit(&unpacked, 1);
    let text = stdout_of(&unpacked);
    for line in [
        "trace: time base 0",
        "trace: tick +1000 -> 1000",
        "trace: command 9 queued, immediate",
        "trace: command 9 tag 0 released at 1000",
        "trace: sign language event 3 at 2000, 1 private bytes",
    ] {
        assert!(text.contains(line), "missing {line:?} in:\n{text}");
    }
}

#[test]
fn validate_ncl_exit_codes_and_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("clean.ncl"),
        "<ncl><body><media id=\"m\" src=\"media/a.mp3\"/></body></ncl>",
    )
    .unwrap();
    fs::create_dir(dir.path().join("docs")).unwrap();
    fs::write(
        dir.path().join("docs/bad.ncl"),
        "<ncl><head><transitionBase>\n<transition id=\"t\"/>\n</transitionBase></head></ncl>",
    )
    .unwrap();

    let clean = gdrm(dir.path(), &["validate-ncl", "clean.ncl"]);
    assert_exit(&clean, 0);
    assert!(stdout_of(&clean).contains("0 errors, 0 warnings"));

    // directories are walked for .ncl documents
    let bad = gdrm(dir.path(), &["validate-ncl", "docs"]);
    assert_exit(&bad, 1);
    let text = stdout_of(&bad);
    assert!(text.contains("bad.ncl:1:12: error [transition-removed]"), "{text}");
    assert!(text.contains("bad.ncl:2:1: error [transition-removed]"), "{text}");
    assert!(text.contains("2 errors, 0 warnings"), "{text}");
}

#[test]
fn broken_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // not a container at all
    fs::write(dir.path().join("junk.gdrm"), b"GDRX not a container").unwrap();
    let unpacked = gdrm(dir.path(), &["unpack", "junk.gdrm"]);
    assert_exit(&unpacked, 2);
    assert!(String::from_utf8_lossy(&unpacked.stderr).starts_with("error:"));

    // a capture cut mid-record
    write_app(&dir.path().join("app"));
    assert_exit(&gdrm(dir.path(), &["pack", "app", "-o", "cap.gdrm", "--entry", "main.ncl"]), 0);
    let bytes = fs::read(dir.path().join("cap.gdrm")).unwrap();
    fs::write(dir.path().join("cut.gdrm"), &bytes[..bytes.len() - 7]).unwrap();
    assert_exit(&gdrm(dir.path(), &["inspect", "cut.gdrm"]), 2);

    // an entry point that names no carried file
    let missing = gdrm(dir.path(), &["pack", "app", "-o", "x.gdrm", "--entry", "other.ncl"]);
    assert_exit(&missing, 2);
    assert!(
        String::from_utf8_lossy(&missing.stderr).contains("names no file"),
        "{}",
        String::from_utf8_lossy(&missing.stderr),
    );
}
