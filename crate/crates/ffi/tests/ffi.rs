use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use perisim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { perisim_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

/// Unit path 0 - 1 - 2.
fn path3() -> *mut PerisimTopology {
    let us = [0u32, 1];
    let vs = [1u32, 2];
    let mut t = ptr::null_mut();
    let st = unsafe { perisim_topology_from_edges(3, us.as_ptr(), vs.as_ptr(), ptr::null(), 2, &mut t) };
    assert_eq!(st, PerisimStatus::Ok);
    t
}

#[test]
fn edges_roundtrip_counts() {
    let t = path3();
    let (mut n, mut m) = (0usize, 0usize);
    unsafe {
        assert_eq!(perisim_topology_node_count(t, &mut n), PerisimStatus::Ok);
        assert_eq!(perisim_topology_edge_count(t, &mut m), PerisimStatus::Ok);
        perisim_topology_free(t);
    }
    assert_eq!((n, m), (3, 2));
}

#[test]
fn advantage_strict_and_tie() {
    let t = path3();
    let (s, d, peers) = ([0u32], [2u32], [0u32, 2]);
    let mut strict = -1.0;
    let mut tie = -1.0;
    unsafe {
        let st = perisim_advantage(t, s.as_ptr(), 1, d.as_ptr(), 1, peers.as_ptr(), 2, 0.0, &mut strict);
        assert_eq!(st, PerisimStatus::Ok);
        let st = perisim_advantage(t, s.as_ptr(), 1, d.as_ptr(), 1, peers.as_ptr(), 2, 2.0, &mut tie);
        assert_eq!(st, PerisimStatus::Ok);
        perisim_topology_free(t);
    }
    assert_eq!(strict, 1.0);
    assert_eq!(tie, 0.5);
}

#[test]
fn generated_graph_with_hubs_and_greedy() {
    let mut base = ptr::null_mut();
    let mut hubs = ptr::null_mut();
    unsafe {
        let st = perisim_topology_generate(PerisimGraphModel::BarabasiAlbert as u32, 50, 4.0, 7, &mut base);
        assert_eq!(st, PerisimStatus::Ok, "{}", last_error());
        assert_eq!(perisim_topology_enrich_hubs(base, 2, 10, 1, &mut hubs), PerisimStatus::Ok);
        let mut n = 0;
        perisim_topology_node_count(hubs, &mut n);
        assert_eq!(n, 52);
        let all: Vec<u32> = (0..n as u32).collect();
        let dest = [3u32, 9, 17, 40];
        let mut peers = [u32::MAX; 3];
        let mut value = 0.0;
        let st = perisim_greedy(
            hubs,
            all.as_ptr(),
            all.len(),
            dest.as_ptr(),
            dest.len(),
            3,
            0.0,
            peers.as_mut_ptr(),
            peers.len(),
            &mut value,
        );
        assert_eq!(st, PerisimStatus::Ok, "{}", last_error());
        assert!(peers.iter().all(|&p| (p as usize) < n));
        // The reported value must match a direct evaluation of the peers.
        let mut check = 0.0;
        perisim_advantage(hubs, all.as_ptr(), all.len(), dest.as_ptr(), 4, peers.as_ptr(), 3, 0.0, &mut check);
        assert_eq!(value, check);
        assert!(value > 0.0);

        let mut small = [0u32; 2];
        let st = perisim_greedy(
            hubs,
            all.as_ptr(),
            all.len(),
            dest.as_ptr(),
            4,
            3,
            0.0,
            small.as_mut_ptr(),
            2,
            &mut value,
        );
        assert_eq!(st, PerisimStatus::BufferTooSmall);
        perisim_topology_free(hubs);
        perisim_topology_free(base);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut t = ptr::null_mut();
    let (us, vs) = ([0u32], [5u32]);
    let st = unsafe { perisim_topology_from_edges(3, us.as_ptr(), vs.as_ptr(), ptr::null(), 1, &mut t) };
    assert_eq!(st, PerisimStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(last_error().contains('5'), "{}", last_error());

    let st = unsafe { perisim_topology_generate(99, 10, 3.0, 1, &mut t) };
    assert_eq!(st, PerisimStatus::InvalidArgument);
    assert!(last_error().contains("99"));

    let mut n = 0;
    assert_eq!(unsafe { perisim_topology_node_count(ptr::null(), &mut n) }, PerisimStatus::NullPointer);

    // A success clears the pending message.
    let t = path3();
    assert_eq!(last_error(), "");
    unsafe { perisim_topology_free(t) };
    unsafe { perisim_topology_free(ptr::null_mut()) };
}

#[test]
fn truncated_error_buffer_is_terminated() {
    let mut t = ptr::null_mut();
    unsafe { perisim_topology_generate(42, 10, 3.0, 1, &mut t) };
    let mut buf = [1 as std::ffi::c_char; 4];
    let full = unsafe { perisim_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(full > buf.len());
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { perisim_last_error_message(ptr::null_mut(), 0) }, full);
}

#[test]
fn schedule_matches_library() {
    let mut s = PerisimSchedule::default();
    let st = unsafe { perisim_liveness_schedule(0.1, 1.0, 1.0, 0.2, 5, &mut s) };
    assert_eq!(st, PerisimStatus::Ok);
    let lib = perisim::liveness::derive_schedule(0.1, &perisim::liveness::LiveNetParams::new(1.0, 1.0, 0.2, 5)).unwrap();
    assert_eq!(s.rounds, lib.k);
    assert_eq!(s.delta1, lib.delta1);
    assert_eq!(s.total_time, lib.total_time());
    assert_eq!(unsafe { perisim_liveness_schedule(2.0, 1.0, 1.0, 0.2, 5, &mut s) }, PerisimStatus::InvalidArgument);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(perisim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/perisim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "perisim_last_error_message",
        "perisim_version",
        "perisim_topology_generate",
        "perisim_topology_from_edges",
        "perisim_topology_enrich_hubs",
        "perisim_topology_node_count",
        "perisim_topology_edge_count",
        "perisim_topology_free",
        "perisim_advantage",
        "perisim_greedy",
        "perisim_liveness_schedule",
        "PERISIM_STATUS_BUFFER_TOO_SMALL",
        "PERISIM_GRAPH_MODEL_BARABASI_ALBERT",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax check with the system C compiler when one is present.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
