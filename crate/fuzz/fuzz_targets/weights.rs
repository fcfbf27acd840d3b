#![no_main]

//! Weight file decoder against a small topology, so inputs stay short enough
//! for the fuzzer to reach the payload and checksum paths.

use libfuzzer_sys::fuzz_target;
use xray_cluster::cnn::{load_weights, save_weights, CnnSpec};

fuzz_target!(|data: &[u8]| {
    let spec = CnnSpec {
        input_size: 16,
        conv_filters: vec![1, 1, 1, 1],
        dense_widths: vec![2, 1],
        ..CnnSpec::default()
    };
    if let Ok(ws) = load_weights(data, &spec) {
        assert_eq!(save_weights(&ws), data);
    }
});
