#![no_main]

use libfuzzer_sys::fuzz_target;
use xray_cluster::pipeline::{read_features, read_labels, write_features};

fuzz_target!(|data: &[u8]| {
    if let Ok(fm) = read_features(data) {
        let again = read_features(&write_features(&fm)).expect("written features parse");
        assert_eq!(again, fm);
    }
    let _ = read_labels(data);
});
