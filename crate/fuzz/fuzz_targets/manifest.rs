#![no_main]

use libfuzzer_sys::fuzz_target;
use xray_cluster::pipeline::{read_manifest, write_manifest};

fuzz_target!(|data: &[u8]| {
    if let Ok(entries) = read_manifest(data) {
        let again = read_manifest(&write_manifest(&entries)).expect("written manifest parses");
        assert_eq!(again, entries);
    }
});
