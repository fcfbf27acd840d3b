#![no_main]

use libfuzzer_sys::fuzz_target;
use xray_cluster::imaging::{load_pgm, save_pgm};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = load_pgm(data) {
        assert_eq!(img.pixels().len(), img.width() * img.height());
        // Anything accepted must survive a write/read cycle unchanged.
        let again = load_pgm(&save_pgm(&img)).expect("re-encoded image parses");
        assert_eq!(again, img);
    }
});
