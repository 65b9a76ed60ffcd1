#![no_main]

use libfuzzer_sys::fuzz_target;
use navstream::catalog::CatalogFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = text.parse::<CatalogFile>() {
        let again: CatalogFile = file.to_toml().parse().expect("re-serialized catalog parses");
        assert_eq!(again, file);
    }
});
