#![no_main]

use libfuzzer_sys::fuzz_target;
use navstream::catalog::{NavigationWindow, ViewpointGrid};
use navstream::environment::NavigationKind;
use navstream::experiment::ChannelSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let grid = ViewpointGrid::new(10, 0.1).unwrap();
    if let Ok(w) = NavigationWindow::parse(&grid, text) {
        assert!(w.left <= w.right && w.right <= grid.max_index());
        assert_eq!(NavigationWindow::parse(&grid, &w.label(&grid)), Ok(w));
    }
    let _ = text.parse::<NavigationKind>();
    let _ = text.parse::<ChannelSpec>();
});
