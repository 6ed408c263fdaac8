//! Holds the `acceptance` test target. Run it with
//! `cargo test -p nsi-validation --test acceptance`, optionally followed by
//! `-- <criterion numbers>` to run a subset.
