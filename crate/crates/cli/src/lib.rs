//! Library side of the `gvg` command: benchmark harness, training curves
//! and terminal play.

pub mod bench;
pub mod curves;
pub mod play;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CORPUS: i32 = 2;
pub const EXIT_BENCH_FAILURES: i32 = 3;
