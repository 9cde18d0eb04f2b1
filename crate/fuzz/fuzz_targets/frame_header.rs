// SPDX-License-Identifier: Apache-2.0

#![no_main]

mod harness;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| harness::frame_header(data));
