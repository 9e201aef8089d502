//! Reference component sets and published measurement scalars.

#![allow(dead_code)]

use boostdyn::ConverterParams;

pub fn method1() -> ConverterParams {
    ConverterParams {
        v_i: 3.3,
        l: 1e-3,
        r_l: 1.5,
        c: 42e-6,
        r_c: 1.3,
        r_m: 0.9,
        v_d: 0.5,
        r_0: 92.0,
        d: 0.49,
        f_sw: 1e4,
    }
}

pub fn load_method1() -> ConverterParams {
    ConverterParams {
        v_i: 5.0,
        l: 1e-3,
        r_l: 1.4,
        c: 43e-6,
        r_c: 1.0,
        r_m: 0.8,
        v_d: 0.4,
        r_0: 10.0,
        d: 0.5,
        f_sw: 1e4,
    }
}

/// Hardware steady and peak output for the input step, V.
pub const LINE_MEASURED: (f64, f64) = (5.35, 6.74);
/// Hardware steady and peak output for the 10 → 150 ohm load step, V.
pub const LOAD_MEASURED: (f64, f64) = (8.80, 13.43);

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
