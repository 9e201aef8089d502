//! Reference component sets used across unit tests.

use crate::circuit::ConverterParams;

/// Input-step reference set, 10 kHz switching.
pub(crate) fn method1() -> ConverterParams {
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

/// Measured-value variant of the input-step set.
pub(crate) fn method2() -> ConverterParams {
    ConverterParams {
        v_i: 3.3,
        l: 1e-3,
        r_l: 1.4,
        c: 42e-6,
        r_c: 1.0,
        r_m: 0.8,
        v_d: 0.4,
        r_0: 95.0,
        d: 0.5,
        f_sw: 1e4,
    }
}

/// Load-step reference set at the pre-step load of 10 ohm.
pub(crate) fn load_method1() -> ConverterParams {
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
