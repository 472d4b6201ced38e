//! Parsers for the textual arguments: complex numbers, triples, windows and
//! image sizes.

use primstab::{Complex64, TraceTriple};

use crate::CliError;

/// Accepts `3`, `-1.5`, `2i`, `3+0.5i`, `1e-3-2i`.
pub fn complex(s: &str) -> Result<Complex64, CliError> {
    let t = s.trim();
    let z: Complex64 = t
        .parse()
        .map_err(|_| CliError::Parse(format!("not a complex number: {s:?}")))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(CliError::Parse(format!("non-finite value: {s:?}")));
    }
    Ok(z)
}

/// A comma-separated list of exactly `n` complex numbers.
pub fn complex_list(s: &str, n: usize) -> Result<Vec<Complex64>, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(CliError::Parse(format!(
            "expected {n} comma-separated values, got {}: {s:?}",
            parts.len()
        )));
    }
    parts.into_iter().map(complex).collect()
}

pub fn triple(s: &str) -> Result<TraceTriple, CliError> {
    let v = complex_list(s, 3)?;
    Ok(TraceTriple::new(v[0], v[1], v[2]))
}

/// `re0,im0,re1,im1`: two opposite corners of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Window {
    pub re0: f64,
    pub im0: f64,
    pub re1: f64,
    pub im1: f64,
}

pub fn window(s: &str) -> Result<Window, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Parse(format!("bad window: {s:?}")))?;
    let [re0, im0, re1, im1] = v[..] else {
        return Err(CliError::Parse(format!("window needs four numbers: {s:?}")));
    };
    Ok(Window { re0, im0, re1, im1 })
}

/// `WxH`.
pub fn size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Parse(format!("bad size, expected WxH: {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w = w.trim().parse().map_err(|_| bad())?;
    let h = h.trim().parse().map_err(|_| bad())?;
    Ok((w, h))
}

/// `a1+b1*t; a2+b2*t; a3+b3*t`, written as `a1,b1;a2,b2;a3,b3`.
pub fn affine_maps(s: &str) -> Result<[(Complex64, Complex64); 3], CliError> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!(
            "custom family needs three ';'-separated maps: {s:?}"
        )));
    }
    let mut out = [(Complex64::default(), Complex64::default()); 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        let v = complex_list(p, 2)?;
        *slot = (v[0], v[1]);
    }
    Ok(out)
}
