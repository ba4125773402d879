//! Named scenarios with the correlation and line-of-sight matrices of the
//! reference examples, plus the published Example-1 result matrices.

use crate::chanmodels::{ChannelModel, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{from_rows, ComplexMatrix, HermitianPsd};

pub const NAMES: [&str; 5] = ["example1", "example2", "example3", "example4", "rician-example"];

/// Default Rician K-factor for `rician-example` when none is given.
pub const DEFAULT_RICIAN_K: f64 = 10.0;

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1" => "2 users, 2x2 Kronecker channels, moderate transmit correlation",
        "example2" => "2 users, 2x2 Kronecker channels, strong transmit correlation",
        "example3" => "2 users, 4x4 Kronecker channels, moderate transmit correlation",
        "example4" => "2 users, 4x4 Kronecker channels, strong transmit correlation",
        "rician-example" => "2 users, 2x2 Rician channels with Example-1 correlations (parameter k)",
        _ => return None,
    })
}

fn herm(rows: &[&[(f64, f64)]]) -> HermitianPsd {
    HermitianPsd::symmetrized(from_rows(rows)).expect("fixture matrices are PSD")
}

fn one() -> (f64, f64) {
    (1.0, 0.0)
}

fn rx_2x2() -> [HermitianPsd; 2] {
    [
        herm(&[&[one(), (-0.1, -0.05)], &[(-0.1, 0.05), one()]]),
        herm(&[&[one(), (-0.05, -0.1)], &[(-0.05, 0.1), one()]]),
    ]
}

fn tx_example1() -> [HermitianPsd; 2] {
    [
        herm(&[&[one(), (0.85, 0.13)], &[(0.85, -0.13), one()]]),
        herm(&[&[one(), (-0.8, -0.11)], &[(-0.8, 0.11), one()]]),
    ]
}

fn tx_example2() -> [HermitianPsd; 2] {
    [
        herm(&[&[one(), (0.95, 0.12)], &[(0.95, -0.12), one()]]),
        herm(&[&[one(), (-0.9, 0.09)], &[(-0.9, -0.09), one()]]),
    ]
}

fn rx_4x4() -> [HermitianPsd; 2] {
    [
        herm(&[
            &[one(), (-0.12, -0.18), (0.08, 0.05), (-0.02, -0.13)],
            &[(-0.12, 0.18), one(), (-0.17, -0.16), (0.11, 0.04)],
            &[(0.08, -0.05), (-0.17, 0.16), one(), (-0.17, -0.16)],
            &[(-0.02, 0.13), (0.11, -0.04), (-0.17, 0.16), one()],
        ]),
        herm(&[
            &[one(), (-0.11, 0.15), (0.07, 0.04), (-0.01, -0.10)],
            &[(-0.11, -0.15), one(), (0.10, 0.10), (0.05, -0.02)],
            &[(0.07, -0.04), (0.10, -0.10), one(), (-0.10, -0.20)],
            &[(-0.01, 0.10), (0.05, 0.02), (-0.10, 0.20), one()],
        ]),
    ]
}

/// Hermitian circulant with first row `[1, a, b, conj(a)]`.
fn circulant(a: (f64, f64), b: f64) -> HermitianPsd {
    let ac = (a.0, -a.1);
    let b = (b, 0.0);
    herm(&[&[one(), a, b, ac], &[ac, one(), a, b], &[b, ac, one(), a], &[a, b, ac, one()]])
}

fn tx_example3() -> [HermitianPsd; 2] {
    [circulant((0.61, 0.34), 0.28), circulant((-0.24, -0.71), -0.48)]
}

fn tx_example4() -> [HermitianPsd; 2] {
    [circulant((0.94, 0.01), 0.93), circulant((0.0, -0.92), -0.92)]
}

pub fn rician_los() -> [ComplexMatrix; 2] {
    [
        from_rows(&[&[(0.5898, 0.0), (1.1795, 0.0)], &[(0.2949, 0.0), (1.4744, 0.0)]]),
        from_rows(&[&[(0.3849, 0.0), (1.1547, 0.0)], &[(0.3849, 0.0), (1.5396, 0.0)]]),
    ]
}

fn kronecker_pair(rx: [HermitianPsd; 2], tx: [HermitianPsd; 2]) -> Vec<ChannelModel> {
    rx.into_iter().zip(tx).map(|(r, t)| ChannelModel::kronecker(r, t)).collect()
}

/// Scenario with `mu_1 = mu_2 = 1`, `P = N0 = 1`.
pub fn load_fixture(name: &str) -> Result<Scenario> {
    if name == "rician-example" {
        return rician_example(DEFAULT_RICIAN_K);
    }
    let models = match name {
        "example1" => kronecker_pair(rx_2x2(), tx_example1()),
        "example2" => kronecker_pair(rx_2x2(), tx_example2()),
        "example3" => kronecker_pair(rx_4x4(), tx_example3()),
        "example4" => kronecker_pair(rx_4x4(), tx_example4()),
        other => {
            return Err(Error::config(
                "scenario",
                format!("unknown fixture {other:?}; known: {}", NAMES.join(", ")),
            ))
        }
    };
    Scenario::equal_weights(models, 1.0, 1.0)
}

/// Rician channels with the Example-1 correlations and the reference line-of-sight matrices.
pub fn rician_example(k: f64) -> Result<Scenario> {
    let models = rician_los()
        .into_iter()
        .zip(rx_2x2())
        .zip(tx_example1())
        .map(|((los, rx), tx)| ChannelModel::rician(los, k, rx, tx))
        .collect::<Result<Vec<_>>>()?;
    Scenario::equal_weights(models, 1.0, 1.0)
}

/// Published Algorithm-2 precoders for Example 1 at 0 dB.
pub fn example1_alg2_precoders() -> [ComplexMatrix; 2] {
    [
        from_rows(&[&[(-0.2657, 0.3435), (0.2280, -0.0289)], &[(-0.2244, 0.3838), (0.2241, -0.0570)]]),
        from_rows(&[&[(0.3422, -0.2143), (-0.1301, -0.2727)], &[(-0.3067, 0.2613), (0.1699, 0.2488)]]),
    ]
}

/// Published Algorithm-1 precoders for Example 1 at 0 dB.
pub fn example1_alg1_precoders() -> [ComplexMatrix; 2] {
    [
        from_rows(&[&[(-0.2712, 0.3459), (0.2300, -0.0272)], &[(-0.2215, 0.3845), (0.2242, -0.0590)]]),
        from_rows(&[&[(0.3406, -0.2130), (-0.1300, -0.2710)], &[(-0.3051, 0.2603), (0.1687, 0.2480)]]),
    ]
}

/// Published `F_2` for Example 1 at 0 dB (identical for both algorithms).
pub fn example1_f2() -> ComplexMatrix {
    from_rows(&[&[(0.3240, 0.0018), (-0.3206, -0.0463)], &[(-0.3200, 0.0462), (0.3232, -0.0018)]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn example1_transmit_correlation_row() {
        let s = load_fixture("example1").unwrap();
        let ChannelModel::Kronecker { tx_corr, .. } = &s.models[0] else { panic!() };
        assert_eq!(tx_corr.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(tx_corr.matrix()[(0, 1)], c(0.85, 0.13));
        assert_eq!(s.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn example3_receive_correlation_entry() {
        let s = load_fixture("example3").unwrap();
        let ChannelModel::Kronecker { rx_corr, .. } = &s.models[0] else { panic!() };
        assert_eq!(rx_corr.dim(), 4);
        assert_eq!(rx_corr.matrix()[(0, 1)], c(-0.12, -0.18));
    }

    #[test]
    fn rician_los_entry() {
        let s = load_fixture("rician-example").unwrap();
        let ChannelModel::Rician { los, .. } = &s.models[0] else { panic!() };
        assert_eq!(los[(0, 0)], c(0.5898, 0.0));
    }

    #[test]
    fn fixtures_are_normalized() {
        for name in NAMES {
            let s = load_fixture(name).unwrap();
            // line-of-sight matrices are rounded to 4 decimals
            s.check_normalized(1e-3).unwrap();
            assert!(describe(name).is_some());
        }
        assert!(load_fixture("example9").is_err());
    }
}
