use num_rational::Ratio;

use crate::error::{arg, Result};
use crate::protocols::{ResourceLedger, LEDGER_CONVENTION};

/// Qubit efficiencies of one ledger as reduced fractions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfficiencyResult {
    /// c / (q + b)
    pub eta: Ratio<u64>,
    /// c / q
    pub eta_q: Ratio<u64>,
    pub c: u64,
    pub q: u64,
    pub b: u64,
    /// Identifier of the accounting convention the ledger follows.
    pub convention: &'static str,
}

/// Computes η = c/(q+b) and η_q = c/q exactly.
pub fn efficiency(ledger: &ResourceLedger) -> Result<EfficiencyResult> {
    let ResourceLedger { c, q, b } = *ledger;
    if q == 0 {
        return arg("efficiency needs at least one transmitted qubit (q = 0)");
    }
    Ok(EfficiencyResult {
        eta: Ratio::new(c, q + b),
        eta_q: Ratio::new(c, q),
        c,
        q,
        b,
        convention: LEDGER_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eff(c: u64, q: u64, b: u64) -> EfficiencyResult {
        efficiency(&ResourceLedger { c, q, b }).unwrap()
    }

    #[test]
    fn worked_values() {
        let n = 4;
        let r = eff(2 * n, 5 * n, 2 * n);
        assert_eq!((r.eta, r.eta_q), (Ratio::new(2, 7), Ratio::new(2, 5)));
        let r = eff(n, 6 * n, 2 * n);
        assert_eq!((r.eta, r.eta_q), (Ratio::new(1, 8), Ratio::new(1, 6)));
        let r = eff(1, 1, 0);
        assert_eq!(
            (r.eta, r.eta_q),
            (Ratio::from_integer(1), Ratio::from_integer(1))
        );
        assert_eq!(r.convention, LEDGER_CONVENTION);
    }

    #[test]
    fn zero_qubits_is_an_error() {
        assert!(efficiency(&ResourceLedger { c: 1, q: 0, b: 1 }).is_err());
    }

    proptest! {
        #[test]
        fn eta_never_exceeds_eta_q(c in 1u64..1000, q in 1u64..1000, b in 0u64..1000) {
            let r = eff(c, q, b);
            prop_assert!(r.eta <= r.eta_q);
            prop_assert_eq!(*r.eta.numer() * (q + b), *r.eta.denom() * c);
        }
    }
}
