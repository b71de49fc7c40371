//! Folded-node third derivatives against the published comparison table.

use melnikov_core::oracle::{agrees_to_nine_digits, TABLE1};
use melnikov_core::{d3_dv3, PerturbedSystem, SystemName};

#[test]
fn table1_rows_agree_to_nine_digits() {
    let mut rendered = Vec::new();
    for row in TABLE1 {
        let v = d3_dv3(&PerturbedSystem::build(SystemName::FoldedNode, row.n)).unwrap();
        let s = v.to_decimal(10);
        let x: f64 = s.parse().unwrap();
        assert!(agrees_to_nine_digits(x, row.closed_form.parse().unwrap()), "n={} {} vs {}", row.n, s, row.closed_form);
        rendered.push(s);
    }
    assert_eq!(
        rendered,
        [
            "360.9544715",
            "57039.71896",
            "6329882.422",
            "612865632.0",
            "5.532474568e10",
            "4.792868476e12",
            "4.045202794e14",
            "3.355694920e16",
            "2.751293252e18",
            "2.237731095e20"
        ]
    );
}
