mod common;

use ols_core::features::{extract_features, normalize, Dataset, DatasetRow, FeatureVector, NormalizationStats, TargetVector};
use ols_core::scenarios::RecordStatus;
use ols_core::{FrequencyProxy, PowerFlowSolution};
use proptest::prelude::*;

fn flat(n: usize) -> PowerFlowSolution {
    PowerFlowSolution {
        v: vec![1.0; n],
        theta: vec![0.0; n],
        p_g: vec![0.0],
        q_g: vec![0.0],
        converged: true,
        iterations: 0,
        max_mismatch: 0.0,
        q_limit_violations: vec![],
    }
}

#[test]
fn flat_profile_without_charging_has_no_flow() {
    let case = common::triangle();
    let freq = FrequencyProxy { f: 60.0, delta_p: 0.0, beta: 10.0 };
    let fv = extract_features(3, &case, &flat(3), &freq).unwrap();
    assert_eq!(fv.len(), 8);
    assert_eq!((fv.p_d, fv.q_d, fv.v_post, fv.freq), (0.4, 0.1, 1.0, 60.0));
    assert!(fv.p_flows.iter().chain(&fv.q_flows).all(|f| f.abs() < 1e-15));
    assert_eq!(FeatureVector::from_slice(&fv.to_vec(), 2).unwrap(), fv);
    assert!(extract_features(1, &case, &flat(3), &freq).is_err());
}

#[test]
fn outaged_branch_keeps_its_column() {
    let case = common::triangle();
    let out = case.apply_outage(&[1]).unwrap();
    let mut pf = flat(3);
    pf.theta[2] = -0.05;
    let freq = FrequencyProxy { f: 60.0, delta_p: 0.0, beta: 10.0 };
    let fv = extract_features(3, &out, &pf, &freq).unwrap();
    assert_eq!(fv.p_flows.len(), 2);
    // branch 2-3 is out; the remaining 1-3 line delivers power into bus 3
    let cols = Dataset::for_bus(&out, 3).unwrap().columns();
    let k23 = cols.iter().position(|c| c == "p_flow_2-3").unwrap() - 6;
    assert_eq!(fv.p_flows[k23], 0.0);
    assert!(fv.total_p_flow() < 0.0);
}

fn row(scenario: usize, f: &[f64], p_s: f64, q_s: f64) -> DatasetRow {
    DatasetRow {
        scenario,
        status: RecordStatus::Ok,
        features: f.to_vec(),
        target: TargetVector { p_s, q_s },
    }
}

#[test]
fn failed_rows_survive_csv() {
    let mut ds = Dataset::new(3, vec![(1, 3), (2, 3)]);
    ds.push(row(0, &[0.4, 0.1, 0.98, -0.2, -0.2, -0.05, -0.05, 59.98], 1.5, 0.3)).unwrap();
    ds.push(DatasetRow {
        scenario: 1,
        status: RecordStatus::PfDiverged,
        features: vec![f64::NAN; 8],
        target: TargetVector { p_s: f64::NAN, q_s: f64::NAN },
    })
    .unwrap();
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back.rows[0], ds.rows[0]);
    assert_eq!(back.rows[1].status, RecordStatus::PfDiverged);
    assert!(back.rows[1].features.iter().all(|x| x.is_nan()));
    assert_eq!(back.ok_rows().count(), 1);
    assert!(ds.push(row(2, &[1.0; 3], 0.0, 0.0)).is_err());
}

#[test]
fn csv_with_wrong_header_is_rejected() {
    let text = "bus,scenario,status,p_d\n3,0,ok,0.4\n";
    assert!(Dataset::read_csv(text.as_bytes()).is_err());
}

fn arb_rows() -> impl Strategy<Value = Vec<(Vec<f64>, f64, f64)>> {
    proptest::collection::vec(
        (proptest::collection::vec(-1e3f64..1e3, 6), 0.0f64..50.0, -20.0f64..20.0),
        1..20,
    )
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(rows in arb_rows()) {
        let mut ds = Dataset::new(9, vec![(4, 9)]);
        for (i, (f, p, q)) in rows.iter().enumerate() {
            ds.push(row(i, f, *p, *q)).unwrap();
        }
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        prop_assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn normalized_columns_are_standard(rows in arb_rows()) {
        let mut ds = Dataset::new(9, vec![(4, 9)]);
        for (i, (f, p, q)) in rows.iter().enumerate() {
            ds.push(row(i, f, *p, *q)).unwrap();
        }
        let (z, stats) = normalize(&ds, None).unwrap();
        let n = z.len() as f64;
        for c in 0..6 {
            let col: Vec<f64> = z.rows.iter().map(|r| r.features[c]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9 || var == 0.0);
        }
        for (a, b) in ds.rows.iter().zip(&z.rows) {
            let back = stats.invert(&b.features);
            for (x, y) in a.features.iter().zip(&back) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()) || stats.std.iter().any(|s| *s <= 1e-9));
            }
            prop_assert_eq!(a.target, b.target);
        }
        let again = normalize(&ds, Some(&stats)).unwrap().0;
        prop_assert_eq!(again, z);
    }
}

#[test]
fn constant_column_maps_to_zero() {
    let stats = NormalizationStats::fit([[2.0, 1.0].as_slice(), [2.0, 3.0].as_slice()], 2);
    assert_eq!(stats.apply(&[2.0, 3.0]), vec![0.0, 1.0]);
}
