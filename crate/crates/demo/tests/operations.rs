use pathbounds_demo::{analyze_json, example_json, volume_curve_json};
use serde_json::Value;

#[test]
fn example_then_analyze() {
    let ex: Value = serde_json::from_str(&example_json("hump", 12, 0.01, 0.5, 4).unwrap()).unwrap();
    assert_eq!(ex["truth"].as_array().unwrap().len(), 12);
    let estimate = ex["estimate"].to_string();
    let out = analyze_json(&estimate, 0.05, 1000, 1).unwrap();
    let doc: Value = serde_json::from_str(&out).unwrap();
    let bands = doc["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 4);
    for b in bands {
        let lo = b["lower"].as_array().unwrap();
        let hi = b["upper"].as_array().unwrap();
        assert!(lo.iter().zip(hi).all(|(l, u)| l.as_f64().unwrap() <= u.as_f64().unwrap()));
    }
    assert_eq!(out, analyze_json(&estimate, 0.05, 1000, 1).unwrap());
}

#[test]
fn errors_are_messages() {
    assert!(example_json("ramp", 12, 0.01, 0.0, 0).unwrap_err().contains("unknown DGP"));
    assert!(analyze_json("{\"beta_hat\":[1],\"cov\":[[-1]]}", 0.05, 1000, 0).is_err());
}

#[test]
fn volume_curve_shape() {
    let pts: Value = serde_json::from_str(&volume_curve_json(0.0, 12, 0.05, 2000, 0).unwrap()).unwrap();
    let pts = pts.as_array().unwrap();
    assert_eq!(pts.len(), 12);
    assert!(pts[0]["log10_ratio"].as_f64().unwrap().abs() < 0.02);
    let last = pts[11]["log10_ratio"].as_f64().unwrap();
    // about 0.095 at 1e5 draws; 2000 draws leave a few percent of noise
    assert!(last < -0.8 && last > -1.2, "{last}");
}
