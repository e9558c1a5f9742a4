//! Built-in configurations for the four figure families.

use serde_json::{json, Value};

pub const NAMES: [&str; 4] = ["fig3", "fig4", "fig5", "fig6"];

fn base() -> Value {
    json!({
        "fso": {"alpha": 4.3939, "beta": 2.5636, "xi": 0.9, "detection": "heterodyne", "mean_gain": 1.0},
        "rf": {"nu": 0.0995, "omega": 0.7036, "ideal_pa": true},
        "harq": {"m_max": 3, "rate": 1.0, "n_fso": 100, "psi": 0.03},
        "power": {"snr_db": 20.0, "split": 0.5},
        "mc": {"trials": 100000, "seed": 1, "antithetic": false},
        "methods": ["exact", "linearized", "asymptotic"]
    })
}

fn non_ideal(p_max_db: f64) -> Value {
    json!({"ideal_pa": false, "epsilon": 0.65, "vartheta": 0.5, "p_max_db": p_max_db})
}

/// The named preset as a config document.
pub fn preset(name: &str) -> Option<Value> {
    let mut doc = base();
    let patch = match name {
        // Outage with and without HARQ, ideal PA.
        "fig3" => json!({
            "sweep": {"axis": "snr_db", "start": 0.0, "stop": 35.0, "step": 1.0}
        }),
        // Throughput with ideal and non-ideal PA.
        "fig4" => json!({
            "harq": {"rate": 0.5},
            "sweep": {"axis": "snr_db", "start": 0.0, "stop": 20.0, "step": 1.0},
            "series": [
                {"name": "ideal", "overrides": {}},
                {"name": "non-ideal", "overrides": {"rf": non_ideal(18.0)}}
            ]
        }),
        // Outage for several pointing-error levels.
        "fig5" => {
            let series: Vec<Value> = [0.1, 0.5, 1.0, 2.0, 10.0, 1000.0]
                .iter()
                .map(|xi| json!({"name": format!("xi={xi}"), "overrides": {"fso": {"xi": xi}}}))
                .collect();
            json!({
                "rf": non_ideal(30.0),
                "harq": {"m_max": 2, "rate": 3.0, "psi": 0.25},
                "sweep": {"axis": "snr_db", "start": 0.0, "stop": 40.0, "step": 2.0},
                "series": series
            })
        }
        // Outage against the number of FSO realizations per round.
        "fig6" => json!({
            "fso": {"xi": 1.2},
            "rf": non_ideal(18.0),
            "harq": {"m_max": 1, "rate": 12.0, "psi": 2.0},
            "power": {"snr_db": 18.0},
            "sweep": {"axis": "n_fso", "grid": [1, 2, 5, 10, 25, 50, 100, 250, 500, 1000]},
            "series": [
                {"name": "heterodyne", "overrides": {}},
                {"name": "im_dd", "overrides": {"fso": {"detection": "im_dd"}}}
            ]
        }),
        _ => return None,
    };
    crate::config::merge(&mut doc, &patch);
    doc["name"] = json!(name);
    Some(doc)
}
