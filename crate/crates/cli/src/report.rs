use serde::Serialize;

/// One pricing run, serialized as a single flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub method: String,
    pub payoff: String,
    #[serde(rename = "S0")]
    pub s0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub q: f64,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "R")]
    pub r: Option<u64>,
    pub seed: Option<u64>,
    pub reps: u64,
    pub value: f64,
    pub variance: f64,
    pub std_error: f64,
    pub wall_seconds: f64,
    /// Variance of the estimates across repetitions; only when `reps > 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_variance: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |x: Option<u64>| x.map_or_else(String::new, |v| v.to_string());
        let mut out = vec![
            ("method", self.method.clone()),
            ("payoff", self.payoff.clone()),
            ("S0", self.s0.to_string()),
            ("K", self.k.to_string()),
            ("q", self.q.to_string()),
            ("sigma", self.sigma.to_string()),
            ("T", self.t.to_string()),
            ("N", self.n.to_string()),
            ("M", self.m.to_string()),
            ("R", opt(self.r)),
            ("seed", opt(self.seed)),
            ("reps", self.reps.to_string()),
            ("value", self.value.to_string()),
            ("variance", self.variance.to_string()),
            ("std_error", self.std_error.to_string()),
            ("wall_seconds", self.wall_seconds.to_string()),
        ];
        if let Some(v) = self.empirical_variance {
            out.push(("empirical_variance", v.to_string()));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let fields = self.fields();
        let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        let row: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    pub fn to_plain(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k:<20} {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            method: "mc".into(),
            payoff: "asian-put".into(),
            s0: 20.0,
            k: 100.0,
            q: 0.06,
            sigma: 3.0,
            t: 1.0,
            n: 32,
            m: 1,
            r: Some(65536),
            seed: Some(7),
            reps: 1,
            value: 82.12345678901234,
            variance: 0.0057,
            std_error: 0.0057f64.sqrt(),
            wall_seconds: 0.01,
            empirical_variance: None,
        }
    }

    #[test]
    fn json_round_trip_is_lossless_and_idempotent() {
        let report = sample();
        let text = report.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&parsed).unwrap(), text);
        assert_eq!(parsed["value"].as_f64().unwrap(), report.value);
        assert_eq!(parsed["S0"].as_f64().unwrap(), 20.0);
        assert!(parsed.get("empirical_variance").is_none());
        assert_eq!(parsed.as_object().unwrap().len(), 16);
    }

    #[test]
    fn csv_has_matching_columns() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[0].starts_with("method,payoff,S0,K,q,sigma,T,N,M,R,seed,reps,value"));
    }
}
