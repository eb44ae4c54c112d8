use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use super::{validate_scenario, AgentTrack, MapModel, Scenario, TrajFrame, Trajectory, VehicleState};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRecord {
    id: String,
    dt: f64,
    t_history: usize,
    t_horizon: usize,
    map: MapModel,
    ego_log: Vec<VehicleState>,
    agents: Vec<AgentTrack>,
}

fn classify(path: &Path, e: serde_json::Error) -> Error {
    match e.classify() {
        Category::Data => Error::Schema { path: path.to_path_buf(), message: e.to_string() },
        Category::Io => Error::Io(e.into()),
        Category::Syntax | Category::Eof => Error::Parse { path: path.to_path_buf(), message: e.to_string() },
    }
}

/// Parse and validate scenario JSON. `origin` only labels errors.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let rec: ScenarioRecord = serde_json::from_str(text).map_err(|e| classify(origin, e))?;
    if !(rec.dt > 0.0 && rec.dt.is_finite()) {
        return Err(Error::Validation(format!("dt must be positive, got {}", rec.dt)));
    }
    // keep short logs so validation can name the length invariant
    let ego_log = Trajectory { dt: rec.dt, frame: TrajFrame::Global, states: rec.ego_log };
    let scenario = Scenario {
        id: rec.id,
        dt: rec.dt,
        t_history: rec.t_history,
        t_horizon: rec.t_horizon,
        map: rec.map,
        ego_log,
        agents: rec.agents,
    };
    let diags = validate_scenario(&scenario);
    if !diags.is_empty() {
        let msg = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Err(Error::Validation(msg));
    }
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_scenario(&text, path)
}

pub fn scenario_to_json(s: &Scenario) -> Result<String> {
    let rec = ScenarioRecord {
        id: s.id.clone(),
        dt: s.dt,
        t_history: s.t_history,
        t_horizon: s.t_horizon,
        map: s.map.clone(),
        ego_log: s.ego_log.states.clone(),
        agents: s.agents.clone(),
    };
    Ok(serde_json::to_string(&rec)?)
}

pub fn write_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scenario_to_json(s)?)?;
    Ok(())
}

pub fn trajectory_to_json(t: &Trajectory) -> Result<String> {
    Ok(serde_json::to_string(t)?)
}

/// Load a single trajectory file (`{dt, frame, states}`).
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let t: Trajectory = serde_json::from_str(&text).map_err(|e| classify(path, e))?;
    Trajectory::new(t.dt, t.states, t.frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn minimal_json(ego_frames: usize) -> String {
        let states: Vec<String> = (0..ego_frames)
            .map(|k| {
                format!(
                    r#"{{"x":{},"y":0.0,"theta":0.0,"v_lon":5.0,"v_lat":0.0,"accel":0.0,"steering":0.0}}"#,
                    0.5 * k as f64
                )
            })
            .collect();
        format!(
            r#"{{"id":"minimal","dt":0.1,"t_history":20,"t_horizon":20,
            "map":{{"lanes":[{{"polyline":[[-20.0,0.0],[80.0,0.0]],"width":3.5,"direction":"forward"}}],
            "drivable_area":[[[-20.0,-2.0],[80.0,-2.0],[80.0,2.0],[-20.0,2.0]]],
            "route":[[-20.0,0.0],[80.0,0.0]],"traffic_lights":[]}},
            "ego_log":[{}],"agents":[]}}"#,
            states.join(",")
        )
    }

    #[test]
    fn minimal_file_loads() {
        let s = parse_scenario(&minimal_json(61), &PathBuf::from("m.json")).unwrap();
        assert_eq!(s.map.lanes.len(), 1);
        assert!(s.agents.is_empty());
        assert_eq!(s.ego_log.states.len(), 61);
        assert_eq!(s.map.lanes[0].speed_limit, super::super::DEFAULT_SPEED_LIMIT);
    }

    #[test]
    fn wrong_log_length_names_invariant() {
        let err = parse_scenario(&minimal_json(60), &PathBuf::from("m.json")).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("ego_log length")), "{err}");
    }

    #[test]
    fn malformed_and_schema_errors_are_distinguished() {
        let err = parse_scenario("{\"id\": ", &PathBuf::from("x.json")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_scenario(r#"{"id":"a","dt":0.1}"#, &PathBuf::from("x.json")).unwrap_err();
        assert!(matches!(err, Error::Schema { ref message, .. } if message.contains("t_history")), "{err}");
        let text = minimal_json(61).replacen("\"id\"", "\"bogus\":1,\"id\"", 1);
        let err = parse_scenario(&text, &PathBuf::from("x.json")).unwrap_err();
        assert!(matches!(err, Error::Schema { ref message, .. } if message.contains("bogus")), "{err}");
    }
}
