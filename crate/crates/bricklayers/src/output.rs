//! Output writers. Files are written to a temporary sibling and renamed
//! into place, so no output is ever left partially written on error.

use crate::config::ExperimentConfig;
use crate::dynamics::Trajectory;
use crate::equilibrium::Marginal;
use crate::error::Result;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Write `content` atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp-partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum TrajectoryRecord<'a> {
    Header {
        seed: u64,
        window: (i64, i64),
        config: &'a ExperimentConfig,
        replica: u64,
    },
    Event {
        t: f64,
        i: i64,
        dir: &'a str,
    },
    Snapshot {
        t: f64,
        omega: &'a [i64],
        heights: &'a [i64],
    },
    Final {
        t: f64,
        omega: &'a [i64],
        heights: &'a [i64],
    },
}

/// JSON-lines trajectory: header record (resolved config and seed), one
/// record per event, snapshot records on the configured grid.
pub fn trajectory_jsonl(
    traj: &Trajectory,
    config: &ExperimentConfig,
    replica: u64,
) -> Result<String> {
    let mut out = String::new();
    let push = |out: &mut String, rec: &TrajectoryRecord| -> Result<()> {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
        Ok(())
    };
    push(
        &mut out,
        &TrajectoryRecord::Header {
            seed: traj.seed,
            window: (traj.initial.window.lo, traj.initial.window.hi),
            config,
            replica,
        },
    )?;
    let mut snap_iter = traj.snapshots.iter().peekable();
    for ev in &traj.events {
        while let Some(s) = snap_iter.peek() {
            if s.t <= ev.t {
                push(
                    &mut out,
                    &TrajectoryRecord::Snapshot {
                        t: s.t,
                        omega: &s.omega,
                        heights: &s.heights,
                    },
                )?;
                snap_iter.next();
            } else {
                break;
            }
        }
        push(
            &mut out,
            &TrajectoryRecord::Event {
                t: ev.t,
                i: ev.column,
                dir: match ev.dir {
                    crate::clocks::Direction::RightLay => "right",
                    crate::clocks::Direction::LeftLay => "left",
                },
            },
        )?;
    }
    for s in snap_iter {
        push(
            &mut out,
            &TrajectoryRecord::Snapshot {
                t: s.t,
                omega: &s.omega,
                heights: &s.heights,
            },
        )?;
    }
    push(
        &mut out,
        &TrajectoryRecord::Final {
            t: traj.final_state.time,
            omega: &traj.final_state.omega,
            heights: &traj.final_state.heights,
        },
    )?;
    Ok(out)
}

/// Compact CSV, snapshots only: `t,omega_<lo>..omega_<hi>`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let w = traj.initial.window;
    let mut out = String::from("t");
    for s in w.sites() {
        out.push_str(&format!(",omega_{s}"));
    }
    out.push('\n');
    for snap in &traj.snapshots {
        out.push_str(&format!("{}", snap.t));
        for v in &snap.omega {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out.push_str(&format!("{}", traj.final_state.time));
    for v in &traj.final_state.omega {
        out.push_str(&format!(",{v}"));
    }
    out.push('\n');
    out
}

/// Two-column `z pmf` dump of a marginal, for external plotting.
pub fn marginal_dump(m: &Marginal) -> String {
    let mut out = String::from("# z pmf\n");
    for z in m.support() {
        out.push_str(&format!("{z} {:.17e}\n", m.pmf(z)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn atomic_write_leaves_no_partials() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out/result.json");
        write_atomic(&path, b"{\"ok\":true}").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "{\"ok\":true}");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1);
    }
}
