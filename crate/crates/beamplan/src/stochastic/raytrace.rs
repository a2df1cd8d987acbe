//! Ray-trace CSV import and export.
//!
//! Schema: header `location_index,path_rank,aod_deg,aoa_deg,gain_db`, UTF-8,
//! `location_index` 1-based and contiguous, `path_rank` 1-based per location,
//! angles in degrees in `(-90, 90]`. Imported scenarios carry placeholder
//! coordinates (points 1 m apart on a line, BS above the midpoint); the
//! candidate paths are the payload. Rank `r` rows are treated as the same
//! physical path at every location.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stochastic::{GeoPath, Scenario};

const HEADER: [&str; 5] = ["location_index", "path_rank", "aod_deg", "aoa_deg", "gain_db"];

/// Parse a ray-trace CSV file into a [`Scenario`].
pub fn import_raytrace_csv(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    import_raytrace_reader(file)
}

/// Parse ray-trace CSV from any reader. Row numbers in errors count the
/// header as row 1.
pub fn import_raytrace_reader(reader: impl Read) -> Result<Scenario> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv
        .headers()
        .map_err(|e| Error::Schema {
            row: 1,
            message: format!("cannot read header: {e}"),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Schema {
            row: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    // location -> (first row seen, rank -> (row, GeoPath))
    let mut by_loc: BTreeMap<usize, (usize, BTreeMap<usize, GeoPath>)> = BTreeMap::new();

    for record in csv.records() {
        let record = record.map_err(|e| Error::Schema {
            row: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0),
            message: format!("malformed record: {e}"),
        })?;
        let row = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Schema {
                row,
                message: format!("missing column {name}"),
            })
        };
        let parse_usize = |i: usize, name: &str| -> Result<usize> {
            field(i, name)?.parse().map_err(|_| Error::Schema {
                row,
                message: format!("{name} is not a positive integer"),
            })
        };
        let parse_f64 = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = field(i, name)?.parse().map_err(|_| Error::Schema {
                row,
                message: format!("{name} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Schema {
                    row,
                    message: format!("{name} is not finite"),
                });
            }
            Ok(v)
        };

        let loc = parse_usize(0, "location_index")?;
        let rank = parse_usize(1, "path_rank")?;
        let aod_deg = parse_f64(2, "aod_deg")?;
        let aoa_deg = parse_f64(3, "aoa_deg")?;
        let gain_db = parse_f64(4, "gain_db")?;

        if loc == 0 {
            return Err(Error::Schema {
                row,
                message: "location_index must be 1-based".into(),
            });
        }
        if rank == 0 {
            return Err(Error::Schema {
                row,
                message: "path_rank must be 1-based".into(),
            });
        }
        for (name, v) in [("aod_deg", aod_deg), ("aoa_deg", aoa_deg)] {
            if !(v > -90.0 && v <= 90.0) {
                return Err(Error::Schema {
                    row,
                    message: format!("{name} = {v} outside (-90, 90]"),
                });
            }
        }

        let entry = by_loc.entry(loc).or_insert_with(|| (row, BTreeMap::new()));
        let geo = GeoPath {
            aod_rad: aod_deg.to_radians(),
            aoa_rad: aoa_deg.to_radians(),
            mean_amp: 10f64.powf(gain_db / 20.0),
        };
        if entry.1.insert(rank, geo).is_some() {
            return Err(Error::Schema {
                row,
                message: format!("duplicate path_rank {rank} at location {loc}"),
            });
        }
    }

    if by_loc.is_empty() {
        return Err(Error::Schema {
            row: 1,
            message: "file contains no data rows".into(),
        });
    }

    let m = *by_loc.keys().last().unwrap();
    for expect in 1..=m {
        if !by_loc.contains_key(&expect) {
            let next_row = by_loc
                .range(expect..)
                .next()
                .map(|(_, (row, _))| *row)
                .unwrap_or(0);
            return Err(Error::Schema {
                row: next_row,
                message: format!("missing location_index {expect}"),
            });
        }
    }

    let mut candidate_paths = Vec::with_capacity(m);
    for (loc, (first_row, ranks)) in &by_loc {
        let count = ranks.len();
        for expect in 1..=count {
            if !ranks.contains_key(&expect) {
                return Err(Error::Schema {
                    row: *first_row,
                    message: format!("missing path_rank {expect} at location {loc}"),
                });
            }
        }
        candidate_paths.push(ranks.values().copied().collect::<Vec<_>>());
    }

    // Placeholder geometry: imported data has no coordinates.
    let points = (0..m)
        .map(|i| [i as f64 - (m - 1) as f64 / 2.0, 0.0])
        .collect();
    Ok(Scenario {
        bs_position: [0.0, 10.0],
        trajectory_points: points,
        candidate_paths,
    })
}

/// Serialize a scenario's candidate paths into the ray-trace CSV schema.
/// Rank is the stored candidate order, so import inverts export.
pub fn export_raytrace_csv(scenario: &Scenario) -> String {
    let mut out = String::from("location_index,path_rank,aod_deg,aoa_deg,gain_db\n");
    for (i, paths) in scenario.candidate_paths.iter().enumerate() {
        for (j, p) in paths.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.9},{:.9},{:.9}\n",
                i + 1,
                j + 1,
                p.aod_rad.to_degrees(),
                p.aoa_rad.to_degrees(),
                20.0 * p.mean_amp.log10(),
            ));
        }
    }
    out
}
