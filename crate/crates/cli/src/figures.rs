//! Data behind the sample and copula figures: one CSV (plus sidecar) per
//! panel and a `manifest.json` listing them.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use trunca::copulas::Sector;
use trunca::sampling::write_sample_files;
use trunca::{truncate_general, Copula, CopulaModel, Generator, TruncationPoint};

use crate::commands::{draw, print_json};
use crate::{CliError, FigureArgs};

const FIGURES: [&str; 6] = [
    "mo",
    "mo-cdf",
    "survival-gumbel",
    "survival-gumbel-3d",
    "nested-clayton",
    "nested-gumbel",
];

/// Grid resolution of the `mo-cdf` surfaces.
const CDF_GRID: usize = 50;

struct Figure {
    model: CopulaModel,
    points: Vec<Vec<f64>>,
}

fn nested(g0: Generator, g1: Generator) -> Result<CopulaModel, trunca::Error> {
    CopulaModel::nested(g0, vec![Sector::new(g1, 1), Sector::new(g1, 2)])
}

fn figure(name: &str) -> Result<Figure, trunca::Error> {
    let pts = |v: &[&[f64]]| v.iter().map(|p| p.to_vec()).collect();
    let mo_points = pts(&[&[1.0, 1.0], &[0.5, 0.8], &[0.8, 0.5], &[0.3, 0.3]]);
    let nested_points = pts(&[
        &[1.0, 1.0, 1.0],
        &[0.2, 0.5, 0.5],
        &[0.9, 0.9, 0.9],
        &[0.2, 0.1, 0.9],
        &[0.5, 0.5, 0.5],
    ]);
    Ok(match name {
        "mo" | "mo-cdf" => Figure {
            model: CopulaModel::marshall_olkin(0.2, 0.7)?,
            points: mo_points,
        },
        "survival-gumbel" => Figure {
            model: CopulaModel::survival(CopulaModel::archimedean(Generator::gumbel(2.0)?, 2)?)?,
            points: pts(&[&[1.0, 1.0], &[0.5, 0.5], &[0.2, 0.8], &[0.8, 0.2]]),
        },
        "survival-gumbel-3d" => Figure {
            model: CopulaModel::survival(CopulaModel::archimedean(Generator::gumbel(2.0)?, 3)?)?,
            points: pts(&[&[0.05, 0.95, 0.4]]),
        },
        // Kendall's taus 0.5 between and 0.75 within sectors.
        "nested-clayton" => Figure {
            model: nested(Generator::clayton(2.0)?, Generator::clayton(6.0)?)?,
            points: nested_points,
        },
        "nested-gumbel" => Figure {
            model: nested(Generator::gumbel(2.0)?, Generator::gumbel(4.0)?)?,
            points: nested_points,
        },
        other => {
            return Err(trunca::Error::Spec(format!(
                "unknown figure `{other}` (one of {}, all)",
                FIGURES.join(", ")
            )))
        }
    })
}

fn panel_name(figure: &str, t: &[f64]) -> String {
    let t: Vec<String> = t.iter().map(|x| x.to_string()).collect();
    format!("{figure}_t{}.csv", t.join("_"))
}

fn write_cdf_panel(path: &Path, m: &CopulaModel, t: &TruncationPoint) -> Result<(), CliError> {
    let tc = truncate_general(m, t)?;
    let mut text = String::from("u1,u2,value\n");
    for i in 0..=CDF_GRID {
        for j in 0..=CDF_GRID {
            let u = [i as f64 / CDF_GRID as f64, j as f64 / CDF_GRID as f64];
            text += &format!("{:.16e},{:.16e},{:.16e}\n", u[0], u[1], tc.cdf(&u)?);
        }
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

pub fn figure_data(a: &FigureArgs) -> Result<(), CliError> {
    let names: Vec<&str> = if a.figure == "all" {
        FIGURES.to_vec()
    } else {
        vec![a.figure.as_str()]
    };
    let figs = names
        .iter()
        .map(|n| figure(n))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(&a.out)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", a.out.display())))?;
    let mut panels: Vec<Value> = Vec::new();
    for (name, fig) in names.iter().zip(&figs) {
        for (k, t) in fig.points.iter().enumerate() {
            let tp = TruncationPoint::new(&fig.model, t)?;
            let file = panel_name(name, t);
            let path = a.out.join(&file);
            if *name == "mo-cdf" {
                write_cdf_panel(&path, &fig.model, &tp)?;
                panels.push(json!({ "figure": name, "t": t, "file": file, "kind": "cdf-grid" }));
                continue;
            }
            let tc = truncate_general(&fig.model, &tp)?;
            // Panels of one figure use distinct, reproducible seeds.
            let seed = a.seed.wrapping_add(k as u64);
            let s = draw(&fig.model, &tp, &tc, a.n, seed, a.method, false)?;
            write_sample_files(&path, &s)?;
            panels.push(json!({
                "figure": name,
                "t": t,
                "file": file,
                "kind": "sample",
                "seed": seed,
                "method": s.meta.method,
            }));
        }
    }
    let manifest = json!({ "n": a.n, "seed": a.seed, "panels": panels });
    let path = a.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest always serializes");
    fs::write(&path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    print_json(&manifest)
}
