use std::fs;
use std::io::{self, Write};
use std::path::Path;

use pathbounds::formats::{band_series, format_float, BandsFile, EstimateFile};
use pathbounds::inference::{full_analysis, region_volume_ratio, Analyzer, AnalysisConfig};
use pathbounds::numkit::RngStream;
use pathbounds::path_model::{PathEstimate, DEFAULT_GRID_POINTS};
use pathbounds::simlab::{
    default_sigma2_grid, run_study, surrogate_fan, toeplitz_correlation, truth_path, CellReport, CovSpec, DgpKind,
    DgpSpec, StudyConfig,
};
use pathbounds::Error;

use crate::args::{BandsArgs, Command, Figure, McArgs, PosiArgs, SimulateArgs, VolumeArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                Error::Parse(_) | Error::InvalidInput(_) => 1,
                Error::NotPositiveDefinite { .. }
                | Error::NotSquare { .. }
                | Error::NotSymmetric { .. }
                | Error::NonFinite { .. }
                | Error::DimensionMismatch { .. } => 2,
                Error::Domain(_) | Error::BracketFailure(_) | Error::DegenerateModel { .. } => 3,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Bands(a) => bands(a),
        Command::Simulate(a) => simulate(a),
        Command::Volume(a) => volume(a),
        Command::Posi(a) => posi(a),
    }
}

fn read_estimate(path: &Path) -> Result<(PathEstimate, Option<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = EstimateFile::parse(&text)?;
    let est = file.to_estimate()?;
    Ok((est, file.labels))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn check_mc(mc: &McArgs) -> Result<()> {
    if !(mc.alpha > 0.0 && mc.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} must lie in (0, 1)", mc.alpha)));
    }
    Ok(())
}

fn bands(a: BandsArgs) -> Result<()> {
    check_mc(&a.mc)?;
    let (est, labels) = read_estimate(&a.input)?;
    let bundle = full_analysis(&est, a.mc.alpha, a.mc.draws, &RngStream::new(a.mc.seed, 0))?;
    let doc = BandsFile::from_bundle(&bundle, a.mc.seed, labels);
    write_output(a.out.as_deref(), &doc.to_json())?;
    if let Some(dir) = &a.plot_data {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for band in [&bundle.pointwise, &bundle.supt, &bundle.cumulative, &bundle.restricted] {
            let path = dir.join(format!("{}.csv", band.kind.name()));
            write_output(Some(&path), &band_series(band))?;
        }
    }
    Ok(())
}

fn posi(a: PosiArgs) -> Result<()> {
    check_mc(&a.mc)?;
    let (est, _) = read_estimate(&a.input)?;
    let config = AnalysisConfig {
        alpha: a.mc.alpha,
        n_draws: a.mc.draws,
        grid_points: DEFAULT_GRID_POINTS,
    };
    let analyzer = Analyzer::new(est.cov(), config, &RngStream::new(a.mc.seed, 0))?;
    let sel = analyzer.select(est.beta_hat())?;
    let rows = [
        ("posi_critical", format!("{:.6}", analyzer.posi_critical().value)),
        ("supt_critical", format!("{:.6}", analyzer.supt_critical().value)),
        ("universe_size", analyzer.universe().len().to_string()),
        ("selected_model", sel.chosen.spec().to_string()),
        ("selected_df", format!("{:.6}", sel.chosen.df())),
        ("selected_bic", format!("{:.6}", sel.criterion_values[sel.chosen_index])),
        ("n_draws", a.mc.draws.to_string()),
        ("seed", a.mc.seed.to_string()),
    ];
    let mut text = String::new();
    for (k, v) in rows {
        text.push_str(&format!("{k:<16}{v}\n"));
    }
    write_output(None, &text)
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse '{f}' as a number")))
        })
        .collect()
}

fn parse_dgps(text: &str, horizon: usize, wiggly_seed: u64) -> Result<Vec<DgpSpec>> {
    let kinds: Vec<DgpKind> = if text.trim().eq_ignore_ascii_case("all") {
        DgpKind::ALL.to_vec()
    } else {
        text.split(',').map(|s| s.trim().parse()).collect::<std::result::Result<_, _>>()?
    };
    Ok(kinds
        .into_iter()
        .map(|k| DgpSpec {
            wiggly_seed,
            ..DgpSpec::new(k).with_horizon(horizon)
        })
        .collect())
}

fn table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

fn cell_key(c: &CellReport) -> Vec<String> {
    vec![
        c.dgp.name().to_string(),
        format_float(c.rho),
        format_float(c.sigma2),
        format_float(c.sigma2.ln()),
    ]
}

fn figure_columns(figure: Option<Figure>) -> Vec<&'static str> {
    match figure {
        Some(Figure::Mse) => vec!["mse_ratio"],
        Some(Figure::Coverage) => vec![
            "cover_pointwise",
            "cover_supt",
            "cover_restricted_truth",
            "cover_restricted_surrogate",
            "cover_cumulative",
        ],
        Some(Figure::Widths) => vec!["width_supt_rel", "width_restricted_rel"],
        Some(Figure::Df) => vec!["mean_df"],
        Some(Figure::Surrogates) => unreachable!("handled separately"),
        None => vec![
            "mse_ratio",
            "cover_pointwise",
            "cover_supt",
            "cover_restricted_truth",
            "cover_restricted_surrogate",
            "cover_cumulative",
            "width_supt_rel",
            "width_restricted_rel",
            "mean_df",
            "supt_critical",
            "posi_critical",
            "n_reps",
            "seed",
        ],
    }
}

fn metric(c: &CellReport, name: &str) -> String {
    let v = match name {
        "mse_ratio" => c.mse_ratio,
        "cover_pointwise" => c.cover_pointwise,
        "cover_supt" => c.cover_supt,
        "cover_restricted_truth" => c.cover_restricted_truth,
        "cover_restricted_surrogate" => c.cover_restricted_surrogate,
        "cover_cumulative" => c.cover_cumulative,
        "width_supt_rel" => c.width_supt_rel,
        "width_restricted_rel" => c.width_restricted_rel,
        "mean_df" => c.mean_df,
        "supt_critical" => c.supt_critical,
        "posi_critical" => c.posi_critical,
        "n_reps" => return c.n_reps.to_string(),
        "seed" => return c.seed.to_string(),
        other => unreachable!("unknown column {other}"),
    };
    format_float(v)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    check_mc(&a.mc)?;
    if a.horizon < 5 {
        return Err(CliError::Usage(format!("--H {} must be at least 5", a.horizon)));
    }
    let dgps = parse_dgps(&a.dgp, a.horizon, a.wiggly_seed)?;
    let rhos = parse_list("rho", &a.rho)?;
    let sigma2_grid = match &a.sigma2_grid {
        Some(s) => parse_list("sigma2-grid", s)?,
        None => default_sigma2_grid(),
    };
    let rng = RngStream::new(a.mc.seed, 0);

    if a.figure == Some(Figure::Surrogates) {
        if a.reps == 0 {
            return Err(CliError::Usage("--reps must be positive".into()));
        }
        let mut rows = Vec::new();
        for dgp in &dgps {
            let truth = truth_path(dgp);
            for &rho in &rhos {
                for &sigma2 in &sigma2_grid {
                    let cov = CovSpec {
                        sigma2,
                        rho,
                        horizon: a.horizon,
                    };
                    let fan = surrogate_fan(dgp, &cov, a.reps, &rng)?;
                    for (r, path) in fan.iter().enumerate() {
                        for h in 0..a.horizon {
                            rows.push(vec![
                                dgp.kind.name().to_string(),
                                format_float(rho),
                                format_float(sigma2),
                                (r + 1).to_string(),
                                (h + 1).to_string(),
                                format_float(truth[h]),
                                format_float(path[h]),
                            ]);
                        }
                    }
                }
            }
        }
        let header = ["dgp", "rho", "sigma2", "rep", "h", "beta", "beta_tilde"];
        return write_output(a.out.as_deref(), &table(&header, rows));
    }

    let config = StudyConfig {
        dgps,
        rhos,
        sigma2_grid,
        horizon: a.horizon,
        alpha: a.mc.alpha,
        n_reps: a.reps,
        n_draws: a.mc.draws,
        grid_points: DEFAULT_GRID_POINTS,
    };
    let report = run_study(&config, &rng)?;
    let cols = figure_columns(a.figure);
    let mut header = vec!["dgp", "rho", "sigma2", "log_sigma2"];
    header.extend(&cols);
    let rows = report.cells.iter().map(|c| {
        let mut r = cell_key(c);
        r.extend(cols.iter().map(|name| metric(c, name)));
        r
    });
    write_output(a.out.as_deref(), &table(&header, rows))
}

fn volume(a: VolumeArgs) -> Result<()> {
    check_mc(&a.mc)?;
    let rng = RngStream::new(a.mc.seed, 0);
    let ratio = |h: usize, rho: f64| -> Result<f64> {
        let cov = toeplitz_correlation(h, rho)?;
        Ok(region_volume_ratio(&cov, a.mc.alpha, a.mc.draws, &rng)?)
    };
    if a.sweep {
        let mut rows = Vec::new();
        for rho in [0.0, 0.95] {
            for h in 1..=24 {
                rows.push(vec![format_float(rho), h.to_string(), format_float(ratio(h, rho)?)]);
            }
        }
        return write_output(a.out.as_deref(), &table(&["rho", "H", "ratio"], rows));
    }
    if a.horizon < 1 {
        return Err(CliError::Usage(format!("--H {} must be at least 1", a.horizon)));
    }
    let r = ratio(a.horizon as usize, a.rho)?;
    write_output(a.out.as_deref(), &format!("{}\n", format_float(r)))
}
