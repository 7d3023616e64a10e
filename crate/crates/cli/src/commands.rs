use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use loopgas_core::asymptotics::{
    central_charge, fit_loop_growth, gamma_exponent, gamma_prime_prediction, FIT_HEADER,
};
use loopgas_core::enumeration::{exact_count, HARD_MAX_P};
use loopgas_core::fixtures::{parse_mean_loops, MEAN_LOOPS_CSV};
use loopgas_core::io::{read_maps, write_binary, write_text};
use loopgas_core::map::{check_size, face_count, validate};
use loopgas_core::rng::substream;
use loopgas_core::sampler::Sampler;
use loopgas_core::stats::{
    default_samples, fmt_f64, read_estimates_csv, size_sweep, u_series, write_estimates_csv,
    write_useries_csv, Observation,
};
use loopgas_core::strands::{count_loops, format_gauss_code, gauss_code};
use loopgas_core::Error;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use crate::args::*;

/// Bad flag combination detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Version, command line and seed, written into every output file.
pub struct Metadata {
    pub command_line: String,
    pub seed: Option<u64>,
}

impl Metadata {
    fn lines(&self) -> Vec<String> {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        vec![
            format!("loopgas {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command_line),
            format!("seed: {seed}"),
        ]
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command_line,
            "seed": self.seed,
        })
    }

    fn with_seed(&self, seed: Option<u64>) -> Metadata {
        Metadata {
            command_line: self.command_line.clone(),
            seed,
        }
    }
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| UsageError(format!("{command} draws random maps and needs --seed")).into())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, meta: &Metadata, rows: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &json!({ "metadata": meta.json(), "rows": rows }))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn sample(a: &SampleArgs, meta: &Metadata) -> Result<()> {
    let seed = require_seed(a.seed, "sample")?;
    let meta = meta.with_seed(Some(seed));
    if a.count == 0 {
        bail!(UsageError("--count must be at least 1".into()));
    }
    check_size(a.size)?;
    let mut out = sink(a.out.as_deref())?;
    match a.format {
        MapFormat::Text => {
            for line in meta.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        MapFormat::Binary => {
            if let Some(path) = &a.out {
                let mut f = File::create(sidecar(path))?;
                for line in meta.lines() {
                    writeln!(f, "{line}")?;
                }
            }
        }
    }
    let mut gauss = match &a.gauss_out {
        Some(p) => {
            let mut g = sink(Some(p))?;
            for line in meta.lines() {
                writeln!(g, "# {line}")?;
            }
            Some(g)
        }
        None => None,
    };

    let mut sampler = Sampler::new();
    for i in 0..a.count {
        let mut rng = substream(seed, i);
        let map = sampler.sample(a.size, &mut rng)?;
        match a.format {
            MapFormat::Text => write_text(&mut out, map)?,
            MapFormat::Binary => write_binary(&mut out, map)?,
        }
        if let Some(g) = gauss.as_mut() {
            writeln!(g, "# map {i}")?;
            g.write_all(format_gauss_code(&gauss_code(map)).as_bytes())?;
        }
    }
    out.flush()?;
    if let Some(mut g) = gauss {
        g.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateRow {
    ell: Option<u32>,
    p: u64,
    #[serde(rename = "N")]
    n: u64,
    mean: f64,
    stderr: f64,
    variance: f64,
}

pub fn montecarlo(a: &MonteCarloArgs, meta: &Metadata) -> Result<()> {
    let seed = require_seed(a.seed, "montecarlo")?;
    let meta = meta.with_seed(Some(seed));
    if a.samples.is_some_and(|n| n < 2) {
        bail!(UsageError("--samples must be at least 2".into()));
    }
    let estimates = size_sweep(
        a.ells.clone(),
        |ell| {
            a.samples
                .unwrap_or_else(|| default_samples(ell, a.budget, a.cap))
        },
        seed,
    )?;
    match a.format {
        TableFormat::Csv => {
            let mut w = sink(a.out.as_deref())?;
            write_estimates_csv(&mut w, &meta.lines(), &estimates)?;
            w.flush()?;
        }
        TableFormat::Json => {
            let rows: Vec<EstimateRow> = estimates
                .iter()
                .map(|e| EstimateRow {
                    ell: e.ell(),
                    p: e.p,
                    n: e.samples,
                    mean: e.mean,
                    stderr: e.stderr,
                    variance: e.variance,
                })
                .collect();
            write_json(a.out.as_deref(), &meta, &rows)?;
        }
    }
    if let Some(path) = &a.u_out {
        let obs: Vec<Observation> = estimates.iter().map(|e| e.observation()).collect();
        let series = u_series(&obs)?;
        let mut w = sink(Some(path))?;
        match a.format {
            TableFormat::Csv => write_useries_csv(&mut w, &meta.lines(), &series)?,
            TableFormat::Json => {
                serde_json::to_writer_pretty(
                    &mut w,
                    &json!({ "metadata": meta.json(), "rows": series.entries }),
                )?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CountRow {
    p: usize,
    maps: String,
    blossom_trees: String,
    mean_k_num: Option<String>,
    mean_k_den: Option<String>,
    mean_k: Option<f64>,
    /// Number of maps with `k` loops, for `k = 0..=p`.
    loop_distribution: Option<Vec<u64>>,
}

pub fn enumerate(a: &EnumerateArgs, meta: &Metadata) -> Result<()> {
    if *a.sizes.start() == 0 {
        bail!(Error::Size("p = 0 is not a map size".into()));
    }
    if a.max_p > HARD_MAX_P {
        bail!(Error::Capacity(format!(
            "exhaustive generation is limited to p <= {HARD_MAX_P}"
        )));
    }
    let rows: Vec<CountRow> = a
        .sizes
        .clone()
        .map(|p| {
            let c = exact_count(p as usize, a.max_p)?;
            Ok(CountRow {
                p: c.p,
                maps: c.maps.to_string(),
                blossom_trees: c.blossom_trees.to_string(),
                mean_k_num: c.mean_k.as_ref().map(|m| m.numer().to_string()),
                mean_k_den: c.mean_k.as_ref().map(|m| m.denom().to_string()),
                mean_k: c.mean_k.as_ref().and_then(|m| m.to_f64()),
                loop_distribution: c.loop_distribution,
            })
        })
        .collect::<Result<_>>()?;
    match a.format {
        TableFormat::Csv => {
            let mut w = sink(a.out.as_deref())?;
            for line in meta.lines() {
                writeln!(w, "# {line}")?;
            }
            writeln!(
                w,
                "p,maps,blossom_trees,mean_k_num,mean_k_den,mean_k,loop_distribution"
            )?;
            for r in &rows {
                let dist = r.loop_distribution.as_ref().map_or(String::new(), |d| {
                    d.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
                });
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.p,
                    r.maps,
                    r.blossom_trees,
                    r.mean_k_num.as_deref().unwrap_or(""),
                    r.mean_k_den.as_deref().unwrap_or(""),
                    r.mean_k.map(fmt_f64).unwrap_or_default(),
                    dist
                )?;
            }
            w.flush()?;
        }
        TableFormat::Json => write_json(a.out.as_deref(), meta, &rows)?,
    }
    Ok(())
}

/// Reads either a published-style `ell,k,err` table or `montecarlo` output.
fn read_observations(path: Option<&Path>) -> Result<Vec<Observation>> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => MEAN_LOOPS_CSV.to_string(),
    };
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.contains(&"mean") && columns.contains(&"stderr") {
        Ok(read_estimates_csv(text.as_bytes())?
            .iter()
            .map(|e| e.observation())
            .collect())
    } else if columns == ["ell", "k", "err"] {
        Ok(parse_mean_loops(&text)?
            .iter()
            .map(|r| r.observation())
            .collect())
    } else {
        bail!(Error::Parse {
            line: 1,
            msg: format!("unrecognized table header {header:?}"),
        })
    }
}

pub fn fit(a: &FitArgs, meta: &Metadata) -> Result<()> {
    let data = read_observations(a.input.as_deref())?;
    let lmax = match a.lmax {
        Some(l) => l,
        None => data
            .iter()
            .filter_map(Observation::ell)
            .max()
            .ok_or_else(|| Error::Underdetermined("no power-of-two sizes in input".into()))?,
    };
    let mut fits = Vec::new();
    for lmin in a.lmin.clone() {
        match fit_loop_growth(&data, lmin, lmax) {
            Ok(f) => fits.push(f),
            Err(Error::Underdetermined(msg)) => {
                eprintln!("note: lmin={lmin} skipped: {msg}");
            }
            Err(e) => return Err(e).with_context(|| format!("fit with lmin={lmin}")),
        }
    }
    if fits.is_empty() {
        bail!(Error::Underdetermined(format!(
            "no lmin in {}:{} leaves 3 points up to ell={lmax}",
            a.lmin.start(),
            a.lmin.end()
        )));
    }
    match a.format {
        TableFormat::Csv => {
            let mut w = sink(a.out.as_deref())?;
            for line in meta.lines() {
                writeln!(w, "# {line}")?;
            }
            writeln!(w, "# lmax: {lmax}")?;
            writeln!(w, "{FIT_HEADER}")?;
            for f in &fits {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    f.ell_min,
                    fmt_f64(f.sigma_prime),
                    fmt_f64(f.gamma_prime),
                    fmt_f64(f.kappa_prime),
                    fmt_f64(f.chi2)
                )?;
            }
            w.flush()?;
        }
        TableFormat::Json => write_json(a.out.as_deref(), meta, &fits)?,
    }
    Ok(())
}

pub fn predict(a: &PredictArgs, meta: &Metadata) -> Result<()> {
    let gp = gamma_prime_prediction(a.model);
    let at_weight = match a.weight {
        Some(n) => {
            let c = central_charge(a.model, n)?;
            Some((n, c, gamma_exponent(c)?))
        }
        None => None,
    };
    let mut out = io::stdout().lock();
    match a.format {
        ReportFormat::Plain => {
            writeln!(out, "{gp}")?;
            if let Some((n, c, g)) = at_weight {
                writeln!(out, "n={n} c={c} gamma={g}")?;
            }
        }
        ReportFormat::Json => {
            let mut v = json!({
                "metadata": meta.json(),
                "model": a.model.to_string(),
                "gamma_prime": gp,
            });
            if let Some((n, c, g)) = at_weight {
                v["weight"] = json!({ "n": n, "c": c, "gamma": g });
            }
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MapReport {
    index: usize,
    p: usize,
    ok: bool,
    faces: usize,
    loops: Option<usize>,
    violations: Vec<String>,
}

pub fn validate_maps(a: &ValidateArgs, meta: &Metadata) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let maps = read_maps(BufReader::new(file))?;
    let reports: Vec<MapReport> = maps
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let diag = validate(m)?;
            Ok(MapReport {
                index,
                p: m.size(),
                ok: diag.ok,
                faces: face_count(m),
                loops: diag.ok.then(|| count_loops(m)),
                violations: diag
                    .violations
                    .iter()
                    .map(|v| format!("{} at {}", v.rule, v.id))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = io::stdout().lock();
    match a.format {
        ReportFormat::Plain => {
            for r in &reports {
                if r.ok {
                    writeln!(
                        out,
                        "map {}: ok p={} faces={} loops={}",
                        r.index,
                        r.p,
                        r.faces,
                        r.loops.unwrap_or(0)
                    )?;
                } else {
                    writeln!(
                        out,
                        "map {}: invalid p={} ({})",
                        r.index,
                        r.p,
                        r.violations.join(", ")
                    )?;
                }
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(
                &mut out,
                &json!({ "metadata": meta.json(), "rows": reports }),
            )?;
            writeln!(out)?;
        }
    }
    let bad = reports.iter().filter(|r| !r.ok).count();
    if bad > 0 {
        bail!(Error::Structure(format!(
            "{bad} of {} maps invalid",
            reports.len()
        )));
    }
    if reports.is_empty() {
        bail!(Error::Parse {
            line: 1,
            msg: "no maps in input".into(),
        });
    }
    Ok(())
}
