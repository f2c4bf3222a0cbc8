//! File-level driver behind the `spde` binary: run a study file into an
//! output directory, and replay a manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{code_version, csv_schema, read_config, Manifest, RunRecord};
use crate::error::{Result, SpdeError};
use crate::experiment::{run_study, Estimator, RateTable, StudyOptions, StudySpec};
use crate::noise::{NoisePath, RandomStream};
use crate::plot::emit_plot;

pub const CSV_FILE: &str = "rates.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SVG_FILE: &str = "rates.svg";
pub const NOISE_FILE: &str = "noise_path.bin";

#[derive(Clone, Debug, Default)]
pub struct RunRequest {
    pub config: PathBuf,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub plot: bool,
    pub independent: bool,
    pub force: bool,
    /// Also write the reference noise path of sample 0.
    pub dump_noise: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub spec: StudySpec,
    pub table: RateTable,
    pub manifest: Manifest,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| SpdeError::io(path, e))
}

pub fn execute_run(request: &RunRequest) -> Result<RunOutcome> {
    let mut spec = read_config(&request.config)?;
    if let Some(seed) = request.seed {
        if i64::try_from(seed).is_err() {
            return Err(SpdeError::config("seed", "must fit in a signed 64-bit TOML integer"));
        }
        spec.master_seed = seed;
    }
    let manifest_path = request.out.join(MANIFEST_FILE);
    if manifest_path.exists() && !request.force {
        return Err(SpdeError::Domain(format!(
            "{} already exists; pass --force to overwrite",
            manifest_path.display()
        )));
    }
    fs::create_dir_all(&request.out).map_err(|e| SpdeError::io(&request.out, e))?;

    let estimator = if request.independent {
        Estimator::Independent
    } else {
        Estimator::Coupled
    };
    let workers = request.workers.unwrap_or(0);
    let started = Instant::now();
    let table = run_study(&spec, StudyOptions { workers, estimator })?;
    let wall_time_secs = started.elapsed().as_secs_f64();

    let csv_path = request.out.join(CSV_FILE);
    write(&csv_path, &table.to_csv())?;
    let svg_path = if request.plot {
        let path = request.out.join(SVG_FILE);
        emit_plot(&table, &path)?;
        Some(path)
    } else {
        None
    };
    if request.dump_noise {
        let path = request.out.join(NOISE_FILE);
        let covariance = spec.covariance()?;
        let tau = spec.horizon / spec.reference.steps as f64;
        let noise = NoisePath::sample(
            &covariance,
            spec.reference.steps,
            tau,
            &mut RandomStream::new(spec.master_seed, 0),
        )?;
        let file = File::create(&path).map_err(|e| SpdeError::io(&path, e))?;
        noise
            .write_dump(BufWriter::new(file))
            .map_err(|e| SpdeError::io(&path, e))?;
    }

    let run = RunRecord {
        code_version: code_version().to_string(),
        seed: spec.master_seed,
        estimator,
        workers: if workers == 0 {
            rayon::current_num_threads()
        } else {
            workers
        },
        wall_time_secs,
        csv: CSV_FILE.to_string(),
        csv_schema: csv_schema(),
        svg: svg_path.as_ref().map(|_| SVG_FILE.to_string()),
        total_diverged: table.total_diverged(),
    };
    let manifest = Manifest::new(&spec, run, &table);
    write(&manifest_path, &manifest.to_toml()?)?;

    Ok(RunOutcome {
        spec,
        table,
        manifest,
        csv_path,
        manifest_path,
        svg_path,
    })
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub csv_path: PathBuf,
    pub matches: bool,
    pub recorded: String,
    pub reproduced: String,
}

/// Re-runs the study recorded in `manifest_path` and compares the CSV it
/// produces with the recorded one.
pub fn replay(manifest_path: &Path, workers: Option<usize>) -> Result<ReplayOutcome> {
    let text = fs::read_to_string(manifest_path).map_err(|e| SpdeError::io(manifest_path, e))?;
    let manifest = Manifest::parse(&text)?;
    if manifest.run.csv_schema != csv_schema() {
        return Err(SpdeError::Replay(format!(
            "manifest uses CSV schema {}, this build writes schema {}",
            manifest.run.csv_schema,
            csv_schema()
        )));
    }
    let spec = manifest.spec()?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let csv_path = dir.join(&manifest.run.csv);
    let recorded = fs::read_to_string(&csv_path).map_err(|e| SpdeError::io(&csv_path, e))?;
    let options = StudyOptions {
        workers: workers.unwrap_or(0),
        estimator: manifest.run.estimator,
    };
    let reproduced = run_study(&spec, options)?.to_csv();
    Ok(ReplayOutcome {
        csv_path,
        matches: recorded == reproduced,
        recorded,
        reproduced,
    })
}

/// Human-readable summary printed after a run.
pub fn summary(table: &RateTable) -> String {
    let mut out = table.to_csv();
    let (weak_theory, strong_theory) = table.theoretical_slopes();
    let fmt = |f: Option<crate::experiment::Fit>| match f {
        Some(f) => format!("{:.4} (r² {:.4}, {} points)", f.slope, f.r_squared, f.points),
        None => "unresolved".to_string(),
    };
    out.push_str(&format!(
        "weak slope   {}  theory {weak_theory}\nstrong slope {}  theory {strong_theory}\n",
        fmt(table.fits.weak),
        fmt(table.fits.strong)
    ));
    if table.fits.weak_lambda.is_some() || table.fits.strong_lambda.is_some() {
        out.push_str(&format!(
            "vs 1/λ_N: weak {}, strong {}\n",
            fmt(table.fits.weak_lambda),
            fmt(table.fits.strong_lambda)
        ));
    }
    out.push_str(&format!("diverged runs: {}\n", table.total_diverged()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const STUDY: &str = "axis = \"temporal\"\nladder = [4, 8]\ncovariance = \"white\"\nfixed = 8\nsamples = 6\nseed = 3\n\n[reference]\nsteps = 32\n";

    fn request(dir: &Path) -> RunRequest {
        let config = dir.join("study.toml");
        fs::write(&config, STUDY).unwrap();
        RunRequest {
            config,
            out: dir.join("out"),
            workers: Some(2),
            plot: true,
            dump_noise: true,
            ..Default::default()
        }
    }

    #[test]
    fn run_writes_artifacts_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let req = request(dir.path());
        let outcome = execute_run(&req).unwrap();
        assert!(outcome.csv_path.exists());
        assert!(outcome.svg_path.unwrap().exists());
        let dump = fs::read(req.out.join(NOISE_FILE)).unwrap();
        assert_eq!(dump.len(), 16 + 8 * 32 * 8);
        assert_eq!(u64::from_le_bytes(dump[..8].try_into().unwrap()), 32);
        assert_eq!(u64::from_le_bytes(dump[8..16].try_into().unwrap()), 8);

        let manifest = fs::read_to_string(&outcome.manifest_path).unwrap();
        for key in [
            "seed = 3",
            "code_version",
            "wall_time_secs",
            "csv_schema = 1",
            "[study]",
        ] {
            assert!(manifest.contains(key), "{key} missing from\n{manifest}");
        }

        let replayed = replay(&outcome.manifest_path, Some(1)).unwrap();
        assert!(replayed.matches);

        fs::write(&outcome.csv_path, replayed.recorded.replace(",6,", ",7,")).unwrap();
        assert!(!replay(&outcome.manifest_path, None).unwrap().matches);
    }

    #[test]
    fn existing_manifest_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = request(dir.path());
        req.plot = false;
        req.dump_noise = false;
        execute_run(&req).unwrap();
        let err = execute_run(&req).unwrap_err();
        assert!(err.to_string().contains("--force"));
        req.force = true;
        req.seed = Some(9);
        let outcome = execute_run(&req).unwrap();
        assert_eq!(outcome.manifest.run.seed, 9);
    }
}
