use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nervelab::complexes::{nerve, SimplicialComplex};
use nervelab::covers::{Cover, GratingSpec};
use nervelab::error::{Error, Result};
use nervelab::geometry::{CellularScene, Point};
use nervelab::homology::{homology, homology_all, reduced_homology};
use nervelab::rational::parse_q;
use nervelab::scenarios::bouquet::bouquet_report;
use nervelab::scenarios::sinusoid::sinusoid_report;
use nervelab::scenarios::theorem1::builtin_scene;
use nervelab::scenarios::{theorem1_cover, verify_report, ScenarioReport, Theorem1Config};
use nervelab::towers::Tower;

#[derive(Parser)]
#[command(name = "nervelab", version, about = "Covers, nerves and homology of fine coverings of planar sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Off,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Realized kernel of one element and its symbolic region
    Kernel {
        cover: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Shrink the cover until every element meeting A has a kernel point in A
    Canonize {
        cover: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace an element by m concentric pieces around a kernel point
    Grate {
        cover: PathBuf,
        #[arg(long)]
        id: String,
        /// Center as `x,y` with rational coordinates
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enlarge the listed elements by a common kernel ball
    Extend {
        cover: PathBuf,
        /// Comma separated element ids
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample diameters of the elements
    Mesh { cover: PathBuf },
    /// Nerve of a cover as JSON, OFF or DOT
    Nerve {
        cover: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Integer homology of a complex
    Homology {
        complex: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        reduced: bool,
    },
    /// Bonding-map injectivity or eventual image of an H_1 tower
    Tower {
        tower: PathBuf,
        #[arg(long)]
        eventual_image: bool,
        #[arg(long, default_value_t = 0)]
        stage: usize,
    },
    /// Fine cover of a cellular scene with nerve isomorphic to a disk's
    Thm1 {
        /// Scene JSON file, or one of the built-in names point, segment, sinusoid
        #[arg(long)]
        scene: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long = "K", default_value_t = 17)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in scene (point, segment, sinusoid) as JSON
    Scene { name: String },
    /// Truncated towers of the bouquet and sinusoid examples
    Example {
        #[command(subcommand)]
        which: Example,
    },
    /// Re-check every verdict of a report; exit 2 when verification fails
    Verify { report: PathBuf },
    /// Nerve of one stage of a report as OFF or DOT
    Export {
        report: PathBuf,
        #[arg(long)]
        stage: String,
        #[arg(long, value_enum, default_value = "off")]
        format: Format,
    },
}

#[derive(Subcommand)]
enum Example {
    Bouquet {
        #[arg(long = "N", default_value_t = 12)]
        n: usize,
        /// `all` or the last stage to build
        #[arg(long, default_value = "all")]
        stages: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Sinusoid {
        #[arg(long, default_value = "1/20")]
        xmin: String,
        #[arg(long, default_value_t = 8)]
        stages: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit<T: Serialize>(v: &T, out: Option<&Path>) -> Result<()> {
    emit_text(&(serde_json::to_string_pretty(v)? + "\n"), out)
}

fn parse_point(s: &str) -> Result<Point> {
    let coords = s.split(',').map(|c| parse_q(c.trim())).collect::<Result<Vec<_>>>()?;
    if coords.len() != 2 {
        return Err(Error::Parse(format!("expected x,y but got {s:?}")));
    }
    Ok(Point::new(coords))
}

fn export(k: &SimplicialComplex, f: Format) -> Result<String> {
    Ok(match f {
        Format::Json => serde_json::to_string_pretty(k)? + "\n",
        Format::Off => k.to_off(),
        Format::Dot => k.to_dot(),
    })
}

fn report_out(r: &ScenarioReport, out: Option<&Path>) -> Result<ExitCode> {
    emit_text(&r.to_json()?, out)?;
    if out.is_some() {
        for (k, v) in &r.verdicts {
            eprintln!("{k}: {}", if *v { "pass" } else { "FAIL" });
        }
    }
    Ok(if r.all_verified() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Kernel { cover, id } => {
            let c: Cover = read(&cover)?;
            let (set, region) = c.kernel(&id)?;
            emit(&json!({ "id": id, "kernel": set, "region": region }), None)?;
        }
        Cmd::Canonize { cover, out } => {
            let c: Cover = read(&cover)?;
            emit(&c.canonize()?, out.as_deref())?;
        }
        Cmd::Grate { cover, id, center, epsilon, m, out } => {
            let c: Cover = read(&cover)?;
            let g = GratingSpec { element_id: id, center: parse_point(&center)?, epsilon: parse_q(&epsilon)?, m };
            emit(&c.grate(&g)?, out.as_deref())?;
        }
        Cmd::Extend { cover, ids, out } => {
            let c: Cover = read(&cover)?;
            emit(&c.extend(&ids)?, out.as_deref())?;
        }
        Cmd::Mesh { cover } => {
            let c: Cover = read(&cover)?;
            emit(&c.mesh(), None)?;
        }
        Cmd::Nerve { cover, format } => {
            let c: Cover = read(&cover)?;
            print!("{}", export(&nerve(&c, None), format)?);
        }
        Cmd::Homology { complex, dim, reduced } => {
            let k: SimplicialComplex = read(&complex)?;
            let group = |d: usize| if reduced { reduced_homology(&k, d) } else { homology(&k, d) };
            let entry = |d: usize| -> Result<serde_json::Value> {
                let mut v = serde_json::to_value(group(d))?;
                v["dim"] = json!(d);
                Ok(v)
            };
            match dim {
                Some(d) => emit(&entry(d)?, None)?,
                None => {
                    let all = (0..homology_all(&k).len()).map(entry).collect::<Result<Vec<_>>>()?;
                    emit(&all, None)?
                }
            }
        }
        Cmd::Tower { tower, eventual_image, stage } => {
            let t: Tower = read(&tower)?;
            if eventual_image {
                emit(&t.eventual_image(stage)?, None)?;
            } else {
                emit(&json!({ "groups": t.groups(), "injective": t.injective_maps() }), None)?;
            }
        }
        Cmd::Thm1 { scene, epsilon, k, out } => {
            let scene: CellularScene = match builtin_scene(&scene) {
                Ok(s) => s,
                Err(_) => read(Path::new(&scene))?,
            };
            let cfg = Theorem1Config::new(scene, parse_q(&epsilon)?, k)?;
            let (_, _, report) = theorem1_cover(&cfg)?;
            return report_out(&report, out.as_deref());
        }
        Cmd::Scene { name } => emit(&builtin_scene(&name)?, None)?,
        Cmd::Example { which } => {
            let (report, out) = match which {
                Example::Bouquet { n, stages, out } => {
                    let last = if stages == "all" {
                        n
                    } else {
                        stages.parse().map_err(|_| Error::Parse(format!("bad stage count {stages:?}")))?
                    };
                    (bouquet_report(n, last)?, out)
                }
                Example::Sinusoid { xmin, stages, out } => (sinusoid_report(&parse_q(&xmin)?, stages)?, out),
            };
            return report_out(&report, out.as_deref());
        }
        Cmd::Verify { report } => {
            let r: ScenarioReport = read(&report)?;
            let v = verify_report(&r)?;
            for f in &v.failures {
                eprintln!("{f}");
            }
            println!("{}", if v.ok() { "verified" } else { "verification failed" });
            return Ok(if v.ok() { ExitCode::SUCCESS } else { ExitCode::from(2) });
        }
        Cmd::Export { report, stage, format } => {
            let r: ScenarioReport = read(&report)?;
            print!("{}", export(&r.stage(&stage)?.nerve, format)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
