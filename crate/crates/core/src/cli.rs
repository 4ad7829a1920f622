//! Command-line driver. Exit codes: 0 certified (or no witness found),
//! 1 usage, parse or domain error, 2 refuted, 3 inconclusive, 4 inconsistent
//! measurements.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::family::{
    build_complex_family, build_hyperplane_family, build_real_family, r3_counterexample_family, r3_parseval_example,
    HyperplaneFamily, RealFamily, Subspace, SubspaceFamily,
};
use crate::frames::{is_full_spark, Frame};
use crate::io::{
    parse_family, parse_measurements, parse_recipe, parse_signal, write_family, write_measurements, write_recipe,
    write_signal, FamilyDoc, RecipeDoc, Report, SignalDoc,
};
use crate::linalg::{max_abs, operator_norm, Vector, DEFAULT_TOL};
use crate::reconstruct::{reconstruct, reconstruct_hyperplanes};
use crate::rng::RngState;
use crate::verify::{
    certify_hyperplanes, certify_structured, empirical_distinguishability, is_witness_pair, lift_null_space,
    lift_operator, measure, orthogonal_pair_search, pencil_witness, random_basis_disproof, rank12_witness_search,
    stability_margin, witness_to_pair, Certificate, MeasurementVector, Refutation,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;

const PAIR_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "subphase", version, about = "Phase retrieval by projections onto subspaces")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build 2M-1 real subspaces with the given dimensions and certify them.
    Construct {
        #[arg(long)]
        ambient: usize,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recipe: Option<PathBuf>,
    },
    /// Build 4M-3 complex subspaces with the given dimensions.
    ConstructComplex {
        #[arg(long)]
        ambient: usize,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build hyperplanes orthogonal to a random full-spark Parseval frame.
    ConstructHyperplanes {
        #[arg(long)]
        ambient: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recipe: Option<PathBuf>,
    },
    /// Certify, search for witnesses, or gather empirical evidence.
    Verify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Certificate)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Restarts for local pair searches, and samples for the margin.
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
    /// Measure a signal: squared projection norms.
    Measure {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "signal-in")]
        signal_in: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a signal up to sign from measurements.
    Reconstruct {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        meas: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Worked examples in R^3 with a verification transcript.
    Demo {
        #[arg(value_enum)]
        target: DemoTarget,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the generated files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Certificate,
    Witness,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DemoTarget {
    R3Example,
    R3Counterexample,
    ParsevalHyperplanes,
}

/// Parses `args` (including the program name), runs, prints, and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok((code, transcript)) => {
            print!("{}", transcript);
            code
        }
        Err(e) => {
            eprintln!("error: {}", e);
            match e {
                Error::Inconsistent { .. } => EXIT_INCONSISTENT,
                Error::Ambiguous(_) => EXIT_INCONCLUSIVE,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Domain(format!("cannot read {}: {}", path.display(), e)))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Domain(format!("cannot write {}: {}", path.display(), e)))
}

type Outcome = Result<(i32, String)>;

fn execute(command: Command) -> Outcome {
    match command {
        Command::Construct { ambient, dims, seed, out, recipe } => construct(ambient, &dims, seed, &out, recipe.as_deref()),
        Command::ConstructComplex { ambient, dims, seed, out } => {
            let fam = build_complex_family(ambient, &dims, &mut RngState::new(seed))?;
            write(&out, &write_family(&fam))?;
            Ok((EXIT_OK, format!("built {} complex subspaces of C^{}\n", fam.len(), ambient)))
        }
        Command::ConstructHyperplanes { ambient, count, seed, out, recipe } => {
            let hf = build_hyperplane_family(ambient, count, &mut RngState::new(seed))?;
            write(&out, &write_family(&hf.family))?;
            if let Some(p) = recipe {
                write(&p, &write_recipe(&RecipeDoc::Hyperplane(hf.clone())))?;
            }
            let cert = certify_hyperplanes(&hf);
            let code = if cert.is_certified() { EXIT_OK } else { EXIT_INCONCLUSIVE };
            Ok((code, format!("built {} hyperplanes of R^{}\ncertificate {}\n", count, ambient, cert.kind())))
        }
        Command::Verify { family, recipe, mode, seed, report, restarts } => {
            let doc = parse_family(&read(&family)?)?;
            let recipe = match recipe {
                Some(p) => Some(parse_recipe(&read(&p)?)?),
                None => None,
            };
            let (code, rep) = verify_family(&doc, recipe.as_ref(), mode, seed, restarts)?;
            if let Some(p) = report {
                write(&p, &rep.serialize())?;
            }
            let mut text = String::new();
            for (k, v) in rep.entries() {
                let _ = writeln!(text, "{} {}", k, v);
            }
            Ok((code, text))
        }
        Command::Measure { family, signal_in, out } => {
            let doc = parse_family(&read(&family)?)?;
            let signal = parse_signal(&read(&signal_in)?)?;
            let values = match (&doc, signal) {
                (FamilyDoc::Real(f), SignalDoc::Real(x)) => f.measure(&x)?,
                (FamilyDoc::Complex(f), SignalDoc::Complex(x)) => f.measure(&x)?,
                (FamilyDoc::Complex(f), SignalDoc::Real(x)) => f.measure(&x.map(|v| v.into()))?,
                (FamilyDoc::Real(_), SignalDoc::Complex(_)) => {
                    return Err(Error::Domain("complex signal for a real family".into()))
                }
            };
            write(&out, &write_measurements(&values))?;
            Ok((EXIT_OK, format!("measured {} values\n", values.len())))
        }
        Command::Reconstruct { recipe, meas, out } => {
            let doc = parse_recipe(&read(&recipe)?)?;
            let meas = MeasurementVector::new(parse_measurements(&read(&meas)?)?, 0.0)?;
            let result = match &doc {
                RecipeDoc::Structured(r) => reconstruct(r, &meas)?,
                RecipeDoc::Hyperplane(h) => reconstruct_hyperplanes(h, &meas)?,
            };
            write(&out, &write_signal(&result.signal))?;
            Ok((EXIT_OK, format!("reconstructed; relative residual {:.3e}\n", result.residual)))
        }
        Command::Demo { target, seed, out_dir } => {
            if let Some(d) = &out_dir {
                std::fs::create_dir_all(d).map_err(|e| Error::Domain(format!("cannot create {}: {}", d.display(), e)))?;
            }
            let dir = out_dir.as_deref();
            match target {
                DemoTarget::R3Example => demo_minimality(seed, dir),
                DemoTarget::R3Counterexample => demo_counterexample(seed, dir),
                DemoTarget::ParsevalHyperplanes => demo_hyperplanes(seed, dir),
            }
        }
    }
}

fn construct(m: usize, dims: &[usize], seed: u64, out: &Path, recipe_path: Option<&Path>) -> Outcome {
    let (fam, recipe) = build_real_family(m, dims, &mut RngState::new(seed))?;
    write(out, &write_family(&fam))?;
    if let Some(p) = recipe_path {
        write(p, &write_recipe(&RecipeDoc::Structured(recipe.clone())))?;
    }
    let cert = certify_structured(&recipe);
    let mut text = format!("built {} subspaces of R^{}\ncertificate {}\n", fam.len(), m, cert.kind());
    match &cert {
        Certificate::Structured { det_a, det_b, .. } => {
            let _ = writeln!(text, "det_a {}\ndet_b {}", det_a, det_b);
        }
        Certificate::Uncertified { reason } => {
            let _ = writeln!(text, "reason {}", reason);
        }
        _ => {}
    }
    Ok((if cert.is_certified() { EXIT_OK } else { EXIT_INCONCLUSIVE }, text))
}

/// Largest operator-norm distance between corresponding projections.
fn projection_gap(a: &RealFamily, b: &RealFamily) -> f64 {
    if a.ambient() != b.ambient() || a.len() != b.len() {
        return f64::INFINITY;
    }
    a.subspaces()
        .iter()
        .zip(b.subspaces())
        .map(|(x, y)| operator_norm(&(x.projection() - y.projection())))
        .fold(0.0, f64::max)
}

fn record_refutation(report: &mut Report, family: &RealFamily, refutation: &Refutation) {
    match refutation {
        Refutation::Pair { x, y } => {
            report.push("witness", "pair");
            report.push_vector("witness_x", x);
            report.push_vector("witness_y", y);
            let (mx, my) = (family.measure(x).unwrap_or_default(), family.measure(y).unwrap_or_default());
            let gap = mx.iter().zip(&my).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            report.push_real("measurement_mismatch", gap);
        }
        Refutation::Annihilated { x } => {
            report.push("witness", "annihilated");
            report.push_vector("witness_x", x);
        }
        Refutation::Matrix(w) => {
            report.push("witness", "matrix");
            report.push("witness_rank", w.rank);
            report.push_real("witness_residual", w.residual);
        }
    }
}

/// Witness from the lifted null space, if any.
fn lifted_refutation(family: &RealFamily, report: &mut Report) -> Option<Refutation> {
    let w = rank12_witness_search(family)?;
    report.push("witness_strategy", w.strategy.name());
    report.push_real("witness_residual", w.residual);
    match witness_to_pair(&w) {
        Ok((x, y)) => Some(Refutation::Pair { x, y }),
        Err(Error::RankOneWitness { annihilated }) => Some(Refutation::Annihilated { x: Vector::from_vec(annihilated) }),
        Err(_) => Some(Refutation::Matrix(w)),
    }
}

fn verify_family(
    doc: &FamilyDoc,
    recipe: Option<&RecipeDoc>,
    mode: Mode,
    seed: u64,
    restarts: usize,
) -> Result<(i32, Report)> {
    let mut report = Report::new();
    let mut rng = RngState::new(seed);
    report.push("mode", format!("{:?}", mode).to_lowercase());
    let family = match doc {
        FamilyDoc::Real(f) => f,
        FamilyDoc::Complex(f) => {
            report.push("field", "complex");
            let d = empirical_distinguishability(f, &mut rng, 1000);
            report.push("kind", "empirical");
            report.push_real("min_sup_difference", d);
            report.push("note", "complex families are checked empirically only");
            let code = if mode == Mode::Certificate { EXIT_INCONCLUSIVE } else { EXIT_OK };
            return Ok((code, report));
        }
    };
    report.push("field", "real");
    report.push("ambient", family.ambient());
    report.push("count", family.len());

    let refuted = |report: &mut Report, r: Refutation| {
        report.push("kind", "refuted");
        record_refutation(report, family, &r);
        (EXIT_REFUTED, std::mem::take(report))
    };

    match mode {
        Mode::Certificate => {
            if let Some(doc) = recipe {
                let gap = projection_gap(family, &doc.family()?);
                if gap > 1e-10 {
                    return Err(Error::Domain(format!("recipe does not describe this family (gap {:.2e})", gap)));
                }
                let cert = match doc {
                    RecipeDoc::Structured(r) => certify_structured(r),
                    RecipeDoc::Hyperplane(h) => certify_hyperplanes(h),
                };
                if let Certificate::Structured { det_a, det_b, .. } = &cert {
                    report.push("det_a", det_a);
                    report.push("det_b", det_b);
                }
                if cert.is_certified() {
                    report.push("kind", cert.kind());
                    return Ok((EXIT_OK, report));
                }
                if let Certificate::Uncertified { reason } = &cert {
                    report.push("recipe_reason", reason);
                }
            }
            let op = lift_operator(family)?;
            let null = lift_null_space(&op);
            report.push("lift_nullity", null.len());
            if null.is_empty() {
                report.push("kind", Certificate::LiftInjective.kind());
                return Ok((EXIT_OK, report));
            }
            if let Some(r) = lifted_refutation(family, &mut report) {
                return Ok(refuted(&mut report, r));
            }
            report.push("kind", "uncertified");
            report.push("reason", "no certificate and no rank <= 2 null element found");
            Ok((EXIT_INCONCLUSIVE, report))
        }
        Mode::Witness => {
            if let Some(r) = lifted_refutation(family, &mut report) {
                return Ok(refuted(&mut report, r));
            }
            if let Some((x, y)) = orthogonal_pair_search(family, &mut rng, restarts) {
                report.push("witness_strategy", "pair-search");
                return Ok(refuted(&mut report, Refutation::Pair { x, y }));
            }
            if family.dims().iter().sum::<usize>() <= crate::frames::COMPLEMENT_CAP {
                if let Some((x, y)) = random_basis_disproof(family, &mut rng, 100)? {
                    report.push("witness_strategy", "random-basis");
                    return Ok(refuted(&mut report, Refutation::Pair { x, y }));
                }
            }
            report.push("kind", "empirical");
            report.push("note", "no witness found; this is not a proof of injectivity");
            Ok((EXIT_OK, report))
        }
        Mode::Empirical => {
            if let Some((x, y)) = orthogonal_pair_search(family, &mut rng, restarts) {
                report.push("witness_strategy", "pair-search");
                return Ok(refuted(&mut report, Refutation::Pair { x, y }));
            }
            let margin = stability_margin(family, &mut rng, restarts);
            report.push("kind", "empirical");
            report.push_real("stability_margin_upper", margin);
            report.push("note", "no witness found; this is not a proof of injectivity");
            Ok((EXIT_OK, report))
        }
    }
}

fn save(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(d) => write(&d.join(name), text),
        None => Ok(()),
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

/// Five subspaces suffice in `R^3` and four never do.
fn demo_minimality(seed: u64, dir: Option<&Path>) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut t = String::new();
    let mut all_ok = true;

    let (fam, recipe) = build_real_family(3, &[2, 1, 1, 1, 1], &mut rng)?;
    let cert = certify_structured(&recipe);
    let none = rank12_witness_search(&fam).is_none();
    let _ = writeln!(t, "five subspaces, dims 2,1,1,1,1: certificate {}; lifted witness search empty: {}", cert.kind(), none);
    all_ok &= cert.is_certified() && none;
    save(dir, "five.sff", &write_family(&fam))?;
    save(dir, "five.srf", &write_recipe(&RecipeDoc::Structured(recipe)))?;

    for drop in 0..fam.len() {
        let keep: Vec<usize> = (0..fam.len()).filter(|&k| k != drop).collect();
        let four = fam.select(&keep)?;
        let found = four_subspace_witness(&four);
        let _ = writeln!(t, "drop subspace {}: pencil witness {}", drop + 1, status(found.is_some()));
        all_ok &= found.is_some();
    }

    let trials = 20;
    let mut found = 0;
    for _ in 0..trials {
        let subs = (0..4)
            .map(|k| {
                let d = if k < 2 { k + 1 } else { 1 + usize::from(rng.uniform() < 0.5) };
                let vs: Vec<Vector> = (0..d).map(|_| rng.gaussian_vector(3)).collect();
                Subspace::span(3, &vs)
            })
            .collect::<Result<Vec<_>>>()?;
        if four_subspace_witness(&SubspaceFamily::new(3, subs)?).is_some() {
            found += 1;
        }
    }
    let _ = writeln!(t, "random four-subspace families refuted: {}/{}", found, trials);
    all_ok &= found == trials;
    let _ = writeln!(t, "result {}", status(all_ok));
    Ok((if all_ok { EXIT_OK } else { EXIT_INCONCLUSIVE }, t))
}

/// Pencil root on two null-space elements, turned into a checked pair.
fn four_subspace_witness(family: &RealFamily) -> Option<(Vector, Vector)> {
    let op = lift_operator(family).ok()?;
    let null = lift_null_space(&op);
    if null.len() < 2 {
        return None;
    }
    let w = pencil_witness(&op, &null[0], &null[1])?;
    let (x, y) = match witness_to_pair(&w) {
        Ok(p) => p,
        Err(Error::RankOneWitness { annihilated }) => {
            // Every subspace annihilates x, so x and x / 2 measure alike.
            let x = Vector::from_vec(annihilated);
            (x.clone(), x * 0.5)
        }
        Err(_) => return None,
    };
    is_witness_pair(family, &x, &y, PAIR_TOL).ok()?.then_some((x, y))
}

fn demo_counterexample(seed: u64, dir: Option<&Path>) -> Outcome {
    let ex = r3_counterexample_family(&mut RngState::new(seed))?;
    let mut t = String::new();
    let cert = certify_structured(&ex.recipe);
    let _ = writeln!(t, "W_1..W_5 certificate: {}", cert.kind());
    let q: Vec<_> = ex.complements.subspaces().iter().map(|s| s.projection()).collect();
    let sum_gap = max_abs(&(&q[0] + &q[1] - &q[2]));
    let _ = writeln!(t, "max |Q1 + Q2 - Q3| = {:.3e}", sum_gap);

    let mut report = Report::new();
    let mut refuted_ok = false;
    if let Some(r) = lifted_refutation(&ex.complements, &mut report) {
        report.push("kind", "refuted");
        record_refutation(&mut report, &ex.complements, &r);
        if let Refutation::Pair { x, y } = &r {
            refuted_ok = is_witness_pair(&ex.complements, x, y, PAIR_TOL)?;
            let _ = writeln!(t, "complements refuted by x = {}", fmt_vec(x));
            let _ = writeln!(t, "                       y = {}", fmt_vec(y));
        }
    }
    let _ = writeln!(t, "complements refutation verified: {}", refuted_ok);
    save(dir, "w.sff", &write_family(&ex.family))?;
    save(dir, "w.srf", &write_recipe(&RecipeDoc::Structured(ex.recipe.clone())))?;
    save(dir, "w_perp.sff", &write_family(&ex.complements))?;
    save(dir, "w_perp.srp", &report.serialize())?;
    let ok = cert.is_certified() && sum_gap <= 1e-12 && refuted_ok;
    let _ = writeln!(t, "result {}", status(ok));
    Ok((if ok { EXIT_OK } else { EXIT_INCONCLUSIVE }, t))
}

fn demo_hyperplanes(seed: u64, dir: Option<&Path>) -> Outcome {
    let frame = r3_parseval_example();
    let mut t = String::new();
    let s = crate::linalg::frame_operator(frame.vectors(), 3);
    let parseval = max_abs(&(s - nalgebra::DMatrix::<f64>::identity(3, 3)));
    let spark = is_full_spark(&frame, DEFAULT_TOL)?;
    let min_cos = min_abs_cosine(&frame);
    let _ = writeln!(t, "frame: max |S - I| = {:.3e}, full spark {}, min |cos| = {:.4}", parseval, spark, min_cos);
    let hf = HyperplaneFamily::from_parseval_frame(&frame)?;
    let total: f64 = hf.weights.iter().sum();
    let cert = certify_hyperplanes(&hf);
    let _ = writeln!(t, "weights sum {:.6}; hyperplane certificate {}", total, cert.kind());

    let mut rng = RngState::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = rng.gaussian_vector(3);
        let r = reconstruct_hyperplanes(&hf, &measure(&hf.family, &x)?)?;
        worst = worst.max((&r.signal - &x).norm().min((&r.signal + &x).norm()) / x.norm());
    }
    let _ = writeln!(t, "round trip of 100 signals: worst relative error {:.3e}", worst);
    save(dir, "hyperplanes.sff", &write_family(&hf.family))?;
    save(dir, "hyperplanes.srf", &write_recipe(&RecipeDoc::Hyperplane(hf)))?;
    let ok = parseval <= 1e-12 && spark && min_cos > 0.0 && cert.is_certified() && worst <= 1e-8;
    let _ = writeln!(t, "result {}", status(ok));
    Ok((if ok { EXIT_OK } else { EXIT_INCONCLUSIVE }, t))
}

fn min_abs_cosine(frame: &Frame) -> f64 {
    let v = frame.vectors();
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.min(v[i].dot(&v[j]).abs() / (v[i].norm() * v[j].norm()));
        }
    }
    best
}

fn fmt_vec(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{:+.6}", v)).collect();
    format!("({})", parts.join(", "))
}
