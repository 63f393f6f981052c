//! The `popmat` command line: argument parsing, dispatch and exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use popmat::exhaustive::{brute_popular, enumerate_cis, enumerate_common_bases, EnumerationBudget};
use popmat::io::{
    emit, emit_instance, instance_hash, parse_instance, parse_report, weighted_sets, Certificates,
    ColoredGraphDoc, DualDoc, Instance, InstanceDocument, Rat, ReductionDoc, SolveReport, Status, Transcript,
};
use popmat::nearopt::{
    all_near_opt_popular, cycle_gadget, reduce_exact_matching, solve_near_opt_brute, verify_k_popular, Backend,
    PrefBipartite,
};
use popmat::onesided::{
    brute_popular_one, delta, solve_popular_common_base, solve_popular_max_weight, verify_popular, Objective,
    OneSidedInstance, PopularBaseInstance, ReductionCertificate,
};
use popmat::random::{ground_of, random_laminar_utility, random_one_sided, random_partial_order, random_two_sided};
use popmat::rational::{self, Q};
use popmat::twosided::{
    is_kernel, matroid_kernel, solve_popular_max_weight_two, verify_popular_two, TwoSidedInstance,
};
use popmat::wmi::max_weight_cis;
use popmat::{ElemSet, Error, Ground, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Debug)]
#[command(name = "popmat", version, about = "Popular optimal common independent sets under matroid constraints")]
pub struct Cli {
    /// Largest number of candidate sets any enumeration may produce.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Largest ground set handled by exhaustive enumeration.
    #[arg(long, global = true)]
    pub max_ground: Option<usize>,
    /// Seed for the random generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the machine-readable report here (`-` for standard output).
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Popular optimal solution of a one-sided instance.
    SolveOne { file: PathBuf },
    /// Popular max-weight common independent set of a two-sided instance.
    SolveTwo { file: PathBuf },
    /// Check a proposed solution against every optimal rival.
    Verify {
        file: PathBuf,
        /// Comma-separated element ids.
        #[arg(long, conflicts_with = "from_report", required_unless_present = "from_report")]
        solution: Option<String>,
        /// Take the solution from a report of the same instance.
        #[arg(long)]
        from_report: Option<PathBuf>,
    },
    /// Matroid kernel of a two-sided instance, with its popularity transcript.
    Kernel { file: PathBuf },
    /// Instance generators.
    #[command(subcommand)]
    Gen(Gen),
    /// k-popularity check of a matching, or a search for a k-popular matching.
    VerifyNearOpt {
        file: PathBuf,
        /// Threshold; defaults to the instance's.
        #[arg(long)]
        k: Option<String>,
        /// Comma-separated edge ids.
        #[arg(long)]
        matching: Option<String>,
        #[arg(long, value_enum, default_value_t = BackendArg::Lp)]
        backend: BackendArg,
    },
    /// Ground truth by exhaustive enumeration.
    Oracle {
        #[arg(value_enum)]
        query: Query,
        file: PathBuf,
    },
    /// Print the canonical form of an instance.
    Canonicalize { file: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum Gen {
    /// Near-opt instance deciding exact matching on a colored graph.
    ExactMatching {
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cycle of 2K special edges with l connector pairs each.
    Cycle {
        #[arg(long = "K")]
        big_k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        threshold: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random one-sided instance.
    RandomOne {
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// Use a random concave utility instead of weights.
        #[arg(long)]
        utility: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random two-sided instance.
    RandomTwo {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        max_rank: usize,
        #[arg(long)]
        zero_weights: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Lp,
    Enumerate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Query {
    Cis,
    CommonBases,
    MaxWeight,
    Popular,
}

/// Exit code for an error that ends a command without a verdict.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Budget(_) => 4,
        Error::Infeasible(_) => 3,
        _ => 1,
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<'w, I, T>(args: I, out: &mut (dyn Write + 'w), err: &mut (dyn Write + 'w)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = write!(if code == 0 { &mut *out } else { &mut *err }, "{e}");
            return code;
        }
    };
    let mut ctx = Ctx { cli: &cli, out, err };
    match ctx.dispatch() {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            error_code(&e)
        }
    }
}

struct Ctx<'a, 'w> {
    cli: &'a Cli,
    out: &'a mut (dyn Write + 'w),
    err: &'a mut (dyn Write + 'w),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Schema(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(InstanceDocument, Instance)> {
    let doc = parse_instance(&read(path)?)?;
    let inst = doc.build()?;
    Ok((doc, inst))
}

fn ids_of(g: &Ground, list: &str) -> Result<ElemSet> {
    let ids: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    g.set_of(&ids)
}

fn names(g: &Ground, s: ElemSet) -> Vec<String> {
    g.names(s)
}

impl Ctx<'_, '_> {
    fn budget(&self) -> EnumerationBudget {
        let mut b = EnumerationBudget::default();
        if let Some(n) = self.cli.budget {
            b.max_candidates = n;
        }
        if let Some(n) = self.cli.max_ground {
            b.max_ground = n;
        }
        b
    }

    fn dispatch(&mut self) -> Result<i32> {
        match &self.cli.command {
            Command::SolveOne { file } => self.solve_one(file),
            Command::SolveTwo { file } => self.solve_two(file),
            Command::Verify {
                file,
                solution,
                from_report,
            } => self.verify(file, solution.as_deref(), from_report.as_deref()),
            Command::Kernel { file } => self.kernel(file),
            Command::Gen(g) => self.generate(g),
            Command::VerifyNearOpt {
                file,
                k,
                matching,
                backend,
            } => self.verify_near_opt(file, k.as_deref(), matching.as_deref(), *backend),
            Command::Oracle { query, file } => self.oracle(*query, file),
            Command::Canonicalize { file } => {
                let (doc, _) = load(file)?;
                self.print(&emit_instance(&doc)?)?;
                Ok(0)
            }
        }
    }

    fn print(&mut self, text: &str) -> Result<()> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Error::Schema(format!("cannot write output: {e}")))
    }

    /// Prints a summary, writes the report, returns the status exit code.
    fn finish(&mut self, report: SolveReport) -> Result<i32> {
        let mut summary = format!("status: {}\n", status_name(report.status));
        if let Some(s) = &report.solution {
            summary.push_str(&format!("solution: {{{}}}\n", s.join(", ")));
        }
        if let Some(v) = &report.value {
            summary.push_str(&format!("value: {}\n", rational::render(&v.0)));
        }
        if let Some(m) = &report.message {
            summary.push_str(&format!("note: {m}\n"));
        }
        let text = emit(&report);
        match &self.cli.report {
            Some(p) if p.as_os_str() == "-" => {
                let _ = self.err.write_all(summary.as_bytes());
                self.print(&text)?;
            }
            Some(p) => {
                write_file(p, &text)?;
                self.print(&summary)?;
            }
            None => self.print(&summary)?,
        }
        Ok(report.status.exit_code())
    }

    /// Turns budget and infeasibility errors into reports; others propagate.
    fn settle(&mut self, command: &str, hash: String, outcome: Result<SolveReport>) -> Result<i32> {
        match outcome {
            Ok(r) => self.finish(r),
            Err(e @ (Error::Budget(_) | Error::Infeasible(_))) => {
                let status = if matches!(e, Error::Budget(_)) {
                    Status::Budget
                } else {
                    Status::Infeasible
                };
                let mut r = SolveReport::new(command, status, hash);
                r.message = Some(e.to_string());
                let _ = writeln!(self.err, "{e}");
                self.finish(r)
            }
            Err(e) => Err(e),
        }
    }

    fn solve_one(&mut self, file: &Path) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let hash = instance_hash(&doc)?;
        let budget = self.budget();
        let outcome = match &inst {
            Instance::OneSided(i) => solve_one_report(i, hash.clone(), &budget),
            Instance::PopularBase(i) => popular_base_report(i, hash.clone(), &budget),
            _ => return Err(Error::Schema("solve-one needs a one-sided instance".into())),
        };
        self.settle("solve-one", hash, outcome)
    }

    fn solve_two(&mut self, file: &Path) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let Instance::TwoSided(inst) = inst else {
            return Err(Error::Schema("solve-two needs a two-sided instance".into()));
        };
        let hash = instance_hash(&doc)?;
        let outcome = solve_two_report(&inst, hash.clone(), &self.budget());
        self.settle("solve-two", hash, outcome)
    }

    fn verify(&mut self, file: &Path, solution: Option<&str>, from: Option<&Path>) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let hash = instance_hash(&doc)?;
        let list = match (solution, from) {
            (Some(s), _) => s.to_string(),
            (None, Some(p)) => {
                let r = parse_report(&read(p)?)?;
                if r.instance_hash != hash {
                    return Err(Error::Schema("the report belongs to a different instance".into()));
                }
                r.solution
                    .ok_or_else(|| Error::Schema("the report carries no solution".into()))?
                    .join(",")
            }
            (None, None) => return Err(Error::Schema("give --solution or --from-report".into())),
        };
        let budget = self.budget();
        let outcome = (|| -> Result<SolveReport> {
            let (g, transcript, value) = match &inst {
                Instance::OneSided(i) => {
                    let x = ids_of(&i.ground, &list)?;
                    let v = verify_popular(i, x, &budget)?;
                    let t = Transcript::new(&i.ground, v.optimal, v.popular(), &v.rivals);
                    (&i.ground, (x, t), i.value(x))
                }
                Instance::PopularBase(i) => {
                    let x = ids_of(&i.ground, &list)?;
                    let bases = i.common_bases(&budget)?;
                    let optimal = bases.contains(&x);
                    let rivals: Vec<(ElemSet, i64)> =
                        bases.iter().map(|&b| (b, delta(&i.agents, x, b))).collect();
                    let popular = optimal && rivals.iter().all(|(_, d)| *d >= 0);
                    (&i.ground, (x, Transcript::new(&i.ground, optimal, popular, &rivals)), None)
                }
                Instance::TwoSided(i) => {
                    let x = ids_of(&i.ground, &list)?;
                    let v = verify_popular_two(i, x, &budget)?;
                    let t = Transcript::new(&i.ground, v.optimal, v.popular(), &v.rivals);
                    (&i.ground, (x, t), Some(rational::sum_over(x, &i.weights)))
                }
                Instance::NearOpt { .. } => {
                    return Err(Error::Schema("use verify-near-opt for near-opt instances".into()))
                }
            };
            let (x, t) = transcript;
            let status = if t.popular { Status::Solution } else { Status::NoneExists };
            let mut r = SolveReport::new("verify", status, hash.clone());
            r.solution = Some(names(g, x));
            r.value = value.map(Rat);
            r.message = Some(if !t.optimal {
                "the set is not optimal".into()
            } else if t.popular {
                "popular against every optimal rival".into()
            } else {
                "an optimal rival defeats the set".into()
            });
            r.verification = Some(t);
            Ok(r)
        })();
        self.settle("verify", hash, outcome)
    }

    fn kernel(&mut self, file: &Path) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let Instance::TwoSided(inst) = inst else {
            return Err(Error::Schema("kernel needs a two-sided instance".into()));
        };
        let hash = instance_hash(&doc)?;
        let budget = self.budget();
        let outcome = (|| -> Result<SolveReport> {
            let k = matroid_kernel(&inst.m1, &inst.m2)?;
            if !is_kernel(&inst.m1, &inst.m2, k) {
                return Err(Error::Internal("kernel check failed".into()));
            }
            let mut r = SolveReport::new("kernel", Status::Solution, hash.clone());
            r.solution = Some(names(&inst.ground, k));
            r.certificates.kernel = r.solution.clone();
            r.verification = Some(match enumerate_cis(inst.m1.matroid(), inst.m2.matroid(), &budget) {
                Ok(all) => {
                    let rivals: Vec<(ElemSet, i64)> =
                        all.iter().map(|&j| Ok((j, inst.margin(k, j)?))).collect::<Result<_>>()?;
                    let popular = rivals.iter().all(|(_, m)| *m >= 0);
                    Transcript::new(&inst.ground, true, popular, &rivals)
                }
                Err(Error::Budget(_)) => Transcript::over_budget(true, true),
                Err(e) => return Err(e),
            });
            Ok(r)
        })();
        self.settle("kernel", hash, outcome)
    }

    fn emit_doc(&mut self, doc: &InstanceDocument, out: Option<&Path>) -> Result<i32> {
        let text = emit_instance(doc)?;
        match out {
            Some(p) => write_file(p, &text)?,
            None => self.print(&text)?,
        }
        Ok(0)
    }

    fn generate(&mut self, g: &Gen) -> Result<i32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cli.seed);
        match g {
            Gen::ExactMatching { graph, k, out } => {
                let cg = ColoredGraphDoc::parse(&read(graph)?)?.build()?;
                let red = reduce_exact_matching(&cg, *k)?;
                let _ = writeln!(
                    self.err,
                    "threshold {} on {} vertices and {} edges",
                    rational::render(&red.threshold),
                    red.graph.vertices.len(),
                    red.graph.edges.len()
                );
                self.emit_doc(&InstanceDocument::from_near_opt(&red.graph, &red.threshold), out.as_deref())
            }
            Gen::Cycle {
                big_k,
                l,
                threshold,
                out,
            } => {
                let g = cycle_gadget(*big_k, *l)?;
                let t = threshold.as_deref().map(rational::parse).transpose()?.unwrap_or_else(rational::zero);
                self.emit_doc(&InstanceDocument::from_near_opt(&g, &t), out.as_deref())
            }
            Gen::RandomOne { n, utility, out } => {
                check_size(*n)?;
                let doc = if *utility {
                    random_utility_instance(&mut rng, *n)?
                } else {
                    InstanceDocument::from_one_sided(&random_one_sided(&mut rng, *n))
                };
                self.emit_doc(&doc, out.as_deref())
            }
            Gen::RandomTwo {
                n,
                max_rank,
                zero_weights,
                out,
            } => {
                check_size(*n)?;
                let inst = random_two_sided(&mut rng, *n, (*max_rank).max(1), !zero_weights);
                self.emit_doc(&InstanceDocument::from_two_sided(&inst), out.as_deref())
            }
        }
    }

    fn verify_near_opt(
        &mut self,
        file: &Path,
        k: Option<&str>,
        matching: Option<&str>,
        backend: BackendArg,
    ) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let Instance::NearOpt { graph, threshold } = inst else {
            return Err(Error::Schema("verify-near-opt needs a near-opt instance".into()));
        };
        let k = match k {
            Some(k) => rational::parse(k)?,
            None => threshold,
        };
        let hash = instance_hash(&doc)?;
        let budget = self.budget();
        let backend = match backend {
            BackendArg::Lp => Backend::Lp,
            BackendArg::Enumerate => Backend::Enumerate,
        };
        let outcome = near_opt_report(&graph, &k, matching, backend, hash.clone(), &budget);
        self.settle("verify-near-opt", hash, outcome)
    }

    fn oracle(&mut self, query: Query, file: &Path) -> Result<i32> {
        let (doc, inst) = load(file)?;
        let hash = instance_hash(&doc)?;
        let budget = self.budget();
        let (ground, value, sets) = oracle_sets(&inst, query, &budget)?;
        let listing = serde_json::json!({
            "query": query.to_possible_value().expect("named").get_name(),
            "value": value.as_ref().map(|v| rational::render(v)),
            "sets": sets.iter().map(|s| ground.names(*s)).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&listing).expect("json");
        text.push('\n');
        self.print(&text)?;
        if self.cli.report.is_some() {
            let status = if sets.is_empty() { Status::NoneExists } else { Status::Solution };
            let mut r = SolveReport::new("oracle", status, hash);
            r.solution = sets.first().map(|s| ground.names(*s));
            r.value = value.map(Rat);
            let text = emit(&r);
            match &self.cli.report {
                Some(p) if p.as_os_str() == "-" => self.print(&text)?,
                Some(p) => write_file(p, &text)?,
                None => {}
            }
        }
        Ok(if sets.is_empty() { 2 } else { 0 })
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Solution => "solution",
        Status::NoneExists => "none-exists",
        Status::Infeasible => "infeasible",
        Status::Budget => "budget",
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > 64 {
        return Err(Error::Schema("--n must lie in 1..=64".into()));
    }
    Ok(())
}

fn random_utility_instance(rng: &mut ChaCha8Rng, n: usize) -> Result<InstanceDocument> {
    use popmat::onesided::Agent;
    let ground = ground_of(n);
    let s = ground.all();
    let (m2, f) = random_laminar_utility(rng, s);
    let k = rng.gen_range(1..=n);
    let agents = popmat::random::random_blocks(rng, s, k)
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|part| Agent {
            part,
            order: random_partial_order(rng, part, 0.6),
        })
        .collect();
    let inst = OneSidedInstance::new(ground, agents, m2, Objective::Utility(f))?;
    Ok(InstanceDocument::from_one_sided(&inst))
}

fn verification_or_flag(g: &Ground, v: Result<(bool, bool, Vec<(ElemSet, i64)>)>) -> Result<Transcript> {
    match v {
        Ok((optimal, popular, rivals)) => Ok(Transcript::new(g, optimal, popular, &rivals)),
        Err(Error::Budget(_)) => Ok(Transcript::over_budget(true, true)),
        Err(e) => Err(e),
    }
}

fn solve_one_report(inst: &OneSidedInstance, hash: String, budget: &EnumerationBudget) -> Result<SolveReport> {
    let sol = solve_popular_max_weight(inst, budget)?;
    let g = &inst.ground;
    let red = &sol.reduction;
    let rg = &red.reduced.ground;
    let status = if sol.solution.is_some() {
        Status::Solution
    } else {
        Status::NoneExists
    };
    let mut r = SolveReport::new("solve-one", status, hash);
    let mut c = Certificates {
        tight: Some(names(g, red.kept)),
        reduction: Some(ReductionDoc {
            ground: rg.ids().to_vec(),
            dummies: rg.names(red.dummy_set()),
            kept: names(g, red.kept),
            reduced_solution: sol.reduced_solution.map(|b| rg.names(b)),
        }),
        ..Default::default()
    };
    match &red.certificate {
        ReductionCertificate::Weights { dual, chain } => {
            c.optimum = Some(Rat(dual.value.clone()));
            c.dual = Some(DualDoc {
                y: weighted_sets(g, &dual.y),
                z: None,
                alpha: Some(dual.alpha.iter().cloned().map(Rat).collect()),
                value: Rat(dual.value.clone()),
            });
            c.chains = Some(vec![chain.iter().map(|s| g.names(*s)).collect()]);
        }
        ReductionCertificate::Utility { split, .. } => {
            c.split = Some(
                g.ids()
                    .iter()
                    .cloned()
                    .zip(split.p.iter().cloned().map(Rat))
                    .collect(),
            );
            c.optimum = inst.value(split.pivot).map(Rat);
        }
    }
    r.certificates = c;
    match sol.solution {
        Some(x) => {
            r.solution = Some(names(g, x));
            r.value = inst.value(x).map(Rat);
            let v = verify_popular(inst, x, budget).map(|v| (v.optimal, v.popular(), v.rivals.clone()));
            r.verification = Some(verification_or_flag(g, v)?);
        }
        None => {
            let brute = brute_popular_one(inst, budget);
            if let Ok(b) = brute {
                r.message = Some(format!(
                    "every optimal solution is defeated; e.g. {} loses to {}",
                    b.dominated.first().map_or("-".into(), |d| g.show(d.member)),
                    b.dominated.first().map_or("-".into(), |d| g.show(d.rival))
                ));
            }
        }
    }
    Ok(r)
}

fn popular_base_report(inst: &PopularBaseInstance, hash: String, budget: &EnumerationBudget) -> Result<SolveReport> {
    let g = &inst.ground;
    let found = solve_popular_common_base(inst, budget)?;
    let status = if found.is_some() {
        Status::Solution
    } else {
        Status::NoneExists
    };
    let mut r = SolveReport::new("solve-one", status, hash);
    match found {
        Some(x) => {
            r.solution = Some(names(g, x));
            let bases = inst.common_bases(budget)?;
            let rivals: Vec<(ElemSet, i64)> = bases.iter().map(|&b| (b, delta(&inst.agents, x, b))).collect();
            r.verification = Some(Transcript::new(g, true, true, &rivals));
        }
        None => {
            let p = inst.popularity(budget)?;
            let rivals: Vec<(ElemSet, i64)> = p.dominated.iter().map(|d| (d.rival, -d.margin.abs())).collect();
            r.message = Some(format!(
                "no popular common base: each of the {} common bases loses to a rival",
                p.dominated.len()
            ));
            r.verification = Some(Transcript::new(g, false, false, &rivals));
        }
    }
    Ok(r)
}

fn solve_two_report(inst: &TwoSidedInstance, hash: String, budget: &EnumerationBudget) -> Result<SolveReport> {
    let sol = solve_popular_max_weight_two(inst, budget)?;
    let g = &inst.ground;
    let red = &sol.reduction;
    let lg = &sol.critical.leveled.ground;
    let mut r = SolveReport::new("solve-two", Status::Solution, hash);
    r.solution = Some(names(g, sol.solution));
    r.value = Some(Rat(rational::sum_over(sol.solution, &inst.weights)));
    r.certificates = Certificates {
        optimum: Some(Rat(red.dual.value.clone())),
        dual: Some(DualDoc {
            y: weighted_sets(g, &red.dual.y),
            z: Some(weighted_sets(g, &red.dual.z)),
            alpha: None,
            value: Rat(red.dual.value.clone()),
        }),
        tight: Some(names(g, red.tight)),
        chains: Some(
            [&red.c1, &red.c2]
                .iter()
                .map(|c| c.iter().map(|s| g.names(*s)).collect())
                .collect(),
        ),
        kernel: Some(lg.names(sol.critical.kernel)),
        levels: Some(
            sol.critical
                .levels
                .iter()
                .map(|(&e, &l)| (g.id(e).to_string(), l))
                .collect(),
        ),
        ..Default::default()
    };
    let v = verify_popular_two(inst, sol.solution, budget).map(|v| (v.optimal, v.popular(), v.rivals.clone()));
    r.verification = Some(verification_or_flag(g, v)?);
    Ok(r)
}

fn near_opt_report(
    g: &PrefBipartite,
    k: &Q,
    matching: Option<&str>,
    backend: Backend,
    hash: String,
    budget: &EnumerationBudget,
) -> Result<SolveReport> {
    let eg = &g.edge_ids;
    let mut r = SolveReport::new("verify-near-opt", Status::NoneExists, hash);
    match matching {
        Some(list) => {
            let m = ids_of(eg, list)?;
            if !g.is_matching(m) {
                return Err(Error::Schema("the proposed edges do not form a matching".into()));
            }
            r.solution = Some(eg.names(m));
            r.value = Some(Rat(g.weight(m)));
            if g.weight(m) < *k {
                r.message = Some(format!("weight below the threshold {}", rational::render(k)));
                r.verification = Some(Transcript::new(eg, false, false, &[]));
                return Ok(r);
            }
            let v = verify_k_popular(g, m, k, backend, budget)?;
            let rivals: Vec<(ElemSet, i64)> = v.rival.map(|n| (n, v.min_delta)).into_iter().collect();
            r.verification = Some(Transcript::new(eg, true, v.popular, &rivals));
            if v.popular {
                r.status = Status::Solution;
                r.message = Some(format!("popular among matchings of weight at least {}", rational::render(k)));
            } else {
                r.message = Some("a rival matching defeats it".into());
            }
        }
        None => match solve_near_opt_brute(g, k, budget)? {
            Some(m) => {
                r.status = Status::Solution;
                r.solution = Some(eg.names(m));
                r.value = Some(Rat(g.weight(m)));
            }
            None => {
                r.message = Some(format!(
                    "no matching is popular among matchings of weight at least {}",
                    rational::render(k)
                ));
            }
        },
    }
    Ok(r)
}

/// Sets answering an oracle query, with the optimum where one applies.
fn oracle_sets<'a>(
    inst: &'a Instance,
    query: Query,
    budget: &EnumerationBudget,
) -> Result<(&'a Ground, Option<Q>, Vec<ElemSet>)> {
    match inst {
        Instance::OneSided(i) => {
            let m1 = i.m1()?;
            Ok(match query {
                Query::Cis => (&i.ground, None, enumerate_cis(&m1, &i.m2, budget)?),
                Query::CommonBases => (&i.ground, None, enumerate_common_bases(&m1, &i.m2, budget)?),
                Query::MaxWeight => {
                    let (v, f) = i.optimal_family(budget)?;
                    (&i.ground, Some(v), f)
                }
                Query::Popular => (&i.ground, None, brute_popular_one(i, budget)?.popular),
            })
        }
        Instance::PopularBase(i) => {
            let m1 = i.m1()?;
            Ok(match query {
                Query::Cis => (&i.ground, None, enumerate_cis(&m1, &i.m2, budget)?),
                Query::CommonBases => (&i.ground, None, enumerate_common_bases(&m1, &i.m2, budget)?),
                Query::MaxWeight => {
                    return Err(Error::Schema("the instance has neither weights nor utility".into()))
                }
                Query::Popular => (&i.ground, None, i.popularity(budget)?.popular),
            })
        }
        Instance::TwoSided(i) => {
            let (m1, m2) = (i.m1.matroid(), i.m2.matroid());
            Ok(match query {
                Query::Cis => (&i.ground, None, enumerate_cis(m1, m2, budget)?),
                Query::CommonBases => (&i.ground, None, enumerate_common_bases(m1, m2, budget)?),
                Query::MaxWeight => {
                    let mw = max_weight_cis(m1, m2, &i.weights, budget)?;
                    (&i.ground, Some(mw.opt), mw.maximizers)
                }
                Query::Popular => {
                    let mw = max_weight_cis(m1, m2, &i.weights, budget)?;
                    (&i.ground, None, brute_popular(&mw.maximizers, |a, b| i.margin(a, b))?.popular)
                }
            })
        }
        Instance::NearOpt { graph, threshold } => {
            let eg = &graph.edge_ids;
            Ok(match query {
                Query::Cis => (eg, None, graph.matchings_at_least(threshold, budget)?),
                Query::CommonBases => {
                    return Err(Error::Schema("common bases are not defined for near-opt instances".into()))
                }
                Query::MaxWeight => {
                    let all = graph.matchings_at_least(threshold, budget)?;
                    let best = all.iter().map(|&m| graph.weight(m)).max();
                    let top = all.into_iter().filter(|&m| Some(graph.weight(m)) == best).collect();
                    (eg, best, top)
                }
                Query::Popular => (eg, None, all_near_opt_popular(graph, threshold, budget)?),
            })
        }
    }
}
