//! One function per subcommand. Each returns a finished [`ReportFile`];
//! an `Err` means the input itself was unusable.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::gen;
use super::instance::{matrix_to_raw, Instance, InstanceFile};
use super::report::{nums, Check, ReportFile, Verdict};
use super::verify;
use crate::dualizer;
use crate::error::{Error, Result};
use crate::gframe::GFrame;
use crate::multiplier;
use crate::opspace::{self, Tolerances};
use crate::perturb;

/// Inputs shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub digest: String,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Context {
    fn report(&self, command: &str) -> ReportFile {
        ReportFile::new(command, self.digest.clone(), Some(self.seed), self.tolerances)
    }
}

fn frame_blocks(f: &GFrame) -> Value {
    json!(f.blocks().iter().map(matrix_to_raw).collect::<Vec<_>>())
}

pub fn analyze(inst: &Instance, ctx: &Context, frame_name: &str) -> Result<ReportFile> {
    let frame = inst.frame(frame_name)?;
    let mut r = ctx.report("analyze");
    let b = frame.frame_bounds()?;
    r.value("frame", frame_name);
    r.number("lower", b.lower);
    r.number("upper", b.upper);
    r.number("ratio", b.ratio());
    r.value("classification", b.classification.as_str());
    r.value("excess", frame.excess()?);
    for c in verify::frame_checks(frame_name, frame, ctx.seed)? {
        r.check(c);
    }
    Ok(r.finish())
}

pub fn multiplier(inst: &Instance, ctx: &Context) -> Result<ReportFile> {
    let (lambda, gamma, u) = (inst.frame("Lambda")?, inst.frame("Gamma")?, inst.symbol()?);
    let mut r = ctx.report("multiplier");
    let m = multiplier::assemble(lambda, u, gamma)?;
    r.value("singular_values", nums(&m.singular_values));
    r.number("sigma_min", m.sigma_min);
    r.number("sigma_max", m.sigma_max);
    r.number("cond", m.cond);
    r.value("invertible", m.invertible);
    r.value("matrix", matrix_to_raw(&m.matrix));
    if let Some(b) = m.bracket {
        r.value("bracket", nums(&[b.lower, b.upper]));
    }
    let nc = multiplier::necessary_conditions(lambda, u, gamma, &m)?;
    r.value(
        "necessary_lower_bounds",
        json!({
            "Lambda": nc.lambda_lower,
            "Gamma": nc.gamma_lower,
            "UGamma": nc.u_gamma_lower,
            "UadjLambda": nc.u_adjoint_lambda_lower,
        }),
    );
    let em = multiplier::excess_match(lambda, gamma)?;
    r.value("excess", json!([em.lambda_excess, em.gamma_excess]));
    for c in verify::multiplier_checks(lambda, u, gamma)? {
        r.check(c);
    }
    if !m.invertible {
        r.verdict = Verdict::NonInvertible;
    }
    Ok(r.finish())
}

pub fn invert(inst: &Instance, ctx: &Context, trials: usize) -> Result<ReportFile> {
    let (lambda, gamma, u) = (inst.frame("Lambda")?, inst.frame("Gamma")?, inst.symbol()?);
    let mut r = ctx.report("invert");
    let m = multiplier::assemble(lambda, u, gamma)?;
    r.value("invertible", m.invertible);
    r.number("cond", m.cond);
    if !m.invertible {
        r.verdict = Verdict::NonInvertible;
        return Ok(r.finish());
    }
    let diag = dualizer::canonical_inverse_diagnostics(lambda, u, gamma)?;
    let d = &diag.report;
    r.value("gamma_dagger", frame_blocks(&d.gamma_dagger));
    r.value("multiplier_inverse", matrix_to_raw(&d.multiplier_inverse));
    r.value("canonical_flag", d.canonical_flag);
    r.number("psi_norm", d.psi_norm);
    r.number("upper_opt_dagger", d.upper_opt_dagger);
    r.number("inv_lower_gamma", d.inv_lower_gamma);
    r.number("gap", diag.gap);
    r.value("q_equivalent", diag.q_equivalent);
    r.number("analysis_norm_sq", diag.analysis_norm_sq);
    r.number("minimal_norm_floor", diag.minimal_norm_floor);
    for c in verify::dual_checks(lambda, u, gamma, trials, ctx.seed)? {
        r.check(c);
    }
    if let Ok(inv) = multiplier::riesz_inverse(lambda, u, gamma) {
        r.check(Check::at_most(
            "dual.riesz_inverse",
            opspace::op_norm(&(inv - &d.multiplier_inverse)),
            1e-8 * m.cond * opspace::op_norm(&d.multiplier_inverse).max(1.0),
        ));
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructMode {
    Gamma,
    GammaMinimal,
    Lambda,
}

/// Returns the report and the instance with the constructed frame added
/// (as `GammaConstructed` or `LambdaConstructed`).
pub fn construct(inst: &Instance, ctx: &Context, mode: ConstructMode) -> Result<(ReportFile, InstanceFile)> {
    let u = inst.symbol()?;
    let mut r = ctx.report("construct");
    let (name, built) = match mode {
        ConstructMode::Gamma | ConstructMode::GammaMinimal => {
            let lambda = inst.frame("Lambda")?;
            let t = inst.operator("T")?;
            let built = if mode == ConstructMode::Gamma {
                multiplier::construct_gamma(lambda, u, t, inst.operator("Phi")?)?
            } else {
                multiplier::minimal_norm_gamma(lambda, u, t)?
            };
            let m = multiplier::multiplier_matrix(lambda, u, &built)?;
            let sn = u.ensure_semi_normalized()?;
            let tol = 1e-9
                * opspace::cond(&lambda.synthesis_matrix())
                * sn.norm
                * sn.inverse_norm
                * opspace::op_norm(t).max(1.0);
            r.value(
                "mode",
                if mode == ConstructMode::Gamma {
                    "gamma"
                } else {
                    "gamma-minimal"
                },
            );
            r.check(Check::at_most("construct.multiplier", opspace::op_norm(&(m - t)), tol));
            let a_lambda = lambda.ensure_frame()?.lower;
            let norm_sq = opspace::op_norm(&u.apply(&built)?.analysis_matrix()).powi(2);
            let t_inv = opspace::inverse(t, "T")?;
            r.number("analysis_norm_sq", norm_sq);
            r.check(Check::at_least(
                "construct.minimal_norm_floor",
                norm_sq * opspace::op_norm(&t_inv).powi(2),
                1.0 / a_lambda - 1e-8,
            ));
            ("GammaConstructed", built)
        }
        ConstructMode::Lambda => {
            let gamma = inst.frame("Gamma")?;
            let (psi, t1, t2) = (inst.operator("Psi")?, inst.operator("T1")?, inst.operator("T2")?);
            let built = multiplier::construct_lambda(gamma, u, psi, t1, t2)?;
            let m = multiplier::multiplier_matrix(&built, u, gamma)?;
            let m_gg = multiplier::multiplier_matrix(gamma, u, gamma)?;
            let t2_inv = opspace::inverse(t2, "T2")?;
            let size = opspace::op_norm(t1).max(1.0)
                * opspace::cond(&m_gg)
                * (1.0
                    + opspace::op_norm(&t2_inv)
                        * opspace::op_norm(psi)
                        * u.norm()
                        * opspace::op_norm(&gamma.analysis_matrix()));
            r.value("mode", "lambda");
            r.check(Check::at_most(
                "construct.multiplier",
                opspace::op_norm(&(m - t1)),
                1e-8 * size,
            ));
            ("LambdaConstructed", built)
        }
    };
    r.value("frame", name);
    r.value("blocks", frame_blocks(&built));
    let b = built.frame_bounds()?;
    r.number("lower", b.lower);
    r.number("upper", b.upper);
    let mut file = inst.file.clone();
    file.frames
        .insert(name.to_string(), built.blocks().iter().map(matrix_to_raw).collect());
    Ok((r.finish(), file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    Transfer,
    Sufficient,
}

/// `Transfer` when `LambdaPrime` is present, else `Sufficient`.
pub fn detect_perturb_mode(inst: &Instance) -> PerturbMode {
    if inst.frames.contains_key("LambdaPrime") {
        PerturbMode::Transfer
    } else {
        PerturbMode::Sufficient
    }
}

pub fn perturb(
    inst: &Instance,
    ctx: &Context,
    mode: PerturbMode,
    gamma_name: &str,
    trials: usize,
) -> Result<ReportFile> {
    let (lambda, u) = (inst.frame("Lambda")?, inst.symbol()?);
    let gamma = inst.frame(gamma_name)?;
    let mut r = ctx.report("perturb");
    r.value("gamma", gamma_name);
    match mode {
        PerturbMode::Transfer => {
            r.value("mode", "transfer");
            let lp = inst.frame("LambdaPrime")?;
            match perturb::transfer_gamma(lambda, u, gamma, lp) {
                Err(Error::PerturbationTooLarge { mu, sqrt_lower }) => {
                    r.number("mu", mu);
                    r.number("sqrt_lower", sqrt_lower);
                    r.verdict = Verdict::ConditionNotMet;
                    return Ok(r.finish());
                }
                Err(e) => return Err(e),
                Ok(p) => {
                    r.number("mu", p.mu);
                    r.number("sqrt_lower", p.sqrt_lower);
                    r.number("lambda_const", p.lambda_const);
                    r.number("a", p.a);
                    r.number("b", p.b);
                    r.number("transfer_distance", p.transfer_distance);
                    r.number("multiplier_residual", p.multiplier_residual);
                    r.value("gamma_prime", frame_blocks(&p.gamma_prime));
                    let rec = perturb::best_approx_check(lambda, u, gamma, lp, &p, trials, ctx.seed)?;
                    r.value("best_approximation", rec);
                }
            }
            for c in verify::transfer_checks(lambda, u, gamma, lp, trials, ctx.seed)? {
                r.check(c);
            }
        }
        PerturbMode::Sufficient => {
            r.value("mode", "sufficient");
            let dual = inst.frame("LambdaDual")?;
            match perturb::sufficient_condition(lambda, dual, gamma, u) {
                Err(Error::ConditionNotMet { mu }) => {
                    r.number("mu_sum", mu);
                    r.verdict = Verdict::ConditionNotMet;
                    return Ok(r.finish());
                }
                Err(e) => return Err(e),
                Ok(s) => {
                    r.number("lambda_sum", s.lambda_sum);
                    r.number("mu_sum", s.mu_sum);
                    r.value("invertible", s.invertible);
                    r.value("inverse_norm_bracket", nums(&[s.inv_norm_lo, s.inv_norm_hi]));
                    r.value("gamma_bound_bracket", nums(&[s.gamma_lower, s.gamma_upper]));
                    r.value("singular_values", nums(&s.singular_values));
                }
            }
            for c in verify::sufficiency_checks(lambda, dual, gamma, u)? {
                r.check(c);
            }
        }
    }
    Ok(r.finish())
}

/// Suite on one instance.
pub fn verify_instance(inst: &Instance, ctx: &Context) -> ReportFile {
    let mut r = ctx.report("verify");
    let out = verify::run_suite(inst, ctx.seed);
    if !out.errors.is_empty() {
        r.value("errors", &out.errors);
    }
    r.value(
        "tally",
        json!({ "checks": out.checks.len(), "failed": out.checks.iter().filter(|c| !c.pass).count() }),
    );
    for c in out.checks {
        r.check(c);
    }
    r.finish()
}

/// Suite on `count` generated instances; one aggregated check per invariant
/// holding its worst case.
pub fn verify_random(count: usize, ctx: &Context) -> ReportFile {
    let mut r = ctx.report("verify");
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst: BTreeMap<String, Check> = BTreeMap::new();
    let mut runs: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut passed_instances = 0;
    for i in 0..count {
        let (n, sizes) = gen::random_shape(&mut rng);
        let seed: u64 = rng.random();
        let outcome = gen::generate(n, &sizes, 10.0, seed)
            .and_then(InstanceFile::validate)
            .map(|inst| verify::run_suite(&inst, seed));
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                failures.push(json!({ "instance": i, "seed": seed, "error": e.to_string() }));
                continue;
            }
        };
        if outcome.passed() {
            passed_instances += 1;
        }
        for (group, msg) in &outcome.errors {
            failures.push(json!({ "instance": i, "seed": seed, "group": group, "error": msg }));
        }
        for c in outcome.checks {
            let tally = runs.entry(c.name.clone()).or_default();
            tally.0 += 1;
            if !c.pass {
                tally.1 += 1;
                failures.push(json!({ "instance": i, "seed": seed, "check": c.name }));
            }
            let replace = match worst.get(&c.name) {
                None => true,
                Some(w) => (w.pass && !c.pass) || (w.pass == c.pass && c.margin() < w.margin()),
            };
            if replace {
                worst.insert(c.name.clone(), c);
            }
        }
    }
    r.value(
        "tally",
        json!({ "instances": count, "passed": passed_instances, "failed": count - passed_instances }),
    );
    r.value(
        "runs",
        runs.iter()
            .map(|(k, (total, failed))| (k.clone(), json!({ "runs": total, "failed": failed })))
            .collect::<BTreeMap<_, _>>(),
    );
    if !failures.is_empty() {
        r.value("failures", failures);
        r.verdict = Verdict::Fail;
    }
    for (_, c) in worst {
        r.check(c);
    }
    r.finish()
}
