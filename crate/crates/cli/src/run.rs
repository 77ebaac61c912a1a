use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use relbelief::elicitation::CoverageEstimate;
use relbelief::evidence::Verdict;
use relbelief::normal::NormalPrior;
use relbelief::prediction::{PredictionProblem, PredictionReport};
use relbelief::regression::{
    joint_rb_estimate, marginal_rb_inference, prior_data_conflict, BiasAgainst, BiasInFavor,
    BiasInFavorPoint, BiasStudy, BinaryRegressionData, ConflictReport, ExtendPolicy, GridSpec,
    HypothesisAssessment, JointEstimate, MarginalInferenceReport,
};
use serde::Serialize;

use crate::config::{CliError, Hypothesis, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Elicit,
    CheckBias,
    CheckConflict,
    Infer,
    Pipeline,
}

impl Stage {
    fn includes(self, other: Stage) -> bool {
        self == other || self == Stage::Pipeline
    }
}

/// Files produced by a command, kept in memory until everything succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
    summary: String,
    warnings: Vec<String>,
}

impl Artifacts {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Usage(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.files.push((name.to_string(), text));
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl Iterator<Item = String>) {
        let mut text = format!("{header}\n");
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        self.files.push((name.to_string(), text));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_to(mut self, dir: &Path) -> Result<(), CliError> {
        if !self.warnings.is_empty() {
            self.summary.push_str("warnings\n");
            for w in &self.warnings {
                let _ = writeln!(self.summary, "  {w}");
            }
        }
        self.files.push(("summary.txt".into(), self.summary));
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io(&path))?;
        }
        Ok(())
    }
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::For => "evidence for",
        Verdict::Against => "evidence against",
        Verdict::Neutral => "no evidence",
    }
}

fn coefficient(i: usize) -> String {
    format!("beta{}", i + 1)
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Serialize)]
struct PriorArtifact<'a> {
    prior: &'a NormalPrior,
    gamma: f64,
    coverage: CoverageEstimate,
}

#[derive(Serialize)]
struct BiasArtifact {
    hypothesis: Hypothesis,
    against: BiasAgainst,
    in_favor: BiasInFavor,
    far_alternatives: Vec<BiasInFavorPoint>,
    n_samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct ConflictArtifact {
    #[serde(flatten)]
    report: ConflictReport,
    level: f64,
    conflict: bool,
    n_samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct InferenceArtifact<'a> {
    coefficient: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypothesis: Option<HypothesisAssessment>,
    report: &'a MarginalInferenceReport,
}

pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    let prior = cfg.spec.elicit_prior()?;

    if stage.includes(Stage::Elicit) {
        elicit(cfg, &prior, &mut out)?;
    }
    let needs_study = stage.includes(Stage::CheckBias) || stage.includes(Stage::CheckConflict);
    if needs_study {
        let data = cfg.data.as_ref().expect("validated by the loader");
        let hyp = cfg.hypothesis.unwrap_or(Hypothesis {
            coordinate: 0,
            value: 0.0,
        });
        // the unconditional table is shared between bias and conflict
        let study = BiasStudy::new(&prior, &data.experiment, hyp.coordinate, hyp.value, cfg.mc)?;
        if stage.includes(Stage::CheckBias) {
            bias(cfg, &study, &mut out)?;
        }
        if stage.includes(Stage::CheckConflict) {
            conflict(cfg, data, &study, &mut out)?;
        }
    }
    if stage.includes(Stage::Infer) {
        infer(cfg, &prior, &mut out)?;
    }
    Ok(out)
}

fn elicit(cfg: &RunConfig, prior: &NormalPrior, out: &mut Artifacts) -> Result<(), CliError> {
    let coverage = cfg.spec.prior_coverage_check(prior, cfg.mc)?;
    let s = &mut out.summary;
    let _ = writeln!(s, "prior");
    let _ = writeln!(s, "  mean {}", fmt_list(&prior.mean));
    let _ = writeln!(s, "  covariance {}", fmt_list(&prior.cov));
    if let Some(form) = &prior.diagonal {
        let _ = writeln!(s, "  scales {}", fmt_list(&form.sigma));
    }
    let _ = writeln!(
        s,
        "  coverage {:.6} (se {:.6}) at gamma {}",
        coverage.estimate, coverage.std_error, cfg.spec.gamma
    );
    if coverage.estimate < cfg.spec.gamma - 3.0 * coverage.std_error {
        out.warnings.push(format!(
            "prior coverage {:.6} falls short of gamma {}",
            coverage.estimate, cfg.spec.gamma
        ));
    }
    out.json(
        "prior.json",
        &PriorArtifact {
            prior,
            gamma: cfg.spec.gamma,
            coverage,
        },
    )
}

fn bias(cfg: &RunConfig, study: &BiasStudy, out: &mut Artifacts) -> Result<(), CliError> {
    let hyp = cfg.hypothesis.expect("validated by the loader");
    let name = coefficient(hyp.coordinate);
    let against = study.bias_against()?;
    let in_favor = study.bias_in_favor(cfg.delta)?;
    let far = cfg
        .far_alternatives
        .iter()
        .map(|&v| study.bias_in_favor_at(v))
        .collect::<Result<Vec<_>, _>>()?;

    let s = &mut out.summary;
    let _ = writeln!(s, "bias for {name} = {}", hyp.value);
    let _ = writeln!(s, "  bias against {:.6}", against.value);
    for p in in_favor.points.iter().chain(&far) {
        let _ = writeln!(
            s,
            "  bias in favor at {name} = {}: {:.6} (tabulated {:.6})",
            p.psi_star, p.formula, p.tabulated
        );
    }
    let zero_cells = against.zero_mass_cells
        + in_favor
            .points
            .iter()
            .chain(&far)
            .map(|p| p.zero_mass_cells)
            .sum::<usize>();
    if zero_cells > 0 {
        out.warnings.push(format!(
            "{zero_cells} predictive cells had zero Monte Carlo mass in the bias tables"
        ));
    }
    out.json(
        "bias.json",
        &BiasArtifact {
            hypothesis: hyp,
            against,
            in_favor,
            far_alternatives: far,
            n_samples: cfg.mc.n_samples,
            seed: cfg.mc.seed,
        },
    )
}

fn conflict(
    cfg: &RunConfig,
    data: &BinaryRegressionData,
    study: &BiasStudy,
    out: &mut Artifacts,
) -> Result<(), CliError> {
    let table = study.unconditional_table()?;
    let report = prior_data_conflict(&table, &data.counts)?;
    let flagged = report.is_conflict(cfg.conflict_level);
    let _ = writeln!(out.summary, "prior-data conflict");
    let _ = writeln!(
        out.summary,
        "  tail probability {:.6} at level {}: {}",
        report.tail_probability,
        cfg.conflict_level,
        if flagged { "conflict" } else { "no conflict" }
    );
    if report.observed_mass == 0.0 {
        out.warnings
            .push("the observed counts received zero Monte Carlo mass".to_string());
    }
    out.json(
        "conflict.json",
        &ConflictArtifact {
            report,
            level: cfg.conflict_level,
            conflict: flagged,
            n_samples: cfg.mc.n_samples,
            seed: cfg.mc.seed,
        },
    )
}

fn marginal(
    cfg: &RunConfig,
    prior: &NormalPrior,
    data: &BinaryRegressionData,
    i: usize,
) -> Result<MarginalInferenceReport, CliError> {
    let anchor = cfg
        .hypothesis
        .filter(|h| h.coordinate == i)
        .map(|h| h.value);
    let grid = |delta: f64| -> Result<GridSpec, CliError> {
        let g = GridSpec::from_effective_support(prior, i, cfg.support_mass, delta)?;
        Ok(match anchor {
            Some(a) => g.aligned_to(a)?,
            None => g,
        })
    };
    let report = marginal_rb_inference(prior, data, &grid(cfg.delta)?, cfg.mc, None)?;
    if !(report.truncated && cfg.extend_grid) {
        return Ok(report);
    }
    let wide = grid(cfg.extend_delta.unwrap_or(cfg.delta))?;
    Ok(marginal_rb_inference(
        prior,
        data,
        &wide,
        cfg.mc,
        Some(ExtendPolicy::default()),
    )?)
}

fn infer(cfg: &RunConfig, prior: &NormalPrior, out: &mut Artifacts) -> Result<(), CliError> {
    let data = cfg.data.as_ref().expect("validated by the loader");
    let _ = writeln!(out.summary, "inference");
    for i in 0..prior.dim() {
        let name = coefficient(i);
        let report = marginal(cfg, prior, data, i)?;
        let hypothesis = match cfg.hypothesis {
            Some(h) if h.coordinate == i => Some(report.assess(h.value)?),
            _ => None,
        };

        let s = &mut out.summary;
        let regions: Vec<String> = report
            .plausibility_region
            .iter()
            .map(|r| format!("[{:.4}, {:.4}]", r.lo, r.hi))
            .collect();
        let _ = writeln!(
            s,
            "  {name}: estimate {:.4}, plausible region {} with posterior content {:.4}",
            report.estimate,
            regions.join(" "),
            report.region_content
        );
        if let Some(a) = &hypothesis {
            let _ = writeln!(
                s,
                "  {name} = {}: relative belief {:.6}, strength {:.6}, {}",
                a.value,
                a.rb,
                a.strength,
                verdict_text(a.verdict)
            );
        }
        if report.truncated {
            out.warnings.push(format!(
                "{name} grid [{}, {}] is truncated: the plausible region reaches an end",
                report.grid.lo, report.grid.hi
            ));
        }

        out.json(
            &format!("inference_{name}.json"),
            &InferenceArtifact {
                coefficient: name.clone(),
                hypothesis,
                report: &report,
            },
        )?;
        out.csv(
            &format!("inference_{name}.csv"),
            &format!("{name},rb,prior_density,posterior_density"),
            (0..report.points.len()).map(|j| {
                format!(
                    "{},{},{},{}",
                    report.points[j],
                    report.rb_values[j],
                    report.prior_density[j],
                    report.posterior_density[j]
                )
            }),
        );
    }

    let joint: JointEstimate = joint_rb_estimate(data, &prior.mean)?;
    let _ = writeln!(
        out.summary,
        "  joint estimate {} ({:?})",
        fmt_list(&joint.beta),
        joint.status
    );
    Ok(())
}

pub fn predict(problem: PredictionProblem) -> Result<Artifacts, CliError> {
    let report: PredictionReport = problem.predict();
    let mut out = Artifacts::default();
    let s = &mut out.summary;
    let _ = writeln!(
        s,
        "prediction of {} future trials after {} successes in {}",
        problem.f, problem.sum_x, problem.n
    );
    let _ = writeln!(
        s,
        "  relative belief estimate of sum_y: {}",
        report.rb_best_sum_y
    );
    let _ = writeln!(s, "  posterior mode of sum_y: {:?}", report.map_best_sum_y);
    let _ = writeln!(
        s,
        "  plausible sums {:?} with posterior content {:.6}",
        report.plausible_sums, report.plausibility_content
    );
    out.csv(
        "rb_curve.csv",
        "sum_y,rb,posterior_mass_of_class",
        report
            .rb_curve
            .iter()
            .zip(&report.class_posterior)
            .enumerate()
            .map(|(s, (rb, m))| format!("{s},{rb},{m}")),
    );
    out.json("prediction.json", &report)?;
    Ok(out)
}
