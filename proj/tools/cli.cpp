// Command-line front end: generate untrained victims, run the hard-label
// extraction attack against an in-process metered oracle, and score an
// extracted model against its victim.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "hlx/budget.hpp"
#include "hlx/extraction.hpp"
#include "hlx/io.hpp"
#include "hlx/model.hpp"
#include "hlx/oracle.hpp"
#include "hlx/verify.hpp"

namespace {

struct GenOptions {
  std::string arch;
  std::uint64_t seed = 1;
  std::string output = "victim.json";
  double low = -1.0;
  double high = 1.0;
  double precision = 1e-12;
  int points_multiplier = 8;
};

int cmd_gen(const GenOptions& opt) {
  const auto arch = hlx::Architecture::parse(opt.arch);
  const auto model = hlx::generate_model(arch, opt.seed, opt.low, opt.high);
  hlx::write_model(opt.output, model);

  const auto budget = hlx::AttackBudget::estimate(
      arch, opt.precision, 1.0, opt.points_multiplier);
  std::cout << "wrote " << opt.output << "\n"
            << "architecture       " << arch.to_string() << "\n"
            << "parameters         " << model.parameter_count() << "\n"
            << "neurons (n)        " << arch.neuron_count() << "\n"
            << "predicted queries  " << budget.predicted_queries << "  (2^"
            << std::log2(static_cast<double>(budget.predicted_queries))
            << ", c_eps=" << budget.c_eps << ")\n"
            << "predicted cands    "
            << static_cast<double>(budget.predicted_candidates) << "\n";
  return 0;
}

struct AttackOptions {
  std::string victim;
  std::string output = "extracted.json";
  std::string transcript;
  std::string report;
  std::string resume;
  hlx::AttackConfig cfg;
};

int cmd_attack(const AttackOptions& opt) {
  const auto victim = hlx::read_model(opt.victim);
  if (victim.arch.output_dim() != 1) {
    std::cerr << "unsupported architecture: output dimension must be 1\n";
    return 1;
  }
  hlx::HardLabelOracle oracle(victim);

  std::vector<hlx::RecoveredTuple> resume;
  if (!opt.resume.empty()) resume = hlx::read_transcript(opt.resume);

  auto result = hlx::run_attack(oracle, victim.arch, opt.cfg, std::move(resume));

  const std::string transcript =
      opt.transcript.empty() ? opt.output + ".transcript" : opt.transcript;
  const std::string report =
      opt.report.empty() ? opt.output + ".report.json" : opt.report;
  hlx::write_transcript(transcript, result.tuples);
  hlx::write_report(report, result.report);

  hlx::RunManifest manifest;
  manifest.seed = opt.cfg.seed;
  manifest.victim_path = opt.victim;
  manifest.victim_hash = hlx::file_fnv1a64(opt.victim);
  manifest.transcript = transcript;
  manifest.report = report;

  std::cout << result.report.to_text();
  if (result.model) {
    hlx::write_model(opt.output, *result.model);
    manifest.output_model = opt.output;
    std::cout << "wrote " << opt.output << "\n";
  }
  hlx::write_manifest(opt.output + ".manifest.json", manifest);

  switch (result.status) {
    case hlx::AttackStatus::Success:
      return 0;
    case hlx::AttackStatus::InsufficientData:
      return 2;
    case hlx::AttackStatus::NoSurvivor:
      return 3;
  }
  return 1;
}

struct VerifyOptions {
  std::string victim;
  std::string extracted;
  std::string report;
  int pmr_samples = 1000000;
  int scale_samples = 10000;
  double domain_radius = 1.0;
  std::uint64_t seed = 1;
  int anchor = 1;  // 1-based input coordinate
};

int cmd_verify(const VerifyOptions& opt) {
  const auto victim = hlx::read_model(opt.victim);
  const auto extracted = hlx::read_model(opt.extracted);
  if (!(victim.arch == extracted.arch)) {
    std::cerr << "architecture mismatch between victim and extracted model\n";
    return 1;
  }

  const auto alignment = hlx::align(victim, extracted, opt.anchor - 1);
  hlx::EquivalenceReport eq;
  eq.max_param_error =
      hlx::max_param_error(alignment.theoretical, extracted);
  eq.epsilon_bound =
      hlx::error_bound(alignment.theoretical, extracted, opt.domain_radius);
  eq.pmr = hlx::pmr(victim, extracted, opt.pmr_samples, opt.seed ^ 0x9d2c,
                    opt.domain_radius);
  const auto scale = hlx::estimate_scale(victim, extracted, opt.scale_samples,
                                         opt.seed, opt.domain_radius);
  if (scale) eq.scale_c = scale->c;

  double eps_search = 0.0;
  if (!opt.report.empty()) {
    // Pull the search precision and the query meter out of an attack report.
    std::ifstream is(opt.report);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    const auto epos = text.find("\"epsilon\":");
    if (epos != std::string::npos)
      eps_search = std::strtod(text.c_str() + epos + 10, nullptr);
    const auto qpos = text.find("\"query_count\":");
    if (qpos != std::string::npos)
      eq.query_count = std::strtoull(text.c_str() + qpos + 14, nullptr, 10);
  }

  auto bits = [](double v) {
    return v > 0 ? std::log2(v) : -std::numeric_limits<double>::infinity();
  };
  std::cout << "epsilon_search      " << eps_search << "\n"
            << "PMR                 " << eq.pmr * 100.0 << "%\n"
            << "queries             " << eq.query_count;
  if (eq.query_count)
    std::cout << "  (2^" << std::log2(static_cast<double>(eq.query_count))
              << ")";
  std::cout << "\n"
            << "(eps,0) bound       " << eq.epsilon_bound << "  (2^"
            << bits(eq.epsilon_bound) << ")\n"
            << "max|theta - hat|    " << eq.max_param_error << "  (2^"
            << bits(eq.max_param_error) << ")\n"
            << "scale c             " << (scale ? scale->c : 0.0) << "\n";
  if (scale)
    std::cout << "scale spread (IQR)  " << scale->spread_iqr << "\n";
  if (alignment.ambiguous)
    std::cout << "warning: neuron alignment had near-ties\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hard-label extraction toolkit for ReLU networks"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "generate an untrained victim model");
  g->add_option("--arch", gen.arch, "architecture, e.g. 512-2-1")->required();
  g->add_option("--seed", gen.seed, "rng seed");
  g->add_option("--output", gen.output, "output model file");
  g->add_option("--low", gen.low, "uniform distribution lower bound");
  g->add_option("--high", gen.high, "uniform distribution upper bound");
  g->add_option("--precision", gen.precision, "epsilon for the budget forecast");
  g->add_option("--points-multiplier", gen.points_multiplier,
                "c_n for the budget forecast");

  AttackOptions atk;
  auto* a = app.add_subcommand("attack", "extract a model from hard labels");
  a->add_option("victim", atk.victim, "victim model file")->required();
  a->add_option("--output", atk.output, "extracted model file");
  a->add_option("--transcript", atk.transcript, "tuple transcript file");
  a->add_option("--report", atk.report, "attack report file");
  a->add_option("--resume", atk.resume, "resume from a tuple transcript");
  a->add_option("--seed", atk.cfg.seed, "rng seed");
  a->add_option("--precision", atk.cfg.epsilon, "boundary search epsilon");
  a->add_option("--points-multiplier", atk.cfg.points_multiplier,
                "collect c_n * 2^n boundary points");
  a->add_option("--probe-stride", atk.cfg.probe_stride,
                "axis probe stride (default: depth-dependent)");
  a->add_option("--phi", atk.cfg.phi, "tuple comparison threshold");
  a->add_option("--d-phi", atk.cfg.d_phi,
                "allowed mismatching coordinates (default d0/100)");
  a->add_option("--pmr-samples", atk.cfg.pmr_samples,
                "fresh oracle samples for candidate ranking");
  a->add_option("--domain-radius", atk.cfg.domain_radius, "sampling radius");
  a->add_option("--max-candidates", atk.cfg.max_candidates,
                "cap on enumerated candidates");
  a->add_flag("--early-exit", atk.cfg.early_exit,
              "stop at the first candidate with perfect ranking PMR");
  a->add_flag("--relaxed-plan", atk.cfg.relaxed_plan,
              "single-active downstream layers in recovery plans");
  a->add_option("--threads", atk.cfg.threads, "candidate evaluation workers");

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "score extracted against victim");
  v->add_option("victim", ver.victim, "victim model file")->required();
  v->add_option("extracted", ver.extracted, "extracted model file")->required();
  v->add_option("--report", ver.report, "attack report (for epsilon/queries)");
  v->add_option("--pmr-samples", ver.pmr_samples, "PMR sample count");
  v->add_option("--scale-samples", ver.scale_samples, "scale sample count");
  v->add_option("--domain-radius", ver.domain_radius, "sampling radius");
  v->add_option("--seed", ver.seed, "rng seed");
  v->add_option("--anchor", ver.anchor, "anchor input coordinate (1-based)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (a->parsed()) return cmd_attack(atk);
    if (v->parsed()) return cmd_verify(ver);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
