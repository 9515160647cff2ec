#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hlx/affine.hpp"
#include "hlx/boundary.hpp"
#include "hlx/model.hpp"
#include "hlx/oracle.hpp"

namespace hlx {

// ---------------------------------------------------------------------------
// Activation-pattern plans
// ---------------------------------------------------------------------------

ActivationPattern full_pattern(const Architecture& arch);

/// The pattern assumed when recovering neuron `neuron` (0-based) of hidden
/// layer `layer` (1-based): only that neuron active in its layer, everything
/// else fully active. With `relaxed`, layers downstream of `layer` keep only
/// their first neuron active instead.
ActivationPattern plan_pattern(const Architecture& arch, int layer, int neuron,
                               bool relaxed);

/// Upper bound on the number of reachable activation patterns,
/// prod(2^{d_i}-1) + sum_{i=2..k} prod_{j<i}(2^{d_j}-1). Saturates at
/// UINT64_MAX (flag set) instead of overflowing.
std::uint64_t count_max_patterns(const Architecture& arch,
                                 bool* saturated = nullptr);

/// Reachable patterns of a concrete model: every combination with at least
/// one active neuron per layer, plus the chains where some layer is fully
/// inactive and the downstream states are forced by the biases.
std::vector<ActivationPattern> enumerate_patterns(const ModelParameters& m,
                                                  std::size_t budget);

// ---------------------------------------------------------------------------
// Layer-by-layer parameter recovery
// ---------------------------------------------------------------------------

/// gamma / |gamma[anchor]|, requires |gamma[anchor]| above the zero
/// threshold.
std::optional<Vec> reanchor(const Vec& gamma, int anchor);

/// Layer-1 rows are the re-anchored tuples times one guessed sign.
Matrix recover_layer1(const std::vector<const RecoveredTuple*>& tuples,
                      int sign_guess, int anchor);

/// Rows of layer i >= 2 solve the least-squares system
/// C_prev^T w = sign * gamma_anchored, one per assigned tuple.
/// c_prev is the cumulative product of the recovered layers (d_{i-1} x d_0).
/// sign_guess is ignored for the output layer (pass +1).
std::optional<Matrix> recover_layer_weights(
    const std::vector<const RecoveredTuple*>& tuples, const Matrix& c_prev,
    int sign_guess, int anchor);

/// All biases at once from f(x) = 0 at the n+1 selected points under their
/// assigned plans. Nullopt when the (n+1)x(n+1) system is singular.
std::optional<std::vector<Vec>> recover_biases(
    const Architecture& arch, const std::vector<Matrix>& weights,
    const std::vector<const RecoveredTuple*>& points,
    const std::vector<ActivationPattern>& plans);

// ---------------------------------------------------------------------------
// Candidate filters
// ---------------------------------------------------------------------------

struct FilterConfig {
  CompareConfig cmp{1e-4, 1};       // phi base + d_phi
  double adaptive_fraction = 0.95;  // of N_valid
  int pmr_samples = 1024;           // fresh metered samples for ranking
  std::size_t pattern_budget = 1u << 16;
};

enum class Verdict { Pass, Fail, Unfiltered };

/// Adaptive signature test: each recovered tuple seen more than once must
/// match some element of the candidate's own normalized signature; passing
/// needs at least adaptive_fraction * N_valid matches. Unfiltered when the
/// candidate's pattern count exceeds the budget (never a false reject).
Verdict signature_filter(const ModelParameters& extracted,
                         const std::vector<RecoveredTuple>& recovered,
                         const FilterConfig& cfg);

/// Recomputes the suffix factors G^{(i)} under each layer plan and checks
/// (a) all d_i entries carry one common sign, (b) it equals the guess,
/// (c) that sign opposes the downstream bias constant, which is what makes
/// the planned neuron activatable at a boundary point.
bool sign_filter(const ModelParameters& extracted,
                 const std::vector<int>& sign_guesses, bool relaxed,
                 double z = kZeroThreshold);

/// Fraction of matching hard labels over `samples` inputs uniform in the
/// [-R, R]^d cube. Direct model evaluation, no oracle involved.
double pmr(const ModelParameters& a, const ModelParameters& b, int samples,
           std::uint64_t seed, double domain_radius);

// ---------------------------------------------------------------------------
// Full attack
// ---------------------------------------------------------------------------

struct AttackConfig {
  std::uint64_t seed = 1;
  double epsilon = 1e-12;  // boundary-search precision
  double domain_radius = 1.0;
  int points_multiplier = 8;  // c_n: collect c_n * 2^n boundary points
  double probe_stride = 0.0;  // <= 0: auto_probe_stride
  double phi = 1e-4;
  int d_phi = -1;  // < 0: max(1, d_0 / 100)
  double majority_margin = 3.0;
  double adaptive_fraction = 0.95;
  int pmr_samples = 1024;
  std::size_t reservoir = 8192;
  long max_candidates = 1000000;
  bool early_exit = false;
  bool relaxed_plan = false;
  int threads = 1;
  std::size_t pattern_budget = 1u << 16;
  int max_expansions = 40;
  double initial_stride = 0.0;
};

enum class AttackStatus { Success, InsufficientData, NoSurvivor };

struct AttackReport {
  std::string arch;
  double epsilon = 0, domain_radius = 0, probe_stride = 0, phi = 0;
  int points_multiplier = 0, d_phi = 0;
  std::uint64_t seed = 0;
  std::uint64_t query_count = 0;
  int points_requested = 0, points_found = 0, points_failed = 0;
  int tuples_recovered = 0;
  int tuples_after_dedup = 0;  // N
  int n_valid = 0;
  int anchor = -1;
  long candidates_enumerated = 0;
  long rejected_anchor = 0, rejected_degenerate = 0, rejected_singular = 0;
  long signature_passed = 0, sign_passed = 0, survivors = 0;
  double best_pmr = -1.0;
  long best_candidate_index = -1;
  double wall_seconds = 0.0;
  std::string status;
  std::string message;

  std::string to_text() const;
};

struct AttackResult {
  AttackStatus status = AttackStatus::InsufficientData;
  std::optional<ModelParameters> model;
  std::vector<int> sign_guesses;
  AttackReport report;
  std::vector<RecoveredTuple> tuples;  // deduplicated transcript
};

/// Steps 1-5: collect boundary points, recover + dedup tuples, enumerate
/// (plan assignment x sign guess) candidates, recover weights and biases,
/// filter, and rank survivors by prediction matching ratio.
/// `resume_tuples`, when non-empty, skips Steps 1-2.
AttackResult run_attack(HardLabelOracle& oracle, const Architecture& arch,
                        const AttackConfig& cfg,
                        std::vector<RecoveredTuple> resume_tuples = {});

}  // namespace hlx
