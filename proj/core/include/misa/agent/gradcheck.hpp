#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misa/agent/agent.hpp"

namespace misa::agent {

enum class QShape { Random, Zero, Peaked };
const char* q_shape_name(QShape shape) noexcept;
QShape parse_q_shape(const std::string& name);

// 1-D state, 1-D squashed action.
struct GradcheckConfig {
  std::size_t points = 20;
  // Improved-policy samples per state.
  std::size_t samples = 10000;
  std::size_t batch = 8;
  std::size_t grid = 4001;
  QShape q = QShape::Random;
  // Output-layer scale of the peaked critic.
  double peak_scale = 25.0;
  MiGradMode mi_grad = MiGradMode::UnbiasedMcmc;
  mi::BoundKind bound = mi::BoundKind::Misa;
  mcmc::HmcConfig hmc{5, 2, 1.0, 100};
  std::vector<std::size_t> hidden = {16};
  std::uint64_t seed = 0;
  double pass_min_cosine = 0.95;
  double pass_mean_cosine = 0.99;
};

struct GradcheckProblem {
  TrainConfig config;
  TrainState state;
  data::Batch batch;
};

// Random policy, critic and batch for parameter point `index`.
GradcheckProblem gradcheck_problem(const GradcheckConfig& config, std::size_t index);

// Exact gradient of -gamma2 * (MI bound) w.r.t. the policy for 1-D actions:
// the improved-policy expectation is a quadrature over `grid` pre-squash points.
ad::MlpParams quadrature_mi_gradient(const TrainConfig& config, const TrainState& state,
                                     const data::Batch& batch, std::size_t grid);

double cosine_similarity(const ad::MlpParams& a, const ad::MlpParams& b);

struct GradcheckReport {
  std::vector<double> cosines;
  double mean_cosine = 0.0;
  double min_cosine = 0.0;
  bool pass = false;
};

GradcheckReport run_gradcheck(const GradcheckConfig& config);

}  // namespace misa::agent
