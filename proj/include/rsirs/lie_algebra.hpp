#pragma once

// Lie brackets of the regime vector fields, the bracket-rank test at a
// point, and sampling of the set Γ reachable from the endemic equilibrium.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsirs/core_model.hpp"
#include "rsirs/dynamics.hpp"
#include "rsirs/errors.hpp"
#include "rsirs/markov_chain.hpp"
#include "rsirs/parallel.hpp"
#include "rsirs/rng.hpp"

namespace rsirs {

/// Iterated bracket over regime indices, e.g. [Y1,[Y1,Y2]]. Leaves are bare
/// fields (depth 0).
class BracketWord {
 public:
  static BracketWord field(std::size_t regime) { return BracketWord(regime); }
  static BracketWord bracket(const BracketWord& a, const BracketWord& b) { return BracketWord(a, b); }

  bool is_field() const { return !left_; }
  std::size_t regime() const { return regime_; }
  const BracketWord& left() const { return *left_; }
  const BracketWord& right() const { return *right_; }
  std::size_t depth() const { return depth_; }

  /// 1-based rendering, e.g. "[Y1,Y2]".
  std::string to_string() const {
    if (is_field()) return "Y" + std::to_string(regime_ + 1);
    return "[" + left_->to_string() + "," + right_->to_string() + "]";
  }

 private:
  explicit BracketWord(std::size_t regime) : regime_(regime) {}
  BracketWord(const BracketWord& a, const BracketWord& b)
      : left_(std::make_shared<const BracketWord>(a)),
        right_(std::make_shared<const BracketWord>(b)),
        depth_(std::max(a.depth_, b.depth_) + 1) {}

  std::size_t regime_ = 0;
  std::shared_ptr<const BracketWord> left_;
  std::shared_ptr<const BracketWord> right_;
  std::size_t depth_ = 0;
};

inline Eigen::Vector3d word_value(const ModelParams& p, const IncidenceFunction& inc, const BracketWord& w,
                                  const Eigen::Vector3d& z);

namespace detail {

inline EpidemicState to_state(const Eigen::Vector3d& z) { return {z(0), z(1), z(2)}; }

/// Jacobian of a word: analytic for bare fields, nested central differences
/// (step 1e-5 |z|) for brackets.
inline Eigen::Matrix3d word_jacobian(const ModelParams& p, const IncidenceFunction& inc, const BracketWord& w,
                                     const Eigen::Vector3d& z) {
  if (w.is_field()) return jacobian(p, inc, w.regime(), to_state(z));
  const double h = 1e-5 * std::max(z.norm(), 1.0);
  Eigen::Matrix3d j;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d up = z, dn = z;
    up(k) += h;
    dn(k) = std::max(dn(k) - h, 0.0);
    j.col(k) = (word_value(p, inc, w, up) - word_value(p, inc, w, dn)) / (up(k) - dn(k));
  }
  return j;
}

}  // namespace detail

/// Value of a word at z; [a,b]_j = sum_k a_k d b_j/dx_k - b_k d a_j/dx_k.
inline Eigen::Vector3d word_value(const ModelParams& p, const IncidenceFunction& inc, const BracketWord& w,
                                  const Eigen::Vector3d& z) {
  if (w.is_field()) return field_vector(p, inc, w.regime(), z);
  const Eigen::Vector3d a = word_value(p, inc, w.left(), z);
  const Eigen::Vector3d b = word_value(p, inc, w.right(), z);
  return detail::word_jacobian(p, inc, w.right(), z) * a - detail::word_jacobian(p, inc, w.left(), z) * b;
}

inline Eigen::Vector3d lie_bracket(const ModelParams& p, const IncidenceFunction& inc, const BracketWord& a,
                                   const BracketWord& b, const EpidemicState& z) {
  return word_value(p, inc, BracketWord::bracket(a, b), {z.s, z.i, z.r});
}

struct BracketDeterminant {
  double closed_form = 0.0;
  double numeric = 0.0;
  /// |Y1| |Y2| |[Y1,Y2]|, an upper bound for |det|.
  double scale = 0.0;
};

/// det(Y1, Y2, [Y1,Y2]) for a two-regime model, in closed form
///   -[(β1-β2) S G(I)]^2 [μδ(Λ/μ - N) - α(μ+λ)R]
/// together with the numeric 3x3 determinant.
inline BracketDeterminant det_bracket_2regime(const ModelParams& p, const IncidenceFunction& inc,
                                              const EpidemicState& z) {
  if (p.regimes() != 2) throw Error(ErrorKind::unsupported, "closed-form bracket determinant needs exactly 2 regimes");
  const double lead = (p.betas[0] - p.betas[1]) * z.s * inc.G(z.i);
  const double tail =
      p.mu * p.delta * (p.carrying_population() - z.total()) - p.alpha * (p.mu + p.lambda_loss) * z.r;
  const Eigen::Vector3d x{z.s, z.i, z.r};
  Eigen::Matrix3d m;
  m.col(0) = field_vector(p, inc, 0, x);
  m.col(1) = field_vector(p, inc, 1, x);
  m.col(2) = lie_bracket(p, inc, BracketWord::field(0), BracketWord::field(1), z);
  return {-lead * lead * tail, m.determinant(), m.col(0).norm() * m.col(1).norm() * m.col(2).norm()};
}

/// Words of a given depth: bare fields, then [Y_i,Y_j] (i<j), then right-nested [Y_i, w].
inline std::vector<BracketWord> words_of_depth(std::size_t regimes, std::size_t depth) {
  std::vector<BracketWord> out;
  if (depth == 0) {
    for (std::size_t e = 0; e < regimes; ++e) out.push_back(BracketWord::field(e));
    return out;
  }
  if (depth == 1) {
    for (std::size_t i = 0; i < regimes; ++i)
      for (std::size_t j = i + 1; j < regimes; ++j)
        out.push_back(BracketWord::bracket(BracketWord::field(i), BracketWord::field(j)));
    return out;
  }
  for (const auto& inner : words_of_depth(regimes, depth - 1))
    for (std::size_t i = 0; i < regimes; ++i) out.push_back(BracketWord::bracket(BracketWord::field(i), inner));
  return out;
}

struct RankReport {
  std::size_t rank = 0;
  std::size_t depth = 0;  ///< deepest level evaluated
  std::size_t columns = 0;
  std::vector<BracketWord> witness_words;
  std::vector<double> singular_values;
};

namespace detail {

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

inline std::size_t numeric_rank(const Eigen::VectorXd& sv, double threshold) {
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > threshold) ++r;
  return r;
}

}  // namespace detail

/// Numerical rank of {Y_e(z)} plus all bracket words up to max_depth.
/// Levels are added whole and the search stops at the first level reaching
/// rank 3. Singular values at or below 1e-6 sigma_max count as zero.
inline RankReport condition_h_rank(const ModelParams& p, const IncidenceFunction& inc, const EpidemicState& z,
                                   std::size_t max_depth) {
  const Eigen::Vector3d x{z.s, z.i, z.r};
  std::vector<BracketWord> words;
  std::vector<Eigen::Vector3d> cols;
  RankReport rep;
  for (std::size_t depth = 0; depth <= max_depth; ++depth) {
    for (auto& w : words_of_depth(p.regimes(), depth)) {
      cols.push_back(word_value(p, inc, w, x));
      words.push_back(std::move(w));
    }
    Eigen::MatrixXd m(3, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = cols[c];
    const Eigen::VectorXd sv = detail::singular_values(m);
    const double threshold = sv.size() > 0 ? 1e-6 * sv(0) : 0.0;
    rep.depth = depth;
    rep.columns = cols.size();
    rep.rank = sv.size() > 0 && sv(0) > 0.0 ? detail::numeric_rank(sv, threshold) : 0;
    rep.singular_values.assign(sv.data(), sv.data() + sv.size());
    if (rep.rank == 3 || depth == max_depth) {
      rep.witness_words.clear();
      Eigen::MatrixXd kept(3, 0);
      std::size_t kept_rank = 0;
      for (std::size_t c = 0; c < cols.size() && kept_rank < rep.rank; ++c) {
        Eigen::MatrixXd trial(3, kept.cols() + 1);
        trial << kept, cols[c];
        const std::size_t r = detail::numeric_rank(detail::singular_values(trial), threshold);
        if (r > kept_rank) {
          kept = trial;
          kept_rank = r;
          rep.witness_words.push_back(words[c]);
        }
      }
      if (rep.rank == 3) break;
    }
  }
  return rep;
}

struct GammaWordStep {
  std::size_t regime = 0;
  double duration = 0.0;
};
using GammaWord = std::vector<GammaWordStep>;

struct GammaOptions {
  double mean_word_length = 10.0;           ///< geometric on {0,1,...}
  std::optional<std::size_t> fixed_length;  ///< overrides the geometric draw
  double min_duration = 1e-2;               ///< log-uniform durations (days)
  double max_duration = 1e2;
  OdeTolerances tol{};
  std::size_t threads = 1;
};

struct GammaSeed {
  std::size_t regime = 0;
  EpidemicState state;
};

struct GammaSample {
  GammaSeed seed;
  std::vector<EpidemicState> points;
  std::vector<GammaWord> words;
};

/// The endemic equilibrium of the first regime with R0^e > 1.
inline GammaSeed gamma_seed(const ModelParams& p, const IncidenceFunction& inc, OdeTolerances tol = {}) {
  for (std::size_t e = 0; e < p.regimes(); ++e) {
    if (deterministic_r0(p, inc, e) > 1.0) return {e, find_equilibrium(p, inc, e, tol).state};
  }
  throw Error(ErrorKind::cannot_seed_gamma, "no regime has R0^e > 1, so there is no endemic equilibrium to seed Gamma");
}

/// Composes the flows of `word` starting at `start`.
inline EpidemicState replay_gamma_word(const ModelParams& p, const IncidenceFunction& inc, const EpidemicState& start,
                                       const GammaWord& word, OdeTolerances tol = {}) {
  EpidemicState z = start;
  for (const auto& step : word) z = flow(p, inc, step.regime, z, step.duration, tol);
  return z;
}

/// Random admissible word: consecutive regimes differ and every move has q_{e,e'} > 0.
inline GammaWord draw_gamma_word(const CtmcGenerator& gen, std::size_t seed_regime, const GammaOptions& opt,
                                 RngStream& rng) {
  std::size_t length = 0;
  if (opt.fixed_length) {
    length = *opt.fixed_length;
  } else {
    const double stop = 1.0 / (1.0 + opt.mean_word_length);
    while (rng.uniform() > stop) ++length;
  }
  GammaWord word;
  std::size_t prev = seed_regime;
  const double log_lo = std::log(opt.min_duration);
  const double log_hi = std::log(opt.max_duration);
  for (std::size_t k = 0; k < length; ++k) {
    std::vector<std::size_t> moves;
    for (std::size_t e = 0; e < gen.regimes(); ++e)
      if (e != prev && gen.rate(prev, e) > 0.0) moves.push_back(e);
    if (moves.empty()) break;
    const auto pick = std::min(moves.size() - 1, static_cast<std::size_t>(rng.uniform() * moves.size()));
    prev = moves[pick];
    word.push_back({prev, std::exp(rng.uniform(log_lo, log_hi))});
  }
  return word;
}

/// Point k of the Γ sample drawn from stream (master_seed, k).
inline std::pair<EpidemicState, GammaWord> gamma_point(const ModelParams& p, const IncidenceFunction& inc,
                                                       const CtmcGenerator& gen, const GammaSeed& seed,
                                                       const GammaOptions& opt, std::uint64_t master_seed,
                                                       std::size_t k) {
  RngStream rng(master_seed, k);
  GammaWord word = draw_gamma_word(gen, seed.regime, opt, rng);
  return {replay_gamma_word(p, inc, seed.state, word, opt.tol), std::move(word)};
}

inline GammaSample sample_gamma(const ModelParams& p, const IncidenceFunction& inc, const CtmcGenerator& gen,
                                std::size_t n_points, const GammaOptions& opt, std::uint64_t master_seed) {
  if (!(opt.min_duration > 0.0 && opt.max_duration >= opt.min_duration && opt.mean_word_length >= 0.0))
    throw Error(ErrorKind::domain, "invalid Gamma sampling distribution parameters");
  GammaSample out;
  out.seed = gamma_seed(p, inc, opt.tol);
  auto pts = parallel_map<std::pair<EpidemicState, GammaWord>>(
      n_points, opt.threads, [&](std::size_t k) { return gamma_point(p, inc, gen, out.seed, opt, master_seed, k); });
  out.points.reserve(n_points);
  out.words.reserve(n_points);
  for (auto& [z, w] : pts) {
    out.points.push_back(z);
    out.words.push_back(std::move(w));
  }
  return out;
}

struct WitnessReport {
  bool found = false;
  std::size_t points_examined = 0;
  GammaSeed seed;
  EpidemicState point;
  GammaWord word;
  RankReport rank;
  std::optional<BracketDeterminant> determinant;
};

/// Searches Γ samples for a point where the bracket rank reaches 3, escalating
/// the depth from 1 to max_depth at each point. Not finding one within the
/// budget is a negative search result, not a proof that the condition fails.
inline WitnessReport find_condition_h_witness(const ModelParams& p, const IncidenceFunction& inc,
                                              const CtmcGenerator& gen, std::size_t budget, std::uint64_t master_seed,
                                              std::size_t max_depth = 3, const GammaOptions& opt = {}) {
  if (budget == 0) throw Error(ErrorKind::domain, "witness search budget must be positive");
  WitnessReport rep;
  if (p.regimes() < 2) return rep;
  rep.seed = gamma_seed(p, inc, opt.tol);
  for (std::size_t k = 0; k < budget; ++k) {
    auto [z, word] = gamma_point(p, inc, gen, rep.seed, opt, master_seed, k);
    rep.points_examined = k + 1;
    // condition_h_rank escalates level by level and stops at the first rank-3 level
    RankReport r = condition_h_rank(p, inc, z, std::max<std::size_t>(max_depth, 1));
    if (r.rank == 3) {
      rep.found = true;
      rep.point = z;
      rep.word = std::move(word);
      rep.rank = std::move(r);
      if (p.regimes() == 2) rep.determinant = det_bracket_2regime(p, inc, z);
      return rep;
    }
    if (k + 1 == budget) rep.rank = std::move(r);
  }
  return rep;
}

}  // namespace rsirs
