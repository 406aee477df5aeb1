#include "pomp/extract.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pomp/errors.hpp"

namespace pomp {

using json = nlohmann::json;

Quantizer Quantizer::Calibrate(const std::vector<Eigen::VectorXd>& features, int h) {
  if (features.empty()) throw NotCalibrated("calibration needs at least one feature vector");
  const Eigen::Index dim = features.front().size();
  if (h < 1 || h > dim) throw ConfigError("quantizer: h must be in [1, feature size]");
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& f : features) second += f * f.transpose();
  second /= static_cast<double>(features.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second);
  Quantizer q;
  q.projection_.resize(dim, h);
  // Eigenvalues ascend; take the top h. The sign is fixed so the largest
  // magnitude entry of each axis is positive.
  for (int j = 0; j < h; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(dim - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    q.projection_.col(j) = v;
  }
  q.thresholds_.resize(h);
  const double n = static_cast<double>(features.size());
  for (int j = 0; j < h; ++j) {
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& f : features) {
      const double y = q.projection_.col(j).dot(f);
      sum += y;
      sq += y * y;
    }
    const double mean = sum / n;
    const double var = features.size() > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
    q.thresholds_(j) = 0.5 * std::sqrt(var);
  }
  q.calibrated_ = true;
  return q;
}

QuantizedObservation Quantizer::Quantize(const Eigen::VectorXd& features) const {
  if (!calibrated_) throw NotCalibrated("quantizer used before calibration");
  const Eigen::VectorXd y = projection_.transpose() * features;
  QuantizedObservation q(static_cast<std::size_t>(h()));
  for (int j = 0; j < h(); ++j) {
    const double t = thresholds_(j);
    q[static_cast<std::size_t>(j)] = y(j) > t ? 1 : (y(j) < -t ? -1 : 0);
  }
  return q;
}

Eigen::VectorXd Quantizer::Representative(const QuantizedObservation& q) const {
  if (!calibrated_) throw NotCalibrated("quantizer used before calibration");
  Eigen::VectorXd y(h());
  for (int j = 0; j < h(); ++j) {
    const double t = thresholds_(j);
    y(j) = q[static_cast<std::size_t>(j)] * (t > 0.0 ? 2.0 * t : 1.0);
  }
  return projection_ * y;
}

bool operator==(const Quantizer& a, const Quantizer& b) {
  return a.calibrated() == b.calibrated() && a.projection() == b.projection() &&
         a.thresholds() == b.thresholds();
}

std::vector<DecisionEpisode> CollectDecisions(const ProgramMachinePolicy& policy,
                                              const TaskFactory& factory,
                                              const std::vector<std::uint64_t>& seeds,
                                              const RolloutOptions& options, ExecPolicy exec) {
  std::vector<DecisionEpisode> out(seeds.size());
  ParallelFor(
      static_cast<int>(seeds.size()),
      [&](int i) {
        auto task = factory(seeds[static_cast<std::size_t>(i)]);
        DecisionEpisode& ep = out[static_cast<std::size_t>(i)];
        Rollout(
            policy.modes(),
            [&](const GridWorld& world, int current) {
              const ForwardCache f =
                  policy.net().Forward(EncodeObservation(world), {policy.ModeInput(current)});
              Eigen::Index best = 0;
              f.probs.col(0).maxCoeff(&best);
              ep.push_back({f.features.col(0), current, static_cast<int>(best)});
              return static_cast<int>(best);
            },
            *task, options);
      },
      exec);
  return out;
}

int ExtractedMachine::ClassOf(const QuantizedObservation& q) const {
  const auto it = std::find(classes_.begin(), classes_.end(), q);
  return it == classes_.end() ? -1 : static_cast<int>(it - classes_.begin());
}

int ExtractedMachine::Lookup(const Table& table, int state, const QuantizedObservation& q,
                             const std::vector<QuantizedObservation>& classes, int fallback) {
  int best_class = -1;
  int best_distance = 0;
  for (auto it = table.lower_bound({state, 0}); it != table.end() && it->first.first == state;
       ++it) {
    const QuantizedObservation& c = classes[static_cast<std::size_t>(it->first.second)];
    int d = 0;
    for (std::size_t j = 0; j < q.size(); ++j) d += c[j] != q[j];
    if (d == 0) return it->second;
    if (best_class < 0 || d < best_distance) {
      best_class = it->first.second;
      best_distance = d;
    }
  }
  return best_class < 0 ? fallback : table.at({state, best_class});
}

int ExtractedMachine::Predict(int current_mode, const Eigen::VectorXd& features) const {
  return Lookup(minimized_, BlockOf(current_mode), quantizer_.Quantize(features), classes_,
                fallback_);
}

int ExtractedMachine::PredictRaw(int current_mode, const Eigen::VectorXd& features) const {
  return Lookup(raw_, current_mode + 1, quantizer_.Quantize(features), classes_, fallback_);
}

ExtractedMachine BuildTable(const ProgramMachinePolicy& policy,
                            const std::vector<DecisionEpisode>& episodes, int h) {
  std::vector<Eigen::VectorXd> features;
  for (const auto& ep : episodes)
    for (const auto& d : ep) features.push_back(d.features);
  if (features.empty()) throw NotCalibrated("extraction needs at least one decision");

  ExtractedMachine m;
  m.mode_count_ = policy.mode_count();
  m.quantizer_ = Quantizer::Calibrate(features, h);
  const int states = m.mode_count_ + 1;
  const int choices = m.mode_count_ + 1;

  // Votes per (state, class, choice).
  std::map<std::pair<int, int>, std::vector<long>> votes;
  std::vector<long> totals(static_cast<std::size_t>(choices), 0);
  for (const auto& ep : episodes) {
    for (const auto& d : ep) {
      const QuantizedObservation q = m.quantizer_.Quantize(d.features);
      int cls = m.ClassOf(q);
      if (cls < 0) {
        m.classes_.push_back(q);
        cls = static_cast<int>(m.classes_.size()) - 1;
      }
      auto& v = votes[{d.current_mode + 1, cls}];
      v.resize(static_cast<std::size_t>(choices), 0);
      ++v[static_cast<std::size_t>(d.choice)];
      ++totals[static_cast<std::size_t>(d.choice)];
    }
  }
  m.fallback_ = static_cast<int>(std::max_element(totals.begin(), totals.end()) - totals.begin());
  for (const auto& [key, v] : votes) {
    const auto best = std::max_element(v.begin(), v.end());
    m.raw_[key] = static_cast<int>(best - v.begin());
    if (std::count_if(v.begin(), v.end(), [](long c) { return c > 0; }) > 1) ++m.conflicts_;
  }

  // Partition refinement: states start together and split while their
  // (class -> choice, class -> block of next state) rows differ.
  std::vector<int> block(static_cast<std::size_t>(states), 0);
  while (true) {
    std::map<std::vector<std::pair<int, int>>, int> ids;
    std::vector<int> next(static_cast<std::size_t>(states));
    for (int s = 0; s < states; ++s) {
      std::vector<std::pair<int, int>> sig{{-1, block[static_cast<std::size_t>(s)]}};
      for (auto it = m.raw_.lower_bound({s, 0}); it != m.raw_.end() && it->first.first == s;
           ++it) {
        const int c = it->second;
        const int target = c < m.mode_count_ ? block[static_cast<std::size_t>(c + 1)] : -1;
        sig.push_back({it->first.second, c});
        sig.push_back({-2, target});
      }
      const auto [pos, inserted] = ids.try_emplace(sig, static_cast<int>(ids.size()));
      next[static_cast<std::size_t>(s)] = pos->second;
    }
    const bool stable = ids.size() == std::set<int>(block.begin(), block.end()).size();
    block = next;
    if (stable) break;
  }
  m.block_of_ = block;
  m.state_count_ = *std::max_element(block.begin(), block.end()) + 1;
  for (const auto& [key, choice] : m.raw_)
    m.minimized_.try_emplace({block[static_cast<std::size_t>(key.first)], key.second}, choice);
  return m;
}

namespace {

std::string ChoiceName(int choice, int mode_count) {
  return choice == mode_count ? "term" : "M" + std::to_string(choice + 1);
}

std::string ClassName(int cls) { return "O" + std::to_string(cls + 1); }

}  // namespace

std::string ExtractedMachine::ToDot() const {
  std::ostringstream out;
  out << "digraph machine {\n  rankdir=LR;\n";
  std::vector<std::string> labels(static_cast<std::size_t>(state_count_));
  for (int s = 0; s <= mode_count_; ++s) {
    std::string& l = labels[static_cast<std::size_t>(block_of_[static_cast<std::size_t>(s)])];
    if (!l.empty()) l += ",";
    l += s == 0 ? "init" : ChoiceName(s - 1, mode_count_);
  }
  for (int b = 0; b < state_count_; ++b)
    out << "  S" << b << " [label=\"" << labels[static_cast<std::size_t>(b)] << "\"];\n";
  out << "  term [shape=doublecircle];\n";
  // Group parallel edges so each arrow carries all of its classes.
  std::map<std::pair<int, int>, std::vector<int>> edges;
  for (const auto& [key, choice] : minimized_) {
    const int target = choice == mode_count_ ? -1 : BlockOf(choice);
    edges[{key.first, target}].push_back(key.second);
  }
  for (const auto& [edge, classes] : edges) {
    out << "  S" << edge.first << " -> " << (edge.second < 0 ? "term" : "S" + std::to_string(edge.second))
        << " [label=\"";
    for (std::size_t i = 0; i < classes.size(); ++i)
      out << (i ? "," : "") << ClassName(classes[i]);
    out << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string ExtractedMachine::ToJson() const {
  json j;
  j["version"] = 1;
  j["h"] = h();
  j["mode_count"] = mode_count_;
  j["classes"] = classes_;
  j["thresholds"] = std::vector<double>(quantizer_.thresholds().data(),
                                        quantizer_.thresholds().data() + h());
  j["state_of_mode"] = json::object();
  for (int s = 0; s <= mode_count_; ++s)
    j["state_of_mode"][s == 0 ? "init" : ChoiceName(s - 1, mode_count_)] =
        block_of_[static_cast<std::size_t>(s)];
  j["states"] = state_count_;
  j["conflicts"] = conflicts_;
  json rows = json::array();
  for (const auto& [key, choice] : minimized_)
    rows.push_back({{"state", key.first}, {"class", ClassName(key.second)},
                    {"next", ChoiceName(choice, mode_count_)}});
  j["transitions"] = rows;
  return j.dump(2) + "\n";
}

std::pair<double, double> WilsonInterval(long successes, long trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

FidelityReport Fidelity(const ExtractedMachine& machine,
                        const std::vector<DecisionEpisode>& episodes) {
  FidelityReport r;
  for (const auto& ep : episodes) {
    for (const auto& d : ep) {
      ++r.total;
      if (machine.Predict(d.current_mode, d.features) == d.choice) ++r.agree;
    }
  }
  if (r.total == 0) return r;
  r.rate = static_cast<double>(r.agree) / static_cast<double>(r.total);
  std::tie(r.ci_low, r.ci_high) = WilsonInterval(r.agree, r.total);
  return r;
}

}  // namespace pomp
