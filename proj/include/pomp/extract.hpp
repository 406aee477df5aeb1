#ifndef POMP_EXTRACT_HPP_
#define POMP_EXTRACT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pomp/machine.hpp"

namespace pomp {

// h entries, each -1, 0 or 1.
using QuantizedObservation = std::vector<int>;

// Uncentered PCA projection of the feature vector followed by a three-level
// threshold at half the calibration standard deviation of each component.
class Quantizer {
 public:
  Quantizer() = default;
  static Quantizer Calibrate(const std::vector<Eigen::VectorXd>& features, int h);

  bool calibrated() const { return calibrated_; }
  int h() const { return static_cast<int>(thresholds_.size()); }
  const Eigen::MatrixXd& projection() const { return projection_; }  // feature_dim x h
  const Eigen::VectorXd& thresholds() const { return thresholds_; }

  QuantizedObservation Quantize(const Eigen::VectorXd& features) const;  // throws NotCalibrated
  // A feature vector that quantizes to q.
  Eigen::VectorXd Representative(const QuantizedObservation& q) const;

 private:
  Eigen::MatrixXd projection_;
  Eigen::VectorXd thresholds_;
  bool calibrated_ = false;
};

struct DecisionRecord {
  Eigen::VectorXd features;
  int current_mode = kInitMode;
  int choice = 0;  // argmax of the net; |M| is term
};
using DecisionEpisode = std::vector<DecisionRecord>;

// Greedy rollouts on factory(seed) for each seed, recording every decision.
std::vector<DecisionEpisode> CollectDecisions(const ProgramMachinePolicy& policy,
                                              const TaskFactory& factory,
                                              const std::vector<std::uint64_t>& seeds,
                                              const RolloutOptions& options = {},
                                              ExecPolicy exec = ExecPolicy::kParallel);

class ExtractedMachine {
 public:
  int mode_count() const { return mode_count_; }
  int h() const { return quantizer_.h(); }
  const Quantizer& quantizer() const { return quantizer_; }
  const std::vector<QuantizedObservation>& classes() const { return classes_; }
  // Machine states (init plus modes) before and after minimization.
  int raw_state_count() const { return mode_count_ + 1; }
  int state_count() const { return state_count_; }
  int BlockOf(int mode) const { return block_of_[static_cast<std::size_t>(mode + 1)]; }
  // Table rows whose recorded choices disagreed; the majority won.
  int conflicts() const { return conflicts_; }

  // Index of the class, or -1 when unseen.
  int ClassOf(const QuantizedObservation& q) const;
  // Next choice from the minimized machine. Unseen classes use the nearest
  // class (Hamming distance) defined for the state.
  int Predict(int current_mode, const Eigen::VectorXd& features) const;
  // Same lookup on the unminimized table.
  int PredictRaw(int current_mode, const Eigen::VectorXd& features) const;

  std::string ToDot() const;
  std::string ToJson() const;

  friend ExtractedMachine BuildTable(const ProgramMachinePolicy& policy,
                                     const std::vector<DecisionEpisode>& episodes, int h);
  friend bool operator==(const ExtractedMachine&, const ExtractedMachine&) = default;

 private:
  using Table = std::map<std::pair<int, int>, int>;
  static int Lookup(const Table& table, int state, const QuantizedObservation& q,
                    const std::vector<QuantizedObservation>& classes, int fallback);

  int mode_count_ = 0;
  Quantizer quantizer_;
  std::vector<QuantizedObservation> classes_;
  Table raw_;          // (mode + 1, class) -> choice
  Table minimized_;    // (block, class) -> choice
  std::vector<int> block_of_;
  int state_count_ = 0;
  int conflicts_ = 0;
  int fallback_ = 0;   // most frequent choice overall
};

bool operator==(const Quantizer& a, const Quantizer& b);

ExtractedMachine BuildTable(const ProgramMachinePolicy& policy,
                            const std::vector<DecisionEpisode>& episodes, int h);

struct FidelityReport {
  long agree = 0;
  long total = 0;
  double rate = 0.0;
  double ci_low = 0.0;   // Wilson 95% interval
  double ci_high = 0.0;
};

// Wilson score interval at 95% confidence.
std::pair<double, double> WilsonInterval(long successes, long trials);

FidelityReport Fidelity(const ExtractedMachine& machine,
                        const std::vector<DecisionEpisode>& episodes);

}  // namespace pomp

#endif  // POMP_EXTRACT_HPP_
