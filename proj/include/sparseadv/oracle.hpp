#ifndef SPARSEADV_ORACLE_HPP
#define SPARSEADV_ORACLE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sparseadv/image.hpp"

namespace sparseadv {

inline constexpr std::uint64_t kUnlimitedBudget =
    std::numeric_limits<std::uint64_t>::max();

struct OracleVerdict {
  int label = -1;
  std::vector<double> scores;  // optional; attacks never read them
};

// Monotone query counter. One ledger belongs to one attack run; campaigns
// aggregate by summing after the runs join.
class QueryLedger {
 public:
  explicit QueryLedger(std::uint64_t budget = kUnlimitedBudget)
      : budget_(budget) {}

  std::uint64_t used() const { return used_; }
  std::uint64_t budget() const { return budget_; }
  bool exhausted() const { return used_ >= budget_; }

 private:
  friend OracleVerdict classify(const class Oracle&, const ImageTensor&,
                                QueryLedger&);
  std::uint64_t used_ = 0;
  std::uint64_t budget_;
};

// Black-box classifier. Callers get labels only through classify(), which
// charges the ledger; predict() stays out of reach of attack code.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual int num_classes() const = 0;

 protected:
  virtual OracleVerdict predict(const ImageTensor& img) const = 0;
  friend OracleVerdict classify(const Oracle&, const ImageTensor&,
                                QueryLedger&);
};

// Throws BudgetError when the ledger is exhausted, leaving `used` untouched;
// otherwise returns the verdict and charges exactly one query.
OracleVerdict classify(const Oracle& oracle, const ImageTensor& img,
                       QueryLedger& ledger);

// Nearest-centroid reference classifier: one mean pixel vector per class,
// label = argmin Euclidean distance, ties to the lowest class index.
struct CentroidModel {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::MatrixXd centroids;  // pixel_count x num_classes

  int num_classes() const { return static_cast<int>(centroids.cols()); }
  Eigen::Index pixel_count() const { return centroids.rows(); }
};

// Per-class mean of the training vectors. Every class in [0, max_label]
// needs at least one sample; an empty class throws TrainingError.
CentroidModel train_centroid(const std::vector<ImageTensor>& images,
                             const std::vector<int>& labels);

std::string centroid_model_to_json(const CentroidModel& model);
CentroidModel centroid_model_from_json(const std::string& text);

class CentroidOracle final : public Oracle {
 public:
  explicit CentroidOracle(CentroidModel model) : model_(std::move(model)) {}

  int num_classes() const override { return model_.num_classes(); }

 protected:
  OracleVerdict predict(const ImageTensor& img) const override;

 private:
  CentroidModel model_;
};

}  // namespace sparseadv

#endif  // SPARSEADV_ORACLE_HPP
