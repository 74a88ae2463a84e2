#include "sparseadv/oracle.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "sparseadv/error.hpp"

namespace sparseadv {

OracleVerdict classify(const Oracle& oracle, const ImageTensor& img,
                       QueryLedger& ledger) {
  if (ledger.exhausted()) {
    throw BudgetError("query budget of " + std::to_string(ledger.budget()) +
                      " exhausted");
  }
  OracleVerdict verdict = oracle.predict(img);
  if (verdict.label < 0 || verdict.label >= oracle.num_classes()) {
    throw Error("oracle produced label " + std::to_string(verdict.label) +
                " outside [0, " + std::to_string(oracle.num_classes()) + ")");
  }
  ledger.used_ += 1;
  return verdict;
}

CentroidModel train_centroid(const std::vector<ImageTensor>& images,
                             const std::vector<int>& labels) {
  if (images.empty()) throw TrainingError("no training samples");
  if (images.size() != labels.size()) {
    throw TrainingError("image/label count mismatch");
  }
  int num_classes = 0;
  for (int label : labels) {
    if (label < 0) throw TrainingError("negative class label");
    num_classes = std::max(num_classes, label + 1);
  }

  CentroidModel model;
  model.channels = images.front().channels;
  model.height = images.front().height;
  model.width = images.front().width;
  model.centroids =
      Eigen::MatrixXd::Zero(images.front().pixel_count(), num_classes);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images.front())) {
      throw TrainingError("training images have mixed dimensions");
    }
    model.centroids.col(labels[i]) += images[i].pixels;
    counts[static_cast<std::size_t>(labels[i])] += 1;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw TrainingError("class " + std::to_string(c) +
                          " has no training samples");
    }
    model.centroids.col(c) /=
        static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  return model;
}

namespace {

OracleVerdict predict_centroid(const CentroidModel& model,
                               const ImageTensor& img) {
  if (img.pixel_count() != model.pixel_count()) {
    throw ShapeError("image dimensionality does not match centroids");
  }
  OracleVerdict verdict;
  verdict.scores.resize(static_cast<std::size_t>(model.num_classes()));
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < model.num_classes(); ++c) {
    const double d2 = (img.pixels - model.centroids.col(c)).squaredNorm();
    verdict.scores[static_cast<std::size_t>(c)] = -d2;
    if (d2 < best) {  // strict: ties keep the lowest class index
      best = d2;
      verdict.label = c;
    }
  }
  return verdict;
}

}  // namespace

OracleVerdict CentroidOracle::predict(const ImageTensor& img) const {
  return predict_centroid(model_, img);
}

std::string centroid_model_to_json(const CentroidModel& model) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "centroid_model";
  j["channels"] = model.channels;
  j["height"] = model.height;
  j["width"] = model.width;
  j["classes"] = model.num_classes();
  auto& cs = j["centroids"] = nlohmann::ordered_json::array();
  for (int c = 0; c < model.num_classes(); ++c) {
    std::vector<double> col(model.centroids.col(c).data(),
                            model.centroids.col(c).data() +
                                model.centroids.rows());
    cs.push_back(col);
  }
  return j.dump(2);
}

CentroidModel centroid_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad centroid model: ") + e.what());
  }
  if (j.value("kind", "") != "centroid_model") {
    throw ParseError("not a centroid model file");
  }
  CentroidModel model;
  model.channels = j.at("channels").get<int>();
  model.height = j.at("height").get<int>();
  model.width = j.at("width").get<int>();
  const auto& cs = j.at("centroids");
  const int m = static_cast<int>(cs.size());
  if (m == 0) throw ParseError("centroid model has no classes");
  const Eigen::Index n =
      static_cast<Eigen::Index>(model.channels) * model.height * model.width;
  model.centroids.resize(n, m);
  for (int c = 0; c < m; ++c) {
    const auto col = cs[static_cast<std::size_t>(c)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(col.size()) != n) {
      throw ParseError("centroid length does not match dimensions");
    }
    model.centroids.col(c) =
        Eigen::Map<const Eigen::VectorXd>(col.data(), n);
  }
  return model;
}

}  // namespace sparseadv
