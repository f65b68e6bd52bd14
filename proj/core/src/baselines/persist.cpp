#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"
#include "json.hpp"

namespace coastal::baselines {

using json = nlohmann::json;

namespace {

BlobEntry to_blob(const std::string& name, const Matrix& m) {
  BlobEntry e;
  e.name = name;
  e.shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  e.initializer = "fitted";
  e.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) e.data.push_back(static_cast<float>(m(r, c)));
  }
  return e;
}

BlobEntry to_blob(const std::string& name, const Vector& v) { return to_blob(name, Matrix(v.transpose())); }

Matrix to_matrix(const BlobEntry& e) {
  if (e.shape.size() != 2) throw LoadError("baseline tensor '" + e.name + "' is not two-dimensional");
  Matrix m(e.shape[0], e.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = e.data.at(k++);
  }
  return m;
}

Vector to_vector(const BlobEntry& e) {
  const Matrix m = to_matrix(e);
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

Artifacts NaivePredictor::export_artifacts() const {
  Artifacts a;
  a.scalars["d_x"] = static_cast<double>(d_x_);
  Vector seg(static_cast<Eigen::Index>(segment_.size()));
  for (std::size_t k = 0; k < segment_.size(); ++k) seg[static_cast<Eigen::Index>(k)] = segment_[k];
  a.tensors.push_back(to_blob("segments", seg));
  a.tensors.push_back(to_blob("means", means_));
  return a;
}

NaivePredictor NaivePredictor::from_artifacts(const Artifacts& a) {
  NaivePredictor m;
  m.d_x_ = static_cast<std::size_t>(a.scalar("d_x"));
  const Vector seg = to_vector(a.tensor("segments"));
  for (Eigen::Index k = 0; k < seg.size(); ++k) m.segment_.push_back(static_cast<int>(seg[k]));
  m.means_ = to_vector(a.tensor("means"));
  if (m.means_.size() != seg.size()) throw LoadError("naive predictor: means and segments differ in length");
  return m;
}

Artifacts LinearModel::export_artifacts() const {
  Artifacts a;
  a.scalars["poly"] = poly_ ? 1.0 : 0.0;
  a.tensors.push_back(to_blob("coef", coef_));
  return a;
}

LinearModel LinearModel::from_artifacts(const Artifacts& a) {
  return LinearModel(to_matrix(a.tensor("coef")), a.scalar("poly") != 0.0);
}

Artifacts SvrModel::export_artifacts() const {
  Artifacts a;
  a.tensors.push_back(to_blob("weights", weights_));
  a.tensors.push_back(to_blob("bias", bias_));
  return a;
}

SvrModel SvrModel::from_artifacts(const Artifacts& a) {
  return SvrModel(to_matrix(a.tensor("weights")), to_vector(a.tensor("bias")));
}

Artifacts KrigingPcaModel::export_artifacts() const {
  Artifacts a;
  a.scalars["d_x"] = static_cast<double>(d_x_);
  a.scalars["q"] = static_cast<double>(components_.size());
  a.scalars["rank"] = static_cast<double>(basis_.rank);
  a.tensors.push_back(to_blob("pca.mean", basis_.mean));
  a.tensors.push_back(to_blob("pca.components", basis_.components));
  a.tensors.push_back(to_blob("pca.explained", basis_.explained));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const std::string pre = "gp" + std::to_string(k) + ".";
    a.tensors.push_back(to_blob(pre + "inputs", c.inputs()));
    a.tensors.push_back(to_blob(pre + "targets", c.targets()));
    a.tensors.push_back(to_blob(pre + "lengths", c.lengths()));
    a.scalars[pre + "nugget"] = c.nugget();
  }
  return a;
}

KrigingPcaModel KrigingPcaModel::from_artifacts(const Artifacts& a) {
  PcaBasis b;
  b.mean = to_vector(a.tensor("pca.mean"));
  b.components = to_matrix(a.tensor("pca.components"));
  b.explained = to_vector(a.tensor("pca.explained"));
  b.rank = static_cast<std::size_t>(a.scalar("rank"));
  const auto q = static_cast<std::size_t>(a.scalar("q"));
  std::vector<KrigingComponent> comps;
  for (std::size_t k = 0; k < q; ++k) {
    const std::string pre = "gp" + std::to_string(k) + ".";
    KrigingOptions opts;
    comps.emplace_back(to_matrix(a.tensor(pre + "inputs")), to_vector(a.tensor(pre + "targets")),
                       to_vector(a.tensor(pre + "lengths")), opts, a.scalar(pre + "nugget"));
  }
  return KrigingPcaModel(std::move(b), std::move(comps), static_cast<std::size_t>(a.scalar("d_x")));
}

void save_model(const Model& model, const std::filesystem::path& dir) {
  Artifacts a = model.export_artifacts();
  json meta;
  meta["method"] = std::string(model.method());
  meta["input_dim"] = model.input_dim();
  meta["output_dim"] = model.output_dim();
  meta["scalars"] = a.scalars;
  meta["strings"] = a.strings;
  meta["diagnostics"] = {{"values", model.diagnostics.values}, {"warnings", model.diagnostics.warnings}};
  BlobBundle bundle;
  bundle.metadata_json = meta.dump();
  bundle.tensors = std::move(a.tensors);
  write_blob_bundle(dir, bundle);
}

std::unique_ptr<Model> load_model(const std::filesystem::path& dir) {
  BlobBundle bundle = read_blob_bundle(dir);
  Artifacts a;
  std::string method;
  FitDiagnostics diag;
  try {
    const json meta = json::parse(bundle.metadata_json);
    method = meta.at("method").get<std::string>();
    a.scalars = meta.at("scalars").get<std::map<std::string, double>>();
    a.strings = meta.value("strings", json::object()).get<std::map<std::string, std::string>>();
    if (meta.contains("diagnostics")) {
      diag.values = meta["diagnostics"].value("values", json::object()).get<std::map<std::string, double>>();
      diag.warnings = meta["diagnostics"].value("warnings", json::array()).get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("baseline manifest: ") + e.what());
  }
  a.tensors = std::move(bundle.tensors);
  std::unique_ptr<Model> out;
  if (method == "naive") {
    out = std::make_unique<NaivePredictor>(NaivePredictor::from_artifacts(a));
  } else if (method == "linear" || method == "lasso") {
    out = std::make_unique<LinearModel>(LinearModel::from_artifacts(a));
  } else if (method == "svr") {
    out = std::make_unique<SvrModel>(SvrModel::from_artifacts(a));
  } else if (method == "kriging") {
    out = std::make_unique<KrigingPcaModel>(KrigingPcaModel::from_artifacts(a));
  } else {
    throw LoadError("unknown baseline method '" + method + "'");
  }
  out->diagnostics = std::move(diag);
  return out;
}

}  // namespace coastal::baselines
