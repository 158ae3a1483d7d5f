#include "hdk/model_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hdk/errors.hpp"

namespace hdk {

namespace {

using nlohmann::json;

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

// Matrices carry their shape explicitly; data is row-major.
json matrix_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", a}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  int rows = j.at("rows").get<int>();
  int cols = j.at("cols").get<int>();
  const json& a = j.at("data");
  if (static_cast<int>(a.size()) != rows * cols)
    throw DataError("matrix data length does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  size_t k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = a[k++].get<double>();
  return m;
}

json hdda_to_json(const HddaClassModel& m) {
  return json{{"class_id", m.class_id},
              {"dim", m.dim},
              {"p_hat", m.p_hat},
              {"eigvals", vector_to_json(m.eigvals)},
              {"basis", matrix_to_json(m.basis)},
              {"noise", m.noise},
              {"mean", vector_to_json(m.mean)},
              {"sample_count", m.sample_count},
              {"noise_floored", m.noise_floored},
              {"degenerate_spectrum", m.degenerate_spectrum}};
}

HddaClassModel hdda_from_json(const json& j) {
  HddaClassModel m;
  m.class_id = j.at("class_id").get<int>();
  m.dim = j.at("dim").get<int>();
  m.p_hat = j.at("p_hat").get<int>();
  m.eigvals = vector_from_json(j.at("eigvals"));
  m.basis = matrix_from_json(j.at("basis"));
  m.noise = j.at("noise").get<double>();
  m.mean = vector_from_json(j.at("mean"));
  m.sample_count = j.at("sample_count").get<int>();
  m.noise_floored = j.at("noise_floored").get<bool>();
  m.degenerate_spectrum = j.at("degenerate_spectrum").get<bool>();
  return m;
}

json spec_to_json(const KernelSpec& s) {
  json j{{"family", family_name(s.family)}, {"weights", vector_to_json(s.weights)}};
  j["model"] = s.model ? hdda_to_json(*s.model) : json(nullptr);
  return j;
}

KernelSpec spec_from_json(const json& j) {
  KernelFamily family = family_from_name(j.at("family").get<std::string>());
  std::shared_ptr<const HddaClassModel> model;
  if (!j.at("model").is_null())
    model = std::make_shared<const HddaClassModel>(hdda_from_json(j.at("model")));
  return KernelSpec::from_weights(family, std::move(model),
                                  vector_from_json(j.at("weights")));
}

json classifier_to_json(const BinaryClassifier& c) {
  // compact to the support set, ascending index order
  const auto& sv = c.solution.support_indices;
  Eigen::MatrixXd vectors(sv.size(), c.train_X.cols());
  Eigen::VectorXd alpha(sv.size());
  json labels = json::array();
  for (size_t r = 0; r < sv.size(); ++r) {
    vectors.row(r) = c.train_X.row(sv[r]);
    alpha[r] = c.solution.alpha[sv[r]];
    labels.push_back(c.train_y[sv[r]]);
  }
  return json{{"positive_class", c.positive_class},
              {"C", c.C},
              {"kernel", spec_to_json(c.spec)},
              {"bias", c.solution.bias},
              {"objective", c.solution.objective},
              {"margin_sq", c.solution.margin_sq},
              {"kkt_residual", c.solution.kkt_residual},
              {"converged", c.solution.converged},
              {"support_alpha", vector_to_json(alpha)},
              {"support_labels", labels},
              {"support_vectors", matrix_to_json(vectors)},
              {"train_seconds", c.train_seconds},
              {"tuning", json{{"accepted_steps", c.trace.records.empty()
                                                     ? 0
                                                     : c.trace.records.size() - 1},
                              {"stop_reason", stop_reason_name(c.trace.reason)},
                              {"final_T", c.trace.records.empty()
                                              ? 0.0
                                              : c.trace.records.back().T}}}};
}

BinaryClassifier classifier_from_json(const json& j) {
  BinaryClassifier c;
  c.positive_class = j.at("positive_class").get<int>();
  c.C = j.at("C").get<double>();
  c.spec = spec_from_json(j.at("kernel"));
  c.train_X = matrix_from_json(j.at("support_vectors"));
  const json& labels = j.at("support_labels");
  c.train_y.resize(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) c.train_y[i] = labels[i].get<int>();
  c.solution.alpha = vector_from_json(j.at("support_alpha"));
  c.solution.bias = j.at("bias").get<double>();
  c.solution.objective = j.at("objective").get<double>();
  c.solution.margin_sq = j.at("margin_sq").get<double>();
  c.solution.kkt_residual = j.at("kkt_residual").get<double>();
  c.solution.converged = j.at("converged").get<bool>();
  for (int i = 0; i < c.solution.alpha.size(); ++i)
    c.solution.support_indices.push_back(i);
  c.train_seconds = j.value("train_seconds", 0.0);
  return c;
}

}  // namespace

void save_model(const MulticlassModel& model, const std::string& path) {
  json payload;
  payload["family"] = family_name(model.family);
  payload["dim"] = model.dim;
  if (model.standardizer) {
    payload["standardizer"] = json{{"mean", vector_to_json(model.standardizer->mean)},
                                   {"scale", vector_to_json(model.standardizer->scale)}};
  } else {
    payload["standardizer"] = nullptr;
  }
  json classifiers = json::array();
  for (const auto& c : model.classifiers) classifiers.push_back(classifier_to_json(c));
  payload["classifiers"] = std::move(classifiers);

  std::string payload_text = payload.dump();
  json doc{{"format", kModelFormat},
           {"checksum", fnv1a64_hex(payload_text)},
           {"payload", std::move(payload)}};

  // write to a temp file, rename on success
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << doc.dump(1) << '\n';
    if (!out) throw DataError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, target);
}

MulticlassModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is corrupt or truncated: " +
                    e.what());
  }
  try {
    std::string format = doc.at("format").get<std::string>();
    if (format != kModelFormat)
      throw DataError("unsupported model format version '" + format +
                      "' (this build reads " + kModelFormat + ")");
    std::string payload_text = doc.at("payload").dump();
    if (fnv1a64_hex(payload_text) != doc.at("checksum").get<std::string>())
      throw DataError("model file '" + path + "' failed its integrity check");

    const json& payload = doc.at("payload");
    MulticlassModel model;
    model.family = family_from_name(payload.at("family").get<std::string>());
    model.dim = payload.at("dim").get<int>();
    if (!payload.at("standardizer").is_null()) {
      Standardizer s;
      s.mean = vector_from_json(payload.at("standardizer").at("mean"));
      s.scale = vector_from_json(payload.at("standardizer").at("scale"));
      model.standardizer = std::move(s);
    }
    for (const json& jc : payload.at("classifiers"))
      model.classifiers.push_back(classifier_from_json(jc));
    return model;
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' has missing or malformed fields: " +
                    e.what());
  }
}

}  // namespace hdk
