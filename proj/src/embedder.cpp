#include "rlc/embedder.hpp"

#include <httplib.h>
#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc {

using nlohmann::json;

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_interval(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

HashedEmbedder::HashedEmbedder(int dim, double neighbor_weight)
    : dim_(dim), neighbor_weight_(neighbor_weight) {
  if (dim_ < 2) throw Error("embedder dimension must be at least 2");
}

Eigen::VectorXd HashedEmbedder::token_direction(const std::string& token) const {
  uint64_t state = fnv1a64(token);
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = 2.0 * unit_interval(splitmix64(state)) - 1.0;
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

Eigen::MatrixXd HashedEmbedder::embed(const std::vector<std::string>& tokens) {
  const auto n = static_cast<Eigen::Index>(tokens.size());
  Eigen::MatrixXd base(n, dim_);
  for (Eigen::Index i = 0; i < n; ++i) base.row(i) = token_direction(tokens[static_cast<size_t>(i)]);

  const Eigen::VectorXd left_edge = token_direction("<s>");
  const Eigen::VectorXd right_edge = token_direction("</s>");
  Eigen::MatrixXd out(n, dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = base.row(i);
    v += neighbor_weight_ * (i > 0 ? base.row(i - 1).transpose() : left_edge);
    v += neighbor_weight_ * (i + 1 < n ? base.row(i + 1).transpose() : right_edge);
    out.row(i) = v / v.norm();
  }
  return out;
}

std::string HashedEmbedder::identity() const {
  return "hashed-embed(dim=" + std::to_string(dim_) + ")";
}

struct RemoteEmbedder::Impl {
  explicit Impl(const std::string& url) : client(url.c_str()) {}
  httplib::Client client;
};

RemoteEmbedder::RemoteEmbedder(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), impl_(std::make_unique<Impl>(base_url_)) {
  if (base_url_.empty()) throw Error("remote embedder needs a base url");
  impl_->client.set_connection_timeout(timeout_seconds, 0);
  impl_->client.set_read_timeout(timeout_seconds, 0);
  impl_->client.set_write_timeout(timeout_seconds, 0);
}

RemoteEmbedder::~RemoteEmbedder() = default;
RemoteEmbedder::RemoteEmbedder(RemoteEmbedder&&) noexcept = default;
RemoteEmbedder& RemoteEmbedder::operator=(RemoteEmbedder&&) noexcept = default;

Eigen::MatrixXd RemoteEmbedder::embed(const std::vector<std::string>& tokens) {
  json req;
  req["tokens"] = tokens;
  httplib::Result res = impl_->client.Post("/v1/embed", req.dump(), "application/json");
  if (!res)
    throw TransportError("cannot reach " + base_url_ + "/v1/embed: " +
                         httplib::to_string(res.error()));
  if (res->status == 404)
    throw CapabilityError("backend " + base_url_ + " does not support /v1/embed");
  if (res->status < 200 || res->status >= 300)
    throw TransportError("backend " + base_url_ + "/v1/embed returned status " +
                         std::to_string(res->status));

  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid /v1/embed response: " + std::string(e.what()));
  }
  if (!body.contains("vectors") || !body["vectors"].is_array() ||
      body["vectors"].size() != tokens.size())
    throw ParseError("/v1/embed response must carry one vector per token");

  Eigen::MatrixXd out;
  Eigen::Index row = 0;
  for (const auto& vec : body["vectors"]) {
    if (!vec.is_array() || vec.empty()) throw ParseError("/v1/embed vectors must be non-empty arrays");
    if (row == 0) out.resize(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(vec.size()));
    if (static_cast<Eigen::Index>(vec.size()) != out.cols())
      throw ParseError("/v1/embed vectors have inconsistent dimensions");
    Eigen::Index col = 0;
    for (const auto& x : vec) {
      if (!x.is_number()) throw ParseError("/v1/embed vectors must contain numbers");
      out(row, col++) = x.get<double>();
    }
    const double norm = out.row(row).norm();
    if (norm > 0.0) out.row(row) /= norm;  // cosine geometry expects unit rows
    ++row;
  }
  return out;
}

std::string RemoteEmbedder::identity() const { return "remote-embed(" + base_url_ + ")"; }

}  // namespace rlc
